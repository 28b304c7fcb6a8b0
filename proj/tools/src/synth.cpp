#include "miprobe/cli/synth.hpp"

#include <cstdio>
#include <stdexcept>
#include <vector>

#include "miprobe/datamodel.hpp"
#include "miprobe/oracle.hpp"
#include "miprobe/rng.hpp"

namespace miprobe::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSymbolStream = 0x53594D;
constexpr std::uint64_t kChannelStream = 0x43484E;

std::vector<std::int32_t> symbol_stream(const SynthOptions& o, std::size_t utt) {
  Rng rng(o.seed, kSymbolStream + utt);
  std::vector<std::int32_t> out(o.frames);
  for (std::size_t t = 0; t < o.frames; ++t) {
    if (t > 0 && rng.uniform() < o.persistence) {
      out[t] = out[t - 1];
    } else {
      out[t] = static_cast<std::int32_t>(rng.below(o.symbols));
    }
  }
  return out;
}

/// Copies each symbol with probability `fidelity`, otherwise redraws it uniformly.
std::vector<std::int32_t> through_channel(const SynthOptions& o, const std::vector<std::int32_t>& in,
                                          std::size_t utt) {
  Rng rng(o.seed, kChannelStream + utt);
  std::vector<std::int32_t> out(in.size());
  for (std::size_t t = 0; t < in.size(); ++t) {
    const bool copy = rng.uniform() < o.fidelity;
    const auto redraw = static_cast<std::int32_t>(rng.below(o.symbols));
    out[t] = copy ? in[t] : redraw;
  }
  return out;
}

}  // namespace

std::string to_string(SynthKind kind) {
  switch (kind) {
    case SynthKind::kLabeled: return "labeled";
    case SynthKind::kShift: return "shift";
    case SynthKind::kMask: return "mask";
    case SynthKind::kLayers: return "layers";
  }
  return "?";
}

SynthKind parse_synth_kind(const std::string& text) {
  if (text == "labeled") return SynthKind::kLabeled;
  if (text == "shift") return SynthKind::kShift;
  if (text == "mask") return SynthKind::kMask;
  if (text == "layers") return SynthKind::kLayers;
  throw std::invalid_argument("unknown synthetic kind '" + text + "' (expected labeled, shift, mask or layers)");
}

fs::path export_synthetic(const SynthOptions& o, const fs::path& dir) {
  if (o.utterances < 2 || o.frames == 0 || o.symbols < 2 || o.dim == 0) {
    throw std::invalid_argument("synthetic export needs >= 2 utterances, >= 1 frame, >= 2 symbols, dim >= 1");
  }
  if (o.fidelity < 0.0 || o.fidelity > 1.0) throw std::invalid_argument("fidelity must lie in [0, 1]");
  fs::create_directories(dir);
  const auto embed = EmbeddingSpec::separable(o.symbols, o.dim, o.seed);
  const std::vector<std::int32_t> constant(o.frames, 0);

  DatasetManifest manifest;
  manifest.base_dir = dir;
  for (std::size_t u = 0; u < o.utterances; ++u) {
    char name[32];
    std::snprintf(name, sizeof(name), "utt%04zu", u);
    UtteranceRecord rec;
    rec.utt_id = name;
    rec.split = u < (o.utterances + 1) / 2 ? Split::kFit : Split::kEval;

    auto dump = [&](int layer, ViewTag view, const std::vector<std::int32_t>& symbols, std::uint64_t stream) {
      const std::string file = rec.utt_id + ".l" + std::to_string(layer) + "." + to_string(view) + ".fmat";
      store_feature_matrix(FeatureMatrix(embed_symbols(embed, symbols, o.seed, stream)), dir / file);
      rec.feature_paths[{layer, view}] = file;
    };
    const std::uint64_t base = 16 * static_cast<std::uint64_t>(u);

    std::vector<std::int32_t> labels;
    switch (o.kind) {
      case SynthKind::kLabeled: {
        // Labels are i.i.d. per frame; the features see them through the channel.
        SynthOptions iid = o;
        iid.persistence = 0.0;
        labels = symbol_stream(iid, u);
        dump(1, ViewTag::kPlain, through_channel(o, labels, u), base);
        break;
      }
      case SynthKind::kShift:
        labels = symbol_stream(o, u);
        dump(1, ViewTag::kPlain, labels, base);
        break;
      case SynthKind::kMask: {
        labels = symbol_stream(o, u);
        dump(1, ViewTag::kPlain, labels, base);
        dump(1, ViewTag::kUnmasked, labels, base + 1);
        dump(1, ViewTag::kMasked, through_channel(o, labels, u), base + 2);
        break;
      }
      case SynthKind::kLayers:
        labels = symbol_stream(o, u);
        dump(1, ViewTag::kPlain, constant, base);
        dump(2, ViewTag::kPlain, labels, base + 1);
        dump(3, ViewTag::kPlain, constant, base + 2);
        break;
    }
    const std::string label_file = rec.utt_id + ".labels";
    store_labels(FrameLabels{labels, static_cast<int>(o.symbols)}, dir / label_file);
    rec.label_path = label_file;
    manifest.records.push_back(std::move(rec));
  }
  const auto path = dir / "manifest.json";
  store_manifest(manifest, path);
  return path;
}

}  // namespace miprobe::cli
