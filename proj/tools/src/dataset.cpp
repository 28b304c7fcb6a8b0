#include "miprobe/cli/dataset.hpp"

#include <algorithm>
#include <iterator>
#include <set>

namespace miprobe::cli {

namespace {

const std::filesystem::path& dump_path(const UtteranceRecord& rec, int layer, ViewTag view) {
  const auto it = rec.feature_paths.find({layer, view});
  if (it == rec.feature_paths.end()) {
    throw DataError("utterance " + rec.utt_id + ": missing " + to_string(view) +
                    " dump for layer " + std::to_string(layer));
  }
  return it->second;
}

}  // namespace

std::vector<const UtteranceRecord*> sorted_records(const DatasetManifest& manifest) {
  std::vector<const UtteranceRecord*> out;
  for (const auto& r : manifest.records) out.push_back(&r);
  std::sort(out.begin(), out.end(),
            [](const auto* a, const auto* b) { return a->utt_id < b->utt_id; });
  return out;
}

SplitRecords split_by_tag(const DatasetManifest& manifest) {
  SplitRecords out;
  for (const auto* r : sorted_records(manifest)) {
    (r->split == Split::kFit ? out.fit : out.eval).push_back(r);
  }
  if (out.fit.empty()) throw DataError("manifest has no fit records");
  if (out.eval.empty()) throw DataError("manifest has no eval records");
  return out;
}

SplitRecords split_in_half(const DatasetManifest& manifest) {
  const auto all = sorted_records(manifest);
  if (all.size() < 2) {
    throw DataError("half split needs at least 2 utterances, manifest has " + std::to_string(all.size()));
  }
  const std::size_t n_fit = (all.size() + 1) / 2;
  SplitRecords out;
  out.fit.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_fit));
  out.eval.assign(all.begin() + static_cast<std::ptrdiff_t>(n_fit), all.end());
  return out;
}

void require_valid(const DatasetManifest& manifest) {
  auto report = validate_manifest(manifest);
  if (!report.empty()) throw ManifestInvalid(std::move(report));
}

ManifestInvalid::ManifestInvalid(ValidationReport violations)
    : DataError([&] {
        std::string message = "manifest validation failed:";
        for (const auto& v : violations) {
          message += "\n  " + (v.utt_id.empty() ? std::string("<manifest>") : v.utt_id) + ": " + v.message;
        }
        return message;
      }()),
      violations_(std::move(violations)) {}

LabeledFrames load_labeled(const DatasetManifest& manifest,
                           const std::vector<const UtteranceRecord*>& records, int layer) {
  std::vector<std::pair<FeatureMatrix, FrameLabels>> utterances;
  utterances.reserve(records.size());
  for (const auto* rec : records) {
    if (!rec->label_path) throw DataError("utterance " + rec->utt_id + ": no label_path");
    auto features = load_feature_matrix(manifest.resolve(dump_path(*rec, layer, ViewTag::kPlain)));
    auto labels = load_labels(manifest.resolve(*rec->label_path));
    if (labels.size() != features.frames()) {
      throw DataError("utterance " + rec->utt_id + ": " + std::to_string(labels.size()) +
                      " labels for T=" + std::to_string(features.frames()));
    }
    utterances.emplace_back(std::move(features), std::move(labels));
  }
  return pool_labeled(utterances);
}

PairedFrames load_shift_pairs(const DatasetManifest& manifest,
                              const std::vector<const UtteranceRecord*>& records, int layer,
                              std::size_t shift_frames) {
  std::vector<PairedFrames> utterances;
  for (const auto* rec : records) {
    const auto features = load_feature_matrix(manifest.resolve(dump_path(*rec, layer, ViewTag::kPlain)));
    if (features.frames() <= shift_frames) continue;  // nothing pairable in this utterance
    const auto pairing = time_shift_pairing(features.frames(), shift_frames);
    auto [za, zb] = gather_pairs(features.values(), features.values(), pairing);
    utterances.push_back({std::move(za), std::move(zb)});
  }
  return pool_pairs(utterances);
}

MaskedPairs load_mask_pairs(const DatasetManifest& manifest,
                            const std::vector<const UtteranceRecord*>& records, int layer,
                            std::size_t period, std::size_t masked_per_period,
                            MaskPositions positions) {
  MaskedPairs out;
  std::vector<PairedFrames> utterances;
  for (const auto* rec : records) {
    const auto masked = load_feature_matrix(manifest.resolve(dump_path(*rec, layer, ViewTag::kMasked)));
    const auto unmasked = load_feature_matrix(manifest.resolve(dump_path(*rec, layer, ViewTag::kUnmasked)));
    if (masked.frames() != unmasked.frames()) {
      throw DataError("utterance " + rec->utt_id + ": masked dump has T=" +
                      std::to_string(masked.frames()) + " but unmasked dump has T=" +
                      std::to_string(unmasked.frames()));
    }
    const auto spec = block_mask_spec(masked.frames(), period, masked_per_period);
    out.masked_frames += spec.masked_count();
    out.total_frames += spec.frames();
    if (positions == MaskPositions::kMaskedOnly && spec.masked_count() == 0) continue;
    auto [za, zb] = gather_pairs(masked.values(), unmasked.values(), masked_pairing(spec, positions));
    utterances.push_back({std::move(za), std::move(zb)});
  }
  out.pairs = pool_pairs(utterances);
  return out;
}

std::vector<int> common_layers(const DatasetManifest& manifest, ViewTag view) {
  std::set<int> common;
  bool first = true;
  for (const auto& rec : manifest.records) {
    std::set<int> layers;
    for (const auto& [key, path] : rec.feature_paths) {
      if (key.view == view) layers.insert(key.layer);
    }
    if (first) {
      common = std::move(layers);
      first = false;
    } else {
      std::set<int> both;
      std::set_intersection(common.begin(), common.end(), layers.begin(), layers.end(),
                            std::inserter(both, both.begin()));
      common = std::move(both);
    }
  }
  return {common.begin(), common.end()};
}

}  // namespace miprobe::cli
