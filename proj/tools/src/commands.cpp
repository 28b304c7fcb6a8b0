#include "miprobe/cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "miprobe/cli/dataset.hpp"
#include "miprobe/cli/validation.hpp"
#include "miprobe/parallel.hpp"

namespace miprobe::cli {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void require_probes(RunOptions& o) {
  if (o.probes.empty()) throw std::invalid_argument("at least one --probe kind is required");
  if (o.seeds.empty()) throw std::invalid_argument("at least one seed is required");
  o.probe.check();
}

DatasetManifest load_valid_manifest(const fs::path& path) {
  auto manifest = load_manifest(path);
  require_valid(manifest);
  return manifest;
}

ViewTag view_for(Mode mode) { return mode == Mode::kMask ? ViewTag::kMasked : ViewTag::kPlain; }

int default_layer(const DatasetManifest& manifest, Mode mode) {
  const auto layers = common_layers(manifest, view_for(mode));
  if (layers.empty()) {
    throw DataError("no layer has a " + to_string(view_for(mode)) + " dump for every utterance");
  }
  return layers.back();
}

ProbeConfig config_for(const RunOptions& o, ProbeKind kind, std::uint64_t seed) {
  ProbeConfig cfg = o.probe;
  cfg.kind = kind;
  cfg.seed = seed;
  return cfg;
}

struct MetricResult {
  std::vector<MIEstimate> per_probe;  // parallel to RunOptions::probes
  nlohmann::json details = nlohmann::json::object();
};

/// Loads the views `mode` needs for one layer and estimates every probe kind.
MetricResult estimate_metric(const DatasetManifest& manifest, const SplitRecords& split, int layer,
                             Mode mode, const RunOptions& o, std::size_t threads) {
  MetricResult out;
  if (mode == Mode::kSupervised) {
    const auto fit = load_labeled(manifest, split.fit, layer);
    const auto eval = load_labeled(manifest, split.eval, layer);
    for (auto kind : o.probes) {
      out.per_probe.push_back(run_seeded(
          [&](std::uint64_t seed) { return supervised_lower_bound(fit, eval, config_for(o, kind, seed)); },
          o.seeds, threads));
    }
    return out;
  }

  PairedFrames fit;
  PairedFrames eval;
  if (mode == Mode::kShift) {
    fit = load_shift_pairs(manifest, split.fit, layer, o.shift_frames);
    eval = load_shift_pairs(manifest, split.eval, layer, o.shift_frames);
    out.details["shift_frames"] = o.shift_frames;
  } else {
    auto fit_masked = load_mask_pairs(manifest, split.fit, layer, o.mask_period, o.mask_frames, o.positions);
    auto eval_masked = load_mask_pairs(manifest, split.eval, layer, o.mask_period, o.mask_frames, o.positions);
    const auto masked = fit_masked.masked_frames + eval_masked.masked_frames;
    const auto total = fit_masked.total_frames + eval_masked.total_frames;
    out.details["mask_ratio"] = total == 0 ? 0.0 : static_cast<double>(masked) / static_cast<double>(total);
    out.details["mask_period"] = o.mask_period;
    out.details["mask_frames"] = o.mask_frames;
    out.details["positions"] = o.positions == MaskPositions::kAllFrames ? "all" : "masked";
    fit = std::move(fit_masked.pairs);
    eval = std::move(eval_masked.pairs);
  }
  const ClusterConfig cluster{o.k, o.kmeans_max_iter};
  for (auto kind : o.probes) {
    out.per_probe.push_back(run_seeded(
        [&](std::uint64_t seed) { return unsupervised_lower_bound(fit, eval, cluster, config_for(o, kind, seed)); },
        o.seeds, threads));
  }
  return out;
}

/// Per (metric, probe): the row index with the highest value; ties keep the first.
nlohmann::json argmax_summary(const std::vector<ReportRow>& rows, bool by_layer) {
  std::map<std::pair<std::string, std::string>, const ReportRow*> best;
  for (const auto& r : rows) {
    const auto key = std::make_pair(r.metric, to_string(r.estimate.probe_kind));
    auto [it, inserted] = best.emplace(key, &r);
    if (!inserted && r.estimate.value_bits > it->second->estimate.value_bits) it->second = &r;
  }
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [key, row] : best) {
    nlohmann::json entry = {{"metric", key.first}, {"probe", key.second}, {"value_bits", row->estimate.value_bits}};
    if (by_layer) {
      entry["layer"] = *row->layer;
    } else {
      entry["checkpoint"] = *row->checkpoint;
      if (row->step) entry["step"] = *row->step;
    }
    out.push_back(std::move(entry));
  }
  return out;
}

RunReport probe_command(const std::string& name, RunOptions o, std::size_t threads, Mode mode) {
  const auto start = Clock::now();
  o.normalize();
  require_probes(o);
  if (o.manifests.size() != 1) throw std::invalid_argument(name + ": exactly one --manifest is required");
  const auto manifest = load_valid_manifest(o.manifests.front());
  const int layer = o.layer ? *o.layer : default_layer(manifest, mode);
  o.modes = {mode};

  auto result = estimate_metric(manifest, split_by_tag(manifest), layer, mode, o, threads);
  RunReport report;
  report.command = name;
  report.config = to_json(o);
  for (auto& est : result.per_probe) report.rows.push_back({to_string(mode), layer, {}, {}, std::move(est)});
  report.summary = result.details;
  report.summary["layer"] = layer;
  report.summary["mode"] = to_string(mode);
  report.wall_clock_seconds = seconds_since(start);
  return report;
}

}  // namespace

RunReport cmd_probe_supervised(RunOptions options, std::size_t threads) {
  return probe_command("probe-supervised", std::move(options), threads, Mode::kSupervised);
}

RunReport cmd_probe_unsupervised(RunOptions options, std::size_t threads) {
  Mode mode = Mode::kShift;
  if (!options.modes.empty()) mode = options.modes.front();
  if (mode == Mode::kSupervised) {
    throw std::invalid_argument("probe-unsupervised: --mode must be shift or mask");
  }
  return probe_command("probe-unsupervised", std::move(options), threads, mode);
}

std::vector<fs::path> cmd_emit_mask(const fs::path& manifest_path, std::size_t period,
                                    std::size_t masked_per_period, const fs::path& out_dir) {
  // Validate the rule before touching the filesystem.
  block_mask_spec(1, period, masked_per_period);
  const auto manifest = load_valid_manifest(manifest_path);
  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  for (const auto* rec : sorted_records(manifest)) {
    if (rec->feature_paths.empty()) throw DataError("utterance " + rec->utt_id + ": no feature dumps");
    const auto frames = load_feature_matrix(manifest.resolve(rec->feature_paths.begin()->second)).frames();
    const auto path = out_dir / (rec->utt_id + ".mask");
    store_mask_spec(block_mask_spec(frames, period, masked_per_period), path);
    written.push_back(path);
  }
  return written;
}

RunReport cmd_layer_scan(RunOptions o, std::size_t threads) {
  const auto start = Clock::now();
  o.normalize();
  require_probes(o);
  if (o.manifests.size() != 1) throw std::invalid_argument("layer-scan: exactly one --manifest is required");
  if (o.modes.empty()) o.modes = {Mode::kSupervised, Mode::kShift};
  const auto manifest = load_valid_manifest(o.manifests.front());
  if (o.layers.empty()) {
    std::set<int> all;
    for (auto mode : o.modes) {
      const auto layers = common_layers(manifest, view_for(mode));
      all.insert(layers.begin(), layers.end());
    }
    o.layers.assign(all.begin(), all.end());
    if (o.layers.empty()) throw DataError("layer-scan: no layer has dumps for every utterance");
  }
  const auto split = split_by_tag(manifest);

  struct Item {
    int layer;
    Mode mode;
  };
  std::vector<Item> items;
  for (int layer : o.layers) {
    for (auto mode : o.modes) items.push_back({layer, mode});
  }
  std::vector<MetricResult> results(items.size());
  const std::size_t outer = std::min(threads, items.size());
  const std::size_t inner = std::max<std::size_t>(1, threads / std::max<std::size_t>(outer, 1));
  parallel_for(items.size(), outer, [&](std::size_t i) {
    results[i] = estimate_metric(manifest, split, items[i].layer, items[i].mode, o, inner);
  });

  RunReport report;
  report.command = "layer-scan";
  report.config = to_json(o);
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (auto& est : results[i].per_probe) {
      report.rows.push_back({to_string(items[i].mode), items[i].layer, {}, {}, std::move(est)});
    }
    if (!results[i].details.empty()) report.summary["view_details"][to_string(items[i].mode)] = results[i].details;
  }
  report.summary["argmax"] = argmax_summary(report.rows, true);
  report.wall_clock_seconds = seconds_since(start);
  return report;
}

RunReport cmd_checkpoint_scan(RunOptions o, std::size_t threads) {
  const auto start = Clock::now();
  o.normalize();
  require_probes(o);
  if (o.manifests.empty()) throw std::invalid_argument("checkpoint-scan: at least one --manifest is required");
  if (o.modes.empty()) o.modes = {Mode::kMask};
  if (!o.steps.empty() && o.steps.size() != o.manifests.size()) {
    throw std::invalid_argument("checkpoint-scan: --steps must list one value per manifest");
  }
  if (o.baseline && *o.baseline >= o.manifests.size()) {
    throw std::invalid_argument("checkpoint-scan: --baseline index out of range");
  }

  struct Item {
    std::size_t checkpoint;
    Mode mode;
  };
  std::vector<DatasetManifest> manifests;
  std::vector<int> layers;
  for (const auto& path : o.manifests) {
    manifests.push_back(load_valid_manifest(path));
    split_in_half(manifests.back());  // rejects single-utterance manifests up front
    layers.push_back(o.layer ? *o.layer : default_layer(manifests.back(), o.modes.front()));
  }
  std::vector<Item> items;
  for (std::size_t c = 0; c < manifests.size(); ++c) {
    for (auto mode : o.modes) items.push_back({c, mode});
  }
  std::vector<MetricResult> results(items.size());
  const std::size_t outer = std::min(threads, items.size());
  const std::size_t inner = std::max<std::size_t>(1, threads / std::max<std::size_t>(outer, 1));
  parallel_for(items.size(), outer, [&](std::size_t i) {
    const auto c = items[i].checkpoint;
    results[i] = estimate_metric(manifests[c], split_in_half(manifests[c]), layers[c], items[i].mode, o, inner);
  });

  RunReport report;
  report.command = "checkpoint-scan";
  report.config = to_json(o);
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto c = items[i].checkpoint;
    const std::optional<double> step = o.steps.empty() ? std::optional<double>(static_cast<double>(c))
                                                       : std::optional<double>(o.steps[c]);
    for (auto& est : results[i].per_probe) {
      report.rows.push_back({to_string(items[i].mode), layers[c], c, step, std::move(est)});
    }
  }
  report.summary["split"] = "sorted utt_id, first ceil(n/2) fit";
  report.summary["argmax"] = argmax_summary(report.rows, false);
  if (o.baseline) {
    nlohmann::json deltas = nlohmann::json::array();
    for (const auto& row : report.rows) {
      const auto base = std::find_if(report.rows.begin(), report.rows.end(), [&](const ReportRow& r) {
        return r.checkpoint == o.baseline && r.metric == row.metric &&
               r.estimate.probe_kind == row.estimate.probe_kind;
      });
      deltas.push_back({{"checkpoint", *row.checkpoint},
                        {"metric", row.metric},
                        {"probe", to_string(row.estimate.probe_kind)},
                        {"delta_bits", row.estimate.value_bits - base->estimate.value_bits}});
    }
    report.summary["baseline"] = *o.baseline;
    report.summary["delta_vs_baseline"] = deltas;
  }
  report.wall_clock_seconds = seconds_since(start);
  return report;
}

RunReport run_command(const std::string& command, const nlohmann::json& config, std::size_t threads) {
  if (command == "synth-validate") return cmd_synth_validate(validation_options_from_json(config), threads);
  const auto options = run_options_from_json(config);
  if (command == "probe-supervised") return cmd_probe_supervised(options, threads);
  if (command == "probe-unsupervised") return cmd_probe_unsupervised(options, threads);
  if (command == "layer-scan") return cmd_layer_scan(options, threads);
  if (command == "checkpoint-scan") return cmd_checkpoint_scan(options, threads);
  throw std::invalid_argument("cannot replay command '" + command + "'");
}

ReplayResult cmd_replay(const fs::path& path, std::size_t threads) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  nlohmann::json recorded;
  try {
    recorded = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": malformed report: " + e.what());
  }
  const auto replayed = run_command(recorded.at("command").get<std::string>(), recorded.at("config"), threads);
  ReplayResult result;
  result.recorded = canonical_text(recorded);
  result.replayed = canonical_text(replayed);
  result.identical = result.recorded == result.replayed;
  return result;
}

}  // namespace miprobe::cli
