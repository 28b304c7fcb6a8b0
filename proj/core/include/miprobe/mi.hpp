#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "miprobe/datamodel.hpp"
#include "miprobe/probe.hpp"

namespace miprobe {

enum class BoundKind { kSupervised, kUnsupervised };

std::string to_string(BoundKind kind);

/// A lower bound on mutual information, in bits. For a single run
/// value = entropy_term - cross_entropy; for a seed aggregate every term is
/// the mean over seeds. Values are never clamped at zero.
struct MIEstimate {
  BoundKind kind = BoundKind::kSupervised;
  ProbeKind probe_kind = ProbeKind::kLogistic;
  double value_bits = 0.0;
  double entropy_term_bits = 0.0;
  double cross_entropy_bits = 0.0;
  std::vector<double> per_seed_values_bits;
  std::vector<std::uint64_t> seeds;
  double seed_variance = 0.0;  // population variance of per_seed_values_bits
  std::size_t n_fit_frames = 0;
  std::size_t n_eval_frames = 0;
  std::size_t num_classes = 0;  // label support, or k for the unsupervised bound
  std::size_t kmeans_max_iter = 0;
  ProbeConfig config;

  bool negative() const { return value_bits < 0.0; }
};

/// -sum (n_c / N) log2(n_c / N) over classes present. Throws on N = 0 or an
/// id outside [0, num_classes).
double empirical_entropy_bits(std::span<const std::int32_t> ids, std::size_t num_classes);

/// Frames from many utterances stacked in order.
struct LabeledFrames {
  Matrix features;
  std::vector<std::int32_t> labels;
  std::size_t num_classes = 0;

  std::size_t size() const { return labels.size(); }
};

/// Frame-aligned view pairs (row i of za pairs with row i of zb).
struct PairedFrames {
  Matrix za;
  Matrix zb;

  std::size_t size() const { return static_cast<std::size_t>(za.rows()); }
};

/// Stacks per-utterance (features, labels). Lengths must match per utterance
/// and num_classes must agree across utterances.
LabeledFrames pool_labeled(std::span<const std::pair<FeatureMatrix, FrameLabels>> utterances);
PairedFrames pool_pairs(std::span<const PairedFrames> utterances);

/// H(Y) on eval labels minus the eval cross-entropy of a probe trained on fit.
MIEstimate supervised_lower_bound(const LabeledFrames& fit, const LabeledFrames& eval,
                                  const ProbeConfig& cfg);

struct ClusterConfig {
  std::size_t k = 50;
  std::size_t max_iter = 100;
};

/// Quantizes Zb with k-means fitted on the fit split, trains q(cluster | Za)
/// on the fit split, and returns H(cluster(eval Zb)) minus the eval
/// cross-entropy. k = 1 yields exactly 0. The k-means seed is cfg.seed.
MIEstimate unsupervised_lower_bound(const PairedFrames& fit, const PairedFrames& eval,
                                    const ClusterConfig& cluster, const ProbeConfig& cfg);

/// Runs `estimate(seed)` per seed (in parallel, up to `threads`) and folds
/// the results in seed order.
MIEstimate run_seeded(const std::function<MIEstimate(std::uint64_t)>& estimate,
                      std::span<const std::uint64_t> seeds, std::size_t threads = 1);

/// Mean/variance fold over completed single-seed results.
MIEstimate aggregate(std::span<const MIEstimate> runs);

inline constexpr std::uint64_t kDefaultSeeds[] = {0, 1, 2, 3, 4};

nlohmann::json to_json(const ProbeConfig& cfg);
ProbeConfig probe_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MIEstimate& estimate);

/// "kind,probe,value_bits,seed_variance,entropy_term_bits,cross_entropy_bits,n_fit_frames,n_eval_frames,num_classes,negative"
std::string csv_header();
std::string to_csv_row(const MIEstimate& estimate);

}  // namespace miprobe
