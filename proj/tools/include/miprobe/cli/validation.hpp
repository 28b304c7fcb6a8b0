#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "miprobe/cli/report.hpp"

namespace miprobe::cli {

struct ValidationOptions {
  bool quick = false;  // N / 10 and 0.15-bit tolerances
  std::uint64_t seed = 0;
};

nlohmann::json to_json(const ValidationOptions& options);
ValidationOptions validation_options_from_json(const nlohmann::json& j);

struct CheckResult {
  int id = 0;
  std::string name;
  bool passed = false;
  nlohmann::json observed = nlohmann::json::object();
  double seconds = 0.0;  // reported under timing only
};

/// Scale and tolerances derived from the options.
struct ValidationScale {
  std::size_t frames;       // N_fit = N_eval
  double lower_tolerance;   // below the exact value
  double upper_tolerance;   // above the exact value
  double null_tolerance;
  double bound_slack;

  static ValidationScale from(const ValidationOptions& options);
};

CheckResult check_exact_mi();
CheckResult check_supervised_recovery(const ValidationOptions& o, std::size_t threads);
/// 5-seed MLP estimate on identical 5-symbol view streams with k = 5.
MIEstimate unsupervised_identity_estimate(const ValidationOptions& o, std::size_t threads);
CheckResult check_unsupervised_recovery(const ValidationOptions& o, const MIEstimate& estimate);
CheckResult check_independence_null(const ValidationOptions& o, std::size_t threads);
CheckResult check_bound_property(const ValidationOptions& o, std::size_t threads);
CheckResult check_monotone_ordering(const ValidationOptions& o, std::size_t threads);
CheckResult check_seed_variance(const MIEstimate& estimate);
CheckResult check_mask_constants();
CheckResult check_gradients(const ValidationOptions& o);
CheckResult check_kmeans(const ValidationOptions& o);
CheckResult check_layer_scan(const ValidationOptions& o, std::size_t threads);
CheckResult check_replay(const ValidationOptions& o, std::size_t threads);
CheckResult check_round_trip(const ValidationOptions& o);

/// Runs every check in id order. summary.all_passed is false if any fails.
RunReport cmd_synth_validate(const ValidationOptions& options, std::size_t threads);

/// "PASS 3 unsupervised_recovery ..." per check.
std::string format_check_line(const CheckResult& check);

}  // namespace miprobe::cli
