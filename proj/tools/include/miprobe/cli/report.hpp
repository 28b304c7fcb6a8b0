#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "miprobe/mi.hpp"
#include "miprobe/views.hpp"

namespace miprobe::cli {

inline constexpr const char* kToolkitVersion = "0.1.0";

enum class Mode { kSupervised, kShift, kMask };

std::string to_string(Mode mode);
Mode parse_mode(const std::string& text);

/// Everything a command needs to reproduce its result. Serialized into every
/// report; thread count is deliberately absent since results do not depend on it.
struct RunOptions {
  std::vector<std::filesystem::path> manifests;  // absolute after normalize()
  std::optional<int> layer;
  std::vector<int> layers;
  std::vector<Mode> modes;
  std::size_t shift_frames = 3;
  std::size_t mask_period = 40;
  std::size_t mask_frames = 30;
  MaskPositions positions = MaskPositions::kMaskedOnly;
  std::size_t k = 50;
  std::size_t kmeans_max_iter = 100;
  std::vector<ProbeKind> probes;
  ProbeConfig probe;  // kind and seed are overridden per run
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::optional<std::size_t> baseline;  // checkpoint index to difference against
  std::vector<double> steps;            // checkpoint x-axis labels

  /// Makes manifest paths absolute so replays work from any directory.
  void normalize();
};

nlohmann::json to_json(const RunOptions& options);
RunOptions run_options_from_json(const nlohmann::json& j);

/// One estimate with its position in a curve (layer and/or checkpoint).
struct ReportRow {
  std::string metric;  // "supervised", "shift" or "mask"
  std::optional<int> layer;
  std::optional<std::size_t> checkpoint;
  std::optional<double> step;
  MIEstimate estimate;
};

struct RunReport {
  std::string command;
  nlohmann::json config;   // RunOptions, or command-specific settings
  std::vector<ReportRow> rows;
  nlohmann::json summary = nlohmann::json::object();
  double wall_clock_seconds = 0.0;
  nlohmann::json timing_detail = nlohmann::json::object();  // excluded from canonical text
  std::string toolkit_version = kToolkitVersion;
};

/// Full record. Wall-clock time sits under "timing"; the canonical form
/// omits it so identical runs serialize byte-identically.
nlohmann::json to_json(const RunReport& report, bool include_timing = true);
std::string canonical_text(const RunReport& report);
std::string canonical_text(nlohmann::json report_json);

/// Plot-ready curve: step,layer,metric,probe,value_bits,variance,...
std::string to_csv(const RunReport& report);

/// Writes `<out>` (JSON) and `<out>` with extension .csv.
void write_report(const RunReport& report, const std::filesystem::path& out);

}  // namespace miprobe::cli
