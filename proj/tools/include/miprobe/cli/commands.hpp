#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "miprobe/cli/report.hpp"

namespace miprobe::cli {

/// Exit statuses shared by every subcommand.
enum ExitCode : int { kExitOk = 0, kExitValidationFailure = 1, kExitDataError = 2 };

/// I(Z;Y) lower bound per requested probe kind on `options.layer`, fit on
/// records tagged fit and estimated on records tagged eval.
RunReport cmd_probe_supervised(RunOptions options, std::size_t threads);

/// I(Za;Zb) lower bound per probe kind; modes.front() selects shift or mask views.
RunReport cmd_probe_unsupervised(RunOptions options, std::size_t threads);

/// Writes <out_dir>/<utt_id>.mask for every record; returns the paths in
/// sorted utt_id order.
std::vector<std::filesystem::path> cmd_emit_mask(const std::filesystem::path& manifest,
                                                 std::size_t period, std::size_t masked_per_period,
                                                 const std::filesystem::path& out_dir);

/// One estimate per layer per metric (per probe kind), plus the argmax layer
/// of each metric in the summary.
RunReport cmd_layer_scan(RunOptions options, std::size_t threads);

/// One estimate per checkpoint manifest, each bisected by sorted utt_id.
RunReport cmd_checkpoint_scan(RunOptions options, std::size_t threads);

/// Re-runs a command from its serialized config.
RunReport run_command(const std::string& command, const nlohmann::json& config, std::size_t threads);

struct ReplayResult {
  bool identical = false;
  std::string recorded;  // canonical text
  std::string replayed;  // canonical text
};

/// Replays the report at `path` and compares canonical texts byte for byte.
ReplayResult cmd_replay(const std::filesystem::path& path, std::size_t threads);

}  // namespace miprobe::cli
