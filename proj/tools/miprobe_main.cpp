// miprobe: command-line front end for the mutual-information probing toolkit.

#include <cstdio>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "miprobe/cli/commands.hpp"
#include "miprobe/cli/dataset.hpp"
#include "miprobe/cli/synth.hpp"
#include "miprobe/cli/validation.hpp"
#include "miprobe/parallel.hpp"

namespace {

using namespace miprobe;
using namespace miprobe::cli;

template <typename T, typename Parse>
std::vector<T> split_list(const std::string& text, Parse parse) {
  std::vector<T> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(parse(item));
  }
  return out;
}

/// Flags shared by the estimation commands, bound into a RunOptions.
struct RunFlags {
  std::vector<std::string> manifests;
  std::optional<int> layer;
  std::string layers;
  std::string modes;
  std::string probes;
  std::string seeds = "0,1,2,3,4";
  std::string steps;
  std::string positions = "masked";
  std::optional<std::size_t> baseline;
  std::string out;
  RunOptions options;

  void bind(CLI::App* cmd, const std::string& default_probes, bool multi_manifest) {
    probes = default_probes;
    if (multi_manifest) {
      cmd->add_option("--manifest", manifests, "Dataset manifest (repeat once per checkpoint, in order)")->required();
    } else {
      cmd->add_option("--manifest", manifests, "Dataset manifest")->required()->expected(1);
    }
    cmd->add_option("--layer", layer, "Layer index (default: highest layer present everywhere)");
    cmd->add_option("--mode", modes, "supervised, shift or mask; comma-separated for scans");
    cmd->add_option("--shift-frames", options.shift_frames, "Time-shift offset in frames")->capture_default_str();
    cmd->add_option("--mask-period", options.mask_period, "Block mask period")->capture_default_str();
    cmd->add_option("--mask-frames", options.mask_frames, "Masked frames per period")->capture_default_str();
    cmd->add_option("--positions", positions, "Mask-view pairs: masked or all")
        ->check(CLI::IsMember({"masked", "all"}))
        ->capture_default_str();
    cmd->add_option("--k", options.k, "Clusters for the unsupervised bound")->capture_default_str();
    cmd->add_option("--probe", probes, "Probe kinds, comma-separated: logistic, mlp")->capture_default_str();
    cmd->add_option("--hidden", options.probe.hidden_dim, "MLP hidden width")->capture_default_str();
    cmd->add_option("--dropout", options.probe.dropout_rate, "MLP dropout rate")->capture_default_str();
    cmd->add_option("--lr", options.probe.learning_rate, "SGD learning rate")->capture_default_str();
    cmd->add_option("--epochs", options.probe.epochs, "Training epochs")->capture_default_str();
    cmd->add_option("--batch", options.probe.batch_size, "Minibatch size")->capture_default_str();
    cmd->add_option("--seeds", seeds, "Comma-separated probe seeds")->capture_default_str();
    cmd->add_option("--out", out, "Report path (JSON; a .csv is written alongside)")->required();
  }

  void bind_scan(CLI::App* cmd) {
    cmd->add_option("--layers", layers, "Comma-separated layers (default: all shared layers)");
  }

  void bind_checkpoints(CLI::App* cmd) {
    cmd->add_option("--baseline", baseline, "Checkpoint index to difference against");
    cmd->add_option("--steps", steps, "Comma-separated training steps, one per manifest");
  }

  RunOptions resolve() {
    for (const auto& m : manifests) options.manifests.emplace_back(m);
    options.layer = layer;
    options.layers = split_list<int>(layers, [](const std::string& s) { return std::stoi(s); });
    options.modes = split_list<Mode>(modes, parse_mode);
    options.probes = split_list<ProbeKind>(probes, parse_probe_kind);
    options.seeds = split_list<std::uint64_t>(seeds, [](const std::string& s) { return std::stoull(s); });
    options.steps = split_list<double>(steps, [](const std::string& s) { return std::stod(s); });
    options.positions = positions == "all" ? MaskPositions::kAllFrames : MaskPositions::kMaskedOnly;
    options.baseline = baseline;
    return options;
  }
};

int finish(const RunReport& report, const std::string& out) {
  write_report(report, out);
  std::cout << to_json(report).dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lower bounds on mutual information for learned representations"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolkitVersion));

  RunFlags sup, unsup, layer_scan, checkpoint_scan;
  auto* sup_cmd = app.add_subcommand("probe-supervised", "I(Z;Y) lower bound against frame labels");
  sup.bind(sup_cmd, "logistic,mlp", false);
  auto* unsup_cmd = app.add_subcommand("probe-unsupervised", "I(Za;Zb) lower bound between two views");
  unsup.bind(unsup_cmd, "logistic,mlp", false);
  auto* layer_cmd = app.add_subcommand("layer-scan", "Bounds for every layer");
  layer_scan.bind(layer_cmd, "mlp", false);
  layer_scan.bind_scan(layer_cmd);
  auto* ckpt_cmd = app.add_subcommand("checkpoint-scan", "Bounds across training checkpoints");
  checkpoint_scan.bind(ckpt_cmd, "mlp", true);
  checkpoint_scan.bind_checkpoints(ckpt_cmd);

  std::string mask_manifest, mask_out;
  std::size_t mask_period = 40, mask_frames = 30;
  auto* mask_cmd = app.add_subcommand("emit-mask", "Write the block mask of every utterance");
  mask_cmd->add_option("--manifest", mask_manifest, "Dataset manifest")->required();
  mask_cmd->add_option("--mask-period", mask_period, "Block mask period")->capture_default_str();
  mask_cmd->add_option("--mask-frames", mask_frames, "Masked frames per period")->capture_default_str();
  mask_cmd->add_option("--out", mask_out, "Output directory")->required();

  ValidationOptions validate;
  std::string validate_out;
  auto* validate_cmd = app.add_subcommand("synth-validate", "Run the synthetic oracle checks");
  validate_cmd->add_flag("--quick", validate.quick, "10x fewer frames, 0.15-bit tolerances");
  validate_cmd->add_option("--seed", validate.seed, "Data seed")->capture_default_str();
  validate_cmd->add_option("--out", validate_out, "Report path");

  SynthOptions synth;
  std::string synth_kind = "labeled", synth_out;
  auto* export_cmd = app.add_subcommand("synth-export", "Write a synthetic dataset with a manifest");
  export_cmd->add_option("--kind", synth_kind, "labeled, shift, mask or layers")
      ->check(CLI::IsMember({"labeled", "shift", "mask", "layers"}))
      ->capture_default_str();
  export_cmd->add_option("--utterances", synth.utterances, "Utterance count")->capture_default_str();
  export_cmd->add_option("--frames", synth.frames, "Frames per utterance")->capture_default_str();
  export_cmd->add_option("--symbols", synth.symbols, "Symbol alphabet size")->capture_default_str();
  export_cmd->add_option("--dim", synth.dim, "Feature dimension")->capture_default_str();
  export_cmd->add_option("--fidelity", synth.fidelity, "Channel copy probability")->capture_default_str();
  export_cmd->add_option("--persistence", synth.persistence, "Symbol repeat probability")->capture_default_str();
  export_cmd->add_option("--seed", synth.seed, "Seed")->capture_default_str();
  export_cmd->add_option("--out", synth_out, "Output directory")->required();

  std::string replay_path;
  auto* replay_cmd = app.add_subcommand("replay", "Re-run a report from its config and compare");
  replay_cmd->add_option("report", replay_path, "Report JSON")->required();

  CLI11_PARSE(app, argc, argv);

  const std::size_t threads = thread_budget();
  try {
    if (*sup_cmd) return finish(cmd_probe_supervised(sup.resolve(), threads), sup.out);
    if (*unsup_cmd) return finish(cmd_probe_unsupervised(unsup.resolve(), threads), unsup.out);
    if (*layer_cmd) return finish(cmd_layer_scan(layer_scan.resolve(), threads), layer_scan.out);
    if (*ckpt_cmd) return finish(cmd_checkpoint_scan(checkpoint_scan.resolve(), threads), checkpoint_scan.out);
    if (*mask_cmd) {
      for (const auto& p : cmd_emit_mask(mask_manifest, mask_period, mask_frames, mask_out)) {
        std::cout << p.string() << "\n";
      }
      return kExitOk;
    }
    if (*validate_cmd) {
      const auto report = cmd_synth_validate(validate, threads);
      if (!validate_out.empty()) write_report(report, validate_out);
      const bool ok = report.summary.at("all_passed").get<bool>();
      std::cout << (ok ? "all checks passed" : "some checks FAILED") << "\n";
      return ok ? kExitOk : kExitValidationFailure;
    }
    if (*export_cmd) {
      synth.kind = parse_synth_kind(synth_kind);
      std::cout << export_synthetic(synth, synth_out).string() << "\n";
      return kExitOk;
    }
    if (*replay_cmd) {
      const auto result = cmd_replay(replay_path, threads);
      if (result.identical) {
        std::cout << "replay identical\n";
        return kExitOk;
      }
      std::cerr << "replay differs\n--- recorded\n" << result.recorded << "--- replayed\n" << result.replayed;
      return kExitValidationFailure;
    }
  } catch (const ManifestInvalid& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidationFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDataError;
  }
  return kExitOk;
}
