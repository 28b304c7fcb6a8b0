#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace miprobe::cli {

enum class SynthKind {
  kLabeled,  // plain dumps + labels through a mixture channel
  kShift,    // plain dumps of persistent symbol streams + labels
  kMask,     // masked/unmasked dumps; the masked pass sees a noisy copy of the symbol
  kLayers,   // three plain layers, only layer 2 carries the symbol stream
};

std::string to_string(SynthKind kind);
SynthKind parse_synth_kind(const std::string& text);

struct SynthOptions {
  SynthKind kind = SynthKind::kLabeled;
  std::size_t utterances = 20;
  std::size_t frames = 200;  // per utterance
  std::size_t symbols = 5;
  std::size_t dim = 16;
  double fidelity = 1.0;     // mixture-channel copy probability
  double persistence = 0.8;  // P(symbol_t = symbol_{t-1}) for stream kinds
  std::uint64_t seed = 0;
};

/// Writes FMAT dumps, label files and manifest.json under `dir`. The first
/// half of the utterances (by index) are tagged fit. Returns the manifest path.
std::filesystem::path export_synthetic(const SynthOptions& options, const std::filesystem::path& dir);

}  // namespace miprobe::cli
