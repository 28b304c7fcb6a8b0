#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "miprobe/datamodel.hpp"

namespace miprobe {

/// Frame-index alignment between a view-a dump and a view-b dump of the
/// same utterance. Pairs are unique and sorted by index_a.
struct ViewPairing {
  struct Pair {
    std::size_t index_a = 0;
    std::size_t index_b = 0;
    bool operator==(const Pair&) const = default;
  };
  std::vector<Pair> pairs;
  std::size_t source_frames = 0;
};

/// Deterministic block mask: in each period, the trailing `masked_per_period`
/// frames are masked. A partial final period follows the same rule.
struct MaskSpec {
  std::vector<bool> masked;
  std::size_t period = 40;
  std::size_t masked_per_period = 30;

  std::size_t frames() const { return masked.size(); }
  std::size_t masked_count() const;
  bool operator==(const MaskSpec&) const = default;
};

enum class MaskPositions { kMaskedOnly, kAllFrames };

/// Za = frame t (past), Zb = frame t + shift (future).
ViewPairing time_shift_pairing(std::size_t frames, std::size_t shift_frames);

MaskSpec block_mask_spec(std::size_t frames, std::size_t period = 40,
                         std::size_t masked_per_period = 30);

/// index_a addresses the masked-pass dump, index_b the unmasked-pass dump.
ViewPairing masked_pairing(const MaskSpec& spec,
                           MaskPositions positions = MaskPositions::kMaskedOnly);

double mask_ratio(const MaskSpec& spec);

/// Text form: "T=<T> period=<p> masked=<m>\n" then T '0'/'1' characters.
std::string format_mask_spec(const MaskSpec& spec);
MaskSpec parse_mask_spec(const std::string& text);
void store_mask_spec(const MaskSpec& spec, const std::filesystem::path& path);
MaskSpec load_mask_spec(const std::filesystem::path& path);

/// Gathers the paired rows of two dumps into frame-aligned (Za, Zb) matrices.
std::pair<Matrix, Matrix> gather_pairs(const Matrix& view_a, const Matrix& view_b,
                                       const ViewPairing& pairing);

}  // namespace miprobe
