#pragma once

#include <vector>

#include "miprobe/datamodel.hpp"
#include "miprobe/mi.hpp"
#include "miprobe/views.hpp"

namespace miprobe::cli {

/// Records sorted by utt_id; pooling in this order makes estimates
/// independent of manifest ordering.
std::vector<const UtteranceRecord*> sorted_records(const DatasetManifest& manifest);

struct SplitRecords {
  std::vector<const UtteranceRecord*> fit;
  std::vector<const UtteranceRecord*> eval;
};

/// By the records' split tags.
SplitRecords split_by_tag(const DatasetManifest& manifest);

/// Sorted by utt_id; the first ceil(n/2) records fit, the rest evaluate.
/// Throws DataError for fewer than 2 records.
SplitRecords split_in_half(const DatasetManifest& manifest);

/// validate_manifest found violations.
class ManifestInvalid : public DataError {
 public:
  explicit ManifestInvalid(ValidationReport violations);
  const ValidationReport& violations() const { return violations_; }

 private:
  ValidationReport violations_;
};

/// Throws ManifestInvalid listing every violation.
void require_valid(const DatasetManifest& manifest);

/// Plain-view features of `layer` with labels. Throws DataError naming the
/// utterance when a label file or dump is missing.
LabeledFrames load_labeled(const DatasetManifest& manifest,
                           const std::vector<const UtteranceRecord*>& records, int layer);

/// Time-shift view pairs from the plain dumps of `layer`.
PairedFrames load_shift_pairs(const DatasetManifest& manifest,
                              const std::vector<const UtteranceRecord*>& records, int layer,
                              std::size_t shift_frames);

struct MaskedPairs {
  PairedFrames pairs;
  std::size_t masked_frames = 0;
  std::size_t total_frames = 0;
};

/// Masked-pass (Za) and unmasked-pass (Zb) dumps of `layer` paired per the
/// block mask rule. Throws DataError if the two dumps disagree on T.
MaskedPairs load_mask_pairs(const DatasetManifest& manifest,
                            const std::vector<const UtteranceRecord*>& records, int layer,
                            std::size_t period, std::size_t masked_per_period,
                            MaskPositions positions);

/// Layers for which every record has a dump of `view`, ascending.
std::vector<int> common_layers(const DatasetManifest& manifest, ViewTag view);

}  // namespace miprobe::cli
