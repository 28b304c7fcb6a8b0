#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace miprobe {

/// Row-major float storage, matching the FMAT payload layout.
using Matrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixD = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Malformed or inconsistent input data (files, manifests, shapes).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A T x D matrix of representation vectors for one utterance/layer/view.
/// Construction enforces T >= 1, D >= 1 and finite values.
class FeatureMatrix {
 public:
  explicit FeatureMatrix(Matrix values);

  std::size_t frames() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(values_.cols()); }
  const Matrix& values() const { return values_; }

  bool operator==(const FeatureMatrix& other) const;

 private:
  Matrix values_;
};

/// Per-frame class ids with the declared support size.
struct FrameLabels {
  std::vector<std::int32_t> ids;
  int num_classes = 0;

  std::size_t size() const { return ids.size(); }
  /// Throws DataError if num_classes < 1 or any id is outside [0, num_classes).
  void check() const;
  bool operator==(const FrameLabels&) const = default;
};

// ---------------------------------------------------------------------------
// FMAT: "FMAT", version byte 1, 3 zero bytes, uint32 LE T, uint32 LE D,
// then T*D float32 LE, row-major.

inline constexpr std::size_t kFmatHeaderBytes = 16;
inline constexpr std::uint8_t kFmatVersion = 1;

FeatureMatrix load_feature_matrix(const std::filesystem::path& path);
void store_feature_matrix(const FeatureMatrix& matrix, const std::filesystem::path& path);

/// In-memory codec used by the file functions; `source` names the data in errors.
FeatureMatrix decode_feature_matrix(const std::vector<std::uint8_t>& bytes,
                                    const std::string& source = "<memory>");
std::vector<std::uint8_t> encode_feature_matrix(const FeatureMatrix& matrix);

// Label text files: "num_classes=<K>" then one id per line.
FrameLabels load_labels(const std::filesystem::path& path);
FrameLabels parse_labels(const std::string& text, const std::string& source = "<memory>");
void store_labels(const FrameLabels& labels, const std::filesystem::path& path);
std::string format_labels(const FrameLabels& labels);

// ---------------------------------------------------------------------------
// Manifests

enum class ViewTag { kPlain, kMasked, kUnmasked };
enum class Split { kFit, kEval };

std::string to_string(ViewTag tag);
std::string to_string(Split split);
ViewTag parse_view_tag(const std::string& text);
Split parse_split(const std::string& text);

struct FeatureKey {
  int layer = 0;
  ViewTag view = ViewTag::kPlain;
  auto operator<=>(const FeatureKey&) const = default;
};

struct UtteranceRecord {
  std::string utt_id;
  std::map<FeatureKey, std::filesystem::path> feature_paths;
  std::optional<std::filesystem::path> label_path;
  double frame_period_ms = 20.0;
  Split split = Split::kEval;
};

struct DatasetManifest {
  std::vector<UtteranceRecord> records;
  /// Directory relative paths are resolved against. Empty means the CWD.
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::filesystem::path& p) const;
};

/// JSON manifest I/O. Relative paths in the document are kept relative and
/// resolved against the manifest's directory at load time.
DatasetManifest load_manifest(const std::filesystem::path& path);
DatasetManifest parse_manifest(const std::string& json_text,
                               const std::filesystem::path& base_dir = {});
void store_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
std::string format_manifest(const DatasetManifest& manifest);

struct Violation {
  std::string utt_id;  // empty for manifest-level problems
  std::string message;
  bool operator==(const Violation&) const = default;
};

using ValidationReport = std::vector<Violation>;

/// Checks record invariants (files parse, shared T, label length) and
/// manifest invariants (unique ids). Never throws for data problems.
ValidationReport validate_manifest(const DatasetManifest& manifest);

}  // namespace miprobe
