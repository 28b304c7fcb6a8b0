#include "miprobe/datamodel.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace miprobe {

namespace fs = std::filesystem;

FeatureMatrix::FeatureMatrix(Matrix values) : values_(std::move(values)) {
  if (values_.rows() < 1) throw DataError("feature matrix must have at least one frame");
  if (values_.cols() < 1) throw DataError("feature matrix must have at least one dimension");
  for (Eigen::Index r = 0; r < values_.rows(); ++r) {
    for (Eigen::Index c = 0; c < values_.cols(); ++c) {
      if (!std::isfinite(values_(r, c))) {
        throw DataError("non-finite feature value at row " + std::to_string(r) + " col " +
                        std::to_string(c));
      }
    }
  }
}

bool FeatureMatrix::operator==(const FeatureMatrix& other) const {
  if (values_.rows() != other.values_.rows() || values_.cols() != other.values_.cols()) {
    return false;
  }
  // Bitwise: round-trips must preserve signed zeros too.
  return std::memcmp(values_.data(), other.values_.data(),
                     sizeof(float) * static_cast<std::size_t>(values_.size())) == 0;
}

void FrameLabels::check() const {
  if (num_classes < 1) throw DataError("num_classes must be >= 1");
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= num_classes) {
      throw DataError("label id " + std::to_string(ids[i]) + " at index " + std::to_string(i) +
                      " out of range [0, " + std::to_string(num_classes) + ")");
    }
  }
}

// ---------------------------------------------------------------------------
// FMAT

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& in, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[offset + i]) << (8 * i);
  return v;
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_bytes(const fs::path& path, const char* data, std::size_t n) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(data, static_cast<std::streamsize>(n));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

std::vector<std::uint8_t> encode_feature_matrix(const FeatureMatrix& matrix) {
  const auto& m = matrix.values();
  std::vector<std::uint8_t> out;
  out.reserve(kFmatHeaderBytes + 4 * static_cast<std::size_t>(m.size()));
  out.insert(out.end(), {'F', 'M', 'A', 'T', kFmatVersion, 0, 0, 0});
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.size(); ++i) put_u32(out, std::bit_cast<std::uint32_t>(m.data()[i]));
  return out;
}

FeatureMatrix decode_feature_matrix(const std::vector<std::uint8_t>& bytes,
                                    const std::string& source) {
  auto fail = [&](std::size_t offset, const std::string& what) {
    return DataError(source + ": " + what + " (byte offset " + std::to_string(offset) + ")");
  };
  if (bytes.size() < kFmatHeaderBytes) throw fail(bytes.size(), "truncated FMAT header");
  if (std::memcmp(bytes.data(), "FMAT", 4) != 0) throw fail(0, "bad magic, expected FMAT");
  if (bytes[4] != kFmatVersion) throw fail(4, "unsupported version " + std::to_string(bytes[4]));
  for (std::size_t i = 5; i < 8; ++i) {
    if (bytes[i] != 0) throw fail(i, "nonzero header padding");
  }
  const std::uint32_t rows = get_u32(bytes, 8);
  const std::uint32_t cols = get_u32(bytes, 12);
  if (rows == 0) throw fail(8, "T must be >= 1");
  if (cols == 0) throw fail(12, "D must be >= 1");
  const std::uint64_t expected = kFmatHeaderBytes + 4ULL * rows * cols;
  if (bytes.size() != expected) {
    throw fail(bytes.size(), "shape mismatch: header declares " + std::to_string(rows) + "x" +
                                 std::to_string(cols) + " needing " + std::to_string(expected) +
                                 " bytes, file has " + std::to_string(bytes.size()));
  }
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < static_cast<std::size_t>(rows) * cols; ++i) {
    const std::size_t offset = kFmatHeaderBytes + 4 * i;
    const float v = std::bit_cast<float>(get_u32(bytes, offset));
    if (!std::isfinite(v)) {
      throw fail(offset, "non-finite value at row " + std::to_string(i / cols) + " col " +
                             std::to_string(i % cols));
    }
    m.data()[i] = v;
  }
  return FeatureMatrix(std::move(m));
}

FeatureMatrix load_feature_matrix(const fs::path& path) {
  return decode_feature_matrix(read_file(path), path.string());
}

void store_feature_matrix(const FeatureMatrix& matrix, const fs::path& path) {
  const auto bytes = encode_feature_matrix(matrix);
  write_bytes(path, reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

// ---------------------------------------------------------------------------
// Labels

FrameLabels parse_labels(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto parse_int = [&](std::string_view token, long long& out) {
    while (!token.empty() && (token.back() == '\r' || token.back() == ' ')) token.remove_suffix(1);
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    const auto* end = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(token.data(), end, out);
    return ec == std::errc() && ptr == end && !token.empty();
  };

  if (!std::getline(in, line)) throw DataError(source + ": missing num_classes header");
  ++line_no;
  const std::string_view prefix = "num_classes=";
  long long k = 0;
  if (line.rfind(prefix, 0) != 0 || !parse_int(std::string_view(line).substr(prefix.size()), k) ||
      k < 1) {
    throw DataError(source + ":1: expected header \"num_classes=<K>\" with K >= 1");
  }
  FrameLabels labels;
  labels.num_classes = static_cast<int>(k);
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    long long id = 0;
    if (!parse_int(line, id) || id < 0) {
      throw DataError(source + ":" + std::to_string(line_no) + ": non-integer label token '" +
                      line + "'");
    }
    if (id >= k) {
      throw DataError(source + ":" + std::to_string(line_no) + ": label " + std::to_string(id) +
                      " out of range for num_classes=" + std::to_string(k));
    }
    labels.ids.push_back(static_cast<std::int32_t>(id));
  }
  return labels;
}

FrameLabels load_labels(const fs::path& path) { return parse_labels(read_text(path), path.string()); }

std::string format_labels(const FrameLabels& labels) {
  labels.check();
  std::string out = "num_classes=" + std::to_string(labels.num_classes) + "\n";
  for (auto id : labels.ids) {
    out += std::to_string(id);
    out += '\n';
  }
  return out;
}

void store_labels(const FrameLabels& labels, const fs::path& path) {
  const auto text = format_labels(labels);
  write_bytes(path, text.data(), text.size());
}

// ---------------------------------------------------------------------------
// Manifest

std::string to_string(ViewTag tag) {
  switch (tag) {
    case ViewTag::kPlain: return "plain";
    case ViewTag::kMasked: return "masked";
    case ViewTag::kUnmasked: return "unmasked";
  }
  return "?";
}

std::string to_string(Split split) { return split == Split::kFit ? "fit" : "eval"; }

ViewTag parse_view_tag(const std::string& text) {
  if (text == "plain") return ViewTag::kPlain;
  if (text == "masked") return ViewTag::kMasked;
  if (text == "unmasked") return ViewTag::kUnmasked;
  throw DataError("unknown view tag '" + text + "'");
}

Split parse_split(const std::string& text) {
  if (text == "fit") return Split::kFit;
  if (text == "eval") return Split::kEval;
  throw DataError("unknown split '" + text + "'");
}

fs::path DatasetManifest::resolve(const fs::path& p) const {
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

DatasetManifest parse_manifest(const std::string& json_text, const fs::path& base_dir) {
  DatasetManifest manifest;
  manifest.base_dir = base_dir;
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
    for (const auto& r : doc.at("records")) {
      UtteranceRecord rec;
      rec.utt_id = r.at("utt_id").get<std::string>();
      rec.split = parse_split(r.value("split", std::string("eval")));
      rec.frame_period_ms = r.value("frame_period_ms", 20.0);
      if (r.contains("label_path") && !r["label_path"].is_null()) {
        rec.label_path = fs::path(r["label_path"].get<std::string>());
      }
      for (const auto& f : r.at("features")) {
        FeatureKey key{f.at("layer").get<int>(),
                       parse_view_tag(f.value("view", std::string("plain")))};
        if (!rec.feature_paths.emplace(key, fs::path(f.at("path").get<std::string>())).second) {
          throw DataError("record " + rec.utt_id + ": duplicate feature entry for layer " +
                          std::to_string(key.layer) + " view " + to_string(key.view));
        }
      }
      manifest.records.push_back(std::move(rec));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed manifest: ") + e.what());
  }
  return manifest;
}

DatasetManifest load_manifest(const fs::path& path) {
  return parse_manifest(read_text(path), path.parent_path());
}

std::string format_manifest(const DatasetManifest& manifest) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& rec : manifest.records) {
    nlohmann::json features = nlohmann::json::array();
    for (const auto& [key, path] : rec.feature_paths) {
      features.push_back({{"layer", key.layer}, {"view", to_string(key.view)}, {"path", path.generic_string()}});
    }
    nlohmann::json r = {{"utt_id", rec.utt_id},
                        {"split", to_string(rec.split)},
                        {"frame_period_ms", rec.frame_period_ms},
                        {"features", features}};
    if (rec.label_path) r["label_path"] = rec.label_path->generic_string();
    records.push_back(std::move(r));
  }
  return nlohmann::json{{"records", records}}.dump(2) + "\n";
}

void store_manifest(const DatasetManifest& manifest, const fs::path& path) {
  const auto text = format_manifest(manifest);
  write_bytes(path, text.data(), text.size());
}

ValidationReport validate_manifest(const DatasetManifest& manifest) {
  ValidationReport report;
  std::set<std::string> seen;
  for (const auto& rec : manifest.records) {
    if (!seen.insert(rec.utt_id).second) {
      report.push_back({rec.utt_id, "duplicate utt_id"});
      continue;
    }
    if (rec.feature_paths.empty()) report.push_back({rec.utt_id, "no feature files"});
    if (!(rec.frame_period_ms > 0.0)) report.push_back({rec.utt_id, "frame_period_ms must be > 0"});

    std::optional<std::size_t> frames;
    for (const auto& [key, path] : rec.feature_paths) {
      try {
        const auto m = load_feature_matrix(manifest.resolve(path));
        if (!frames) {
          frames = m.frames();
        } else if (*frames != m.frames()) {
          report.push_back({rec.utt_id, "layer " + std::to_string(key.layer) + " view " +
                                            to_string(key.view) + " has T=" +
                                            std::to_string(m.frames()) + ", expected T=" +
                                            std::to_string(*frames)});
        }
      } catch (const std::exception& e) {
        report.push_back({rec.utt_id, e.what()});
      }
    }
    if (rec.label_path) {
      try {
        const auto labels = load_labels(manifest.resolve(*rec.label_path));
        if (frames && labels.size() != *frames) {
          report.push_back({rec.utt_id, "label length " + std::to_string(labels.size()) +
                                            " does not match feature T=" + std::to_string(*frames)});
        }
      } catch (const std::exception& e) {
        report.push_back({rec.utt_id, e.what()});
      }
    }
  }
  return report;
}

}  // namespace miprobe
