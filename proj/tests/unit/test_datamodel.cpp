#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include <gtest/gtest.h>

#include "miprobe/datamodel.hpp"
#include "test_support.hpp"

namespace miprobe {
namespace {

namespace fs = std::filesystem;

std::vector<std::uint8_t> fmat_bytes(std::uint32_t rows, std::uint32_t cols, const std::vector<float>& payload) {
  std::vector<std::uint8_t> out = {'F', 'M', 'A', 'T', 1, 0, 0, 0};
  auto put32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  put32(rows);
  put32(cols);
  for (float f : payload) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put32(bits);
  }
  return out;
}

TEST(Fmat, DecodesRowMajorPayload) {
  const auto m = decode_feature_matrix(fmat_bytes(2, 3, {1, 2, 3, 4, 5, 6}));
  ASSERT_EQ(m.frames(), 2u);
  ASSERT_EQ(m.dim(), 3u);
  EXPECT_EQ(m.values()(0, 2), 3.0f);
  EXPECT_EQ(m.values()(1, 0), 4.0f);
}

TEST(Fmat, EncodeMatchesHandBuiltBytes) {
  Matrix v(2, 3);
  v << 1, 2, 3, 4, 5, 6;
  EXPECT_EQ(encode_feature_matrix(FeatureMatrix(v)), fmat_bytes(2, 3, {1, 2, 3, 4, 5, 6}));
}

TEST(Fmat, ShortPayloadIsShapeMismatch) {
  try {
    decode_feature_matrix(fmat_bytes(2, 3, {1, 2, 3, 4, 5}));
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("shape mismatch"), std::string::npos) << e.what();
  }
}

TEST(Fmat, NanIsReportedWithPosition) {
  try {
    decode_feature_matrix(fmat_bytes(2, 2, {0, std::numeric_limits<float>::quiet_NaN(), 0, 0}));
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("row 0 col 1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("20"), std::string::npos) << "byte offset missing: " << msg;
  }
}

TEST(Fmat, HeaderErrors) {
  auto bytes = fmat_bytes(1, 1, {0});
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_feature_matrix(bad_magic), DataError);
  auto bad_version = bytes;
  bad_version[4] = 2;
  EXPECT_THROW(decode_feature_matrix(bad_version), DataError);
  auto bad_pad = bytes;
  bad_pad[6] = 1;
  EXPECT_THROW(decode_feature_matrix(bad_pad), DataError);
  EXPECT_THROW(decode_feature_matrix(std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 10)), DataError);
  EXPECT_THROW(decode_feature_matrix(fmat_bytes(0, 3, {})), DataError);
}

TEST(Fmat, OneByOneFileIsTwentyBytes) {
  test::ScratchDir dir;
  const auto path = dir.path() / "one.fmat";
  store_feature_matrix(FeatureMatrix(Matrix::Zero(1, 1)), path);
  EXPECT_EQ(fs::file_size(path), 20u);
}

TEST(Fmat, FileRoundTrip) {
  test::ScratchDir dir;
  Matrix v(3, 2);
  v << -1.5f, 0.0f, 1e-30f, 3e30f, -0.0f, 7.25f;
  const FeatureMatrix m(v);
  store_feature_matrix(m, dir.path() / "m.fmat");
  EXPECT_EQ(load_feature_matrix(dir.path() / "m.fmat"), m);
}

TEST(FeatureMatrix, RejectsEmptyAndNonFinite) {
  EXPECT_THROW(FeatureMatrix(Matrix(0, 3)), DataError);
  EXPECT_THROW(FeatureMatrix(Matrix(3, 0)), DataError);
  Matrix v = Matrix::Zero(2, 2);
  v(1, 1) = std::numeric_limits<float>::infinity();
  EXPECT_THROW(FeatureMatrix{v}, DataError);
}

TEST(Labels, ParsesHeaderAndIds) {
  const auto labels = parse_labels("num_classes=3\n0\n2\n1");
  EXPECT_EQ(labels.num_classes, 3);
  EXPECT_EQ(labels.ids, (std::vector<std::int32_t>{0, 2, 1}));
}

TEST(Labels, OutOfRangeAndBadTokens) {
  EXPECT_THROW(parse_labels("num_classes=2\n5"), DataError);
  EXPECT_THROW(parse_labels("num_classes=2\n-1"), DataError);
  EXPECT_THROW(parse_labels("num_classes=2\n1.5"), DataError);
  EXPECT_THROW(parse_labels("num_classes=2\nzero"), DataError);
  EXPECT_THROW(parse_labels("classes=2\n0"), DataError);
  EXPECT_THROW(parse_labels(""), DataError);
}

TEST(Labels, EmptyBodyIsValid) {
  const auto labels = parse_labels("num_classes=4\n");
  EXPECT_EQ(labels.size(), 0u);
  EXPECT_EQ(labels.num_classes, 4);
}

TEST(Labels, FormatRoundTrip) {
  const FrameLabels labels{{3, 0, 0, 7, 1}, 8};
  EXPECT_EQ(parse_labels(format_labels(labels)), labels);
}

class ManifestTest : public ::testing::Test {
 protected:
  void SetUp() override {
    for (const char* utt : {"a", "b"}) {
      store_feature_matrix(FeatureMatrix(Matrix::Ones(4, 2)), dir_.path() / (std::string(utt) + ".fmat"));
      store_labels(FrameLabels{{0, 1, 0, 1}, 2}, dir_.path() / (std::string(utt) + ".labels"));
      UtteranceRecord rec;
      rec.utt_id = utt;
      rec.feature_paths[{1, ViewTag::kPlain}] = std::string(utt) + ".fmat";
      rec.label_path = std::string(utt) + ".labels";
      rec.split = rec.utt_id == "a" ? Split::kFit : Split::kEval;
      manifest_.records.push_back(rec);
    }
    manifest_.base_dir = dir_.path();
  }

  test::ScratchDir dir_;
  DatasetManifest manifest_;
};

TEST_F(ManifestTest, ConsistentManifestHasNoViolations) {
  EXPECT_TRUE(validate_manifest(manifest_).empty());
}

TEST_F(ManifestTest, LabelLengthMismatchNamesUtterance) {
  store_labels(FrameLabels{{0, 1, 0}, 2}, dir_.path() / "b.labels");
  const auto report = validate_manifest(manifest_);
  ASSERT_EQ(report.size(), 1u);
  EXPECT_EQ(report[0].utt_id, "b");
}

TEST_F(ManifestTest, DuplicateUttId) {
  manifest_.records.push_back(manifest_.records[0]);
  const auto report = validate_manifest(manifest_);
  ASSERT_EQ(report.size(), 1u);
  EXPECT_EQ(report[0].utt_id, "a");
}

TEST_F(ManifestTest, DumpsWithDifferentFrameCounts) {
  store_feature_matrix(FeatureMatrix(Matrix::Ones(5, 2)), dir_.path() / "a.l2.fmat");
  manifest_.records[0].feature_paths[{2, ViewTag::kPlain}] = "a.l2.fmat";
  EXPECT_FALSE(validate_manifest(manifest_).empty());
}

TEST_F(ManifestTest, MissingFileIsAViolationNotAnError) {
  manifest_.records[1].feature_paths[{1, ViewTag::kPlain}] = "nope.fmat";
  EXPECT_EQ(validate_manifest(manifest_).size(), 1u);
}

TEST_F(ManifestTest, ValidationIsPure) {
  manifest_.records[1].feature_paths[{1, ViewTag::kPlain}] = "nope.fmat";
  EXPECT_EQ(validate_manifest(manifest_), validate_manifest(manifest_));
}

TEST_F(ManifestTest, JsonRoundTripResolvesAgainstManifestDir) {
  const auto path = dir_.path() / "manifest.json";
  store_manifest(manifest_, path);
  const auto loaded = load_manifest(path);
  ASSERT_EQ(loaded.records.size(), 2u);
  EXPECT_EQ(loaded.records[0].utt_id, "a");
  EXPECT_EQ(loaded.records[0].split, Split::kFit);
  EXPECT_EQ(loaded.records[1].split, Split::kEval);
  EXPECT_EQ(format_manifest(loaded), format_manifest(manifest_));
  EXPECT_TRUE(validate_manifest(loaded).empty());
}

TEST(Manifest, MalformedJson) {
  EXPECT_THROW(parse_manifest("{\"records\": [ {\"utt_id\": 3} ]}"), DataError);
  EXPECT_THROW(parse_manifest("not json"), DataError);
  EXPECT_THROW(parse_manifest(R"({"records":[{"utt_id":"a","split":"train","features":[]}]})"), DataError);
}

}  // namespace
}  // namespace miprobe
