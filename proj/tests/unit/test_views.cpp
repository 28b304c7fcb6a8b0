#include <gtest/gtest.h>

#include "miprobe/views.hpp"
#include "test_support.hpp"

namespace miprobe {
namespace {

using Pairs = std::vector<ViewPairing::Pair>;

TEST(TimeShift, PairsPastWithFuture) {
  EXPECT_EQ(time_shift_pairing(5, 3).pairs, (Pairs{{0, 3}, {1, 4}}));
  EXPECT_EQ(time_shift_pairing(4, 0).pairs, (Pairs{{0, 0}, {1, 1}, {2, 2}, {3, 3}}));
}

TEST(TimeShift, NoPairableFrames) {
  try {
    time_shift_pairing(3, 3);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("no pairable frames"), std::string::npos);
  }
}

TEST(BlockMask, FortyFrames) {
  const auto spec = block_mask_spec(40);
  for (std::size_t t = 0; t < 40; ++t) EXPECT_EQ(spec.masked[t], t >= 10) << t;
  EXPECT_EQ(spec.masked_count(), 30u);
  EXPECT_EQ(mask_ratio(spec), 0.75);
}

TEST(BlockMask, RatioIsExactOnWholePeriods) {
  EXPECT_EQ(block_mask_spec(80).masked_count(), 60u);
  EXPECT_EQ(mask_ratio(block_mask_spec(80)), 0.75);
  EXPECT_EQ(mask_ratio(block_mask_spec(4000)), 0.75);
}

TEST(BlockMask, PartialPeriod) {
  const auto spec = block_mask_spec(25);
  for (std::size_t t = 0; t < 25; ++t) EXPECT_EQ(spec.masked[t], t >= 10) << t;
  EXPECT_EQ(spec.masked_count(), 15u);
  EXPECT_EQ(mask_ratio(spec), 0.6);
}

TEST(BlockMask, RejectsDegenerateRules) {
  EXPECT_THROW(block_mask_spec(40, 40, 40), std::invalid_argument);
  EXPECT_THROW(block_mask_spec(40, 40, 41), std::invalid_argument);
  EXPECT_THROW(block_mask_spec(40, 40, 0), std::invalid_argument);
}

TEST(MaskedPairing, MaskedOnlyAndAllFrames) {
  const auto spec = block_mask_spec(40);
  const auto masked = masked_pairing(spec);
  ASSERT_EQ(masked.pairs.size(), 30u);
  EXPECT_EQ(masked.pairs.front(), (ViewPairing::Pair{10, 10}));
  EXPECT_EQ(masked.pairs.back(), (ViewPairing::Pair{39, 39}));
  EXPECT_EQ(masked_pairing(spec, MaskPositions::kAllFrames).pairs.size(), 40u);
}

TEST(MaskedPairing, AllFalseSpec) {
  MaskSpec spec;
  spec.masked.assign(10, false);
  EXPECT_THROW(masked_pairing(spec), std::invalid_argument);
  EXPECT_EQ(mask_ratio(spec), 0.0);
  EXPECT_EQ(masked_pairing(spec, MaskPositions::kAllFrames).pairs.size(), 10u);
}

TEST(MaskFile, TextFormat) {
  const auto spec = block_mask_spec(6, 4, 3);
  EXPECT_EQ(format_mask_spec(spec), "T=6 period=4 masked=3\n011101\n");
  EXPECT_EQ(parse_mask_spec(format_mask_spec(spec)), spec);
}

TEST(MaskFile, RejectsBadInput) {
  EXPECT_THROW(parse_mask_spec("T=3 period=4 masked=3\n01\n"), DataError);
  EXPECT_THROW(parse_mask_spec("T=3 period=4 masked=3\n012\n"), DataError);
  EXPECT_THROW(parse_mask_spec("T=3 period=4\n011\n"), DataError);
  EXPECT_THROW(parse_mask_spec("T=3 period=4 masked=3 extra=1\n011\n"), DataError);
}

TEST(MaskFile, DiskRoundTrip) {
  test::ScratchDir dir;
  const auto spec = block_mask_spec(123);
  store_mask_spec(spec, dir.path() / "u.mask");
  EXPECT_EQ(load_mask_spec(dir.path() / "u.mask"), spec);
}

TEST(GatherPairs, AlignsRows) {
  Matrix a(4, 1), b(4, 1);
  a << 0, 1, 2, 3;
  b << 10, 11, 12, 13;
  const auto [za, zb] = gather_pairs(a, b, time_shift_pairing(4, 1));
  ASSERT_EQ(za.rows(), 3);
  for (Eigen::Index i = 0; i < 3; ++i) {
    EXPECT_EQ(za(i, 0), static_cast<float>(i));
    EXPECT_EQ(zb(i, 0), static_cast<float>(11 + i));
  }
}

TEST(GatherPairs, OutOfRange) {
  EXPECT_THROW(gather_pairs(Matrix::Zero(3, 1), Matrix::Zero(3, 1), time_shift_pairing(5, 1)), DataError);
}

}  // namespace
}  // namespace miprobe
