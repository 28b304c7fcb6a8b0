#include <cmath>

#include <gtest/gtest.h>

#include "miprobe/mi.hpp"
#include "miprobe/oracle.hpp"
#include "test_support.hpp"

namespace miprobe {
namespace {

LabeledFrames labeled(const JointTable& joint, std::size_t n, std::uint64_t seed) {
  auto s = sample_labeled(joint, EmbeddingSpec::separable(joint.cols(), 8, 99), n, seed);
  return {s.features.values(), s.labels.ids, joint.rows()};
}

/// Enough SGD steps for a logistic probe to converge on 5k frames.
ProbeConfig long_training() {
  ProbeConfig cfg;
  cfg.epochs = 60;
  return cfg;
}

PairedFrames paired(const JointTable& joint, std::size_t n, std::uint64_t seed) {
  auto s = sample_view_pair(joint, EmbeddingSpec::separable(joint.rows(), 8, 1),
                            EmbeddingSpec::separable(joint.cols(), 8, 2), n, seed);
  return {s.za.values(), s.zb.values()};
}

TEST(EmpiricalEntropy, ReferenceCounts) {
  EXPECT_DOUBLE_EQ(empirical_entropy_bits(std::vector<std::int32_t>{0, 1, 2, 3, 3, 2, 1, 0}, 4), 2.0);
  EXPECT_DOUBLE_EQ(empirical_entropy_bits(std::vector<std::int32_t>{2, 2, 2}, 3), 0.0);
  EXPECT_NEAR(empirical_entropy_bits(std::vector<std::int32_t>{0, 0, 0, 1}, 2), 0.811278, 1e-6);
  EXPECT_THROW(empirical_entropy_bits(std::vector<std::int32_t>{}, 2), std::invalid_argument);
  EXPECT_THROW(empirical_entropy_bits(std::vector<std::int32_t>{2}, 2), std::invalid_argument);
}

TEST(SupervisedBound, RecoversIdentityChannelAtSmallScale) {
  const auto joint = mixture_channel(4, 1.0);
  const auto est = supervised_lower_bound(labeled(joint, 5000, 1), labeled(joint, 5000, 2), long_training());
  EXPECT_NEAR(est.value_bits, 2.0, 0.15);
  EXPECT_DOUBLE_EQ(est.value_bits, est.entropy_term_bits - est.cross_entropy_bits);
  EXPECT_EQ(est.kind, BoundKind::kSupervised);
  EXPECT_EQ(est.n_fit_frames, 5000u);
}

TEST(SupervisedBound, SingleClassEvalIsMinusCrossEntropy) {
  const auto joint = mixture_channel(3, 1.0);
  const auto fit = labeled(joint, 2000, 1);
  auto eval = labeled(joint, 300, 2);
  std::fill(eval.labels.begin(), eval.labels.end(), 0);
  const auto est = supervised_lower_bound(fit, eval, ProbeConfig{});
  EXPECT_EQ(est.entropy_term_bits, 0.0);
  EXPECT_DOUBLE_EQ(est.value_bits, -est.cross_entropy_bits);
  EXPECT_LE(est.value_bits, 0.0);
}

TEST(SupervisedBound, NoiseFeaturesGiveNearZero) {
  const auto joint = independent_uniform(4, 4);
  const auto est = supervised_lower_bound(labeled(joint, 5000, 1), labeled(joint, 5000, 2), ProbeConfig{});
  EXPECT_LE(est.value_bits, 0.05);
  EXPECT_GT(est.value_bits, -0.15);
}

TEST(SupervisedBound, Errors) {
  const auto joint = mixture_channel(3, 1.0);
  auto eval = labeled(joint, 10, 2);
  eval.features.resize(0, 8);
  eval.labels.clear();
  EXPECT_THROW(supervised_lower_bound(labeled(joint, 100, 1), eval, ProbeConfig{}), std::invalid_argument);
}

TEST(UnsupervisedBound, RecoversIdenticalStreamsAtSmallScale) {
  const auto joint = mixture_channel(5, 1.0);
  const auto est = unsupervised_lower_bound(paired(joint, 5000, 1), paired(joint, 5000, 2), {5, 100}, long_training());
  EXPECT_NEAR(est.value_bits, std::log2(5.0), 0.15);
  EXPECT_EQ(est.kind, BoundKind::kUnsupervised);
  EXPECT_EQ(est.num_classes, 5u);
}

TEST(UnsupervisedBound, SingleClusterIsZero) {
  const auto joint = mixture_channel(3, 1.0);
  const auto est = unsupervised_lower_bound(paired(joint, 200, 1), paired(joint, 100, 2), {1, 100}, ProbeConfig{});
  EXPECT_EQ(est.value_bits, 0.0);
  EXPECT_EQ(est.entropy_term_bits, 0.0);
}

TEST(UnsupervisedBound, Errors) {
  const auto joint = mixture_channel(3, 1.0);
  EXPECT_THROW(unsupervised_lower_bound(paired(joint, 4, 1), paired(joint, 10, 2), {5, 100}, ProbeConfig{}),
               std::invalid_argument);
  PairedFrames empty{Matrix(0, 8), Matrix(0, 8)};
  EXPECT_THROW(unsupervised_lower_bound(paired(joint, 100, 1), empty, {3, 100}, ProbeConfig{}),
               std::invalid_argument);
}

TEST(RunSeeded, FoldsInSeedOrder) {
  const std::vector<std::uint64_t> seeds{4, 1, 7};
  const auto est = run_seeded(
      [](std::uint64_t seed) {
        MIEstimate e;
        e.value_bits = static_cast<double>(seed);
        return e;
      },
      seeds, 3);
  EXPECT_EQ(est.per_seed_values_bits, (std::vector<double>{4, 1, 7}));
  EXPECT_EQ(est.seeds, seeds);
  EXPECT_DOUBLE_EQ(est.value_bits, 4.0);
  EXPECT_DOUBLE_EQ(est.seed_variance, 6.0);  // population variance of {4, 1, 7}
}

TEST(RunSeeded, DeterministicRunsHaveZeroVariance) {
  const auto joint = mixture_channel(3, 0.8);
  const auto fit = labeled(joint, 500, 1);
  const auto eval = labeled(joint, 500, 2);
  const std::vector<std::uint64_t> seeds(5, 3);
  const auto est = run_seeded(
      [&](std::uint64_t seed) {
        ProbeConfig cfg;
        cfg.seed = seed;
        return supervised_lower_bound(fit, eval, cfg);
      },
      seeds);
  EXPECT_EQ(est.seed_variance, 0.0);
}

TEST(RunSeeded, SingleSeedIsThatRun) {
  const auto joint = mixture_channel(3, 0.8);
  const auto fit = labeled(joint, 500, 1);
  const auto eval = labeled(joint, 500, 2);
  const auto single = supervised_lower_bound(fit, eval, ProbeConfig{});
  const std::vector<std::uint64_t> seeds{0};
  const auto est = run_seeded([&](std::uint64_t) { return supervised_lower_bound(fit, eval, ProbeConfig{}); }, seeds);
  EXPECT_EQ(est.value_bits, single.value_bits);
  EXPECT_EQ(est.seed_variance, 0.0);
}

TEST(RunSeeded, ThreadCountDoesNotChangeResults) {
  const auto joint = mixture_channel(4, 0.9);
  const auto fit = paired(joint, 1500, 1);
  const auto eval = paired(joint, 1500, 2);
  auto run = [&](std::size_t threads) {
    return run_seeded(
        [&](std::uint64_t seed) {
          ProbeConfig cfg;
          cfg.kind = ProbeKind::kMlp;
          cfg.hidden_dim = 16;
          cfg.epochs = 2;
          cfg.seed = seed;
          return unsupervised_lower_bound(fit, eval, {4, 100}, cfg);
        },
        kDefaultSeeds, threads);
  };
  const auto one = run(1);
  const auto four = run(4);
  EXPECT_EQ(one.per_seed_values_bits, four.per_seed_values_bits);
  EXPECT_EQ(to_json(one).dump(), to_json(four).dump());
}

TEST(Serialization, ProbeConfigRoundTrip) {
  ProbeConfig cfg;
  cfg.kind = ProbeKind::kMlp;
  cfg.hidden_dim = 7;
  cfg.dropout_rate = 0.25;
  cfg.seed = 12;
  const auto back = probe_config_from_json(to_json(cfg));
  EXPECT_EQ(to_json(back), to_json(cfg));
}

TEST(Serialization, CsvRowMatchesHeader) {
  MIEstimate e;
  e.value_bits = -0.5;
  const auto count = [](const std::string& s) { return std::count(s.begin(), s.end(), ','); };
  EXPECT_EQ(count(csv_header()), count(to_csv_row(e)));
  EXPECT_TRUE(e.negative());
}

TEST(Pooling, StacksInOrderAndChecksShapes) {
  std::vector<std::pair<FeatureMatrix, FrameLabels>> utts;
  utts.emplace_back(FeatureMatrix(Matrix::Constant(2, 3, 1.0f)), FrameLabels{{0, 1}, 2});
  utts.emplace_back(FeatureMatrix(Matrix::Constant(1, 3, 2.0f)), FrameLabels{{1}, 2});
  const auto pooled = pool_labeled(utts);
  EXPECT_EQ(pooled.size(), 3u);
  EXPECT_EQ(pooled.features(2, 0), 2.0f);
  EXPECT_EQ(pooled.labels, (std::vector<std::int32_t>{0, 1, 1}));
  utts.emplace_back(FeatureMatrix(Matrix::Constant(1, 3, 2.0f)), FrameLabels{{1}, 3});
  EXPECT_THROW(pool_labeled(utts), DataError);
}

}  // namespace
}  // namespace miprobe
