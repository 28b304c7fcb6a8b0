#include <cmath>

#include <gtest/gtest.h>

#include "miprobe/oracle.hpp"

namespace miprobe {
namespace {

MatrixD table(std::initializer_list<std::initializer_list<double>> rows) {
  MatrixD m(rows.size(), rows.begin()->size());
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

TEST(ExactMi, ReferenceTables) {
  EXPECT_NEAR(exact_mi_bits(JointTable(table({{0.25, 0.25}, {0.25, 0.25}}))), 0.0, 1e-12);
  EXPECT_NEAR(exact_mi_bits(JointTable(table({{0.5, 0.0}, {0.0, 0.5}}))), 1.0, 1e-12);
  EXPECT_NEAR(exact_mi_bits(JointTable(table({{0.4, 0.1}, {0.1, 0.4}}))), 0.278072, 1e-6);
}

TEST(ExactMi, SymmetricUnderTranspose) {
  const JointTable joint(table({{0.1, 0.2, 0.05}, {0.3, 0.05, 0.3}}));
  EXPECT_NEAR(exact_mi_bits(joint), exact_mi_bits(joint.transposed()), 1e-12);
}

TEST(JointTable, RejectsInvalidTables) {
  EXPECT_THROW(JointTable(table({{0.5, 0.6}})), std::invalid_argument);
  EXPECT_THROW(JointTable(table({{1.5, -0.5}})), std::invalid_argument);
  EXPECT_THROW(JointTable(MatrixD(0, 0)), std::invalid_argument);
}

TEST(Entropy, ZeroProbabilitiesContributeNothing) {
  Eigen::VectorXd p(4);
  p << 0.5, 0.5, 0.0, 0.0;
  EXPECT_DOUBLE_EQ(entropy_bits(p), 1.0);
}

TEST(MixtureChannel, Extremes) {
  EXPECT_NEAR(exact_mi_bits(mixture_channel(4, 1.0)), 2.0, 1e-12);
  EXPECT_NEAR(exact_mi_bits(mixture_channel(7, 0.0)), 0.0, 1e-12);
  EXPECT_THROW(mixture_channel(4, 1.1), std::invalid_argument);
  EXPECT_THROW(mixture_channel(4, -0.1), std::invalid_argument);
}

TEST(MixtureChannel, IntermediateFidelity) {
  // Diagonal mass p + (1-p)/S, off-diagonal (1-p)/S, uniform marginals.
  const double p = 0.7, s = 4.0;
  const double on = p + (1 - p) / s, off = (1 - p) / s;
  const double want = on * std::log2(on * s) + (s - 1) * off * std::log2(off * s);
  EXPECT_NEAR(exact_mi_bits(mixture_channel(4, 0.7)), want, 1e-12);
}

TEST(MixtureChannel, MonotoneInFidelity) {
  double last = -1.0;
  for (double p : {0.0, 0.5, 0.7, 0.9, 1.0}) {
    const double mi = exact_mi_bits(mixture_channel(5, p));
    EXPECT_GT(mi, last);
    last = mi;
  }
}

TEST(Embedding, SeparableSpecIsWellSeparated) {
  const auto spec = EmbeddingSpec::separable(10, 16, 3);
  EXPECT_EQ(spec.symbols(), 10u);
  EXPECT_EQ(spec.dim(), 16u);
  EXPECT_NEAR(spec.noise_sigma, 0.05 * spec.min_pairwise_distance(), 1e-12);
  EXPECT_THROW(EmbeddingSpec::separable(3, 4, 0, 0.2), std::invalid_argument);
}

TEST(Embedding, CustomRejectsDuplicateCentroids) {
  EXPECT_THROW(EmbeddingSpec::custom(MatrixD::Zero(2, 3), 0.1), std::invalid_argument);
  EXPECT_THROW(EmbeddingSpec::custom(MatrixD::Identity(2, 2), -1.0), std::invalid_argument);
}

TEST(Sampling, LabeledSampleCarriesExactMi) {
  const auto joint = mixture_channel(4, 0.7);
  const auto s = sample_labeled(joint, EmbeddingSpec::separable(4, 8, 1), 500, 2);
  EXPECT_EQ(s.features.frames(), 500u);
  EXPECT_EQ(s.labels.num_classes, 4);
  EXPECT_DOUBLE_EQ(s.exact_mi_bits, exact_mi_bits(joint));
  EXPECT_THROW(sample_labeled(joint, EmbeddingSpec::separable(4, 8, 1), 0, 2), std::invalid_argument);
  EXPECT_THROW(sample_labeled(joint, EmbeddingSpec::separable(3, 8, 1), 10, 2), std::invalid_argument);
}

TEST(Sampling, IdentityChannelCopiesSymbols) {
  const auto s = sample_view_pair(mixture_channel(5, 1.0), EmbeddingSpec::separable(5, 4, 1),
                                  EmbeddingSpec::separable(5, 4, 2), 300, 9);
  EXPECT_EQ(s.symbols_a, s.symbols_b);
}

TEST(Sampling, DeterministicPerSeed) {
  const auto joint = mixture_channel(3, 0.5);
  const auto embed = EmbeddingSpec::separable(3, 4, 1);
  EXPECT_EQ(sample_labeled(joint, embed, 100, 5).features, sample_labeled(joint, embed, 100, 5).features);
  EXPECT_FALSE(sample_labeled(joint, embed, 100, 5).features == sample_labeled(joint, embed, 100, 6).features);
}

TEST(Sampling, EmpiricalFrequenciesFollowTheTable) {
  const JointTable joint(table({{0.4, 0.1}, {0.1, 0.4}}));
  const auto s = sample_labeled(joint, EmbeddingSpec::separable(2, 3, 1), 40000, 3);
  double agree = 0;
  for (std::size_t i = 0; i < s.symbols.size(); ++i) agree += s.symbols[i] == s.labels.ids[i];
  EXPECT_NEAR(agree / 40000.0, 0.8, 0.01);
}

}  // namespace
}  // namespace miprobe
