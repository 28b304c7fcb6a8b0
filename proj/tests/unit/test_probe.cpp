#include <cmath>

#include <gtest/gtest.h>

#include "miprobe/probe.hpp"
#include "test_support.hpp"

namespace miprobe {
namespace {

ProbeConfig logistic_config() { return ProbeConfig{}; }

ProbeConfig mlp_config(std::size_t hidden = 16) {
  ProbeConfig cfg;
  cfg.kind = ProbeKind::kMlp;
  cfg.hidden_dim = hidden;
  return cfg;
}

std::vector<std::int32_t> ids_mod(std::size_t n, int classes) {
  std::vector<std::int32_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<std::int32_t>(i % classes);
  return out;
}

TEST(Probe, InitShapes) {
  const auto lin = init_probe(7, 3, logistic_config());
  ASSERT_EQ(lin.layers.size(), 1u);
  EXPECT_EQ(lin.layers[0].weight.rows(), 3);
  EXPECT_EQ(lin.layers[0].weight.cols(), 7);
  const auto mlp = init_probe(7, 3, mlp_config(11));
  ASSERT_EQ(mlp.layers.size(), 3u);
  EXPECT_EQ(mlp.layers[0].weight.rows(), 11);
  EXPECT_EQ(mlp.layers[1].weight.rows(), 11);
  EXPECT_EQ(mlp.layers[2].weight.rows(), 3);
  for (const auto& l : mlp.layers) EXPECT_TRUE(l.bias.isZero());
  const float limit = std::sqrt(6.0f / (7 + 11));
  EXPECT_LE(mlp.layers[0].weight.cwiseAbs().maxCoeff(), limit);
}

TEST(Probe, RejectsSingleClass) {
  EXPECT_THROW(init_probe(3, 1, logistic_config()), std::invalid_argument);
  EXPECT_THROW(train_probe(test::gaussian(10, 3, 0), std::vector<std::int32_t>(10, 0), 1, logistic_config()),
               std::invalid_argument);
}

TEST(Probe, ConfigChecks) {
  auto bad = logistic_config();
  bad.learning_rate = 0.0;
  EXPECT_THROW(bad.check(), std::invalid_argument);
  bad = mlp_config();
  bad.dropout_rate = 1.0;
  EXPECT_THROW(bad.check(), std::invalid_argument);
  bad = logistic_config();
  bad.batch_size = 0;
  EXPECT_THROW(bad.check(), std::invalid_argument);
}

TEST(Probe, ZeroWeightsGiveUniformRows) {
  auto model = init_probe(5, 4, logistic_config());
  model.layers[0].weight.setZero();
  const auto logp = predict_log_probs(model, test::gaussian(6, 5, 1));
  EXPECT_LT((logp.array() - std::log(0.25)).abs().maxCoeff(), 1e-12);
  EXPECT_NEAR(cross_entropy_bits(model, test::gaussian(6, 5, 1), ids_mod(6, 4)), 2.0, 1e-9);
}

TEST(Probe, HalfProbabilityIsOneBit) {
  auto model = init_probe(3, 2, logistic_config());
  model.layers[0].weight.setZero();
  EXPECT_NEAR(cross_entropy_bits(model, test::gaussian(9, 3, 2), ids_mod(9, 2)), 1.0, 1e-9);
}

TEST(Probe, LargeScaleWeightsGiveOneHotRows) {
  auto model = init_probe(2, 2, logistic_config());
  model.layers[0].weight << 1000, 0, -1000, 0;
  Matrix x(2, 2);
  x << 1, 0, -1, 0;
  const auto logp = predict_log_probs(model, x);
  EXPECT_GT(std::exp(logp(0, 0)), 0.999);
  EXPECT_GT(std::exp(logp(1, 1)), 0.999);
  EXPECT_NEAR(cross_entropy_bits(model, x, std::vector<std::int32_t>{0, 1}), 0.0, 1e-9);
}

TEST(Probe, LearnsSeparableTwoClassData) {
  Matrix x = test::gaussian(2000, 2, 4, 0.3);
  std::vector<std::int32_t> y(2000);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    y[i] = static_cast<std::int32_t>(i % 2);
    x(i, 0) += y[i] ? 3.0f : -3.0f;
  }
  const auto model = train_probe(x, y, 2, logistic_config());
  EXPECT_LT(model.final_train_ce_nats, 0.1);
  EXPECT_LT(model.final_train_ce_nats, model.initial_train_ce_nats);
}

TEST(Probe, TrainingIsDeterministicPerSeed) {
  const auto x = test::gaussian(700, 4, 5);
  const auto y = ids_mod(700, 3);
  auto cfg = mlp_config();
  cfg.seed = 42;
  cfg.epochs = 3;
  const auto a = train_probe(x, y, 3, cfg);
  const auto b = train_probe(x, y, 3, cfg);
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    EXPECT_EQ(a.layers[l].weight, b.layers[l].weight);
    EXPECT_EQ(a.layers[l].bias, b.layers[l].bias);
  }
  cfg.seed = 43;
  EXPECT_NE(train_probe(x, y, 3, cfg).layers[0].weight, a.layers[0].weight);
}

TEST(Probe, DivergenceNamesEpochAndBatch) {
  Matrix x = test::gaussian(64, 3, 6, 1e18);
  auto cfg = logistic_config();
  cfg.learning_rate = 1e30;
  try {
    train_probe(x, ids_mod(64, 2), 2, cfg);
    FAIL() << "expected domain_error";
  } catch (const std::domain_error& e) {
    EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos) << e.what();
  }
}

TEST(Probe, DimensionMismatch) {
  const auto model = init_probe(4, 2, logistic_config());
  EXPECT_THROW(predict_log_probs(model, test::gaussian(3, 5, 0)), std::invalid_argument);
  EXPECT_THROW(cross_entropy_bits(model, test::gaussian(3, 4, 0), ids_mod(2, 2)), std::invalid_argument);
}

TEST(GradientCheck, LogisticRandomInstances) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    auto cfg = logistic_config();
    cfg.seed = s;
    const auto model = init_probe(6, 4, cfg);
    const auto r = gradient_check(model, test::gaussian(32, 6, 10 + s), ids_mod(32, 4));
    EXPECT_LT(r.max_relative_error, 1e-4) << "instance " << s;
    EXPECT_EQ(r.relative_errors.size(), 2u);
  }
}

TEST(GradientCheck, MlpRandomInstances) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    auto cfg = mlp_config(9);
    cfg.seed = s;
    const auto model = init_probe(5, 3, cfg);
    const auto r = gradient_check(model, test::gaussian(32, 5, 20 + s), ids_mod(32, 3));
    EXPECT_LT(r.max_relative_error, 1e-4) << "instance " << s;
    EXPECT_EQ(r.relative_errors.size(), 6u);
  }
}

TEST(GradientCheck, ZeroInputsGiveZeroFirstLayerGradient) {
  // Only the first weight tensor is checked for the MLP: perturbing a zero
  // bias crosses the ReLU kink, where finite differences are meaningless.
  const auto mlp = init_probe(4, 3, mlp_config(5));
  EXPECT_EQ(gradient_check(mlp, Matrix::Zero(16, 4), ids_mod(16, 3)).relative_errors[0], 0.0);
  const auto lin = init_probe(4, 3, logistic_config());
  const auto r = gradient_check(lin, Matrix::Zero(16, 4), ids_mod(16, 3));
  EXPECT_EQ(r.relative_errors[0], 0.0);
  EXPECT_LT(r.max_relative_error, 1e-4);
}

TEST(Probe, StoreLoadRoundTrip) {
  test::ScratchDir dir;
  auto cfg = mlp_config(6);
  cfg.epochs = 2;
  const auto x = test::gaussian(100, 3, 7);
  const auto model = train_probe(x, ids_mod(100, 2), 2, cfg);
  store_probe(model, dir.path() / "p");
  const auto loaded = load_probe(dir.path() / "p");
  EXPECT_EQ(loaded.kind, ProbeKind::kMlp);
  EXPECT_EQ(loaded.num_classes, 2u);
  EXPECT_EQ(loaded.config.hidden_dim, 6u);
  EXPECT_EQ(predict_log_probs(loaded, x), predict_log_probs(model, x));
}

}  // namespace
}  // namespace miprobe
