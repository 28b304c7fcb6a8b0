#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "miprobe/datamodel.hpp"

namespace miprobe {

enum class ProbeKind { kLogistic, kMlp };

std::string to_string(ProbeKind kind);
ProbeKind parse_probe_kind(const std::string& text);

struct ProbeConfig {
  ProbeKind kind = ProbeKind::kLogistic;
  std::size_t hidden_dim = 512;  // mlp only
  double dropout_rate = 0.1;     // mlp only, training only
  double learning_rate = 0.1;
  std::size_t epochs = 10;
  std::size_t batch_size = 256;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument on lr <= 0, epochs == 0, batch == 0,
  /// dropout outside [0, 1) or hidden == 0 for an MLP.
  void check() const;
};

/// y = W x + b with W stored out x in.
struct AffineLayer {
  Eigen::MatrixXf weight;
  Eigen::VectorXf bias;
};

/// Trained auxiliary classifier q(y | z). Logistic probes hold one layer
/// (D -> C); MLP probes hold three (D -> H -> H -> C) with ReLU after the
/// first two.
struct ProbeModel {
  ProbeKind kind = ProbeKind::kLogistic;
  std::size_t num_classes = 0;
  std::vector<AffineLayer> layers;
  ProbeConfig config;
  /// Mean training cross-entropy (nats) before the first and after the last update.
  double initial_train_ce_nats = 0.0;
  double final_train_ce_nats = 0.0;

  std::size_t input_dim() const { return static_cast<std::size_t>(layers.front().weight.cols()); }
};

/// Freshly initialized parameters: weights uniform in +-sqrt(6 / (fan_in + fan_out)),
/// zero biases.
ProbeModel init_probe(std::size_t input_dim, std::size_t num_classes, const ProbeConfig& cfg);

/// Minibatch SGD on mean cross-entropy. Minibatch order per epoch depends
/// only on (cfg.seed, epoch). Throws std::domain_error naming the epoch and
/// batch if the loss becomes non-finite.
ProbeModel train_probe(const Matrix& inputs, std::span<const std::int32_t> targets,
                       std::size_t num_classes, const ProbeConfig& cfg);

/// T x C log-softmax rows, evaluated without dropout.
MatrixD predict_log_probs(const ProbeModel& model, const Matrix& features);

/// Mean over frames of -log q(target | feature), in nats.
double cross_entropy_nats(const ProbeModel& model, const Matrix& features,
                          std::span<const std::int32_t> targets);

/// cross_entropy_nats / ln 2.
double cross_entropy_bits(const ProbeModel& model, const Matrix& features,
                          std::span<const std::int32_t> targets);

struct GradientCheckResult {
  /// Per tensor, in layer order: weight then bias.
  std::vector<double> relative_errors;
  double max_relative_error = 0.0;
};

/// Compares analytic gradients of mean cross-entropy (dropout off, double
/// precision) with central finite differences. The relative error of a
/// tensor is ||analytic - numeric|| / (||analytic|| + ||numeric||), taken as
/// 0 when both gradients vanish.
GradientCheckResult gradient_check(const ProbeModel& model, const Matrix& features,
                                   std::span<const std::int32_t> targets, double epsilon = 1e-4);

/// Parameter tensors as `<stem>.l<i>.weight.fmat` / `<stem>.l<i>.bias.fmat`
/// plus a `<stem>.probe` sidecar holding the config.
void store_probe(const ProbeModel& model, const std::filesystem::path& stem);
ProbeModel load_probe(const std::filesystem::path& stem);

}  // namespace miprobe
