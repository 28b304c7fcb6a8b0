#include "miprobe/probe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "miprobe/rng.hpp"

namespace miprobe {

namespace {

constexpr std::uint64_t kInitStream = 0x494E4954;     // "INIT"
constexpr std::uint64_t kShuffleStream = 0x53485546;  // "SHUF"
constexpr std::uint64_t kDropoutStream = 0x44524F50;  // "DROP"
constexpr Eigen::Index kEvalChunk = 4096;

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

template <typename S>
struct Params {
  std::vector<Mat<S>> weights;
  std::vector<Vec<S>> biases;
};

template <typename S>
Params<S> params_of(const ProbeModel& model) {
  Params<S> p;
  for (const auto& layer : model.layers) {
    p.weights.push_back(layer.weight.cast<S>());
    p.biases.push_back(layer.bias.cast<S>());
  }
  return p;
}

/// Logits for a batch; `activations` receives each layer's input when non-null.
/// `masks` holds one inverted-dropout mask per hidden layer, or is null.
template <typename S>
Mat<S> forward(const Params<S>& p, const Mat<S>& x, const std::vector<Mat<S>>* masks,
               std::vector<Mat<S>>* activations) {
  Mat<S> a = x;
  const std::size_t n_layers = p.weights.size();
  for (std::size_t l = 0; l < n_layers; ++l) {
    Mat<S> z = a * p.weights[l].transpose();
    z.rowwise() += p.biases[l].transpose();
    if (activations) activations->push_back(std::move(a));
    if (l + 1 < n_layers) {
      z = z.cwiseMax(S(0));
      if (masks) z = z.cwiseProduct((*masks)[l]);
    }
    a = std::move(z);
  }
  return a;
}

template <typename S>
Vec<S> row_logsumexp(const Mat<S>& logits) {
  const Vec<S> max = logits.rowwise().maxCoeff();
  return max.array() + (logits.colwise() - max).array().exp().rowwise().sum().log();
}

/// Mean cross-entropy in nats over the batch; fills `grad` when non-null.
template <typename S>
S loss_and_grad(const Params<S>& p, const Mat<S>& x, std::span<const std::int32_t> targets,
                const std::vector<Mat<S>>* masks, Params<S>* grad) {
  std::vector<Mat<S>> acts;
  const Mat<S> logits = forward(p, x, masks, grad ? &acts : nullptr);
  const Vec<S> lse = row_logsumexp(logits);
  const auto batch = logits.rows();
  S loss = 0;
  for (Eigen::Index i = 0; i < batch; ++i) loss += lse(i) - logits(i, targets[static_cast<std::size_t>(i)]);
  loss /= static_cast<S>(batch);
  if (!grad) return loss;

  Mat<S> dz = (logits.colwise() - lse).array().exp().matrix();
  for (Eigen::Index i = 0; i < batch; ++i) dz(i, targets[static_cast<std::size_t>(i)]) -= S(1);
  dz /= static_cast<S>(batch);

  const std::size_t n_layers = p.weights.size();
  grad->weights.resize(n_layers);
  grad->biases.resize(n_layers);
  for (std::size_t l = n_layers; l-- > 0;) {
    grad->weights[l].noalias() = dz.transpose() * acts[l];
    grad->biases[l] = dz.colwise().sum().transpose();
    if (l == 0) break;
    Mat<S> da = dz * p.weights[l];
    // acts[l] is post-ReLU (and post-dropout); zero there means no gradient.
    da = da.cwiseProduct((acts[l].array() > S(0)).template cast<S>().matrix());
    if (masks) da = da.cwiseProduct((*masks)[l - 1]);
    dz = std::move(da);
  }
  return loss;
}

Mat<float> gather_rows(const Matrix& inputs, std::span<const std::size_t> rows) {
  Mat<float> out(static_cast<Eigen::Index>(rows.size()), inputs.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = inputs.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

void check_features(const ProbeModel& model, const Matrix& features, const char* op) {
  if (model.layers.empty()) throw std::invalid_argument(std::string(op) + ": probe has no layers");
  if (static_cast<std::size_t>(features.cols()) != model.input_dim()) {
    throw std::invalid_argument(std::string(op) + ": feature dim " +
                                std::to_string(features.cols()) + " != probe input dim " +
                                std::to_string(model.input_dim()));
  }
}

void check_targets(std::span<const std::int32_t> targets, std::size_t rows, std::size_t classes,
                   const char* op) {
  if (targets.size() != rows) {
    throw std::invalid_argument(std::string(op) + ": " + std::to_string(targets.size()) +
                                " targets for " + std::to_string(rows) + " frames");
  }
  for (auto t : targets) {
    if (t < 0 || static_cast<std::size_t>(t) >= classes) {
      throw std::invalid_argument(std::string(op) + ": target " + std::to_string(t) +
                                  " outside [0, " + std::to_string(classes) + ")");
    }
  }
}

}  // namespace

std::string to_string(ProbeKind kind) { return kind == ProbeKind::kMlp ? "mlp" : "logistic"; }

ProbeKind parse_probe_kind(const std::string& text) {
  if (text == "logistic") return ProbeKind::kLogistic;
  if (text == "mlp") return ProbeKind::kMlp;
  throw std::invalid_argument("unknown probe kind '" + text + "'");
}

void ProbeConfig::check() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("probe config: learning_rate must be > 0");
  }
  if (epochs < 1) throw std::invalid_argument("probe config: epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("probe config: batch_size must be >= 1");
  if (kind == ProbeKind::kMlp) {
    if (hidden_dim < 1) throw std::invalid_argument("probe config: hidden_dim must be >= 1");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
      throw std::invalid_argument("probe config: dropout_rate must be in [0, 1)");
    }
  }
}

ProbeModel init_probe(std::size_t input_dim, std::size_t num_classes, const ProbeConfig& cfg) {
  cfg.check();
  if (num_classes < 2) {
    throw std::invalid_argument("probe needs at least 2 classes, got " + std::to_string(num_classes));
  }
  if (input_dim < 1) throw std::invalid_argument("probe input dim must be >= 1");

  std::vector<std::size_t> widths{input_dim};
  if (cfg.kind == ProbeKind::kMlp) {
    widths.push_back(cfg.hidden_dim);
    widths.push_back(cfg.hidden_dim);
  }
  widths.push_back(num_classes);

  ProbeModel model;
  model.kind = cfg.kind;
  model.num_classes = num_classes;
  model.config = cfg;
  Rng rng(cfg.seed, kInitStream);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const auto fan_in = widths[l];
    const auto fan_out = widths[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    AffineLayer layer;
    layer.weight.resize(static_cast<Eigen::Index>(fan_out), static_cast<Eigen::Index>(fan_in));
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
        layer.weight(r, c) = static_cast<float>((2.0 * rng.uniform() - 1.0) * limit);
      }
    }
    layer.bias = Eigen::VectorXf::Zero(static_cast<Eigen::Index>(fan_out));
    model.layers.push_back(std::move(layer));
  }
  return model;
}

ProbeModel train_probe(const Matrix& inputs, std::span<const std::int32_t> targets,
                       std::size_t num_classes, const ProbeConfig& cfg) {
  const auto n = static_cast<std::size_t>(inputs.rows());
  if (n < 1) throw std::invalid_argument("train_probe: need at least one frame");
  if (!inputs.allFinite()) throw DataError("train_probe: inputs contain non-finite values");
  check_targets(targets, n, num_classes, "train_probe");

  ProbeModel model = init_probe(static_cast<std::size_t>(inputs.cols()), num_classes, cfg);
  model.initial_train_ce_nats = cross_entropy_nats(model, inputs, targets);

  Params<float> params = params_of<float>(model);
  Params<float> grad;
  const bool use_dropout = cfg.kind == ProbeKind::kMlp && cfg.dropout_rate > 0.0;
  const float keep_scale = static_cast<float>(1.0 / (1.0 - cfg.dropout_rate));
  Rng dropout_rng(cfg.seed, kDropoutStream);
  const auto lr = static_cast<float>(cfg.learning_rate);

  std::vector<std::size_t> order(n);
  std::vector<std::int32_t> batch_targets;
  std::vector<Mat<float>> masks;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(cfg.seed, kShuffleStream + (epoch << 32));
    shuffle_rng.shuffle(std::span<std::size_t>(order));

    for (std::size_t start = 0, batch = 0; start < n; start += cfg.batch_size, ++batch) {
      const std::size_t size = std::min(cfg.batch_size, n - start);
      const std::span<const std::size_t> rows(order.data() + start, size);
      const Mat<float> x = gather_rows(inputs, rows);
      batch_targets.resize(size);
      for (std::size_t i = 0; i < size; ++i) batch_targets[i] = targets[rows[i]];

      if (use_dropout) {
        masks.resize(params.weights.size() - 1);
        for (std::size_t l = 0; l < masks.size(); ++l) {
          auto& m = masks[l];
          m.resize(static_cast<Eigen::Index>(size), params.weights[l].rows());
          for (Eigen::Index i = 0; i < m.size(); ++i) {
            m.data()[i] = dropout_rng.uniform() < cfg.dropout_rate ? 0.0f : keep_scale;
          }
        }
      }

      const float loss = loss_and_grad(params, x, batch_targets, use_dropout ? &masks : nullptr, &grad);
      if (!std::isfinite(loss)) {
        throw std::domain_error("train_probe: non-finite loss at epoch " + std::to_string(epoch) +
                                ", batch " + std::to_string(batch));
      }
      for (std::size_t l = 0; l < params.weights.size(); ++l) {
        params.weights[l].noalias() -= lr * grad.weights[l];
        params.biases[l].noalias() -= lr * grad.biases[l];
      }
    }
  }

  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    if (!params.weights[l].allFinite() || !params.biases[l].allFinite()) {
      throw std::domain_error("train_probe: parameters became non-finite");
    }
    model.layers[l].weight = std::move(params.weights[l]);
    model.layers[l].bias = std::move(params.biases[l]);
  }
  model.final_train_ce_nats = cross_entropy_nats(model, inputs, targets);
  return model;
}

MatrixD predict_log_probs(const ProbeModel& model, const Matrix& features) {
  check_features(model, features, "predict_log_probs");
  const Params<float> params = params_of<float>(model);
  MatrixD out(features.rows(), static_cast<Eigen::Index>(model.num_classes));
  for (Eigen::Index start = 0; start < features.rows(); start += kEvalChunk) {
    const Eigen::Index size = std::min(kEvalChunk, features.rows() - start);
    const Mat<float> x = features.middleRows(start, size);
    const Mat<double> logits = forward<float>(params, x, nullptr, nullptr).cast<double>();
    const Vec<double> lse = row_logsumexp(logits);
    out.middleRows(start, size) = logits.colwise() - lse;
  }
  return out;
}

double cross_entropy_nats(const ProbeModel& model, const Matrix& features,
                          std::span<const std::int32_t> targets) {
  check_features(model, features, "cross_entropy");
  check_targets(targets, static_cast<std::size_t>(features.rows()), model.num_classes, "cross_entropy");
  if (features.rows() == 0) throw std::invalid_argument("cross_entropy: no frames");
  const MatrixD log_probs = predict_log_probs(model, features);
  double total = 0.0;
  for (Eigen::Index i = 0; i < log_probs.rows(); ++i) {
    total -= log_probs(i, targets[static_cast<std::size_t>(i)]);
  }
  return total / static_cast<double>(log_probs.rows());
}

double cross_entropy_bits(const ProbeModel& model, const Matrix& features,
                          std::span<const std::int32_t> targets) {
  return cross_entropy_nats(model, features, targets) / std::numbers::ln2;
}

GradientCheckResult gradient_check(const ProbeModel& model, const Matrix& features,
                                   std::span<const std::int32_t> targets, double epsilon) {
  check_features(model, features, "gradient_check");
  check_targets(targets, static_cast<std::size_t>(features.rows()), model.num_classes, "gradient_check");
  Params<double> params = params_of<double>(model);
  const Mat<double> x = features.cast<double>();

  Params<double> analytic;
  loss_and_grad<double>(params, x, targets, nullptr, &analytic);

  auto numeric_of = [&](auto& tensor) {
    Mat<double> numeric(tensor.rows(), tensor.cols());
    for (Eigen::Index i = 0; i < tensor.size(); ++i) {
      const double saved = tensor.data()[i];
      tensor.data()[i] = saved + epsilon;
      const double up = loss_and_grad<double>(params, x, targets, nullptr, nullptr);
      tensor.data()[i] = saved - epsilon;
      const double down = loss_and_grad<double>(params, x, targets, nullptr, nullptr);
      tensor.data()[i] = saved;
      numeric.data()[i] = (up - down) / (2.0 * epsilon);
    }
    return numeric;
  };
  auto relative = [](const Mat<double>& a, const Mat<double>& b) {
    const double denom = a.norm() + b.norm();
    return denom == 0.0 ? 0.0 : (a - b).norm() / denom;
  };

  GradientCheckResult result;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    result.relative_errors.push_back(relative(analytic.weights[l], numeric_of(params.weights[l])));
    result.relative_errors.push_back(relative(analytic.biases[l], numeric_of(params.biases[l])));
  }
  result.max_relative_error =
      *std::max_element(result.relative_errors.begin(), result.relative_errors.end());
  return result;
}

void store_probe(const ProbeModel& model, const std::filesystem::path& stem) {
  const auto& cfg = model.config;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto prefix = stem.string() + ".l" + std::to_string(l);
    store_feature_matrix(FeatureMatrix(Matrix(model.layers[l].weight)), prefix + ".weight.fmat");
    store_feature_matrix(FeatureMatrix(Matrix(model.layers[l].bias.transpose())), prefix + ".bias.fmat");
  }
  std::ofstream out(stem.string() + ".probe", std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + stem.string() + ".probe for writing");
  out << std::setprecision(17) << "kind=" << to_string(model.kind)
      << " num_classes=" << model.num_classes << " hidden=" << cfg.hidden_dim
      << " dropout=" << cfg.dropout_rate << " lr=" << cfg.learning_rate
      << " epochs=" << cfg.epochs << " batch=" << cfg.batch_size << " seed=" << cfg.seed << "\n";
}

ProbeModel load_probe(const std::filesystem::path& stem) {
  const auto sidecar = stem.string() + ".probe";
  std::ifstream in(sidecar);
  if (!in) throw DataError("cannot open " + sidecar);
  ProbeModel model;
  std::string field;
  int seen = 0;
  while (in >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw DataError(sidecar + ": bad field '" + field + "'");
    const auto key = field.substr(0, eq);
    const auto value = field.substr(eq + 1);
    try {
      if (key == "kind") model.config.kind = parse_probe_kind(value);
      else if (key == "num_classes") model.num_classes = std::stoul(value);
      else if (key == "hidden") model.config.hidden_dim = std::stoul(value);
      else if (key == "dropout") model.config.dropout_rate = std::stod(value);
      else if (key == "lr") model.config.learning_rate = std::stod(value);
      else if (key == "epochs") model.config.epochs = std::stoul(value);
      else if (key == "batch") model.config.batch_size = std::stoul(value);
      else if (key == "seed") model.config.seed = std::stoull(value);
      else continue;
    } catch (const std::exception&) {
      throw DataError(sidecar + ": bad value '" + field + "'");
    }
    ++seen;
  }
  if (seen != 8) throw DataError(sidecar + ": incomplete probe sidecar");
  model.kind = model.config.kind;
  const std::size_t n_layers = model.kind == ProbeKind::kMlp ? 3 : 1;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const auto prefix = stem.string() + ".l" + std::to_string(l);
    AffineLayer layer;
    layer.weight = load_feature_matrix(prefix + ".weight.fmat").values();
    const Matrix bias = load_feature_matrix(prefix + ".bias.fmat").values();
    if (bias.rows() != 1 || bias.cols() != layer.weight.rows()) {
      throw DataError(prefix + ": bias shape does not match weight rows");
    }
    layer.bias = bias.row(0).transpose();
    if (l > 0 && layer.weight.cols() != model.layers.back().weight.rows()) {
      throw DataError(prefix + ": layer widths do not chain");
    }
    model.layers.push_back(std::move(layer));
  }
  if (static_cast<std::size_t>(model.layers.back().weight.rows()) != model.num_classes) {
    throw DataError(sidecar + ": num_classes does not match output layer");
  }
  return model;
}

}  // namespace miprobe
