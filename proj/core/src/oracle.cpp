#include "miprobe/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <tuple>

#include <Eigen/QR>

#include "miprobe/rng.hpp"

namespace miprobe {

namespace {

constexpr std::uint64_t kPairStream = 1;
constexpr std::uint64_t kNoiseStreamA = 2;
constexpr std::uint64_t kNoiseStreamB = 3;
constexpr std::uint64_t kCentroidStream = 4;

/// Flattened (row-major) index drawn by inverse CDF.
std::size_t draw_cell(const std::vector<double>& cdf, double u) {
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  if (it == cdf.end()) --it;
  return static_cast<std::size_t>(it - cdf.begin());
}

std::vector<std::pair<std::int32_t, std::int32_t>> draw_pairs(const JointTable& joint,
                                                              std::size_t n, std::uint64_t seed) {
  const auto& p = joint.probs();
  std::vector<double> cdf(static_cast<std::size_t>(p.size()));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    acc += p.data()[i];
    cdf[static_cast<std::size_t>(i)] = acc;
  }
  // Normalize away rounding so the last cell ends at exactly 1.
  for (auto& c : cdf) c /= acc;

  const CounterRng rng(seed, kPairStream);
  std::vector<std::pair<std::int32_t, std::int32_t>> out(n);
  const auto cols = static_cast<std::size_t>(p.cols());
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t cell = draw_cell(cdf, rng.uniform(i));
    // Zero-probability cells share their CDF value with the next cell.
    while (p.data()[cell] == 0.0 && cell + 1 < cdf.size()) ++cell;
    out[i] = {static_cast<std::int32_t>(cell / cols), static_cast<std::int32_t>(cell % cols)};
  }
  return out;
}

}  // namespace

JointTable::JointTable(MatrixD probs) : probs_(std::move(probs)) {
  if (probs_.size() == 0) throw std::invalid_argument("joint table must be non-empty");
  if (!probs_.allFinite() || (probs_.array() < 0.0).any()) {
    throw std::invalid_argument("joint table entries must be finite and >= 0");
  }
  if (std::abs(probs_.sum() - 1.0) > 1e-9) {
    throw std::invalid_argument("joint table must sum to 1 (got " + std::to_string(probs_.sum()) + ")");
  }
}

double entropy_bits(const Eigen::VectorXd& probs) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    if (probs(i) > 0.0) h -= probs(i) * std::log2(probs(i));
  }
  return h;
}

double exact_mi_bits(const JointTable& joint) {
  const auto& p = joint.probs();
  const Eigen::VectorXd pr = joint.row_marginal();
  const Eigen::VectorXd pc = joint.col_marginal();
  double mi = 0.0;
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    for (Eigen::Index c = 0; c < p.cols(); ++c) {
      const double v = p(r, c);
      if (v > 0.0) mi += v * std::log2(v / (pr(r) * pc(c)));
    }
  }
  // Rounding can leave -1e-17 for independent tables.
  return std::max(mi, 0.0);
}

JointTable mixture_channel(std::size_t num_symbols, double fidelity) {
  if (num_symbols < 2) throw std::invalid_argument("mixture_channel: need at least 2 symbols");
  if (!(fidelity >= 0.0 && fidelity <= 1.0)) {
    throw std::invalid_argument("mixture_channel: fidelity must be in [0, 1]");
  }
  const auto s = static_cast<double>(num_symbols);
  const auto n = static_cast<Eigen::Index>(num_symbols);
  MatrixD probs = MatrixD::Constant(n, n, (1.0 - fidelity) / (s * s));
  probs.diagonal().array() += fidelity / s;
  return JointTable(std::move(probs));
}

JointTable independent_uniform(std::size_t rows, std::size_t cols) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("independent_uniform: empty support");
  return JointTable(MatrixD::Constant(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols),
                                      1.0 / static_cast<double>(rows * cols)));
}

double EmbeddingSpec::min_pairwise_distance() const {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < centroids.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < centroids.rows(); ++j) {
      best = std::min(best, (centroids.row(i) - centroids.row(j)).norm());
    }
  }
  return best;
}

EmbeddingSpec EmbeddingSpec::custom(MatrixD centroids, double noise_sigma) {
  if (centroids.rows() < 1 || centroids.cols() < 1) {
    throw std::invalid_argument("embedding: need at least one centroid of dim >= 1");
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw std::invalid_argument("embedding: noise_sigma must be finite and >= 0");
  }
  EmbeddingSpec spec{std::move(centroids), noise_sigma};
  if (spec.symbols() > 1 && !(spec.min_pairwise_distance() > 0.0)) {
    throw std::invalid_argument("embedding: centroids must be pairwise distinct");
  }
  return spec;
}

EmbeddingSpec EmbeddingSpec::separable(std::size_t symbols, std::size_t dim, std::uint64_t seed,
                                       double sigma_fraction) {
  if (symbols < 1 || dim < 1) throw std::invalid_argument("embedding: empty shape");
  if (!(sigma_fraction >= 0.0 && sigma_fraction <= 0.1)) {
    throw std::invalid_argument("embedding: separable specs need sigma <= min distance / 10");
  }
  Rng rng(seed, kCentroidStream);
  const auto d = static_cast<Eigen::Index>(dim);
  const auto s = static_cast<Eigen::Index>(symbols);
  MatrixD centroids(s, d);
  if (dim >= symbols) {
    // Orthonormal directions: all pairwise distances equal sqrt(2).
    Eigen::MatrixXd g(d, d);
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = rng.gaussian();
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
    centroids = q.leftCols(s).transpose();
  } else {
    for (Eigen::Index i = 0; i < centroids.size(); ++i) {
      centroids.data()[i] = rng.gaussian() / std::sqrt(static_cast<double>(dim));
    }
  }
  EmbeddingSpec spec = custom(std::move(centroids), 0.0);
  spec.noise_sigma = symbols > 1 ? sigma_fraction * spec.min_pairwise_distance() : sigma_fraction;
  return spec;
}

Matrix embed_symbols(const EmbeddingSpec& embed, const std::vector<std::int32_t>& symbols,
                     std::uint64_t seed, std::uint64_t stream) {
  const auto d = static_cast<Eigen::Index>(embed.dim());
  const auto per_frame = static_cast<std::uint64_t>((d + 1) / 2);
  const CounterRng noise(seed, stream);
  Matrix out(static_cast<Eigen::Index>(symbols.size()), d);
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    const auto sym = symbols[i];
    if (sym < 0 || static_cast<std::size_t>(sym) >= embed.symbols()) {
      throw std::invalid_argument("embed_symbols: symbol " + std::to_string(sym) + " outside embedding");
    }
    const auto row = static_cast<Eigen::Index>(i);
    for (Eigen::Index j = 0; j < d; j += 2) {
      const auto [g0, g1] = noise.gaussian_pair(i * per_frame + static_cast<std::uint64_t>(j / 2));
      out(row, j) = static_cast<float>(embed.centroids(sym, j) + embed.noise_sigma * g0);
      if (j + 1 < d) out(row, j + 1) = static_cast<float>(embed.centroids(sym, j + 1) + embed.noise_sigma * g1);
    }
  }
  return out;
}

LabeledSample sample_labeled(const JointTable& joint, const EmbeddingSpec& embed,
                             std::size_t n_frames, std::uint64_t seed) {
  if (n_frames == 0) throw std::invalid_argument("sample_labeled: n_frames must be >= 1");
  if (embed.symbols() != joint.cols()) {
    throw std::invalid_argument("sample_labeled: embedding has " + std::to_string(embed.symbols()) +
                                " centroids, joint has " + std::to_string(joint.cols()) + " columns");
  }
  const auto pairs = draw_pairs(joint, n_frames, seed);
  FrameLabels labels;
  labels.num_classes = static_cast<int>(joint.rows());
  std::vector<std::int32_t> symbols(n_frames);
  labels.ids.resize(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    labels.ids[i] = pairs[i].first;
    symbols[i] = pairs[i].second;
  }
  FeatureMatrix features(embed_symbols(embed, symbols, seed, kNoiseStreamA));
  return {std::move(features), std::move(labels), std::move(symbols), exact_mi_bits(joint)};
}

ViewPairSample sample_view_pair(const JointTable& joint, const EmbeddingSpec& embed_a,
                                const EmbeddingSpec& embed_b, std::size_t n_frames,
                                std::uint64_t seed) {
  if (n_frames == 0) throw std::invalid_argument("sample_view_pair: n_frames must be >= 1");
  if (embed_a.symbols() != joint.rows() || embed_b.symbols() != joint.cols()) {
    throw std::invalid_argument("sample_view_pair: embeddings do not match joint table shape");
  }
  const auto pairs = draw_pairs(joint, n_frames, seed);
  std::vector<std::int32_t> a(n_frames);
  std::vector<std::int32_t> b(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) std::tie(a[i], b[i]) = pairs[i];
  FeatureMatrix za(embed_symbols(embed_a, a, seed, kNoiseStreamA));
  FeatureMatrix zb(embed_symbols(embed_b, b, seed, kNoiseStreamB));
  return {std::move(za), std::move(zb), std::move(a), std::move(b), exact_mi_bits(joint)};
}

}  // namespace miprobe
