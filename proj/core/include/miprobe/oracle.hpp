#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "miprobe/datamodel.hpp"

namespace miprobe {

/// Discrete joint distribution p(row, col). Entries are >= 0 and sum to 1
/// within 1e-9.
class JointTable {
 public:
  explicit JointTable(MatrixD probs);

  const MatrixD& probs() const { return probs_; }
  std::size_t rows() const { return static_cast<std::size_t>(probs_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(probs_.cols()); }
  Eigen::VectorXd row_marginal() const { return probs_.rowwise().sum(); }
  Eigen::VectorXd col_marginal() const { return probs_.colwise().sum().transpose(); }
  JointTable transposed() const { return JointTable(probs_.transpose()); }

 private:
  MatrixD probs_;
};

/// Shannon entropy in bits of a probability vector; 0 log 0 = 0.
double entropy_bits(const Eigen::VectorXd& probs);

/// sum p(r,c) log2(p(r,c) / (p(r) p(c))).
double exact_mi_bits(const JointTable& joint);

/// Uniform source over `num_symbols`; the output copies the input with
/// probability `fidelity` and is otherwise uniform over all symbols.
JointTable mixture_channel(std::size_t num_symbols, double fidelity);

/// Two independent uniform variables of the given support sizes.
JointTable independent_uniform(std::size_t rows, std::size_t cols);

/// Maps each discrete symbol to a point in R^D with isotropic Gaussian noise.
struct EmbeddingSpec {
  MatrixD centroids;  // S x D, rows pairwise distinct
  double noise_sigma = 0.0;

  std::size_t symbols() const { return static_cast<std::size_t>(centroids.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(centroids.cols()); }
  double min_pairwise_distance() const;

  /// Validates distinct centroids and noise_sigma >= 0.
  static EmbeddingSpec custom(MatrixD centroids, double noise_sigma);

  /// Random well-separated centroids at unit scale with
  /// noise_sigma = sigma_fraction * min pairwise distance. Rejects
  /// sigma_fraction > 0.1 so the spec stays in the separable regime.
  static EmbeddingSpec separable(std::size_t symbols, std::size_t dim, std::uint64_t seed,
                                 double sigma_fraction = 0.05);
};

struct LabeledSample {
  FeatureMatrix features;
  FrameLabels labels;
  std::vector<std::int32_t> symbols;
  double exact_mi_bits = 0.0;
};

/// Draws (y, c) i.i.d. from `joint` (rows = label y, cols = symbol c) and
/// emits feature = centroid_c + noise. Frame i uses its own RNG counters.
LabeledSample sample_labeled(const JointTable& joint, const EmbeddingSpec& embed,
                             std::size_t n_frames, std::uint64_t seed);

struct ViewPairSample {
  FeatureMatrix za;
  FeatureMatrix zb;
  std::vector<std::int32_t> symbols_a;
  std::vector<std::int32_t> symbols_b;
  double exact_mi_bits = 0.0;
};

/// Frame-aligned views: (a, b) drawn from `joint` (rows = A, cols = B),
/// each embedded with its own spec.
ViewPairSample sample_view_pair(const JointTable& joint, const EmbeddingSpec& embed_a,
                                const EmbeddingSpec& embed_b, std::size_t n_frames,
                                std::uint64_t seed);

/// Embeds a given symbol sequence; `stream` separates independent noise draws.
Matrix embed_symbols(const EmbeddingSpec& embed, const std::vector<std::int32_t>& symbols,
                     std::uint64_t seed, std::uint64_t stream);

}  // namespace miprobe
