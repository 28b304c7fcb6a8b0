#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "miprobe/datamodel.hpp"

namespace miprobe {

/// Fitted k-means quantizer. Immutable after fit_kmeans returns.
struct KMeansModel {
  MatrixD centroids;  // K x D
  std::size_t k = 0;
  double inertia = 0.0;
  std::size_t iterations_run = 0;
  std::uint64_t seed = 0;
  /// Inertia measured after each assignment step, plus the final value.
  std::vector<double> inertia_history;

  std::size_t dim() const { return static_cast<std::size_t>(centroids.cols()); }
};

struct KMeansOptions {
  std::size_t k = 50;
  std::size_t max_iter = 100;
  std::uint64_t seed = 0;
};

/// Lloyd's algorithm from a seeded (greedy) k-means++ start. Stops after max_iter
/// assignment steps or when an assignment step changes nothing. A cluster
/// that loses all members is re-seeded at the point farthest from its
/// nearest centroid, so K stays fixed.
KMeansModel fit_kmeans(const Matrix& data, const KMeansOptions& options);

/// Nearest centroid by squared Euclidean distance; ties go to the lowest index.
std::vector<std::int32_t> assign(const KMeansModel& model, const Matrix& features);

/// Sum of squared distances from each row to its assigned centroid.
double inertia_of(const Matrix& data, const MatrixD& centroids, const std::vector<std::int32_t>& ids);

/// Centroids (rounded to float32) as `<stem>.fmat` plus a `<stem>.kmeans` sidecar "k=<k> seed=<s> inertia=<v>".
void store_kmeans(const KMeansModel& model, const std::filesystem::path& stem);
KMeansModel load_kmeans(const std::filesystem::path& stem);

}  // namespace miprobe
