#include "miprobe/cluster.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "miprobe/rng.hpp"

namespace miprobe {

namespace {

constexpr std::uint64_t kInitStream = 0x4B4D;  // "KM"

double squared_distance(const Matrix& a, Eigen::Index ra, const MatrixD& b, Eigen::Index rb) {
  double d = 0.0;
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    const double diff = static_cast<double>(a(ra, c)) - b(rb, c);
    d += diff * diff;
  }
  return d;
}

struct Nearest {
  std::int32_t id;
  double distance;
};

Nearest nearest(const Matrix& data, Eigen::Index row, const MatrixD& centroids) {
  Nearest best{0, std::numeric_limits<double>::infinity()};
  for (Eigen::Index j = 0; j < centroids.rows(); ++j) {
    const double d = squared_distance(data, row, centroids, j);
    if (d < best.distance) best = {static_cast<std::int32_t>(j), d};
  }
  return best;
}

/// D^2 sampling: index whose cumulative weight first exceeds `target`.
Eigen::Index sample_weighted(const std::vector<double>& weights, double target) {
  double acc = 0.0;
  Eigen::Index last_positive = -1;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last_positive = static_cast<Eigen::Index>(i);
    if (acc > target) return last_positive;
  }
  return last_positive;  // target fell past the end through rounding
}

/// Greedy k-means++: each step draws 2 + floor(ln k) D^2-weighted candidates
/// and keeps the one that most reduces the potential.
MatrixD kmeans_plus_plus(const Matrix& data, std::size_t k, Rng& rng) {
  const auto n = data.rows();
  const std::size_t trials = 2 + static_cast<std::size_t>(std::log(static_cast<double>(k)));
  MatrixD centroids(static_cast<Eigen::Index>(k), data.cols());
  std::vector<double> closest(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  std::vector<double> candidate_closest(closest.size());
  std::vector<double> best_closest(closest.size());

  Eigen::Index pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
  centroids.row(0) = data.row(pick).cast<double>();
  double potential = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    closest[static_cast<std::size_t>(i)] = squared_distance(data, i, centroids, 0);
    potential += closest[static_cast<std::size_t>(i)];
  }

  for (std::size_t j = 1; j < k; ++j) {
    const auto row = static_cast<Eigen::Index>(j);
    if (potential <= 0.0) {
      // Every point coincides with a chosen centroid; any point will do.
      centroids.row(row) = data.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)))).cast<double>();
      continue;
    }
    double best_potential = std::numeric_limits<double>::infinity();
    Eigen::Index best = -1;
    for (std::size_t t = 0; t < trials; ++t) {
      const Eigen::Index candidate = sample_weighted(closest, rng.uniform() * potential);
      centroids.row(row) = data.row(candidate).cast<double>();
      double candidate_potential = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto u = static_cast<std::size_t>(i);
        candidate_closest[u] = std::min(closest[u], squared_distance(data, i, centroids, row));
        candidate_potential += candidate_closest[u];
      }
      if (candidate_potential < best_potential) {
        best_potential = candidate_potential;
        best = candidate;
        best_closest.swap(candidate_closest);
      }
    }
    centroids.row(row) = data.row(best).cast<double>();
    closest.swap(best_closest);
    potential = best_potential;
  }
  return centroids;
}

}  // namespace

double inertia_of(const Matrix& data, const MatrixD& centroids, const std::vector<std::int32_t>& ids) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    total += squared_distance(data, i, centroids, ids[static_cast<std::size_t>(i)]);
  }
  return total;
}

KMeansModel fit_kmeans(const Matrix& data, const KMeansOptions& options) {
  const std::size_t k = options.k;
  const auto n = static_cast<std::size_t>(data.rows());
  if (k == 0) throw std::invalid_argument("fit_kmeans: k must be >= 1");
  if (n < k) {
    throw std::invalid_argument("fit_kmeans: need at least k=" + std::to_string(k) +
                                " points, got " + std::to_string(n));
  }
  if (!data.allFinite()) throw DataError("fit_kmeans: data contains non-finite values");

  Rng rng(options.seed, kInitStream);
  KMeansModel model;
  model.k = k;
  model.seed = options.seed;
  model.centroids = kmeans_plus_plus(data, k, rng);

  std::vector<std::int32_t> ids(n, -1);
  std::vector<double> dist(n, 0.0);
  MatrixD sums(static_cast<Eigen::Index>(k), data.cols());
  std::vector<std::size_t> counts(k);

  for (std::size_t iter = 0; iter < options.max_iter; ++iter) {
    bool changed = false;
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto best = nearest(data, static_cast<Eigen::Index>(i), model.centroids);
      changed |= best.id != ids[i];
      ids[i] = best.id;
      dist[i] = best.distance;
      inertia += best.distance;
    }
    model.inertia_history.push_back(inertia);
    model.iterations_run = iter + 1;
    if (!changed) break;

    sums.setZero();
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums.row(ids[i]) += data.row(static_cast<Eigen::Index>(i)).cast<double>();
      ++counts[static_cast<std::size_t>(ids[i])];
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (counts[j] > 0) {
        model.centroids.row(static_cast<Eigen::Index>(j)) =
            sums.row(static_cast<Eigen::Index>(j)) / static_cast<double>(counts[j]);
        continue;
      }
      // Empty cluster: move it onto the worst-served point.
      std::size_t far = 0;
      for (std::size_t i = 1; i < n; ++i) {
        if (dist[i] > dist[far]) far = i;
      }
      model.centroids.row(static_cast<Eigen::Index>(j)) =
          data.row(static_cast<Eigen::Index>(far)).cast<double>();
      dist[far] = 0.0;
    }
  }

  const auto final_ids = assign(model, data);
  model.inertia = inertia_of(data, model.centroids, final_ids);
  model.inertia_history.push_back(model.inertia);
  return model;
}

std::vector<std::int32_t> assign(const KMeansModel& model, const Matrix& features) {
  if (features.cols() != model.centroids.cols()) {
    throw std::invalid_argument("assign: feature dim " + std::to_string(features.cols()) +
                                " != centroid dim " + std::to_string(model.centroids.cols()));
  }
  std::vector<std::int32_t> ids(static_cast<std::size_t>(features.rows()));
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    ids[static_cast<std::size_t>(i)] = nearest(features, i, model.centroids).id;
  }
  return ids;
}

void store_kmeans(const KMeansModel& model, const std::filesystem::path& stem) {
  auto fmat = stem;
  fmat += ".fmat";
  store_feature_matrix(FeatureMatrix(model.centroids.cast<float>()), fmat);
  auto sidecar = stem;
  sidecar += ".kmeans";
  std::ofstream out(sidecar, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + sidecar.string() + " for writing");
  out << "k=" << model.k << " seed=" << model.seed << " inertia=" << std::setprecision(17)
      << model.inertia << "\n";
}

KMeansModel load_kmeans(const std::filesystem::path& stem) {
  auto fmat = stem;
  fmat += ".fmat";
  auto sidecar = stem;
  sidecar += ".kmeans";
  KMeansModel model;
  model.centroids = load_feature_matrix(fmat).values().cast<double>();
  std::ifstream in(sidecar);
  if (!in) throw DataError("cannot open " + sidecar.string());
  std::string field;
  int seen = 0;
  while (in >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw DataError(sidecar.string() + ": bad field '" + field + "'");
    const auto key = field.substr(0, eq);
    const auto value = field.substr(eq + 1);
    try {
      if (key == "k") {
        model.k = std::stoul(value);
      } else if (key == "seed") {
        model.seed = std::stoull(value);
      } else if (key == "inertia") {
        model.inertia = std::stod(value);
      } else {
        continue;
      }
    } catch (const std::exception&) {
      throw DataError(sidecar.string() + ": bad value '" + field + "'");
    }
    ++seen;
  }
  if (seen != 3) throw DataError(sidecar.string() + ": expected k, seed and inertia");
  if (model.k != static_cast<std::size_t>(model.centroids.rows())) {
    throw DataError(sidecar.string() + ": k does not match centroid rows");
  }
  return model;
}

}  // namespace miprobe
