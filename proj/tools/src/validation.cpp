#include "miprobe/cli/validation.hpp"

#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

#include "miprobe/cli/commands.hpp"
#include "miprobe/cli/synth.hpp"
#include "miprobe/cluster.hpp"
#include "miprobe/oracle.hpp"
#include "miprobe/rng.hpp"

namespace miprobe::cli {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::size_t kEmbedDim = 16;

std::uint64_t derive_seed(std::uint64_t seed, int check, std::uint64_t role) {
  return mix64(seed ^ mix64(static_cast<std::uint64_t>(check) * 0x100 + role));
}

/// Scratch directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("miprobe-validate-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

LabeledFrames to_frames(const LabeledSample& s, std::size_t num_classes) {
  return {s.features.values(), s.labels.ids, num_classes};
}

PairedFrames to_pairs(const ViewPairSample& s) { return {s.za.values(), s.zb.values()}; }

ProbeConfig probe_config(ProbeKind kind) {
  ProbeConfig cfg;
  cfg.kind = kind;
  return cfg;
}

MIEstimate supervised_estimate(const JointTable& joint, const EmbeddingSpec& embed, std::size_t n,
                               std::uint64_t fit_seed, std::uint64_t eval_seed, ProbeKind kind,
                               std::size_t threads) {
  const auto fit = to_frames(sample_labeled(joint, embed, n, fit_seed), joint.rows());
  const auto eval = to_frames(sample_labeled(joint, embed, n, eval_seed), joint.rows());
  return run_seeded(
      [&](std::uint64_t seed) {
        auto cfg = probe_config(kind);
        cfg.seed = seed;
        return supervised_lower_bound(fit, eval, cfg);
      },
      kDefaultSeeds, threads);
}

MIEstimate unsupervised_estimate(const JointTable& joint, const EmbeddingSpec& embed_a,
                                 const EmbeddingSpec& embed_b, std::size_t k, std::size_t n,
                                 std::uint64_t fit_seed, std::uint64_t eval_seed, ProbeKind kind,
                                 std::size_t threads) {
  const auto fit = to_pairs(sample_view_pair(joint, embed_a, embed_b, n, fit_seed));
  const auto eval = to_pairs(sample_view_pair(joint, embed_a, embed_b, n, eval_seed));
  const ClusterConfig cluster{k, 100};
  return run_seeded(
      [&](std::uint64_t seed) {
        auto cfg = probe_config(kind);
        cfg.seed = seed;
        return unsupervised_lower_bound(fit, eval, cluster, cfg);
      },
      kDefaultSeeds, threads);
}

bool within(double value, double target, const ValidationScale& s) {
  return value >= target - s.lower_tolerance && value <= target + s.upper_tolerance;
}

Matrix gaussian_matrix(Rng& rng, std::size_t rows, std::size_t cols, double scale) {
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = static_cast<float>(scale * rng.gaussian());
  }
  return m;
}

std::vector<std::int32_t> random_ids(Rng& rng, std::size_t n, std::size_t classes) {
  std::vector<std::int32_t> ids(n);
  for (auto& id : ids) id = static_cast<std::int32_t>(rng.below(classes));
  return ids;
}

}  // namespace

nlohmann::json to_json(const ValidationOptions& o) { return {{"quick", o.quick}, {"seed", o.seed}}; }

ValidationOptions validation_options_from_json(const nlohmann::json& j) {
  ValidationOptions o;
  o.quick = j.at("quick").get<bool>();
  o.seed = j.at("seed").get<std::uint64_t>();
  return o;
}

ValidationScale ValidationScale::from(const ValidationOptions& o) {
  if (o.quick) return {5000, 0.15, 0.15, 0.15, 0.15};
  return {50000, 0.05, 0.02, 0.05, 0.05};
}

CheckResult check_exact_mi() {
  CheckResult r{1, "exact_mi_oracle"};
  MatrixD uniform(2, 2), diag(2, 2), noisy(2, 2);
  uniform << 0.25, 0.25, 0.25, 0.25;
  diag << 0.5, 0.0, 0.0, 0.5;
  noisy << 0.4, 0.1, 0.1, 0.4;
  const double got[] = {exact_mi_bits(JointTable(uniform)), exact_mi_bits(JointTable(diag)),
                        exact_mi_bits(JointTable(noisy))};
  const double want[] = {0.0, 1.0, 0.278072};
  r.passed = true;
  for (int i = 0; i < 3; ++i) r.passed = r.passed && std::abs(got[i] - want[i]) <= 1e-6;
  r.observed = {{"independent", got[0]}, {"identity", got[1]}, {"noisy", got[2]}};
  return r;
}

CheckResult check_supervised_recovery(const ValidationOptions& o, std::size_t threads) {
  CheckResult r{2, "supervised_recovery"};
  const auto scale = ValidationScale::from(o);
  const auto start = Clock::now();
  const auto joint = mixture_channel(10, 1.0);
  const auto embed = EmbeddingSpec::separable(10, kEmbedDim, derive_seed(o.seed, 2, 0));
  const auto est = supervised_estimate(joint, embed, scale.frames, derive_seed(o.seed, 2, 1),
                                       derive_seed(o.seed, 2, 2), ProbeKind::kMlp, threads);
  const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
  const double target = std::log2(10.0);
  r.passed = within(est.value_bits, target, scale) && seconds < 120.0;
  r.observed = {{"mean_bits", est.value_bits}, {"target_bits", target}, {"within_time_budget", seconds < 120.0}};
  return r;
}

MIEstimate unsupervised_identity_estimate(const ValidationOptions& o, std::size_t threads) {
  const auto scale = ValidationScale::from(o);
  const auto joint = mixture_channel(5, 1.0);
  const auto embed_a = EmbeddingSpec::separable(5, kEmbedDim, derive_seed(o.seed, 3, 0));
  const auto embed_b = EmbeddingSpec::separable(5, kEmbedDim, derive_seed(o.seed, 3, 1));
  return unsupervised_estimate(joint, embed_a, embed_b, 5, scale.frames, derive_seed(o.seed, 3, 2),
                               derive_seed(o.seed, 3, 3), ProbeKind::kMlp, threads);
}

CheckResult check_unsupervised_recovery(const ValidationOptions& o, const MIEstimate& est) {
  CheckResult r{3, "unsupervised_recovery"};
  const double target = std::log2(5.0);
  r.passed = within(est.value_bits, target, ValidationScale::from(o));
  r.observed = {{"mean_bits", est.value_bits}, {"target_bits", target}};
  return r;
}

CheckResult check_independence_null(const ValidationOptions& o, std::size_t threads) {
  CheckResult r{4, "independence_null"};
  const auto scale = ValidationScale::from(o);
  const auto sup = supervised_estimate(independent_uniform(10, 10),
                                       EmbeddingSpec::separable(10, kEmbedDim, derive_seed(o.seed, 4, 0)),
                                       scale.frames, derive_seed(o.seed, 4, 1), derive_seed(o.seed, 4, 2),
                                       ProbeKind::kMlp, threads);
  const auto unsup = unsupervised_estimate(
      independent_uniform(5, 5), EmbeddingSpec::separable(5, kEmbedDim, derive_seed(o.seed, 4, 3)),
      EmbeddingSpec::separable(5, kEmbedDim, derive_seed(o.seed, 4, 4)), 5, scale.frames,
      derive_seed(o.seed, 4, 5), derive_seed(o.seed, 4, 6), ProbeKind::kMlp, threads);
  r.passed = std::abs(sup.value_bits) <= scale.null_tolerance && std::abs(unsup.value_bits) <= scale.null_tolerance;
  r.observed = {{"supervised_bits", sup.value_bits}, {"unsupervised_bits", unsup.value_bits}};
  return r;
}

CheckResult check_bound_property(const ValidationOptions& o, std::size_t threads) {
  CheckResult r{5, "bound_property"};
  const auto scale = ValidationScale::from(o);
  Rng rng(o.seed, 0x5B0D);
  r.passed = true;
  double worst_excess = -std::numeric_limits<double>::infinity();
  nlohmann::json cases = nlohmann::json::array();
  for (std::uint64_t c = 0; c < 20; ++c) {
    const std::size_t symbols = 2 + rng.below(7);
    const double fidelity = rng.uniform();
    const auto joint = mixture_channel(symbols, fidelity);
    const double exact = exact_mi_bits(joint);
    const auto embed_a = EmbeddingSpec::separable(symbols, kEmbedDim, derive_seed(o.seed, 5, 10 * c));
    const auto embed_b = EmbeddingSpec::separable(symbols, kEmbedDim, derive_seed(o.seed, 5, 10 * c + 1));
    const auto sup = supervised_estimate(joint, embed_a, scale.frames, derive_seed(o.seed, 5, 10 * c + 2),
                                         derive_seed(o.seed, 5, 10 * c + 3), ProbeKind::kLogistic, threads);
    const auto unsup = unsupervised_estimate(joint, embed_a, embed_b, symbols, scale.frames,
                                             derive_seed(o.seed, 5, 10 * c + 4),
                                             derive_seed(o.seed, 5, 10 * c + 5), ProbeKind::kLogistic, threads);
    const double excess = std::max(sup.value_bits, unsup.value_bits) - exact;
    worst_excess = std::max(worst_excess, excess);
    r.passed = r.passed && excess <= scale.bound_slack;
    cases.push_back({{"symbols", symbols},
                     {"fidelity", fidelity},
                     {"exact_bits", exact},
                     {"supervised_bits", sup.value_bits},
                     {"unsupervised_bits", unsup.value_bits}});
  }
  r.observed = {{"worst_excess_bits", worst_excess}, {"cases", cases}};
  return r;
}

CheckResult check_monotone_ordering(const ValidationOptions& o, std::size_t threads) {
  CheckResult r{6, "monotone_ordering"};
  const auto scale = ValidationScale::from(o);
  constexpr std::size_t kSymbols = 4;
  const double fidelities[] = {0.5, 0.7, 0.9, 1.0};
  const auto embed_a = EmbeddingSpec::separable(kSymbols, kEmbedDim, derive_seed(o.seed, 6, 0));
  const auto embed_b = EmbeddingSpec::separable(kSymbols, kEmbedDim, derive_seed(o.seed, 6, 1));
  std::vector<double> sup, unsup, exact;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto joint = mixture_channel(kSymbols, fidelities[i]);
    exact.push_back(exact_mi_bits(joint));
    sup.push_back(supervised_estimate(joint, embed_a, scale.frames, derive_seed(o.seed, 6, 10 + i),
                                      derive_seed(o.seed, 6, 20 + i), ProbeKind::kLogistic, threads)
                      .value_bits);
    unsup.push_back(unsupervised_estimate(joint, embed_a, embed_b, kSymbols, scale.frames,
                                          derive_seed(o.seed, 6, 30 + i), derive_seed(o.seed, 6, 40 + i),
                                          ProbeKind::kLogistic, threads)
                        .value_bits);
  }
  r.passed = true;
  for (std::size_t i = 1; i < 4; ++i) r.passed = r.passed && sup[i] > sup[i - 1] && unsup[i] > unsup[i - 1];
  r.observed = {{"fidelity", fidelities}, {"exact_bits", exact}, {"supervised_bits", sup}, {"unsupervised_bits", unsup}};
  return r;
}

CheckResult check_seed_variance(const MIEstimate& est) {
  CheckResult r{7, "seed_variance"};
  r.passed = est.seed_variance < 4e-4;
  r.observed = {{"variance_bits2", est.seed_variance}, {"per_seed_bits", est.per_seed_values_bits}};
  return r;
}

CheckResult check_mask_constants() {
  CheckResult r{8, "mask_constants"};
  r.passed = true;
  nlohmann::json ratios = nlohmann::json::object();
  for (std::size_t t : {40, 80, 4000}) {
    const double ratio = mask_ratio(block_mask_spec(t));
    ratios[std::to_string(t)] = ratio;
    r.passed = r.passed && ratio == 0.75;
  }
  const double short_ratio = mask_ratio(block_mask_spec(25));
  ratios["25"] = short_ratio;
  r.passed = r.passed && short_ratio == 0.6;
  r.observed = {{"ratios", ratios}};
  return r;
}

CheckResult check_gradients(const ValidationOptions& o) {
  CheckResult r{9, "gradient_check"};
  Rng rng(o.seed, 0x9CEC);
  double worst[2] = {0.0, 0.0};
  for (int kind = 0; kind < 2; ++kind) {
    for (int instance = 0; instance < 5; ++instance) {
      const std::size_t dim = 2 + rng.below(7);
      const std::size_t classes = 2 + rng.below(5);
      const std::size_t frames = 8 + rng.below(25);
      ProbeConfig cfg = probe_config(kind == 0 ? ProbeKind::kLogistic : ProbeKind::kMlp);
      cfg.hidden_dim = 4 + rng.below(9);
      cfg.seed = rng.next_bits();
      const auto model = init_probe(dim, classes, cfg);
      const auto features = gaussian_matrix(rng, frames, dim, 1.0);
      const auto targets = random_ids(rng, frames, classes);
      worst[kind] = std::max(worst[kind], gradient_check(model, features, targets).max_relative_error);
    }
  }
  r.passed = worst[0] < 1e-4 && worst[1] < 1e-4;
  r.observed = {{"logistic_max_relative_error", worst[0]}, {"mlp_max_relative_error", worst[1]}};
  return r;
}

CheckResult check_kmeans(const ValidationOptions& o) {
  CheckResult r{10, "kmeans_properties"};
  Rng rng(o.seed, 0x1C3A);
  bool monotone = true;
  bool deterministic = true;
  for (int d = 0; d < 10; ++d) {
    const auto data = gaussian_matrix(rng, 100 + rng.below(400), 1 + rng.below(6), 1.0 + rng.uniform() * 4.0);
    const KMeansOptions opts{2 + rng.below(9), 100, rng.next_bits()};
    const auto model = fit_kmeans(data, opts);
    for (std::size_t i = 1; i < model.inertia_history.size(); ++i) {
      monotone = monotone && model.inertia_history[i] <= model.inertia_history[i - 1] + 1e-9;
    }
    const auto again = fit_kmeans(data, opts);
    deterministic = deterministic && again.centroids == model.centroids &&
                    assign(again, data) == assign(model, data) && again.inertia == model.inertia;
  }

  // Three distinct points, each repeated, must come back exactly.
  Matrix points(9, 2);
  const float base[3][2] = {{0.0f, 0.0f}, {5.0f, 1.0f}, {-2.0f, 7.0f}};
  for (int i = 0; i < 9; ++i) points.row(i) << base[i % 3][0], base[i % 3][1];
  const auto model = fit_kmeans(points, KMeansOptions{3, 100, o.seed});
  bool recovered = model.inertia == 0.0;
  for (const auto& p : base) {
    bool found = false;
    for (Eigen::Index c = 0; c < model.centroids.rows(); ++c) {
      found = found || (model.centroids(c, 0) == p[0] && model.centroids(c, 1) == p[1]);
    }
    recovered = recovered && found;
  }
  r.passed = monotone && deterministic && recovered;
  r.observed = {{"inertia_nonincreasing", monotone}, {"deterministic", deterministic}, {"exact_recovery", recovered}};
  return r;
}

CheckResult check_layer_scan(const ValidationOptions& o, std::size_t threads) {
  CheckResult r{11, "layer_scan_argmax"};
  TempDir dir;
  SynthOptions synth;
  synth.kind = SynthKind::kLayers;
  synth.utterances = 20;
  synth.frames = 2 * ValidationScale::from(o).frames / synth.utterances;  // fit split holds N frames
  synth.symbols = 5;
  synth.seed = derive_seed(o.seed, 11, 0);
  RunOptions run;
  run.manifests = {export_synthetic(synth, dir.path())};
  run.modes = {Mode::kSupervised, Mode::kShift};
  run.probes = {ProbeKind::kLogistic};
  run.k = synth.symbols;
  const auto report = cmd_layer_scan(run, threads);
  r.passed = true;
  nlohmann::json selected = nlohmann::json::object();
  for (const auto& entry : report.summary.at("argmax")) {
    const int layer = entry.at("layer").get<int>();
    selected[entry.at("metric").get<std::string>()] = layer;
    r.passed = r.passed && layer == 2;
  }
  r.passed = r.passed && selected.size() == 2;
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& row : report.rows) {
    curve.push_back({{"metric", row.metric}, {"layer", *row.layer}, {"value_bits", row.estimate.value_bits}});
  }
  r.observed = {{"argmax_layer", selected}, {"curve", curve}};
  return r;
}

CheckResult check_replay(const ValidationOptions& o, std::size_t threads) {
  CheckResult r{12, "replay_identical"};
  TempDir dir;
  SynthOptions synth;
  synth.kind = SynthKind::kMask;
  synth.utterances = 6;
  synth.frames = 120;
  synth.fidelity = 0.8;
  synth.seed = derive_seed(o.seed, 12, 0);
  RunOptions run;
  run.manifests = {export_synthetic(synth, dir.path() / "data")};
  run.probes = {ProbeKind::kLogistic, ProbeKind::kMlp};
  run.probe.hidden_dim = 32;
  run.probe.epochs = 3;
  run.seeds = {0, 1};
  run.k = synth.symbols;

  auto sup = run;
  const auto sup_path = dir.path() / "supervised.json";
  write_report(cmd_probe_supervised(sup, threads), sup_path);
  auto unsup = run;
  unsup.modes = {Mode::kMask};
  const auto unsup_path = dir.path() / "unsupervised.json";
  write_report(cmd_probe_unsupervised(unsup, threads), unsup_path);

  const bool sup_same = cmd_replay(sup_path, threads).identical;
  const bool unsup_same = cmd_replay(unsup_path, threads).identical;
  r.passed = sup_same && unsup_same;
  r.observed = {{"probe_supervised", sup_same}, {"probe_unsupervised", unsup_same}};
  return r;
}

CheckResult check_round_trip(const ValidationOptions& o) {
  CheckResult r{13, "format_round_trip"};
  Rng rng(o.seed, 0x1313);
  TempDir dir;
  std::size_t failures = 0;
  for (int i = 0; i < 1000; ++i) {
    const double scale = std::pow(10.0, static_cast<double>(rng.below(13)) - 6.0);
    const FeatureMatrix m(gaussian_matrix(rng, 1 + rng.below(64), 1 + rng.below(32), scale));
    const std::size_t classes = 1 + rng.below(100);
    const FrameLabels labels{random_ids(rng, rng.below(64), classes), static_cast<int>(classes)};
    bool same = decode_feature_matrix(encode_feature_matrix(m)) == m &&
                parse_labels(format_labels(labels)) == labels;
    if (i % 50 == 0) {
      store_feature_matrix(m, dir.path() / "m.fmat");
      store_labels(labels, dir.path() / "y.labels");
      same = same && load_feature_matrix(dir.path() / "m.fmat") == m &&
             load_labels(dir.path() / "y.labels") == labels;
    }
    if (!same) ++failures;
  }
  r.passed = failures == 0;
  r.observed = {{"trials", 1000}, {"failures", failures}};
  return r;
}

RunReport cmd_synth_validate(const ValidationOptions& options, std::size_t threads) {
  const auto start = Clock::now();
  std::vector<CheckResult> checks;
  auto timed = [&](auto&& fn) {
    const auto t0 = Clock::now();
    checks.push_back(fn());
    checks.back().seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    std::fprintf(stderr, "%s\n", format_check_line(checks.back()).c_str());
  };
  timed([] { return check_exact_mi(); });
  timed([&] { return check_supervised_recovery(options, threads); });
  MIEstimate identity;
  timed([&] {
    identity = unsupervised_identity_estimate(options, threads);
    return check_unsupervised_recovery(options, identity);
  });
  timed([&] { return check_independence_null(options, threads); });
  timed([&] { return check_bound_property(options, threads); });
  timed([&] { return check_monotone_ordering(options, threads); });
  timed([&] { return check_seed_variance(identity); });
  timed([] { return check_mask_constants(); });
  timed([&] { return check_gradients(options); });
  timed([&] { return check_kmeans(options); });
  timed([&] { return check_layer_scan(options, threads); });
  timed([&] { return check_replay(options, threads); });
  timed([&] { return check_round_trip(options); });

  RunReport report;
  report.command = "synth-validate";
  report.config = to_json(options);
  bool all = true;
  nlohmann::json list = nlohmann::json::array();
  for (const auto& c : checks) {
    all = all && c.passed;
    list.push_back({{"id", c.id}, {"name", c.name}, {"passed", c.passed}, {"observed", c.observed}});
    report.timing_detail["check_seconds"][std::to_string(c.id)] = c.seconds;
  }
  report.summary = {{"checks", list}, {"all_passed", all}};
  report.wall_clock_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return report;
}

std::string format_check_line(const CheckResult& c) {
  char head[96];
  std::snprintf(head, sizeof(head), "%s %2d %-22s %7.2fs ", c.passed ? "PASS" : "FAIL", c.id, c.name.c_str(),
                c.seconds);
  auto observed = c.observed;
  observed.erase("cases");
  observed.erase("curve");
  return head + observed.dump();
}

}  // namespace miprobe::cli
