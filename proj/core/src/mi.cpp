#include "miprobe/mi.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "miprobe/cluster.hpp"
#include "miprobe/parallel.hpp"

namespace miprobe {

std::string to_string(BoundKind kind) {
  return kind == BoundKind::kSupervised ? "supervised" : "unsupervised";
}

double empirical_entropy_bits(std::span<const std::int32_t> ids, std::size_t num_classes) {
  if (ids.empty()) throw std::invalid_argument("empirical_entropy_bits: no samples");
  std::vector<std::size_t> counts(num_classes, 0);
  for (auto id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= num_classes) {
      throw std::invalid_argument("empirical_entropy_bits: id " + std::to_string(id) +
                                  " outside [0, " + std::to_string(num_classes) + ")");
    }
    ++counts[static_cast<std::size_t>(id)];
  }
  const auto n = static_cast<double>(ids.size());
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return h;
}

LabeledFrames pool_labeled(std::span<const std::pair<FeatureMatrix, FrameLabels>> utterances) {
  LabeledFrames out;
  if (utterances.empty()) return out;
  std::size_t total = 0;
  const auto dim = utterances.front().first.dim();
  out.num_classes = static_cast<std::size_t>(utterances.front().second.num_classes);
  for (const auto& [features, labels] : utterances) {
    if (features.frames() != labels.size()) {
      throw DataError("pool_labeled: " + std::to_string(labels.size()) + " labels for " +
                      std::to_string(features.frames()) + " frames");
    }
    if (features.dim() != dim) throw DataError("pool_labeled: feature dims differ across utterances");
    if (static_cast<std::size_t>(labels.num_classes) != out.num_classes) {
      throw DataError("pool_labeled: num_classes differs across utterances");
    }
    total += features.frames();
  }
  out.features.resize(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(dim));
  out.labels.reserve(total);
  Eigen::Index row = 0;
  for (const auto& [features, labels] : utterances) {
    out.features.middleRows(row, static_cast<Eigen::Index>(features.frames())) = features.values();
    row += static_cast<Eigen::Index>(features.frames());
    out.labels.insert(out.labels.end(), labels.ids.begin(), labels.ids.end());
  }
  return out;
}

PairedFrames pool_pairs(std::span<const PairedFrames> utterances) {
  PairedFrames out;
  if (utterances.empty()) return out;
  Eigen::Index total = 0;
  for (const auto& u : utterances) {
    if (u.za.rows() != u.zb.rows()) throw DataError("pool_pairs: Za and Zb row counts differ");
    if (u.za.cols() != utterances.front().za.cols() || u.zb.cols() != utterances.front().zb.cols()) {
      throw DataError("pool_pairs: view dims differ across utterances");
    }
    total += u.za.rows();
  }
  out.za.resize(total, utterances.front().za.cols());
  out.zb.resize(total, utterances.front().zb.cols());
  Eigen::Index row = 0;
  for (const auto& u : utterances) {
    out.za.middleRows(row, u.za.rows()) = u.za;
    out.zb.middleRows(row, u.zb.rows()) = u.zb;
    row += u.za.rows();
  }
  return out;
}

MIEstimate supervised_lower_bound(const LabeledFrames& fit, const LabeledFrames& eval,
                                  const ProbeConfig& cfg) {
  if (eval.size() == 0) throw std::invalid_argument("supervised_lower_bound: empty eval set");
  if (fit.num_classes != eval.num_classes) {
    throw std::invalid_argument("supervised_lower_bound: fit num_classes " +
                                std::to_string(fit.num_classes) + " != eval num_classes " +
                                std::to_string(eval.num_classes));
  }
  if (fit.features.cols() != eval.features.cols()) {
    throw std::invalid_argument("supervised_lower_bound: fit and eval feature dims differ");
  }
  const ProbeModel probe = train_probe(fit.features, fit.labels, fit.num_classes, cfg);

  MIEstimate est;
  est.kind = BoundKind::kSupervised;
  est.probe_kind = cfg.kind;
  est.config = cfg;
  est.seeds = {cfg.seed};
  est.num_classes = fit.num_classes;
  est.n_fit_frames = fit.size();
  est.n_eval_frames = eval.size();
  est.entropy_term_bits = empirical_entropy_bits(eval.labels, eval.num_classes);
  est.cross_entropy_bits = cross_entropy_bits(probe, eval.features, eval.labels);
  est.value_bits = est.entropy_term_bits - est.cross_entropy_bits;
  est.per_seed_values_bits = {est.value_bits};
  return est;
}

MIEstimate unsupervised_lower_bound(const PairedFrames& fit, const PairedFrames& eval,
                                    const ClusterConfig& cluster, const ProbeConfig& cfg) {
  if (eval.size() == 0) throw std::invalid_argument("unsupervised_lower_bound: empty eval pairs");
  if (fit.za.rows() != fit.zb.rows() || eval.za.rows() != eval.zb.rows()) {
    throw std::invalid_argument("unsupervised_lower_bound: Za and Zb must be frame-aligned");
  }
  if (fit.za.cols() != eval.za.cols() || fit.zb.cols() != eval.zb.cols()) {
    throw std::invalid_argument("unsupervised_lower_bound: view dims differ between fit and eval");
  }
  if (fit.size() < cluster.k) {
    throw std::invalid_argument("unsupervised_lower_bound: " + std::to_string(fit.size()) +
                                " fit frames is fewer than k=" + std::to_string(cluster.k));
  }
  cfg.check();

  MIEstimate est;
  est.kind = BoundKind::kUnsupervised;
  est.probe_kind = cfg.kind;
  est.config = cfg;
  est.seeds = {cfg.seed};
  est.num_classes = cluster.k;
  est.kmeans_max_iter = cluster.max_iter;
  est.n_fit_frames = fit.size();
  est.n_eval_frames = eval.size();
  est.per_seed_values_bits = {0.0};
  // One cluster carries no information; a one-class probe is undefined.
  if (cluster.k == 1) return est;

  const KMeansModel quantizer = fit_kmeans(fit.zb, {cluster.k, cluster.max_iter, cfg.seed});
  const auto fit_targets = assign(quantizer, fit.zb);
  const auto eval_targets = assign(quantizer, eval.zb);
  const ProbeModel probe = train_probe(fit.za, fit_targets, cluster.k, cfg);

  est.entropy_term_bits = empirical_entropy_bits(eval_targets, cluster.k);
  est.cross_entropy_bits = cross_entropy_bits(probe, eval.za, eval_targets);
  est.value_bits = est.entropy_term_bits - est.cross_entropy_bits;
  est.per_seed_values_bits = {est.value_bits};
  return est;
}

MIEstimate aggregate(std::span<const MIEstimate> runs) {
  if (runs.empty()) throw std::invalid_argument("aggregate: need at least one run");
  MIEstimate out = runs.front();
  out.per_seed_values_bits.clear();
  out.seeds.clear();
  double value = 0.0;
  double entropy = 0.0;
  double ce = 0.0;
  for (const auto& r : runs) {
    value += r.value_bits;
    entropy += r.entropy_term_bits;
    ce += r.cross_entropy_bits;
    out.per_seed_values_bits.push_back(r.value_bits);
    out.seeds.insert(out.seeds.end(), r.seeds.begin(), r.seeds.end());
  }
  const auto n = static_cast<double>(runs.size());
  out.value_bits = value / n;
  out.entropy_term_bits = entropy / n;
  out.cross_entropy_bits = ce / n;
  double var = 0.0;
  for (const auto& r : runs) var += (r.value_bits - out.value_bits) * (r.value_bits - out.value_bits);
  out.seed_variance = var / n;
  return out;
}

MIEstimate run_seeded(const std::function<MIEstimate(std::uint64_t)>& estimate,
                      std::span<const std::uint64_t> seeds, std::size_t threads) {
  if (seeds.empty()) throw std::invalid_argument("run_seeded: need at least one seed");
  std::vector<MIEstimate> runs(seeds.size());
  parallel_for(seeds.size(), threads, [&](std::size_t i) { runs[i] = estimate(seeds[i]); });
  auto out = aggregate(runs);
  out.seeds.assign(seeds.begin(), seeds.end());
  return out;
}

nlohmann::json to_json(const ProbeConfig& cfg) {
  return {{"kind", to_string(cfg.kind)},
          {"hidden_dim", cfg.hidden_dim},
          {"dropout_rate", cfg.dropout_rate},
          {"learning_rate", cfg.learning_rate},
          {"epochs", cfg.epochs},
          {"batch_size", cfg.batch_size},
          {"seed", cfg.seed}};
}

ProbeConfig probe_config_from_json(const nlohmann::json& j) {
  ProbeConfig cfg;
  cfg.kind = parse_probe_kind(j.at("kind").get<std::string>());
  cfg.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  cfg.dropout_rate = j.at("dropout_rate").get<double>();
  cfg.learning_rate = j.at("learning_rate").get<double>();
  cfg.epochs = j.at("epochs").get<std::size_t>();
  cfg.batch_size = j.at("batch_size").get<std::size_t>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  return cfg;
}

nlohmann::json to_json(const MIEstimate& e) {
  nlohmann::json j = {{"kind", to_string(e.kind)},
                      {"probe_kind", to_string(e.probe_kind)},
                      {"value_bits", e.value_bits},
                      {"entropy_term_bits", e.entropy_term_bits},
                      {"cross_entropy_bits", e.cross_entropy_bits},
                      {"per_seed_values_bits", e.per_seed_values_bits},
                      {"seeds", e.seeds},
                      {"seed_variance", e.seed_variance},
                      {"n_fit_frames", e.n_fit_frames},
                      {"n_eval_frames", e.n_eval_frames},
                      {"num_classes", e.num_classes},
                      {"negative", e.negative()},
                      {"config", to_json(e.config)}};
  if (e.kind == BoundKind::kUnsupervised) {
    j["k"] = e.num_classes;
    j["kmeans_max_iter"] = e.kmeans_max_iter;
  }
  return j;
}

std::string csv_header() {
  return "kind,probe,value_bits,seed_variance,entropy_term_bits,cross_entropy_bits,n_fit_frames,"
         "n_eval_frames,num_classes,negative";
}

std::string to_csv_row(const MIEstimate& e) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s,%s,%.9g,%.9g,%.9g,%.9g,%zu,%zu,%zu,%d", to_string(e.kind).c_str(),
                to_string(e.probe_kind).c_str(), e.value_bits, e.seed_variance, e.entropy_term_bits,
                e.cross_entropy_bits, e.n_fit_frames, e.n_eval_frames, e.num_classes,
                e.negative() ? 1 : 0);
  return buf;
}

}  // namespace miprobe
