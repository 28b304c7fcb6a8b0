#include "miprobe/cli/report.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace miprobe::cli {

namespace fs = std::filesystem;

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::kSupervised: return "supervised";
    case Mode::kShift: return "shift";
    case Mode::kMask: return "mask";
  }
  return "?";
}

Mode parse_mode(const std::string& text) {
  if (text == "supervised") return Mode::kSupervised;
  if (text == "shift") return Mode::kShift;
  if (text == "mask") return Mode::kMask;
  throw std::invalid_argument("unknown mode '" + text + "' (expected supervised, shift or mask)");
}

void RunOptions::normalize() {
  for (auto& m : manifests) m = fs::absolute(m).lexically_normal();
}

nlohmann::json to_json(const RunOptions& o) {
  nlohmann::json manifests = nlohmann::json::array();
  for (const auto& m : o.manifests) manifests.push_back(m.generic_string());
  nlohmann::json modes = nlohmann::json::array();
  for (auto m : o.modes) modes.push_back(to_string(m));
  nlohmann::json probes = nlohmann::json::array();
  for (auto p : o.probes) probes.push_back(to_string(p));
  nlohmann::json j = {{"manifests", manifests},
                      {"layers", o.layers},
                      {"modes", modes},
                      {"shift_frames", o.shift_frames},
                      {"mask_period", o.mask_period},
                      {"mask_frames", o.mask_frames},
                      {"positions", o.positions == MaskPositions::kAllFrames ? "all" : "masked"},
                      {"k", o.k},
                      {"kmeans_max_iter", o.kmeans_max_iter},
                      {"probes", probes},
                      {"probe", to_json(o.probe)},
                      {"seeds", o.seeds},
                      {"steps", o.steps}};
  j["layer"] = o.layer ? nlohmann::json(*o.layer) : nlohmann::json(nullptr);
  j["baseline"] = o.baseline ? nlohmann::json(*o.baseline) : nlohmann::json(nullptr);
  return j;
}

RunOptions run_options_from_json(const nlohmann::json& j) {
  RunOptions o;
  for (const auto& m : j.at("manifests")) o.manifests.emplace_back(m.get<std::string>());
  if (!j.at("layer").is_null()) o.layer = j.at("layer").get<int>();
  o.layers = j.at("layers").get<std::vector<int>>();
  for (const auto& m : j.at("modes")) o.modes.push_back(parse_mode(m.get<std::string>()));
  o.shift_frames = j.at("shift_frames").get<std::size_t>();
  o.mask_period = j.at("mask_period").get<std::size_t>();
  o.mask_frames = j.at("mask_frames").get<std::size_t>();
  o.positions = j.at("positions").get<std::string>() == "all" ? MaskPositions::kAllFrames
                                                               : MaskPositions::kMaskedOnly;
  o.k = j.at("k").get<std::size_t>();
  o.kmeans_max_iter = j.at("kmeans_max_iter").get<std::size_t>();
  for (const auto& p : j.at("probes")) o.probes.push_back(parse_probe_kind(p.get<std::string>()));
  o.probe = probe_config_from_json(j.at("probe"));
  o.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  if (!j.at("baseline").is_null()) o.baseline = j.at("baseline").get<std::size_t>();
  o.steps = j.at("steps").get<std::vector<double>>();
  return o;
}

nlohmann::json to_json(const RunReport& report, bool include_timing) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    nlohmann::json row = {{"metric", r.metric}, {"estimate", to_json(r.estimate)}};
    if (r.layer) row["layer"] = *r.layer;
    if (r.checkpoint) row["checkpoint"] = *r.checkpoint;
    if (r.step) row["step"] = *r.step;
    rows.push_back(std::move(row));
  }
  nlohmann::json j = {{"command", report.command},
                      {"toolkit_version", report.toolkit_version},
                      {"config", report.config},
                      {"results", rows},
                      {"summary", report.summary}};
  if (include_timing) {
    j["timing"] = report.timing_detail;
    j["timing"]["wall_clock_seconds"] = report.wall_clock_seconds;
  }
  return j;
}

std::string canonical_text(nlohmann::json report_json) {
  report_json.erase("timing");
  return report_json.dump(2) + "\n";
}

std::string canonical_text(const RunReport& report) { return canonical_text(to_json(report, false)); }

std::string to_csv(const RunReport& report) {
  std::string out = "step,layer,checkpoint,metric,probe,value_bits,variance,entropy_term_bits,"
                    "cross_entropy_bits,n_fit_frames,n_eval_frames\n";
  char buf[512];
  for (const auto& r : report.rows) {
    const auto& e = r.estimate;
    const std::string step = r.step ? [&] {
      char s[64];
      std::snprintf(s, sizeof(s), "%.9g", *r.step);
      return std::string(s);
    }() : std::string();
    std::snprintf(buf, sizeof(buf), "%s,%s,%s,%s,%s,%.9g,%.9g,%.9g,%.9g,%zu,%zu\n", step.c_str(),
                  r.layer ? std::to_string(*r.layer).c_str() : "",
                  r.checkpoint ? std::to_string(*r.checkpoint).c_str() : "", r.metric.c_str(),
                  to_string(e.probe_kind).c_str(), e.value_bits, e.seed_variance, e.entropy_term_bits,
                  e.cross_entropy_bits, e.n_fit_frames, e.n_eval_frames);
    out += buf;
  }
  return out;
}

void write_report(const RunReport& report, const fs::path& out) {
  auto write = [](const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    f << text;
    if (!f) throw std::runtime_error("write failed: " + path.string());
  };
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write(out, to_json(report).dump(2) + "\n");
  auto csv = out;
  csv.replace_extension(".csv");
  write(csv, to_csv(report));
}

}  // namespace miprobe::cli
