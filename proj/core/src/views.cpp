#include "miprobe/views.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace miprobe {

std::size_t MaskSpec::masked_count() const {
  return static_cast<std::size_t>(std::count(masked.begin(), masked.end(), true));
}

ViewPairing time_shift_pairing(std::size_t frames, std::size_t shift_frames) {
  if (frames < 1) throw std::invalid_argument("time_shift_pairing: T must be >= 1");
  if (frames <= shift_frames) {
    throw std::invalid_argument("time_shift_pairing: no pairable frames (T=" +
                                std::to_string(frames) + ", shift=" +
                                std::to_string(shift_frames) + ")");
  }
  ViewPairing pairing;
  pairing.source_frames = frames;
  pairing.pairs.reserve(frames - shift_frames);
  for (std::size_t t = 0; t + shift_frames < frames; ++t) pairing.pairs.push_back({t, t + shift_frames});
  return pairing;
}

MaskSpec block_mask_spec(std::size_t frames, std::size_t period, std::size_t masked_per_period) {
  if (masked_per_period == 0 || masked_per_period >= period) {
    throw std::invalid_argument("block_mask_spec: need 0 < masked_per_period < period (got " +
                                std::to_string(masked_per_period) + " of " +
                                std::to_string(period) + ")");
  }
  MaskSpec spec;
  spec.period = period;
  spec.masked_per_period = masked_per_period;
  spec.masked.resize(frames);
  const std::size_t first_masked = period - masked_per_period;
  for (std::size_t t = 0; t < frames; ++t) spec.masked[t] = (t % period) >= first_masked;
  return spec;
}

ViewPairing masked_pairing(const MaskSpec& spec, MaskPositions positions) {
  ViewPairing pairing;
  pairing.source_frames = spec.frames();
  for (std::size_t t = 0; t < spec.frames(); ++t) {
    if (positions == MaskPositions::kAllFrames || spec.masked[t]) pairing.pairs.push_back({t, t});
  }
  if (pairing.pairs.empty()) {
    throw std::invalid_argument("masked_pairing: mask spec has no masked frames");
  }
  return pairing;
}

double mask_ratio(const MaskSpec& spec) {
  if (spec.frames() == 0) throw std::invalid_argument("mask_ratio: T must be >= 1");
  return static_cast<double>(spec.masked_count()) / static_cast<double>(spec.frames());
}

std::string format_mask_spec(const MaskSpec& spec) {
  std::string out = "T=" + std::to_string(spec.frames()) + " period=" + std::to_string(spec.period) +
                    " masked=" + std::to_string(spec.masked_per_period) + "\n";
  out.reserve(out.size() + spec.frames() + 1);
  for (bool m : spec.masked) out += m ? '1' : '0';
  out += '\n';
  return out;
}

MaskSpec parse_mask_spec(const std::string& text) {
  std::istringstream in(text);
  std::string header;
  std::string bits;
  std::getline(in, header);
  std::getline(in, bits);
  if (!bits.empty() && bits.back() == '\r') bits.pop_back();

  std::size_t frames = 0;
  MaskSpec spec;
  {
    std::istringstream h(header);
    std::string field;
    int seen = 0;
    while (h >> field) {
      const auto eq = field.find('=');
      if (eq == std::string::npos) throw DataError("mask spec: bad header field '" + field + "'");
      const auto key = field.substr(0, eq);
      std::size_t value = 0;
      try {
        value = std::stoul(field.substr(eq + 1));
      } catch (const std::exception&) {
        throw DataError("mask spec: bad header value '" + field + "'");
      }
      if (key == "T") {
        frames = value;
      } else if (key == "period") {
        spec.period = value;
      } else if (key == "masked") {
        spec.masked_per_period = value;
      } else {
        throw DataError("mask spec: unknown header key '" + key + "'");
      }
      ++seen;
    }
    if (seen != 3) throw DataError("mask spec: header must be 'T=<T> period=<p> masked=<m>'");
  }
  if (bits.size() != frames) {
    throw DataError("mask spec: expected " + std::to_string(frames) + " mask characters, got " +
                    std::to_string(bits.size()));
  }
  spec.masked.resize(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    if (bits[t] != '0' && bits[t] != '1') throw DataError("mask spec: invalid character at " + std::to_string(t));
    spec.masked[t] = bits[t] == '1';
  }
  return spec;
}

void store_mask_spec(const MaskSpec& spec, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << format_mask_spec(spec);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

MaskSpec load_mask_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_mask_spec(ss.str());
}

std::pair<Matrix, Matrix> gather_pairs(const Matrix& view_a, const Matrix& view_b,
                                       const ViewPairing& pairing) {
  Matrix za(static_cast<Eigen::Index>(pairing.pairs.size()), view_a.cols());
  Matrix zb(static_cast<Eigen::Index>(pairing.pairs.size()), view_b.cols());
  for (std::size_t i = 0; i < pairing.pairs.size(); ++i) {
    const auto [a, b] = pairing.pairs[i];
    if (a >= static_cast<std::size_t>(view_a.rows()) || b >= static_cast<std::size_t>(view_b.rows())) {
      throw DataError("pairing index out of range for view dump");
    }
    za.row(static_cast<Eigen::Index>(i)) = view_a.row(static_cast<Eigen::Index>(a));
    zb.row(static_cast<Eigen::Index>(i)) = view_b.row(static_cast<Eigen::Index>(b));
  }
  return {std::move(za), std::move(zb)};
}

}  // namespace miprobe
