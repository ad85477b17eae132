#pragma once

// File formats.
//
// MCRG1 binary array:
//   "MCRG1" | u8 ndims (1 or 2) | ndims x u64 LE extents | row-major f64 LE samples
//
// JSON documents use nlohmann::json, whose double output is the shortest
// representation that parses back to the same bits.

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "nopick/core.hpp"
#include "nopick/detectlimit.hpp"
#include "nopick/estimators.hpp"
#include "nopick/moments.hpp"
#include "nopick/simkit.hpp"
#include "nopick/solver1d.hpp"
#include "nopick/spectrum2d.hpp"

namespace nopick::io {

using json = nlohmann::json;

inline constexpr char kMagic[5] = {'M', 'C', 'R', 'G', '1'};

namespace detail {
template <typename T>
void put_le(std::string& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  out.append(reinterpret_cast<const char*>(b), sizeof(T));
}

template <typename T>
T get_le(const char* p) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}
}  // namespace detail

struct Array {
  std::vector<std::uint64_t> extents;
  std::vector<double> data;
};

inline std::string encode_mcrg(const std::vector<std::uint64_t>& extents, std::span<const double> data) {
  if (extents.empty() || extents.size() > 2) throw FormatError("MCRG1: ndims must be 1 or 2");
  std::uint64_t count = 1;
  for (auto e : extents) count *= e;
  if (count != data.size()) throw FormatError("MCRG1: extents do not match sample count");
  std::string out(kMagic, 5);
  out.reserve(6 + 8 * extents.size() + 8 * data.size());
  out.push_back(char(std::uint8_t(extents.size())));
  for (auto e : extents) detail::put_le<std::uint64_t>(out, e);
  for (double v : data) detail::put_le<double>(out, v);
  return out;
}

inline Array decode_mcrg(const std::string& bytes) {
  if (bytes.empty()) throw FormatError("MCRG1: empty file");
  if (bytes.size() < 6 || std::memcmp(bytes.data(), kMagic, 5) != 0)
    throw FormatError("MCRG1: bad magic");
  const auto ndims = std::uint8_t(bytes[5]);
  if (ndims != 1 && ndims != 2)
    throw FormatError("MCRG1: unsupported ndims " + std::to_string(int(ndims)) + " (version mismatch)");
  std::size_t pos = 6;
  if (bytes.size() < pos + 8 * ndims) throw FormatError("MCRG1: truncated header");
  Array a;
  std::uint64_t count = 1;
  for (int d = 0; d < ndims; ++d, pos += 8) {
    a.extents.push_back(detail::get_le<std::uint64_t>(bytes.data() + pos));
    count *= a.extents.back();
  }
  if ((bytes.size() - pos) / 8 < count) throw FormatError("MCRG1: truncated payload");
  if (bytes.size() - pos != 8 * count) throw FormatError("MCRG1: trailing bytes after payload");
  a.data.resize(count);
  for (std::uint64_t i = 0; i < count; ++i, pos += 8) a.data[i] = detail::get_le<double>(bytes.data() + pos);
  return a;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& bytes) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + p.string());
}

inline void write_mcrg(const std::filesystem::path& p, const std::vector<std::uint64_t>& extents,
                       std::span<const double> data) {
  write_file(p, encode_mcrg(extents, data));
}

inline Array read_mcrg(const std::filesystem::path& p) { return decode_mcrg(read_file(p)); }

inline void write_micrograph(const std::filesystem::path& p, const Micrograph& y) {
  std::vector<std::uint64_t> ext(y.extents.begin(), y.extents.end());
  write_mcrg(p, ext, y.data);
}

inline Micrograph read_micrograph(const std::filesystem::path& p) {
  Array a = read_mcrg(p);
  Micrograph y;
  y.extents.assign(a.extents.begin(), a.extents.end());
  y.data = std::move(a.data);
  for (double v : y.data)
    if (!std::isfinite(v)) throw FormatError("micrograph contains non-finite samples: " + p.string());
  return y;
}

inline Signal1D read_signal1d(const std::filesystem::path& p) {
  Array a = read_mcrg(p);
  if (a.extents.size() != 1) throw FormatError("expected a 1-D array in " + p.string());
  return Signal1D(std::move(a.data));
}

inline Image2D read_image2d(const std::filesystem::path& p) {
  Array a = read_mcrg(p);
  if (a.extents.size() != 2 || a.extents[0] != a.extents[1])
    throw FormatError("expected a square 2-D array in " + p.string());
  return Image2D(Grid2D(a.extents[0], a.extents[1], std::move(a.data)));
}

inline void write_signal(const std::filesystem::path& p, const Signal1D& x) {
  write_mcrg(p, {x.length()}, x.samples());
}

inline void write_image(const std::filesystem::path& p, const Image2D& x) {
  write_mcrg(p, {x.L(), x.L()}, x.pixels().span());
}

// ---------------------------------------------------------------------------
// JSON

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline json to_json(const MomentSet& m) {
  json a3 = json::array();
  for (std::size_t r = 0; r < m.L; ++r)
    a3.push_back(std::vector<double>(m.a3.begin() + std::ptrdiff_t(r * m.L),
                                     m.a3.begin() + std::ptrdiff_t((r + 1) * m.L)));
  return json{{"L", m.L}, {"pixel_count", m.pixel_count}, {"a1", m.a1}, {"a2", m.a2}, {"a3", a3}};
}

inline MomentSet moments_from_json(const json& j) {
  try {
    MomentSet m(j.at("L").get<std::size_t>(), j.at("pixel_count").get<std::uint64_t>());
    m.a1 = j.at("a1").get<double>();
    m.a2 = j.at("a2").get<std::vector<double>>();
    if (m.a2.size() != m.L) throw FormatError("MomentSet: a2 length does not match L");
    const auto& a3 = j.at("a3");
    if (a3.size() != m.L) throw FormatError("MomentSet: a3 row count does not match L");
    for (std::size_t r = 0; r < m.L; ++r) {
      const auto row = a3.at(r).get<std::vector<double>>();
      if (row.size() != m.L) throw FormatError("MomentSet: a3 row length does not match L");
      std::copy(row.begin(), row.end(), m.a3.begin() + std::ptrdiff_t(r * m.L));
    }
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("MomentSet JSON: ") + e.what());
  }
}

inline json to_json(const PlacementPlan1D& p) {
  return json{{"ndims", 1}, {"L", p.L}, {"N", p.N}, {"gap", p.gap}, {"proposals", p.proposals}, {"starts", p.starts}};
}

inline json to_json(const PlacementPlan2D& p) {
  json starts = json::array();
  for (const auto& s : p.starts) starts.push_back({s[0], s[1]});
  return json{{"ndims", 2}, {"L", p.L}, {"N", p.N}, {"gap", p.gap}, {"proposals", p.proposals}, {"starts", starts}};
}

inline PlacementPlan1D plan1d_from_json(const json& j) {
  PlacementPlan1D p;
  p.L = j.at("L").get<std::size_t>();
  p.N = j.at("N").get<std::size_t>();
  p.gap = j.value("gap", default_gap(p.L));
  p.proposals = j.value("proposals", std::size_t{0});
  p.starts = j.at("starts").get<std::vector<std::size_t>>();
  return p;
}

inline json to_json(const DensityNoiseEstimate& e) {
  return json{{"gamma", e.gamma}, {"sigma2", e.sigma2}, {"residual", e.residual},
              {"clamped", e.clamped}, {"warnings", e.warnings}};
}

inline json to_json(const LSSolution& s) {
  return json{{"L", s.x_hat.length()},   {"x_hat", s.x_hat.vec()},   {"gamma_hat", s.gamma_hat},
              {"cost", s.cost},          {"grad_norm", s.grad_norm}, {"iterations", s.iterations},
              {"converged", s.converged}, {"best_restart", s.best_restart}};
}

inline json to_json(const PowerSpectrum2D& ps, std::uint64_t pixel_count = 0) {
  json rows = json::array();
  const auto& v = ps.values;
  for (std::size_t r = 0; r < v.rows(); ++r)
    rows.push_back(std::vector<double>(v.vec().begin() + std::ptrdiff_t(r * v.cols()),
                                       v.vec().begin() + std::ptrdiff_t((r + 1) * v.cols())));
  return json{{"L", ps.L}, {"pixel_count", pixel_count}, {"ps2d", rows}};
}

inline PowerSpectrum2D power_spectrum_from_json(const json& j) {
  try {
    PowerSpectrum2D ps;
    ps.L = j.at("L").get<std::size_t>();
    const std::size_t G = 2 * ps.L;
    ps.values = Grid2D(G, G);
    const auto& rows = j.at("ps2d");
    if (rows.size() != G) throw FormatError("ps2d: expected 2L rows");
    for (std::size_t r = 0; r < G; ++r) {
      const auto row = rows.at(r).get<std::vector<double>>();
      if (row.size() != G) throw FormatError("ps2d: expected 2L columns");
      for (std::size_t c = 0; c < G; ++c) ps.values(r, c) = row[c];
    }
    return ps;
  } catch (const json::exception& e) {
    throw FormatError(std::string("power spectrum JSON: ") + e.what());
  }
}

inline json read_json(const std::filesystem::path& p) {
  const std::string text = read_file(p);
  if (text.find_first_not_of(" \t\r\n") == std::string::npos)
    throw FormatError("empty JSON file: " + p.string());
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError("invalid JSON in " + p.string() + ": " + e.what());
  }
}

inline void write_json(const std::filesystem::path& p, const json& j) { write_file(p, dump(j)); }

// ---------------------------------------------------------------------------
// PGM (P5, 8-bit) with affine scaling of [min, max] onto [0, 255]

inline std::string encode_pgm(const Grid2D& g) {
  std::string out = "P5\n" + std::to_string(g.cols()) + " " + std::to_string(g.rows()) + "\n255\n";
  double lo = 0.0, hi = 0.0;
  if (g.size() > 0) {
    const auto [mn, mx] = std::minmax_element(g.vec().begin(), g.vec().end());
    lo = *mn;
    hi = *mx;
  }
  const double span = hi - lo;
  for (double v : g.vec()) {
    const double t = span > 0.0 ? (v - lo) / span : 0.0;
    out.push_back(char(std::uint8_t(std::lround(std::clamp(t, 0.0, 1.0) * 255.0))));
  }
  return out;
}

inline void write_pgm(const std::filesystem::path& p, const Grid2D& g) { write_file(p, encode_pgm(g)); }

// ---------------------------------------------------------------------------
// CSV

inline std::string format_double(double v) {
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

inline constexpr const char* kDetectLimitHeader = "sigma,analytic_success,mc_success,mc_stderr,trials";

inline std::string detect_limit_csv(std::span<const SweepRow> rows) {
  std::string out = std::string(kDetectLimitHeader) + "\n";
  for (const auto& r : rows)
    out += format_double(r.sigma) + "," + format_double(r.analytic_success) + "," +
           format_double(r.mc_success) + "," + format_double(r.mc_stderr) + "," + std::to_string(r.trials) + "\n";
  return out;
}

inline constexpr const char* kRestartHeader = "restart,cost,gamma,iterations,converged";

inline std::string restarts_csv(std::span<const RestartRecord> rows) {
  std::string out = std::string(kRestartHeader) + "\n";
  for (const auto& r : rows)
    out += std::to_string(r.index) + "," + format_double(r.cost) + "," + format_double(r.gamma) + "," +
           std::to_string(r.iterations) + "," + (r.converged ? "1" : "0") + "\n";
  return out;
}

}  // namespace nopick::io
