#pragma once

// File-mediated experiment stages. Each run reads its inputs from files,
// writes artifacts plus manifest.json into out_dir, and draws all randomness
// from cfg.seed.

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "nopick/core.hpp"
#include "nopick/detectlimit.hpp"
#include "nopick/estimators.hpp"
#include "nopick/io.hpp"
#include "nopick/moments.hpp"
#include "nopick/phase2d.hpp"
#include "nopick/simkit.hpp"
#include "nopick/solver1d.hpp"
#include "nopick/spectrum2d.hpp"

namespace nopick::pipeline {

using json = nlohmann::json;
namespace fs = std::filesystem;

enum class Kind { uint, opt_uint, real, opt_real, text, real_list, boolean };

struct ParamSpec {
  std::string name;
  Kind kind;
  json def;
  std::vector<std::string> choices;  // for Kind::text
  std::string help;
};

struct InputSpec {
  std::string name;
  bool list = false;
  bool required = false;
  std::string help;
};

struct ModeSchema {
  std::string mode;
  std::vector<ParamSpec> params;
  std::vector<InputSpec> inputs;
};

inline const std::vector<ModeSchema>& schemas() {
  static const std::vector<ModeSchema> all = {
      {"sim1d",
       {{"L", Kind::uint, 21, {}, "signal length (ignored when a signal file is given)"},
        {"N", Kind::uint, 100000, {}, "micrograph length"},
        {"M", Kind::uint, 100, {}, "target number of occurrences per micrograph"},
        {"sigma", Kind::real, 1.0, {}, "noise standard deviation"},
        {"gap", Kind::uint, 0, {}, "minimum start separation (0: 2L-1)"},
        {"count", Kind::uint, 1, {}, "number of micrographs"},
        {"max_attempts", Kind::uint, 0, {}, "placement proposals per micrograph (0: 50 M)"}},
       {{"signal", false, false, "MCRG1 1-D signal (default: random normal)"}}},
      {"sim2d",
       {{"L", Kind::uint, 16, {}, "image side (ignored when an image file is given)"},
        {"N", Kind::uint, 512, {}, "micrograph side"},
        {"M", Kind::uint, 102, {}, "target number of occurrences per micrograph"},
        {"sigma", Kind::real, 1.0, {}, "noise standard deviation"},
        {"gap", Kind::uint, 0, {}, "minimum corner separation (0: 2L-1)"},
        {"count", Kind::uint, 1, {}, "number of micrographs"},
        {"max_attempts", Kind::uint, 0, {}, "placement proposals per micrograph (0: 50 M)"},
        {"generator", Kind::text, "blob", {"blob", "random"}, "generated image when no file is given"}},
       {{"image", false, false, "MCRG1 square 2-D image"}}},
      {"moments",
       {{"L", Kind::opt_uint, nullptr, {}, "moment window length (required)"},
        {"chunk_size", Kind::uint, 1 << 24, {}, "samples per streaming chunk"},
        {"junction_mode", Kind::text, "exact", {"exact", "paper"}, "chunk junction handling"}},
       {{"micrographs", true, true, "MCRG1 1-D micrographs"}}},
      {"estimate",
       {{"method", Kind::text, "joint", {"joint", "known_sigma"}, "gamma only, or gamma and sigma^2"},
        {"sigma", Kind::opt_real, nullptr, {}, "known noise level (method known_sigma)"},
        {"closed_form", Kind::boolean, false, {}, "also recover x in closed form"}},
       {{"moments", false, true, "moments JSON"}}},
      {"recover1d",
       {{"restarts", Kind::uint, 10, {}, "random initializations in stage 1"},
        {"max_iters", Kind::uint, 500, {}, "iterations per local solve"},
        {"grad_tol", Kind::real, 1e-10, {}, "gradient tolerance relative to the initial cost"},
        {"w1", Kind::opt_real, nullptr, {}, "first-order weight"},
        {"w2", Kind::opt_real, nullptr, {}, "second-order weight"},
        {"w3", Kind::opt_real, nullptr, {}, "third-order weight"}},
       {{"moments", false, true, "moments JSON"}}},
      {"recover2d",
       {{"L", Kind::opt_uint, nullptr, {}, "image side (required with micrographs)"},
        {"sigma", Kind::opt_real, nullptr, {}, "noise level (required with micrographs)"},
        {"M_total", Kind::opt_uint, nullptr, {}, "total occurrences (required with micrographs)"},
        {"iterations", Kind::uint, 2000, {}, "RRR iterations"},
        {"beta", Kind::real, 1.0, {}, "RRR step"}},
       {{"micrographs", true, false, "MCRG1 2-D micrographs"},
        {"power_spectrum", false, false, "power spectrum JSON (instead of micrographs)"}}},
      {"detect",
       {{"L", Kind::uint, 8, {}, "signal length (ignored when a signal file is given)"},
        {"q", Kind::real, 0.5, {}, "prior probability that the signal is present"},
        {"sigmas", Kind::real_list, json::array({0.5, 1.0, 10.0, 100.0}), {}, "noise levels, ascending"},
        {"trials", Kind::uint, 100000, {}, "Monte Carlo trials per noise level"}},
       {{"signal", false, false, "MCRG1 1-D signal (default: random normal)"}}},
      {"report",
       {{"gamma_true", Kind::opt_real, nullptr, {}, "true density for the gamma error"}},
       {{"estimate", false, true, "MCRG1 estimated signal or image"},
        {"truth", false, true, "MCRG1 ground truth"},
        {"solution", false, false, "solution JSON carrying gamma_hat"}}},
  };
  return all;
}

inline const ModeSchema& schema_for(const std::string& mode) {
  for (const auto& s : schemas())
    if (s.mode == mode) return s;
  std::string known;
  for (const auto& s : schemas()) known += (known.empty() ? "" : ", ") + s.mode;
  throw InvalidArgument("unknown mode '" + mode + "' (expected one of: " + known + ")");
}

struct ExperimentConfig {
  std::string mode;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  json inputs = json::object();  // name -> path, or list of paths
  json params = json::object();
  fs::path out_dir = ".";
};

namespace detail {
inline std::string joined_names(const std::vector<std::string>& names) {
  std::string out;
  for (const auto& n : names) out += (out.empty() ? "" : ", ") + n;
  return out;
}

inline json coerce(const ParamSpec& p, const json& v, const std::string& mode) {
  auto bad = [&](const std::string& want) {
    return InvalidArgument("parameter '" + p.name + "' of mode '" + mode + "' must be " + want + ", got " +
                           v.dump());
  };
  auto as_uint = [&]() -> json {
    if (v.is_number_unsigned()) return v;
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::uint64_t>();
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (d >= 0 && d == std::floor(d) && d < 1.8e19) return std::uint64_t(d);
    }
    throw bad("a non-negative integer");
  };
  switch (p.kind) {
    case Kind::uint:
      return as_uint();
    case Kind::opt_uint:
      return v.is_null() ? v : as_uint();
    case Kind::real:
      if (!v.is_number() || !std::isfinite(v.get<double>())) throw bad("a finite number");
      return v.get<double>();
    case Kind::opt_real:
      if (v.is_null()) return v;
      if (!v.is_number() || !std::isfinite(v.get<double>())) throw bad("a finite number or null");
      return v.get<double>();
    case Kind::text:
      if (!v.is_string() ||
          std::find(p.choices.begin(), p.choices.end(), v.get<std::string>()) == p.choices.end())
        throw bad("one of {" + joined_names(p.choices) + "}");
      return v;
    case Kind::real_list: {
      if (!v.is_array()) throw bad("a list of numbers");
      json out = json::array();
      for (const auto& e : v) {
        if (!e.is_number()) throw bad("a list of numbers");
        out.push_back(e.get<double>());
      }
      return out;
    }
    case Kind::boolean:
      if (!v.is_boolean()) throw bad("true or false");
      return v;
  }
  return v;
}
}  // namespace detail

/// Fills defaults and rejects unknown or ill-typed keys.
inline ExperimentConfig resolve(const ExperimentConfig& in) {
  const ModeSchema& schema = schema_for(in.mode);
  ExperimentConfig out = in;
  require(in.threads >= 1, "threads must be at least 1");

  if (!in.params.is_object()) throw InvalidArgument("params must be a JSON object");
  if (!in.inputs.is_object()) throw InvalidArgument("inputs must be a JSON object");

  std::vector<std::string> allowed;
  for (const auto& p : schema.params) allowed.push_back(p.name);
  for (const auto& [k, v] : in.params.items())
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
      throw InvalidArgument("unknown parameter '" + k + "' for mode '" + in.mode +
                            "' (allowed: " + detail::joined_names(allowed) + ")");
  out.params = json::object();
  for (const auto& p : schema.params)
    out.params[p.name] = detail::coerce(p, in.params.contains(p.name) ? in.params.at(p.name) : p.def, in.mode);

  std::vector<std::string> input_names;
  for (const auto& s : schema.inputs) input_names.push_back(s.name);
  for (const auto& [k, v] : in.inputs.items())
    if (std::find(input_names.begin(), input_names.end(), k) == input_names.end())
      throw InvalidArgument("unknown input '" + k + "' for mode '" + in.mode + "' (allowed: " +
                            (input_names.empty() ? std::string("none") : detail::joined_names(input_names)) + ")");
  out.inputs = json::object();
  for (const auto& s : schema.inputs) {
    if (!in.inputs.contains(s.name)) {
      if (s.required) throw InvalidArgument("input '" + s.name + "' is required for mode '" + in.mode + "'");
      continue;
    }
    json v = in.inputs.at(s.name);
    if (s.list) {
      if (v.is_string()) v = json::array({v});
      if (!v.is_array() || v.empty()) throw InvalidArgument("input '" + s.name + "' must be a non-empty list of paths");
      for (const auto& e : v)
        if (!e.is_string()) throw InvalidArgument("input '" + s.name + "' must contain paths");
    } else if (!v.is_string()) {
      throw InvalidArgument("input '" + s.name + "' must be a path");
    }
    out.inputs[s.name] = v;
  }
  return out;
}

/// The resolved config as written to the manifest. out_dir is not part of it.
inline json config_to_json(const ExperimentConfig& cfg) {
  return json{{"mode", cfg.mode}, {"seed", cfg.seed}, {"threads", cfg.threads},
              {"inputs", cfg.inputs}, {"params", cfg.params}};
}

/// Accepts a bare config or a manifest (whose "config" member is used).
inline ExperimentConfig config_from_json(const json& doc) {
  if (!doc.is_object()) throw InvalidArgument("config must be a JSON object");
  const json& j = doc.contains("config") ? doc.at("config") : doc;
  if (doc.contains("config"))
    for (const auto& [k, v] : doc.items())
      if (k != "config" && k != "artifact" && k != "version" && k != "outputs")
        throw InvalidArgument("unknown manifest key '" + k + "'");
  if (!j.is_object()) throw InvalidArgument("config must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (k != "mode" && k != "seed" && k != "threads" && k != "inputs" && k != "params")
      throw InvalidArgument("unknown config key '" + k + "' (allowed: mode, seed, threads, inputs, params)");
  ExperimentConfig cfg;
  if (!j.contains("mode") || !j.at("mode").is_string()) throw InvalidArgument("config needs a string 'mode'");
  cfg.mode = j.at("mode").get<std::string>();
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) throw InvalidArgument("seed must be a non-negative integer");
    cfg.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("threads")) {
    if (!j.at("threads").is_number_unsigned()) throw InvalidArgument("threads must be a positive integer");
    cfg.threads = j.at("threads").get<unsigned>();
  }
  cfg.inputs = j.value("inputs", json::object());
  cfg.params = j.value("params", json::object());
  return cfg;
}

struct PipelineResult {
  int status = 0;
  std::vector<std::string> artifacts;  // file names inside out_dir, manifest last
  json manifest;
};

namespace detail {

struct Run {
  const ExperimentConfig& cfg;
  std::vector<std::string> artifacts;

  std::uint64_t u(const char* k) const { return cfg.params.at(k).get<std::uint64_t>(); }
  double d(const char* k) const { return cfg.params.at(k).get<double>(); }
  std::string s(const char* k) const { return cfg.params.at(k).get<std::string>(); }
  bool has(const char* k) const { return !cfg.params.at(k).is_null(); }
  bool has_input(const char* k) const { return cfg.inputs.contains(k); }
  fs::path input(const char* k) const { return cfg.inputs.at(k).get<std::string>(); }
  std::vector<fs::path> inputs(const char* k) const {
    std::vector<fs::path> out;
    for (const auto& e : cfg.inputs.at(k)) out.emplace_back(e.get<std::string>());
    return out;
  }

  fs::path out(const std::string& name) {
    artifacts.push_back(name);
    return cfg.out_dir / name;
  }
};

inline std::string indexed(const char* stem, std::size_t i, const char* ext) {
  std::ostringstream ss;
  ss << stem << '_' << std::setw(4) << std::setfill('0') << i << ext;
  return ss.str();
}

inline void run_sim1d(Run& r) {
  const auto& c = r.cfg;
  const Signal1D x = r.has_input("signal") ? io::read_signal1d(r.input("signal"))
                                           : random_signal(r.u("L"), derive_seed(c.seed, 0));
  const std::size_t L = x.length();
  const double sigma = r.d("sigma");
  require(sigma >= 0.0, "sigma must be non-negative");
  require(r.u("count") >= 1, "count must be at least 1");
  io::write_signal(r.out("signal.mcrg"), x);
  for (std::size_t i = 0; i < r.u("count"); ++i) {
    const auto plan = place_occurrences(r.u("N"), L, r.u("M"), r.u("max_attempts"),
                                        derive_seed(c.seed, 1000 + 2 * i), r.u("gap"));
    const Micrograph y = synthesize(plan, x, sigma, derive_seed(c.seed, 1001 + 2 * i));
    io::write_micrograph(r.out(indexed("micrograph", i, ".mcrg")), y);
    json pj = io::to_json(plan);
    pj["snr"] = snr_of(plan, x, sigma);
    pj["density"] = plan.density();
    io::write_json(r.out(indexed("plan", i, ".json")), pj);
  }
}

inline void run_sim2d(Run& r) {
  const auto& c = r.cfg;
  Image2D x;
  if (r.has_input("image"))
    x = io::read_image2d(r.input("image"));
  else if (r.s("generator") == "blob")
    x = blob_image(r.u("L"), derive_seed(c.seed, 0));
  else
    x = random_zero_mean_image(r.u("L"), derive_seed(c.seed, 0));
  const double sigma = r.d("sigma");
  require(sigma >= 0.0, "sigma must be non-negative");
  require(r.u("count") >= 1, "count must be at least 1");
  io::write_image(r.out("image.mcrg"), x);
  io::write_pgm(r.out("image.pgm"), x.pixels());
  for (std::size_t i = 0; i < r.u("count"); ++i) {
    const auto plan = place_occurrences_2d(r.u("N"), x.L(), r.u("M"), r.u("max_attempts"),
                                           derive_seed(c.seed, 1000 + 2 * i), r.u("gap"));
    const Micrograph y = synthesize(plan, x, sigma, derive_seed(c.seed, 1001 + 2 * i));
    io::write_micrograph(r.out(indexed("micrograph", i, ".mcrg")), y);
    if (i == 0) io::write_pgm(r.out("micrograph_0000.pgm"), Grid2D(y.extents[0], y.extents[1], y.data));
    json pj = io::to_json(plan);
    pj["snr"] = snr_of(plan, x, sigma);
    pj["density"] = plan.density();
    io::write_json(r.out(indexed("plan", i, ".json")), pj);
  }
}

/// One accumulator per micrograph on a worker pool, merged in input order.
inline MomentAccumulator accumulate_files(const std::vector<fs::path>& paths, std::size_t L, std::size_t chunk,
                                          JunctionMode mode, unsigned threads) {
  const std::size_t n = paths.size();
  std::vector<MomentAccumulator> accs(n);
  std::vector<std::exception_ptr> errs(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        const Micrograph y = io::read_micrograph(paths[i]);
        if (y.ndims() != 1) throw InvalidArgument("moments expects 1-D micrographs: " + paths[i].string());
        if (y.data.empty()) throw InvalidArgument("micrograph has no samples: " + paths[i].string());
        accs[i] = accumulate_micrograph(y.data, L, chunk, mode);
      } catch (...) {
        errs[i] = std::current_exception();
      }
    }
  };
  const unsigned t = std::max(1u, std::min<unsigned>(threads, unsigned(n)));
  if (t == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < t; ++k) pool.emplace_back(work);
  }
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
  MomentAccumulator total = std::move(accs[0]);
  for (std::size_t i = 1; i < n; ++i) total = merge(total, accs[i]);
  return total;
}

inline void run_moments(Run& r) {
  if (!r.has("L")) throw InvalidArgument("parameter 'L' is required for mode 'moments'");
  const std::size_t L = r.u("L");
  require(L >= 1, "L must be at least 1");
  require(r.u("chunk_size") >= 1, "chunk_size must be at least 1");
  const auto mode = r.s("junction_mode") == "paper" ? JunctionMode::paper : JunctionMode::exact;
  const auto acc = accumulate_files(r.inputs("micrographs"), L, r.u("chunk_size"), mode, r.cfg.threads);
  io::write_json(r.out("moments.json"), io::to_json(acc.finalize()));
}

inline void run_estimate(Run& r) {
  const MomentSet m = io::moments_from_json(io::read_json(r.input("moments")));
  json j;
  double gamma = 0.0, sigma = 0.0;
  if (r.s("method") == "known_sigma") {
    if (!r.has("sigma")) throw InvalidArgument("method 'known_sigma' needs parameter 'sigma'");
    sigma = r.d("sigma");
    require(sigma >= 0.0, "sigma must be non-negative");
    const auto g = estimate_gamma_known_sigma(m, sigma);
    gamma = g.gamma;
    j = json{{"method", "known_sigma"}, {"gamma", g.gamma}, {"sigma", sigma}, {"warnings", g.warnings}};
  } else {
    const auto e = solve_gamma_sigma(m);
    gamma = e.gamma;
    sigma = std::sqrt(e.sigma2);
    j = io::to_json(e);
    j["method"] = "joint";
  }
  if (r.cfg.params.at("closed_form").get<bool>()) {
    if (!(gamma > 0.0)) throw DegenerateInput("closed-form recovery needs a positive gamma estimate");
    const Signal1D x = recover_closed_form(m, std::min(gamma, max_density(m.L)), sigma);
    io::write_signal(r.out("x_closed_form.mcrg"), x);
    j["x_closed_form"] = x.vec();
  }
  io::write_json(r.out("estimate.json"), j);
}

inline void run_recover1d(Run& r) {
  const MomentSet m = io::moments_from_json(io::read_json(r.input("moments")));
  LSConfig lc = LSConfig::defaults(m.L);
  lc.restarts = r.u("restarts");
  lc.max_iters = r.u("max_iters");
  lc.grad_tol = r.d("grad_tol");
  lc.seed = r.cfg.seed;
  if (r.has("w1")) lc.weights.w1 = r.d("w1");
  if (r.has("w2")) lc.weights.w2 = r.d("w2");
  if (r.has("w3")) lc.weights.w3 = r.d("w3");
  const LSSolution sol = recover1d(m, lc);
  io::write_json(r.out("solution.json"), io::to_json(sol));
  io::write_file(r.out("restarts.csv"), io::restarts_csv(sol.restarts));
  io::write_signal(r.out("x_hat.mcrg"), sol.x_hat);
}

inline void run_recover2d(Run& r) {
  PowerSpectrum2D ps;
  if (r.has_input("power_spectrum")) {
    if (r.has_input("micrographs")) throw InvalidArgument("give either micrographs or power_spectrum, not both");
    ps = io::power_spectrum_from_json(io::read_json(r.input("power_spectrum")));
  } else {
    if (!r.has_input("micrographs")) throw InvalidArgument("recover2d needs micrographs or power_spectrum");
    for (const char* k : {"L", "sigma", "M_total"})
      if (!r.has(k)) throw InvalidArgument(std::string("parameter '") + k + "' is required with micrographs");
    const auto paths = r.inputs("micrographs");
    std::optional<PowerSpectrumEstimator> est;
    for (const auto& p : paths) {
      const Micrograph y = io::read_micrograph(p);
      if (y.ndims() != 2 || y.extents[0] != y.extents[1])
        throw InvalidArgument("recover2d expects square 2-D micrographs: " + p.string());
      if (!est) est.emplace(y.extents[0], r.u("L"));
      est->add(y);
    }
    ps = est->finalize(r.d("sigma"), r.u("M_total"));
    io::write_json(r.out("power_spectrum.json"), io::to_json(ps, est->count() * est->N() * est->N()));
  }
  RRRConfig rc;
  rc.beta = r.d("beta");
  rc.iterations = r.u("iterations");
  rc.seed = r.cfg.seed;
  const RRRResult res = rrr_run(ps, rc);
  io::write_json(r.out("solution.json"), json{{"L", ps.L},
                                              {"residual", res.residual},
                                              {"best_iteration", res.best_iteration},
                                              {"iterations", rc.iterations},
                                              {"beta", rc.beta}});
  std::string csv = "iteration,residual\n";
  for (std::size_t i = 0; i < res.residual_history.size(); ++i)
    csv += std::to_string(i) + "," + io::format_double(res.residual_history[i]) + "\n";
  io::write_file(r.out("residuals.csv"), csv);
  io::write_image(r.out("x_hat.mcrg"), res.image);
  io::write_pgm(r.out("x_hat.pgm"), res.image.pixels());
}

inline void run_detect(Run& r) {
  const Signal1D x = r.has_input("signal") ? io::read_signal1d(r.input("signal"))
                                           : random_signal(r.u("L"), derive_seed(r.cfg.seed, 0));
  DetectionProblem p;
  p.theta0 = x.vec();
  p.q = r.d("q");
  p.validate();
  const auto sigmas = r.cfg.params.at("sigmas").get<std::vector<double>>();
  require(r.u("trials") >= 1, "trials must be at least 1");
  const auto rows = sweep_sigma(p, sigmas, r.u("trials"), derive_seed(r.cfg.seed, 1), r.cfg.threads);
  io::write_file(r.out("detect_limit.csv"), io::detect_limit_csv(rows));
}

inline void run_report(Run& r) {
  const io::Array est = io::read_mcrg(r.input("estimate"));
  const io::Array truth = io::read_mcrg(r.input("truth"));
  if (est.extents != truth.extents) throw InvalidArgument("estimate and truth have different shapes");
  json j;
  if (truth.extents.size() == 1) {
    const Signal1D xh(est.data), xt(truth.data);
    double d2 = 0.0;
    for (std::size_t i = 0; i < xt.length(); ++i) d2 += (xh[i] - xt[i]) * (xh[i] - xt[i]);
    if (!(xt.squared_norm() > 0.0)) throw DegenerateInput("ground truth has zero norm");
    j["relative_error"] = std::sqrt(d2 / xt.squared_norm());
  } else {
    const Image2D xh(Grid2D(est.extents[0], est.extents[1], est.data));
    const Image2D xt(Grid2D(truth.extents[0], truth.extents[1], truth.data));
    j["relative_error"] = align_and_error(xh, xt);
  }
  j["ndims"] = truth.extents.size();
  if (r.has_input("solution")) {
    const json sol = io::read_json(r.input("solution"));
    if (sol.contains("gamma_hat")) {
      j["gamma_hat"] = sol.at("gamma_hat");
      if (r.has("gamma_true")) {
        const double gt = r.d("gamma_true");
        require(gt > 0.0, "gamma_true must be positive");
        j["gamma_relative_error"] = std::abs(sol.at("gamma_hat").get<double>() - gt) / gt;
      }
    }
  }
  io::write_json(r.out("report.json"), j);
}

}  // namespace detail

/// Runs one stage. Validation and I/O failures throw; the caller maps them to
/// a nonzero exit status.
inline PipelineResult run_pipeline(const ExperimentConfig& raw) {
  const ExperimentConfig cfg = resolve(raw);
  fs::create_directories(cfg.out_dir);
  detail::Run r{cfg, {}};
  if (cfg.mode == "sim1d") detail::run_sim1d(r);
  else if (cfg.mode == "sim2d") detail::run_sim2d(r);
  else if (cfg.mode == "moments") detail::run_moments(r);
  else if (cfg.mode == "estimate") detail::run_estimate(r);
  else if (cfg.mode == "recover1d") detail::run_recover1d(r);
  else if (cfg.mode == "recover2d") detail::run_recover2d(r);
  else if (cfg.mode == "detect") detail::run_detect(r);
  else if (cfg.mode == "report") detail::run_report(r);

  PipelineResult out;
  out.manifest = json{{"artifact", "nopick"}, {"version", kVersion}, {"config", config_to_json(cfg)},
                      {"outputs", r.artifacts}};
  io::write_json(cfg.out_dir / "manifest.json", out.manifest);
  out.artifacts = std::move(r.artifacts);
  out.artifacts.push_back("manifest.json");
  return out;
}

}  // namespace nopick::pipeline
