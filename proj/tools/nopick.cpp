// nopick: simulate micrographs, estimate moments, recover signals.

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nopick/pipeline.hpp"

namespace {

using nopick::pipeline::ExperimentConfig;
using nopick::pipeline::json;
using nopick::pipeline::Kind;

struct Command {
  std::string name;
  std::vector<std::string> modes;  // first is the default
  std::string help;
  std::optional<std::string> method;  // forced estimate method
};

std::string flag_name(std::string s) {
  for (char& c : s)
    if (c == '_') c = '-';
  return "--" + s;
}

// Values given on the command line are read as JSON when they parse,
// otherwise as plain strings.
json parse_value(const std::string& s) {
  try {
    return json::parse(s);
  } catch (const json::exception&) {
    return s;
  }
}

struct Bound {
  CLI::App* app = nullptr;
  const Command* cmd = nullptr;
  std::map<std::string, std::string> scalars;
  std::map<std::string, std::vector<std::string>> lists;
  std::map<std::string, CLI::Option*> opts;
  std::map<std::string, std::string> input_paths;
  std::map<std::string, std::vector<std::string>> input_lists;
  std::map<std::string, CLI::Option*> input_opts;
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  unsigned threads = 1;
  int ndims = 1;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* threads_opt = nullptr;
  CLI::Option* ndims_opt = nullptr;
};

void bind(Bound& b) {
  auto* app = b.app;
  app->add_option("--config", b.config_path, "JSON config or manifest to run")->check(CLI::ExistingFile);
  app->add_option("--out-dir", b.out_dir, "directory for artifacts")->capture_default_str();
  b.seed_opt = app->add_option("--seed", b.seed, "master seed");
  b.threads_opt = app->add_option("--threads", b.threads, "worker threads")->check(CLI::PositiveNumber);
  if (b.cmd->name == "simulate")
    b.ndims_opt = app->add_option("--ndims", b.ndims, "1 or 2")->check(CLI::IsMember({1, 2}));

  for (const auto& mode : b.cmd->modes) {
    const auto& schema = nopick::pipeline::schema_for(mode);
    for (const auto& p : schema.params) {
      if (b.opts.count(p.name) || (b.cmd->method && p.name == "method")) continue;
      const std::string help = p.help + " [default: " + p.def.dump() + "]";
      if (p.kind == Kind::real_list)
        b.opts[p.name] = app->add_option(flag_name(p.name), b.lists[p.name], help)->delimiter(',');
      else
        b.opts[p.name] = app->add_option(flag_name(p.name), b.scalars[p.name], help);
    }
    for (const auto& in : schema.inputs) {
      if (b.input_opts.count(in.name)) continue;
      if (in.list)
        b.input_opts[in.name] = app->add_option(flag_name(in.name), b.input_lists[in.name], in.help);
      else
        b.input_opts[in.name] = app->add_option(flag_name(in.name), b.input_paths[in.name], in.help);
    }
  }
}

ExperimentConfig build_config(const Bound& b) {
  ExperimentConfig cfg;
  const auto& modes = b.cmd->modes;
  if (!b.config_path.empty()) {
    cfg = nopick::pipeline::config_from_json(nopick::io::read_json(b.config_path));
    if (std::find(modes.begin(), modes.end(), cfg.mode) == modes.end())
      throw nopick::InvalidArgument("config mode '" + cfg.mode + "' does not match subcommand '" + b.cmd->name + "'");
    if (b.ndims_opt && b.ndims_opt->count() && cfg.mode != (b.ndims == 2 ? "sim2d" : "sim1d"))
      throw nopick::InvalidArgument("--ndims conflicts with the config mode '" + cfg.mode + "'");
  } else {
    cfg.mode = (b.ndims_opt && b.ndims == 2) ? "sim2d" : modes.front();
  }
  if (b.cmd->method) {
    if (cfg.params.contains("method") && cfg.params.at("method") != *b.cmd->method)
      throw nopick::InvalidArgument("config method does not match subcommand '" + b.cmd->name + "'");
    cfg.params["method"] = *b.cmd->method;
  }
  if (b.seed_opt->count()) cfg.seed = b.seed;
  if (b.threads_opt->count()) cfg.threads = b.threads;
  cfg.out_dir = b.out_dir;

  for (const auto& [name, opt] : b.opts) {
    if (!opt->count()) continue;
    if (b.lists.count(name)) {
      json arr = json::array();
      for (const auto& s : b.lists.at(name)) arr.push_back(parse_value(s));
      cfg.params[name] = arr;
    } else {
      cfg.params[name] = parse_value(b.scalars.at(name));
    }
  }
  for (const auto& [name, opt] : b.input_opts) {
    if (!opt->count()) continue;
    if (b.input_lists.count(name))
      cfg.inputs[name] = b.input_lists.at(name);
    else
      cfg.inputs[name] = b.input_paths.at(name);
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Command> commands = {
      {"simulate", {"sim1d", "sim2d"}, "synthesize micrographs with planted occurrences", std::nullopt},
      {"moments", {"moments"}, "streaming autocorrelations of 1-D micrographs", std::nullopt},
      {"estimate-gamma", {"estimate"}, "density from moments with known noise level", "known_sigma"},
      {"estimate-gamma-sigma", {"estimate"}, "density and noise variance from moments", "joint"},
      {"recover1d", {"recover1d"}, "least-squares signal recovery from moments", std::nullopt},
      {"recover2d", {"recover2d"}, "power spectrum estimation and RRR phase retrieval", std::nullopt},
      {"detect-limit", {"detect"}, "optimal detector success rate against noise level", std::nullopt},
      {"report", {"report"}, "relative error of an estimate against ground truth", std::nullopt},
  };

  CLI::App app{"nopick: signal recovery from micrographs without particle picking"};
  app.set_version_flag("--version", std::string(nopick::kVersion));
  app.require_subcommand(1);

  std::vector<Bound> bound(commands.size());
  for (std::size_t i = 0; i < commands.size(); ++i) {
    bound[i].cmd = &commands[i];
    bound[i].app = app.add_subcommand(commands[i].name, commands[i].help);
    bind(bound[i]);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  for (auto& b : bound) {
    if (!b.app->parsed()) continue;
    try {
      const auto res = nopick::pipeline::run_pipeline(build_config(b));
      for (const auto& a : res.artifacts) std::cout << (std::filesystem::path(b.out_dir) / a).string() << "\n";
      return res.status;
    } catch (const nopick::InvalidArgument& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    } catch (const nopick::FormatError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }
  return 1;
}
