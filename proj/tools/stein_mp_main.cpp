#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "steinmp/experiments.hpp"

namespace {

struct CliOptions {
  std::string config_path;
  std::string out_dir;
  std::string method;
  std::string grid;
  std::string image;
  std::string gsm_params;
  std::string kernel;
  std::int64_t seed = -1;
  int particles = -1;
  int iterations = -2;
  double bandwidth_exponent = 0.0;
  bool has_alpha = false;
};

void apply_overrides(steinmp::ExperimentConfig& cfg, const CliOptions& opt) {
  if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;
  if (!opt.method.empty()) cfg.methods = {steinmp::parse_method(opt.method)};
  if (!opt.kernel.empty()) cfg.family = steinmp::parse_family(opt.kernel);
  if (opt.seed >= 0) cfg.seed = static_cast<std::uint64_t>(opt.seed);
  if (opt.particles >= 0) cfg.particles = opt.particles;
  if (opt.iterations >= -1) cfg.iterations = opt.iterations;
  if (opt.has_alpha) cfg.bandwidth_exponent = opt.bandwidth_exponent;
  if (!opt.grid.empty()) {
    auto sep = opt.grid.find('x');
    if (sep == std::string::npos) {
      throw steinmp::ConfigError("--grid expects ROWSxCOLS, e.g. 3x3");
    }
    try {
      cfg.extra["grid"] = {{"rows", std::stoi(opt.grid.substr(0, sep))},
                           {"cols", std::stoi(opt.grid.substr(sep + 1))}};
    } catch (const std::exception&) {
      throw steinmp::ConfigError("--grid expects ROWSxCOLS, e.g. 3x3");
    }
  }
  if (!opt.image.empty()) cfg.extra["image"] = opt.image;
  if (!opt.gsm_params.empty()) cfg.extra["gsm_params"] = opt.gsm_params;
}

int run(const std::string& experiment, const CliOptions& opt) {
  steinmp::ExperimentConfig cfg;
  try {
    if (!opt.config_path.empty()) {
      std::ifstream in(opt.config_path);
      if (!in) {
        throw steinmp::ConfigError("cannot open config " + opt.config_path);
      }
      nlohmann::json j;
      try {
        in >> j;
      } catch (const nlohmann::json::exception& e) {
        throw steinmp::ConfigError("config parse error: " +
                                   std::string(e.what()));
      }
      if (!j.contains("experiment")) j["experiment"] = experiment;
      cfg = steinmp::parse_experiment_config(j);
      if (cfg.experiment != experiment) {
        throw steinmp::ConfigError("config experiment '" + cfg.experiment +
                                   "' does not match subcommand '" +
                                   experiment + "'");
      }
    } else {
      cfg.experiment = experiment;
    }
    apply_overrides(cfg, opt);
  } catch (const steinmp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  }

  try {
    steinmp::RunResult result = steinmp::run_experiment(cfg);
    std::cout << "wrote " << result.manifest_path << '\n';
    for (const std::string& f : result.outputs) {
      std::cout << "  " << f << '\n';
    }
    return 0;
  } catch (const steinmp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stein-mp: particle-based variational inference experiments "
               "on continuous graphical models"};
  app.require_subcommand(1);

  CliOptions opt;
  std::vector<CLI::App*> subs;
  for (const char* name : {"gaussian-collapse", "grid-mrf", "bandwidth-study",
                           "denoise"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", opt.config_path, "JSON config file");
    sub->add_option("--out", opt.out_dir, "output directory");
    sub->add_option("--seed", opt.seed, "root seed");
    sub->add_option("--method", opt.method, "svgd|mpsvgd-s|mpsvgd-m|hmc");
    sub->add_option("--particles", opt.particles, "number of particles M");
    sub->add_option("--iterations", opt.iterations, "iterations / sweeps");
    sub->add_option("--kernel", opt.kernel, "rbf|imq");
    sub->add_option("--alpha", opt.bandwidth_exponent,
                    "bandwidth exponent (h = D^(alpha-1) med^2)")
        ->each([&](const std::string&) { opt.has_alpha = true; });
    if (std::string(name) == "grid-mrf") {
      sub->add_option("--grid", opt.grid, "grid size ROWSxCOLS");
    }
    if (std::string(name) == "denoise") {
      sub->add_option("--image", opt.image, "input PGM image");
      sub->add_option("--gsm-params", opt.gsm_params,
                      "GSM prior parameter JSON");
    }
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  for (CLI::App* sub : subs) {
    if (sub->parsed()) return run(sub->get_name(), opt);
  }
  return 1;
}
