#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "steinmp/kernels.hpp"

namespace steinmp {

// Bad user input (CLI flags, config JSON, incompatible method/experiment).
// The CLI maps this to exit code 1; other exceptions exit 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Method { Svgd, MpSvgdSingle, MpSvgdMulti, Hmc };

Method parse_method(const std::string& name);       // svgd|mpsvgd-s|mpsvgd-m|hmc
std::string method_name(Method method);
KernelFamily parse_family(const std::string& name);  // rbf|imq
std::string family_name(KernelFamily family);

// Batch experiment description. `extra` carries experiment-specific keys
// (documented in the README next to each experiment).
struct ExperimentConfig {
  std::string experiment;        // gaussian-collapse|grid-mrf|bandwidth-study|denoise
  std::vector<Method> methods;   // empty = per-experiment default
  int particles = -1;            // M, -1 = per-experiment default
  int iterations = -1;           // -1 = per-experiment default
  KernelFamily family = KernelFamily::Rbf;
  double bandwidth_exponent = 1.0;  // alpha in h = D_eff^(alpha-1) med^2
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  nlohmann::json extra = nlohmann::json::object();
};

ExperimentConfig parse_experiment_config(const nlohmann::json& j);

struct RunResult {
  std::string manifest_path;
  std::vector<std::string> outputs;
};

// Dispatches on config.experiment; writes a manifest before any output file
// and finalizes it (duration, output list) when the run completes.
RunResult run_experiment(const ExperimentConfig& config);

RunResult run_gaussian_collapse(const ExperimentConfig& config);
RunResult run_grid_mrf(const ExperimentConfig& config);
RunResult run_bandwidth_study(const ExperimentConfig& config);
RunResult run_denoise(const ExperimentConfig& config);

}  // namespace steinmp
