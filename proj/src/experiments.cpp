#include "steinmp/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string_view>

#include "steinmp/csv.hpp"
#include "steinmp/hmc.hpp"
#include "steinmp/image.hpp"
#include "steinmp/metrics.hpp"
#include "steinmp/models.hpp"
#include "steinmp/mpsvgd.hpp"
#include "steinmp/rng.hpp"
#include "steinmp/svgd.hpp"

namespace steinmp {

namespace fs = std::filesystem;
using nlohmann::json;

Method parse_method(const std::string& name) {
  if (name == "svgd") return Method::Svgd;
  if (name == "mpsvgd-s") return Method::MpSvgdSingle;
  if (name == "mpsvgd-m") return Method::MpSvgdMulti;
  if (name == "hmc") return Method::Hmc;
  throw ConfigError("unknown method '" + name +
                    "' (expected svgd|mpsvgd-s|mpsvgd-m|hmc)");
}

std::string method_name(Method method) {
  switch (method) {
    case Method::Svgd: return "svgd";
    case Method::MpSvgdSingle: return "mpsvgd-s";
    case Method::MpSvgdMulti: return "mpsvgd-m";
    case Method::Hmc: return "hmc";
  }
  return "?";
}

KernelFamily parse_family(const std::string& name) {
  if (name == "rbf") return KernelFamily::Rbf;
  if (name == "imq") return KernelFamily::Imq;
  throw ConfigError("unknown kernel family '" + name + "' (expected rbf|imq)");
}

std::string family_name(KernelFamily family) {
  return family == KernelFamily::Rbf ? "rbf" : "imq";
}

ExperimentConfig parse_experiment_config(const json& j) {
  ExperimentConfig cfg;
  try {
    cfg.experiment = j.at("experiment").get<std::string>();
    if (j.contains("methods")) {
      for (const auto& m : j.at("methods")) {
        cfg.methods.push_back(parse_method(m.get<std::string>()));
      }
    } else if (j.contains("method")) {
      cfg.methods.push_back(parse_method(j.at("method").get<std::string>()));
    }
    if (j.contains("particles")) cfg.particles = j.at("particles").get<int>();
    if (j.contains("iterations")) cfg.iterations = j.at("iterations").get<int>();
    if (j.contains("kernel")) {
      cfg.family = parse_family(j.at("kernel").get<std::string>());
    }
    if (j.contains("bandwidth_exponent")) {
      cfg.bandwidth_exponent = j.at("bandwidth_exponent").get<double>();
    }
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("out")) cfg.out_dir = j.at("out").get<std::string>();
    for (auto& [key, value] : j.items()) {
      static const char* known[] = {"experiment", "methods",  "method",
                                    "particles",  "iterations", "kernel",
                                    "bandwidth_exponent", "seed", "out"};
      if (std::find(std::begin(known), std::end(known), key) ==
          std::end(known)) {
        cfg.extra[key] = value;
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

namespace {

std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

json config_echo(const ExperimentConfig& cfg, int resolved_iterations) {
  json methods = json::array();
  for (Method m : cfg.methods) methods.push_back(method_name(m));
  return json{{"experiment", cfg.experiment},
              {"methods", methods},
              {"particles", cfg.particles},
              {"iterations", resolved_iterations},
              {"kernel", family_name(cfg.family)},
              {"bandwidth_exponent", cfg.bandwidth_exponent},
              {"seed", cfg.seed},
              {"out", cfg.out_dir},
              {"extra", cfg.extra}};
}

// Creates the output directory, writes the manifest before any output and
// finalizes it with the duration and output list on finish().
class RunContext {
 public:
  RunContext(const ExperimentConfig& cfg, int resolved_iterations,
             const std::vector<std::string>& input_files)
      : dir_(cfg.out_dir), started_(std::chrono::steady_clock::now()) {
    echo_ = config_echo(cfg, resolved_iterations);
    std::uint64_t h = fnv1a64(echo_.dump());
    for (const std::string& path : input_files) {
      std::ifstream in(path, std::ios::binary);
      if (!in) throw ConfigError("cannot open input file " + path);
      std::ostringstream buf;
      buf << in.rdbuf();
      h = fnv1a64(buf.str(), h);
    }
    char hex[32];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(h));
    hash_ = hex;

    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw std::runtime_error("cannot create output dir " + dir_);
    write_manifest("running", 0.0);
  }

  // Registers (and returns) an output path inside the run directory.
  std::string path(const std::string& filename) {
    std::string full = (fs::path(dir_) / filename).string();
    outputs_.push_back(filename);
    return full;
  }

  RunResult finish() {
    double seconds = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - started_)
                         .count();
    write_manifest("complete", seconds);
    return RunResult{(fs::path(dir_) / "manifest.json").string(), outputs_};
  }

 private:
  void write_manifest(const std::string& status, double seconds) {
    json manifest{{"config", echo_},
                  {"input_hash", hash_},
                  {"status", status},
                  {"duration_seconds", seconds},
                  {"outputs", outputs_}};
    std::ofstream out(fs::path(dir_) / "manifest.json");
    if (!out) throw std::runtime_error("cannot write manifest in " + dir_);
    out << manifest.dump(2) << '\n';
  }

  std::string dir_;
  std::chrono::steady_clock::time_point started_;
  json echo_;
  std::string hash_;
  std::vector<std::string> outputs_;
};

class DiagnosticsCsvWriter {
 public:
  explicit DiagnosticsCsvWriter(const std::string& path) : out_(path) {
    if (!out_) throw std::runtime_error("cannot open " + path);
    out_ << diagnostics_csv_header() << '\n';
    sink_ = [this](const DiagnosticsRecord& rec) {
      out_ << diagnostics_csv_row(rec) << '\n';
      if (!first_) first_ = rec;
      last_ = rec;
    };
  }
  const DiagnosticsSink& sink() const { return sink_; }
  const DiagnosticsRecord& first() const { return *first_; }
  const DiagnosticsRecord& last() const { return *last_; }

 private:
  std::ofstream out_;
  DiagnosticsSink sink_;
  std::optional<DiagnosticsRecord> first_;
  std::optional<DiagnosticsRecord> last_;
};

Eigen::MatrixXd gaussian_init(Eigen::Index m, Eigen::Index dim, double std_dev,
                              Rng rng) {
  Eigen::MatrixXd init(m, dim);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index d = 0; d < dim; ++d) init(i, d) = std_dev * rng.normal();
  }
  return init;
}

KernelSpec make_kernel(const ExperimentConfig& cfg, KernelLocality locality) {
  return KernelSpec{cfg.family,
                    BandwidthPolicy::median_heuristic(cfg.bandwidth_exponent),
                    locality};
}

SweepMode sweep_mode_from(const ExperimentConfig& cfg) {
  std::string mode = cfg.extra.value("sweep", "sequential");
  if (mode == "sequential") return SweepMode::Sequential;
  if (mode == "jacobi") return SweepMode::Jacobi;
  throw ConfigError("sweep must be sequential|jacobi");
}

AdagradConfig step_config(const ExperimentConfig& cfg) {
  AdagradConfig step;
  step.step0 = cfg.extra.value("step0", step.step0);
  step.fudge = cfg.extra.value("fudge", step.fudge);
  if (!(step.step0 > 0.0) || !(step.fudge > 0.0)) {
    throw ConfigError("step0 and fudge must be > 0");
  }
  return step;
}

Eigen::MatrixXd run_method(Method method, const ExperimentConfig& cfg,
                           int iterations, const FactorGraph& graph,
                           const Eigen::MatrixXd& init,
                           const DiagnosticsSink& sink) {
  switch (method) {
    case Method::Svgd: {
      SvgdConfig run{iterations, make_kernel(cfg, KernelLocality::Global),
                     step_config(cfg), cfg.seed};
      return run_svgd(run, graph, init, sink);
    }
    case Method::MpSvgdSingle:
    case Method::MpSvgdMulti: {
      KernelLocality locality = method == Method::MpSvgdSingle
                                    ? KernelLocality::SingleKernel
                                    : KernelLocality::MultiKernel;
      MpSvgdConfig run{iterations, make_kernel(cfg, locality), step_config(cfg),
                       sweep_mode_from(cfg), cfg.seed};
      return run_mpsvgd(run, graph, init, sink);
    }
    case Method::Hmc:
      break;
  }
  throw ConfigError("method hmc is not an engine for this experiment");
}

int resolved_particles(const ExperimentConfig& cfg, int fallback) {
  int m = cfg.particles < 0 ? fallback : cfg.particles;
  if (m < 1) throw ConfigError("particles must be >= 1");
  return m;
}

std::vector<int> int_list(const json& j, const char* key,
                          std::vector<int> fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<std::vector<int>>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(key) + " must be an integer list");
  }
}

}  // namespace

RunResult run_gaussian_collapse(const ExperimentConfig& cfg) {
  for (Method m : cfg.methods) {
    if (m != Method::Svgd) {
      throw ConfigError("gaussian-collapse supports only method svgd");
    }
  }
  const int iterations = cfg.iterations < 0 ? 2000 : cfg.iterations;
  std::vector<int> dims = int_list(cfg.extra, "dims", {2, 10, 50, 100});
  std::vector<int> particle_counts = int_list(
      cfg.extra, "particle_counts",
      cfg.particles < 0 ? std::vector<int>{50, 100, 200}
                        : std::vector<int>{resolved_particles(cfg, 50)});
  for (int m : particle_counts) {
    if (m < 1) throw ConfigError("particle_counts entries must be >= 1");
  }
  const double init_std = cfg.extra.value("init_std", 5.0);

  RunContext ctx(cfg, iterations, {});
  std::ofstream summary(ctx.path("summary.csv"));
  summary << "D,M,pamrf_inf_begin,pamrf_inf_end,pamrf_2_begin,pamrf_2_end,"
             "paksg_inf_begin,paksg_inf_end,paksg_2_begin,paksg_2_end,"
             "var_avg_begin,var_avg_end\n";

  for (int dim : dims) {
    FactorGraph graph = build_gaussian_toy(dim);
    for (int m : particle_counts) {
      std::string tag = "D" + std::to_string(dim) + "_M" + std::to_string(m);
      Eigen::MatrixXd init = gaussian_init(
          m, dim, init_std, Rng::substream(cfg.seed, "init-" + tag));
      DiagnosticsCsvWriter diag(ctx.path("collapse_" + tag + ".csv"));
      Eigen::MatrixXd final_particles =
          run_method(Method::Svgd, cfg, iterations, graph, init, diag.sink());
      write_matrix_csv(ctx.path("particles_" + tag + ".csv"), final_particles);
      const DiagnosticsRecord& b = diag.first();
      const DiagnosticsRecord& e = diag.last();
      summary << dim << ',' << m;
      for (double v : {b.pamrf_inf, e.pamrf_inf, b.pamrf_2, e.pamrf_2,
                       b.paksg_inf, e.paksg_inf, b.paksg_2, e.paksg_2,
                       b.marginal_var_avg, e.marginal_var_avg}) {
        summary << ',' << format_double(v);
      }
      summary << '\n';
    }
  }
  summary.close();
  return ctx.finish();
}

RunResult run_bandwidth_study(const ExperimentConfig& cfg) {
  for (Method m : cfg.methods) {
    if (m != Method::Svgd) {
      throw ConfigError("bandwidth-study supports only method svgd");
    }
  }
  const int particles = resolved_particles(cfg, 100);
  const int iterations = cfg.iterations < 0 ? 10000 : cfg.iterations;
  std::vector<double> alphas = {0.75, 1.0, 1.25, 1.5};
  if (cfg.extra.contains("alphas")) {
    alphas = cfg.extra.at("alphas").get<std::vector<double>>();
  }
  std::vector<int> dims = int_list(cfg.extra, "dims", {50});
  const double init_std = cfg.extra.value("init_std", 5.0);

  RunContext ctx(cfg, iterations, {});
  std::ofstream summary(ctx.path("summary.csv"));
  summary << "alpha,D,var_avg_end,max_abs_move_end\n";

  for (int dim : dims) {
    FactorGraph graph = build_gaussian_toy(dim);
    for (double alpha : alphas) {
      ExperimentConfig local = cfg;
      local.bandwidth_exponent = alpha;
      std::string tag = "a" + fmt_num(alpha) + "_D" + std::to_string(dim);
      Eigen::MatrixXd init =
          gaussian_init(particles, dim, init_std,
                        Rng::substream(cfg.seed, "init-" + tag));
      DiagnosticsCsvWriter diag(ctx.path("bandwidth_" + tag + ".csv"));
      run_method(Method::Svgd, local, iterations, graph, init, diag.sink());
      summary << format_double(alpha) << ',' << dim << ','
              << format_double(diag.last().marginal_var_avg) << ','
              << format_double(diag.last().max_abs_move) << '\n';
    }
  }
  summary.close();
  return ctx.finish();
}

namespace {

GridMrfSpec grid_spec_from(const ExperimentConfig& cfg, int rows, int cols,
                           std::string_view obs_stream) {
  GridMrfSpec spec;
  spec.rows = rows;
  spec.cols = cols;
  spec.observations = sample_grid_observations(
      spec, Rng::substream(cfg.seed, obs_stream).next_u64());
  return spec;
}

Eigen::MatrixXd subsample_rows(const Eigen::MatrixXd& bank, int count,
                               Rng rng) {
  const Eigen::Index n = bank.rows();
  if (count > n) throw ConfigError("not enough ground-truth samples");
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  Eigen::MatrixXd out(count, bank.cols());
  for (int i = 0; i < count; ++i) {
    auto j = i + static_cast<Eigen::Index>(rng.uniform() *
                                           static_cast<double>(n - i));
    std::swap(idx[i], idx[j]);
    out.row(i) = bank.row(idx[i]);
  }
  return out;
}

}  // namespace

RunResult run_grid_mrf(const ExperimentConfig& cfg) {
  const int particles = resolved_particles(cfg, 50);
  const int iterations = cfg.iterations < 0 ? 2000 : cfg.iterations;
  std::vector<Method> methods = cfg.methods;
  if (methods.empty()) {
    methods = {Method::Svgd, Method::MpSvgdSingle, Method::MpSvgdMulti,
               Method::Hmc};
  }

  // PAMRF-versus-dimension sweep (no ground truth involved).
  if (cfg.extra.contains("sweep_grids")) {
    RunContext ctx(cfg, iterations, {});
    std::ofstream table(ctx.path("pamrf_vs_dim.csv"));
    table << "method,rows,cols,dim,pamrf_inf,pamrf_2\n";
    for (const auto& rc : cfg.extra.at("sweep_grids")) {
      int rows = rc.at(0).get<int>();
      int cols = rc.at(1).get<int>();
      std::string size_tag = std::to_string(rows) + "x" + std::to_string(cols);
      GridMrfSpec spec =
          grid_spec_from(cfg, rows, cols, "observations-" + size_tag);
      FactorGraph graph = build_grid_mrf(spec);
      for (Method method : methods) {
        if (method == Method::Hmc) {
          throw ConfigError("hmc has no repulsive force; drop it from the "
                            "sweep methods");
        }
        std::string tag = method_name(method) + "_" + size_tag;
        Eigen::MatrixXd init =
            gaussian_init(particles, graph.dimension(), 5.0,
                          Rng::substream(cfg.seed, "init-" + tag));
        DiagnosticsCsvWriter diag(ctx.path("sweep_" + tag + ".csv"));
        run_method(method, cfg, iterations, graph, init, diag.sink());
        table << method_name(method) << ',' << rows << ',' << cols << ','
              << rows * cols << ',' << format_double(diag.last().pamrf_inf)
              << ',' << format_double(diag.last().pamrf_2) << '\n';
      }
    }
    table.close();
    return ctx.finish();
  }

  int rows = 3;
  int cols = 3;
  if (cfg.extra.contains("grid")) {
    rows = cfg.extra.at("grid").value("rows", 3);
    cols = cfg.extra.at("grid").value("cols", 3);
  }
  if (rows < 1 || cols < 1) throw ConfigError("grid dims must be >= 1");

  std::vector<std::string> inputs;
  std::string truth_path = cfg.extra.value("ground_truth", "");
  if (!truth_path.empty()) {
    if (!fs::exists(truth_path)) {
      throw ConfigError("missing ground truth file " + truth_path);
    }
    inputs.push_back(truth_path);
  }

  RunContext ctx(cfg, iterations, inputs);
  GridMrfSpec spec = grid_spec_from(cfg, rows, cols, "observations");
  write_matrix_csv(ctx.path("observations.csv"), spec.observations);
  FactorGraph graph = build_grid_mrf(spec);

  Eigen::MatrixXd truth;
  if (!truth_path.empty()) {
    try {
      truth = read_matrix_csv(truth_path);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
    if (truth.cols() != graph.dimension()) {
      throw ConfigError("ground truth dimension mismatch");
    }
  } else {
    HmcConfig hmc;
    if (cfg.extra.contains("hmc")) {
      const json& h = cfg.extra.at("hmc");
      hmc.chains = h.value("chains", hmc.chains);
      hmc.samples_per_chain = h.value("samples_per_chain",
                                      hmc.samples_per_chain);
      hmc.burn_in = h.value("burn_in", hmc.burn_in);
      hmc.leapfrog_steps = h.value("leapfrog_steps", hmc.leapfrog_steps);
    }
    hmc.seed = Rng::substream(cfg.seed, "hmc").next_u64();
    Eigen::MatrixXd chain_init =
        gaussian_init(hmc.chains, graph.dimension(), 5.0,
                      Rng::substream(cfg.seed, "hmc-init"));
    SampleBank bank = sample_hmc(hmc, graph, chain_init);
    truth = std::move(bank.samples);
    write_matrix_csv(ctx.path("ground_truth.csv"), truth);
    std::ofstream stats(ctx.path("hmc_stats.csv"));
    stats << "acceptance_rate\n"
          << format_double(bank.acceptance_rate) << '\n';
  }

  const int fn_draws = cfg.extra.value("test_fn_draws", 10);
  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> draws;
  for (int k = 0; k < fn_draws; ++k) {
    Rng rng = Rng::substream(cfg.seed, "test-fn-draw-" + std::to_string(k));
    TestFunctionSpec probe = TestFunctionSpec::randomized(
        TestFunctionSpec::Kind::Sigmoid, graph.dimension(), rng);
    draws.emplace_back(probe.omega, probe.offset);
  }

  std::ofstream mse_table(ctx.path("mse_table.csv"));
  mse_table << "method,fn,mse\n";
  static const std::pair<TestFunctionSpec::Kind, const char*> kFns[] = {
      {TestFunctionSpec::Kind::Identity, "x"},
      {TestFunctionSpec::Kind::Square, "x2"},
      {TestFunctionSpec::Kind::Sigmoid, "sigmoid"},
      {TestFunctionSpec::Kind::Cosine, "cosine"}};

  const int particles_count = particles;
  for (Method method : methods) {
    const std::string name = method_name(method);
    Eigen::MatrixXd particles;
    if (method == Method::Hmc) {
      particles = subsample_rows(truth, particles_count,
                                 Rng::substream(cfg.seed, "hmc-subsample"));
    } else {
      Eigen::MatrixXd init =
          gaussian_init(particles_count, graph.dimension(), 5.0,
                        Rng::substream(cfg.seed, "init-" + name));
      DiagnosticsCsvWriter diag(ctx.path("diagnostics_" + name + ".csv"));
      particles = run_method(method, cfg, iterations, graph, init, diag.sink());
    }
    write_matrix_csv(ctx.path("particles_" + name + ".csv"), particles);

    MarginalStats stats = marginal_stats(particles);
    MarginalStats truth_stats = marginal_stats(truth);
    std::ofstream marginals(ctx.path("marginals_" + name + ".csv"));
    marginals << "node,mean,variance,truth_mean,truth_variance\n";
    for (int d = 0; d < graph.dimension(); ++d) {
      marginals << d << ',' << format_double(stats.mean[d]) << ','
                << format_double(stats.variance[d]) << ','
                << format_double(truth_stats.mean[d]) << ','
                << format_double(truth_stats.variance[d]) << '\n';
    }

    for (const auto& [kind, label] : kFns) {
      double total = 0.0;
      for (const auto& [omega, offset] : draws) {
        TestFunctionSpec fn;
        fn.kind = kind;
        fn.omega = omega;
        fn.offset = offset;
        total += mse_expectation(particles, truth, fn);
      }
      mse_table << name << ',' << label << ','
                << format_double(total / static_cast<double>(fn_draws)) << '\n';
    }
  }
  mse_table.close();
  return ctx.finish();
}

RunResult run_denoise(const ExperimentConfig& cfg) {
  const int particles_count = resolved_particles(cfg, 50);
  const int iterations = cfg.iterations < 0 ? 200 : cfg.iterations;
  Method method = cfg.methods.empty() ? Method::MpSvgdMulti : cfg.methods[0];
  if (cfg.methods.size() > 1) {
    throw ConfigError("denoise runs a single method per invocation");
  }
  if (method == Method::Hmc) {
    throw ConfigError("hmc is not supported for denoise");
  }

  std::string image_path = cfg.extra.value("image", "");
  if (image_path.empty()) throw ConfigError("denoise requires an input image");
  if (!fs::exists(image_path)) {
    throw ConfigError("missing input image " + image_path);
  }
  const bool pre_noised = cfg.extra.value("pre_noised", false);
  std::string clean_path = cfg.extra.value("clean_image", "");
  std::string gsm_path = cfg.extra.value("gsm_params", "");

  std::vector<std::string> inputs = {image_path};
  if (!gsm_path.empty()) inputs.push_back(gsm_path);
  if (!clean_path.empty()) inputs.push_back(clean_path);
  RunContext ctx(cfg, iterations, inputs);

  GsmFoeSpec gsm;
  Eigen::MatrixXd clean;
  Eigen::MatrixXd noisy;
  bool have_clean = false;
  try {
    gsm = gsm_path.empty() ? default_gsm_foe_spec()
                           : load_gsm_foe_spec(gsm_path);
    if (cfg.extra.contains("noise_sigma")) {
      gsm.noise_sigma = cfg.extra.at("noise_sigma").get<double>();
      if (!(gsm.noise_sigma > 0.0)) throw ConfigError("noise_sigma must be > 0");
    }
    if (pre_noised) {
      noisy = read_pgm(image_path);
      if (!clean_path.empty()) {
        clean = read_pgm(clean_path);
        have_clean = true;
      }
    } else {
      clean = read_pgm(image_path);
      have_clean = true;
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    // malformed PGM or parameter file: a bad input, not an engine failure
    throw ConfigError(e.what());
  }
  if (!pre_noised) {
    Rng noise_rng = Rng::substream(cfg.seed, "noise");
    noisy = add_gaussian_noise(clean, gsm.noise_sigma, noise_rng);
    write_pgm(ctx.path("noisy.pgm"), noisy);
  }

  gsm.observed = noisy;
  FactorGraph graph = build_foe_denoiser(gsm);
  const Eigen::Index height = noisy.rows();
  const Eigen::Index width = noisy.cols();
  const Eigen::Index dim = height * width;

  // Particles start at the observed image plus noise-scale jitter.
  double jitter = cfg.extra.value("init_jitter", gsm.noise_sigma);
  Rng init_rng = Rng::substream(cfg.seed, "init");
  Eigen::MatrixXd particles(particles_count, dim);
  for (int i = 0; i < particles_count; ++i) {
    for (Eigen::Index r = 0; r < height; ++r) {
      for (Eigen::Index c = 0; c < width; ++c) {
        particles(i, r * width + c) = noisy(r, c) + jitter * init_rng.normal();
      }
    }
  }

  DiagnosticsCsvWriter diag(ctx.path("diagnostics.csv"));
  particles = run_method(method, cfg, iterations, graph, particles, diag.sink());

  Eigen::VectorXd mean = particles.colwise().mean();
  Eigen::MatrixXd denoised(height, width);
  for (Eigen::Index r = 0; r < height; ++r) {
    for (Eigen::Index c = 0; c < width; ++c) {
      denoised(r, c) = mean[r * width + c];
    }
  }
  write_pgm(ctx.path("denoised.pgm"), denoised);

  auto quantize = [](const Eigen::MatrixXd& img) {
    return img.unaryExpr([](double v) {
      return static_cast<double>(std::lround(std::clamp(v, 0.0, 255.0)));
    });
  };
  std::ofstream metrics(ctx.path("metrics.csv"));
  metrics << "image,psnr_db,ssim\n";
  if (have_clean) {
    Eigen::MatrixXd noisy_q = quantize(noisy);
    Eigen::MatrixXd denoised_q = quantize(denoised);
    metrics << "noisy," << format_double(psnr(clean, noisy_q)) << ','
            << format_double(ssim(clean, noisy_q)) << '\n';
    metrics << "denoised," << format_double(psnr(clean, denoised_q)) << ','
            << format_double(ssim(clean, denoised_q)) << '\n';
  }
  metrics.close();
  return ctx.finish();
}

RunResult run_experiment(const ExperimentConfig& cfg) {
  if (cfg.experiment == "gaussian-collapse") return run_gaussian_collapse(cfg);
  if (cfg.experiment == "grid-mrf") return run_grid_mrf(cfg);
  if (cfg.experiment == "bandwidth-study") return run_bandwidth_study(cfg);
  if (cfg.experiment == "denoise") return run_denoise(cfg);
  throw ConfigError("unknown experiment '" + cfg.experiment + "'");
}

}  // namespace steinmp
