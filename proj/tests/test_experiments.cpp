#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "steinmp/csv.hpp"
#include "steinmp/experiments.hpp"
#include "steinmp/image.hpp"

using namespace steinmp;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  explicit TempDir(std::string name) : path(std::move(name)) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string path;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Split one CSV line on commas.
std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) ++n;
  return n;
}

void check_outputs_identical(const RunResult& a_res, const fs::path& a_dir,
                             const RunResult& b_res, const fs::path& b_dir) {
  REQUIRE(a_res.outputs == b_res.outputs);
  for (const std::string& name : a_res.outputs) {
    CHECK_MESSAGE(slurp(a_dir / name) == slurp(b_dir / name), name);
  }
}

}  // namespace

TEST_SUITE("experiments") {

TEST_CASE("gaussian-collapse with zero iterations reports the init variance") {
  TempDir dir("exp_collapse_zero");
  ExperimentConfig cfg;
  cfg.experiment = "gaussian-collapse";
  cfg.particles = 50;
  cfg.iterations = 0;
  cfg.seed = 1;
  cfg.out_dir = dir.path;
  cfg.extra["dims"] = {1};
  RunResult result = run_gaussian_collapse(cfg);

  std::ifstream summary(fs::path(dir.path) / "summary.csv");
  std::string header, row;
  REQUIRE(std::getline(summary, header));
  REQUIRE(std::getline(summary, row));
  auto cells = split(row);
  auto hdr = split(header);
  REQUIRE(cells.size() == hdr.size());
  double var_begin = 0.0, var_end = 0.0;
  for (std::size_t i = 0; i < hdr.size(); ++i) {
    if (hdr[i] == "var_avg_begin") var_begin = std::stod(cells[i]);
    if (hdr[i] == "var_avg_end") var_end = std::stod(cells[i]);
  }
  CHECK(var_begin == var_end);
  CHECK(var_begin > 12.0);  // init N(0, 25); s.d. of the sample variance ~ 5
  CHECK(var_begin < 45.0);

  // Trajectory file has exactly the iteration-0 record.
  CHECK(count_lines(fs::path(dir.path) / "collapse_D1_M50.csv") == 2);

  // Manifest written and finalized.
  json manifest;
  std::ifstream in(result.manifest_path);
  in >> manifest;
  CHECK(manifest.at("status") == "complete");
  CHECK(manifest.at("input_hash").get<std::string>().size() == 16);
  CHECK(manifest.at("outputs").size() == result.outputs.size());
}

TEST_CASE("gaussian-collapse reruns are byte identical") {
  auto run_once = [](const std::string& out) {
    ExperimentConfig cfg;
    cfg.experiment = "gaussian-collapse";
    cfg.particles = 20;
    cfg.iterations = 30;
    cfg.seed = 7;
    cfg.out_dir = out;
    cfg.extra["dims"] = {2, 5};
    return run_gaussian_collapse(cfg);
  };
  TempDir a("exp_collapse_a"), b("exp_collapse_b");
  RunResult ra = run_once(a.path);
  RunResult rb = run_once(b.path);
  check_outputs_identical(ra, a.path, rb, b.path);
}

TEST_CASE("bandwidth-study emits trajectories and honors the budget") {
  TempDir dir("exp_bandwidth");
  ExperimentConfig cfg;
  cfg.experiment = "bandwidth-study";
  cfg.particles = 15;
  cfg.iterations = 40;
  cfg.seed = 3;
  cfg.out_dir = dir.path;
  cfg.extra["alphas"] = {1.0};
  cfg.extra["dims"] = {5};
  run_bandwidth_study(cfg);
  CHECK(count_lines(fs::path(dir.path) / "bandwidth_a1_D5.csv") == 42);
  CHECK(fs::exists(fs::path(dir.path) / "summary.csv"));
}

TEST_CASE("converged bandwidth study orders end variance by alpha") {
  TempDir dir("exp_bandwidth_order");
  ExperimentConfig cfg;
  cfg.experiment = "bandwidth-study";
  cfg.particles = 50;
  cfg.iterations = 3000;
  cfg.seed = 11;
  cfg.out_dir = dir.path;
  cfg.extra["alphas"] = {0.75, 1.0};
  cfg.extra["dims"] = {50};
  run_bandwidth_study(cfg);

  std::ifstream summary(fs::path(dir.path) / "summary.csv");
  std::string line;
  std::getline(summary, line);  // header
  double var_075 = 0.0, var_100 = 0.0;
  bool converged = true;
  while (std::getline(summary, line)) {
    auto cells = split(line);
    REQUIRE(cells.size() == 4);
    double alpha = std::stod(cells[0]);
    double var = std::stod(cells[2]);
    converged = converged && std::stod(cells[3]) < 0.05;
    if (alpha == 0.75) var_075 = var;
    if (alpha == 1.0) var_100 = var;
  }
  REQUIRE(converged);
  CHECK(var_075 <= var_100 * 1.05);
}

TEST_CASE("grid-mrf smoke run produces finite mse entries") {
  TempDir dir("exp_grid_smoke");
  ExperimentConfig cfg;
  cfg.experiment = "grid-mrf";
  cfg.particles = 20;
  cfg.iterations = 60;
  cfg.seed = 5;
  cfg.out_dir = dir.path;
  cfg.extra["grid"] = {{"rows", 2}, {"cols", 2}};
  cfg.extra["hmc"] = {{"chains", 2},
                      {"samples_per_chain", 500},
                      {"burn_in", 200}};
  RunResult result = run_grid_mrf(cfg);

  std::ifstream table(fs::path(dir.path) / "mse_table.csv");
  std::string line;
  std::getline(table, line);
  CHECK(line == "method,fn,mse");
  int rows = 0;
  while (std::getline(table, line)) {
    auto cells = split(line);
    REQUIRE(cells.size() == 3);
    double mse = std::stod(cells[2]);
    CHECK(std::isfinite(mse));
    CHECK(mse >= 0.0);
    ++rows;
  }
  CHECK(rows == 4 * 4);  // four methods x four test functions
  CHECK(fs::exists(fs::path(dir.path) / "observations.csv"));
  CHECK(fs::exists(fs::path(dir.path) / "ground_truth.csv"));
  CHECK(fs::exists(fs::path(dir.path) / "particles_mpsvgd-m.csv"));
  CHECK(fs::exists(fs::path(dir.path) / "marginals_svgd.csv"));
  for (const std::string& name : result.outputs) {
    CHECK(fs::exists(fs::path(dir.path) / name));
  }
}

TEST_CASE("grid-mrf accepts a ground-truth file and rejects a missing one") {
  TempDir dir("exp_grid_gt");
  // First generate a bank with one run.
  ExperimentConfig cfg;
  cfg.experiment = "grid-mrf";
  cfg.particles = 10;
  cfg.iterations = 20;
  cfg.seed = 5;
  cfg.out_dir = dir.path;
  cfg.extra["grid"] = {{"rows", 2}, {"cols", 2}};
  cfg.extra["hmc"] = {{"chains", 2},
                      {"samples_per_chain", 300},
                      {"burn_in", 100}};
  run_grid_mrf(cfg);

  TempDir dir2("exp_grid_gt2");
  ExperimentConfig reuse = cfg;
  reuse.out_dir = dir2.path;
  reuse.extra["ground_truth"] =
      (fs::path(dir.path) / "ground_truth.csv").string();
  run_grid_mrf(reuse);
  CHECK(!fs::exists(fs::path(dir2.path) / "ground_truth.csv"));
  CHECK(fs::exists(fs::path(dir2.path) / "mse_table.csv"));

  ExperimentConfig missing = cfg;
  missing.out_dir = "exp_grid_gt3";
  missing.extra["ground_truth"] = "nope_not_here.csv";
  CHECK_THROWS_AS(run_grid_mrf(missing), ConfigError);
  fs::remove_all("exp_grid_gt3");
}

TEST_CASE("grid-mrf pamrf sweep table") {
  TempDir dir("exp_grid_sweep");
  ExperimentConfig cfg;
  cfg.experiment = "grid-mrf";
  cfg.particles = 15;
  cfg.iterations = 40;
  cfg.seed = 9;
  cfg.out_dir = dir.path;
  cfg.methods = {Method::Svgd, Method::MpSvgdMulti};
  cfg.extra["sweep_grids"] = {{2, 2}, {2, 3}};
  run_grid_mrf(cfg);

  std::ifstream table(fs::path(dir.path) / "pamrf_vs_dim.csv");
  std::string line;
  std::getline(table, line);
  CHECK(line == "method,rows,cols,dim,pamrf_inf,pamrf_2");
  int rows = 0;
  while (std::getline(table, line)) {
    CHECK(split(line).size() == 6);
    ++rows;
  }
  CHECK(rows == 4);  // two methods x two sizes
}

TEST_CASE("denoise smoke run beats nothing but completes") {
  TempDir dir("exp_denoise_smoke");
  fs::create_directories(dir.path);
  std::string image_path = (fs::path(dir.path) / "clean.pgm").string();
  write_pgm(image_path, make_piecewise_constant_image(16, 16, 4));

  ExperimentConfig cfg;
  cfg.experiment = "denoise";
  cfg.particles = 8;
  cfg.iterations = 30;
  cfg.seed = 13;
  cfg.out_dir = (fs::path(dir.path) / "run").string();
  cfg.extra["image"] = image_path;
  RunResult result = run_denoise(cfg);

  fs::path run_dir(cfg.out_dir);
  CHECK(fs::exists(run_dir / "noisy.pgm"));
  CHECK(fs::exists(run_dir / "denoised.pgm"));
  CHECK(count_lines(run_dir / "metrics.csv") == 3);
  CHECK(count_lines(run_dir / "diagnostics.csv") == 32);
  CHECK(result.outputs.size() == 4);

  Eigen::MatrixXd out = read_pgm((run_dir / "denoised.pgm").string());
  CHECK(out.rows() == 16);
  CHECK(out.cols() == 16);
}

TEST_CASE("denoise with a single particle runs mode seeking") {
  TempDir dir("exp_denoise_m1");
  fs::create_directories(dir.path);
  std::string image_path = (fs::path(dir.path) / "clean.pgm").string();
  write_pgm(image_path, make_piecewise_constant_image(16, 16, 6));

  ExperimentConfig cfg;
  cfg.experiment = "denoise";
  cfg.particles = 1;
  cfg.iterations = 20;
  cfg.seed = 17;
  cfg.out_dir = (fs::path(dir.path) / "run").string();
  cfg.extra["image"] = image_path;
  RunResult result = run_denoise(cfg);
  CHECK(fs::exists(fs::path(cfg.out_dir) / "denoised.pgm"));
  CHECK(!result.outputs.empty());
}

TEST_CASE("denoise reruns are byte identical") {
  TempDir dir("exp_denoise_det");
  fs::create_directories(dir.path);
  std::string image_path = (fs::path(dir.path) / "clean.pgm").string();
  write_pgm(image_path, make_piecewise_constant_image(16, 16, 8));

  auto run_once = [&](const std::string& out) {
    ExperimentConfig cfg;
    cfg.experiment = "denoise";
    cfg.particles = 6;
    cfg.iterations = 15;
    cfg.seed = 21;
    cfg.out_dir = out;
    cfg.extra["image"] = image_path;
    return run_denoise(cfg);
  };
  std::string out_a = (fs::path(dir.path) / "a").string();
  std::string out_b = (fs::path(dir.path) / "b").string();
  RunResult ra = run_once(out_a);
  RunResult rb = run_once(out_b);
  check_outputs_identical(ra, out_a, rb, out_b);
}

TEST_CASE("config parsing and validation errors") {
  json j{{"experiment", "grid-mrf"},
         {"particles", 30},
         {"kernel", "imq"},
         {"seed", 42},
         {"grid", {{"rows", 4}, {"cols", 4}}}};
  ExperimentConfig cfg = parse_experiment_config(j);
  CHECK(cfg.experiment == "grid-mrf");
  CHECK(cfg.particles == 30);
  CHECK(cfg.family == KernelFamily::Imq);
  CHECK(cfg.extra.contains("grid"));

  CHECK_THROWS_AS(parse_experiment_config(json{{"particles", 3}}), ConfigError);
  CHECK_THROWS_AS(parse_method("nuts"), ConfigError);
  CHECK_THROWS_AS(parse_family("matern"), ConfigError);

  ExperimentConfig bad;
  bad.experiment = "bandwidth-study";
  bad.methods = {Method::Hmc};
  bad.out_dir = "exp_invalid";
  CHECK_THROWS_AS(run_experiment(bad), ConfigError);

  ExperimentConfig unknown;
  unknown.experiment = "frobnicate";
  CHECK_THROWS_AS(run_experiment(unknown), ConfigError);

  ExperimentConfig no_image;
  no_image.experiment = "denoise";
  no_image.out_dir = "exp_invalid2";
  CHECK_THROWS_AS(run_experiment(no_image), ConfigError);

  ExperimentConfig hmc_denoise;
  hmc_denoise.experiment = "denoise";
  hmc_denoise.methods = {Method::Hmc};
  hmc_denoise.extra["image"] = "whatever.pgm";
  hmc_denoise.out_dir = "exp_invalid3";
  CHECK_THROWS_AS(run_experiment(hmc_denoise), ConfigError);
  fs::remove_all("exp_invalid");
  fs::remove_all("exp_invalid2");
  fs::remove_all("exp_invalid3");
}

}  // TEST_SUITE
