// Command-line front end: ingest series files, run the first- and
// second-order stationarity tests, simulate the synthetic models, and drive
// the Monte Carlo experiment grids.
//
// Exit codes: 0 success, 2 input/usage error, 3 numeric degeneracy.

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "json.hpp"

#include "mstat/common.hpp"
#include "mstat/experiment.hpp"
#include "mstat/first_order.hpp"
#include "mstat/manifold.hpp"
#include "mstat/models.hpp"
#include "mstat/report.hpp"
#include "mstat/second_order.hpp"

namespace {

using nlohmann::json;

struct IngestArgs {
  std::string path;
  std::string manifold = "sphere";
  int ambient_dim = 0;
  bool compositional = false;
};

void add_ingest_flags(CLI::App* cmd, IngestArgs& args) {
  cmd->add_option("--in", args.path, "input series CSV")->required();
  cmd->add_option("--manifold", args.manifold, "sphere, spd or euclidean")
      ->check(CLI::IsMember({"sphere", "spd", "euclidean"}));
  cmd->add_option("--ambient-dim", args.ambient_dim,
                  "ambient coordinates per point (sphere/euclidean) or "
                  "matrix size (spd)")
      ->required();
  cmd->add_flag("--compositional", args.compositional,
                "input rows are proportions; apply the square-root map "
                "onto the sphere");
}

mstat::ManifoldKind parse_kind(const std::string& name) {
  if (name == "sphere") return mstat::ManifoldKind::Sphere;
  if (name == "spd") return mstat::ManifoldKind::Spd;
  if (name == "euclidean") return mstat::ManifoldKind::Euclidean;
  throw mstat::InputError("unknown manifold '" + name + "'");
}

mstat::ManifoldSeries ingest(const IngestArgs& args) {
  if (args.compositional) {
    if (args.manifold != "sphere")
      throw mstat::InputError(
          "--compositional requires --manifold sphere");
    return mstat::read_compositional(args.path, args.ambient_dim);
  }
  return mstat::read_series(args.path, parse_kind(args.manifold),
                            args.ambient_dim);
}

json ingest_echo(const IngestArgs& args) {
  return {{"in", args.path},
          {"manifold", args.manifold},
          {"ambient_dim", args.ambient_dim},
          {"compositional", args.compositional}};
}

void emit(const json& inputs, const json& result, double wall,
          const std::string& out_path) {
  if (!out_path.empty()) mstat::write_report(inputs, result, wall, out_path);
  std::cout << result.dump(2) << "\n";
}

void set_threads(int threads) {
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> parts;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) parts.push_back(trim(item));
  return parts;
}

// Flat key=value configuration for the experiment subcommand; '#' starts a
// comment and keys match the long flags without the dashes.  Values given on
// the command line win over the file.
void apply_experiment_config(const std::string& path, const CLI::App& exp,
                             std::string& name, mstat::ExperimentConfig& cfg,
                             std::string& report) {
  std::ifstream in(path);
  if (!in) throw mstat::InputError("cannot open config file '" + path + "'");
  const auto given = [&exp](const std::string& flag) {
    return exp.count(flag) > 0;
  };
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw mstat::InputError("config line " + std::to_string(lineno) +
                              ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "experiment") {
        if (!given("--experiment")) name = value;
      } else if (key == "replicates") {
        if (!given("--replicates")) cfg.replicates = std::stoi(value);
      } else if (key == "bootstrap-b") {
        if (!given("--bootstrap-b")) cfg.bootstrap_b = std::stoi(value);
      } else if (key == "alpha") {
        if (!given("--alpha")) cfg.alpha = std::stod(value);
      } else if (key == "seed") {
        if (!given("--seed")) cfg.seed = std::stoull(value);
      } else if (key == "threads") {
        if (!given("--threads")) cfg.threads = std::stoi(value);
      } else if (key == "T") {
        if (!given("--T")) {
          cfg.t_values.clear();
          for (const std::string& p : split_list(value))
            cfg.t_values.push_back(std::stoi(p));
        }
      } else if (key == "tau") {
        if (!given("--tau")) {
          cfg.tau_grid.clear();
          for (const std::string& p : split_list(value))
            cfg.tau_grid.push_back(std::stod(p));
        }
      } else if (key == "out") {
        if (!given("--out")) cfg.out_csv = value;
      } else if (key == "report") {
        if (!given("--report")) report = value;
      } else {
        throw mstat::InputError("config line " + std::to_string(lineno) +
                                ": unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      throw mstat::InputError("config line " + std::to_string(lineno) +
                              ": bad value '" + value + "' for '" + key + "'");
    } catch (const std::out_of_range&) {
      throw mstat::InputError("config line " + std::to_string(lineno) +
                              ": bad value '" + value + "' for '" + key + "'");
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Stationarity tests for time series on Riemannian manifolds "
      "(sphere, SPD with the affine-invariant metric, Euclidean)"};
  app.require_subcommand(1);

  // --- test ------------------------------------------------------------
  CLI::App* test = app.add_subcommand("test", "run a stationarity test");
  test->require_subcommand(1);

  IngestArgs fo_in;
  std::string fo_method = "camb";
  int fo_bootstrap_b = 2000;
  int fo_block_n = 0;
  double fo_alpha = 0.05;
  std::uint64_t fo_seed = 0;
  std::string fo_out;
  int fo_threads = 0;
  CLI::App* first = test->add_subcommand(
      "first-order", "mean-stationarity test (CUSUM with a curvature-"
                     "adjusted multiplier bootstrap)");
  add_ingest_flags(first, fo_in);
  first->add_option("--method", fo_method,
                    "camb (curvature-adjusted), b1 (no adjustment) or b2 "
                    "(Euclidean on ambient coordinates)")
      ->check(CLI::IsMember({"camb", "b1", "b2"}));
  first->add_option("--bootstrap-b", fo_bootstrap_b, "bootstrap draws");
  first->add_option("--block-n", fo_block_n,
                    "block length; 0 selects by minimum volatility");
  first->add_option("--alpha", fo_alpha, "test level");
  first->add_option("--seed", fo_seed, "random seed");
  first->add_option("--out", fo_out, "write a JSON report here");
  first->add_option("--threads", fo_threads, "bootstrap worker threads");

  IngestArgs so_in;
  int so_block_n = 0;
  std::vector<int> so_blocks;
  double so_alpha = 0.05;
  std::string so_detrend = "none";
  int so_bandwidth = 0;
  std::string so_out;
  CLI::App* second = test->add_subcommand(
      "second-order", "spectral-variation test for time-varying "
                      "autocovariance");
  add_ingest_flags(second, so_in);
  second->add_option("--block-n", so_block_n, "block length (positive, even)")
      ->required();
  second
      ->add_option("--blocks", so_blocks,
                   "explicit 1-based block start indices")
      ->delimiter(',');
  second->add_option("--alpha", so_alpha, "test level");
  second
      ->add_option("--detrend", so_detrend,
                   "none or block-frechet (sliding intrinsic means)")
      ->check(CLI::IsMember({"none", "block-frechet"}));
  second->add_option("--bandwidth", so_bandwidth,
                     "detrend window width; 0 means T/5");
  second->add_option("--out", so_out, "write a JSON report here");

  // --- simulate ----------------------------------------------------------
  std::string sim_model = "m1";
  double sim_tau = 0.0;
  int sim_t = 100;
  std::uint64_t sim_seed = 0;
  std::string sim_out;
  CLI::App* sim = app.add_subcommand(
      "simulate", "generate a synthetic series from the built-in models");
  sim->add_option("--model", sim_model,
                  "m1 (sphere), m2 (spd), m3-sphere, m3-spd or euclidean")
      ->check(CLI::IsMember({"m1", "m2", "m3-sphere", "m3-spd", "euclidean"}));
  sim->add_option("--tau", sim_tau, "deviation from stationarity (0 = none)");
  sim->add_option("--T", sim_t, "series length")->required();
  sim->add_option("--seed", sim_seed, "random seed");
  sim->add_option("--out", sim_out, "output series CSV")->required();

  // --- experiment ----------------------------------------------------------
  std::string exp_name;
  mstat::ExperimentConfig exp_cfg;
  std::string exp_report;
  std::string exp_config;
  CLI::App* exp = app.add_subcommand(
      "experiment", "Monte Carlo grids: size tables and power curves");
  exp->add_option("--experiment", exp_name,
                  "table1, table2, power-first or power-second");
  exp->add_option("--replicates", exp_cfg.replicates, "replicates per cell");
  exp->add_option("--bootstrap-b", exp_cfg.bootstrap_b,
                  "bootstrap draws per replicate");
  exp->add_option("--alpha", exp_cfg.alpha, "test level");
  exp->add_option("--seed", exp_cfg.seed, "master seed");
  exp->add_option("--threads", exp_cfg.threads,
                  "replicate worker threads; 0 = all");
  exp->add_option("--T", exp_cfg.t_values, "series lengths (overrides grid)")
      ->delimiter(',');
  exp->add_option("--tau", exp_cfg.tau_grid, "tau grid (power experiments)")
      ->delimiter(',');
  exp->add_option("--out", exp_cfg.out_csv, "per-cell results CSV");
  exp->add_option("--report", exp_report, "JSON report path");
  exp->add_option("--config", exp_config,
                  "flat key=value file with the flags above; command-line "
                  "flags win");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const auto t0 = std::chrono::steady_clock::now();
  auto wall = [&t0] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         t0)
        .count();
  };

  try {
    if (first->parsed()) {
      set_threads(fo_threads);
      const mstat::ManifoldSeries series = ingest(fo_in);
      mstat::FirstOrderConfig cfg;
      cfg.method = fo_method == "camb" ? mstat::FoMethod::Camb
                   : fo_method == "b1" ? mstat::FoMethod::B1NoCurvature
                                       : mstat::FoMethod::B2Euclidean;
      cfg.bootstrap_b = fo_bootstrap_b;
      cfg.block_n = fo_block_n;
      cfg.alpha = fo_alpha;
      cfg.seed = fo_seed;
      const mstat::FirstOrderReport rep = mstat::first_order_test(series, cfg);
      json inputs = ingest_echo(fo_in);
      inputs.update({{"method", fo_method},
                     {"bootstrap_b", fo_bootstrap_b},
                     {"block_n", fo_block_n},
                     {"alpha", fo_alpha},
                     {"seed", fo_seed}});
      emit(inputs, mstat::report_to_json(rep), wall(), fo_out);
    } else if (second->parsed()) {
      const mstat::ManifoldSeries series = ingest(so_in);
      mstat::SecondOrderConfig cfg;
      cfg.block_n = so_block_n;
      cfg.alpha = so_alpha;
      cfg.detrend = so_detrend == "none" ? mstat::DetrendKind::None
                                         : mstat::DetrendKind::BlockFrechet;
      cfg.bandwidth = so_bandwidth;
      cfg.block_starts = so_blocks;
      const mstat::SecondOrderReport rep =
          mstat::second_order_test(series, cfg);
      json inputs = ingest_echo(so_in);
      inputs.update({{"block_n", so_block_n},
                     {"blocks", so_blocks},
                     {"alpha", so_alpha},
                     {"detrend", so_detrend},
                     {"bandwidth", so_bandwidth}});
      emit(inputs, mstat::report_to_json(rep), wall(), so_out);
    } else if (sim->parsed()) {
      mstat::SimSpec spec;
      spec.model = sim_model == "m1"          ? mstat::SimModel::M1
                   : sim_model == "m2"        ? mstat::SimModel::M2
                   : sim_model == "m3-sphere" ? mstat::SimModel::M3Sphere
                   : sim_model == "m3-spd"    ? mstat::SimModel::M3Spd
                                              : mstat::SimModel::EuclideanAR;
      spec.tau = sim_tau;
      spec.t = sim_t;
      spec.seed = sim_seed;
      const mstat::SimResult res = mstat::simulate(spec);
      mstat::write_series(res.series, sim_out);
      json summary = {{"model", sim_model},
                      {"tau", sim_tau},
                      {"T", sim_t},
                      {"seed", sim_seed},
                      {"out", sim_out},
                      {"resampled_steps", res.resampled_steps}};
      std::cout << summary.dump(2) << "\n";
    } else if (exp->parsed()) {
      if (!exp_config.empty()) {
        apply_experiment_config(exp_config, *exp, exp_name, exp_cfg,
                                exp_report);
      }
      if (exp_name.empty()) {
        throw mstat::InputError(
            "--experiment is required (flag or config file)");
      }
      exp_cfg.kind = mstat::parse_experiment(exp_name);
      const std::vector<mstat::CellResult> results =
          mstat::run_experiment(exp_cfg);
      json cells = json::array();
      for (const mstat::CellResult& r : results) {
        cells.push_back({{"experiment", r.spec.experiment},
                         {"manifold", mstat::manifold_label(r.spec.model)},
                         {"method", r.spec.method},
                         {"T", r.spec.t},
                         {"tau", r.spec.tau},
                         {"n_policy", r.spec.n_policy},
                         {"replicates", r.spec.replicates},
                         {"reject_rate", r.reject_rate},
                         {"stderr", r.std_error},
                         {"seed", r.seed}});
      }
      json inputs = {{"experiment", exp_name},
                     {"replicates", exp_cfg.replicates},
                     {"bootstrap_b", exp_cfg.bootstrap_b},
                     {"alpha", exp_cfg.alpha},
                     {"seed", exp_cfg.seed},
                     {"threads", exp_cfg.threads},
                     {"T", exp_cfg.t_values},
                     {"tau", exp_cfg.tau_grid},
                     {"out", exp_cfg.out_csv}};
      json result = {{"cells", cells}};
      if (!exp_report.empty())
        mstat::write_report(inputs, result, wall(), exp_report);
      std::cout << result.dump(2) << "\n";
    }
  } catch (const mstat::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const mstat::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
