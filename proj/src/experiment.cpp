#include "mstat/experiment.hpp"

#include <cmath>
#include <exception>
#include <fstream>
#include <fmt/format.h>
#include <stdexcept>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mstat/common.hpp"
#include "mstat/first_order.hpp"
#include "mstat/rng.hpp"
#include "mstat/second_order.hpp"

namespace mstat {
namespace {

FoMethod parse_fo_method(const std::string& method) {
  if (method == "camb") return FoMethod::Camb;
  if (method == "b1") return FoMethod::B1NoCurvature;
  if (method == "b2") return FoMethod::B2Euclidean;
  throw InputError(fmt::format("unknown first-order method '{}'", method));
}

bool run_replicate(const CellSpec& spec, std::uint64_t cell_key,
                   std::uint64_t rep) {
  SimSpec sim;
  sim.model = spec.model;
  sim.tau = spec.tau;
  sim.t = spec.t;
  sim.seed = derive_key(cell_key, "sim", rep);
  const ManifoldSeries series = simulate(sim).series;

  const std::uint64_t test_seed = derive_key(cell_key, "test", rep);
  if (spec.method == "second-order") {
    SecondOrderConfig cfg;
    cfg.block_n = spec.block_n;
    cfg.alpha = spec.alpha;
    cfg.detrend = DetrendKind::None;
    return second_order_test(series, cfg).reject;
  }
  FirstOrderConfig cfg;
  cfg.method = parse_fo_method(spec.method);
  cfg.bootstrap_b = spec.bootstrap_b;
  cfg.block_n = spec.block_n;
  cfg.alpha = spec.alpha;
  cfg.seed = test_seed;
  return first_order_test(series, cfg).reject;
}

int fixed_cbrt_block(int t) {
  return static_cast<int>(std::floor(std::cbrt(static_cast<double>(t))));
}

void append_cell_csv(std::ofstream& out, const CellResult& res) {
  const CellSpec& s = res.spec;
  out << s.experiment << ',' << manifold_label(s.model) << ',' << s.method
      << ',' << s.t << ',' << fmt::format("{}", s.tau) << ',' << s.n_policy
      << ',' << s.replicates << ',' << fmt::format("{}", res.reject_rate)
      << ',' << fmt::format("{}", res.std_error) << ',' << res.seed << '\n';
  out.flush();
}

}  // namespace

ExperimentKind parse_experiment(const std::string& name) {
  if (name == "table1") return ExperimentKind::Table1;
  if (name == "table2") return ExperimentKind::Table2;
  if (name == "power-first") return ExperimentKind::PowerFirst;
  if (name == "power-second") return ExperimentKind::PowerSecond;
  throw InputError(fmt::format(
      "unknown experiment '{}' (expected table1, table2, power-first or "
      "power-second)",
      name));
}

std::string experiment_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Table1: return "table1";
    case ExperimentKind::Table2: return "table2";
    case ExperimentKind::PowerFirst: return "power-first";
    case ExperimentKind::PowerSecond: return "power-second";
  }
  throw InputError("unknown experiment kind");
}

std::string manifold_label(SimModel model) {
  switch (model) {
    case SimModel::M1: return "sphere";
    case SimModel::M2: return "spd";
    case SimModel::M3Sphere: return "sphere";
    case SimModel::M3Spd: return "spd";
    case SimModel::EuclideanAR: return "euclidean";
  }
  throw InputError("unknown model");
}

std::string cell_tag(const CellSpec& spec) {
  return fmt::format("{}/{}/{}/T={}/tau={}", spec.experiment,
                     manifold_label(spec.model), spec.method, spec.t,
                     spec.tau);
}

CellResult run_cell(const CellSpec& spec, std::uint64_t master_seed,
                    int threads) {
  if (spec.replicates < 1) throw InputError("replicates must be positive");
  const std::uint64_t cell_key = derive_key(master_seed, cell_tag(spec), 0);
  const int r = spec.replicates;
  std::vector<unsigned char> rejects(r, 0);
  std::vector<std::exception_ptr> errors(r);

#ifdef _OPENMP
  const int nthreads = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(nthreads)
#else
  (void)threads;
#endif
  for (int rep = 0; rep < r; ++rep) {
    try {
      rejects[rep] = run_replicate(spec, cell_key, rep) ? 1 : 0;
    } catch (...) {
      errors[rep] = std::current_exception();
    }
  }
  for (int rep = 0; rep < r; ++rep)
    if (errors[rep]) std::rethrow_exception(errors[rep]);

  int count = 0;
  for (unsigned char x : rejects) count += x;
  CellResult res;
  res.spec = spec;
  res.reject_rate = static_cast<double>(count) / r;
  res.std_error = std::sqrt(res.reject_rate * (1.0 - res.reject_rate) / r);
  res.seed = master_seed;
  return res;
}

std::vector<CellSpec> experiment_cells(const ExperimentConfig& cfg) {
  std::vector<CellSpec> cells;
  const std::string name = experiment_name(cfg.kind);

  auto base = [&](SimModel model, const std::string& method, int t,
                  double tau, int block_n, const std::string& policy) {
    CellSpec s;
    s.experiment = name;
    s.model = model;
    s.method = method;
    s.t = t;
    s.tau = tau;
    s.block_n = block_n;
    s.n_policy = policy;
    s.replicates = cfg.replicates;
    s.bootstrap_b = cfg.bootstrap_b;
    s.alpha = cfg.alpha;
    return s;
  };

  switch (cfg.kind) {
    case ExperimentKind::Table1: {
      const std::vector<int> ts =
          cfg.t_values.empty() ? std::vector<int>{50, 100, 500} : cfg.t_values;
      for (SimModel model : {SimModel::M1, SimModel::M2})
        for (const std::string& method : {"camb", "b1", "b2"})
          for (int t : ts) {
            if (method == "camb") {
              cells.push_back(base(model, method, t, 0.0, 0, "minvol"));
            } else {
              const int n = fixed_cbrt_block(t);
              cells.push_back(
                  base(model, method, t, 0.0, n, fmt::format("fixed:{}", n)));
            }
          }
      break;
    }
    case ExperimentKind::Table2: {
      const std::vector<int> ts = cfg.t_values.empty()
                                      ? std::vector<int>{256, 512, 1024}
                                      : cfg.t_values;
      for (SimModel model :
           {SimModel::M3Sphere, SimModel::M3Spd, SimModel::EuclideanAR})
        for (int t : ts) {
          if (t % 8 != 0)
            throw InputError(
                fmt::format("table2 needs T divisible by 8, got {}", t));
          const int n = t / 8;
          cells.push_back(base(model, "second-order", t, 0.0, n,
                               fmt::format("fixed:{}", n)));
        }
      break;
    }
    case ExperimentKind::PowerFirst: {
      const std::vector<int> ts =
          cfg.t_values.empty() ? std::vector<int>{500} : cfg.t_values;
      const std::vector<double> taus =
          cfg.tau_grid.empty() ? std::vector<double>{0.0, 0.25, 0.5, 1.0}
                               : cfg.tau_grid;
      for (int t : ts)
        for (double tau : taus)
          cells.push_back(base(SimModel::M1, "camb", t, tau, 0, "minvol"));
      break;
    }
    case ExperimentKind::PowerSecond: {
      const std::vector<int> ts =
          cfg.t_values.empty() ? std::vector<int>{1024} : cfg.t_values;
      const std::vector<double> taus =
          cfg.tau_grid.empty() ? std::vector<double>{0.0, 0.5, 1.0, 1.5}
                               : cfg.tau_grid;
      for (int t : ts)
        for (double tau : taus)
          cells.push_back(
              base(SimModel::M3Sphere, "second-order", t, tau, 8, "fixed:8"));
      break;
    }
  }
  return cells;
}

std::vector<CellResult> run_experiment(const ExperimentConfig& cfg) {
  const std::vector<CellSpec> cells = experiment_cells(cfg);
  std::ofstream csv;
  if (!cfg.out_csv.empty()) {
    csv.open(cfg.out_csv);
    if (!csv) throw InputError(fmt::format("cannot write '{}'", cfg.out_csv));
    csv << "experiment,manifold,method,T,tau,n_policy,replicates,"
           "reject_rate,stderr,seed\n";
    csv.flush();
  }
  std::vector<CellResult> results;
  results.reserve(cells.size());
  for (const CellSpec& spec : cells) {
    results.push_back(run_cell(spec, cfg.seed, cfg.threads));
    if (csv.is_open()) append_cell_csv(csv, results.back());
  }
  return results;
}

}  // namespace mstat
