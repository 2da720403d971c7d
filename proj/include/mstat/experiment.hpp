#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mstat/models.hpp"

namespace mstat {

enum class ExperimentKind { Table1, Table2, PowerFirst, PowerSecond };

ExperimentKind parse_experiment(const std::string& name);
std::string experiment_name(ExperimentKind kind);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Table1;
  int replicates = 500;
  int bootstrap_b = 500;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  int threads = 0;               // 0 -> all available
  std::vector<int> t_values;     // empty -> experiment default
  std::vector<double> tau_grid;  // empty -> experiment default
  std::string out_csv;           // empty -> no CSV written
};

// One Monte Carlo cell: a (model, method, T, tau, block policy) combination
// run for `replicates` independent simulate-then-test rounds.
struct CellSpec {
  std::string experiment;
  SimModel model = SimModel::M1;
  std::string method;  // "camb" | "b1" | "b2" | "second-order"
  int t = 100;
  double tau = 0.0;
  int block_n = 0;  // 0 with a first-order method -> per-replicate selection
  std::string n_policy;
  int replicates = 500;
  int bootstrap_b = 500;
  double alpha = 0.05;
};

struct CellResult {
  CellSpec spec;
  double reject_rate = 0.0;
  double std_error = 0.0;
  std::uint64_t seed = 0;  // master seed; the cell key is derived from it
};

std::string manifold_label(SimModel model);

// Deterministic stream key for a cell, derived from its own metadata, so a
// cell re-run in isolation matches the full grid run.
std::string cell_tag(const CellSpec& spec);

// Replicate r uses simulation seed (cell_key, "sim", r) and test seed
// (cell_key, "test", r); results are reduced in replicate order.
CellResult run_cell(const CellSpec& spec, std::uint64_t master_seed,
                    int threads = 0);

std::vector<CellSpec> experiment_cells(const ExperimentConfig& cfg);

// Runs every cell of the grid; if cfg.out_csv is set, appends each finished
// cell to the CSV immediately (header first) so partial results survive an
// interruption.
std::vector<CellResult> run_experiment(const ExperimentConfig& cfg);

}  // namespace mstat
