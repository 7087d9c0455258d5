#pragma once

#include <string>
#include <vector>

#include "permreg/engine.hpp"
#include "permreg/types.hpp"

namespace permreg {

/// Synthetic-data scenario: i.i.d. standard-normal covariates, noise per the
/// family, reversal of the first s0 rows of X, and optional duplication of the
/// first observation into slot s0.
struct SimConfig {
  int n = 100;
  int d = 20;
  int s0 = 6;
  double sigma = 0.1;
  VectorXd beta0;  // empty = all-ones of length d
  LikelihoodFamily family = LikelihoodFamily::gaussian();
  bool duplicate_first = true;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SimOutput {
  Dataset data;
  VectorXd beta0;
  PermutationMap pi0;         // hard truth
  MatrixXd pi0_target;        // 0.5-blended reference (equals hard Pi0 without duplication)
};

SimOutput generate_linear(const SimConfig& cfg);

struct BenchmarkGrid {
  std::vector<int> n_values{100, 150, 200, 250};
  // Temperatures; a negative entry means "1/n", resolved per cell.
  std::vector<double> alpha_values{-1.0, 0.1, 0.5, 0.75, 0.99};
  int replicates = 20;
  SimConfig sim;       // template; n is overridden per cell
  FitConfig fit;       // template; alpha/seed overridden per cell
  std::uint64_t seed = 0;
};

struct BenchmarkRow {
  int n = 0;
  double alpha = 0.0;
  double mean_abs_beta_error = 0.0;
  double entrywise_l1_pi = 0.0;
  double entrywise_l1_pi_norm = 0.0;
  double sec_per_iter = 0.0;
  int replicates = 0;
  std::string error;  // empty on success
};

struct ReplicateTiming {
  int n = 0;
  double alpha = 0.0;
  int replicate = 0;
  double sec_per_iter = 0.0;
};

struct BenchmarkResult {
  std::vector<BenchmarkRow> rows;
  std::vector<ReplicateTiming> timings;
};

/// One simulate -> fit -> summarize pipeline per (cell, replicate) with derived
/// seeds; metrics averaged per cell; rows emitted in grid order regardless of
/// execution order.
BenchmarkResult run_benchmark(const BenchmarkGrid& grid);

struct ConcentrationRow {
  int n = 0;
  double mean_beta_l2_distance = 0.0;  // mean posterior L2 distance of beta to beta0
};

/// Empirical posterior-concentration trend at alpha = 1/n; a monotone-trend
/// diagnostic only.
std::vector<ConcentrationRow> concentration_diagnostic(const std::vector<int>& n_values,
                                                       const SimConfig& sim_template,
                                                       const FitConfig& fit_template,
                                                       int replicates, std::uint64_t seed);

/// Derived per-task seed stream (splitmix64 over a combined key).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b);

}  // namespace permreg
