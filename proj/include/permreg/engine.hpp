#pragma once

#include <random>
#include <vector>

#include "permreg/core.hpp"
#include "permreg/hmc.hpp"
#include "permreg/permchain.hpp"
#include "permreg/types.hpp"

namespace permreg {

/// Retained Gibbs trace of (beta, sigma2, Pi).
struct Draws {
  std::vector<VectorXd> beta_trace;
  std::vector<double> sigma2_trace;
  std::vector<PermutationMap> perm_trace;
  HmcDiagnostics hmc;
  ChainStats perm_chain;
  double wall_time_per_iter = 0.0;  // seconds per Gibbs sweep

  std::size_t size() const { return beta_trace.size(); }
};

/// Optional ground truth for error metrics.
struct Reference {
  VectorXd beta0;
  PermutationMap pi0;
  std::optional<MatrixXd> pi0_target;  // blended matrix when duplication is present
};

struct PosteriorSummary {
  VectorXd beta_mean;
  VectorXd beta_ci_lower;  // per-coordinate 2.5% quantile
  VectorXd beta_ci_upper;  // per-coordinate 97.5% quantile
  double sigma2_mean = 0.0;
  MatrixXd pi_mean;  // doubly stochastic average of one-hot matrices
  // Versus reference, when given:
  std::optional<double> mean_abs_beta_error;       // (1/d) sum |beta_hat - beta0|
  std::optional<double> entrywise_l1_pi;           // sum_ij |pi_mean - Pi0|
  std::optional<double> entrywise_l1_pi_norm;      // same, divided by n^2
  std::optional<double> entrywise_l1_pi_blended;   // vs the blended target, if present
};

struct McemRecord {
  RegressionState state;
  PermutationMap perm;
  double objective_before = 0.0;  // <Pi_old, L> at the sweep's cost matrix
  double objective_after = 0.0;   // <Pi_new, L>; never exceeds objective_before
};

struct McemResult {
  std::vector<McemRecord> trajectory;
  bool converged = false;
  int iterations = 0;
};

/// Full Gibbs sampler: HMC on (beta, log sigma2) given Pi, then checkerboard
/// chain on Pi given (beta, sigma2), with the first sweep's permutation chain
/// started from the exact-assignment optimum.
Draws gibbs_fit(const Dataset& data, const FitConfig& cfg);

/// Mode-seeking variant: the Pi update is replaced by the exact assignment
/// solve. Stops when Pi has been unchanged for 5 consecutive sweeps past
/// warmup, or at the iteration cap (flagged non-converged).
McemResult mcem_fit(const Dataset& data, const FitConfig& cfg);

PosteriorSummary summarize(const Draws& draws,
                           const std::optional<Reference>& reference = std::nullopt);

/// Ridge fit at the identity matching, used for initialization.
RegressionState ridge_init(const Dataset& data, const PriorConfig& priors);

}  // namespace permreg
