#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace permreg {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Observed regression data: responses y (length n) and design matrix X (n x d).
/// Rows of X and entries of y are assumed already linked, possibly with a small
/// number of mismatches between them.
struct Dataset {
  VectorXd y;
  MatrixXd X;

  int n() const { return static_cast<int>(y.size()); }
  int d() const { return static_cast<int>(X.cols()); }

  // Throws std::invalid_argument on shape mismatch or non-finite entries.
  void validate() const;
};

/// A permutation sigma on {0,...,n-1}, encoding the matrix Pi with
/// Pi(i, sigma(i)) = 1: response i is matched to covariate row sigma(i).
struct PermutationMap {
  std::vector<int> sigma;

  int n() const { return static_cast<int>(sigma.size()); }
  static PermutationMap identity(int n);
  bool is_valid() const;

  // Number of non-fixed points, i.e. |{i : sigma(i) != i}|.
  int displaced() const;

  // Dense n x n 0/1 matrix with a single 1 per row and column.
  MatrixXd to_matrix() const;

  bool operator==(const PermutationMap& o) const { return sigma == o.sigma; }
  bool operator!=(const PermutationMap& o) const { return !(*this == o); }
};

/// Regression parameters (beta, sigma2). For the ALD family sigma2 stores the
/// square of the ALD scale, so sigma = sqrt(sigma2) in the density.
struct RegressionState {
  VectorXd beta;
  double sigma2 = 1.0;
};

/// Error model: Gaussian, or asymmetric Laplace at quantile level tau.
struct LikelihoodFamily {
  enum class Kind { Gaussian, Ald };
  Kind kind = Kind::Gaussian;
  double tau = 0.5;  // only meaningful for Ald, must lie in (0,1)

  static LikelihoodFamily gaussian() { return {Kind::Gaussian, 0.5}; }
  static LikelihoodFamily ald(double tau_);
  bool is_gaussian() const { return kind == Kind::Gaussian; }
};

/// Prior hyperparameters: N(0, beta_prior_var I) on beta, half-normal
/// TN(0, sigma2_prior_var; 0, inf) on sigma2, uniform on permutations
/// displacing at most k_bound indices (nullopt = unbounded).
struct PriorConfig {
  double beta_prior_var = 1000.0;
  double sigma2_prior_var = 1000.0;
  std::optional<int> k_bound;  // support radius of the permutation prior
};

struct HmcConfig {
  double step_size = 0.05;
  int n_leapfrog = 20;
  double target_accept = 0.75;
  int adapt_iters = 0;
};

enum class FitMode { Gibbs, Mcem };

struct FitConfig {
  double alpha = 1.0;      // temperature in (0, 1]
  bool alpha_auto = false; // true: use 1/n, resolved against the dataset
  LikelihoodFamily family = LikelihoodFamily::gaussian();
  PriorConfig priors;
  int gibbs_iters = 400;
  int warmup_iters = 200;
  int perm_chain_steps_per_gibbs = 0;  // 0 = ceil(n log n)
  int hmc_transitions_per_sweep = 5;
  int thin = 1;
  HmcConfig hmc;
  std::uint64_t seed = 0;
  FitMode mode = FitMode::Gibbs;
  // Test hook: when set, sigma2 is pinned and HMC moves beta only.
  std::optional<double> sigma2_fixed;

  double resolved_alpha(int n) const { return alpha_auto ? 1.0 / n : alpha; }
  void validate() const;
};

inline LikelihoodFamily LikelihoodFamily::ald(double tau_) {
  if (!(tau_ > 0.0 && tau_ < 1.0))
    throw std::invalid_argument("ALD tau must lie in (0,1)");
  return {Kind::Ald, tau_};
}

}  // namespace permreg
