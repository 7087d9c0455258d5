#pragma once

#include "permreg/types.hpp"

namespace permreg {

/// Log-likelihood of the data under matching `perm`:
///   Gaussian: sum_i -1/2 log(2 pi sigma2) - (y_i - x_{sigma(i)}' beta)^2 / (2 sigma2)
///   ALD:      sum_i log(tau(1-tau)) - log sigma - rho_tau(y_i - x_{sigma(i)}' beta) / sigma
/// with rho_tau(u) = u (tau - 1{u<0}) and sigma = sqrt(state.sigma2).
double log_likelihood(const Dataset& data, const PermutationMap& perm,
                      const RegressionState& state, const LikelihoodFamily& family);

/// Tempered (fractional) log-posterior density in (beta, sigma2) coordinates:
///   alpha * log_likelihood + log N(beta; 0, Vb I) + log TN(sigma2; 0, Vs; 0, inf).
/// The flat permutation prior contributes only through its support: permutations
/// displacing more than k_bound indices get -inf.
double log_fractional_target(const Dataset& data, const PermutationMap& perm,
                             const RegressionState& state, const FitConfig& cfg);

/// Same density reparameterized to (beta, t = log sigma2), including the
/// Jacobian term +t. This is the HMC target.
double log_fractional_target_logscale(const Dataset& data, const PermutationMap& perm,
                                      const VectorXd& beta, double log_sigma2,
                                      const FitConfig& cfg);

/// Gradient of log_fractional_target_logscale with respect to (beta, log sigma2);
/// length d+1, last coordinate is d/d(log sigma2). For ALD the check loss uses
/// the subgradient tau - 1{u<0}, with value tau - 1/2 at u = 0 exactly.
VectorXd grad_log_fractional_target(const Dataset& data, const PermutationMap& perm,
                                    const RegressionState& state, const FitConfig& cfg);

/// Check loss rho_tau and its subgradient.
double check_loss(double u, double tau);
double check_loss_subgrad(double u, double tau);

struct MismatchMetrics {
  // Count of rows where the two hard assignments differ; absent unless both
  // arguments are permutations.
  std::optional<int> displaced;
  double entrywise_l1 = 0.0;
};

MismatchMetrics mismatch_metrics(const PermutationMap& a, const PermutationMap& b);
MismatchMetrics mismatch_metrics(const MatrixXd& a, const MatrixXd& b);
MismatchMetrics mismatch_metrics(const MatrixXd& a, const PermutationMap& b);

}  // namespace permreg
