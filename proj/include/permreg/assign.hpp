#pragma once

#include "permreg/types.hpp"

namespace permreg {

/// Tempered per-pair cost matrix: entry (i, j) is alpha times the negative
/// log-density of response i matched against covariate row j,
///   Gaussian: alpha * [ (y_i - x_j' beta)^2 / (2 sigma2) + log sigma2 ]
///   ALD:      alpha * [ rho_tau(y_i - x_j' beta) / sigma + log sigma ]
/// The additive log-sigma term is constant across assignments and cancels in
/// all permutation comparisons; it is kept for the printed cost form.
struct CostMatrix {
  MatrixXd m;
  int n() const { return static_cast<int>(m.rows()); }
};

/// Log-weights W = -L driving the permutation chain; the chain's stationary
/// law on permutations is P(sigma) proportional to exp(sum_i W(i, sigma(i))).
struct LogWeightMatrix {
  MatrixXd m;
  int n() const { return static_cast<int>(m.rows()); }
};

CostMatrix build_cost_matrix(const Dataset& data, const RegressionState& state,
                             double alpha, const LikelihoodFamily& family);

/// Exact minimum-cost assignment over all permutations (shortest augmenting
/// path, O(n^3)); deterministic for a fixed input.
PermutationMap solve_assignment(const CostMatrix& L);

double assignment_objective(const CostMatrix& L, const PermutationMap& perm);

LogWeightMatrix log_weights(const CostMatrix& L);

}  // namespace permreg
