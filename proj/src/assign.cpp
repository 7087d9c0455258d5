#include "permreg/assign.hpp"

#include <cmath>
#include <limits>

#include "permreg/core.hpp"

namespace permreg {

CostMatrix build_cost_matrix(const Dataset& data, const RegressionState& state,
                             double alpha, const LikelihoodFamily& family) {
  data.validate();
  if (!(state.sigma2 > 0.0)) throw std::invalid_argument("sigma2 must be positive");
  const int n = data.n();
  const VectorXd mean = data.X * state.beta;

  CostMatrix L;
  L.m.resize(n, n);
  if (family.is_gaussian()) {
    const double inv2s2 = 0.5 / state.sigma2;
    const double log_s2 = std::log(state.sigma2);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double r = data.y[i] - mean[j];
        L.m(i, j) = alpha * (r * r * inv2s2 + log_s2);
      }
  } else {
    const double sigma = std::sqrt(state.sigma2);
    const double log_s = std::log(sigma);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double r = data.y[i] - mean[j];
        L.m(i, j) = alpha * (check_loss(r, family.tau) / sigma + log_s);
      }
  }
  if (!L.m.allFinite()) throw std::runtime_error("non-finite cost matrix entry");
  return L;
}

// Shortest-augmenting-path assignment (Jonker-Volgenant style) with dual
// potentials; O(n^3), deterministic.
PermutationMap solve_assignment(const CostMatrix& L) {
  const int n = L.n();
  if (n < 1 || L.m.cols() != n) throw std::invalid_argument("cost matrix must be square");
  if (!L.m.allFinite()) throw std::invalid_argument("cost matrix must be finite");
  constexpr double inf = std::numeric_limits<double>::infinity();

  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);  // p[j]: row matched to column j (1-based)
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = 0;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = L.m(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }

  PermutationMap perm;
  perm.sigma.resize(n);
  for (int j = 1; j <= n; ++j) perm.sigma[p[j] - 1] = j - 1;
  return perm;
}

double assignment_objective(const CostMatrix& L, const PermutationMap& perm) {
  double obj = 0.0;
  for (int i = 0; i < L.n(); ++i) obj += L.m(i, perm.sigma[i]);
  return obj;
}

LogWeightMatrix log_weights(const CostMatrix& L) {
  return LogWeightMatrix{-L.m};
}

}  // namespace permreg
