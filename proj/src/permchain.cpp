#include "permreg/permchain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace permreg {

ChainState ChainState::from(const PermutationMap& perm, const LogWeightMatrix& W) {
  if (!perm.is_valid() || perm.n() != W.n())
    throw std::invalid_argument("invalid chain initialization");
  ChainState s;
  s.perm = perm;
  s.inverse.resize(perm.n());
  for (int i = 0; i < perm.n(); ++i) s.inverse[perm.sigma[i]] = i;
  s.log_weight = 0.0;
  for (int i = 0; i < perm.n(); ++i) s.log_weight += W.m(i, perm.sigma[i]);
  s.displaced = perm.displaced();
  return s;
}

SwapProposal propose_at(const ChainState& state, int r1, int c1, int pick) {
  SwapProposal prop;
  prop.r1 = r1;
  prop.c1 = c1;
  const auto& sigma = state.perm.sigma;

  if (sigma[r1] == c1) {
    // Occupied cell: c2 uniform among the zero entries of row r1, r2 is the
    // unique row with a 1 in column c2.
    prop.c2 = pick < c1 ? pick : pick + 1;
    prop.r2 = state.inverse[prop.c2];
  } else {
    // Empty cell: r2 is the unique row with a 1 in column c1, c2 uniform among
    // the zero entries of row r2.
    prop.r2 = state.inverse[c1];
    const int occupied = sigma[prop.r2];  // == c1
    prop.c2 = pick < occupied ? pick : pick + 1;
  }

  // Inspect the 2x2 submatrix at rows {r1, r2}, columns {c1, c2}.
  const bool distinct = prop.r1 != prop.r2 && prop.c1 != prop.c2;
  const bool a11 = sigma[prop.r1] == prop.c1, a12 = sigma[prop.r1] == prop.c2;
  const bool a21 = sigma[prop.r2] == prop.c1, a22 = sigma[prop.r2] == prop.c2;
  prop.is_checkerboard =
      distinct && ((a11 && a22 && !a12 && !a21) || (!a11 && !a22 && a12 && a21));
  return prop;
}

SwapProposal propose(const ChainState& state, Rng& rng) {
  const int n = state.perm.n();
  if (n < 2) throw std::invalid_argument("chain needs n >= 2");
  std::uniform_int_distribution<int> cell(0, n - 1);
  std::uniform_int_distribution<int> among(0, n - 2);
  const int r1 = cell(rng);
  const int c1 = cell(rng);
  return propose_at(state, r1, c1, among(rng));
}

double barker_accept_prob(double delta_logw) {
  // 1 / (1 + exp(-delta)); written to avoid overflow on large |delta|.
  if (delta_logw >= 0.0) return 1.0 / (1.0 + std::exp(-delta_logw));
  const double e = std::exp(delta_logw);
  return e / (1.0 + e);
}

void step(ChainState& state, const LogWeightMatrix& W, std::optional<int> k_bound,
          Rng& rng, ChainStats* stats) {
  const SwapProposal prop = propose(state, rng);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double coin = unif(rng);  // drawn unconditionally to keep the stream aligned
  if (stats) ++stats->steps;
  if (!prop.is_checkerboard) return;
  if (stats) ++stats->checkerboard;

  auto& sigma = state.perm.sigma;
  const int r1 = prop.r1, r2 = prop.r2;
  const int o1 = sigma[r1], o2 = sigma[r2];  // swapping transposes these columns

  if (k_bound) {
    const int displaced_next =
        state.displaced - (o1 != r1) - (o2 != r2) + (o2 != r1) + (o1 != r2);
    if (displaced_next > *k_bound) return;
  }

  const double delta = W.m(r1, o2) + W.m(r2, o1) - W.m(r1, o1) - W.m(r2, o2);
  if (coin >= barker_accept_prob(delta)) return;

  state.displaced += -(o1 != r1) - (o2 != r2) + (o2 != r1) + (o1 != r2);
  sigma[r1] = o2;
  sigma[r2] = o1;
  state.inverse[o2] = r1;
  state.inverse[o1] = r2;
  state.log_weight += delta;
  if (stats) ++stats->accepted;
}

ChainState run_chain(const PermutationMap& init, const LogWeightMatrix& W, long steps,
                     std::optional<int> k_bound, Rng& rng, ChainStats* stats) {
  if (k_bound && init.displaced() > *k_bound)
    throw std::invalid_argument("initial permutation outside the support");
  ChainState state = ChainState::from(init, W);
  for (long t = 0; t < steps; ++t) step(state, W, k_bound, rng, stats);
  return state;
}

std::vector<std::pair<PermutationMap, double>> enumerate_exact(const LogWeightMatrix& W,
                                                               std::optional<int> k_bound) {
  const int n = W.n();
  if (n > 8) throw std::invalid_argument("enumerate_exact limited to n <= 8");

  std::vector<std::pair<PermutationMap, double>> out;  // second = log-weight, then prob
  PermutationMap perm = PermutationMap::identity(n);
  std::vector<int>& s = perm.sigma;
  double max_lw = -std::numeric_limits<double>::infinity();
  do {
    if (k_bound && perm.displaced() > *k_bound) continue;
    double lw = 0.0;
    for (int i = 0; i < n; ++i) lw += W.m(i, s[i]);
    max_lw = std::max(max_lw, lw);
    out.emplace_back(perm, lw);
  } while (std::next_permutation(s.begin(), s.end()));

  double z = 0.0;
  for (auto& e : out) z += std::exp(e.second - max_lw);
  for (auto& e : out) e.second = std::exp(e.second - max_lw) / z;
  return out;
}

}  // namespace permreg
