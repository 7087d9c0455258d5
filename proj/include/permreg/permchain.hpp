#pragma once

#include <random>
#include <utility>
#include <vector>

#include "permreg/assign.hpp"
#include "permreg/types.hpp"

namespace permreg {

using Rng = std::mt19937_64;

/// Current permutation with its inverse map and cached chain quantities.
struct ChainState {
  PermutationMap perm;
  std::vector<int> inverse;  // inverse[c] = the row holding the 1 in column c
  double log_weight = 0.0;   // cached sum_i W(i, sigma(i))
  int displaced = 0;         // cached distance to identity

  static ChainState from(const PermutationMap& perm, const LogWeightMatrix& W);
};

/// One proposed 2x2 swap unit. The move is valid only when the submatrix at
/// rows {r1, r2} and columns {c1, c2} is a checkerboard pattern.
struct SwapProposal {
  int r1 = 0, c1 = 0, r2 = 0, c2 = 0;
  bool is_checkerboard = false;
};

struct ChainStats {
  long steps = 0;
  long checkerboard = 0;
  long accepted = 0;
  double accept_rate() const { return steps > 0 ? double(accepted) / double(steps) : 0.0; }
};

/// Draw a proposal: (r1, c1) uniform over the n x n grid, then the second
/// row/column per the branch on whether the entry at (r1, c1) is occupied.
SwapProposal propose(const ChainState& state, Rng& rng);

/// Deterministic core of `propose` for testing: `pick` in [0, n-2] selects the
/// candidate column in the branch's uniform draw (candidates in increasing
/// column order, skipping the occupied column).
SwapProposal propose_at(const ChainState& state, int r1, int c1, int pick);

/// Barker acceptance probability 1 / (1 + exp(-delta_logw)).
double barker_accept_prob(double delta_logw);

/// One proposal/accept-reject cycle, in place. Non-checkerboard proposals and
/// rejections leave the state unchanged. A finite k_bound rejects any move
/// whose result would displace more than k_bound indices.
void step(ChainState& state, const LogWeightMatrix& W, std::optional<int> k_bound,
          Rng& rng, ChainStats* stats = nullptr);

/// Apply `steps` chain steps from `init`; throws if init violates the support.
ChainState run_chain(const PermutationMap& init, const LogWeightMatrix& W, long steps,
                     std::optional<int> k_bound, Rng& rng, ChainStats* stats = nullptr);

/// Exhaustive stationary distribution over the support (test oracle, n <= 8).
/// Probabilities are normalized to sum to 1.
std::vector<std::pair<PermutationMap, double>> enumerate_exact(const LogWeightMatrix& W,
                                                               std::optional<int> k_bound);

}  // namespace permreg
