#include "permreg/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "permreg/assign.hpp"

namespace permreg {

namespace {

int perm_steps_for(const FitConfig& cfg, int n) {
  if (cfg.perm_chain_steps_per_gibbs > 0) return cfg.perm_chain_steps_per_gibbs;
  return static_cast<int>(std::ceil(n * std::log(std::max(2, n))));
}

// HMC target over q = (beta, log sigma2), or beta alone when sigma2 is pinned.
TargetFn make_target(const Dataset& data, const PermutationMap& perm, const FitConfig& cfg) {
  const int d = data.d();
  // Leapfrog trajectories may wander into numerically degenerate territory;
  // flag such points as -inf (a rejected divergence) rather than throwing.
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (cfg.sigma2_fixed) {
    const double s2 = *cfg.sigma2_fixed;
    return [&data, &perm, &cfg, d, s2](const VectorXd& q, VectorXd* grad) {
      if (!q.allFinite()) {
        if (grad) *grad = VectorXd::Zero(q.size());
        return kNegInf;
      }
      RegressionState st{q, s2};
      if (grad) *grad = grad_log_fractional_target(data, perm, st, cfg).head(d);
      return log_fractional_target(data, perm, st, cfg);
    };
  }
  return [&data, &perm, &cfg, d](const VectorXd& q, VectorXd* grad) {
    if (!q.allFinite() || std::abs(q[d]) > 700.0) {  // exp(q[d]) would degenerate
      if (grad) *grad = VectorXd::Zero(q.size());
      return kNegInf;
    }
    RegressionState st{q.head(d), std::exp(q[d])};
    if (grad) *grad = grad_log_fractional_target(data, perm, st, cfg);
    return log_fractional_target_logscale(data, perm, q.head(d), q[d], cfg);
  };
}

VectorXd pack_state(const RegressionState& st, const FitConfig& cfg) {
  if (cfg.sigma2_fixed) return st.beta;
  VectorXd q(st.beta.size() + 1);
  q.head(st.beta.size()) = st.beta;
  q[st.beta.size()] = std::log(st.sigma2);
  return q;
}

RegressionState unpack_state(const VectorXd& q, int d, const FitConfig& cfg) {
  if (cfg.sigma2_fixed) return {q, *cfg.sigma2_fixed};
  return {q.head(d), std::exp(q[d])};
}

struct Init {
  RegressionState state;
  PermutationMap perm;
};

// Ridge refit on the rows with the smallest residuals. The mismatched rows act
// as high-leverage outliers that can corrupt the plain ridge solution badly
// enough to scramble the initial assignment; trimming restores the premise
// that most pairs are correctly matched.
RegressionState trimmed_ridge_init(const Dataset& data, const PriorConfig& priors) {
  const int n = data.n();
  const int d = data.d();
  RegressionState st = ridge_init(data, priors);
  for (int round = 0; round < 3; ++round) {
    VectorXd abs_resid = (data.y - data.X * st.beta).cwiseAbs();
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return abs_resid[a] < abs_resid[b]; });
    const int keep = std::max(d + 1, n - n / 5);  // drop the worst 20%
    MatrixXd A = MatrixXd::Identity(d, d) / priors.beta_prior_var;
    VectorXd b = VectorXd::Zero(d);
    for (int r = 0; r < keep; ++r) {
      const int i = order[r];
      A += data.X.row(i).transpose() * data.X.row(i);
      b += data.X.row(i).transpose() * data.y[i];
    }
    st.beta = A.ldlt().solve(b);
    double ssr = 0.0;
    for (int r = 0; r < keep; ++r) {
      const int i = order[r];
      const double res = data.y[i] - data.X.row(i).dot(st.beta);
      ssr += res * res;
    }
    st.sigma2 = std::max(ssr / keep, 1e-12);
  }
  return st;
}

Init initialize(const Dataset& data, const FitConfig& cfg) {
  Init init;
  init.state = trimmed_ridge_init(data, cfg.priors);
  if (cfg.sigma2_fixed) init.state.sigma2 = *cfg.sigma2_fixed;
  const double alpha = cfg.resolved_alpha(data.n());
  const CostMatrix L = build_cost_matrix(data, init.state, alpha, cfg.family);
  init.perm = solve_assignment(L);
  // B_opt may fall outside a finite support; the identity always qualifies.
  if (cfg.priors.k_bound && init.perm.displaced() > *cfg.priors.k_bound)
    init.perm = PermutationMap::identity(data.n());
  return init;
}

}  // namespace

RegressionState ridge_init(const Dataset& data, const PriorConfig& priors) {
  const int d = data.d();
  const MatrixXd A =
      data.X.transpose() * data.X + MatrixXd::Identity(d, d) / priors.beta_prior_var;
  RegressionState st;
  st.beta = A.ldlt().solve(data.X.transpose() * data.y);
  const VectorXd resid = data.y - data.X * st.beta;
  st.sigma2 = std::max(resid.squaredNorm() / data.n(), 1e-12);
  return st;
}

Draws gibbs_fit(const Dataset& data, const FitConfig& cfg) {
  data.validate();
  cfg.validate();
  const int n = data.n();
  const int d = data.d();
  const double alpha = cfg.resolved_alpha(n);
  const int perm_steps = perm_steps_for(cfg, n);
  Rng rng(cfg.seed);

  Init init = initialize(data, cfg);
  RegressionState state = init.state;
  PermutationMap perm = init.perm;
  VectorXd q = pack_state(state, cfg);

  HmcConfig hmc_cfg = cfg.hmc;
  StepSizeAdapter adapter(hmc_cfg.step_size, hmc_cfg.target_accept);

  Draws draws;
  const auto t_start = std::chrono::steady_clock::now();
  for (int sweep = 0; sweep < cfg.gibbs_iters; ++sweep) {
    const bool warm = sweep < cfg.warmup_iters;

    const TargetFn target = make_target(data, perm, cfg);
    for (int h = 0; h < cfg.hmc_transitions_per_sweep; ++h) {
      if (warm) hmc_cfg.step_size = adapter.step_size();
      const HmcResult r = hmc_transition(q, target, hmc_cfg, rng, warm ? nullptr : &draws.hmc);
      if (warm) {
        const double apt = std::isfinite(r.energy_error)
                               ? std::min(1.0, std::exp(-r.energy_error))
                               : 0.0;
        adapter.update(apt);
      }
      q = r.q;
    }
    state = unpack_state(q, d, cfg);

    const CostMatrix L = build_cost_matrix(data, state, alpha, cfg.family);
    const LogWeightMatrix W = log_weights(L);
    ChainState chain = ChainState::from(perm, W);
    ChainStats* stats = warm ? nullptr : &draws.perm_chain;
    for (int t = 0; t < perm_steps; ++t) step(chain, W, cfg.priors.k_bound, rng, stats);
    perm = chain.perm;

    if (!warm && (sweep - cfg.warmup_iters) % cfg.thin == 0) {
      draws.beta_trace.push_back(state.beta);
      draws.sigma2_trace.push_back(state.sigma2);
      draws.perm_trace.push_back(perm);
    }
  }
  const auto t_end = std::chrono::steady_clock::now();
  draws.wall_time_per_iter =
      std::chrono::duration<double>(t_end - t_start).count() / cfg.gibbs_iters;
  return draws;
}

McemResult mcem_fit(const Dataset& data, const FitConfig& cfg) {
  data.validate();
  cfg.validate();
  const int n = data.n();
  const int d = data.d();
  const double alpha = cfg.resolved_alpha(n);
  Rng rng(cfg.seed);

  Init init = initialize(data, cfg);
  RegressionState state = init.state;
  PermutationMap perm = init.perm;
  VectorXd q = pack_state(state, cfg);

  HmcConfig hmc_cfg = cfg.hmc;
  StepSizeAdapter adapter(hmc_cfg.step_size, hmc_cfg.target_accept);

  McemResult result;
  int stable_sweeps = 0;
  for (int iter = 0; iter < cfg.gibbs_iters; ++iter) {
    const PermutationMap perm_prev = perm;

    const TargetFn target = make_target(data, perm, cfg);
    for (int h = 0; h < cfg.hmc_transitions_per_sweep; ++h) {
      // Unlike the Gibbs sampler, the mode-seeking loop has no stationarity
      // requirement, so the step size keeps adapting as the target sharpens
      // (sigma2 collapses toward the residual scale of the current matching).
      hmc_cfg.step_size = adapter.step_size();
      const HmcResult r = hmc_transition(q, target, hmc_cfg, rng);
      const double apt =
          std::isfinite(r.energy_error) ? std::min(1.0, std::exp(-r.energy_error)) : 0.0;
      adapter.update(apt);
      q = r.q;
    }
    state = unpack_state(q, d, cfg);

    const CostMatrix L = build_cost_matrix(data, state, alpha, cfg.family);
    McemRecord rec;
    rec.objective_before = assignment_objective(L, perm);
    perm = solve_assignment(L);
    rec.objective_after = assignment_objective(L, perm);
    rec.state = state;
    rec.perm = perm;
    result.trajectory.push_back(std::move(rec));
    result.iterations = iter + 1;

    // The parameter draws always jitter, so the fixed point is declared on the
    // discrete variable alone: an unchanged matching over several sweeps.
    stable_sweeps = perm == perm_prev ? stable_sweeps + 1 : 0;
    if (iter >= cfg.warmup_iters && stable_sweeps >= 5) {
      result.converged = true;
      break;
    }
  }
  return result;
}

namespace {
double quantile_sorted(const std::vector<double>& sorted, double p) {
  const std::size_t m = sorted.size();
  if (m == 1) return sorted[0];
  const double pos = p * double(m - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, m - 1);
  const double frac = pos - double(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}
}  // namespace

PosteriorSummary summarize(const Draws& draws, const std::optional<Reference>& reference) {
  if (draws.size() == 0) throw std::invalid_argument("summarize: empty trace");
  const int d = static_cast<int>(draws.beta_trace.front().size());
  const int n = draws.perm_trace.front().n();
  const double m = double(draws.size());

  PosteriorSummary s;
  s.beta_mean = VectorXd::Zero(d);
  for (const auto& b : draws.beta_trace) s.beta_mean += b;
  s.beta_mean /= m;

  s.beta_ci_lower.resize(d);
  s.beta_ci_upper.resize(d);
  std::vector<double> coord(draws.size());
  for (int j = 0; j < d; ++j) {
    for (std::size_t t = 0; t < draws.size(); ++t) coord[t] = draws.beta_trace[t][j];
    std::sort(coord.begin(), coord.end());
    s.beta_ci_lower[j] = quantile_sorted(coord, 0.025);
    s.beta_ci_upper[j] = quantile_sorted(coord, 0.975);
  }

  s.sigma2_mean = 0.0;
  for (double v : draws.sigma2_trace) s.sigma2_mean += v;
  s.sigma2_mean /= m;

  s.pi_mean = MatrixXd::Zero(n, n);
  for (const auto& p : draws.perm_trace)
    for (int i = 0; i < n; ++i) s.pi_mean(i, p.sigma[i]) += 1.0;
  s.pi_mean /= m;

  if (reference) {
    s.mean_abs_beta_error = (s.beta_mean - reference->beta0).cwiseAbs().mean();
    const double l1 = mismatch_metrics(s.pi_mean, reference->pi0).entrywise_l1;
    s.entrywise_l1_pi = l1;
    s.entrywise_l1_pi_norm = l1 / (double(n) * double(n));
    if (reference->pi0_target)
      s.entrywise_l1_pi_blended =
          mismatch_metrics(s.pi_mean, *reference->pi0_target).entrywise_l1;
  }
  return s;
}

}  // namespace permreg
