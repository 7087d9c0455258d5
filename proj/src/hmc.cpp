#include "permreg/hmc.hpp"

#include <cmath>
#include <limits>

namespace permreg {

namespace {
constexpr double kDivergenceThreshold = 1000.0;
}

bool leapfrog(VectorXd& q, VectorXd& p, double eps, int n_steps, const TargetFn& target) {
  VectorXd grad(q.size());
  target(q, &grad);
  if (!grad.allFinite()) return false;
  for (int s = 0; s < n_steps; ++s) {
    p += 0.5 * eps * grad;
    q += eps * p;
    target(q, &grad);
    if (!q.allFinite() || !grad.allFinite()) return false;
    p += 0.5 * eps * grad;
  }
  return p.allFinite();
}

HmcResult hmc_transition(const VectorXd& q, const TargetFn& target, const HmcConfig& cfg,
                         Rng& rng, HmcDiagnostics* diag) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  VectorXd p(q.size());
  for (int i = 0; i < p.size(); ++i) p[i] = normal(rng);

  const double u0 = -target(q, nullptr);
  const double k0 = 0.5 * p.squaredNorm();

  VectorXd q1 = q, p1 = p;
  const bool finite = leapfrog(q1, p1, cfg.step_size, cfg.n_leapfrog, target);
  const double coin = unif(rng);

  HmcResult res;
  res.q = q;
  double dh = std::numeric_limits<double>::infinity();
  if (finite) {
    const double u1 = -target(q1, nullptr);
    const double k1 = 0.5 * p1.squaredNorm();
    dh = (u1 + k1) - (u0 + k0);
  }
  res.energy_error = dh;

  const bool divergent = !finite || std::abs(dh) > kDivergenceThreshold;
  if (!divergent && coin < std::exp(-dh)) {
    res.q = q1;
    res.accepted = true;
  }
  if (diag) {
    ++diag->transitions;
    if (res.accepted) ++diag->accepted;
    if (divergent) ++diag->divergences;
    diag->energy_error_sum += std::isfinite(dh) ? std::abs(dh) : kDivergenceThreshold;
  }
  return res;
}

void StepSizeAdapter::update(double accept_prob) {
  ++iter_;
  const double gain = 1.0 / std::pow(double(iter_) + 10.0, 0.6);
  log_eps_ += gain * (accept_prob - target_);
}

double warmup_adapt(const VectorXd& q0, const TargetFn& target, const HmcConfig& cfg, Rng& rng) {
  if (cfg.adapt_iters < 1) return cfg.step_size;
  StepSizeAdapter adapter(cfg.step_size, cfg.target_accept);
  HmcConfig cur = cfg;
  VectorXd q = q0;
  for (int t = 0; t < cfg.adapt_iters; ++t) {
    cur.step_size = adapter.step_size();
    const HmcResult r = hmc_transition(q, target, cur, rng);
    const double apt = std::isfinite(r.energy_error)
                           ? std::min(1.0, std::exp(-r.energy_error))
                           : 0.0;
    adapter.update(apt);
    q = r.q;
  }
  return adapter.step_size();
}

}  // namespace permreg
