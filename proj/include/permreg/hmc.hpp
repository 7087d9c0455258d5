#pragma once

#include <functional>
#include <random>

#include "permreg/types.hpp"

namespace permreg {

using Rng = std::mt19937_64;

/// Target log-density evaluator. Returns log pi(q); when grad is non-null it
/// must be filled with the gradient at q.
using TargetFn = std::function<double(const VectorXd& q, VectorXd* grad)>;

struct HmcDiagnostics {
  long transitions = 0;
  long accepted = 0;
  long divergences = 0;  // |delta H| > 1000 events
  double energy_error_sum = 0.0;

  double accept_rate() const {
    return transitions > 0 ? double(accepted) / double(transitions) : 0.0;
  }
  double mean_energy_error() const {
    return transitions > 0 ? energy_error_sum / double(transitions) : 0.0;
  }
};

/// Half-kick / drift / half-kick leapfrog, n_steps times, in place.
/// Returns false if any intermediate quantity went non-finite (divergent).
bool leapfrog(VectorXd& q, VectorXd& p, double eps, int n_steps, const TargetFn& target);

struct HmcResult {
  VectorXd q;
  bool accepted = false;
  double energy_error = 0.0;
};

/// One HMC transition: standard-normal momentum, leapfrog with cfg.step_size
/// and cfg.n_leapfrog, Metropolis correction with accept prob min(1, exp(-dH)).
/// Divergent trajectories are rejected and counted.
HmcResult hmc_transition(const VectorXd& q, const TargetFn& target, const HmcConfig& cfg,
                         Rng& rng, HmcDiagnostics* diag = nullptr);

/// Robbins-Monro step-size update on the log scale, toward target_accept.
class StepSizeAdapter {
 public:
  explicit StepSizeAdapter(double init_step, double target_accept)
      : log_eps_(std::log(init_step)), target_(target_accept) {}

  void update(double accept_prob);
  double step_size() const { return std::exp(log_eps_); }

 private:
  double log_eps_;
  double target_;
  long iter_ = 0;
};

/// Tune step_size over cfg.adapt_iters transitions from q0; the returned value
/// is meant to be frozen for the sampling phase.
double warmup_adapt(const VectorXd& q0, const TargetFn& target, const HmcConfig& cfg, Rng& rng);

}  // namespace permreg
