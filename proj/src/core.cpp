#include "permreg/core.hpp"

#include <cmath>
#include <limits>

namespace permreg {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_finite_state(const RegressionState& state) {
  if (!(state.sigma2 > 0.0) || !std::isfinite(state.sigma2))
    throw std::invalid_argument("sigma2 must be positive and finite");
  if (!state.beta.allFinite()) throw std::invalid_argument("beta must be finite");
}
}  // namespace

void Dataset::validate() const {
  if (y.size() < 1) throw std::invalid_argument("empty dataset");
  if (X.rows() != y.size())
    throw std::invalid_argument("row count of X must equal length of y");
  if (X.cols() < 1) throw std::invalid_argument("X needs at least one column");
  if (!y.allFinite() || !X.allFinite())
    throw std::invalid_argument("dataset entries must be finite");
}

PermutationMap PermutationMap::identity(int n) {
  PermutationMap p;
  p.sigma.resize(n);
  for (int i = 0; i < n; ++i) p.sigma[i] = i;
  return p;
}

bool PermutationMap::is_valid() const {
  const int m = n();
  std::vector<char> seen(m, 0);
  for (int v : sigma) {
    if (v < 0 || v >= m || seen[v]) return false;
    seen[v] = 1;
  }
  return true;
}

int PermutationMap::displaced() const {
  int c = 0;
  for (int i = 0; i < n(); ++i)
    if (sigma[i] != i) ++c;
  return c;
}

MatrixXd PermutationMap::to_matrix() const {
  MatrixXd m = MatrixXd::Zero(n(), n());
  for (int i = 0; i < n(); ++i) m(i, sigma[i]) = 1.0;
  return m;
}

void FitConfig::validate() const {
  if (!alpha_auto && !(alpha > 0.0 && alpha <= 1.0))
    throw std::invalid_argument("alpha must lie in (0,1]");
  if (gibbs_iters < 1 || warmup_iters < 0 || hmc_transitions_per_sweep < 1 || thin < 1)
    throw std::invalid_argument("iteration counts must be positive");
  if (warmup_iters >= gibbs_iters)
    throw std::invalid_argument("warmup_iters must be below gibbs_iters");
  if (!(priors.beta_prior_var > 0.0) || !(priors.sigma2_prior_var > 0.0))
    throw std::invalid_argument("prior variances must be positive");
  if (priors.k_bound && *priors.k_bound < 0)
    throw std::invalid_argument("k_bound must be non-negative");
  if (!(hmc.step_size > 0.0) || hmc.n_leapfrog < 1)
    throw std::invalid_argument("invalid HMC configuration");
  if (family.kind == LikelihoodFamily::Kind::Ald && !(family.tau > 0.0 && family.tau < 1.0))
    throw std::invalid_argument("ALD tau must lie in (0,1)");
}

double check_loss(double u, double tau) {
  return u * (tau - (u < 0.0 ? 1.0 : 0.0));
}

double check_loss_subgrad(double u, double tau) {
  if (u == 0.0) return tau - 0.5;
  return tau - (u < 0.0 ? 1.0 : 0.0);
}

double log_likelihood(const Dataset& data, const PermutationMap& perm,
                      const RegressionState& state, const LikelihoodFamily& family) {
  data.validate();
  check_finite_state(state);
  if (perm.n() != data.n() || !perm.is_valid())
    throw std::invalid_argument("perm must be a bijection on [0, n)");

  const int n = data.n();
  const VectorXd mean = data.X * state.beta;  // mean[j] = x_j' beta
  double ll = 0.0;
  if (family.is_gaussian()) {
    const double inv2s2 = 0.5 / state.sigma2;
    const double c = -0.5 * (kLog2Pi + std::log(state.sigma2));
    for (int i = 0; i < n; ++i) {
      const double r = data.y[i] - mean[perm.sigma[i]];
      ll += c - r * r * inv2s2;
    }
  } else {
    const double sigma = std::sqrt(state.sigma2);
    const double c = std::log(family.tau * (1.0 - family.tau)) - std::log(sigma);
    for (int i = 0; i < n; ++i) {
      const double r = data.y[i] - mean[perm.sigma[i]];
      ll += c - check_loss(r, family.tau) / sigma;
    }
  }
  // -inf is a legitimate value for the sampler (an overflowing residual term
  // means "reject this state"); only NaN indicates a real inconsistency.
  if (std::isnan(ll))
    throw std::invalid_argument("log-likelihood is NaN (inconsistent inputs)");
  return ll;
}

namespace {
double log_prior_beta(const VectorXd& beta, double var) {
  const int d = static_cast<int>(beta.size());
  return -0.5 * d * (kLog2Pi + std::log(var)) - beta.squaredNorm() / (2.0 * var);
}

// Half-normal TN(0, var; 0, inf) log-density at s > 0.
double log_prior_sigma2(double s, double var) {
  return std::log(2.0) - 0.5 * (kLog2Pi + std::log(var)) - s * s / (2.0 * var);
}
}  // namespace

double log_fractional_target(const Dataset& data, const PermutationMap& perm,
                             const RegressionState& state, const FitConfig& cfg) {
  if (cfg.priors.k_bound && perm.displaced() > *cfg.priors.k_bound) return kNegInf;
  const double alpha = cfg.resolved_alpha(data.n());
  return alpha * log_likelihood(data, perm, state, cfg.family) +
         log_prior_beta(state.beta, cfg.priors.beta_prior_var) +
         log_prior_sigma2(state.sigma2, cfg.priors.sigma2_prior_var);
}

double log_fractional_target_logscale(const Dataset& data, const PermutationMap& perm,
                                      const VectorXd& beta, double log_sigma2,
                                      const FitConfig& cfg) {
  RegressionState s{beta, std::exp(log_sigma2)};
  return log_fractional_target(data, perm, s, cfg) + log_sigma2;
}

VectorXd grad_log_fractional_target(const Dataset& data, const PermutationMap& perm,
                                    const RegressionState& state, const FitConfig& cfg) {
  data.validate();
  check_finite_state(state);
  const int n = data.n();
  const int d = data.d();
  const double alpha = cfg.resolved_alpha(n);
  const VectorXd mean = data.X * state.beta;

  VectorXd g = VectorXd::Zero(d + 1);
  if (cfg.family.is_gaussian()) {
    const double inv_s2 = 1.0 / state.sigma2;
    double ssr = 0.0;
    VectorXd xr = VectorXd::Zero(d);  // sum_i r_i x_{sigma(i)}
    for (int i = 0; i < n; ++i) {
      const int j = perm.sigma[i];
      const double r = data.y[i] - mean[j];
      ssr += r * r;
      xr += r * data.X.row(j).transpose();
    }
    g.head(d) = alpha * inv_s2 * xr;
    g[d] = alpha * (-0.5 * n + 0.5 * ssr * inv_s2);
  } else {
    const double sigma = std::sqrt(state.sigma2);
    double rho_sum = 0.0;
    VectorXd xs = VectorXd::Zero(d);  // sum_i rho'(r_i) x_{sigma(i)}
    for (int i = 0; i < n; ++i) {
      const int j = perm.sigma[i];
      const double r = data.y[i] - mean[j];
      rho_sum += check_loss(r, cfg.family.tau);
      xs += check_loss_subgrad(r, cfg.family.tau) * data.X.row(j).transpose();
    }
    g.head(d) = alpha / sigma * xs;
    // d/dt of [-n log sigma - sum rho / sigma] with sigma = e^{t/2}
    g[d] = alpha * (-0.5 * n + 0.5 * rho_sum / sigma);
  }
  g.head(d) -= state.beta / cfg.priors.beta_prior_var;
  // half-normal prior on sigma2 = e^t, plus the Jacobian term
  g[d] += -state.sigma2 * state.sigma2 / cfg.priors.sigma2_prior_var + 1.0;
  return g;
}

namespace {
MismatchMetrics l1_only(const MatrixXd& a, const MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols())
    throw std::invalid_argument("mismatch_metrics: dimension mismatch");
  MismatchMetrics m;
  m.entrywise_l1 = (a - b).cwiseAbs().sum();
  return m;
}
}  // namespace

MismatchMetrics mismatch_metrics(const PermutationMap& a, const PermutationMap& b) {
  if (a.n() != b.n()) throw std::invalid_argument("mismatch_metrics: dimension mismatch");
  MismatchMetrics m;
  int diff = 0;
  for (int i = 0; i < a.n(); ++i)
    if (a.sigma[i] != b.sigma[i]) ++diff;
  m.displaced = diff;
  m.entrywise_l1 = 2.0 * diff;  // two unit entries move per differing row
  return m;
}

MismatchMetrics mismatch_metrics(const MatrixXd& a, const MatrixXd& b) {
  return l1_only(a, b);
}

MismatchMetrics mismatch_metrics(const MatrixXd& a, const PermutationMap& b) {
  return l1_only(a, b.to_matrix());
}

}  // namespace permreg
