#include "permreg/simlab.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace permreg {

void SimConfig::validate() const {
  if (n < 2 || d < 1) throw std::invalid_argument("need n >= 2 and d >= 1");
  if (!(s0 >= 2 && s0 < n)) throw std::invalid_argument("need 2 <= s0 < n");
  // sigma = 0 is allowed: a noiseless instance, useful for exact-recovery checks.
  if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be non-negative");
  if (beta0.size() != 0 && beta0.size() != d)
    throw std::invalid_argument("beta0 length must equal d");
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  // splitmix64 over a mixed key
  std::uint64_t x = base ^ (a * 0x9e3779b97f4a7c15ULL) ^ (b * 0xbf58476d1ce4e5b9ULL);
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {
double draw_ald(Rng& rng, double sigma, double tau) {
  // Mixture of two exponential tails: mass 1-tau on u >= 0 with mean sigma/tau,
  // mass tau on u < 0 with mean sigma/(1-tau).
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);
  if (unif(rng) < 1.0 - tau) return expo(rng) * sigma / tau;
  return -expo(rng) * sigma / (1.0 - tau);
}
}  // namespace

SimOutput generate_linear(const SimConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  const int n = cfg.n, d = cfg.d, s0 = cfg.s0;
  SimOutput out;
  out.beta0 = cfg.beta0.size() ? cfg.beta0 : VectorXd::Ones(d);

  MatrixXd X(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) X(i, j) = normal(rng);
  VectorXd y = X * out.beta0;
  if (cfg.family.is_gaussian()) {
    for (int i = 0; i < n; ++i) y[i] += cfg.sigma * normal(rng);
  } else {
    for (int i = 0; i < n; ++i) y[i] += draw_ald(rng, cfg.sigma, cfg.family.tau);
  }

  const MatrixXd X_orig = X;
  const double y0 = y[0];

  // Reverse the first s0 rows of X; responses keep their original order, so
  // the matching permutation is the same reversal.
  for (int i = 0; i < s0; ++i) X.row(i) = X_orig.row(s0 - 1 - i);

  out.pi0.sigma.resize(n);
  for (int i = 0; i < n; ++i) out.pi0.sigma[i] = i < s0 ? s0 - 1 - i : i;

  if (cfg.duplicate_first && s0 < n) {
    // Overwrite slot s0 with a copy of the pre-permutation first observation.
    // Covariate row x_1 now appears at rows s0-1 (via the reversal) and s0, and
    // response y_1 at rows 0 and s0: a 2x2 block the posterior cannot resolve.
    X.row(s0) = X_orig.row(0);
    y[s0] = y0;
  }

  out.pi0_target = out.pi0.to_matrix();
  if (cfg.duplicate_first && s0 < n) {
    out.pi0_target(0, s0 - 1) = 0.5;
    out.pi0_target(0, s0) = 0.5;
    out.pi0_target(s0, s0 - 1) = 0.5;
    out.pi0_target(s0, s0) = 0.5;
  }

  out.data.y = std::move(y);
  out.data.X = std::move(X);
  return out;
}

namespace {
struct CellAccum {
  double beta_err = 0.0, pi_l1 = 0.0, sec = 0.0;
  int ok = 0;
  std::string error;
};
}  // namespace

BenchmarkResult run_benchmark(const BenchmarkGrid& grid) {
  if (grid.n_values.empty() || grid.alpha_values.empty() || grid.replicates < 1)
    throw std::invalid_argument("benchmark grid must be non-empty");

  BenchmarkResult result;
  for (std::size_t ni = 0; ni < grid.n_values.size(); ++ni) {
    const int n = grid.n_values[ni];
    for (std::size_t ai = 0; ai < grid.alpha_values.size(); ++ai) {
      const double alpha_spec = grid.alpha_values[ai];
      const double alpha = alpha_spec < 0.0 ? 1.0 / n : alpha_spec;

      CellAccum acc;
      for (int rep = 0; rep < grid.replicates; ++rep) {
        const std::uint64_t cell_key = ni * grid.alpha_values.size() + ai;
        const std::uint64_t seed = derive_seed(grid.seed, cell_key, rep);
        try {
          SimConfig sim = grid.sim;
          sim.n = n;
          sim.seed = derive_seed(seed, 1, 0);
          const SimOutput data = generate_linear(sim);

          FitConfig fit = grid.fit;
          fit.alpha = alpha;
          fit.alpha_auto = false;
          fit.family = sim.family;
          fit.seed = derive_seed(seed, 2, 0);
          const Draws draws = gibbs_fit(data.data, fit);

          Reference ref{data.beta0, data.pi0, data.pi0_target};
          const PosteriorSummary s = summarize(draws, ref);
          acc.beta_err += *s.mean_abs_beta_error;
          acc.pi_l1 += *s.entrywise_l1_pi;
          acc.sec += draws.wall_time_per_iter;
          ++acc.ok;
          result.timings.push_back({n, alpha, rep, draws.wall_time_per_iter});
        } catch (const std::exception& e) {
          acc.error = e.what();
        }
      }

      BenchmarkRow row;
      row.n = n;
      row.alpha = alpha;
      row.replicates = acc.ok;
      row.error = acc.error;
      if (acc.ok > 0) {
        row.mean_abs_beta_error = acc.beta_err / acc.ok;
        row.entrywise_l1_pi = acc.pi_l1 / acc.ok;
        row.entrywise_l1_pi_norm = row.entrywise_l1_pi / (double(n) * double(n));
        row.sec_per_iter = acc.sec / acc.ok;
      }
      result.rows.push_back(std::move(row));
    }
  }
  return result;
}

std::vector<ConcentrationRow> concentration_diagnostic(const std::vector<int>& n_values,
                                                       const SimConfig& sim_template,
                                                       const FitConfig& fit_template,
                                                       int replicates, std::uint64_t seed) {
  std::vector<ConcentrationRow> rows;
  for (std::size_t ni = 0; ni < n_values.size(); ++ni) {
    const int n = n_values[ni];
    double total = 0.0;
    long count = 0;
    for (int rep = 0; rep < replicates; ++rep) {
      SimConfig sim = sim_template;
      sim.n = n;
      sim.seed = derive_seed(seed, ni, rep * 2);
      const SimOutput data = generate_linear(sim);

      FitConfig fit = fit_template;
      fit.alpha = 1.0 / n;
      fit.alpha_auto = false;
      fit.seed = derive_seed(seed, ni, rep * 2 + 1);
      const Draws draws = gibbs_fit(data.data, fit);
      for (const auto& b : draws.beta_trace) {
        total += (b - data.beta0).norm();
        ++count;
      }
    }
    rows.push_back({n, total / double(count)});
  }
  return rows;
}

}  // namespace permreg
