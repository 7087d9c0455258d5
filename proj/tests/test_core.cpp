#include <doctest.h>

#include <cmath>
#include <random>

#include "permreg/core.hpp"

using namespace permreg;

namespace {

// Independent per-observation density oracle: evaluates each observation's
// log-density from scratch, without the vectorized path.
double loglik_oracle(const Dataset& data, const PermutationMap& perm,
                     const RegressionState& st, const LikelihoodFamily& fam) {
  double total = 0.0;
  for (int i = 0; i < data.n(); ++i) {
    double mu = 0.0;
    for (int j = 0; j < data.d(); ++j) mu += data.X(perm.sigma[i], j) * st.beta[j];
    const double u = data.y[i] - mu;
    if (fam.is_gaussian()) {
      total += -0.5 * std::log(2.0 * M_PI * st.sigma2) - u * u / (2.0 * st.sigma2);
    } else {
      const double s = std::sqrt(st.sigma2);
      const double rho = u < 0 ? u * (fam.tau - 1.0) : u * fam.tau;
      total += std::log(fam.tau * (1.0 - fam.tau)) - std::log(s) - rho / s;
    }
  }
  return total;
}

Dataset random_dataset(int n, int d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Dataset data;
  data.y.resize(n);
  data.X.resize(n, d);
  for (int i = 0; i < n; ++i) {
    data.y[i] = normal(rng);
    for (int j = 0; j < d; ++j) data.X(i, j) = normal(rng);
  }
  return data;
}

PermutationMap random_perm(int n, std::mt19937_64& rng) {
  PermutationMap p = PermutationMap::identity(n);
  std::shuffle(p.sigma.begin(), p.sigma.end(), rng);
  return p;
}

FitConfig basic_cfg(double alpha) {
  FitConfig cfg;
  cfg.alpha = alpha;
  return cfg;
}

}  // namespace

TEST_CASE("gaussian log-likelihood on zero-residual instances") {
  Dataset data;
  data.y = VectorXd::Zero(1);
  data.X = MatrixXd::Zero(1, 1);
  RegressionState st{VectorXd::Zero(1), 1.0};
  const double ll = log_likelihood(data, PermutationMap::identity(1), st,
                                   LikelihoodFamily::gaussian());
  CHECK(ll == doctest::Approx(-0.5 * std::log(2.0 * M_PI)).epsilon(1e-14));

  Dataset d2;
  d2.y.resize(2);
  d2.y << 1.0, 2.0;
  d2.X.resize(2, 1);
  d2.X << 1.0, 2.0;
  RegressionState st2{VectorXd::Ones(1), 1.0};
  const double ll2 = log_likelihood(d2, PermutationMap::identity(2), st2,
                                    LikelihoodFamily::gaussian());
  CHECK(ll2 == doctest::Approx(-std::log(2.0 * M_PI)).epsilon(1e-14));
}

TEST_CASE("log-likelihood matches the density oracle") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Dataset data = random_dataset(3, 2, rng);
    const PermutationMap perm = random_perm(3, rng);
    RegressionState st{VectorXd::Ones(2) * 0.3, 0.7};
    for (auto fam : {LikelihoodFamily::gaussian(), LikelihoodFamily::ald(0.3)}) {
      const double got = log_likelihood(data, perm, st, fam);
      CHECK(got == doctest::Approx(loglik_oracle(data, perm, st, fam)).epsilon(1e-12));
    }
  }
}

TEST_CASE("ALD at tau=1/2 is the Laplace likelihood at scale 2*sigma") {
  std::mt19937_64 rng(11);
  const Dataset data = random_dataset(6, 2, rng);
  RegressionState st{VectorXd::Ones(2), 0.25};
  const double sigma = 0.5;
  const double got =
      log_likelihood(data, PermutationMap::identity(6), st, LikelihoodFamily::ald(0.5));
  double laplace = 0.0;
  const double b = 2.0 * sigma;
  const VectorXd mean = data.X * st.beta;
  for (int i = 0; i < 6; ++i)
    laplace += -std::log(2.0 * b) - std::abs(data.y[i] - mean[i]) / b;
  CHECK(got == doctest::Approx(laplace).epsilon(1e-12));
}

TEST_CASE("fractional target: alpha=1, linearity in alpha, brute force") {
  std::mt19937_64 rng(13);
  const Dataset data = random_dataset(5, 2, rng);
  const PermutationMap perm = random_perm(5, rng);
  RegressionState st{VectorXd::Ones(2) * 0.4, 0.9};

  const double ll = log_likelihood(data, perm, st, LikelihoodFamily::gaussian());
  const double at_1 = log_fractional_target(data, perm, st, basic_cfg(1.0));
  const double at_05 = log_fractional_target(data, perm, st, basic_cfg(0.5));
  const double at_025 = log_fractional_target(data, perm, st, basic_cfg(0.25));

  // difference between temperatures isolates the likelihood part
  CHECK(at_05 - at_025 == doctest::Approx(0.25 * ll).epsilon(1e-12));

  // brute-force recomputation of priors
  const int d = 2;
  const double lp_beta = -0.5 * d * std::log(2.0 * M_PI * 1000.0) -
                         st.beta.squaredNorm() / 2000.0;
  const double lp_s2 = std::log(2.0) - 0.5 * std::log(2.0 * M_PI * 1000.0) -
                       st.sigma2 * st.sigma2 / 2000.0;
  CHECK(at_1 == doctest::Approx(ll + lp_beta + lp_s2).epsilon(1e-12));

  // three-alpha linearity assertion
  const double at_075 = log_fractional_target(data, perm, st, basic_cfg(0.75));
  CHECK(at_1 - at_075 == doctest::Approx(at_075 - at_05).epsilon(1e-10));
}

TEST_CASE("fractional target rejects permutations outside the support") {
  std::mt19937_64 rng(17);
  const Dataset data = random_dataset(5, 2, rng);
  RegressionState st{VectorXd::Zero(2), 1.0};
  FitConfig cfg = basic_cfg(1.0);
  cfg.priors.k_bound = 0;
  PermutationMap swapped = PermutationMap::identity(5);
  std::swap(swapped.sigma[0], swapped.sigma[1]);
  CHECK(std::isinf(log_fractional_target(data, swapped, st, cfg)));
  CHECK(log_fractional_target(data, swapped, st, cfg) < 0);
  CHECK(std::isfinite(log_fractional_target(data, PermutationMap::identity(5), st, cfg)));
}

TEST_CASE("gradient at an exact fit equals the prior gradient in beta") {
  Dataset data;
  data.y.resize(3);
  data.y << 1.0, 2.0, 3.0;
  data.X.resize(3, 1);
  data.X << 1.0, 2.0, 3.0;
  RegressionState st{VectorXd::Ones(1), 0.5};
  const VectorXd g =
      grad_log_fractional_target(data, PermutationMap::identity(3), st, basic_cfg(0.8));
  CHECK(g[0] == doctest::Approx(-1.0 / 1000.0).epsilon(1e-12));
}

TEST_CASE("gradient matches central finite differences") {
  std::mt19937_64 rng(19);
  const double h = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 20, d = 3;
    const Dataset data = random_dataset(n, d, rng);
    const PermutationMap perm = random_perm(n, rng);
    std::normal_distribution<double> normal;
    VectorXd beta(d);
    for (int j = 0; j < d; ++j) beta[j] = normal(rng);
    const double t = 0.3 * normal(rng);
    const FitConfig cfg = basic_cfg(trial % 2 == 0 ? 1.0 : 0.37);

    RegressionState st{beta, std::exp(t)};
    const VectorXd g = grad_log_fractional_target(data, perm, st, cfg);
    for (int j = 0; j <= d; ++j) {
      VectorXd bp = beta, bm = beta;
      double tp = t, tm = t;
      if (j < d) {
        bp[j] += h;
        bm[j] -= h;
      } else {
        tp += h;
        tm -= h;
      }
      const double fd = (log_fractional_target_logscale(data, perm, bp, tp, cfg) -
                         log_fractional_target_logscale(data, perm, bm, tm, cfg)) /
                        (2.0 * h);
      CHECK(g[j] == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("likelihood part of the gradient is linear in alpha") {
  std::mt19937_64 rng(23);
  const Dataset data = random_dataset(10, 2, rng);
  const PermutationMap perm = random_perm(10, rng);
  RegressionState st{VectorXd::Ones(2) * 0.2, 1.3};
  const VectorXd g1 = grad_log_fractional_target(data, perm, st, basic_cfg(0.2));
  const VectorXd g2 = grad_log_fractional_target(data, perm, st, basic_cfg(0.4));
  // prior+Jacobian part at alpha -> 0 limit: g_prior = 2*g1 - g2 solves for it
  FitConfig tiny = basic_cfg(1e-12);
  const VectorXd gp = grad_log_fractional_target(data, perm, st, tiny);
  for (int j = 0; j < g1.size(); ++j)
    CHECK(g2[j] - gp[j] == doctest::Approx(2.0 * (g1[j] - gp[j])).epsilon(1e-9));
}

TEST_CASE("mismatch metrics on permutations") {
  const auto id = PermutationMap::identity(6);
  auto m = mismatch_metrics(id, id);
  CHECK(*m.displaced == 0);
  CHECK(m.entrywise_l1 == 0.0);

  PermutationMap tr = id;
  std::swap(tr.sigma[1], tr.sigma[4]);
  m = mismatch_metrics(id, tr);
  CHECK(*m.displaced == 2);
  CHECK(m.entrywise_l1 == 4.0);

  // matrix form agrees with direct summation
  const auto mm = mismatch_metrics(id.to_matrix(), tr.to_matrix());
  CHECK_FALSE(mm.displaced.has_value());
  CHECK(mm.entrywise_l1 == 4.0);
}

TEST_CASE("mismatch metrics properties: symmetry, 2x displaced, zero iff equal") {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 5;
    const PermutationMap a = random_perm(n, rng);
    const PermutationMap b = random_perm(n, rng);
    const auto ab = mismatch_metrics(a, b);
    const auto ba = mismatch_metrics(b, a);
    CHECK(ab.entrywise_l1 == ba.entrywise_l1);
    CHECK(*ab.displaced == *ba.displaced);
    CHECK(ab.entrywise_l1 == 2.0 * *ab.displaced);
    CHECK((ab.entrywise_l1 == 0.0) == (a == b));
    // matrix route agrees
    CHECK(mismatch_metrics(a.to_matrix(), b.to_matrix()).entrywise_l1 ==
          doctest::Approx(ab.entrywise_l1));
  }
}

TEST_CASE("mismatch metrics on a posterior-mean style matrix") {
  // average of identity and a transposition: hand-summed L1 vs identity
  const auto id = PermutationMap::identity(3);
  PermutationMap tr = id;
  std::swap(tr.sigma[0], tr.sigma[1]);
  const MatrixXd avg = 0.5 * (id.to_matrix() + tr.to_matrix());
  // rows 0,1: |0.5-1| + |0.5-0| each = 1.0; row 2 exact
  CHECK(mismatch_metrics(avg, id).entrywise_l1 == doctest::Approx(2.0));
}

TEST_CASE("input validation") {
  Dataset bad;
  bad.y = VectorXd::Ones(3);
  bad.X = MatrixXd::Ones(2, 2);
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  PermutationMap notperm;
  notperm.sigma = {0, 0, 1};
  CHECK_FALSE(notperm.is_valid());

  Dataset ok;
  ok.y = VectorXd::Ones(2);
  ok.X = MatrixXd::Ones(2, 1);
  RegressionState bad_state{VectorXd::Ones(1), -1.0};
  CHECK_THROWS_AS(
      log_likelihood(ok, PermutationMap::identity(2), bad_state, LikelihoodFamily::gaussian()),
      std::invalid_argument);
}
