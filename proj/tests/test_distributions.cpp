#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "hpfa/distributions.hpp"
#include "hpfa/errors.hpp"
#include "hpfa/rng.hpp"

using namespace hpfa;

namespace {

struct Moments {
  double mean = 0.0, var = 0.0;
};

template <typename Draw>
Moments sample_moments(int n, Draw draw) {
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    double x = draw();
    sum += x;
    sumsq += x * x;
  }
  Moments m;
  m.mean = sum / n;
  m.var = sumsq / n - m.mean * m.mean;
  return m;
}

}  // namespace

TEST_CASE("rng streams are deterministic and distinct") {
  RngStream a(42, 0), b(42, 0), c(42, 1);
  for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());
  bool any_diff = false;
  RngStream a2(42, 0);
  for (int i = 0; i < 100; ++i) any_diff |= (a2.uniform() != c.uniform());
  CHECK(any_diff);

  RngStream s1 = a.substream(3, 7), s2 = b.substream(3, 7), s3 = a.substream(3, 8);
  for (int i = 0; i < 100; ++i) CHECK(s1.uniform() == s2.uniform());
  bool sub_diff = false;
  RngStream s4 = a.substream(3, 7);
  for (int i = 0; i < 100; ++i) sub_diff |= (s4.uniform() != s3.uniform());
  CHECK(sub_diff);
}

TEST_CASE("sigmoid and logit") {
  CHECK(sigmoid(0.0) == doctest::Approx(0.5));
  CHECK(sigmoid(800.0) == doctest::Approx(1.0));
  CHECK(sigmoid(-800.0) == doctest::Approx(0.0));
  CHECK(logit(0.25) == doctest::Approx(-std::log(3.0)));
  for (double p : {1e-9, 0.25, 0.5, 0.75, 1.0 - 1e-9})
    CHECK(sigmoid(logit(p)) == doctest::Approx(p).epsilon(1e-12));
  CHECK_THROWS_AS(logit(0.0), ValidationError);
  CHECK_THROWS_AS(logit(1.0), ValidationError);
}

TEST_CASE("gamma moments and validation") {
  RngStream rng(1, 0);
  auto m = sample_moments(200000, [&] { return sample_gamma(3.0, 2.0, rng); });
  CHECK(m.mean == doctest::Approx(6.0).epsilon(0.01));
  CHECK(m.var == doctest::Approx(12.0).epsilon(0.05));
  CHECK_THROWS_AS(sample_gamma(-1.0, 1.0, rng), ValidationError);
  CHECK_THROWS_AS(sample_gamma(1.0, 0.0, rng), ValidationError);
  CHECK_THROWS_AS(sample_gamma(std::nan(""), 1.0, rng), ValidationError);
}

TEST_CASE("beta moments and validation") {
  RngStream rng(2, 0);
  auto m = sample_moments(200000, [&] { return sample_beta(2.0, 3.0, rng); });
  CHECK(m.mean == doctest::Approx(0.4).epsilon(0.01));
  CHECK(m.var == doctest::Approx(0.04).epsilon(0.05));
  CHECK_THROWS_AS(sample_beta(0.0, 1.0, rng), ValidationError);
}

TEST_CASE("normal, bernoulli, poisson basics") {
  RngStream rng(3, 0);
  auto m = sample_moments(200000, [&] { return sample_normal(-1.5, 2.0, rng); });
  CHECK(m.mean == doctest::Approx(-1.5).epsilon(0.02));
  CHECK(m.var == doctest::Approx(4.0).epsilon(0.05));
  CHECK_THROWS_AS(sample_normal(0.0, -1.0, rng), ValidationError);

  int ones = 0;
  for (int i = 0; i < 100000; ++i) ones += sample_bernoulli(0.3, rng);
  CHECK(ones / 100000.0 == doctest::Approx(0.3).epsilon(0.03));
  CHECK(sample_bernoulli(0.0, rng) == 0);
  CHECK(sample_bernoulli(1.0, rng) == 1);
  CHECK_THROWS_AS(sample_bernoulli(1.5, rng), ValidationError);

  auto mp = sample_moments(200000, [&] { return double(sample_poisson(4.0, rng)); });
  CHECK(mp.mean == doctest::Approx(4.0).epsilon(0.02));
  CHECK(mp.var == doctest::Approx(4.0).epsilon(0.05));
  CHECK(sample_poisson(0.0, rng) == 0);
  CHECK_THROWS_AS(sample_poisson(-1.0, rng), ValidationError);
}

TEST_CASE("dirichlet draws live on the simplex with correct means") {
  RngStream rng(4, 0);
  Eigen::VectorXd alpha(3);
  alpha << 2.0, 3.0, 5.0;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(3);
  for (int i = 0; i < 50000; ++i) {
    Eigen::VectorXd x = sample_dirichlet(alpha, rng);
    CHECK(x.sum() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(x.minCoeff() >= 0.0);
    acc += x;
  }
  acc /= 50000.0;
  CHECK(acc[0] == doctest::Approx(0.2).epsilon(0.03));
  CHECK(acc[1] == doctest::Approx(0.3).epsilon(0.03));
  CHECK(acc[2] == doctest::Approx(0.5).epsilon(0.03));

  // Near-zero concentrations underflow every gamma draw; the fallback must
  // still return a valid simplex point.
  Eigen::VectorXd tiny = Eigen::VectorXd::Constant(4, 1e-300);
  Eigen::VectorXd x = sample_dirichlet(tiny, rng);
  CHECK(x.sum() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_THROWS_AS(sample_dirichlet(Eigen::VectorXd::Zero(2), rng), ValidationError);
}

TEST_CASE("categorical matches weights") {
  RngStream rng(5, 0);
  Eigen::VectorXd w(3);
  w << 0.2, 0.3, 0.5;
  std::vector<int> counts(3, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) counts[sample_categorical(w, rng)]++;
  double tv = 0.0;
  for (int j = 0; j < 3; ++j) tv += std::abs(counts[j] / double(n) - w[j]);
  CHECK(tv / 2.0 < 0.01);
  CHECK_THROWS_AS(sample_categorical(Eigen::VectorXd::Zero(3), rng), ValidationError);
  Eigen::VectorXd neg(2);
  neg << 1.0, -0.1;
  CHECK_THROWS_AS(sample_categorical(neg, rng), ValidationError);
}

TEST_CASE("multivariate normal from covariance and precision agree") {
  RngStream rng(6, 0);
  Eigen::VectorXd mu(2);
  mu << 1.0, -2.0;
  Eigen::MatrixXd cov(2, 2);
  cov << 1.0, 0.5, 0.5, 2.0;
  Eigen::MatrixXd prec = cov.inverse();

  Eigen::VectorXd acc = Eigen::VectorXd::Zero(2);
  Eigen::MatrixXd sc = Eigen::MatrixXd::Zero(2, 2);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd x = sample_mvnormal(mu, cov, rng);
    acc += x;
    sc += (x - mu) * (x - mu).transpose();
  }
  acc /= n;
  sc /= n;
  CHECK((acc - mu).cwiseAbs().maxCoeff() < 0.03);
  CHECK((sc - cov).cwiseAbs().maxCoeff() < 0.06);

  acc.setZero();
  sc.setZero();
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd x = sample_mvnormal_prec(mu, prec, rng);
    acc += x;
    sc += (x - mu) * (x - mu).transpose();
  }
  acc /= n;
  sc /= n;
  CHECK((acc - mu).cwiseAbs().maxCoeff() < 0.03);
  CHECK((sc - cov).cwiseAbs().maxCoeff() < 0.06);

  Eigen::MatrixXd notpd(2, 2);
  notpd << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(sample_mvnormal(mu, notpd, rng), NumericalError);
}

TEST_CASE("crt pmf matches hand-derived values") {
  Eigen::VectorXd p21 = crt_pmf(2, 1.0);
  CHECK(p21.size() == 3);
  CHECK(p21[0] == doctest::Approx(0.0));
  CHECK(p21[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p21[2] == doctest::Approx(0.5).epsilon(1e-12));

  // z=3, r=2: |s(3,l)| = (2, 3, 1), rising factorial 2*3*4 = 24.
  Eigen::VectorXd p32 = crt_pmf(3, 2.0);
  CHECK(p32[1] == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  CHECK(p32[2] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p32[3] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  Eigen::VectorXd p505 = crt_pmf(5, 0.5);
  CHECK(p505[1] == doctest::Approx(0.40634920634920635).epsilon(1e-12));
  CHECK(p505[2] == doctest::Approx(0.42328042328042326).epsilon(1e-12));
  CHECK(p505[3] == doctest::Approx(0.14814814814814814).epsilon(1e-12));
  CHECK(p505[4] == doctest::Approx(0.021164021164021163).epsilon(1e-12));
  CHECK(p505[5] == doctest::Approx(0.0010582010582010583).epsilon(1e-12));

  for (int z : {0, 1, 4, 12, 30})
    for (double r : {0.1, 1.0, 7.5}) CHECK(crt_pmf(z, r).sum() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(crt_pmf(0, 2.0).size() == 1);
  CHECK(crt_pmf(0, 2.0)[0] == doctest::Approx(1.0));
  CHECK(crt_pmf(4, 2.0, 2) == doctest::Approx(crt_pmf(4, 2.0)[2]).epsilon(1e-12));
  CHECK_THROWS_AS(crt_pmf(-1, 1.0), ValidationError);
  CHECK_THROWS_AS(crt_pmf(2, 0.0), ValidationError);
}

TEST_CASE("crt sampler tracks its pmf") {
  RngStream rng(7, 0);
  CHECK(sample_crt(0, 3.0, rng) == 0);
  CHECK(sample_crt(1, 0.5, rng) == 1);
  const int n = 100000;
  Eigen::VectorXd pmf = crt_pmf(5, 0.5);
  Eigen::VectorXd freq = Eigen::VectorXd::Zero(6);
  for (int i = 0; i < n; ++i) freq[sample_crt(5, 0.5, rng)] += 1.0;
  freq /= n;
  CHECK((freq - pmf).cwiseAbs().sum() / 2.0 < 0.01);
  CHECK_THROWS_AS(sample_crt(2, -1.0, rng), ValidationError);
}

TEST_CASE("polya-gamma mean formula and sampler") {
  CHECK(polya_gamma_mean(1.0, 0.0) == doctest::Approx(0.25));
  CHECK(polya_gamma_mean(1.0, 2.0) == doctest::Approx(0.1903985389889412).epsilon(1e-12));
  CHECK(polya_gamma_mean(2.0, 3.0) == doctest::Approx(0.3017160845482888).epsilon(1e-12));
  // Continuity across the small-|c| Taylor branch.
  CHECK(polya_gamma_mean(1.0, 1e-4) == doctest::Approx(polya_gamma_mean(1.0, 2e-4)).epsilon(1e-6));

  RngStream rng(8, 0);
  for (double c : {0.0, 2.0, -2.0}) {
    auto m = sample_moments(50000, [&] { return sample_polya_gamma(1.0, c, 100, rng); });
    double se = std::sqrt(m.var / 50000.0);
    CHECK(std::abs(m.mean - polya_gamma_mean(1.0, c)) < 4.0 * se + 0.01 * polya_gamma_mean(1.0, c));
  }
  // Large |c|: the truncated series alone decays like 1/c^2; the tail term
  // must hold the mean at the exact 1/(2c) asymptote.
  auto big = sample_moments(20000, [&] { return sample_polya_gamma(1.0, 50.0, 20, rng); });
  CHECK(big.mean == doctest::Approx(polya_gamma_mean(1.0, 50.0)).epsilon(0.05));
  CHECK_THROWS_AS(sample_polya_gamma(0.0, 1.0, 20, rng), ValidationError);
  CHECK_THROWS_AS(sample_polya_gamma(1.0, 1.0, 0, rng), ValidationError);
}

TEST_CASE("log beta pdf") {
  CHECK(log_beta_pdf(0.5, 1.0, 1.0) == doctest::Approx(0.0));
  CHECK(log_beta_pdf(0.3, 2.0, 5.0) ==
        doctest::Approx(std::log(30.0 * 0.3 * std::pow(0.7, 4.0))).epsilon(1e-10));
  CHECK(log_beta_pdf(0.0, 2.0, 2.0) == -std::numeric_limits<double>::infinity());
  CHECK(log_beta_pdf(1.0, 2.0, 2.0) == -std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(log_beta_pdf(0.5, 0.0, 1.0), ValidationError);
}
