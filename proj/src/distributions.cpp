#include "hpfa/distributions.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "hpfa/errors.hpp"

namespace hpfa {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

constexpr double kPi = 3.14159265358979323846;

}  // namespace

double sample_gamma(double shape, double scale, RngStream& rng) {
  require(std::isfinite(shape) && shape > 0.0, "sample_gamma: shape must be positive");
  require(std::isfinite(scale) && scale > 0.0, "sample_gamma: scale must be positive");
  return std::gamma_distribution<double>(shape, scale)(rng.engine());
}

double sample_beta(double a, double b, RngStream& rng) {
  require(std::isfinite(a) && a > 0.0, "sample_beta: a must be positive");
  require(std::isfinite(b) && b > 0.0, "sample_beta: b must be positive");
  double x = std::gamma_distribution<double>(a, 1.0)(rng.engine());
  double y = std::gamma_distribution<double>(b, 1.0)(rng.engine());
  if (x + y == 0.0) {
    // Both shapes so small that the draws underflowed; in the a,b -> 0 limit
    // the distribution concentrates on {0, 1} with P(1) = a/(a+b).
    return rng.uniform() < a / (a + b) ? 1.0 : 0.0;
  }
  return x / (x + y);
}

double sample_normal(double mean, double sd, RngStream& rng) {
  require(std::isfinite(mean), "sample_normal: mean must be finite");
  require(std::isfinite(sd) && sd > 0.0, "sample_normal: sd must be positive");
  return std::normal_distribution<double>(mean, sd)(rng.engine());
}

int sample_bernoulli(double p, RngStream& rng) {
  require(p >= 0.0 && p <= 1.0, "sample_bernoulli: p must lie in [0, 1]");
  return rng.uniform() < p ? 1 : 0;
}

int sample_poisson(double rate, RngStream& rng) {
  require(std::isfinite(rate) && rate >= 0.0, "sample_poisson: rate must be nonnegative");
  if (rate == 0.0) return 0;
  return std::poisson_distribution<int>(rate)(rng.engine());
}

Eigen::VectorXd sample_dirichlet(const Eigen::VectorXd& alpha, RngStream& rng) {
  require(alpha.size() > 0, "sample_dirichlet: empty concentration vector");
  Eigen::VectorXd out(alpha.size());
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    require(std::isfinite(alpha[i]) && alpha[i] > 0.0,
            "sample_dirichlet: concentrations must be positive");
    out[i] = std::gamma_distribution<double>(alpha[i], 1.0)(rng.engine());
  }
  double total = out.sum();
  if (total == 0.0) {
    // All gamma draws underflowed; the alpha -> 0 limit picks one vertex with
    // probability proportional to alpha.
    Eigen::Index v = sample_categorical(alpha, rng);
    out.setZero();
    out[v] = 1.0;
    return out;
  }
  return out / total;
}

Eigen::Index sample_categorical(const Eigen::Ref<const Eigen::VectorXd>& weights, RngStream& rng) {
  require(weights.size() > 0, "sample_categorical: empty weight vector");
  double total = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    require(std::isfinite(weights[i]) && weights[i] >= 0.0,
            "sample_categorical: weights must be finite and nonnegative");
    total += weights[i];
  }
  require(total > 0.0, "sample_categorical: weights sum to zero");
  double u = rng.uniform() * total;
  double cum = 0.0;
  Eigen::Index last_positive = 0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights[i] > 0.0) last_positive = i;
    cum += weights[i];
    if (u < cum) return i;
  }
  return last_positive;
}

Eigen::VectorXd sample_mvnormal(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                                RngStream& rng) {
  require(cov.rows() == cov.cols() && cov.rows() == mean.size(),
          "sample_mvnormal: dimension mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw NumericalError("sample_mvnormal: covariance is not positive definite");
  Eigen::VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i)
    z[i] = std::normal_distribution<double>(0.0, 1.0)(rng.engine());
  return mean + llt.matrixL() * z;
}

Eigen::VectorXd sample_mvnormal_prec(const Eigen::VectorXd& mean, const Eigen::MatrixXd& prec,
                                     RngStream& rng) {
  require(prec.rows() == prec.cols() && prec.rows() == mean.size(),
          "sample_mvnormal_prec: dimension mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt(prec);
  if (llt.info() != Eigen::Success)
    throw NumericalError("sample_mvnormal_prec: precision is not positive definite");
  Eigen::VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i)
    z[i] = std::normal_distribution<double>(0.0, 1.0)(rng.engine());
  // prec = L L^T, so L^{-T} z ~ N(0, prec^{-1}).
  return mean + llt.matrixU().solve(z);
}

int sample_crt(int z, double r, RngStream& rng) {
  require(z >= 0, "sample_crt: z must be nonnegative");
  require(std::isfinite(r) && r > 0.0, "sample_crt: r must be positive");
  int l = 0;
  for (int m = 1; m <= z; ++m) {
    if (rng.uniform() < r / (m - 1 + r)) ++l;
  }
  return l;
}

Eigen::VectorXd crt_pmf(int z, double r) {
  require(z >= 0, "crt_pmf: z must be nonnegative");
  require(std::isfinite(r) && r > 0.0, "crt_pmf: r must be positive");
  require(z <= 30, "crt_pmf: exact pmf supported for z <= 30 only");
  if (z == 0) return Eigen::VectorXd::Ones(1);
  // Unsigned Stirling numbers of the first kind, |s(n+1,k)| = n|s(n,k)| + |s(n,k-1)|.
  std::vector<long double> s(z + 1, 0.0L), next(z + 1, 0.0L);
  s[0] = 1.0L;  // |s(0,0)| = 1
  for (int n = 0; n < z; ++n) {
    for (int k = 0; k <= n + 1; ++k) {
      long double carry = (k > 0) ? s[k - 1] : 0.0L;
      next[k] = static_cast<long double>(n) * s[k] + carry;
    }
    std::swap(s, next);
  }
  // P(l) = |s(z,l)| r^l / rising(r, z); normalizing by the row sum is exact
  // because sum_l |s(z,l)| r^l equals the rising factorial.
  std::vector<long double> w(z + 1);
  long double rl = 1.0L, total = 0.0L;
  for (int l = 0; l <= z; ++l) {
    w[l] = s[l] * rl;
    total += w[l];
    rl *= static_cast<long double>(r);
  }
  Eigen::VectorXd pmf(z + 1);
  for (int l = 0; l <= z; ++l) pmf[l] = static_cast<double>(w[l] / total);
  return pmf;
}

double crt_pmf(int z, double r, int l) {
  require(l >= 0 && l <= z, "crt_pmf: l must lie in [0, z]");
  return crt_pmf(z, r)[l];
}

double sample_polya_gamma(double b, double c, int truncation, RngStream& rng) {
  require(std::isfinite(b) && b > 0.0, "sample_polya_gamma: b must be positive");
  require(std::isfinite(c), "sample_polya_gamma: c must be finite");
  require(truncation >= 1, "sample_polya_gamma: truncation must be >= 1");
  double c2 = c * c / (4.0 * kPi * kPi);
  double sum = 0.0, series = 0.0;
  for (int m = 1; m <= truncation; ++m) {
    double g = std::gamma_distribution<double>(b, 1.0)(rng.engine());
    double d = m - 0.5;
    sum += g / (d * d + c2);
    series += 1.0 / (d * d + c2);
  }
  // The dropped tail is replaced by its expectation so the draw keeps the
  // exact mean; without it the sum decays like 1/c^2 instead of 1/(2c) and
  // the logistic updates lose their shrinkage at large |c|.
  double full = std::abs(c) < 1e-8 ? kPi * kPi * (0.5 - c * c / 24.0)
                                   : kPi * kPi * std::tanh(0.5 * c) / c;
  double tail = b * std::max(0.0, full - series);
  return (sum + tail) / (2.0 * kPi * kPi);
}

double polya_gamma_mean(double b, double c) {
  if (std::abs(c) < 1e-4) return b * (0.25 - c * c / 48.0);
  return b * std::tanh(c / 2.0) / (2.0 * c);
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) {
  require(p > 0.0 && p < 1.0, "logit: p must lie in (0, 1)");
  return std::log(p) - std::log1p(-p);
}

double log_beta_pdf(double x, double a, double b) {
  require(std::isfinite(a) && a > 0.0 && std::isfinite(b) && b > 0.0,
          "log_beta_pdf: shape parameters must be positive");
  if (!(x > 0.0 && x < 1.0)) return -std::numeric_limits<double>::infinity();
  return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) -
         (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
}

}  // namespace hpfa
