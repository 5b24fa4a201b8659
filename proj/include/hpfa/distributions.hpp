#pragma once

#include <Eigen/Dense>

#include "hpfa/rng.hpp"

namespace hpfa {

// Scalar draws.  All parameters are validated; gamma/beta use the
// shape-scale convention throughout.
double sample_gamma(double shape, double scale, RngStream& rng);
double sample_beta(double a, double b, RngStream& rng);
double sample_normal(double mean, double sd, RngStream& rng);
int sample_bernoulli(double p, RngStream& rng);
int sample_poisson(double rate, RngStream& rng);

// Vector draws.
Eigen::VectorXd sample_dirichlet(const Eigen::VectorXd& alpha, RngStream& rng);
// Index in [0, weights.size()) proportional to nonnegative weights.
Eigen::Index sample_categorical(const Eigen::Ref<const Eigen::VectorXd>& weights, RngStream& rng);
// N(mean, cov), cov symmetric positive definite.
Eigen::VectorXd sample_mvnormal(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                                RngStream& rng);
// N(mean, prec^{-1}) without forming the covariance; prec symmetric positive
// definite.  Used by the logistic coefficient update where the conditional is
// parameterized by its precision.
Eigen::VectorXd sample_mvnormal_prec(const Eigen::VectorXd& mean, const Eigen::MatrixXd& prec,
                                     RngStream& rng);

// Chinese restaurant table count: number of tables after z customers with
// concentration r, drawn as sum_{m=1..z} Bernoulli(r / (m - 1 + r)).
int sample_crt(int z, double r, RngStream& rng);
// Exact pmf P(l | z, r) for l = 0..z via unsigned Stirling numbers of the
// first kind, P(l) = Gamma(r)/Gamma(r+z) * |s(z,l)| * r^l.  Exposed for
// validation; the recurrence is run in long double and is reliable for
// z <= ~30.
Eigen::VectorXd crt_pmf(int z, double r);
double crt_pmf(int z, double r, int l);

// Polya-Gamma PG(b, c) via the truncated infinite sum of scaled gammas,
// omega = (1/2pi^2) sum_{m=1..T} g_m / ((m - 1/2)^2 + c^2/(4pi^2)).
double sample_polya_gamma(double b, double c, int truncation, RngStream& rng);
// E[PG(b, c)] = b/(2c) tanh(c/2), b/4 at c = 0.
double polya_gamma_mean(double b, double c);

// Numerically stable logistic helpers.
double sigmoid(double x);
double logit(double p);

// log Beta(x; a, b) density, -inf outside (0, 1).
double log_beta_pdf(double x, double a, double b);

}  // namespace hpfa
