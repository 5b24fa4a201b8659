#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hpfa/corpus.hpp"
#include "hpfa/rng.hpp"

namespace hpfa {

using MatrixXu8 = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

// Prior families for the binary presence indicators.
enum class SitePrior { Always, Exchangeable, Structured };
enum class PagePrior { Always, Exchangeable };

std::string to_string(SitePrior p);
std::string to_string(PagePrior p);

struct Hyperparameters {
  double alpha_phi = 0.05;  // topic-word Dirichlet
  double alpha_psi = 0.05;  // local-topic-word Dirichlet
  double d_r0 = 0.01, e_r0 = 100.0;  // r0 ~ Gamma(d_r0, e_r0)
  double e_r = 1.0;                  // r_k ~ Gamma(r0, e_r)
  // Site-exchangeable: pi_k ~ Beta with mean mu_pi ~ Beta(d_mu_pi, e_mu_pi)
  // and variance sigma2_pi ~ Beta(d_sigma_pi, e_sigma_pi) scaled hyperpriors.
  double d_mu_pi = 10.0, e_mu_pi = 10.0;
  double d_sigma_pi = 1.0, e_sigma_pi = 5.0;
  // Page-exchangeable mirrors it; the e parameters default to max(K-1, 1)
  // and are resolved against K at fit time (negative means unresolved).
  double d_mu_eta = 1.0, e_mu_eta = -1.0;
  double d_sigma_eta = 1.0, e_sigma_eta = -1.0;
  // Site-structured logistic coefficients: beta_k ~ N(beta0, diag(sigma_q^2)),
  // beta0_q ~ N(mu0_q, sigma0^2), 1/sigma_q^2 ~ Gamma(d_sigma, e_sigma).
  Eigen::VectorXd mu0;  // resized to Q at fit time, default zero
  double sigma0 = 0.5;  // prior sd of beta0
  double d_sigma = 1.0, e_sigma = 1.0;
};

struct SamplerSettings {
  int burn_in = 10000;
  int n_samples = 1000;
  int thin = 1;
  int chains = 1;
  int pg_truncation = 20;
  double mh_step = 0.25;  // random-walk sd on logit scale for both MH moves
  std::uint64_t seed = 0;
  int threads = 1;
  bool store_draws = true;  // keep per-draw phi/psi/theta, not just means
};

struct ModelConfig {
  int K = 50;
  bool local_topics = false;
  SitePrior site_prior = SitePrior::Always;
  PagePrior page_prior = PagePrior::Always;
  Hyperparameters hyper;
  SamplerSettings sampler;

  // Number of topic slots per page: K global plus one local slot.
  int slots() const { return local_topics ? K + 1 : K; }
  // Short code such as "ae" or "se-lt" (site prior, page prior, local topics).
  std::string variant_code() const;
  // Fills K- and Q-dependent hyperparameter defaults, validates ranges.
  Hyperparameters resolved_hyper(int Q) const;
  void validate(const Corpus& corpus) const;
};

// Parses "aa", "ae", "ea", "ee", "sa", "se" with optional "-lt" suffix.
std::pair<SitePrior, PagePrior> parse_variant(const std::string& code, bool* local_topics);

// Feasible Beta(d, e) from a mean-variance parameterization:
// d = mu (mu(1-mu)/sigma2 - 1), e = (1-mu)(mu(1-mu)/sigma2 - 1).
// Requires 0 < mu < 1 and 0 < sigma2 < mu(1-mu).
std::pair<double, double> mean_variance_to_beta_params(double mu, double sigma2);

// Draws (mu, sigma2) from the product of two Beta hyperpriors restricted to
// the feasible region sigma2 < mu(1-mu), by rejection.
std::pair<double, double> sample_feasible_mean_variance(double d_mu, double e_mu, double d_s2,
                                                        double e_s2, RngStream& rng);

// Full Gibbs state.  The training tokens and covariates are copied in so all
// update blocks work off one object.  len_scale is the per-page length that
// enters every prior shape; it equals the page token count for normal fits
// and is overridden with a fixed design constant by joint-distribution tests.
struct ModelState {
  int K = 0;      // global topics
  int slots = 0;  // K, or K+1 with a trailing local slot
  int M = 0, V = 0, Q = 0, P = 0;

  std::vector<int> site_of_page;                  // length P
  std::vector<std::vector<std::int32_t>> tokens;  // per page word ids
  Eigen::MatrixXd X;                              // M x Q covariates
  Eigen::VectorXd len_scale;                      // length P

  std::vector<std::vector<std::int32_t>> t;  // per-token slot assignment
  Eigen::MatrixXi z_page_topic;              // P x slots
  Eigen::MatrixXi z_topic_word;              // K x V
  Eigen::MatrixXi z_site_localword;          // M x V when local topics, else 0x0

  Eigen::MatrixXd phi;    // K x V, rows sum to 1
  Eigen::MatrixXd psi;    // M x V local topics, rows sum to 1
  Eigen::MatrixXd theta;  // P x slots
  Eigen::VectorXd r;      // slots
  double r0 = 1.0;
  MatrixXu8 b;  // M x slots site presence, local column fixed at 1
  MatrixXu8 c;  // P x slots page presence

  Eigen::VectorXd pi;  // K, site-exchangeable
  double mu_pi = 0.5, sigma2_pi = 0.05;
  Eigen::MatrixXd beta;    // K x Q, site-structured
  Eigen::VectorXd beta0;   // Q
  Eigen::VectorXd sigma2;  // Q
  Eigen::MatrixXd omega;   // M x K Polya-Gamma auxiliaries
  Eigen::VectorXd eta;     // slots, page-exchangeable
  double mu_eta = 0.5, sigma2_eta = 0.05;

  Eigen::MatrixXi l_page_topic;  // P x slots CRT table counts
  Eigen::VectorXi ell;           // slots, second-level CRT counts
  long sweep_index = 0;
};

// Draws initial parameter values from their priors and assigns tokens
// uniformly at random across slots.  Infeasible mean-variance hyperpriors are
// nudged into the feasible region.
ModelState init_state(const ModelConfig& cfg, const Corpus& corpus, RngStream& rng);

// Recomputes all count aggregates from the token-level assignments.
void retally_counts(ModelState& state);

// Checks structural invariants (counts match assignments, presence coherence,
// simplex rows).  Throws NumericalError on violation; used by tests.
void check_state_invariants(const ModelState& state, const ModelConfig& cfg);

// Plain-text checkpoint with hexfloat values; exact round trip.
void save_state(const ModelState& state, const std::string& path);
ModelState load_state(const std::string& path);

// Flat key=value config file; '#' starts a comment.  Unknown keys error.
std::map<std::string, std::string> parse_config_file(const std::string& path);
void apply_config(ModelConfig& cfg, const std::map<std::string, std::string>& kv);

}  // namespace hpfa
