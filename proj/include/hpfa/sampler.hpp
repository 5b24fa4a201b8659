#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hpfa/corpus.hpp"
#include "hpfa/model.hpp"
#include "hpfa/rng.hpp"

namespace hpfa {

// Per-sweep diagnostics.
struct SweepReport {
  long iteration = 0;
  bool has_mh_pi = false, has_mh_eta = false;
  bool acc_mu_pi = false, acc_sigma_pi = false;
  bool acc_mu_eta = false, acc_sigma_eta = false;
  int pages_all_absent = 0;  // pages whose every topic slot is switched off
  double t_assign = 0, t_topics = 0, t_presence = 0, t_theta = 0, t_rates = 0, t_presence_params = 0;
};

// Individual update blocks, exposed for targeted statistical tests.  All
// blocks draw from the given stream; resample_assignments additionally uses
// per-page substreams keyed by (sweep_index, page) so the result is
// independent of the thread partitioning.
void resample_assignments(ModelState& state, const ModelConfig& cfg, RngStream& rng);
void resample_topics(ModelState& state, const Hyperparameters& h, RngStream& rng);
void resample_presence(ModelState& state, const ModelConfig& cfg, RngStream& rng);
void resample_theta(ModelState& state, RngStream& rng);
void resample_r(ModelState& state, const Hyperparameters& h, RngStream& rng);
void resample_r0(ModelState& state, const Hyperparameters& h, RngStream& rng);
void resample_pi(ModelState& state, RngStream& rng);
void resample_eta(ModelState& state, RngStream& rng);
void resample_beta(ModelState& state, const Hyperparameters& h, int pg_truncation, RngStream& rng);
void resample_beta0_sigma(ModelState& state, const Hyperparameters& h, RngStream& rng);

// Two univariate random-walk Metropolis moves on logit(mu) and
// logit(sigma2 / (mu(1-mu))); returns (mu move accepted, variance move
// accepted).  values are the Beta draws governed by (mu, sigma2).
std::pair<bool, bool> mh_mean_variance(const Eigen::VectorXd& values, double d_mu, double e_mu,
                                       double d_s2, double e_s2, double step, double& mu,
                                       double& sigma2, RngStream& rng);

// Posterior scale of r_k: 1 / (1/e_r + ln 2 * sum of active page lengths).
double r_update_scale(double e_r, double active_len_sum);
// Mixing weight u_k entering the r0 update:
// u = ln2 * D / (1/e_r + ln2 * D) with D the active length sum.
double r0_mixing_weight(double e_r, double active_len_sum);

// One full sweep in fixed block order: assignments, topic-word rows,
// presence (pages, then sites), theta, r, r0, presence parameters.
SweepReport gibbs_sweep(ModelState& state, const ModelConfig& cfg, RngStream& rng);

// Sum over tokens of the log predictive word probability under the current
// state; a cheap mixing proxy for progress logs.
double token_loglik(const ModelState& state);

// Thinned posterior draws from one or more chains.
struct PosteriorSamples {
  ModelConfig cfg;  // resolved snapshot
  int K = 0, slots = 0, M = 0, V = 0, P = 0, Q = 0;
  std::vector<std::string> site_ids;

  std::vector<int> chain;
  std::vector<double> r0;
  std::vector<Eigen::VectorXd> r;
  std::vector<MatrixXu8> b, c;
  std::vector<Eigen::VectorXd> pi;
  std::vector<double> mu_pi, sigma2_pi;
  std::vector<Eigen::MatrixXd> beta;
  std::vector<Eigen::VectorXd> beta0, sigma2;
  std::vector<Eigen::VectorXd> eta;
  std::vector<double> mu_eta, sigma2_eta;
  // Per-draw mixture parameters; empty when cfg.sampler.store_draws is off.
  std::vector<Eigen::MatrixXd> phi, psi, theta;
  // Running posterior means, always available.
  Eigen::MatrixXd phi_mean, psi_mean, theta_mean, b_mean, c_mean;

  int n_draws() const { return static_cast<int>(r0.size()); }
};

using ChainLogger = std::function<void(const std::string&)>;

// Runs burn_in + n_samples * thin sweeps and retains every thin-th state
// after burn-in.  The logger, when set, receives one line every 100 sweeps.
PosteriorSamples run_chain(const ModelConfig& cfg, const Corpus& corpus, RngStream& rng,
                           const ChainLogger& log = {});
// Runs cfg.sampler.chains chains with stream ids 0..chains-1 and concatenates
// their draws in chain order.
PosteriorSamples run_chains(const ModelConfig& cfg, const Corpus& corpus, const ChainLogger& log = {});

// Binary samples artifact; identical inputs give byte-identical files.
void save_samples(const PosteriorSamples& samples, const std::string& path);
PosteriorSamples load_samples(const std::string& path);

}  // namespace hpfa
