#include "hpfa/synthetic.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "hpfa/distributions.hpp"
#include "hpfa/errors.hpp"

namespace hpfa {

using nlohmann::json;

namespace {

double clamp_positive(double x) { return x > DBL_MIN ? x : DBL_MIN; }

double clamp_unit(double x) {
  if (x < 1e-12) return 1e-12;
  if (x > 1.0 - 1e-12) return 1.0 - 1e-12;
  return x;
}

std::string padded(const char* prefix, int i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*d", prefix, std::min(width, 9), i);
  return buf;
}

int id_width(int n) {
  int w = 1;
  while (n >= 10) {
    n /= 10;
    ++w;
  }
  return w;
}

// Draws counts and word identities for one page given theta and the word
// distributions; fills tokens and true assignments in slot order.
void draw_page(const Eigen::VectorXd& theta, const Eigen::MatrixXd& phi, const Eigen::MatrixXd& psi,
               int site, int K, int slots, std::vector<std::int32_t>& tokens,
               std::vector<std::int32_t>& assign, RngStream& rng) {
  tokens.clear();
  assign.clear();
  for (int k = 0; k < slots; ++k) {
    double rate = theta[k];
    if (rate == 0.0) continue;
    if (rate > 1e8) throw NumericalError("simulate: Poisson rate too large");
    int z = sample_poisson(rate, rng);
    for (int m = 0; m < z; ++m) {
      Eigen::Index v = k < K ? sample_categorical(phi.row(k).transpose(), rng)
                             : sample_categorical(psi.row(site).transpose(), rng);
      tokens.push_back(static_cast<std::int32_t>(v));
      assign.push_back(k);
    }
  }
}

}  // namespace

GroundTruth simulate(const ModelConfig& cfg, const SimOptions& opts, RngStream& rng) {
  if (opts.sites < 1 || opts.pages_per_site < 1 || opts.vocab < 2)
    throw ValidationError("simulate: need at least 1 site, 1 page per site, 2 words");
  if (!(opts.len_scale > 0.0)) throw ValidationError("simulate: len_scale must be positive");

  const int M = opts.sites, N = opts.pages_per_site, V = opts.vocab;
  const int K = cfg.K, slots = cfg.slots();
  const int P = M * N;

  GroundTruth truth;
  truth.cfg = cfg;
  truth.len_scale = opts.len_scale;

  // Covariates for the structured site prior.
  Eigen::MatrixXd X(M, 0);
  std::vector<std::string> labels;
  std::vector<std::string> level_names;
  if (cfg.site_prior == SitePrior::Structured) {
    if (opts.X.size() > 0) {
      if (opts.X.rows() != M) throw ValidationError("simulate: X rows must equal sites");
      X = opts.X;
      labels = opts.region_labels;
      for (Eigen::Index q = 0; q < X.cols(); ++q) level_names.push_back("x" + std::to_string(q));
    } else {
      X = Eigen::MatrixXd::Zero(M, 2);
      const int half = (M + 1) / 2;
      labels.resize(M);
      for (int i = 0; i < M; ++i) {
        X(i, i < half ? 0 : 1) = 1.0;
        labels[i] = i < half ? "g1" : "g2";
      }
      level_names = {"g1", "g2"};
    }
  }
  const int Q = static_cast<int>(X.cols());
  const Hyperparameters h = cfg.resolved_hyper(Q);

  truth.r0 = opts.r0 >= 0.0 ? opts.r0 : clamp_positive(sample_gamma(h.d_r0, h.e_r0, rng));
  if (opts.r.size() > 0) {
    if (opts.r.size() != slots) throw ValidationError("simulate: r length must equal topic slots");
    truth.r = opts.r;
  } else {
    truth.r.resize(slots);
    for (int k = 0; k < slots; ++k) truth.r[k] = clamp_positive(sample_gamma(truth.r0, h.e_r, rng));
  }

  if (opts.phi.size() > 0) {
    if (opts.phi.rows() != K || opts.phi.cols() != V)
      throw ValidationError("simulate: phi must be K x V");
    truth.phi = opts.phi;
  } else {
    truth.phi.resize(K, V);
    Eigen::VectorXd alpha = Eigen::VectorXd::Constant(V, h.alpha_phi);
    for (int k = 0; k < K; ++k) truth.phi.row(k) = sample_dirichlet(alpha, rng).transpose();
  }
  if (cfg.local_topics) {
    if (opts.psi.size() > 0) {
      if (opts.psi.rows() != M || opts.psi.cols() != V)
        throw ValidationError("simulate: psi must be M x V");
      truth.psi = opts.psi;
    } else {
      truth.psi.resize(M, V);
      Eigen::VectorXd alpha = Eigen::VectorXd::Constant(V, h.alpha_psi);
      for (int i = 0; i < M; ++i) truth.psi.row(i) = sample_dirichlet(alpha, rng).transpose();
    }
  } else {
    truth.psi.resize(0, 0);
  }

  if (cfg.site_prior == SitePrior::Exchangeable) {
    auto [mu, s2] =
        sample_feasible_mean_variance(h.d_mu_pi, h.e_mu_pi, h.d_sigma_pi, h.e_sigma_pi, rng);
    truth.mu_pi = mu;
    truth.sigma2_pi = s2;
    if (opts.pi.size() > 0) {
      if (opts.pi.size() != K) throw ValidationError("simulate: pi length must equal K");
      truth.pi = opts.pi;
    } else {
      auto [d, e] = mean_variance_to_beta_params(mu, s2);
      truth.pi.resize(K);
      for (int k = 0; k < K; ++k) truth.pi[k] = clamp_unit(sample_beta(d, e, rng));
    }
  }
  if (cfg.site_prior == SitePrior::Structured) {
    truth.sigma2.resize(Q);
    for (int q = 0; q < Q; ++q)
      truth.sigma2[q] = 1.0 / clamp_positive(sample_gamma(h.d_sigma, h.e_sigma, rng));
    truth.beta0.resize(Q);
    for (int q = 0; q < Q; ++q) truth.beta0[q] = sample_normal(h.mu0[q], h.sigma0, rng);
    if (opts.beta.size() > 0) {
      if (opts.beta.rows() != K || opts.beta.cols() != Q)
        throw ValidationError("simulate: beta must be K x Q");
      truth.beta = opts.beta;
    } else {
      truth.beta.resize(K, Q);
      for (int k = 0; k < K; ++k)
        for (int q = 0; q < Q; ++q)
          truth.beta(k, q) = sample_normal(truth.beta0[q], std::sqrt(truth.sigma2[q]), rng);
    }
  }
  if (cfg.page_prior == PagePrior::Exchangeable) {
    auto [mu, s2] =
        sample_feasible_mean_variance(h.d_mu_eta, h.e_mu_eta, h.d_sigma_eta, h.e_sigma_eta, rng);
    truth.mu_eta = mu;
    truth.sigma2_eta = s2;
    if (opts.eta.size() > 0) {
      if (opts.eta.size() != slots)
        throw ValidationError("simulate: eta length must equal topic slots");
      truth.eta = opts.eta;
    } else {
      auto [d, e] = mean_variance_to_beta_params(mu, s2);
      truth.eta.resize(slots);
      for (int k = 0; k < slots; ++k) truth.eta[k] = clamp_unit(sample_beta(d, e, rng));
    }
  }

  truth.b.setOnes(M, slots);
  if (cfg.site_prior != SitePrior::Always)
    for (int i = 0; i < M; ++i)
      for (int k = 0; k < K; ++k) {
        double p1 = cfg.site_prior == SitePrior::Exchangeable
                        ? truth.pi[k]
                        : sigmoid(X.row(i).dot(truth.beta.row(k)));
        truth.b(i, k) = static_cast<std::uint8_t>(sample_bernoulli(p1, rng));
      }

  truth.c.setOnes(P, slots);
  truth.theta.setZero(P, slots);
  truth.assignments.resize(P);
  std::vector<std::vector<std::int32_t>> page_tokens(P);

  auto draw_presence_theta = [&](int p, int site) {
    if (cfg.page_prior == PagePrior::Exchangeable)
      for (int k = 0; k < slots; ++k)
        truth.c(p, k) = static_cast<std::uint8_t>(sample_bernoulli(truth.eta[k], rng));
    else
      truth.c.row(p).setOnes();
    for (int k = 0; k < slots; ++k) {
      if (!(truth.b(site, k) && truth.c(p, k))) {
        truth.theta(p, k) = 0.0;
        continue;
      }
      truth.theta(p, k) = sample_gamma(truth.r[k] * opts.len_scale, 1.0, rng);
    }
  };

  for (int p = 0; p < P; ++p) {
    const int site = p / N;
    draw_presence_theta(p, site);
    draw_page(truth.theta.row(p).transpose(), truth.phi, truth.psi, site, K, slots, page_tokens[p],
              truth.assignments[p], rng);
    int redraws = 0;
    while (page_tokens[p].empty() && !opts.allow_empty_pages) {
      if (++redraws > opts.max_redraws)
        throw NumericalError("simulate: page stayed empty after " +
                             std::to_string(opts.max_redraws) + " redraws; increase len_scale");
      draw_presence_theta(p, site);
      draw_page(truth.theta.row(p).transpose(), truth.phi, truth.psi, site, K, slots,
                page_tokens[p], truth.assignments[p], rng);
    }
    truth.empty_page_redraws += redraws;
  }

  // Assemble the corpus; zero-padded ids keep the vocabulary sorted.
  Corpus& corpus = truth.corpus;
  const int vw = id_width(V - 1);
  corpus.vocabulary.reserve(V);
  for (int v = 0; v < V; ++v) corpus.vocabulary.push_back(padded("w", v, vw));
  const int sw = id_width(M - 1), pw = id_width(N - 1);
  corpus.sites.resize(M);
  for (int i = 0; i < M; ++i) {
    corpus.sites[i].site_id = padded("s", i, sw);
    corpus.sites[i].pages.resize(N);
    for (int j = 0; j < N; ++j) {
      corpus.sites[i].pages[j].page_id = padded("p", j, pw);
      corpus.sites[i].pages[j].tokens = std::move(page_tokens[i * N + j]);
    }
  }
  corpus.covariates = X;
  corpus.covariate_names = level_names;
  corpus.region_labels = labels;
  validate_corpus(corpus, /*allow_empty_pages=*/true);
  return truth;
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

template <typename Mat>
json int_matrix_to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(static_cast<int>(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

}  // namespace

void save_truth(const GroundTruth& truth, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write truth file: " + path);
  json j;
  j["variant"] = truth.cfg.variant_code();
  j["k"] = truth.cfg.K;
  j["len_scale"] = truth.len_scale;
  j["r0"] = truth.r0;
  j["r"] = vector_to_json(truth.r);
  j["phi"] = matrix_to_json(truth.phi);
  if (truth.psi.size() > 0) j["psi"] = matrix_to_json(truth.psi);
  j["theta"] = matrix_to_json(truth.theta);
  j["b"] = int_matrix_to_json(truth.b);
  j["c"] = int_matrix_to_json(truth.c);
  if (truth.cfg.site_prior == SitePrior::Exchangeable) {
    j["pi"] = vector_to_json(truth.pi);
    j["mu_pi"] = truth.mu_pi;
    j["sigma2_pi"] = truth.sigma2_pi;
  }
  if (truth.cfg.site_prior == SitePrior::Structured) {
    j["beta"] = matrix_to_json(truth.beta);
    j["beta0"] = vector_to_json(truth.beta0);
    j["sigma2"] = vector_to_json(truth.sigma2);
  }
  if (truth.cfg.page_prior == PagePrior::Exchangeable) {
    j["eta"] = vector_to_json(truth.eta);
    j["mu_eta"] = truth.mu_eta;
    j["sigma2_eta"] = truth.sigma2_eta;
  }
  j["empty_page_redraws"] = truth.empty_page_redraws;
  out << j.dump(2) << "\n";
}

ModelState state_from_truth(const GroundTruth& truth, const ModelConfig& cfg,
                            bool use_design_len_scale) {
  const Corpus& corpus = truth.corpus;
  ModelState s;
  s.K = cfg.K;
  s.slots = cfg.slots();
  s.M = corpus.num_sites();
  s.V = corpus.vocab_size();
  s.Q = static_cast<int>(corpus.covariates.cols());
  s.P = corpus.num_pages();
  s.X = corpus.covariates;
  auto refs = page_refs(corpus);
  s.site_of_page.resize(s.P);
  s.tokens.resize(s.P);
  s.len_scale.resize(s.P);
  for (int p = 0; p < s.P; ++p) {
    s.site_of_page[p] = refs[p].site;
    s.tokens[p] = corpus.sites[refs[p].site].pages[refs[p].page].tokens;
    s.len_scale[p] =
        use_design_len_scale ? truth.len_scale : static_cast<double>(s.tokens[p].size());
  }
  s.t = truth.assignments;
  retally_counts(s);
  s.phi = truth.phi;
  s.psi = truth.psi;
  s.theta = truth.theta;
  s.r = truth.r;
  s.r0 = truth.r0;
  s.b = truth.b;
  s.c = truth.c;
  s.pi = truth.pi;
  s.mu_pi = truth.mu_pi > 0.0 ? truth.mu_pi : 0.5;
  s.sigma2_pi = truth.sigma2_pi > 0.0 ? truth.sigma2_pi : 0.05;
  s.beta = truth.beta;
  s.beta0 = truth.beta0;
  s.sigma2 = truth.sigma2;
  s.omega = Eigen::MatrixXd::Zero(cfg.site_prior == SitePrior::Structured ? s.M : 0,
                                  cfg.site_prior == SitePrior::Structured ? s.K : 0);
  s.eta = truth.eta;
  s.mu_eta = truth.mu_eta > 0.0 ? truth.mu_eta : 0.5;
  s.sigma2_eta = truth.sigma2_eta > 0.0 ? truth.sigma2_eta : 0.05;
  s.l_page_topic.setZero(s.P, s.slots);
  s.ell.setZero(s.slots);
  return s;
}

void redraw_observations(ModelState& s, const ModelConfig& cfg, RngStream& rng) {
  const int K = s.K, slots = s.slots;
  for (int p = 0; p < s.P; ++p) {
    const int site = s.site_of_page[p];
    draw_page(s.theta.row(p).transpose(), s.phi, s.psi, site, K, slots, s.tokens[p], s.t[p], rng);
  }
  (void)cfg;
  retally_counts(s);
}

}  // namespace hpfa
