#include "hpfa/sampler.hpp"

#include <cfloat>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "hpfa/distributions.hpp"
#include "hpfa/errors.hpp"
#include "hpfa/parallel.hpp"

namespace hpfa {

namespace {

constexpr double kLn2 = 0.69314718055994530942;

double clamp_positive(double x) { return x > DBL_MIN ? x : DBL_MIN; }

// Keeps Beta draws strictly inside (0, 1) so downstream logs stay finite.
double clamp_unit(double x) {
  if (x < 1e-12) return 1e-12;
  if (x > 1.0 - 1e-12) return 1.0 - 1e-12;
  return x;
}

}  // namespace

double r_update_scale(double e_r, double active_len_sum) {
  return 1.0 / (1.0 / e_r + kLn2 * active_len_sum);
}

double r0_mixing_weight(double e_r, double active_len_sum) {
  double d = kLn2 * active_len_sum;
  return d / (1.0 / e_r + d);
}

void resample_assignments(ModelState& s, const ModelConfig& cfg, RngStream& rng) {
  const int K = s.K, slots = s.slots;
  const bool lt = slots > K;
  parallel_for(s.P, cfg.sampler.threads, [&](int p) {
    const auto& toks = s.tokens[p];
    if (toks.empty()) return;
    RngStream sub =
        rng.substream(static_cast<std::uint64_t>(s.sweep_index), static_cast<std::uint64_t>(p));
    const int site = s.site_of_page[p];
    Eigen::VectorXd th = s.theta.row(p).transpose();
    Eigen::VectorXd w(slots);
    auto& assign = s.t[p];
    for (std::size_t h = 0; h < toks.size(); ++h) {
      const int v = toks[h];
      double total = 0.0;
      for (int k = 0; k < K; ++k) {
        w[k] = s.phi(k, v) * th[k];
        total += w[k];
      }
      if (lt) {
        w[K] = s.psi(site, v) * th[K];
        total += w[K];
      }
      if (!(total > 0.0))
        throw NumericalError(
            "assignment weights vanished on a page with tokens; presence state is inconsistent");
      double u = sub.uniform() * total;
      double cum = 0.0;
      int pick = -1, last_positive = 0;
      for (int k = 0; k < slots; ++k) {
        if (w[k] > 0.0) last_positive = k;
        cum += w[k];
        if (u < cum) {
          pick = k;
          break;
        }
      }
      assign[h] = pick >= 0 ? pick : last_positive;
    }
  });
  retally_counts(s);
}

void resample_topics(ModelState& s, const Hyperparameters& h, RngStream& rng) {
  Eigen::VectorXd alpha(s.V);
  for (int k = 0; k < s.K; ++k) {
    for (int v = 0; v < s.V; ++v) alpha[v] = h.alpha_phi + s.z_topic_word(k, v);
    s.phi.row(k) = sample_dirichlet(alpha, rng).transpose();
  }
  if (s.slots > s.K)
    for (int i = 0; i < s.M; ++i) {
      for (int v = 0; v < s.V; ++v) alpha[v] = h.alpha_psi + s.z_site_localword(i, v);
      s.psi.row(i) = sample_dirichlet(alpha, rng).transpose();
    }
}

void resample_presence(ModelState& s, const ModelConfig& cfg, RngStream& rng) {
  const int K = s.K, slots = s.slots;
  if (cfg.page_prior == PagePrior::Exchangeable) {
    for (int p = 0; p < s.P; ++p) {
      const int site = s.site_of_page[p];
      for (int k = 0; k < slots; ++k) {
        if (s.z_page_topic(p, k) > 0) {
          s.c(p, k) = 1;
          continue;
        }
        const int bk = k < K ? static_cast<int>(s.b(site, k)) : 1;
        // P(c=1 | z.=0) = sigmoid(logit(eta) - b r len ln2), the ln2 term is
        // the negative-binomial mass at zero, (1/2)^{b r len}.
        double lp =
            std::log(s.eta[k]) - std::log1p(-s.eta[k]) - bk * s.r[k] * s.len_scale[p] * kLn2;
        s.c(p, k) = static_cast<std::uint8_t>(sample_bernoulli(sigmoid(lp), rng));
      }
    }
  }
  if (cfg.site_prior != SitePrior::Always) {
    Eigen::MatrixXd clen = Eigen::MatrixXd::Zero(s.M, K);
    Eigen::MatrixXi site_z = Eigen::MatrixXi::Zero(s.M, K);
    for (int p = 0; p < s.P; ++p) {
      const int site = s.site_of_page[p];
      for (int k = 0; k < K; ++k) {
        site_z(site, k) += s.z_page_topic(p, k);
        clen(site, k) += s.c(p, k) * s.len_scale[p];
      }
    }
    for (int i = 0; i < s.M; ++i)
      for (int k = 0; k < K; ++k) {
        if (site_z(i, k) > 0) {
          s.b(i, k) = 1;
          continue;
        }
        double prior = cfg.site_prior == SitePrior::Exchangeable
                           ? s.pi[k]
                           : clamp_unit(sigmoid(s.X.row(i).dot(s.beta.row(k))));
        double lp = std::log(prior) - std::log1p(-prior) - s.r[k] * clen(i, k) * kLn2;
        s.b(i, k) = static_cast<std::uint8_t>(sample_bernoulli(sigmoid(lp), rng));
      }
  }
  for (int p = 0; p < s.P; ++p)
    for (int k = 0; k < slots; ++k)
      if (!(s.b(s.site_of_page[p], k) && s.c(p, k))) s.theta(p, k) = 0.0;
}

void resample_theta(ModelState& s, RngStream& rng) {
  for (int p = 0; p < s.P; ++p) {
    const int site = s.site_of_page[p];
    for (int k = 0; k < s.slots; ++k) {
      if (!(s.b(site, k) && s.c(p, k))) {
        s.theta(p, k) = 0.0;
        continue;
      }
      double shape = s.r[k] * s.len_scale[p] + s.z_page_topic(p, k);
      s.theta(p, k) = shape > 0.0 ? sample_gamma(shape, 0.5, rng) : 0.0;
    }
  }
}

namespace {

double slot_active_len(const ModelState& s, int k) {
  double len = 0.0;
  for (int p = 0; p < s.P; ++p)
    if (s.b(s.site_of_page[p], k) && s.c(p, k)) len += s.len_scale[p];
  return len;
}

void draw_table_counts(ModelState& s, RngStream& rng) {
  for (int k = 0; k < s.slots; ++k)
    for (int p = 0; p < s.P; ++p) {
      int z = s.z_page_topic(p, k);
      s.l_page_topic(p, k) = z > 0 ? sample_crt(z, s.r[k] * s.len_scale[p], rng) : 0;
    }
}

void draw_r_given_tables(ModelState& s, const Hyperparameters& h, RngStream& rng) {
  for (int k = 0; k < s.slots; ++k) {
    double lsum = s.l_page_topic.col(k).sum();
    s.r[k] = clamp_positive(
        sample_gamma(s.r0 + lsum, r_update_scale(h.e_r, slot_active_len(s, k)), rng));
  }
}

}  // namespace

void resample_r(ModelState& s, const Hyperparameters& h, RngStream& rng) {
  draw_table_counts(s, rng);
  draw_r_given_tables(s, h, rng);
}

void resample_r0(ModelState& s, const Hyperparameters& h, RngStream& rng) {
  long ellsum = 0;
  double logsum = 0.0;
  for (int k = 0; k < s.slots; ++k) {
    int lk = s.l_page_topic.col(k).sum();
    s.ell[k] = sample_crt(lk, s.r0, rng);
    ellsum += s.ell[k];
    // -log(1 - u_k) with u_k = ln2 D / (1/e_r + ln2 D)
    logsum += std::log1p(h.e_r * kLn2 * slot_active_len(s, k));
  }
  s.r0 = clamp_positive(sample_gamma(h.d_r0 + static_cast<double>(ellsum),
                                     1.0 / (1.0 / h.e_r0 + logsum), rng));
}

void resample_pi(ModelState& s, RngStream& rng) {
  auto [d, e] = mean_variance_to_beta_params(s.mu_pi, s.sigma2_pi);
  for (int k = 0; k < s.K; ++k) {
    double cnt = s.b.col(k).cast<double>().sum();
    s.pi[k] = clamp_unit(sample_beta(d + cnt, e + s.M - cnt, rng));
  }
}

void resample_eta(ModelState& s, RngStream& rng) {
  auto [d, e] = mean_variance_to_beta_params(s.mu_eta, s.sigma2_eta);
  for (int k = 0; k < s.slots; ++k) {
    double cnt = s.c.col(k).cast<double>().sum();
    s.eta[k] = clamp_unit(sample_beta(d + cnt, e + s.P - cnt, rng));
  }
}

std::pair<bool, bool> mh_mean_variance(const Eigen::VectorXd& values, double d_mu, double e_mu,
                                       double d_s2, double e_s2, double step, double& mu,
                                       double& sigma2, RngStream& rng) {
  auto log_target = [&](double m, double s2) {
    if (!(m > 0.0 && m < 1.0 && s2 > 0.0 && s2 < m * (1.0 - m)))
      return -std::numeric_limits<double>::infinity();
    double lt = log_beta_pdf(m, d_mu, e_mu) + log_beta_pdf(s2, d_s2, e_s2);
    auto [d, e] = mean_variance_to_beta_params(m, s2);
    for (Eigen::Index j = 0; j < values.size(); ++j) lt += log_beta_pdf(values[j], d, e);
    return lt;
  };
  bool acc_mu = false, acc_s2 = false;
  {
    // Random walk on logit(mu); the Jacobian of the logit map contributes
    // m(1-m) ratios to the Hastings factor.
    double prop = sigmoid(logit(mu) + sample_normal(0.0, step, rng));
    double la = log_target(prop, sigma2) - log_target(mu, sigma2) +
                std::log(prop * (1.0 - prop)) - std::log(mu * (1.0 - mu));
    if (std::log(rng.uniform()) < la) {
      mu = prop;
      acc_mu = true;
    }
  }
  {
    // Random walk on logit(rho) with rho = sigma2 / (mu(1-mu)) in (0, 1);
    // proposals are automatically feasible and the mu(1-mu) factor cancels
    // from the Jacobian ratio.
    double g = mu * (1.0 - mu);
    double rho = sigma2 / g;
    double prop_rho = sigmoid(logit(rho) + sample_normal(0.0, step, rng));
    double prop = prop_rho * g;
    double la = log_target(mu, prop) - log_target(mu, sigma2) +
                std::log(prop_rho * (1.0 - prop_rho)) - std::log(rho * (1.0 - rho));
    if (std::log(rng.uniform()) < la) {
      sigma2 = prop;
      acc_s2 = true;
    }
  }
  return {acc_mu, acc_s2};
}

void resample_beta(ModelState& s, const Hyperparameters& h, int pg_truncation, RngStream& rng) {
  (void)h;
  Eigen::VectorXd prior_prec = s.sigma2.cwiseInverse();
  for (int k = 0; k < s.K; ++k) {
    Eigen::VectorXd kappa(s.M);
    for (int i = 0; i < s.M; ++i) {
      double lin = s.X.row(i).dot(s.beta.row(k));
      s.omega(i, k) = sample_polya_gamma(1.0, lin, pg_truncation, rng);
      kappa[i] = static_cast<double>(s.b(i, k)) - 0.5;
    }
    Eigen::MatrixXd prec = s.X.transpose() * s.omega.col(k).asDiagonal() * s.X;
    prec.diagonal() += prior_prec;
    Eigen::VectorXd rhs = s.X.transpose() * kappa + prior_prec.cwiseProduct(s.beta0);
    Eigen::LLT<Eigen::MatrixXd> llt(prec);
    if (llt.info() != Eigen::Success)
      throw NumericalError("beta update: conditional precision is not positive definite");
    Eigen::VectorXd mean = llt.solve(rhs);
    Eigen::VectorXd z(s.Q);
    for (int q = 0; q < s.Q; ++q) z[q] = sample_normal(0.0, 1.0, rng);
    s.beta.row(k) = (mean + llt.matrixU().solve(z)).transpose();
  }
}

void resample_beta0_sigma(ModelState& s, const Hyperparameters& h, RngStream& rng) {
  const double prec0 = 1.0 / (h.sigma0 * h.sigma0);
  for (int q = 0; q < s.Q; ++q) {
    double prec = prec0 + s.K / s.sigma2[q];
    double mean = (h.mu0[q] * prec0 + s.beta.col(q).sum() / s.sigma2[q]) / prec;
    s.beta0[q] = sample_normal(mean, std::sqrt(1.0 / prec), rng);
  }
  for (int q = 0; q < s.Q; ++q) {
    double rate = 1.0 / h.e_sigma + (s.beta.col(q).array() - s.beta0[q]).square().sum() / 2.0;
    double precq = clamp_positive(sample_gamma(h.d_sigma + 0.5 * s.K, 1.0 / rate, rng));
    s.sigma2[q] = 1.0 / precq;
  }
}

SweepReport gibbs_sweep(ModelState& s, const ModelConfig& cfg, RngStream& rng) {
  const Hyperparameters h = cfg.resolved_hyper(s.Q);
  SweepReport rep;
  rep.iteration = s.sweep_index;
  auto now = [] { return std::chrono::steady_clock::now(); };
  auto secs = [](auto a, auto b) { return std::chrono::duration<double>(b - a).count(); };

  auto t0 = now();
  resample_assignments(s, cfg, rng);
  auto t1 = now();
  rep.t_assign = secs(t0, t1);
  resample_topics(s, h, rng);
  auto t2 = now();
  rep.t_topics = secs(t1, t2);
  resample_presence(s, cfg, rng);
  auto t3 = now();
  rep.t_presence = secs(t2, t3);
  // The r and r0 conditionals integrate theta out (and r0's integrates r out),
  // so the valid scan is tables, then r0, then r, with theta refreshed last.
  draw_table_counts(s, rng);
  resample_r0(s, h, rng);
  draw_r_given_tables(s, h, rng);
  auto t4 = now();
  rep.t_rates = secs(t3, t4);
  resample_theta(s, rng);
  auto t5 = now();
  rep.t_theta = secs(t4, t5);

  if (cfg.site_prior == SitePrior::Exchangeable) {
    resample_pi(s, rng);
    auto [a_mu, a_s2] = mh_mean_variance(s.pi, h.d_mu_pi, h.e_mu_pi, h.d_sigma_pi, h.e_sigma_pi,
                                         cfg.sampler.mh_step, s.mu_pi, s.sigma2_pi, rng);
    rep.has_mh_pi = true;
    rep.acc_mu_pi = a_mu;
    rep.acc_sigma_pi = a_s2;
  }
  if (cfg.site_prior == SitePrior::Structured) {
    resample_beta(s, h, cfg.sampler.pg_truncation, rng);
    resample_beta0_sigma(s, h, rng);
  }
  if (cfg.page_prior == PagePrior::Exchangeable) {
    resample_eta(s, rng);
    auto [a_mu, a_s2] = mh_mean_variance(s.eta, h.d_mu_eta, h.e_mu_eta, h.d_sigma_eta,
                                         h.e_sigma_eta, cfg.sampler.mh_step, s.mu_eta,
                                         s.sigma2_eta, rng);
    rep.has_mh_eta = true;
    rep.acc_mu_eta = a_mu;
    rep.acc_sigma_eta = a_s2;
  }
  auto t6 = now();
  rep.t_presence_params = secs(t5, t6);

  for (int p = 0; p < s.P; ++p) {
    bool any = false;
    for (int k = 0; k < s.slots && !any; ++k) any = s.b(s.site_of_page[p], k) && s.c(p, k);
    if (!any) ++rep.pages_all_absent;
  }
  ++s.sweep_index;
  return rep;
}

double token_loglik(const ModelState& s) {
  double ll = 0.0;
  for (int p = 0; p < s.P; ++p) {
    const auto& toks = s.tokens[p];
    if (toks.empty()) continue;
    const int site = s.site_of_page[p];
    double denom = s.theta.row(p).sum();
    if (!(denom > 0.0)) return -std::numeric_limits<double>::infinity();
    for (auto v : toks) {
      double num = 0.0;
      for (int k = 0; k < s.K; ++k) num += s.phi(k, v) * s.theta(p, k);
      if (s.slots > s.K) num += s.psi(site, v) * s.theta(p, s.K);
      ll += std::log(num / denom);
    }
  }
  return ll;
}

namespace {

void retain_draw(PosteriorSamples& out, const ModelState& s, const ModelConfig& cfg, int chain) {
  out.chain.push_back(chain);
  out.r0.push_back(s.r0);
  out.r.push_back(s.r);
  out.b.push_back(s.b);
  out.c.push_back(s.c);
  if (cfg.site_prior == SitePrior::Exchangeable) {
    out.pi.push_back(s.pi);
    out.mu_pi.push_back(s.mu_pi);
    out.sigma2_pi.push_back(s.sigma2_pi);
  }
  if (cfg.site_prior == SitePrior::Structured) {
    out.beta.push_back(s.beta);
    out.beta0.push_back(s.beta0);
    out.sigma2.push_back(s.sigma2);
  }
  if (cfg.page_prior == PagePrior::Exchangeable) {
    out.eta.push_back(s.eta);
    out.mu_eta.push_back(s.mu_eta);
    out.sigma2_eta.push_back(s.sigma2_eta);
  }
  if (cfg.sampler.store_draws) {
    out.phi.push_back(s.phi);
    if (cfg.local_topics) out.psi.push_back(s.psi);
    out.theta.push_back(s.theta);
  }
  out.phi_mean += s.phi;
  if (cfg.local_topics) out.psi_mean += s.psi;
  out.theta_mean += s.theta;
  out.b_mean += s.b.cast<double>();
  out.c_mean += s.c.cast<double>();
}

}  // namespace

PosteriorSamples run_chain(const ModelConfig& cfg, const Corpus& corpus, RngStream& rng,
                           const ChainLogger& log) {
  ModelState s = init_state(cfg, corpus, rng);
  const int chain_id = static_cast<int>(rng.stream_id());

  PosteriorSamples out;
  out.cfg = cfg;
  out.cfg.hyper = cfg.resolved_hyper(s.Q);
  out.K = s.K;
  out.slots = s.slots;
  out.M = s.M;
  out.V = s.V;
  out.P = s.P;
  out.Q = s.Q;
  for (const auto& site : corpus.sites) out.site_ids.push_back(site.site_id);
  out.phi_mean = Eigen::MatrixXd::Zero(s.K, s.V);
  out.psi_mean = Eigen::MatrixXd::Zero(cfg.local_topics ? s.M : 0, cfg.local_topics ? s.V : 0);
  out.theta_mean = Eigen::MatrixXd::Zero(s.P, s.slots);
  out.b_mean = Eigen::MatrixXd::Zero(s.M, s.slots);
  out.c_mean = Eigen::MatrixXd::Zero(s.P, s.slots);

  const auto& st = cfg.sampler;
  const long total = static_cast<long>(st.burn_in) + static_cast<long>(st.n_samples) * st.thin;
  long acc_mu_pi = 0, acc_s2_pi = 0, acc_mu_eta = 0, acc_s2_eta = 0;
  int last_absent = 0;
  for (long it = 1; it <= total; ++it) {
    SweepReport rep = gibbs_sweep(s, cfg, rng);
    acc_mu_pi += rep.acc_mu_pi;
    acc_s2_pi += rep.acc_sigma_pi;
    acc_mu_eta += rep.acc_mu_eta;
    acc_s2_eta += rep.acc_sigma_eta;
    last_absent = rep.pages_all_absent;
    if (it > st.burn_in && (it - st.burn_in) % st.thin == 0) retain_draw(out, s, cfg, chain_id);
    if (log && (it % 100 == 0 || it == total)) {
      std::ostringstream os;
      os << "chain " << chain_id << " sweep " << it << "/" << total << " loglik "
         << token_loglik(s);
      if (rep.has_mh_pi)
        os << " acc_pi " << static_cast<double>(acc_mu_pi) / it << "/"
           << static_cast<double>(acc_s2_pi) / it;
      if (rep.has_mh_eta)
        os << " acc_eta " << static_cast<double>(acc_mu_eta) / it << "/"
           << static_cast<double>(acc_s2_eta) / it;
      os << " absent_pages " << last_absent;
      log(os.str());
    }
  }
  const double n = std::max(1, out.n_draws());
  out.phi_mean /= n;
  out.psi_mean /= n;
  out.theta_mean /= n;
  out.b_mean /= n;
  out.c_mean /= n;
  return out;
}

PosteriorSamples run_chains(const ModelConfig& cfg, const Corpus& corpus, const ChainLogger& log) {
  PosteriorSamples merged;
  for (int ch = 0; ch < cfg.sampler.chains; ++ch) {
    RngStream rng(cfg.sampler.seed, static_cast<std::uint64_t>(ch));
    PosteriorSamples one = run_chain(cfg, corpus, rng, log);
    if (ch == 0) {
      merged = std::move(one);
      continue;
    }
    const double n_old = merged.n_draws(), n_new = one.n_draws();
    auto append = [](auto& dst, auto& src) {
      dst.insert(dst.end(), std::make_move_iterator(src.begin()), std::make_move_iterator(src.end()));
    };
    append(merged.chain, one.chain);
    append(merged.r0, one.r0);
    append(merged.r, one.r);
    append(merged.b, one.b);
    append(merged.c, one.c);
    append(merged.pi, one.pi);
    append(merged.mu_pi, one.mu_pi);
    append(merged.sigma2_pi, one.sigma2_pi);
    append(merged.beta, one.beta);
    append(merged.beta0, one.beta0);
    append(merged.sigma2, one.sigma2);
    append(merged.eta, one.eta);
    append(merged.mu_eta, one.mu_eta);
    append(merged.sigma2_eta, one.sigma2_eta);
    append(merged.phi, one.phi);
    append(merged.psi, one.psi);
    append(merged.theta, one.theta);
    const double total = n_old + n_new;
    merged.phi_mean = (merged.phi_mean * n_old + one.phi_mean * n_new) / total;
    if (merged.psi_mean.size() > 0)
      merged.psi_mean = (merged.psi_mean * n_old + one.psi_mean * n_new) / total;
    merged.theta_mean = (merged.theta_mean * n_old + one.theta_mean * n_new) / total;
    merged.b_mean = (merged.b_mean * n_old + one.b_mean * n_new) / total;
    merged.c_mean = (merged.c_mean * n_old + one.c_mean * n_new) / total;
  }
  return merged;
}

namespace {

void put_bytes(std::ostream& out, const void* data, std::size_t n) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  put_bytes(out, b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  put_bytes(out, b, 8);
}

void put_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

void put_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) put_f64(out, m(i, j));
}

void put_vector(std::ostream& out, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) put_f64(out, v[i]);
}

void put_u8_matrix(std::ostream& out, const MatrixXu8& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      unsigned char b = m(i, j);
      put_bytes(out, &b, 1);
    }
}

struct Reader {
  std::ifstream in;
  std::string path;
  explicit Reader(const std::string& p) : in(p, std::ios::binary), path(p) {}
  void bytes(void* data, std::size_t n) {
    if (!in.read(static_cast<char*>(data), static_cast<std::streamsize>(n)))
      throw ValidationError("samples file truncated: " + path);
  }
  std::uint32_t u32() {
    unsigned char b[4];
    bytes(b, 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }
  std::uint64_t u64() {
    unsigned char b[8];
    bytes(b, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }
  double f64() {
    std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  Eigen::MatrixXd matrix(Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = f64();
    return m;
  }
  Eigen::VectorXd vector(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = f64();
    return v;
  }
  MatrixXu8 u8_matrix(Eigen::Index rows, Eigen::Index cols) {
    MatrixXu8 m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) {
        unsigned char b;
        bytes(&b, 1);
        m(i, j) = b;
      }
    return m;
  }
};

constexpr char kMagic[8] = {'H', 'P', 'F', 'A', 'S', 'M', 'P', '1'};

}  // namespace

void save_samples(const PosteriorSamples& samples, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write samples file: " + path);
  const auto& cfg = samples.cfg;
  const auto& h = cfg.hyper;
  put_bytes(out, kMagic, 8);
  put_u32(out, 1);
  put_u32(out, static_cast<std::uint32_t>(samples.K));
  put_u32(out, static_cast<std::uint32_t>(samples.slots));
  put_u32(out, static_cast<std::uint32_t>(samples.M));
  put_u32(out, static_cast<std::uint32_t>(samples.V));
  put_u32(out, static_cast<std::uint32_t>(samples.P));
  put_u32(out, static_cast<std::uint32_t>(samples.Q));
  unsigned char flags[4] = {static_cast<unsigned char>(cfg.site_prior),
                            static_cast<unsigned char>(cfg.page_prior),
                            static_cast<unsigned char>(cfg.local_topics ? 1 : 0),
                            static_cast<unsigned char>(cfg.sampler.store_draws ? 1 : 0)};
  put_bytes(out, flags, 4);
  put_u64(out, cfg.sampler.seed);
  put_u32(out, static_cast<std::uint32_t>(cfg.sampler.chains));
  put_u32(out, static_cast<std::uint32_t>(cfg.K));
  put_u32(out, static_cast<std::uint32_t>(cfg.sampler.burn_in));
  put_u32(out, static_cast<std::uint32_t>(cfg.sampler.n_samples));
  put_u32(out, static_cast<std::uint32_t>(cfg.sampler.thin));
  put_u32(out, static_cast<std::uint32_t>(cfg.sampler.pg_truncation));
  put_f64(out, cfg.sampler.mh_step);
  const double hyper_vals[16] = {h.alpha_phi, h.alpha_psi, h.d_r0,       h.e_r0,
                                 h.e_r,       h.d_mu_pi,   h.e_mu_pi,    h.d_sigma_pi,
                                 h.e_sigma_pi, h.d_mu_eta,  h.e_mu_eta,   h.d_sigma_eta,
                                 h.e_sigma_eta, h.sigma0,    h.d_sigma,    h.e_sigma};
  for (double v : hyper_vals) put_f64(out, v);
  put_u32(out, static_cast<std::uint32_t>(h.mu0.size()));
  put_vector(out, h.mu0);
  put_u32(out, static_cast<std::uint32_t>(samples.site_ids.size()));
  for (const auto& id : samples.site_ids) {
    put_u32(out, static_cast<std::uint32_t>(id.size()));
    put_bytes(out, id.data(), id.size());
  }
  put_u32(out, static_cast<std::uint32_t>(samples.n_draws()));
  for (int d = 0; d < samples.n_draws(); ++d) {
    put_u32(out, static_cast<std::uint32_t>(samples.chain[d]));
    put_f64(out, samples.r0[d]);
    put_vector(out, samples.r[d]);
    put_u8_matrix(out, samples.b[d]);
    put_u8_matrix(out, samples.c[d]);
    if (cfg.site_prior == SitePrior::Exchangeable) {
      put_vector(out, samples.pi[d]);
      put_f64(out, samples.mu_pi[d]);
      put_f64(out, samples.sigma2_pi[d]);
    }
    if (cfg.site_prior == SitePrior::Structured) {
      put_matrix(out, samples.beta[d]);
      put_vector(out, samples.beta0[d]);
      put_vector(out, samples.sigma2[d]);
    }
    if (cfg.page_prior == PagePrior::Exchangeable) {
      put_vector(out, samples.eta[d]);
      put_f64(out, samples.mu_eta[d]);
      put_f64(out, samples.sigma2_eta[d]);
    }
    if (cfg.sampler.store_draws) {
      put_matrix(out, samples.phi[d]);
      if (cfg.local_topics) put_matrix(out, samples.psi[d]);
      put_matrix(out, samples.theta[d]);
    }
  }
  put_matrix(out, samples.phi_mean);
  if (cfg.local_topics) put_matrix(out, samples.psi_mean);
  put_matrix(out, samples.theta_mean);
  put_matrix(out, samples.b_mean);
  put_matrix(out, samples.c_mean);
  if (!out) throw ValidationError("write failed: " + path);
}

PosteriorSamples load_samples(const std::string& path) {
  Reader r(path);
  if (!r.in) throw ValidationError("cannot open samples file: " + path);
  char magic[8];
  r.bytes(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0)
    throw ValidationError("not a samples file: " + path);
  if (r.u32() != 1) throw ValidationError("unsupported samples format version: " + path);

  PosteriorSamples s;
  s.K = static_cast<int>(r.u32());
  s.slots = static_cast<int>(r.u32());
  s.M = static_cast<int>(r.u32());
  s.V = static_cast<int>(r.u32());
  s.P = static_cast<int>(r.u32());
  s.Q = static_cast<int>(r.u32());
  unsigned char flags[4];
  r.bytes(flags, 4);
  ModelConfig& cfg = s.cfg;
  if (flags[0] > 2 || flags[1] > 1) throw ValidationError("samples file: bad prior flags");
  cfg.site_prior = static_cast<SitePrior>(flags[0]);
  cfg.page_prior = static_cast<PagePrior>(flags[1]);
  cfg.local_topics = flags[2] != 0;
  cfg.sampler.store_draws = flags[3] != 0;
  cfg.sampler.seed = r.u64();
  cfg.sampler.chains = static_cast<int>(r.u32());
  cfg.K = static_cast<int>(r.u32());
  cfg.sampler.burn_in = static_cast<int>(r.u32());
  cfg.sampler.n_samples = static_cast<int>(r.u32());
  cfg.sampler.thin = static_cast<int>(r.u32());
  cfg.sampler.pg_truncation = static_cast<int>(r.u32());
  cfg.sampler.mh_step = r.f64();
  Hyperparameters& h = cfg.hyper;
  double* hyper_vals[16] = {&h.alpha_phi,   &h.alpha_psi, &h.d_r0,       &h.e_r0,
                            &h.e_r,         &h.d_mu_pi,   &h.e_mu_pi,    &h.d_sigma_pi,
                            &h.e_sigma_pi,  &h.d_mu_eta,  &h.e_mu_eta,   &h.d_sigma_eta,
                            &h.e_sigma_eta, &h.sigma0,    &h.d_sigma,    &h.e_sigma};
  for (double* v : hyper_vals) *v = r.f64();
  h.mu0 = r.vector(static_cast<Eigen::Index>(r.u32()));
  std::uint32_t n_sites = r.u32();
  s.site_ids.resize(n_sites);
  for (auto& id : s.site_ids) {
    id.resize(r.u32());
    if (!id.empty()) r.bytes(id.data(), id.size());
  }
  std::uint32_t n_draws = r.u32();
  for (std::uint32_t d = 0; d < n_draws; ++d) {
    s.chain.push_back(static_cast<int>(r.u32()));
    s.r0.push_back(r.f64());
    s.r.push_back(r.vector(s.slots));
    s.b.push_back(r.u8_matrix(s.M, s.slots));
    s.c.push_back(r.u8_matrix(s.P, s.slots));
    if (cfg.site_prior == SitePrior::Exchangeable) {
      s.pi.push_back(r.vector(s.K));
      s.mu_pi.push_back(r.f64());
      s.sigma2_pi.push_back(r.f64());
    }
    if (cfg.site_prior == SitePrior::Structured) {
      s.beta.push_back(r.matrix(s.K, s.Q));
      s.beta0.push_back(r.vector(s.Q));
      s.sigma2.push_back(r.vector(s.Q));
    }
    if (cfg.page_prior == PagePrior::Exchangeable) {
      s.eta.push_back(r.vector(s.slots));
      s.mu_eta.push_back(r.f64());
      s.sigma2_eta.push_back(r.f64());
    }
    if (cfg.sampler.store_draws) {
      s.phi.push_back(r.matrix(s.K, s.V));
      if (cfg.local_topics) s.psi.push_back(r.matrix(s.M, s.V));
      s.theta.push_back(r.matrix(s.P, s.slots));
    }
  }
  s.phi_mean = r.matrix(s.K, s.V);
  if (cfg.local_topics) s.psi_mean = r.matrix(s.M, s.V);
  s.theta_mean = r.matrix(s.P, s.slots);
  s.b_mean = r.matrix(s.M, s.slots);
  s.c_mean = r.matrix(s.P, s.slots);
  return s;
}

}  // namespace hpfa
