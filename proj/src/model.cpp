#include "hpfa/model.hpp"

#include <cctype>
#include <cfloat>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "hpfa/distributions.hpp"
#include "hpfa/errors.hpp"

namespace hpfa {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double clamp_positive(double x) { return x > DBL_MIN ? x : DBL_MIN; }

}  // namespace

std::string to_string(SitePrior p) {
  switch (p) {
    case SitePrior::Always: return "always";
    case SitePrior::Exchangeable: return "exchangeable";
    case SitePrior::Structured: return "structured";
  }
  return "?";
}

std::string to_string(PagePrior p) {
  return p == PagePrior::Always ? "always" : "exchangeable";
}

std::string ModelConfig::variant_code() const {
  std::string code;
  code += site_prior == SitePrior::Always ? 'a' : (site_prior == SitePrior::Exchangeable ? 'e' : 's');
  code += page_prior == PagePrior::Always ? 'a' : 'e';
  if (local_topics) code += "-lt";
  return code;
}

std::pair<SitePrior, PagePrior> parse_variant(const std::string& code, bool* local_topics) {
  std::string s = code;
  for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  bool lt = false;
  if (s.size() > 3 && s.substr(s.size() - 3) == "-lt") {
    lt = true;
    s = s.substr(0, s.size() - 3);
  }
  require(s.size() == 2, "variant code must be two letters with optional -lt suffix: " + code);
  SitePrior site;
  switch (s[0]) {
    case 'a': site = SitePrior::Always; break;
    case 'e': site = SitePrior::Exchangeable; break;
    case 's': site = SitePrior::Structured; break;
    default: throw ValidationError("unknown site prior letter in variant: " + code);
  }
  PagePrior page;
  switch (s[1]) {
    case 'a': page = PagePrior::Always; break;
    case 'e': page = PagePrior::Exchangeable; break;
    default: throw ValidationError("unknown page prior letter in variant: " + code);
  }
  if (local_topics) *local_topics = lt;
  return {site, page};
}

Hyperparameters ModelConfig::resolved_hyper(int Q) const {
  Hyperparameters h = hyper;
  if (h.e_mu_eta < 0.0) h.e_mu_eta = std::max(K - 1, 1);
  if (h.e_sigma_eta < 0.0) h.e_sigma_eta = std::max(K - 1, 1);
  if (h.mu0.size() == 0)
    h.mu0 = Eigen::VectorXd::Zero(Q);
  else
    require(h.mu0.size() == Q, "mu0 length does not match the number of covariates");
  auto pos = [](double v, const char* name) {
    require(std::isfinite(v) && v > 0.0, std::string(name) + " must be positive");
  };
  pos(h.alpha_phi, "alpha_phi");
  pos(h.alpha_psi, "alpha_psi");
  pos(h.d_r0, "d_r0");
  pos(h.e_r0, "e_r0");
  pos(h.e_r, "e_r");
  pos(h.d_mu_pi, "d_mu_pi");
  pos(h.e_mu_pi, "e_mu_pi");
  pos(h.d_sigma_pi, "d_sigma_pi");
  pos(h.e_sigma_pi, "e_sigma_pi");
  pos(h.d_mu_eta, "d_mu_eta");
  pos(h.e_mu_eta, "e_mu_eta");
  pos(h.d_sigma_eta, "d_sigma_eta");
  pos(h.e_sigma_eta, "e_sigma_eta");
  pos(h.sigma0, "sigma0");
  pos(h.d_sigma, "d_sigma");
  pos(h.e_sigma, "e_sigma");
  require(h.mu0.allFinite(), "mu0 must be finite");
  return h;
}

void ModelConfig::validate(const Corpus& corpus) const {
  require(K >= 1, "K must be >= 1");
  if (site_prior == SitePrior::Structured)
    require(corpus.covariates.cols() >= 1, "structured site prior requires covariates");
  require(sampler.burn_in >= 0, "burn_in must be >= 0");
  require(sampler.n_samples >= 1, "n_samples must be >= 1");
  require(sampler.thin >= 1, "thin must be >= 1");
  require(sampler.chains >= 1, "chains must be >= 1");
  require(sampler.pg_truncation >= 1, "pg_truncation must be >= 1");
  require(std::isfinite(sampler.mh_step) && sampler.mh_step > 0.0, "mh_step must be positive");
  require(sampler.threads >= 1, "threads must be >= 1");
  resolved_hyper(static_cast<int>(corpus.covariates.cols()));
}

std::pair<double, double> mean_variance_to_beta_params(double mu, double sigma2) {
  require(std::isfinite(mu) && mu > 0.0 && mu < 1.0,
          "mean_variance_to_beta_params: mean must lie in (0, 1)");
  double bound = mu * (1.0 - mu);
  require(std::isfinite(sigma2) && sigma2 > 0.0 && sigma2 < bound,
          "mean_variance_to_beta_params: variance must lie in (0, mu(1-mu))");
  double kappa = bound / sigma2 - 1.0;
  return {mu * kappa, (1.0 - mu) * kappa};
}

std::pair<double, double> sample_feasible_mean_variance(double d_mu, double e_mu, double d_s2,
                                                        double e_s2, RngStream& rng) {
  // Rejection from the product of the two Beta hyperpriors restricted to the
  // feasible region sigma2 < mu(1-mu).
  for (int it = 0; it < 1000; ++it) {
    double mu = sample_beta(d_mu, e_mu, rng);
    double s2 = sample_beta(d_s2, e_s2, rng);
    if (mu > 0.0 && mu < 1.0 && s2 > 0.0 && s2 < mu * (1.0 - mu)) return {mu, s2};
  }
  // Pathologically concentrated hyperpriors: fall back to the prior means,
  // clamping the variance inside the feasible region.
  double mu = d_mu / (d_mu + e_mu);
  double s2 = std::min(d_s2 / (d_s2 + e_s2), 0.5 * mu * (1.0 - mu));
  return {mu, s2};
}

void retally_counts(ModelState& state) {
  state.z_page_topic.setZero(state.P, state.slots);
  state.z_topic_word.setZero(state.K, state.V);
  if (state.slots > state.K)
    state.z_site_localword.setZero(state.M, state.V);
  else
    state.z_site_localword.resize(0, 0);
  for (int p = 0; p < state.P; ++p) {
    const auto& toks = state.tokens[p];
    const auto& assign = state.t[p];
    for (std::size_t h = 0; h < toks.size(); ++h) {
      int k = assign[h];
      ++state.z_page_topic(p, k);
      if (k < state.K)
        ++state.z_topic_word(k, toks[h]);
      else
        ++state.z_site_localword(state.site_of_page[p], toks[h]);
    }
  }
}

ModelState init_state(const ModelConfig& cfg, const Corpus& corpus, RngStream& rng) {
  cfg.validate(corpus);
  const Hyperparameters h = cfg.resolved_hyper(static_cast<int>(corpus.covariates.cols()));

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
    s.len_scale[p] = static_cast<double>(s.tokens[p].size());
  }

  s.t.resize(s.P);
  for (int p = 0; p < s.P; ++p) {
    s.t[p].resize(s.tokens[p].size());
    for (auto& k : s.t[p])
      k = static_cast<std::int32_t>(std::uniform_int_distribution<int>(0, s.slots - 1)(rng.engine()));
  }
  retally_counts(s);

  s.r0 = clamp_positive(sample_gamma(h.d_r0, h.e_r0, rng));
  s.r.resize(s.slots);
  for (int k = 0; k < s.slots; ++k) s.r[k] = clamp_positive(sample_gamma(s.r0, h.e_r, rng));

  s.phi.resize(s.K, s.V);
  Eigen::VectorXd alpha_phi = Eigen::VectorXd::Constant(s.V, h.alpha_phi);
  for (int k = 0; k < s.K; ++k) s.phi.row(k) = sample_dirichlet(alpha_phi, rng).transpose();
  if (cfg.local_topics) {
    s.psi.resize(s.M, s.V);
    Eigen::VectorXd alpha_psi = Eigen::VectorXd::Constant(s.V, h.alpha_psi);
    for (int i = 0; i < s.M; ++i) s.psi.row(i) = sample_dirichlet(alpha_psi, rng).transpose();
  } else {
    s.psi.resize(0, 0);
  }

  if (cfg.site_prior == SitePrior::Exchangeable) {
    auto [mu, s2] = sample_feasible_mean_variance(h.d_mu_pi, h.e_mu_pi, h.d_sigma_pi, h.e_sigma_pi, rng);
    s.mu_pi = mu;
    s.sigma2_pi = s2;
    auto [d, e] = mean_variance_to_beta_params(mu, s2);
    s.pi.resize(s.K);
    for (int k = 0; k < s.K; ++k) s.pi[k] = sample_beta(d, e, rng);
  }
  if (cfg.site_prior == SitePrior::Structured) {
    s.sigma2.resize(s.Q);
    for (int q = 0; q < s.Q; ++q) s.sigma2[q] = 1.0 / clamp_positive(sample_gamma(h.d_sigma, h.e_sigma, rng));
    s.beta0.resize(s.Q);
    for (int q = 0; q < s.Q; ++q) s.beta0[q] = sample_normal(h.mu0[q], h.sigma0, rng);
    s.beta.resize(s.K, s.Q);
    for (int k = 0; k < s.K; ++k)
      for (int q = 0; q < s.Q; ++q) s.beta(k, q) = sample_normal(s.beta0[q], std::sqrt(s.sigma2[q]), rng);
    s.omega = Eigen::MatrixXd::Zero(s.M, s.K);
  }
  if (cfg.page_prior == PagePrior::Exchangeable) {
    auto [mu, s2] =
        sample_feasible_mean_variance(h.d_mu_eta, h.e_mu_eta, h.d_sigma_eta, h.e_sigma_eta, rng);
    s.mu_eta = mu;
    s.sigma2_eta = s2;
    auto [d, e] = mean_variance_to_beta_params(mu, s2);
    s.eta.resize(s.slots);
    for (int k = 0; k < s.slots; ++k) s.eta[k] = sample_beta(d, e, rng);
  }

  // Presence from the prior, then forced on wherever counts are positive so
  // the initial state satisfies presence coherence.
  s.b.setOnes(s.M, s.slots);
  if (cfg.site_prior != SitePrior::Always) {
    for (int i = 0; i < s.M; ++i)
      for (int k = 0; k < s.K; ++k) {
        double p1 = cfg.site_prior == SitePrior::Exchangeable
                        ? s.pi[k]
                        : sigmoid(s.X.row(i).dot(s.beta.row(k)));
        s.b(i, k) = static_cast<std::uint8_t>(sample_bernoulli(p1, rng));
      }
  }
  s.c.setOnes(s.P, s.slots);
  if (cfg.page_prior == PagePrior::Exchangeable) {
    for (int p = 0; p < s.P; ++p)
      for (int k = 0; k < s.slots; ++k)
        s.c(p, k) = static_cast<std::uint8_t>(sample_bernoulli(s.eta[k], rng));
  }
  for (int p = 0; p < s.P; ++p)
    for (int k = 0; k < s.slots; ++k)
      if (s.z_page_topic(p, k) > 0) {
        s.c(p, k) = 1;
        if (k < s.K) s.b(s.site_of_page[p], k) = 1;
      }

  // Theta from its conditional given the uniform assignments; slots holding
  // tokens get shape >= 1, so the first assignment sweep sees positive weights
  // even when the rate draws underflow.
  s.theta.setZero(s.P, s.slots);
  for (int p = 0; p < s.P; ++p)
    for (int k = 0; k < s.slots; ++k) {
      if (!s.b(s.site_of_page[p], k) || !s.c(p, k)) continue;
      double shape = s.r[k] * s.len_scale[p] + s.z_page_topic(p, k);
      if (shape > 0.0) s.theta(p, k) = sample_gamma(shape, 0.5, rng);
    }

  s.l_page_topic.setZero(s.P, s.slots);
  s.ell.setZero(s.slots);
  return s;
}

void check_state_invariants(const ModelState& s, const ModelConfig& cfg) {
  auto fail = [](const std::string& msg) { throw NumericalError("state invariant violated: " + msg); };
  ModelState copy = s;
  retally_counts(copy);
  if (copy.z_page_topic != s.z_page_topic || copy.z_topic_word != s.z_topic_word ||
      copy.z_site_localword != s.z_site_localword)
    fail("count aggregates do not match token assignments");
  for (int p = 0; p < s.P; ++p)
    if (s.z_page_topic.row(p).sum() != static_cast<int>(s.tokens[p].size()))
      fail("page count row sum does not match page length");
  for (int k = 0; k < s.K; ++k) {
    double rs = s.phi.row(k).sum();
    if (s.phi.row(k).minCoeff() < 0.0 || std::abs(rs - 1.0) > 1e-9) fail("phi row is not a simplex");
  }
  for (int i = 0; i < static_cast<int>(s.psi.rows()); ++i) {
    double rs = s.psi.row(i).sum();
    if (s.psi.row(i).minCoeff() < 0.0 || std::abs(rs - 1.0) > 1e-9) fail("psi row is not a simplex");
  }
  if (!(s.r0 > 0.0) || s.r.size() != s.slots || s.r.minCoeff() <= 0.0) fail("r must be positive");
  for (int p = 0; p < s.P; ++p)
    for (int k = 0; k < s.slots; ++k) {
      bool active = s.b(s.site_of_page[p], k) && s.c(p, k);
      if (s.z_page_topic(p, k) > 0 && !active) fail("positive count with absent topic");
      if (s.theta(p, k) > 0.0 && !active) fail("positive theta with absent topic");
      if (!active && s.theta(p, k) != 0.0) fail("absent topic with nonzero theta");
    }
  if (cfg.local_topics)
    for (int i = 0; i < s.M; ++i)
      if (!s.b(i, s.K)) fail("local topic must always be present at its site");
  if (cfg.site_prior == SitePrior::Always && s.b.minCoeff() != 1) fail("site prior 'always' forces b = 1");
  if (cfg.page_prior == PagePrior::Always && s.c.minCoeff() != 1) fail("page prior 'always' forces c = 1");
  if (cfg.site_prior == SitePrior::Exchangeable)
    for (int k = 0; k < s.K; ++k)
      if (!(s.pi[k] > 0.0 && s.pi[k] <= 1.0)) fail("pi out of range");
  if (cfg.page_prior == PagePrior::Exchangeable)
    for (int k = 0; k < s.slots; ++k)
      if (!(s.eta[k] > 0.0 && s.eta[k] <= 1.0)) fail("eta out of range");
}

namespace {

void write_double(std::ostream& out, double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%a", v);
  out << buf;
}

double read_double(std::istream& in) {
  std::string tok;
  if (!(in >> tok)) throw ValidationError("state file: unexpected end of input");
  char* end = nullptr;
  double v = std::strtod(tok.c_str(), &end);
  if (end != tok.c_str() + tok.size()) throw ValidationError("state file: bad float " + tok);
  return v;
}

void expect(std::istream& in, const std::string& want) {
  std::string tok;
  if (!(in >> tok) || tok != want)
    throw ValidationError("state file: expected '" + want + "', got '" + tok + "'");
}

long read_long(std::istream& in) {
  long v;
  if (!(in >> v)) throw ValidationError("state file: expected integer");
  return v;
}

void write_matrix(std::ostream& out, const char* name, const Eigen::MatrixXd& m) {
  out << name << " " << m.rows() << " " << m.cols() << "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << " ";
      write_double(out, m(i, j));
    }
    out << "\n";
  }
}

Eigen::MatrixXd read_matrix(std::istream& in, const char* name) {
  expect(in, name);
  long rows = read_long(in), cols = read_long(in);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = read_double(in);
  return m;
}

template <typename Mat>
void write_int_matrix(std::ostream& out, const char* name, const Mat& m) {
  out << name << " " << m.rows() << " " << m.cols() << "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << " ";
      out << static_cast<long>(m(i, j));
    }
    out << "\n";
  }
}

template <typename Mat>
Mat read_int_matrix(std::istream& in, const char* name) {
  expect(in, name);
  long rows = read_long(in), cols = read_long(in);
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      m(i, j) = static_cast<typename Mat::Scalar>(read_long(in));
  return m;
}

}  // namespace

void save_state(const ModelState& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write state file: " + path);
  out << "hpfa-state 1\n";
  out << "dims " << s.K << " " << s.slots << " " << s.M << " " << s.V << " " << s.Q << " " << s.P
      << " " << s.sweep_index << "\n";
  out << "site_of_page";
  for (int v : s.site_of_page) out << " " << v;
  out << "\nlen_scale";
  for (int p = 0; p < s.P; ++p) {
    out << " ";
    write_double(out, s.len_scale[p]);
  }
  out << "\ntokens\n";
  for (const auto& page : s.tokens) {
    out << page.size();
    for (auto t : page) out << " " << t;
    out << "\n";
  }
  out << "assign\n";
  for (const auto& page : s.t) {
    out << page.size();
    for (auto t : page) out << " " << t;
    out << "\n";
  }
  write_matrix(out, "X", s.X);
  write_matrix(out, "phi", s.phi);
  write_matrix(out, "psi", s.psi);
  write_matrix(out, "theta", s.theta);
  write_matrix(out, "r", s.r);
  out << "r0 ";
  write_double(out, s.r0);
  out << "\n";
  write_int_matrix(out, "b", s.b);
  write_int_matrix(out, "c", s.c);
  write_matrix(out, "pi", s.pi);
  out << "mu_pi ";
  write_double(out, s.mu_pi);
  out << " sigma2_pi ";
  write_double(out, s.sigma2_pi);
  out << "\n";
  write_matrix(out, "beta", s.beta);
  write_matrix(out, "beta0", s.beta0);
  write_matrix(out, "sigma2", s.sigma2);
  write_matrix(out, "omega", s.omega);
  write_matrix(out, "eta", s.eta);
  out << "mu_eta ";
  write_double(out, s.mu_eta);
  out << " sigma2_eta ";
  write_double(out, s.sigma2_eta);
  out << "\nend\n";
  if (!out) throw ValidationError("write failed: " + path);
}

ModelState load_state(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open state file: " + path);
  expect(in, "hpfa-state");
  if (read_long(in) != 1) throw ValidationError("state file: unsupported version");
  ModelState s;
  expect(in, "dims");
  s.K = static_cast<int>(read_long(in));
  s.slots = static_cast<int>(read_long(in));
  s.M = static_cast<int>(read_long(in));
  s.V = static_cast<int>(read_long(in));
  s.Q = static_cast<int>(read_long(in));
  s.P = static_cast<int>(read_long(in));
  s.sweep_index = read_long(in);
  expect(in, "site_of_page");
  s.site_of_page.resize(s.P);
  for (auto& v : s.site_of_page) v = static_cast<int>(read_long(in));
  expect(in, "len_scale");
  s.len_scale.resize(s.P);
  for (int p = 0; p < s.P; ++p) s.len_scale[p] = read_double(in);
  expect(in, "tokens");
  s.tokens.resize(s.P);
  for (auto& page : s.tokens) {
    page.resize(read_long(in));
    for (auto& t : page) t = static_cast<std::int32_t>(read_long(in));
  }
  expect(in, "assign");
  s.t.resize(s.P);
  for (auto& page : s.t) {
    page.resize(read_long(in));
    for (auto& t : page) t = static_cast<std::int32_t>(read_long(in));
  }
  s.X = read_matrix(in, "X");
  s.phi = read_matrix(in, "phi");
  s.psi = read_matrix(in, "psi");
  s.theta = read_matrix(in, "theta");
  s.r = read_matrix(in, "r");
  expect(in, "r0");
  s.r0 = read_double(in);
  s.b = read_int_matrix<MatrixXu8>(in, "b");
  s.c = read_int_matrix<MatrixXu8>(in, "c");
  s.pi = read_matrix(in, "pi");
  expect(in, "mu_pi");
  s.mu_pi = read_double(in);
  expect(in, "sigma2_pi");
  s.sigma2_pi = read_double(in);
  s.beta = read_matrix(in, "beta");
  s.beta0 = read_matrix(in, "beta0");
  s.sigma2 = read_matrix(in, "sigma2");
  s.omega = read_matrix(in, "omega");
  s.eta = read_matrix(in, "eta");
  expect(in, "mu_eta");
  s.mu_eta = read_double(in);
  expect(in, "sigma2_eta");
  s.sigma2_eta = read_double(in);
  expect(in, "end");
  s.l_page_topic.setZero(s.P, s.slots);
  s.ell.setZero(s.slots);
  retally_counts(s);
  return s;
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError(path + ":" + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty()) throw ValidationError(path + ":" + std::to_string(lineno) + ": empty key");
    kv[key] = val;
  }
  return kv;
}

namespace {

double to_double(const std::string& key, const std::string& val) {
  char* end = nullptr;
  double v = std::strtod(val.c_str(), &end);
  if (val.empty() || end != val.c_str() + val.size())
    throw ValidationError("config: bad numeric value for " + key + ": '" + val + "'");
  return v;
}

long to_int(const std::string& key, const std::string& val) {
  char* end = nullptr;
  long v = std::strtol(val.c_str(), &end, 10);
  if (val.empty() || end != val.c_str() + val.size())
    throw ValidationError("config: bad integer value for " + key + ": '" + val + "'");
  return v;
}

bool to_bool(const std::string& key, const std::string& val) {
  if (val == "true" || val == "1" || val == "yes") return true;
  if (val == "false" || val == "0" || val == "no") return false;
  throw ValidationError("config: bad boolean value for " + key + ": '" + val + "'");
}

}  // namespace

void apply_config(ModelConfig& cfg, const std::map<std::string, std::string>& kv) {
  for (const auto& [key, val] : kv) {
    if (key == "k")
      cfg.K = static_cast<int>(to_int(key, val));
    else if (key == "variant") {
      auto [site, page] = parse_variant(val, &cfg.local_topics);
      cfg.site_prior = site;
      cfg.page_prior = page;
    } else if (key == "local_topics")
      cfg.local_topics = to_bool(key, val);
    else if (key == "site_prior") {
      if (val == "always" || val == "a") cfg.site_prior = SitePrior::Always;
      else if (val == "exchangeable" || val == "e") cfg.site_prior = SitePrior::Exchangeable;
      else if (val == "structured" || val == "s") cfg.site_prior = SitePrior::Structured;
      else throw ValidationError("config: unknown site_prior '" + val + "'");
    } else if (key == "page_prior") {
      if (val == "always" || val == "a") cfg.page_prior = PagePrior::Always;
      else if (val == "exchangeable" || val == "e") cfg.page_prior = PagePrior::Exchangeable;
      else throw ValidationError("config: unknown page_prior '" + val + "'");
    } else if (key == "alpha_phi") cfg.hyper.alpha_phi = to_double(key, val);
    else if (key == "alpha_psi") cfg.hyper.alpha_psi = to_double(key, val);
    else if (key == "d_r0") cfg.hyper.d_r0 = to_double(key, val);
    else if (key == "e_r0") cfg.hyper.e_r0 = to_double(key, val);
    else if (key == "e_r") cfg.hyper.e_r = to_double(key, val);
    else if (key == "d_mu_pi") cfg.hyper.d_mu_pi = to_double(key, val);
    else if (key == "e_mu_pi") cfg.hyper.e_mu_pi = to_double(key, val);
    else if (key == "d_sigma_pi") cfg.hyper.d_sigma_pi = to_double(key, val);
    else if (key == "e_sigma_pi") cfg.hyper.e_sigma_pi = to_double(key, val);
    else if (key == "d_mu_eta") cfg.hyper.d_mu_eta = to_double(key, val);
    else if (key == "e_mu_eta") cfg.hyper.e_mu_eta = to_double(key, val);
    else if (key == "d_sigma_eta") cfg.hyper.d_sigma_eta = to_double(key, val);
    else if (key == "e_sigma_eta") cfg.hyper.e_sigma_eta = to_double(key, val);
    else if (key == "sigma0") cfg.hyper.sigma0 = to_double(key, val);
    else if (key == "d_sigma") cfg.hyper.d_sigma = to_double(key, val);
    else if (key == "e_sigma") cfg.hyper.e_sigma = to_double(key, val);
    else if (key == "mu0") {
      std::vector<double> vals;
      std::istringstream ss(val);
      std::string item;
      while (std::getline(ss, item, ',')) vals.push_back(to_double(key, trim(item)));
      cfg.hyper.mu0 = Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
    } else if (key == "burn_in") cfg.sampler.burn_in = static_cast<int>(to_int(key, val));
    else if (key == "n_samples") cfg.sampler.n_samples = static_cast<int>(to_int(key, val));
    else if (key == "thin") cfg.sampler.thin = static_cast<int>(to_int(key, val));
    else if (key == "chains") cfg.sampler.chains = static_cast<int>(to_int(key, val));
    else if (key == "pg_truncation") cfg.sampler.pg_truncation = static_cast<int>(to_int(key, val));
    else if (key == "mh_step") cfg.sampler.mh_step = to_double(key, val);
    else if (key == "seed") cfg.sampler.seed = static_cast<std::uint64_t>(to_int(key, val));
    else if (key == "threads") cfg.sampler.threads = static_cast<int>(to_int(key, val));
    else if (key == "store_draws") cfg.sampler.store_draws = to_bool(key, val);
    else throw ValidationError("config: unknown key '" + key + "'");
  }
}

}  // namespace hpfa
