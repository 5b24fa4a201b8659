#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "hpfa/distributions.hpp"
#include "hpfa/errors.hpp"
#include "hpfa/model.hpp"
#include "hpfa/synthetic.hpp"

using namespace hpfa;
namespace fs = std::filesystem;

namespace {

std::string temp_path(const std::string& name) {
  return (fs::temp_directory_path() / ("hpfa_model_test_" + name)).string();
}

std::string write_file(const std::string& name, const std::string& content) {
  std::string path = temp_path(name);
  std::ofstream out(path);
  out << content;
  return path;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

GroundTruth small_truth(const ModelConfig& cfg, std::uint64_t seed) {
  SimOptions opts;
  opts.sites = 4;
  opts.pages_per_site = 3;
  opts.len_scale = 15.0;
  opts.vocab = 12;
  opts.r0 = 1.0;
  opts.r = Eigen::VectorXd::Constant(cfg.slots(), 0.5);
  // Pin the presence probabilities high so small corpora always fill.
  if (cfg.site_prior == SitePrior::Exchangeable)
    opts.pi = Eigen::VectorXd::Constant(cfg.K, 0.95);
  if (cfg.site_prior == SitePrior::Structured)
    opts.beta = Eigen::MatrixXd::Constant(cfg.K, 2, logit(0.95));
  if (cfg.page_prior == PagePrior::Exchangeable)
    opts.eta = Eigen::VectorXd::Constant(cfg.slots(), 0.8);
  RngStream rng(seed, 0);
  return simulate(cfg, opts, rng);
}

}  // namespace

TEST_CASE("variant codes parse and print") {
  bool lt = true;
  auto [s, p] = parse_variant("aa", &lt);
  CHECK(s == SitePrior::Always);
  CHECK(p == PagePrior::Always);
  CHECK_FALSE(lt);

  std::tie(s, p) = parse_variant("se-lt", &lt);
  CHECK(s == SitePrior::Structured);
  CHECK(p == PagePrior::Exchangeable);
  CHECK(lt);

  std::tie(s, p) = parse_variant("EA", &lt);
  CHECK(s == SitePrior::Exchangeable);
  CHECK(p == PagePrior::Always);
  CHECK_FALSE(lt);

  for (const char* code : {"xx", "a", "aea", "ae-xx", "", "as"})
    CHECK_THROWS_AS(parse_variant(code, &lt), ValidationError);

  ModelConfig cfg;
  cfg.site_prior = SitePrior::Structured;
  cfg.page_prior = PagePrior::Exchangeable;
  cfg.local_topics = true;
  CHECK(cfg.variant_code() == "se-lt");
  cfg.local_topics = false;
  cfg.site_prior = SitePrior::Always;
  cfg.page_prior = PagePrior::Always;
  CHECK(cfg.variant_code() == "aa");
  CHECK(to_string(SitePrior::Exchangeable) == "exchangeable");
  CHECK(to_string(PagePrior::Always) == "always");
}

TEST_CASE("mean-variance to beta parameters") {
  auto [d, e] = mean_variance_to_beta_params(0.5, 1.0 / 12.0);
  CHECK(d == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(e == doctest::Approx(1.0).epsilon(1e-12));

  std::tie(d, e) = mean_variance_to_beta_params(0.5, 0.125);
  CHECK(d == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(e == doctest::Approx(0.5).epsilon(1e-12));

  // Beta(2, 3): mean 0.4, variance 0.04.
  std::tie(d, e) = mean_variance_to_beta_params(0.4, 0.04);
  CHECK(d == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(e == doctest::Approx(3.0).epsilon(1e-12));

  CHECK_THROWS_AS(mean_variance_to_beta_params(0.5, 0.25), ValidationError);
  CHECK_THROWS_AS(mean_variance_to_beta_params(0.0, 0.01), ValidationError);
  CHECK_THROWS_AS(mean_variance_to_beta_params(0.5, 0.0), ValidationError);
}

TEST_CASE("feasible mean-variance draws respect the constraint") {
  RngStream rng(3, 0);
  for (int i = 0; i < 200; ++i) {
    auto [mu, s2] = sample_feasible_mean_variance(1.0, 1.0, 1.0, 1.0, rng);
    CHECK(mu > 0.0);
    CHECK(mu < 1.0);
    CHECK(s2 > 0.0);
    CHECK(s2 < mu * (1.0 - mu));
  }
}

TEST_CASE("hyperparameter defaults resolve against K and Q") {
  ModelConfig cfg;
  cfg.K = 6;
  Hyperparameters h = cfg.resolved_hyper(3);
  CHECK(h.e_mu_eta == doctest::Approx(5.0));
  CHECK(h.e_sigma_eta == doctest::Approx(5.0));
  CHECK(h.mu0.size() == 3);
  CHECK(h.mu0.cwiseAbs().maxCoeff() == 0.0);

  cfg.K = 1;
  h = cfg.resolved_hyper(0);
  CHECK(h.e_mu_eta == doctest::Approx(1.0));
  CHECK(h.e_sigma_eta == doctest::Approx(1.0));

  cfg.hyper.e_mu_eta = 7.0;
  h = cfg.resolved_hyper(0);
  CHECK(h.e_mu_eta == doctest::Approx(7.0));

  cfg.hyper.alpha_phi = -1.0;
  CHECK_THROWS_AS(cfg.resolved_hyper(0), ValidationError);
}

TEST_CASE("config files parse with overrides and reject unknown keys") {
  std::string path = write_file("good.cfg",
                                "# comment\n"
                                "k = 7\n"
                                "variant = se-lt\n"
                                "burn_in = 123\n"
                                "n_samples = 45\n"
                                "thin = 2\n"
                                "chains = 3\n"
                                "seed = 99\n"
                                "threads = 2\n"
                                "pg_truncation = 50\n"
                                "mh_step = 0.5\n"
                                "store_draws = false\n"
                                "alpha_phi = 0.1\n"
                                "e_r = 2.0\n"
                                "d_mu_pi = 4\n");
  ModelConfig cfg;
  apply_config(cfg, parse_config_file(path));
  CHECK(cfg.K == 7);
  CHECK(cfg.site_prior == SitePrior::Structured);
  CHECK(cfg.page_prior == PagePrior::Exchangeable);
  CHECK(cfg.local_topics);
  CHECK(cfg.sampler.burn_in == 123);
  CHECK(cfg.sampler.n_samples == 45);
  CHECK(cfg.sampler.thin == 2);
  CHECK(cfg.sampler.chains == 3);
  CHECK(cfg.sampler.seed == 99);
  CHECK(cfg.sampler.threads == 2);
  CHECK(cfg.sampler.pg_truncation == 50);
  CHECK(cfg.sampler.mh_step == doctest::Approx(0.5));
  CHECK_FALSE(cfg.sampler.store_draws);
  CHECK(cfg.hyper.alpha_phi == doctest::Approx(0.1));
  CHECK(cfg.hyper.e_r == doctest::Approx(2.0));
  CHECK(cfg.hyper.d_mu_pi == doctest::Approx(4.0));

  std::string bad = write_file("bad.cfg", "no_such_key = 1\n");
  ModelConfig cfg2;
  CHECK_THROWS_AS(apply_config(cfg2, parse_config_file(bad)), ValidationError);
  std::string malformed = write_file("malformed.cfg", "k 7\n");
  CHECK_THROWS_AS(parse_config_file(malformed), ValidationError);
  std::string badint = write_file("badint.cfg", "k = seven\n");
  ModelConfig cfg3;
  CHECK_THROWS_AS(apply_config(cfg3, parse_config_file(badint)), ValidationError);
}

TEST_CASE("config validation catches structural problems") {
  ModelConfig cfg;
  cfg.K = 2;
  cfg.site_prior = SitePrior::Structured;
  GroundTruth truth = small_truth([] {
    ModelConfig c;
    c.K = 2;
    return c;
  }(), 1);
  Corpus no_cov = truth.corpus;
  no_cov.covariates.resize(no_cov.num_sites(), 0);
  no_cov.covariate_names.clear();
  no_cov.region_labels.clear();
  CHECK_THROWS_AS(cfg.validate(no_cov), ValidationError);

  ModelConfig bad;
  bad.K = 0;
  CHECK_THROWS_AS(bad.validate(no_cov), ValidationError);
  ModelConfig bads;
  bads.K = 2;
  bads.sampler.n_samples = 0;
  CHECK_THROWS_AS(bads.validate(no_cov), ValidationError);
}

TEST_CASE("initial states satisfy the invariants for every variant") {
  int seed = 10;
  for (const char* code : {"aa", "ea", "sa", "ae", "ee", "se", "aa-lt", "ea-lt", "sa-lt", "ae-lt",
                           "ee-lt", "se-lt"}) {
    ModelConfig cfg;
    cfg.K = 3;
    auto [s, p] = parse_variant(code, &cfg.local_topics);
    cfg.site_prior = s;
    cfg.page_prior = p;
    GroundTruth truth = small_truth(cfg, seed++);
    RngStream rng(55, 0);
    ModelState st = init_state(cfg, truth.corpus, rng);
    check_state_invariants(st, cfg);
    CHECK(st.P == truth.corpus.num_pages());
    CHECK(st.slots == cfg.slots());
    long tokens = 0;
    for (const auto& page : st.tokens) tokens += static_cast<long>(page.size());
    CHECK(tokens == truth.corpus.total_tokens());
    for (int pg = 0; pg < st.P; ++pg)
      CHECK(st.len_scale[pg] == doctest::Approx(double(st.tokens[pg].size())));
  }
}

TEST_CASE("retally rebuilds counts from assignments") {
  ModelConfig cfg;
  cfg.K = 3;
  cfg.local_topics = true;
  GroundTruth truth = small_truth(cfg, 77);
  RngStream rng(4, 0);
  ModelState st = init_state(cfg, truth.corpus, rng);
  Eigen::MatrixXi zp = st.z_page_topic, zw = st.z_topic_word, zl = st.z_site_localword;
  st.z_page_topic.setZero();
  st.z_topic_word.setZero();
  st.z_site_localword.setZero();
  retally_counts(st);
  CHECK(st.z_page_topic == zp);
  CHECK(st.z_topic_word == zw);
  CHECK(st.z_site_localword == zl);
}

TEST_CASE("state checkpoints round trip exactly") {
  ModelConfig cfg;
  cfg.K = 2;
  cfg.local_topics = true;
  cfg.site_prior = SitePrior::Structured;
  cfg.page_prior = PagePrior::Exchangeable;
  GroundTruth truth = small_truth(cfg, 5);
  RngStream rng(6, 0);
  ModelState st = init_state(cfg, truth.corpus, rng);
  st.sweep_index = 41;

  std::string path = temp_path("state.txt");
  save_state(st, path);
  ModelState back = load_state(path);
  check_state_invariants(back, cfg);
  CHECK(back.sweep_index == 41);
  CHECK(back.K == st.K);
  CHECK(back.slots == st.slots);
  CHECK(back.t == st.t);
  CHECK(back.phi == st.phi);
  CHECK(back.psi == st.psi);
  CHECK(back.theta == st.theta);
  CHECK(back.r == st.r);
  CHECK(back.r0 == st.r0);
  CHECK(back.b == st.b);
  CHECK(back.c == st.c);
  CHECK(back.beta == st.beta);
  CHECK(back.eta == st.eta);
  CHECK(back.len_scale == st.len_scale);

  // Saving the reloaded state reproduces the file byte for byte.
  std::string path2 = temp_path("state2.txt");
  save_state(back, path2);
  CHECK(slurp(path) == slurp(path2));

  CHECK_THROWS_AS(load_state(temp_path("no_such_state")), ValidationError);
}
