#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hpfa/corpus.hpp"
#include "hpfa/errors.hpp"
#include "hpfa/evaluation.hpp"
#include "hpfa/model.hpp"
#include "hpfa/sampler.hpp"
#include "hpfa/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct CommonArgs {
  std::string pages, covariates, config_path, out_dir = ".";
  int k = 50;
  std::string variant = "aa";
  int burn_in = -1, n_samples = -1, thin = -1, chains = -1, pg_truncation = -1, threads = -1;
  double mh_step = -1.0;
  std::uint64_t seed = 0;
  bool quiet = false;
};

void add_model_options(CLI::App* sub, CommonArgs& a) {
  sub->add_option("--config", a.config_path, "key=value config file; explicit flags win");
  sub->add_option("--k", a.k, "number of global topics");
  sub->add_option("--variant", a.variant,
                  "prior variant: site letter a|e|s, page letter a|e, optional -lt suffix "
                  "(e.g. se-lt)");
  sub->add_option("--burn-in", a.burn_in, "burn-in sweeps");
  sub->add_option("--n-samples", a.n_samples, "retained draws");
  sub->add_option("--thin", a.thin, "thinning interval");
  sub->add_option("--chains", a.chains, "independent chains");
  sub->add_option("--pg-truncation", a.pg_truncation, "Polya-Gamma series truncation");
  sub->add_option("--mh-step", a.mh_step, "random-walk step for presence hyperparameter moves");
  sub->add_option("--seed", a.seed, "random seed");
  sub->add_option("--threads", a.threads, "worker threads for the assignment sweep");
  sub->add_flag("--quiet", a.quiet, "suppress progress lines");
}

hpfa::ModelConfig build_config(const CommonArgs& a, CLI::App* sub) {
  hpfa::ModelConfig cfg;
  if (!a.config_path.empty()) hpfa::apply_config(cfg, hpfa::parse_config_file(a.config_path));
  if (sub->count("--k")) cfg.K = a.k;
  if (sub->count("--variant")) {
    auto [site, page] = hpfa::parse_variant(a.variant, &cfg.local_topics);
    cfg.site_prior = site;
    cfg.page_prior = page;
  }
  if (sub->count("--burn-in")) cfg.sampler.burn_in = a.burn_in;
  if (sub->count("--n-samples")) cfg.sampler.n_samples = a.n_samples;
  if (sub->count("--thin")) cfg.sampler.thin = a.thin;
  if (sub->count("--chains")) cfg.sampler.chains = a.chains;
  if (sub->count("--pg-truncation")) cfg.sampler.pg_truncation = a.pg_truncation;
  if (sub->count("--mh-step")) cfg.sampler.mh_step = a.mh_step;
  if (sub->count("--seed")) cfg.sampler.seed = a.seed;
  if (sub->count("--threads")) cfg.sampler.threads = a.threads;
  return cfg;
}

json config_to_json(const hpfa::ModelConfig& cfg, int Q) {
  const hpfa::Hyperparameters h = cfg.resolved_hyper(Q);
  json j;
  j["k"] = cfg.K;
  j["variant"] = cfg.variant_code();
  j["site_prior"] = hpfa::to_string(cfg.site_prior);
  j["page_prior"] = hpfa::to_string(cfg.page_prior);
  j["local_topics"] = cfg.local_topics;
  json hy;
  hy["alpha_phi"] = h.alpha_phi;
  hy["alpha_psi"] = h.alpha_psi;
  hy["d_r0"] = h.d_r0;
  hy["e_r0"] = h.e_r0;
  hy["e_r"] = h.e_r;
  hy["d_mu_pi"] = h.d_mu_pi;
  hy["e_mu_pi"] = h.e_mu_pi;
  hy["d_sigma_pi"] = h.d_sigma_pi;
  hy["e_sigma_pi"] = h.e_sigma_pi;
  hy["d_mu_eta"] = h.d_mu_eta;
  hy["e_mu_eta"] = h.e_mu_eta;
  hy["d_sigma_eta"] = h.d_sigma_eta;
  hy["e_sigma_eta"] = h.e_sigma_eta;
  hy["sigma0"] = h.sigma0;
  hy["d_sigma"] = h.d_sigma;
  hy["e_sigma"] = h.e_sigma;
  hy["mu0"] = std::vector<double>(h.mu0.data(), h.mu0.data() + h.mu0.size());
  j["hyper"] = std::move(hy);
  json sm;
  sm["burn_in"] = cfg.sampler.burn_in;
  sm["n_samples"] = cfg.sampler.n_samples;
  sm["thin"] = cfg.sampler.thin;
  sm["chains"] = cfg.sampler.chains;
  sm["pg_truncation"] = cfg.sampler.pg_truncation;
  sm["mh_step"] = cfg.sampler.mh_step;
  sm["seed"] = cfg.sampler.seed;
  sm["threads"] = cfg.sampler.threads;
  sm["store_draws"] = cfg.sampler.store_draws;
  j["sampler"] = std::move(sm);
  return j;
}

std::string utc_now() {
  std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void write_manifest(const std::string& out_dir, const std::string& command,
                    const std::vector<std::pair<std::string, std::string>>& inputs,
                    const std::vector<std::string>& outputs, const json& config,
                    std::uint64_t seed) {
  json j;
  j["tool"] = "hpfa";
  j["version"] = kVersion;
  j["command"] = command;
  j["timestamp_utc"] = utc_now();
  json in = json::object();
  for (const auto& [path, kind] : inputs) {
    json entry;
    entry["path"] = path;
    entry["fnv1a64"] = hpfa::hash_hex(hpfa::fnv1a_file_hash(path));
    in[kind] = std::move(entry);
  }
  j["inputs"] = std::move(in);
  j["outputs"] = outputs;
  j["config"] = config;
  j["seed"] = seed;
  std::ofstream out(out_dir + "/manifest.json");
  if (!out) throw hpfa::ValidationError("cannot write manifest in " + out_dir);
  out << j.dump(2) << "\n";
}

hpfa::ChainLogger make_logger(bool quiet) {
  if (quiet) return {};
  return [](const std::string& line) { std::cerr << "[hpfa] " << line << "\n"; };
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw hpfa::ValidationError("cannot write " + path);
  out << content;
}

int run_ingest(const CommonArgs& a, int min_pages_per_word, int min_words_per_page,
               int max_words_per_page, int max_pages_per_site, bool no_filter) {
  hpfa::Corpus corpus = hpfa::load_corpus(a.pages, a.covariates);
  hpfa::Corpus kept = no_filter
                          ? corpus
                          : hpfa::filter_corpus(corpus, min_pages_per_word, min_words_per_page,
                                                max_words_per_page, max_pages_per_site);
  if (kept.num_sites() == 0 || kept.num_pages() == 0)
    throw hpfa::ValidationError("filtering removed every page; relax the thresholds");
  fs::create_directories(a.out_dir);
  const std::string pages_out = a.out_dir + "/pages.jsonl";
  const std::string cov_out = a.out_dir + "/covariates.csv";
  const bool has_cov = kept.covariates.cols() > 0 || !kept.region_labels.empty();
  hpfa::save_corpus(kept, pages_out, has_cov ? cov_out : "");
  std::string vocab;
  for (const auto& w : kept.vocabulary) vocab += w + "\n";
  write_text(a.out_dir + "/vocabulary.txt", vocab);
  if (!a.quiet)
    std::cerr << "[hpfa] ingest: " << corpus.num_pages() << " -> " << kept.num_pages()
              << " pages, " << corpus.vocab_size() << " -> " << kept.vocab_size() << " words, "
              << kept.total_tokens() << " tokens\n";
  json cfg;
  cfg["min_pages_per_word"] = min_pages_per_word;
  cfg["min_words_per_page"] = min_words_per_page;
  cfg["max_words_per_page"] = max_words_per_page;
  cfg["max_pages_per_site"] = max_pages_per_site;
  cfg["no_filter"] = no_filter;
  std::vector<std::pair<std::string, std::string>> inputs = {{a.pages, "pages"}};
  if (!a.covariates.empty()) inputs.push_back({a.covariates, "covariates"});
  std::vector<std::string> outputs = {pages_out, a.out_dir + "/vocabulary.txt"};
  if (has_cov) outputs.push_back(cov_out);
  write_manifest(a.out_dir, "ingest", inputs, outputs, cfg, 0);
  return 0;
}

int run_fit(const CommonArgs& a, CLI::App* sub) {
  hpfa::Corpus corpus = hpfa::load_corpus(a.pages, a.covariates);
  hpfa::ModelConfig cfg = build_config(a, sub);
  cfg.validate(corpus);
  fs::create_directories(a.out_dir);
  hpfa::PosteriorSamples samples = hpfa::run_chains(cfg, corpus, make_logger(a.quiet));
  const std::string samples_path = a.out_dir + "/samples.bin";
  hpfa::save_samples(samples, samples_path);
  std::vector<std::pair<std::string, std::string>> inputs = {{a.pages, "pages"}};
  if (!a.covariates.empty()) inputs.push_back({a.covariates, "covariates"});
  if (!a.config_path.empty()) inputs.push_back({a.config_path, "config"});
  write_manifest(a.out_dir, "fit", inputs, {samples_path},
                 config_to_json(cfg, static_cast<int>(corpus.covariates.cols())),
                 cfg.sampler.seed);
  return 0;
}

int run_perplexity(const CommonArgs& a, CLI::App* sub, std::vector<int> k_grid, int folds,
                   double heldout_frac, bool per_sample_average) {
  hpfa::Corpus corpus = hpfa::load_corpus(a.pages, a.covariates);
  hpfa::ModelConfig cfg = build_config(a, sub);
  if (k_grid.empty()) {
    if (sub->count("--k") || !a.config_path.empty())
      k_grid = {cfg.K};
    else
      k_grid = {25, 50, 100, 200, 300, 400, 500, 600};
  }
  (void)per_sample_average;
  fs::create_directories(a.out_dir);
  std::string csv = "variant,k,fold,fold_seed,perplexity\n";
  std::string summary = "k\tmean_perplexity\timprovement_vs_prev_k\n";
  double prev_mean = 0.0;
  bool have_prev = false;
  for (int k : k_grid) {
    hpfa::ModelConfig run_cfg = cfg;
    run_cfg.K = k;
    run_cfg.validate(corpus);
    hpfa::CvResult cv =
        hpfa::run_cv(run_cfg, corpus, folds, heldout_frac, cfg.sampler.seed, make_logger(a.quiet));
    for (int f = 0; f < folds; ++f) {
      char line[160];
      std::snprintf(line, sizeof line, "%s,%d,%d,%llu,%.6f\n", run_cfg.variant_code().c_str(), k,
                    f, static_cast<unsigned long long>(cv.fold_seeds[f]), cv.per_fold[f]);
      csv += line;
    }
    char row[96];
    if (have_prev)
      std::snprintf(row, sizeof row, "%d\t%.3f\t%.3f\n", k, cv.mean, prev_mean - cv.mean);
    else
      std::snprintf(row, sizeof row, "%d\t%.3f\t-\n", k, cv.mean);
    summary += row;
    prev_mean = cv.mean;
    have_prev = true;
  }
  write_text(a.out_dir + "/perplexity.csv", csv);
  write_text(a.out_dir + "/perplexity_summary.txt", summary);
  std::vector<std::pair<std::string, std::string>> inputs = {{a.pages, "pages"}};
  if (!a.covariates.empty()) inputs.push_back({a.covariates, "covariates"});
  if (!a.config_path.empty()) inputs.push_back({a.config_path, "config"});
  json jc = config_to_json(cfg, static_cast<int>(corpus.covariates.cols()));
  jc["k_grid"] = k_grid;
  jc["folds"] = folds;
  jc["heldout_frac"] = heldout_frac;
  write_manifest(a.out_dir, "perplexity", inputs,
                 {a.out_dir + "/perplexity.csv", a.out_dir + "/perplexity_summary.txt"}, jc,
                 cfg.sampler.seed);
  return 0;
}

int run_report(const CommonArgs& a, const std::string& samples_path, int top_n, double min_sites,
               double max_sites) {
  hpfa::Corpus corpus = hpfa::load_corpus(a.pages, a.covariates);
  hpfa::PosteriorSamples samples = hpfa::load_samples(samples_path);
  fs::create_directories(a.out_dir);
  hpfa::SelectionCriteria criteria;
  criteria.min_sites = min_sites;
  criteria.max_sites = max_sites;
  std::vector<int> selected = hpfa::select_topics(samples, criteria);
  std::string sel = "selected_topics";
  for (int k : selected) sel += "\t" + std::to_string(k);
  sel += "\n";
  write_text(a.out_dir + "/selected_topics.txt", sel);
  write_text(a.out_dir + "/top_words.txt",
             hpfa::render_top_words_table(samples, corpus, selected, top_n));
  std::vector<std::string> outputs = {a.out_dir + "/selected_topics.txt",
                                      a.out_dir + "/top_words.txt"};
  if (samples.slots > samples.K) {
    write_text(a.out_dir + "/local_top_words.txt",
               hpfa::render_local_top_words_table(samples, corpus, top_n));
    outputs.push_back(a.out_dir + "/local_top_words.txt");
  }
  write_text(a.out_dir + "/presence.txt", hpfa::render_presence_table(samples, selected));
  outputs.push_back(a.out_dir + "/presence.txt");
  if (samples.cfg.site_prior == hpfa::SitePrior::Structured) {
    write_text(a.out_dir + "/contrasts.txt",
               hpfa::render_contrast_table(samples, selected, corpus.covariate_names));
    outputs.push_back(a.out_dir + "/contrasts.txt");
  }
  write_text(a.out_dir + "/auto_check.txt",
             hpfa::render_auto_check_table(samples, corpus, selected));
  write_text(a.out_dir + "/missing_sites.txt",
             hpfa::render_missing_sites(samples, corpus, selected));
  outputs.push_back(a.out_dir + "/auto_check.txt");
  outputs.push_back(a.out_dir + "/missing_sites.txt");
  json cfg;
  cfg["top_n"] = top_n;
  cfg["min_sites"] = min_sites;
  cfg["max_sites"] = max_sites;
  std::vector<std::pair<std::string, std::string>> inputs = {{a.pages, "pages"},
                                                             {samples_path, "samples"}};
  if (!a.covariates.empty()) inputs.push_back({a.covariates, "covariates"});
  write_manifest(a.out_dir, "report", inputs, outputs, cfg, 0);
  return 0;
}

int run_simulate(const CommonArgs& a, CLI::App* sub, int sites, int pages_per_site,
                 double len_scale, int vocab, double pin_r0, double pin_r) {
  hpfa::ModelConfig cfg = build_config(a, sub);
  hpfa::SimOptions opts;
  opts.sites = sites;
  opts.pages_per_site = pages_per_site;
  opts.len_scale = len_scale;
  opts.vocab = vocab;
  opts.r0 = pin_r0;
  if (pin_r >= 0.0) opts.r = Eigen::VectorXd::Constant(cfg.slots(), pin_r);
  hpfa::RngStream rng(a.seed, 0);
  hpfa::GroundTruth truth = hpfa::simulate(cfg, opts, rng);
  fs::create_directories(a.out_dir);
  const std::string pages_out = a.out_dir + "/pages.jsonl";
  const std::string cov_out = a.out_dir + "/covariates.csv";
  const bool has_cov = truth.corpus.covariates.cols() > 0;
  hpfa::save_corpus(truth.corpus, pages_out, has_cov ? cov_out : "");
  hpfa::save_truth(truth, a.out_dir + "/truth.json");
  if (!a.quiet)
    std::cerr << "[hpfa] simulate: " << truth.corpus.num_pages() << " pages, "
              << truth.corpus.total_tokens() << " tokens, " << truth.empty_page_redraws
              << " empty-page redraws\n";
  json jc = config_to_json(cfg, static_cast<int>(truth.corpus.covariates.cols()));
  jc["sites"] = sites;
  jc["pages_per_site"] = pages_per_site;
  jc["len_scale"] = len_scale;
  jc["vocab"] = vocab;
  std::vector<std::string> outputs = {pages_out, a.out_dir + "/truth.json"};
  if (has_cov) outputs.push_back(cov_out);
  write_manifest(a.out_dir, "simulate", {}, outputs, jc, a.seed);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hierarchical Poisson factor topic models for page collections nested in sites"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  CommonArgs ingest_args;
  int min_pages_per_word = 20, min_words_per_page = 50, max_words_per_page = 1000,
      max_pages_per_site = 100;
  bool no_filter = false;
  CLI::App* ingest = app.add_subcommand("ingest", "validate and filter a corpus");
  ingest->add_option("--pages", ingest_args.pages, "pages JSONL file")->required();
  ingest->add_option("--covariates", ingest_args.covariates, "site covariates CSV");
  ingest->add_option("--out-dir", ingest_args.out_dir, "output directory")->required();
  ingest->add_option("--min-pages-per-word", min_pages_per_word, "drop rarer words");
  ingest->add_option("--min-words-per-page", min_words_per_page, "drop shorter pages");
  ingest->add_option("--max-words-per-page", max_words_per_page, "drop longer pages");
  ingest->add_option("--max-pages-per-site", max_pages_per_site, "cap pages per site");
  ingest->add_flag("--no-filter", no_filter, "validate and normalize only");
  ingest->add_flag("--quiet", ingest_args.quiet, "suppress progress lines");

  CommonArgs fit_args;
  CLI::App* fit = app.add_subcommand("fit", "run the Gibbs sampler and store posterior draws");
  fit->add_option("--pages", fit_args.pages, "pages JSONL file")->required();
  fit->add_option("--covariates", fit_args.covariates, "site covariates CSV");
  fit->add_option("--out-dir", fit_args.out_dir, "output directory")->required();
  add_model_options(fit, fit_args);

  CommonArgs perp_args;
  std::vector<int> k_grid;
  int folds = 5;
  double heldout_frac = 0.2;
  bool per_sample_average = false;
  CLI::App* perp = app.add_subcommand("perplexity", "cross-validated held-out perplexity");
  perp->add_option("--pages", perp_args.pages, "pages JSONL file")->required();
  perp->add_option("--covariates", perp_args.covariates, "site covariates CSV");
  perp->add_option("--out-dir", perp_args.out_dir, "output directory")->required();
  perp->add_option("--k-grid", k_grid, "comma-separated K values")->delimiter(',');
  perp->add_option("--folds", folds, "cross-validation folds");
  perp->add_option("--heldout-frac", heldout_frac, "held-out token fraction per page");
  perp->add_flag("--per-sample-average", per_sample_average,
                 "average per-draw ratios instead of pooling");
  add_model_options(perp, perp_args);

  CommonArgs report_args;
  std::string samples_path;
  int top_n = 10;
  double min_sites = 20.0, max_sites = -1.0;
  CLI::App* report = app.add_subcommand("report", "summary tables from stored samples");
  report->add_option("--pages", report_args.pages, "pages JSONL file")->required();
  report->add_option("--covariates", report_args.covariates, "site covariates CSV");
  report->add_option("--samples", samples_path, "samples file from fit")->required();
  report->add_option("--out-dir", report_args.out_dir, "output directory")->required();
  report->add_option("--top-n", top_n, "words per topic");
  report->add_option("--min-sites", min_sites, "selection: minimum posterior mean site count");
  report->add_option("--max-sites", max_sites,
                     "selection: maximum posterior mean site count (default 0.815 M)");
  report->add_flag("--quiet", report_args.quiet, "suppress progress lines");

  CommonArgs sim_args;
  int sim_sites = 20, sim_pages = 10, sim_vocab = 50;
  double sim_len_scale = 5.0, sim_r0 = 1.0, sim_r = 0.4;
  CLI::App* sim = app.add_subcommand("simulate", "draw a synthetic corpus with known truth");
  sim->add_option("--out-dir", sim_args.out_dir, "output directory")->required();
  sim->add_option("--sites", sim_sites, "number of sites");
  sim->add_option("--pages-per-site", sim_pages, "pages per site");
  sim->add_option("--len-scale", sim_len_scale, "per-page prior length scale");
  sim->add_option("--vocab", sim_vocab, "vocabulary size");
  sim->add_option("--r0", sim_r0, "pinned topic rate hyperparameter (negative: draw)");
  sim->add_option("--r", sim_r, "pinned per-slot rate (negative: draw)");
  add_model_options(sim, sim_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*ingest)
      return run_ingest(ingest_args, min_pages_per_word, min_words_per_page, max_words_per_page,
                        max_pages_per_site, no_filter);
    if (*fit) return run_fit(fit_args, fit);
    if (*perp)
      return run_perplexity(perp_args, perp, k_grid, folds, heldout_frac, per_sample_average);
    if (*report) return run_report(report_args, samples_path, top_n, min_sites, max_sites);
    if (*sim)
      return run_simulate(sim_args, sim, sim_sites, sim_pages, sim_len_scale, sim_vocab, sim_r0,
                          sim_r);
  } catch (const hpfa::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const hpfa::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
