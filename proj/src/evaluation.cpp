#include "hpfa/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "hpfa/errors.hpp"

namespace hpfa {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

void check_alignment(const PosteriorSamples& samples, const Corpus& corpus) {
  require(samples.P == corpus.num_pages(), "samples and corpus disagree on page count");
  require(samples.M == corpus.num_sites(), "samples and corpus disagree on site count");
  require(samples.V == corpus.vocab_size(), "samples and corpus disagree on vocabulary size");
}

}  // namespace

double perplexity(const PosteriorSamples& samples, const Corpus& corpus, const HoldoutSplit& split,
                  bool per_sample_average) {
  check_alignment(samples, corpus);
  require(samples.cfg.sampler.store_draws && !samples.theta.empty(),
          "perplexity requires samples stored with per-draw mixtures");
  const int S = samples.n_draws();
  const int K = samples.K, slots = samples.slots;
  const bool lt = slots > K;
  auto counts = heldout_counts(corpus, split);
  auto refs = page_refs(corpus);

  long Y = 0;
  double loglik = 0.0;
  for (std::size_t p = 0; p < counts.size(); ++p) {
    if (counts[p].empty()) continue;
    const int site = refs[p].site;
    std::vector<double> denom(S);
    for (int s = 0; s < S; ++s) {
      denom[s] = samples.theta[s].row(static_cast<Eigen::Index>(p)).sum();
      require(denom[s] > 0.0, "perplexity: page has zero total intensity in a draw");
    }
    double denom_sum = 0.0;
    for (int s = 0; s < S; ++s) denom_sum += denom[s];
    for (auto [v, y] : counts[p]) {
      double f;
      if (per_sample_average) {
        double acc = 0.0;
        for (int s = 0; s < S; ++s) {
          double num = 0.0;
          for (int k = 0; k < K; ++k)
            num += samples.phi[s](k, v) * samples.theta[s](static_cast<Eigen::Index>(p), k);
          if (lt) num += samples.psi[s](site, v) * samples.theta[s](static_cast<Eigen::Index>(p), K);
          acc += num / denom[s];
        }
        f = acc / S;
      } else {
        double num = 0.0;
        for (int s = 0; s < S; ++s) {
          for (int k = 0; k < K; ++k)
            num += samples.phi[s](k, v) * samples.theta[s](static_cast<Eigen::Index>(p), k);
          if (lt) num += samples.psi[s](site, v) * samples.theta[s](static_cast<Eigen::Index>(p), K);
        }
        f = num / denom_sum;
      }
      if (!(f > 0.0)) throw NumericalError("perplexity: zero predictive probability");
      loglik += static_cast<double>(y) * std::log(f);
      Y += y;
    }
  }
  require(Y > 0, "perplexity: split holds out no tokens");
  return std::exp(-loglik / static_cast<double>(Y));
}

CvResult run_cv(const ModelConfig& cfg, const Corpus& corpus, int folds, double heldout_frac,
                std::uint64_t seed, const ChainLogger& log) {
  auto splits = make_splits(corpus, folds, heldout_frac, seed);
  CvResult result;
  result.folds = folds;
  result.heldout_frac = heldout_frac;
  result.seed = seed;
  for (int f = 0; f < folds; ++f) {
    Corpus train = training_corpus(corpus, splits[f]);
    ModelConfig fold_cfg = cfg;
    fold_cfg.sampler.store_draws = true;
    fold_cfg.sampler.seed = seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(f + 1));
    result.fold_seeds.push_back(fold_cfg.sampler.seed);
    if (log) log("fold " + std::to_string(f) + "/" + std::to_string(folds) + " fitting");
    PosteriorSamples samples = run_chains(fold_cfg, train, log);
    double perp = perplexity(samples, corpus, splits[f]);
    result.per_fold.push_back(perp);
    if (log) log("fold " + std::to_string(f) + " perplexity " + std::to_string(perp));
  }
  double total = 0.0;
  for (double v : result.per_fold) total += v;
  result.mean = total / folds;
  return result;
}

double percentile(std::vector<double> values, double p) {
  require(!values.empty(), "percentile of empty sample");
  require(p >= 0.0 && p <= 100.0, "percentile must lie in [0, 100]");
  std::sort(values.begin(), values.end());
  auto n = static_cast<long>(values.size());
  long rank = static_cast<long>(std::ceil(p / 100.0 * static_cast<double>(n)));
  rank = std::max(1L, std::min(rank, n));
  return values[rank - 1];
}

namespace {

std::vector<TopWord> top_of_row(const Eigen::MatrixXd& mean, int row,
                                const std::vector<std::string>& vocab, int n) {
  std::vector<int> order(vocab.size());
  for (std::size_t v = 0; v < vocab.size(); ++v) order[v] = static_cast<int>(v);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return mean(row, a) > mean(row, b); });
  std::vector<TopWord> out;
  for (int i = 0; i < n && i < static_cast<int>(order.size()); ++i)
    out.push_back({vocab[order[i]], mean(row, order[i])});
  return out;
}

}  // namespace

std::vector<TopWord> top_words(const PosteriorSamples& samples, const Corpus& corpus, int topic,
                               int n) {
  check_alignment(samples, corpus);
  require(topic >= 0 && topic < samples.K, "top_words: topic out of range");
  require(n >= 1, "top_words: n must be >= 1");
  return top_of_row(samples.phi_mean, topic, corpus.vocabulary, n);
}

std::vector<TopWord> top_local_words(const PosteriorSamples& samples, const Corpus& corpus,
                                     int site, int n) {
  check_alignment(samples, corpus);
  require(samples.slots > samples.K, "top_local_words: model has no local topics");
  require(site >= 0 && site < samples.M, "top_local_words: site out of range");
  require(n >= 1, "top_local_words: n must be >= 1");
  return top_of_row(samples.psi_mean, site, corpus.vocabulary, n);
}

PresenceSummary presence_summary(const PosteriorSamples& samples, int topic) {
  require(topic >= 0 && topic < samples.K, "presence_summary: topic out of range");
  require(samples.n_draws() > 0, "presence_summary: no draws");
  std::vector<double> counts(samples.n_draws());
  for (int s = 0; s < samples.n_draws(); ++s)
    counts[s] = samples.b[s].col(topic).cast<double>().sum();
  PresenceSummary out;
  out.topic = topic;
  double total = 0.0;
  for (double v : counts) total += v;
  out.mean = total / counts.size();
  out.lo = percentile(counts, 2.5);
  out.hi = percentile(counts, 97.5);
  const double M = samples.M;
  out.mean_pct = 100.0 * out.mean / M;
  out.lo_pct = 100.0 * out.lo / M;
  out.hi_pct = 100.0 * out.hi / M;
  return out;
}

std::vector<Contrast> effect_contrasts(const PosteriorSamples& samples, int topic,
                                       const std::vector<std::string>& cell_names) {
  require(samples.cfg.site_prior == SitePrior::Structured,
          "effect_contrasts requires the structured site prior");
  require(topic >= 0 && topic < samples.K, "effect_contrasts: topic out of range");
  require(samples.n_draws() > 0, "effect_contrasts: no draws");
  const bool named = static_cast<int>(cell_names.size()) == samples.Q;
  std::vector<Contrast> out;
  for (int a = 0; a < samples.Q; ++a)
    for (int bq = a + 1; bq < samples.Q; ++bq) {
      std::vector<double> diffs(samples.n_draws());
      for (int s = 0; s < samples.n_draws(); ++s)
        diffs[s] = samples.beta[s](topic, a) - samples.beta[s](topic, bq);
      Contrast ct;
      ct.topic = topic;
      ct.cell_a = a;
      ct.cell_b = bq;
      ct.label = named ? cell_names[a] + "-" + cell_names[bq]
                       : "c" + std::to_string(a) + "-c" + std::to_string(bq);
      double total = 0.0;
      for (double v : diffs) total += v;
      ct.mean = total / diffs.size();
      ct.lo = percentile(diffs, 2.5);
      ct.hi = percentile(diffs, 97.5);
      ct.excludes_zero = ct.lo > 0.0 || ct.hi < 0.0;
      out.push_back(std::move(ct));
    }
  return out;
}

std::vector<int> select_topics(const PosteriorSamples& samples, const SelectionCriteria& criteria) {
  double max_sites =
      criteria.max_sites < 0.0 ? std::floor(0.815 * samples.M) : criteria.max_sites;
  std::vector<int> out;
  for (int k = 0; k < samples.K; ++k) {
    PresenceSummary s = presence_summary(samples, k);
    if (s.mean >= criteria.min_sites && s.mean <= max_sites) out.push_back(k);
  }
  return out;
}

AutoPresenceCheck auto_presence_check(const PosteriorSamples& samples, const Corpus& corpus,
                                      int topic, double prob_threshold) {
  check_alignment(samples, corpus);
  require(topic >= 0 && topic < samples.K, "auto_presence_check: topic out of range");
  AutoPresenceCheck out;
  out.topic = topic;
  std::vector<int> word_ids;
  for (int v = 0; v < samples.V; ++v)
    if (samples.phi_mean(topic, v) > prob_threshold) word_ids.push_back(v);
  if (word_ids.empty()) {
    int best = 0;
    for (int v = 1; v < samples.V; ++v)
      if (samples.phi_mean(topic, v) > samples.phi_mean(topic, best)) best = v;
    word_ids.push_back(best);
  }
  for (int v : word_ids) out.words.push_back(corpus.vocabulary[v]);

  std::vector<std::string> regions = corpus.region_labels;
  if (regions.empty()) regions.assign(corpus.num_sites(), "all");
  std::vector<std::string> region_order;
  for (const auto& rgn : regions)
    if (std::find(region_order.begin(), region_order.end(), rgn) == region_order.end())
      region_order.push_back(rgn);

  for (const auto& rgn : region_order) {
    RegionCheckRow row;
    row.region = rgn;
    for (int i = 0; i < corpus.num_sites(); ++i) {
      if (regions[i] != rgn) continue;
      ++row.region_sites;
      std::set<std::int32_t> seen;
      for (const auto& page : corpus.sites[i].pages)
        for (auto t : page.tokens) seen.insert(t);
      bool all = true;
      for (int v : word_ids)
        if (!seen.count(v)) {
          all = false;
          break;
        }
      if (all) ++row.sites_with_all_words;
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

std::vector<std::string> missing_topic_sites(const PosteriorSamples& samples, const Corpus& corpus,
                                             int topic, double prob_threshold) {
  check_alignment(samples, corpus);
  require(topic >= 0 && topic < samples.K, "missing_topic_sites: topic out of range");
  std::vector<std::string> out;
  for (int i = 0; i < samples.M; ++i) {
    double absent = 1.0 - samples.b_mean(i, topic);
    if (absent >= prob_threshold) out.push_back(corpus.sites[i].site_id);
  }
  return out;
}

std::string format_interval(double mean, double lo, double hi, int decimals, bool star) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.*f(%.*f,%.*f)%s", decimals, mean, decimals, lo, decimals, hi,
                star ? "*" : "");
  return buf;
}

std::string render_top_words_table(const PosteriorSamples& samples, const Corpus& corpus,
                                   const std::vector<int>& topics, int n) {
  std::ostringstream os;
  os << "topic\ttop_words\n";
  for (int k : topics) {
    os << k << "\t";
    auto words = top_words(samples, corpus, k, n);
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (i) os << " ";
      char buf[32];
      std::snprintf(buf, sizeof buf, "(%.3f)", words[i].prob);
      os << words[i].word << buf;
    }
    os << "\n";
  }
  return os.str();
}

std::string render_local_top_words_table(const PosteriorSamples& samples, const Corpus& corpus,
                                         int n) {
  std::ostringstream os;
  os << "site\ttop_local_words\n";
  for (int i = 0; i < samples.M; ++i) {
    os << corpus.sites[i].site_id << "\t";
    auto words = top_local_words(samples, corpus, i, n);
    for (std::size_t w = 0; w < words.size(); ++w) {
      if (w) os << " ";
      char buf[32];
      std::snprintf(buf, sizeof buf, "(%.3f)", words[w].prob);
      os << words[w].word << buf;
    }
    os << "\n";
  }
  return os.str();
}

std::string render_presence_table(const PosteriorSamples& samples, const std::vector<int>& topics) {
  std::ostringstream os;
  os << "topic\tsites\tshare_pct\n";
  for (int k : topics) {
    PresenceSummary s = presence_summary(samples, k);
    os << k << "\t" << format_interval(s.mean, s.lo, s.hi, 0) << "\t"
       << format_interval(s.mean_pct, s.lo_pct, s.hi_pct, 1) << "\n";
  }
  return os.str();
}

std::string render_contrast_table(const PosteriorSamples& samples, const std::vector<int>& topics,
                                  const std::vector<std::string>& cell_names) {
  std::ostringstream os;
  os << "topic";
  if (!topics.empty()) {
    for (const auto& ct : effect_contrasts(samples, topics.front(), cell_names))
      os << "\t" << ct.label;
  }
  os << "\n";
  for (int k : topics) {
    os << k;
    for (const auto& ct : effect_contrasts(samples, k, cell_names))
      os << "\t" << format_interval(ct.mean, ct.lo, ct.hi, 2, ct.excludes_zero);
    os << "\n";
  }
  return os.str();
}

std::string render_auto_check_table(const PosteriorSamples& samples, const Corpus& corpus,
                                    const std::vector<int>& topics, double prob_threshold) {
  std::ostringstream os;
  os << "topic\twords\tregion\tsites_with_all_words\n";
  for (int k : topics) {
    AutoPresenceCheck chk = auto_presence_check(samples, corpus, k, prob_threshold);
    std::string words;
    for (std::size_t i = 0; i < chk.words.size(); ++i) {
      if (i) words += " ";
      words += chk.words[i];
    }
    for (const auto& row : chk.rows) {
      char buf[48];
      double pct = row.region_sites > 0
                       ? 100.0 * row.sites_with_all_words / static_cast<double>(row.region_sites)
                       : 0.0;
      std::snprintf(buf, sizeof buf, "%d(%.1f%%)", row.sites_with_all_words, pct);
      os << k << "\t" << words << "\t" << row.region << "\t" << buf << "\n";
    }
  }
  return os.str();
}

std::string render_missing_sites(const PosteriorSamples& samples, const Corpus& corpus,
                                 const std::vector<int>& topics, double prob_threshold) {
  std::ostringstream os;
  os << "topic\tmissing_sites\n";
  for (int k : topics) {
    auto sites = missing_topic_sites(samples, corpus, k, prob_threshold);
    os << k << "\t";
    for (std::size_t i = 0; i < sites.size(); ++i) {
      if (i) os << " ";
      os << sites[i];
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace hpfa
