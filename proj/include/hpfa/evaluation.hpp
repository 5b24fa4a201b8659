#pragma once

#include <string>
#include <vector>

#include "hpfa/corpus.hpp"
#include "hpfa/model.hpp"
#include "hpfa/sampler.hpp"

namespace hpfa {

// Held-out perplexity exp(-(1/Y) sum_v y_v log f_v) over all held-out tokens,
// Y being the total held-out token count.  The predictive word probability
// pools numerator and denominator over posterior draws,
//   f_v = sum_s mix_s(v) / sum_s sum_k theta_s,k,
// unless per_sample_average is set, which averages the per-draw ratios
// instead.  The samples must have been fitted on the training portion of the
// same corpus and stored with per-draw mixtures.
double perplexity(const PosteriorSamples& samples, const Corpus& corpus, const HoldoutSplit& split,
                  bool per_sample_average = false);

struct CvResult {
  std::vector<double> per_fold;
  std::vector<std::uint64_t> fold_seeds;
  double mean = 0.0;
  int folds = 0;
  double heldout_frac = 0.0;
  std::uint64_t seed = 0;
};

// Fits one model per fold on the training portion and evaluates held-out
// perplexity on the rest; folds are independent random partitions.
CvResult run_cv(const ModelConfig& cfg, const Corpus& corpus, int folds, double heldout_frac,
                std::uint64_t seed, const ChainLogger& log = {});

// Nearest-rank percentile of a sample (p in [0, 100]).
double percentile(std::vector<double> values, double p);

struct TopWord {
  std::string word;
  double prob;
};
// Highest posterior-mean probability words of a global topic, or of the
// local topic of one site.
std::vector<TopWord> top_words(const PosteriorSamples& samples, const Corpus& corpus, int topic,
                               int n);
std::vector<TopWord> top_local_words(const PosteriorSamples& samples, const Corpus& corpus,
                                     int site, int n);

// Posterior summary of the number of sites where a topic is present, with
// 95% interval (2.5 and 97.5 nearest-rank percentiles).
struct PresenceSummary {
  int topic = 0;
  double mean = 0.0, lo = 0.0, hi = 0.0;           // site counts
  double mean_pct = 0.0, lo_pct = 0.0, hi_pct = 0.0;  // share of sites
};
PresenceSummary presence_summary(const PosteriorSamples& samples, int topic);

// Pairwise covariate-cell contrasts beta_k,a - beta_k,b with 95% intervals;
// excludes_zero marks intervals bounded away from zero.
struct Contrast {
  int topic = 0;
  int cell_a = 0, cell_b = 0;
  std::string label;
  double mean = 0.0, lo = 0.0, hi = 0.0;
  bool excludes_zero = false;
};
std::vector<Contrast> effect_contrasts(const PosteriorSamples& samples, int topic,
                                       const std::vector<std::string>& cell_names = {});

// Keeps topics whose posterior mean site count lies in
// [min_sites, max_sites]; max_sites < 0 defaults to floor(0.815 M).
struct SelectionCriteria {
  double min_sites = 20.0;
  double max_sites = -1.0;
};
std::vector<int> select_topics(const PosteriorSamples& samples,
                               const SelectionCriteria& criteria = {});

// Checks whether a topic's characteristic words (posterior mean probability
// above prob_threshold, or the single top word when none qualifies) all occur
// verbatim at each site, broken down by region.
struct RegionCheckRow {
  std::string region;
  int sites_with_all_words = 0;
  int region_sites = 0;
};
struct AutoPresenceCheck {
  int topic = 0;
  std::vector<std::string> words;
  std::vector<RegionCheckRow> rows;
};
AutoPresenceCheck auto_presence_check(const PosteriorSamples& samples, const Corpus& corpus,
                                      int topic, double prob_threshold = 0.1);

// Sites whose posterior probability of lacking the topic is at least
// prob_threshold.
std::vector<std::string> missing_topic_sites(const PosteriorSamples& samples, const Corpus& corpus,
                                             int topic, double prob_threshold = 0.975);

// Interval formatting used by the report tables: "47(42,54)" with 0 decimals,
// "2.29(0.93,3.83)" with 2; star appends "*".
std::string format_interval(double mean, double lo, double hi, int decimals, bool star = false);

// Plain-text report tables.
std::string render_top_words_table(const PosteriorSamples& samples, const Corpus& corpus,
                                   const std::vector<int>& topics, int n);
std::string render_local_top_words_table(const PosteriorSamples& samples, const Corpus& corpus,
                                         int n);
std::string render_presence_table(const PosteriorSamples& samples, const std::vector<int>& topics);
std::string render_contrast_table(const PosteriorSamples& samples, const std::vector<int>& topics,
                                  const std::vector<std::string>& cell_names = {});
std::string render_auto_check_table(const PosteriorSamples& samples, const Corpus& corpus,
                                    const std::vector<int>& topics, double prob_threshold = 0.1);
std::string render_missing_sites(const PosteriorSamples& samples, const Corpus& corpus,
                                 const std::vector<int>& topics, double prob_threshold = 0.975);

}  // namespace hpfa
