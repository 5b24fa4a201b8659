#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hpfa/rng.hpp"

namespace hpfa {

// Tokens are stored as indices into Corpus::vocabulary.
struct PageRecord {
  std::string page_id;
  std::vector<std::int32_t> tokens;
};

struct SiteRecord {
  std::string site_id;
  std::vector<PageRecord> pages;
};

// Two-level corpus: pages nested in sites, with optional site covariates.
// Sites and pages keep their first-appearance order from the input; the
// vocabulary is the sorted set of distinct token strings.
struct Corpus {
  std::vector<SiteRecord> sites;
  std::vector<std::string> vocabulary;
  Eigen::MatrixXd covariates;                // num_sites x Q, Q may be 0
  std::vector<std::string> covariate_names;  // length Q
  std::vector<std::string> region_labels;    // per site, only for categorical covariates

  int num_sites() const { return static_cast<int>(sites.size()); }
  int num_pages() const;
  int vocab_size() const { return static_cast<int>(vocabulary.size()); }
  long total_tokens() const;
};

// Flattened (site, page) coordinates in corpus order.
struct PageRef {
  int site;
  int page;
};
std::vector<PageRef> page_refs(const Corpus& corpus);

// Throws ValidationError on violated invariants (unsorted vocabulary,
// out-of-range token ids, empty pages unless allowed, covariate shape).
void validate_corpus(const Corpus& corpus, bool allow_empty_pages = false);

// pages_path: JSONL, one page per line with site_id, page_id, tokens.
// covariates_path: CSV keyed by site_id; empty string means no covariates.
// A single column named "region" is treated as categorical and expanded to
// one-hot cell-means columns in first-appearance order.
Corpus load_corpus(const std::string& pages_path, const std::string& covariates_path = "");
void save_corpus(const Corpus& corpus, const std::string& pages_path,
                 const std::string& covariates_path = "");

// Single pass in word -> page -> site order: drop words that appear in fewer
// than min_pages_per_word pages, then pages whose filtered token count lies
// outside [min_words_per_page, max_words_per_page], then truncate each site
// to its first max_pages_per_site surviving pages.  Unused words are removed
// from the vocabulary and token ids are remapped.
Corpus filter_corpus(const Corpus& corpus, int min_pages_per_word = 20,
                     int min_words_per_page = 50, int max_words_per_page = 1000,
                     int max_pages_per_site = 100);

// Held-out token positions per page, in flattened page order.
struct HoldoutSplit {
  int fold = 0;
  std::vector<std::vector<std::int32_t>> heldout_positions;  // sorted per page
  std::vector<std::uint8_t> zero_heldout;                    // 1 if page too short to hold out
};

// Independent random partitions, one per fold.  Holds out
// min(round(frac * len), len - 1) positions per page so every page keeps at
// least one training token; single-token pages are flagged instead.
std::vector<HoldoutSplit> make_splits(const Corpus& corpus, int folds, double heldout_frac,
                                      std::uint64_t seed);
void save_splits(const std::vector<HoldoutSplit>& splits, const Corpus& corpus,
                 const std::string& path);
std::vector<HoldoutSplit> load_splits(const std::string& path, const Corpus& corpus);

// Copy of the corpus with held-out positions removed; sites, pages, ordering
// and vocabulary are unchanged.
Corpus training_corpus(const Corpus& corpus, const HoldoutSplit& split);
// Per page (word id, count) pairs over held-out positions, flattened order.
std::vector<std::vector<std::pair<std::int32_t, std::int32_t>>> heldout_counts(
    const Corpus& corpus, const HoldoutSplit& split);

// FNV-1a 64-bit hash of a file's bytes; used to fingerprint inputs in run
// manifests.
std::uint64_t fnv1a_file_hash(const std::string& path);
std::string hash_hex(std::uint64_t h);

}  // namespace hpfa
