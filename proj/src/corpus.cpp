#include "hpfa/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "hpfa/errors.hpp"

namespace hpfa {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

struct CovariateTable {
  std::vector<std::string> names;
  bool categorical = false;
  std::vector<std::string> site_ids;             // row order
  std::vector<std::vector<std::string>> fields;  // raw cells per row
};

CovariateTable read_covariate_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open covariates file: " + path);
  CovariateTable table;
  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) throw ValidationError(path + ": empty covariates file");
  ++lineno;
  auto header = split_csv_line(line);
  if (header.empty() || lower(header[0]) != "site_id")
    throw ValidationError(path + ": first covariate column must be site_id");
  table.names.assign(header.begin() + 1, header.end());
  for (const auto& n : table.names)
    if (n.empty()) throw ValidationError(path + ": empty covariate column name");
  table.categorical = table.names.size() == 1 && lower(table.names[0]) == "region";
  std::unordered_set<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw ValidationError(path + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size()));
    if (fields[0].empty())
      throw ValidationError(path + ":" + std::to_string(lineno) + ": empty site_id");
    if (!seen.insert(fields[0]).second)
      throw ValidationError(path + ":" + std::to_string(lineno) + ": duplicate site_id " +
                            fields[0]);
    table.site_ids.push_back(fields[0]);
    table.fields.emplace_back(fields.begin() + 1, fields.end());
  }
  return table;
}

double parse_number(const std::string& cell, const std::string& where) {
  if (cell.empty()) throw ValidationError(where + ": empty numeric cell");
  char* end = nullptr;
  double v = std::strtod(cell.c_str(), &end);
  if (end != cell.c_str() + cell.size() || !std::isfinite(v))
    throw ValidationError(where + ": cannot parse numeric value '" + cell + "'");
  return v;
}

void attach_covariates(Corpus& corpus, const CovariateTable& table, const std::string& path) {
  const int M = corpus.num_sites();
  std::unordered_map<std::string, int> site_index;
  for (int i = 0; i < M; ++i) site_index.emplace(corpus.sites[i].site_id, i);
  for (const auto& sid : table.site_ids)
    if (!site_index.count(sid))
      throw ValidationError(path + ": covariate row for unknown site " + sid);
  std::vector<int> row_of_site(M, -1);
  for (std::size_t r = 0; r < table.site_ids.size(); ++r)
    row_of_site[site_index[table.site_ids[r]]] = static_cast<int>(r);
  for (int i = 0; i < M; ++i)
    if (row_of_site[i] < 0)
      throw ValidationError(path + ": no covariate row for site " + corpus.sites[i].site_id);

  if (table.categorical) {
    // One-hot cell means, levels in first-appearance order.
    std::vector<std::string> levels;
    std::unordered_map<std::string, int> level_index;
    for (std::size_t r = 0; r < table.fields.size(); ++r) {
      const std::string& v = table.fields[r][0];
      if (v.empty()) throw ValidationError(path + ": empty region value");
      if (level_index.emplace(v, static_cast<int>(levels.size())).second) levels.push_back(v);
    }
    corpus.covariate_names = levels;
    corpus.covariates = Eigen::MatrixXd::Zero(M, static_cast<Eigen::Index>(levels.size()));
    corpus.region_labels.resize(M);
    for (int i = 0; i < M; ++i) {
      const std::string& v = table.fields[row_of_site[i]][0];
      corpus.covariates(i, level_index[v]) = 1.0;
      corpus.region_labels[i] = v;
    }
  } else {
    const int Q = static_cast<int>(table.names.size());
    corpus.covariate_names = table.names;
    corpus.covariates.resize(M, Q);
    for (int i = 0; i < M; ++i)
      for (int q = 0; q < Q; ++q)
        corpus.covariates(i, q) =
            parse_number(table.fields[row_of_site[i]][q], path + " site " + corpus.sites[i].site_id);
  }
}

}  // namespace

int Corpus::num_pages() const {
  int n = 0;
  for (const auto& s : sites) n += static_cast<int>(s.pages.size());
  return n;
}

long Corpus::total_tokens() const {
  long n = 0;
  for (const auto& s : sites)
    for (const auto& p : s.pages) n += static_cast<long>(p.tokens.size());
  return n;
}

std::vector<PageRef> page_refs(const Corpus& corpus) {
  std::vector<PageRef> refs;
  refs.reserve(corpus.num_pages());
  for (int i = 0; i < corpus.num_sites(); ++i)
    for (int j = 0; j < static_cast<int>(corpus.sites[i].pages.size()); ++j)
      refs.push_back({i, j});
  return refs;
}

void validate_corpus(const Corpus& corpus, bool allow_empty_pages) {
  for (std::size_t v = 0; v + 1 < corpus.vocabulary.size(); ++v)
    if (!(corpus.vocabulary[v] < corpus.vocabulary[v + 1]))
      throw ValidationError("vocabulary is not sorted and unique");
  for (const auto& w : corpus.vocabulary)
    if (w.empty()) throw ValidationError("vocabulary contains an empty word");
  const auto V = static_cast<std::int32_t>(corpus.vocabulary.size());
  std::unordered_set<std::string> site_ids;
  for (const auto& site : corpus.sites) {
    if (site.site_id.empty()) throw ValidationError("empty site_id");
    if (!site_ids.insert(site.site_id).second)
      throw ValidationError("duplicate site_id " + site.site_id);
    std::unordered_set<std::string> page_ids;
    for (const auto& page : site.pages) {
      if (page.page_id.empty()) throw ValidationError("empty page_id in site " + site.site_id);
      if (!page_ids.insert(page.page_id).second)
        throw ValidationError("duplicate page_id " + page.page_id + " in site " + site.site_id);
      if (page.tokens.empty() && !allow_empty_pages)
        throw ValidationError("page " + page.page_id + " in site " + site.site_id + " is empty");
      for (auto t : page.tokens)
        if (t < 0 || t >= V)
          throw ValidationError("token id out of range in page " + page.page_id);
    }
  }
  if (corpus.covariates.size() > 0 || !corpus.covariate_names.empty()) {
    if (corpus.covariates.rows() != corpus.num_sites())
      throw ValidationError("covariate rows do not match number of sites");
    if (corpus.covariates.cols() != static_cast<Eigen::Index>(corpus.covariate_names.size()))
      throw ValidationError("covariate columns do not match covariate names");
    if (!corpus.covariates.allFinite()) throw ValidationError("covariates contain non-finite values");
  }
  if (!corpus.region_labels.empty() &&
      corpus.region_labels.size() != static_cast<std::size_t>(corpus.num_sites()))
    throw ValidationError("region labels do not match number of sites");
}

Corpus load_corpus(const std::string& pages_path, const std::string& covariates_path) {
  std::ifstream in(pages_path);
  if (!in) throw ValidationError("cannot open pages file: " + pages_path);

  Corpus corpus;
  std::unordered_map<std::string, int> site_index;
  std::vector<std::vector<std::vector<std::string>>> raw_tokens;  // [site][page][token]
  std::vector<std::unordered_set<std::string>> page_ids_per_site;

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError(pages_path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    const std::string where = pages_path + ":" + std::to_string(lineno);
    if (!j.is_object() || !j.contains("site_id") || !j.contains("page_id") || !j.contains("tokens"))
      throw ValidationError(where + ": expected object with site_id, page_id, tokens");
    if (!j["site_id"].is_string() || !j["page_id"].is_string() || !j["tokens"].is_array())
      throw ValidationError(where + ": wrong field types");
    std::string site_id = j["site_id"].get<std::string>();
    std::string page_id = j["page_id"].get<std::string>();
    if (site_id.empty() || page_id.empty())
      throw ValidationError(where + ": empty site_id or page_id");
    if (j["tokens"].empty()) throw ValidationError(where + ": page has no tokens");

    auto [it, inserted] = site_index.emplace(site_id, static_cast<int>(corpus.sites.size()));
    if (inserted) {
      corpus.sites.push_back({site_id, {}});
      raw_tokens.emplace_back();
      page_ids_per_site.emplace_back();
    }
    int si = it->second;
    if (!page_ids_per_site[si].insert(page_id).second)
      throw ValidationError(where + ": duplicate page " + page_id + " in site " + site_id);
    corpus.sites[si].pages.push_back({page_id, {}});
    auto& toks = raw_tokens[si].emplace_back();
    toks.reserve(j["tokens"].size());
    for (const auto& t : j["tokens"]) {
      if (!t.is_string() || t.get<std::string>().empty())
        throw ValidationError(where + ": tokens must be nonempty strings");
      toks.push_back(t.get<std::string>());
    }
  }
  if (corpus.sites.empty()) throw ValidationError(pages_path + ": no pages found");

  std::map<std::string, std::int32_t> vocab_index;
  for (const auto& site : raw_tokens)
    for (const auto& page : site)
      for (const auto& tok : page) vocab_index.emplace(tok, 0);
  corpus.vocabulary.reserve(vocab_index.size());
  for (auto& [word, id] : vocab_index) {
    id = static_cast<std::int32_t>(corpus.vocabulary.size());
    corpus.vocabulary.push_back(word);
  }
  for (int i = 0; i < corpus.num_sites(); ++i)
    for (std::size_t p = 0; p < raw_tokens[i].size(); ++p) {
      auto& out = corpus.sites[i].pages[p].tokens;
      out.reserve(raw_tokens[i][p].size());
      for (const auto& tok : raw_tokens[i][p]) out.push_back(vocab_index[tok]);
    }

  if (!covariates_path.empty())
    attach_covariates(corpus, read_covariate_csv(covariates_path), covariates_path);
  else
    corpus.covariates.resize(corpus.num_sites(), 0);

  validate_corpus(corpus);
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& pages_path,
                 const std::string& covariates_path) {
  std::ofstream out(pages_path);
  if (!out) throw ValidationError("cannot write pages file: " + pages_path);
  for (const auto& site : corpus.sites)
    for (const auto& page : site.pages) {
      json j;
      j["site_id"] = site.site_id;
      j["page_id"] = page.page_id;
      auto toks = json::array();
      for (auto t : page.tokens) toks.push_back(corpus.vocabulary[t]);
      j["tokens"] = std::move(toks);
      out << j.dump() << "\n";
    }
  if (covariates_path.empty()) return;
  std::ofstream cov(covariates_path);
  if (!cov) throw ValidationError("cannot write covariates file: " + covariates_path);
  if (!corpus.region_labels.empty()) {
    cov << "site_id,region\n";
    for (int i = 0; i < corpus.num_sites(); ++i)
      cov << corpus.sites[i].site_id << "," << corpus.region_labels[i] << "\n";
  } else {
    cov << "site_id";
    for (const auto& n : corpus.covariate_names) cov << "," << n;
    cov << "\n";
    char buf[64];
    for (int i = 0; i < corpus.num_sites(); ++i) {
      cov << corpus.sites[i].site_id;
      for (Eigen::Index q = 0; q < corpus.covariates.cols(); ++q) {
        std::snprintf(buf, sizeof buf, "%.17g", corpus.covariates(i, q));
        cov << "," << buf;
      }
      cov << "\n";
    }
  }
}

Corpus filter_corpus(const Corpus& corpus, int min_pages_per_word, int min_words_per_page,
                     int max_words_per_page, int max_pages_per_site) {
  if (min_pages_per_word < 0 || min_words_per_page < 0 || max_words_per_page < min_words_per_page ||
      max_pages_per_site < 1)
    throw ValidationError("filter_corpus: invalid thresholds");

  // Word pass: page frequency over distinct pages.
  std::vector<int> page_freq(corpus.vocab_size(), 0);
  {
    std::vector<std::int32_t> last_page(corpus.vocab_size(), -1);
    std::int32_t page_no = 0;
    for (const auto& site : corpus.sites)
      for (const auto& page : site.pages) {
        for (auto t : page.tokens)
          if (last_page[t] != page_no) {
            last_page[t] = page_no;
            ++page_freq[t];
          }
        ++page_no;
      }
  }
  std::vector<char> keep_word(corpus.vocab_size());
  for (int v = 0; v < corpus.vocab_size(); ++v) keep_word[v] = page_freq[v] >= min_pages_per_word;

  // Page pass, then site truncation.
  Corpus out;
  std::vector<char> word_used(corpus.vocab_size(), 0);
  std::vector<int> kept_site_rows;
  for (int i = 0; i < corpus.num_sites(); ++i) {
    SiteRecord site{corpus.sites[i].site_id, {}};
    for (const auto& page : corpus.sites[i].pages) {
      if (static_cast<int>(site.pages.size()) >= max_pages_per_site) break;
      std::vector<std::int32_t> toks;
      toks.reserve(page.tokens.size());
      for (auto t : page.tokens)
        if (keep_word[t]) toks.push_back(t);
      auto len = static_cast<int>(toks.size());
      if (len < min_words_per_page || len > max_words_per_page) continue;
      for (auto t : toks) word_used[t] = 1;
      site.pages.push_back({page.page_id, std::move(toks)});
    }
    if (!site.pages.empty()) {
      out.sites.push_back(std::move(site));
      kept_site_rows.push_back(i);
    }
  }

  // Remap to the surviving vocabulary (a subset of a sorted list stays sorted).
  std::vector<std::int32_t> new_id(corpus.vocab_size(), -1);
  for (int v = 0; v < corpus.vocab_size(); ++v)
    if (word_used[v]) {
      new_id[v] = static_cast<std::int32_t>(out.vocabulary.size());
      out.vocabulary.push_back(corpus.vocabulary[v]);
    }
  for (auto& site : out.sites)
    for (auto& page : site.pages)
      for (auto& t : page.tokens) t = new_id[t];

  const auto kept = static_cast<Eigen::Index>(kept_site_rows.size());
  out.covariate_names = corpus.covariate_names;
  out.covariates.resize(kept, corpus.covariates.cols());
  for (Eigen::Index r = 0; r < kept; ++r) out.covariates.row(r) = corpus.covariates.row(kept_site_rows[r]);
  if (!corpus.region_labels.empty()) {
    out.region_labels.reserve(kept_site_rows.size());
    for (int r : kept_site_rows) out.region_labels.push_back(corpus.region_labels[r]);
  }
  return out;
}

std::vector<HoldoutSplit> make_splits(const Corpus& corpus, int folds, double heldout_frac,
                                      std::uint64_t seed) {
  if (folds < 1) throw ValidationError("make_splits: folds must be >= 1");
  if (!(heldout_frac > 0.0 && heldout_frac < 1.0))
    throw ValidationError("make_splits: heldout_frac must lie in (0, 1)");
  auto refs = page_refs(corpus);
  std::vector<HoldoutSplit> splits(folds);
  for (int f = 0; f < folds; ++f) {
    RngStream rng(seed, static_cast<std::uint64_t>(f));
    auto& split = splits[f];
    split.fold = f;
    split.heldout_positions.resize(refs.size());
    split.zero_heldout.assign(refs.size(), 0);
    for (std::size_t p = 0; p < refs.size(); ++p) {
      const auto& tokens = corpus.sites[refs[p].site].pages[refs[p].page].tokens;
      const auto len = static_cast<int>(tokens.size());
      int n = std::min(static_cast<int>(std::llround(heldout_frac * len)), len - 1);
      if (n <= 0) {
        split.zero_heldout[p] = 1;
        continue;
      }
      std::vector<std::int32_t> idx(len);
      for (int i = 0; i < len; ++i) idx[i] = i;
      for (int i = 0; i < n; ++i) {
        int j = std::uniform_int_distribution<int>(i, len - 1)(rng.engine());
        std::swap(idx[i], idx[j]);
      }
      idx.resize(n);
      std::sort(idx.begin(), idx.end());
      split.heldout_positions[p] = std::move(idx);
    }
  }
  return splits;
}

void save_splits(const std::vector<HoldoutSplit>& splits, const Corpus& corpus,
                 const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write splits file: " + path);
  auto refs = page_refs(corpus);
  for (const auto& split : splits) {
    if (split.heldout_positions.size() != refs.size())
      throw ValidationError("save_splits: split does not match corpus");
    for (std::size_t p = 0; p < refs.size(); ++p) {
      json j;
      j["fold"] = split.fold;
      j["site_id"] = corpus.sites[refs[p].site].site_id;
      j["page_id"] = corpus.sites[refs[p].site].pages[refs[p].page].page_id;
      j["heldout_positions"] = split.heldout_positions[p];
      out << j.dump() << "\n";
    }
  }
}

std::vector<HoldoutSplit> load_splits(const std::string& path, const Corpus& corpus) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open splits file: " + path);
  auto refs = page_refs(corpus);
  std::unordered_map<std::string, std::size_t> flat;
  for (std::size_t p = 0; p < refs.size(); ++p)
    flat.emplace(corpus.sites[refs[p].site].site_id + "\x1f" +
                     corpus.sites[refs[p].site].pages[refs[p].page].page_id,
                 p);
  std::map<int, HoldoutSplit> by_fold;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError(where + ": " + e.what());
    }
    if (!j.contains("fold") || !j.contains("site_id") || !j.contains("page_id") ||
        !j.contains("heldout_positions") || !j["fold"].is_number_integer() ||
        !j["heldout_positions"].is_array())
      throw ValidationError(where + ": expected fold, site_id, page_id, heldout_positions");
    int fold = j["fold"].get<int>();
    if (fold < 0) throw ValidationError(where + ": negative fold");
    auto key = j["site_id"].get<std::string>() + "\x1f" + j["page_id"].get<std::string>();
    auto it = flat.find(key);
    if (it == flat.end())
      throw ValidationError(where + ": page not present in corpus: " + j["page_id"].get<std::string>());
    auto& split = by_fold[fold];
    if (split.heldout_positions.empty()) {
      split.fold = fold;
      split.heldout_positions.resize(refs.size());
      split.zero_heldout.assign(refs.size(), 1);
    }
    std::size_t p = it->second;
    if (!split.zero_heldout[p] || !split.heldout_positions[p].empty())
      throw ValidationError(where + ": duplicate page in fold " + std::to_string(fold));
    const auto& page_tokens = corpus.sites[refs[p].site].pages[refs[p].page].tokens;
    std::vector<std::int32_t> pos;
    for (const auto& v : j["heldout_positions"]) {
      if (!v.is_number_integer()) throw ValidationError(where + ": positions must be integers");
      auto i = v.get<std::int64_t>();
      if (i < 0 || i >= static_cast<std::int64_t>(page_tokens.size()))
        throw ValidationError(where + ": held-out position out of range");
      pos.push_back(static_cast<std::int32_t>(i));
    }
    std::sort(pos.begin(), pos.end());
    if (std::adjacent_find(pos.begin(), pos.end()) != pos.end())
      throw ValidationError(where + ": duplicate held-out position");
    split.zero_heldout[p] = pos.empty() ? 1 : 0;
    split.heldout_positions[p] = std::move(pos);
  }
  std::vector<HoldoutSplit> splits;
  splits.reserve(by_fold.size());
  for (auto& [fold, split] : by_fold) splits.push_back(std::move(split));
  if (splits.empty()) throw ValidationError(path + ": no split records found");
  return splits;
}

Corpus training_corpus(const Corpus& corpus, const HoldoutSplit& split) {
  auto refs = page_refs(corpus);
  if (split.heldout_positions.size() != refs.size())
    throw ValidationError("training_corpus: split does not match corpus");
  Corpus out = corpus;
  for (std::size_t p = 0; p < refs.size(); ++p) {
    const auto& held = split.heldout_positions[p];
    if (held.empty()) continue;
    auto& tokens = out.sites[refs[p].site].pages[refs[p].page].tokens;
    std::vector<std::int32_t> kept;
    kept.reserve(tokens.size() - held.size());
    std::size_t h = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (h < held.size() && static_cast<std::int32_t>(i) == held[h]) {
        ++h;
        continue;
      }
      kept.push_back(tokens[i]);
    }
    tokens = std::move(kept);
  }
  return out;
}

std::vector<std::vector<std::pair<std::int32_t, std::int32_t>>> heldout_counts(
    const Corpus& corpus, const HoldoutSplit& split) {
  auto refs = page_refs(corpus);
  if (split.heldout_positions.size() != refs.size())
    throw ValidationError("heldout_counts: split does not match corpus");
  std::vector<std::vector<std::pair<std::int32_t, std::int32_t>>> out(refs.size());
  for (std::size_t p = 0; p < refs.size(); ++p) {
    const auto& tokens = corpus.sites[refs[p].site].pages[refs[p].page].tokens;
    std::map<std::int32_t, std::int32_t> counts;
    for (auto pos : split.heldout_positions[p]) {
      if (pos < 0 || pos >= static_cast<std::int32_t>(tokens.size()))
        throw ValidationError("heldout_counts: position out of range");
      ++counts[tokens[pos]];
    }
    out[p].assign(counts.begin(), counts.end());
  }
  return out;
}

std::uint64_t fnv1a_file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file for hashing: " + path);
  std::uint64_t h = 14695981039346656037ULL;
  char buf[65536];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    auto n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace hpfa
