#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <tuple>
#include <locale>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "common.hpp"
#include "core.hpp"
#include "csv.hpp"
#include "split.hpp"

namespace leakaudit {

// ---------------------------------------------------------------------------
// Text normalization

namespace detail {

inline const std::ctype<wchar_t>& wide_ctype() {
  static const std::locale loc = [] {
    for (const char* name : {"C.UTF-8", "C.utf8", "en_US.UTF-8"}) {
      try {
        return std::locale(name);
      } catch (const std::runtime_error&) {
      }
    }
    return std::locale::classic();
  }();
  return std::use_facet<std::ctype<wchar_t>>(loc);
}

// Decodes one UTF-8 sequence at text[pos]; returns U+FFFD and advances one
// byte on malformed input.
inline char32_t next_code_point(std::string_view text, std::size_t& pos) {
  const auto b0 = static_cast<unsigned char>(text[pos]);
  auto cont = [&](std::size_t i) -> int {
    if (pos + i >= text.size()) return -1;
    const auto b = static_cast<unsigned char>(text[pos + i]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) {
    ++pos;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++pos;
    return 0xFFFD;
  }
  for (int i = 1; i < len; ++i) {
    const int c = cont(static_cast<std::size_t>(i));
    if (c < 0) {
      ++pos;
      return 0xFFFD;
    }
    cp = (cp << 6) | static_cast<char32_t>(c);
  }
  pos += static_cast<std::size_t>(len);
  return cp;
}

inline void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

inline char32_t lower(char32_t cp) {
  if (cp < 0x80) return (cp >= 'A' && cp <= 'Z') ? cp + 32 : cp;
  return static_cast<char32_t>(wide_ctype().tolower(static_cast<wchar_t>(cp)));
}

inline bool is_alnum(char32_t cp) {
  if (cp < 0x80) return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
  if (cp == 0xFFFD) return false;
  return wide_ctype().is(std::ctype_base::alnum, static_cast<wchar_t>(cp));
}

inline bool starts_url(std::string_view text, std::size_t pos) {
  auto match = [&](std::string_view prefix) {
    if (text.size() - pos < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
      char c = text[pos + i];
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 32);
      if (c != prefix[i]) return false;
    }
    return true;
  };
  if (pos > 0) {
    const char prev = text[pos - 1];
    if ((prev >= 'a' && prev <= 'z') || (prev >= 'A' && prev <= 'Z') || (prev >= '0' && prev <= '9')) return false;
  }
  return match("http://") || match("https://") || match("www.");
}

inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

// Copies text with URLs (http://, https://, www. up to whitespace) blanked.
inline std::string strip_urls(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    if ((text[i] == 'h' || text[i] == 'H' || text[i] == 'w' || text[i] == 'W') && starts_url(text, i)) {
      while (i < text.size() && !is_space(text[i])) ++i;
      out.push_back(' ');
      continue;
    }
    out.push_back(text[i++]);
  }
  return out;
}

}  // namespace detail

/// Lowercased maximal alphanumeric runs with URLs removed. Sigils (@, #)
/// fall away as separators.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  const std::string clean = detail::strip_urls(text);
  std::string current;
  for (std::size_t pos = 0; pos < clean.size();) {
    const char32_t cp = detail::next_code_point(clean, pos);
    if (detail::is_alnum(cp)) {
      detail::append_utf8(current, detail::lower(cp));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

/// Key for exact-duplicate detection: lowercased, URLs removed, whitespace
/// collapsed and trimmed.
inline std::string normalize_text(std::string_view text) {
  const std::string clean = detail::strip_urls(text);
  std::string out;
  bool pending_space = false;
  for (std::size_t pos = 0; pos < clean.size();) {
    if (detail::is_space(clean[pos])) {
      pending_space = true;
      ++pos;
      continue;
    }
    const char32_t cp = detail::next_code_point(clean, pos);
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    detail::append_utf8(out, detail::lower(cp));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Keyword / label association

enum class KeywordMatch { Token, Substring };

struct KeywordTable {
  LabelSet labels;
  std::vector<std::pair<std::string, std::vector<std::size_t>>> rows;  // keyword -> counts (LabelSet order)
  std::size_t skipped_empty = 0;

  std::size_t count(std::string_view keyword, std::string_view label) const {
    const auto li = labels.index_of(label);
    for (const auto& [k, counts] : rows) {
      if (k == keyword && li) return counts[*li];
    }
    return 0;
  }
};

/// Records whose text contains each keyword (uncased), per label. Token mode
/// matches the keyword's token sequence contiguously; substring mode matches
/// the lowercased text.
inline KeywordTable keyword_label_table(const Dataset& dataset, const std::vector<std::string>& keywords,
                                        KeywordMatch mode = KeywordMatch::Token) {
  if (keywords.empty()) throw Error(ErrorKind::InvalidArgument, "no keywords given");
  KeywordTable table;
  table.labels = dataset.label_set;
  std::vector<std::vector<std::string>> patterns;
  std::vector<std::string> lowered;
  for (const auto& k : keywords) {
    table.rows.emplace_back(k, std::vector<std::size_t>(dataset.label_set.size(), 0));
    patterns.push_back(tokenize(k));
    lowered.push_back(normalize_text(k));
  }
  for (const auto& r : dataset.records) {
    if (r.text.empty()) {
      ++table.skipped_empty;
      continue;
    }
    const auto li = dataset.label_set.index_of(r.label);
    if (!li) continue;
    if (mode == KeywordMatch::Token) {
      const auto tokens = tokenize(r.text);
      for (std::size_t k = 0; k < patterns.size(); ++k) {
        const auto& p = patterns[k];
        if (p.empty()) continue;
        const bool hit = std::search(tokens.begin(), tokens.end(), p.begin(), p.end()) != tokens.end();
        if (hit) ++table.rows[k].second[*li];
      }
    } else {
      const auto text = normalize_text(r.text);
      for (std::size_t k = 0; k < lowered.size(); ++k) {
        if (!lowered[k].empty() && text.find(lowered[k]) != std::string::npos) ++table.rows[k].second[*li];
      }
    }
  }
  return table;
}

struct TokenStats {
  std::string token;
  std::size_t doc_freq = 0;
  std::vector<std::size_t> per_label_counts;  // LabelSet order
  std::vector<double> log_odds;               // one-vs-rest, LabelSet order
  double max_abs_log_odds = 0.0;
  std::string top_label;                      // label attaining max |log-odds|
  std::vector<std::string> excluded_labels;   // present labels with zero occurrences

  bool label_excluding() const noexcept { return !excluded_labels.empty(); }
};

struct TokenScan {
  LabelSet labels;
  std::vector<TokenStats> tokens;  // ranked
  std::size_t skipped_empty = 0;
  std::size_t min_df = 0;

  const TokenStats* find(std::string_view token) const {
    for (const auto& t : tokens) {
      if (t.token == token) return &t;
    }
    return nullptr;
  }
};

namespace detail {

struct DocFreq {
  std::unordered_map<std::string, std::vector<std::size_t>> counts;  // token -> per-label doc freq
  std::vector<std::size_t> label_docs;                               // non-empty records per label
  std::size_t skipped_empty = 0;
};

inline DocFreq doc_frequencies(const Dataset& dataset) {
  DocFreq df;
  df.label_docs.assign(dataset.label_set.size(), 0);
  std::vector<std::string> unique;
  for (const auto& r : dataset.records) {
    if (r.text.empty()) {
      ++df.skipped_empty;
      continue;
    }
    const auto li = dataset.label_set.index_of(r.label);
    if (!li) continue;
    ++df.label_docs[*li];
    unique = tokenize(r.text);
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    for (auto& t : unique) {
      auto& v = df.counts[t];
      if (v.empty()) v.assign(dataset.label_set.size(), 0);
      ++v[*li];
    }
  }
  return df;
}

}  // namespace detail

/// Smoothed log odds ratio of the 2x2 (token present/absent x label/rest)
/// table, add-0.5 in every cell.
inline double smoothed_log_odds(double with_token_in_label, double label_total, double with_token_in_rest,
                                double rest_total) {
  const double a = with_token_in_label + 0.5;
  const double b = label_total - with_token_in_label + 0.5;
  const double c = with_token_in_rest + 0.5;
  const double d = rest_total - with_token_in_rest + 0.5;
  return std::log((a * d) / (b * c));
}

/// Tokens with doc_freq >= min_df ranked by max |log-odds| over labels
/// (then doc_freq descending, then token).
inline TokenScan scan_discriminative_tokens(const Dataset& dataset, std::size_t min_df = 5) {
  const auto df = detail::doc_frequencies(dataset);
  TokenScan scan;
  scan.labels = dataset.label_set;
  scan.skipped_empty = df.skipped_empty;
  scan.min_df = min_df;
  const std::size_t n_docs = std::accumulate(df.label_docs.begin(), df.label_docs.end(), std::size_t{0});
  for (const auto& [token, counts] : df.counts) {
    const std::size_t total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
    if (total < min_df) continue;
    TokenStats s;
    s.token = token;
    s.doc_freq = total;
    s.per_label_counts = counts;
    double best = -1.0;
    for (std::size_t l = 0; l < counts.size(); ++l) {
      const double label_n = static_cast<double>(df.label_docs[l]);
      const double lo = smoothed_log_odds(static_cast<double>(counts[l]), label_n,
                                          static_cast<double>(total - counts[l]),
                                          static_cast<double>(n_docs) - label_n);
      s.log_odds.push_back(lo);
      if (df.label_docs[l] > 0 && std::abs(lo) > best) {
        best = std::abs(lo);
        s.top_label = dataset.label_set[l];
      }
      if (df.label_docs[l] > 0 && counts[l] == 0) s.excluded_labels.push_back(dataset.label_set[l]);
    }
    s.max_abs_log_odds = std::max(best, 0.0);
    scan.tokens.push_back(std::move(s));
  }
  std::sort(scan.tokens.begin(), scan.tokens.end(), [](const TokenStats& a, const TokenStats& b) {
    if (a.max_abs_log_odds != b.max_abs_log_odds) return a.max_abs_log_odds > b.max_abs_log_odds;
    if (a.doc_freq != b.doc_freq) return a.doc_freq > b.doc_freq;
    return a.token < b.token;
  });
  return scan;
}

struct ScatterRow {
  std::string token;
  double freq_in_target = 0.0;  // per 1000 target records
  double freq_in_rest = 0.0;    // per 1000 other records
};

/// Plot data for one label against the rest. Rows sorted by token.
inline std::vector<ScatterRow> class_scatter_data(const Dataset& dataset, std::string_view target_label,
                                                  std::size_t min_df = 1) {
  const auto target = dataset.label_set.index_of(target_label);
  if (!target) throw Error(ErrorKind::UnknownLabel, "label '" + std::string(target_label) + "' not in label set");
  const auto df = detail::doc_frequencies(dataset);
  const double n_target = static_cast<double>(df.label_docs[*target]);
  const double n_rest =
      static_cast<double>(std::accumulate(df.label_docs.begin(), df.label_docs.end(), std::size_t{0})) - n_target;
  std::vector<ScatterRow> rows;
  for (const auto& [token, counts] : df.counts) {
    const std::size_t total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
    if (total < min_df) continue;
    const double in_target = static_cast<double>(counts[*target]);
    const double in_rest = static_cast<double>(total) - in_target;
    rows.push_back({token, n_target > 0 ? 1000.0 * in_target / n_target : 0.0,
                    n_rest > 0 ? 1000.0 * in_rest / n_rest : 0.0});
  }
  std::sort(rows.begin(), rows.end(), [](const ScatterRow& a, const ScatterRow& b) { return a.token < b.token; });
  return rows;
}

// ---------------------------------------------------------------------------
// Duplicate detection

namespace detail {

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Hashed word 3-shingles (a single shingle when the text has < 3 tokens),
/// sorted and unique.
inline std::vector<std::uint64_t> shingles(std::string_view text) {
  const auto tokens = tokenize(text);
  std::vector<std::uint64_t> out;
  if (tokens.empty()) return out;
  const std::size_t width = std::min<std::size_t>(3, tokens.size());
  for (std::size_t i = 0; i + width <= tokens.size(); ++i) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t j = 0; j < width; ++j) {
      h = fnv1a(tokens[i + j], h);
      h = fnv1a(std::string_view("\x1f", 1), h);
    }
    out.push_back(mix64(h));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace detail

/// Exact Jaccard similarity of two sorted unique sets.
inline double jaccard(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t i = 0, j = 0, inter = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++inter;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

/// Word 3-shingle Jaccard similarity of two texts.
inline double text_jaccard(std::string_view a, std::string_view b) {
  return jaccard(detail::shingles(a), detail::shingles(b));
}

struct NearDupOptions {
  double threshold = 0.8;
  std::size_t num_perm = 128;
  std::size_t bands = 32;  // rows per band = num_perm / bands
  std::size_t max_bucket = 1000;  // larger LSH buckets are checked against their first member only
  unsigned threads = 0;
};

/// Distinct normalized texts with their member records and all verified
/// (Jaccard >= threshold) pairs between them.
struct NearDupIndex {
  std::vector<std::string> texts;                      // normalized
  std::vector<std::vector<std::size_t>> members;       // record indices per text
  std::vector<std::tuple<std::size_t, std::size_t, double>> pairs;  // (text a < text b, jaccard)
  std::size_t skipped_empty = 0;
  std::size_t candidate_pairs = 0;
};

inline bool id_less(const std::string& a, const std::string& b) {
  return a.size() != b.size() ? a.size() < b.size() : a < b;
}

/// Builds the index over `subset` (record indices; all records when empty).
inline NearDupIndex build_near_dup_index(const Dataset& dataset, const NearDupOptions& opt,
                                         const std::vector<std::size_t>* subset = nullptr) {
  if (!(opt.threshold > 0.0 && opt.threshold <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "jaccard threshold must be in (0, 1]");
  }
  if (opt.bands == 0 || opt.num_perm % opt.bands != 0) {
    throw Error(ErrorKind::InvalidArgument, "num_perm must be a multiple of bands");
  }
  NearDupIndex index;
  std::unordered_map<std::string, std::size_t> text_id;
  auto visit = [&](std::size_t i) {
    const auto norm = normalize_text(dataset.records[i].text);
    if (norm.empty()) {
      ++index.skipped_empty;
      return;
    }
    auto [it, inserted] = text_id.try_emplace(norm, index.texts.size());
    if (inserted) {
      index.texts.push_back(norm);
      index.members.emplace_back();
    }
    index.members[it->second].push_back(i);
  };
  if (subset) {
    for (auto i : *subset) visit(i);
  } else {
    for (std::size_t i = 0; i < dataset.records.size(); ++i) visit(i);
  }
  text_id.clear();

  const std::size_t n = index.texts.size();
  const std::size_t rows = opt.num_perm / opt.bands;
  // Band keys only; full signatures are never materialized.
  std::vector<std::uint32_t> band_keys(n * opt.bands);
  auto sketch = [&](std::size_t begin, std::size_t end) {
    std::vector<std::uint64_t> sig(opt.num_perm);
    for (std::size_t d = begin; d < end; ++d) {
      const auto sh = detail::shingles(index.texts[d]);
      std::fill(sig.begin(), sig.end(), ~std::uint64_t{0});
      for (auto s : sh) {
        for (std::size_t p = 0; p < opt.num_perm; ++p) {
          const std::uint64_t h = mix64(s ^ (0xA0761D6478BD642FULL * (p + 1)));
          if (h < sig[p]) sig[p] = h;
        }
      }
      for (std::size_t b = 0; b < opt.bands; ++b) {
        std::uint64_t h = 0x243F6A8885A308D3ULL ^ b;
        for (std::size_t r = 0; r < rows; ++r) h = mix64(h ^ sig[b * rows + r]);
        band_keys[d * opt.bands + b] = static_cast<std::uint32_t>(h >> 32);
      }
    }
  };
  unsigned workers = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
  if (workers <= 1 || n < 4096) {
    sketch(0, n);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t b = std::min(n, w * chunk), e = std::min(n, b + chunk);
      pool.emplace_back(sketch, b, e);
    }
  }

  std::unordered_set<std::uint64_t> candidates;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> bucket(n);
  for (std::size_t b = 0; b < opt.bands; ++b) {
    for (std::size_t d = 0; d < n; ++d) bucket[d] = {band_keys[d * opt.bands + b], static_cast<std::uint32_t>(d)};
    std::sort(bucket.begin(), bucket.end());
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i + 1;
      while (j < n && bucket[j].first == bucket[i].first) ++j;
      auto add = [&](std::uint32_t a, std::uint32_t c) {
        if (a > c) std::swap(a, c);
        candidates.insert((static_cast<std::uint64_t>(a) << 32) | c);
      };
      if (j - i > opt.max_bucket) {
        for (std::size_t x = i + 1; x < j; ++x) add(bucket[i].second, bucket[x].second);
      } else {
        for (std::size_t x = i; x < j; ++x) {
          for (std::size_t y = x + 1; y < j; ++y) add(bucket[x].second, bucket[y].second);
        }
      }
      i = j;
    }
  }
  band_keys.clear();
  band_keys.shrink_to_fit();
  index.candidate_pairs = candidates.size();

  std::vector<std::uint64_t> sorted(candidates.begin(), candidates.end());
  std::sort(sorted.begin(), sorted.end());
  std::unordered_map<std::size_t, std::vector<std::uint64_t>> cache;
  auto shingles_of = [&](std::size_t d) -> const std::vector<std::uint64_t>& {
    auto it = cache.find(d);
    if (it == cache.end()) it = cache.emplace(d, detail::shingles(index.texts[d])).first;
    return it->second;
  };
  for (auto key : sorted) {
    const auto a = static_cast<std::size_t>(key >> 32);
    const auto c = static_cast<std::size_t>(key & 0xFFFFFFFFu);
    const double j = jaccard(shingles_of(a), shingles_of(c));
    if (j >= opt.threshold) index.pairs.emplace_back(a, c, j);
  }
  return index;
}

enum class DuplicateKind { Exact, Near };

struct DuplicateCluster {
  std::vector<std::string> member_ids;  // numeric id order
  DuplicateKind kind = DuplicateKind::Exact;
  std::string representative_id;
  double pairwise_min_jaccard = 1.0;
  std::size_t near_member_count = 0;  // members whose text differs from the representative's
};

struct DuplicateReport {
  std::vector<DuplicateCluster> clusters;
  std::size_t skipped_empty = 0;
  std::size_t distinct_texts = 0;
  std::size_t candidate_pairs = 0;
  std::size_t verified_pairs = 0;

  std::size_t count(DuplicateKind kind) const {
    return static_cast<std::size_t>(
        std::count_if(clusters.begin(), clusters.end(), [&](const auto& c) { return c.kind == kind; }));
  }
};

namespace detail {
struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};
}  // namespace detail

/// Exact clusters share a normalized text. Near clusters are connected
/// components of verified pairs between distinct texts; their members include
/// exact copies, and components can chain, so pairwise_min_jaccard may fall
/// below the threshold.
inline DuplicateReport find_duplicates(const Dataset& dataset, double jaccard_threshold = 0.8,
                                       NearDupOptions opt = {}) {
  opt.threshold = jaccard_threshold;
  const auto index = build_near_dup_index(dataset, opt);
  DuplicateReport report;
  report.skipped_empty = index.skipped_empty;
  report.distinct_texts = index.texts.size();
  report.candidate_pairs = index.candidate_pairs;
  report.verified_pairs = index.pairs.size();

  auto ids_of = [&](std::size_t text) {
    std::vector<std::string> ids;
    for (auto i : index.members[text]) ids.push_back(dataset.records[i].id);
    std::sort(ids.begin(), ids.end(), id_less);
    return ids;
  };

  for (std::size_t t = 0; t < index.texts.size(); ++t) {
    if (index.members[t].size() < 2) continue;
    DuplicateCluster c;
    c.kind = DuplicateKind::Exact;
    c.member_ids = ids_of(t);
    c.representative_id = c.member_ids.front();
    report.clusters.push_back(std::move(c));
  }

  detail::UnionFind uf(index.texts.size());
  for (const auto& [a, b, j] : index.pairs) uf.unite(a, b);
  std::map<std::size_t, std::vector<std::size_t>> components;
  for (const auto& [a, b, j] : index.pairs) {
    components[uf.find(a)];
  }
  for (std::size_t t = 0; t < index.texts.size(); ++t) {
    auto it = components.find(uf.find(t));
    if (it != components.end()) it->second.push_back(t);
  }
  for (const auto& [root, texts] : components) {
    DuplicateCluster c;
    c.kind = DuplicateKind::Near;
    // Representative: smallest id of the most-copied text.
    std::size_t rep_text = texts.front();
    std::string rep_id;
    for (auto t : texts) {
      const auto ids = ids_of(t);
      const auto rep_size = index.members[rep_text].size();
      if (rep_id.empty() || index.members[t].size() > rep_size ||
          (index.members[t].size() == rep_size && id_less(ids.front(), rep_id))) {
        rep_text = t;
        rep_id = ids.front();
      }
      c.member_ids.insert(c.member_ids.end(), ids.begin(), ids.end());
    }
    std::sort(c.member_ids.begin(), c.member_ids.end(), id_less);
    c.representative_id = rep_id;
    c.near_member_count = c.member_ids.size() - index.members[rep_text].size();
    double min_j = 1.0;
    if (texts.size() <= 200) {
      std::vector<std::vector<std::uint64_t>> sh;
      for (auto t : texts) sh.push_back(detail::shingles(index.texts[t]));
      for (std::size_t x = 0; x < sh.size(); ++x) {
        for (std::size_t y = x + 1; y < sh.size(); ++y) min_j = std::min(min_j, jaccard(sh[x], sh[y]));
      }
    } else {
      for (const auto& [a, b, j] : index.pairs) {
        if (uf.find(a) == root) min_j = std::min(min_j, j);
      }
    }
    c.pairwise_min_jaccard = min_j;
    report.clusters.push_back(std::move(c));
  }
  std::sort(report.clusters.begin(), report.clusters.end(), [](const auto& a, const auto& b) {
    if (a.member_ids.front() != b.member_ids.front()) return id_less(a.member_ids.front(), b.member_ids.front());
    return a.kind < b.kind;
  });
  return report;
}

struct ContaminationPair {
  std::string train_id;
  std::string other_id;
  Partition other_partition = Partition::Test;
  double jaccard = 1.0;
};

/// Verified duplicate pairs between train and test/dev, sorted by Jaccard
/// descending (then train id, other id).
inline std::vector<ContaminationPair> cross_split_contamination(const Dataset& dataset, const Split& split,
                                                                double jaccard_threshold = 0.8,
                                                                NearDupOptions opt = {}) {
  opt.threshold = jaccard_threshold;
  const auto id_index = index_ids(dataset);
  std::vector<std::size_t> subset;
  std::vector<int> part(dataset.records.size(), -1);
  for (auto p : {Partition::Train, Partition::Dev, Partition::Test}) {
    for (const auto& id : split.part(p)) {
      auto it = id_index.find(id);
      if (it == id_index.end()) continue;
      part[it->second] = static_cast<int>(p);
      subset.push_back(it->second);
    }
  }
  std::sort(subset.begin(), subset.end());
  const auto index = build_near_dup_index(dataset, opt, &subset);

  std::vector<ContaminationPair> out;
  auto emit = [&](std::size_t ta, std::size_t tb, double j) {
    for (auto a : index.members[ta]) {
      if (part[a] != static_cast<int>(Partition::Train)) continue;
      for (auto b : index.members[tb]) {
        if (part[b] == static_cast<int>(Partition::Train) || part[b] < 0) continue;
        out.push_back({dataset.records[a].id, dataset.records[b].id, static_cast<Partition>(part[b]), j});
      }
    }
  };
  for (std::size_t t = 0; t < index.texts.size(); ++t) emit(t, t, 1.0);
  for (const auto& [a, b, j] : index.pairs) {
    emit(a, b, j);
    emit(b, a, j);
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    if (x.jaccard != y.jaccard) return x.jaccard > y.jaccard;
    if (x.train_id != y.train_id) return id_less(x.train_id, y.train_id);
    return id_less(x.other_id, y.other_id);
  });
  return out;
}

// ---------------------------------------------------------------------------
// CSV exports

inline std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string token_stats_csv(const TokenScan& scan) {
  std::vector<std::string> header{"token", "doc_freq"};
  for (const auto& l : scan.labels.labels()) header.push_back("count_" + l);
  for (const auto& l : scan.labels.labels()) header.push_back("log_odds_" + l);
  header.insert(header.end(), {"max_abs_log_odds", "top_label", "excluded_labels"});
  std::string out = csv::join_row(header);
  for (const auto& t : scan.tokens) {
    std::vector<std::string> row{t.token, std::to_string(t.doc_freq)};
    for (auto c : t.per_label_counts) row.push_back(std::to_string(c));
    for (auto lo : t.log_odds) row.push_back(format_real(lo));
    std::string excluded;
    for (const auto& l : t.excluded_labels) excluded += (excluded.empty() ? "" : ";") + l;
    row.insert(row.end(), {format_real(t.max_abs_log_odds), t.top_label, excluded});
    out += csv::join_row(row);
  }
  return out;
}

inline std::string scatter_csv(const std::vector<ScatterRow>& rows) {
  std::string out = "token,freq_in_target,freq_in_rest\n";
  for (const auto& r : rows) out += csv::join_row({r.token, format_real(r.freq_in_target), format_real(r.freq_in_rest)});
  return out;
}

inline std::string duplicates_csv(const DuplicateReport& report) {
  std::string out = "cluster_id,kind,representative_id,member_id,pairwise_min_jaccard\n";
  for (std::size_t c = 0; c < report.clusters.size(); ++c) {
    const auto& cl = report.clusters[c];
    for (const auto& id : cl.member_ids) {
      out += csv::join_row({std::to_string(c), cl.kind == DuplicateKind::Exact ? "exact" : "near",
                            cl.representative_id, id, format_real(cl.pairwise_min_jaccard)});
    }
  }
  return out;
}

inline std::string contamination_csv(const std::vector<ContaminationPair>& pairs) {
  std::string out = "train_id,other_id,other_partition,jaccard\n";
  for (const auto& p : pairs) {
    out += csv::join_row({p.train_id, p.other_id, std::string(kPartitionNames[static_cast<std::size_t>(p.other_partition)]),
                          format_real(p.jaccard)});
  }
  return out;
}

}  // namespace leakaudit
