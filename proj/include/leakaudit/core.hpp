#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "common.hpp"
#include "csv.hpp"
#include "snowflake.hpp"

namespace leakaudit {

using json = nlohmann::json;

/// One labeled item. `extra` carries unmapped input fields verbatim and is
/// ignored by every algorithm.
struct Record {
  std::string id;
  std::string text;
  std::string label;
  std::optional<std::string> event;
  std::optional<std::string> article_id;
  std::optional<std::int64_t> reply_count;
  std::optional<std::int64_t> timestamp_ms;  // derived from id
  json extra = json::object();

  bool operator==(const Record& other) const {
    return id == other.id && text == other.text && label == other.label && event == other.event &&
           article_id == other.article_id && reply_count == other.reply_count &&
           timestamp_ms == other.timestamp_ms && extra == other.extra;
  }
};

/// Ordered label vocabulary. Order is the tie-break order everywhere.
class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(std::vector<std::string> labels) : labels_(std::move(labels)) {
    for (std::size_t i = 0; i < labels_.size(); ++i) index_.emplace(labels_[i], i);
  }

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::size_t size() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }
  const std::string& operator[](std::size_t i) const { return labels_[i]; }

  std::optional<std::size_t> index_of(std::string_view label) const {
    auto it = index_.find(std::string(label));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  bool contains(std::string_view label) const { return index_of(label).has_value(); }

  bool has_duplicates() const noexcept { return index_.size() != labels_.size(); }

  bool operator==(const LabelSet& other) const { return labels_ == other.labels_; }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct Dataset {
  std::vector<Record> records;
  LabelSet label_set;
  std::string name;
  std::string source_notes;

  std::size_t size() const noexcept { return records.size(); }
  bool empty() const noexcept { return records.empty(); }

  bool operator==(const Dataset& other) const {
    return records == other.records && label_set == other.label_set && name == other.name &&
           source_notes == other.source_notes;
  }
};

using IdIndex = std::unordered_map<std::string, std::size_t>;

inline IdIndex index_ids(const Dataset& dataset) {
  IdIndex index;
  index.reserve(dataset.records.size());
  for (std::size_t i = 0; i < dataset.records.size(); ++i) index.emplace(dataset.records[i].id, i);
  return index;
}

/// Canonical ids are decimal, no leading zeros, in [1, 2^63 - 1].
inline std::optional<std::string> id_problem(std::string_view id) {
  const auto value = parse_u64(id);
  if (!value) return "id '" + std::string(id) + "' is not an unsigned 64-bit decimal";
  if (id.size() > 1 && id.front() == '0') return "id '" + std::string(id) + "' has leading zeros";
  if (*value == 0 || *value > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
    return "id '" + std::string(id) + "' outside [1, 2^63-1]";
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Validation

struct Violation {
  std::string record_id;  // empty for dataset-level rules
  std::string rule;
  std::string detail;
};

/// Checks every Record/Dataset invariant. Never throws on data.
inline std::vector<Violation> validate(const Dataset& dataset) {
  std::vector<Violation> out;
  if (dataset.label_set.empty()) out.push_back({"", "label_set_nonempty", "label set is empty"});
  if (dataset.label_set.has_duplicates()) {
    out.push_back({"", "label_set_distinct", "label set contains duplicates"});
  }
  std::unordered_map<std::string, std::size_t> seen;
  for (const auto& r : dataset.records) {
    if (const auto problem = id_problem(r.id)) {
      const bool range = parse_u64(r.id).has_value() && !(r.id.size() > 1 && r.id.front() == '0');
      out.push_back({r.id, range ? "id_range" : "id_format", *problem});
    }
    if (++seen[r.id] == 2) out.push_back({r.id, "id_unique", "duplicate id " + r.id});
    if (!dataset.label_set.contains(r.label)) {
      out.push_back({r.id, "label_known", "label '" + r.label + "' not in label set"});
    }
    if (r.reply_count && *r.reply_count < 0) {
      out.push_back({r.id, "reply_count_nonnegative", "reply_count " + std::to_string(*r.reply_count)});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Label distribution

/// Counts per label, aligned with a LabelSet (zero entries included).
struct LabelDistribution {
  LabelSet labels;
  std::vector<std::size_t> counts;

  std::size_t total() const noexcept {
    std::size_t t = 0;
    for (auto c : counts) t += c;
    return t;
  }
  std::size_t count(std::string_view label) const {
    auto i = labels.index_of(label);
    return i ? counts[*i] : 0;
  }
  std::map<std::string, std::size_t> as_map() const {
    std::map<std::string, std::size_t> m;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (counts[i]) m.emplace(labels[i], counts[i]);
    }
    return m;
  }
};

inline LabelDistribution label_distribution(const Dataset& dataset) {
  LabelDistribution d{dataset.label_set, std::vector<std::size_t>(dataset.label_set.size(), 0)};
  for (const auto& r : dataset.records) {
    if (auto i = dataset.label_set.index_of(r.label)) ++d.counts[*i];
  }
  return d;
}

// ---------------------------------------------------------------------------
// Ingestion

/// Sidecar description of an input file: label vocabulary plus the mapping
/// from canonical field names to the file's own keys/columns. An empty label
/// list means "infer labels in first-appearance order".
struct Manifest {
  std::string name;
  std::vector<std::string> labels;
  std::string id_field = "id";
  std::string text_field = "text";
  std::string label_field = "label";
  std::string event_field = "event";
  std::string article_field = "article_id";
  std::string reply_count_field = "reply_count";

  static Manifest with_labels(std::vector<std::string> labels) {
    Manifest m;
    m.labels = std::move(labels);
    return m;
  }

  static Manifest from_json(const json& j) {
    Manifest m;
    m.name = j.value("name", "");
    if (j.contains("labels")) m.labels = j.at("labels").get<std::vector<std::string>>();
    if (j.contains("fields")) {
      const auto& f = j.at("fields");
      m.id_field = f.value("id", m.id_field);
      m.text_field = f.value("text", m.text_field);
      m.label_field = f.value("label", m.label_field);
      m.event_field = f.value("event", m.event_field);
      m.article_field = f.value("article_id", m.article_field);
      m.reply_count_field = f.value("reply_count", m.reply_count_field);
    }
    return m;
  }

  json to_json() const {
    return json{{"name", name},
                {"labels", labels},
                {"fields",
                 {{"id", id_field},
                  {"text", text_field},
                  {"label", label_field},
                  {"event", event_field},
                  {"article_id", article_field},
                  {"reply_count", reply_count_field}}}};
  }
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorKind::Io, "read failed for " + path.string());
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

inline Manifest load_manifest(const std::filesystem::path& path) {
  try {
    return Manifest::from_json(json::parse(read_file(path)));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, "manifest " + path.string() + ": " + e.what());
  }
}

namespace detail {

class DatasetBuilder {
 public:
  explicit DatasetBuilder(const Manifest& manifest) : manifest_(manifest) {
    infer_labels_ = manifest.labels.empty();
    if (!infer_labels_) {
      labels_ = LabelSet(manifest.labels);
      if (labels_.has_duplicates()) throw Error(ErrorKind::Schema, "manifest labels contain duplicates");
    }
  }

  void add(Record r, std::size_t line) {
    const std::string where = "line " + std::to_string(line) + ": ";
    if (const auto problem = id_problem(r.id)) throw Error(ErrorKind::InvalidId, where + *problem);
    if (!ids_.insert(r.id).second) throw Error(ErrorKind::DuplicateId, where + "duplicate id " + r.id);
    if (infer_labels_) {
      if (!labels_.contains(r.label)) {
        auto v = labels_.labels();
        v.push_back(r.label);
        labels_ = LabelSet(std::move(v));
      }
    } else if (!labels_.contains(r.label)) {
      throw Error(ErrorKind::UnknownLabel, where + "label '" + r.label + "' not in manifest");
    }
    if (r.reply_count && *r.reply_count < 0) {
      throw Error(ErrorKind::Schema, where + "negative reply_count");
    }
    r.timestamp_ms = snowflake::timestamp_or_null(r.id);
    records_.push_back(std::move(r));
  }

  Dataset finish(std::string default_name) && {
    Dataset d;
    d.records = std::move(records_);
    d.label_set = std::move(labels_);
    d.name = manifest_.name.empty() ? std::move(default_name) : manifest_.name;
    return d;
  }

 private:
  const Manifest& manifest_;
  bool infer_labels_ = false;
  LabelSet labels_;
  std::set<std::string> ids_;
  std::vector<Record> records_;
};

inline std::optional<std::string> optional_string(const json& v, const std::string& where, const char* field) {
  if (v.is_null()) return std::nullopt;
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return v.dump();
  throw Error(ErrorKind::Schema, where + field + " must be a string or null");
}

inline std::optional<std::int64_t> parse_reply_count(std::string_view s, const std::string& where) {
  if (s.empty()) return std::nullopt;
  const bool negative = s.front() == '-';
  const auto magnitude = parse_u64(negative ? s.substr(1) : s);
  if (!magnitude || *magnitude > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
    throw Error(ErrorKind::Schema, where + "reply_count '" + std::string(s) + "' is not an integer");
  }
  const auto v = static_cast<std::int64_t>(*magnitude);
  return negative ? -v : v;
}

}  // namespace detail

/// Dataset name used when the manifest does not name one.
inline std::string stem_of(const std::filesystem::path& path) { return path.stem().string(); }

/// One JSON object per line. Blank lines are skipped. Errors carry the line.
inline Dataset parse_jsonl(std::string_view content, const Manifest& manifest, std::string name = "dataset") {
  detail::DatasetBuilder builder(manifest);
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    const std::size_t nl = content.find('\n', pos);
    std::string_view line = content.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? content.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::Parse, where + "malformed JSON (" + e.what() + ")");
    }
    if (!obj.is_object()) throw Error(ErrorKind::Parse, where + "expected a JSON object");

    Record r;
    const auto& m = manifest;
    if (!obj.contains(m.id_field)) throw Error(ErrorKind::Schema, where + "missing field '" + m.id_field + "'");
    const json& id = obj.at(m.id_field);
    if (id.is_string()) {
      r.id = id.get<std::string>();
    } else if (id.is_number_unsigned() || (id.is_number_integer() && id.get<std::int64_t>() >= 0)) {
      r.id = std::to_string(id.get<std::uint64_t>());
    } else {
      throw Error(ErrorKind::InvalidId, where + "id must be a decimal string");
    }
    if (!obj.contains(m.label_field) || !obj.at(m.label_field).is_string()) {
      throw Error(ErrorKind::Schema, where + "missing or non-string '" + m.label_field + "'");
    }
    r.label = obj.at(m.label_field).get<std::string>();
    if (obj.contains(m.text_field)) {
      const auto& t = obj.at(m.text_field);
      if (t.is_string()) {
        r.text = t.get<std::string>();
      } else if (!t.is_null()) {
        throw Error(ErrorKind::Schema, where + "'" + m.text_field + "' must be a string");
      }
    }
    if (obj.contains(m.event_field)) r.event = detail::optional_string(obj.at(m.event_field), where, "event");
    if (obj.contains(m.article_field)) {
      r.article_id = detail::optional_string(obj.at(m.article_field), where, "article_id");
    }
    if (obj.contains(m.reply_count_field)) {
      const auto& rc = obj.at(m.reply_count_field);
      if (rc.is_number_integer()) {
        r.reply_count = rc.get<std::int64_t>();
      } else if (!rc.is_null()) {
        throw Error(ErrorKind::Schema, where + "reply_count must be an integer or null");
      }
    }
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      const auto& k = it.key();
      if (k == m.id_field || k == m.text_field || k == m.label_field || k == m.event_field ||
          k == m.article_field || k == m.reply_count_field) {
        continue;
      }
      r.extra[k] = it.value();
    }
    builder.add(std::move(r), line_no);
  }
  return std::move(builder).finish(std::move(name));
}

/// Header row required. Empty optional cells read as absent; empty extra
/// cells are dropped.
inline Dataset parse_csv(std::string_view content, const Manifest& manifest, std::string name = "dataset") {
  const auto rows = csv::parse(content);
  if (rows.empty()) throw Error(ErrorKind::Schema, "missing header row");
  const auto& header = rows.front().fields;
  auto column = [&](const std::string& field) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == field) return i;
    }
    return std::nullopt;
  };
  const auto& m = manifest;
  const auto id_col = column(m.id_field);
  const auto label_col = column(m.label_field);
  if (!id_col) throw Error(ErrorKind::Schema, "header lacks '" + m.id_field + "' column");
  if (!label_col) throw Error(ErrorKind::Schema, "header lacks '" + m.label_field + "' column");
  const auto text_col = column(m.text_field);
  const auto event_col = column(m.event_field);
  const auto article_col = column(m.article_field);
  const auto reply_col = column(m.reply_count_field);

  detail::DatasetBuilder builder(manifest);
  for (std::size_t r_i = 1; r_i < rows.size(); ++r_i) {
    const auto& row = rows[r_i];
    if (row.fields.size() == 1 && row.fields.front().empty()) continue;
    const std::string where = "line " + std::to_string(row.line) + ": ";
    if (row.fields.size() != header.size()) {
      throw Error(ErrorKind::Parse, where + "expected " + std::to_string(header.size()) + " fields, got " +
                                        std::to_string(row.fields.size()));
    }
    Record r;
    r.id = row.fields[*id_col];
    r.label = row.fields[*label_col];
    if (text_col) r.text = row.fields[*text_col];
    auto opt = [&](std::optional<std::size_t> col) -> std::optional<std::string> {
      if (!col || row.fields[*col].empty()) return std::nullopt;
      return row.fields[*col];
    };
    r.event = opt(event_col);
    r.article_id = opt(article_col);
    if (reply_col) r.reply_count = detail::parse_reply_count(row.fields[*reply_col], where);
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c == id_col || c == label_col || c == text_col || c == event_col || c == article_col || c == reply_col) {
        continue;
      }
      if (!row.fields[c].empty()) r.extra[header[c]] = row.fields[c];
    }
    builder.add(std::move(r), row.line);
  }
  return std::move(builder).finish(std::move(name));
}

inline Dataset load_jsonl(const std::filesystem::path& path, const Manifest& manifest) {
  return parse_jsonl(read_file(path), manifest, stem_of(path));
}

inline Dataset load_csv(const std::filesystem::path& path, const Manifest& manifest) {
  return parse_csv(read_file(path), manifest, stem_of(path));
}

/// Dispatches on extension: .csv is CSV, everything else JSONL.
inline Dataset load_dataset(const std::filesystem::path& path, const Manifest& manifest) {
  return path.extension() == ".csv" ? load_csv(path, manifest) : load_jsonl(path, manifest);
}

// ---------------------------------------------------------------------------
// Serialization (canonical field names)

inline json record_to_json(const Record& r) {
  json j = r.extra;
  j["id"] = r.id;
  j["text"] = r.text;
  j["label"] = r.label;
  j["event"] = r.event ? json(*r.event) : json(nullptr);
  j["article_id"] = r.article_id ? json(*r.article_id) : json(nullptr);
  j["reply_count"] = r.reply_count ? json(*r.reply_count) : json(nullptr);
  return j;
}

inline std::string to_jsonl(const Dataset& dataset) {
  std::string out;
  for (const auto& r : dataset.records) {
    out += record_to_json(r).dump(-1, ' ', false, json::error_handler_t::replace);
    out.push_back('\n');
  }
  return out;
}

inline std::string to_csv(const Dataset& dataset) {
  std::set<std::string> extra_keys;
  for (const auto& r : dataset.records) {
    for (auto it = r.extra.begin(); it != r.extra.end(); ++it) extra_keys.insert(it.key());
  }
  std::vector<std::string> header{"id", "text", "label", "event", "article_id", "reply_count"};
  header.insert(header.end(), extra_keys.begin(), extra_keys.end());
  std::string out = csv::join_row(header);
  for (const auto& r : dataset.records) {
    std::vector<std::string> row{r.id,
                                 r.text,
                                 r.label,
                                 r.event.value_or(""),
                                 r.article_id.value_or(""),
                                 r.reply_count ? std::to_string(*r.reply_count) : ""};
    for (const auto& k : extra_keys) {
      if (!r.extra.contains(k)) {
        row.emplace_back();
      } else if (const auto& v = r.extra.at(k); v.is_string()) {
        row.push_back(v.get<std::string>());
      } else {
        row.push_back(v.dump());
      }
    }
    out += csv::join_row(row);
  }
  return out;
}

inline void save_jsonl(const Dataset& dataset, const std::filesystem::path& path) {
  write_file(path, to_jsonl(dataset));
}

inline void save_csv(const Dataset& dataset, const std::filesystem::path& path) {
  write_file(path, to_csv(dataset));
}

inline void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  path.extension() == ".csv" ? save_csv(dataset, path) : save_jsonl(dataset, path);
}

/// Returns a copy restricted to `keep` (dataset order), with the same label set.
template <typename Pred>
Dataset filter_records(const Dataset& dataset, Pred keep) {
  Dataset out;
  out.label_set = dataset.label_set;
  out.name = dataset.name;
  out.source_notes = dataset.source_notes;
  for (const auto& r : dataset.records) {
    if (keep(r)) out.records.push_back(r);
  }
  return out;
}

}  // namespace leakaudit
