#pragma once

// Reading manifest ingest, tokenization and vocabulary filtering.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"

#include "readpath/dates.hpp"
#include "readpath/error.hpp"
#include "readpath/parallel.hpp"

namespace readpath {

struct VolumeRecord {
  std::string id;
  std::string title;
  Date read_date;
  std::size_t read_seq = 0;
  int pub_year = 0;
  std::filesystem::path text_path;

  friend bool operator==(const VolumeRecord&, const VolumeRecord&) = default;
};

struct TokenizerConfig {
  std::uint64_t min_count = 30;
  std::uint64_t max_count = 15000;
  std::filesystem::path stopword_path;

  static constexpr std::uint64_t unbounded = std::numeric_limits<std::uint64_t>::max();
};

using Stopwords = std::unordered_set<std::string>;

struct TermCount {
  std::uint32_t term = 0;
  std::uint32_t count = 0;

  friend bool operator==(const TermCount&, const TermCount&) = default;
};

// Token strings in lexicographic order; index i is the dense id of tokens[i].
class Vocabulary {
public:
  Vocabulary() = default;
  Vocabulary(std::vector<std::string> tokens, std::vector<std::uint64_t> frequency)
      : tokens_(std::move(tokens)), frequency_(std::move(frequency)) {
    for (std::size_t i = 0; i < tokens_.size(); ++i)
      index_.emplace(tokens_[i], static_cast<std::uint32_t>(i));
  }

  std::size_t size() const noexcept { return tokens_.size(); }
  const std::string& token(std::size_t i) const { return tokens_.at(i); }
  std::uint64_t frequency(std::size_t i) const { return frequency_.at(i); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  const std::vector<std::uint64_t>& frequencies() const noexcept { return frequency_; }

  std::optional<std::uint32_t> find(std::string_view token) const {
    auto it = index_.find(std::string(token));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_ && a.frequency_ == b.frequency_;
  }

private:
  std::vector<std::string> tokens_;
  std::vector<std::uint64_t> frequency_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

// Sparse per-document counts, documents in reading order, terms ascending.
struct CorpusMatrix {
  std::vector<std::vector<TermCount>> documents;

  std::size_t size() const noexcept { return documents.size(); }

  std::uint64_t document_length(std::size_t d) const {
    std::uint64_t n = 0;
    for (const auto& tc : documents.at(d)) n += tc.count;
    return n;
  }

  std::uint64_t total() const {
    std::uint64_t n = 0;
    for (std::size_t d = 0; d < documents.size(); ++d) n += document_length(d);
    return n;
  }

  friend bool operator==(const CorpusMatrix&, const CorpusMatrix&) = default;
};

struct IngestStats {
  std::size_t documents = 0;
  std::uint64_t tokens_before_filter = 0;
  std::uint64_t tokens = 0;
  std::size_t vocabulary_size = 0;

  friend bool operator==(const IngestStats&, const IngestStats&) = default;
};

struct Corpus {
  std::vector<VolumeRecord> records;
  Vocabulary vocabulary;
  CorpusMatrix matrix;
  IngestStats stats;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto first = s.find_first_not_of(ws);
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(ws);
  return std::string(s.substr(first, last - first + 1));
}

// RFC 4180 records: quoted fields may hold commas, doubled quotes and newlines.
inline std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool row_has_content = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
    case '"':
      quoted = true;
      row_has_content = true;
      break;
    case ',':
      row.push_back(std::move(field));
      field.clear();
      row_has_content = true;
      break;
    case '\r':
      break;
    case '\n':
      if (row_has_content || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      row_has_content = false;
      break;
    default:
      field.push_back(c);
      row_has_content = true;
    }
  }
  if (row_has_content || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string read_file(const std::filesystem::path& path, const std::string& module) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(module, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// ASCII replacements for U+0100..U+017F.
inline const std::array<std::string_view, 128>& latin_extended_a() {
  static const std::array<std::string_view, 128> table = [] {
    std::array<std::string_view, 128> t{};
    static constexpr std::string_view runs[] = {
        "AaAaAaCcCcCcCcDdDdEeEeEeEeEeGgGgGgGgHhHhIiIiIiIiIi", // 0100-0131
        "JjKkkLlLlLlLlLlNnNnNn",                              // 0134-0148
        "NnOoOoOo",                                           // 014A-0151
        "RrRrRrSsSsSsSsTtTtTtUuUuUuUuUuUuWwYyYZzZzZzs",       // 0154-017F
    };
    auto fill = [&t](std::size_t from, std::string_view run) {
      for (std::size_t i = 0; i < run.size(); ++i) t[from + i] = run.substr(i, 1);
    };
    fill(0x00, runs[0]);
    t[0x32] = "IJ";
    t[0x33] = "ij";
    fill(0x34, runs[1]);
    t[0x49] = "'n";
    fill(0x4A, runs[2]);
    t[0x52] = "OE";
    t[0x53] = "oe";
    fill(0x54, runs[3]);
    return t;
  }();
  return table;
}

// ASCII replacement for a non-ASCII code point; empty means "drop".
inline std::string_view transliterate(char32_t cp) {
  static constexpr std::string_view latin1[] = {
      // U+00A0..U+00BF
      " ", "!", "C/", "PS", "$?", "Y=", "|", "SS", "\"", "(c)", "a", "<<", "!", "", "(r)", "-",
      "deg", "+-", "2", "3", "'", "u", "P", "*", ",", "1", "o", ">>", " 1/4 ", " 1/2 ", " 3/4 ", "?",
      // U+00C0..U+00FF
      "A", "A", "A", "A", "A", "A", "AE", "C", "E", "E", "E", "E", "I", "I", "I", "I",
      "D", "N", "O", "O", "O", "O", "O", "x", "O", "U", "U", "U", "U", "Y", "Th", "ss",
      "a", "a", "a", "a", "a", "a", "ae", "c", "e", "e", "e", "e", "i", "i", "i", "i",
      "d", "n", "o", "o", "o", "o", "o", "/", "o", "u", "u", "u", "u", "y", "th", "y"};
  if (cp >= 0xA0 && cp <= 0xFF) return latin1[cp - 0xA0];
  if (cp >= 0x100 && cp <= 0x17F) return latin_extended_a()[cp - 0x100];
  if (cp >= 0x2000 && cp <= 0x200A) return " ";
  switch (cp) {
  case 0x0085: return "\n";
  case 0x2010: case 0x2011: case 0x2012: case 0x2013: return "-";
  case 0x2014: case 0x2015: return "--";
  case 0x2018: case 0x2019: case 0x201A: case 0x201B: return "'";
  case 0x201C: case 0x201D: case 0x201E: case 0x201F: return "\"";
  case 0x2026: return "...";
  case 0x2028: case 0x2029: return "\n";
  case 0x202F: case 0x205F: case 0x3000: return " ";
  case 0xFB00: return "ff";
  case 0xFB01: return "fi";
  case 0xFB02: return "fl";
  case 0xFB03: return "ffi";
  case 0xFB04: return "ffl";
  case 0xFB05: case 0xFB06: return "st";
  default: return {};
  }
}

// Decodes UTF-8 and maps every code point to ASCII. Malformed sequences are
// dropped byte by byte.
inline std::string to_ascii(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  const auto n = text.size();
  auto cont = [&](std::size_t at) {
    return at < n && (static_cast<unsigned char>(text[at]) & 0xC0) == 0x80;
  };
  while (i < n) {
    const auto b = static_cast<unsigned char>(text[i]);
    if (b < 0x80) {
      out.push_back(static_cast<char>(b));
      ++i;
      continue;
    }
    char32_t cp = 0;
    std::size_t len = 0;
    if ((b & 0xE0) == 0xC0) {
      cp = b & 0x1F;
      len = 2;
    } else if ((b & 0xF0) == 0xE0) {
      cp = b & 0x0F;
      len = 3;
    } else if ((b & 0xF8) == 0xF0) {
      cp = b & 0x07;
      len = 4;
    } else {
      ++i;
      continue;
    }
    bool valid = true;
    for (std::size_t k = 1; k < len; ++k) {
      if (!cont(i + k)) {
        valid = false;
        break;
      }
      cp = (cp << 6) | (static_cast<unsigned char>(text[i + k]) & 0x3F);
    }
    if (!valid) {
      ++i;
      continue;
    }
    out.append(transliterate(cp));
    i += len;
  }
  return out;
}

inline std::string fnv1a_hex(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

} // namespace detail

inline Stopwords load_stopwords(const std::filesystem::path& path) {
  Stopwords words;
  if (path.empty()) return words;
  std::istringstream in(detail::read_file(path, "corpus"));
  std::string line;
  while (std::getline(in, line)) {
    auto word = detail::trim(line);
    if (word.empty()) continue;
    std::transform(word.begin(), word.end(), word.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    words.insert(std::move(word));
  }
  return words;
}

// Reads `id,title,read_date,pub_year,text_path`. Relative text paths resolve
// against the manifest's directory. Records come back in reading order; rows
// sharing a read date keep their file order.
inline std::vector<VolumeRecord> load_manifest(const std::filesystem::path& path) {
  const auto rows = detail::parse_csv(detail::read_file(path, "corpus"));
  if (rows.empty()) throw InputError("corpus", "manifest " + path.string() + " has no header");
  auto header = rows.front();
  if (!header.empty() && header[0].starts_with("\xEF\xBB\xBF")) header[0].erase(0, 3);
  for (auto& h : header) h = detail::trim(h);
  const std::vector<std::string> expected{"id", "title", "read_date", "pub_year", "text_path"};
  if (header != expected)
    throw InputError("corpus", "manifest header must be id,title,read_date,pub_year,text_path");

  const auto base = path.parent_path();
  std::vector<VolumeRecord> records;
  std::unordered_set<std::string> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string where = "manifest row " + std::to_string(r + 1);
    if (row.size() != expected.size())
      throw InputError("corpus", where + ": expected 5 fields, got " + std::to_string(row.size()));
    VolumeRecord rec;
    rec.id = detail::trim(row[0]);
    rec.title = row[1];
    if (rec.id.empty()) throw InputError("corpus", where + ": empty id");
    if (!seen.insert(rec.id).second) throw InputError("corpus", "duplicate id '" + rec.id + "'");
    const auto date = parse_iso_date(detail::trim(row[2]));
    if (!date)
      throw InputError("corpus", "record '" + rec.id + "': unparsable read_date '" + row[2] + "'");
    rec.read_date = *date;
    const auto year_text = detail::trim(row[3]);
    auto [ptr, ec] = std::from_chars(year_text.data(), year_text.data() + year_text.size(), rec.pub_year);
    if (ec != std::errc{} || ptr != year_text.data() + year_text.size())
      throw InputError("corpus", "record '" + rec.id + "': unparsable pub_year '" + row[3] + "'");
    if (rec.pub_year > year_of(rec.read_date))
      throw InputError("corpus", "record '" + rec.id + "': pub_year " + std::to_string(rec.pub_year) +
                                     " is after its read date " + format_iso_date(rec.read_date));
    rec.text_path = detail::trim(row[4]);
    if (rec.text_path.is_relative()) rec.text_path = base / rec.text_path;
    if (!std::filesystem::is_regular_file(rec.text_path))
      throw InputError("corpus", "record '" + rec.id + "': missing text file " + rec.text_path.string());
    records.push_back(std::move(rec));
  }
  std::stable_sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return std::chrono::sys_days{a.read_date} < std::chrono::sys_days{b.read_date};
  });
  for (std::size_t i = 0; i < records.size(); ++i) records[i].read_seq = i;
  return records;
}

// Hyphen-linebreak join, ASCII transliteration, whitespace split, removal of
// tokens holding anything but letters, lowercasing, stopword removal.
inline std::vector<std::string> tokenize(std::string_view text, const Stopwords& stopwords) {
  std::string joined;
  joined.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '-') {
      if (i + 1 < text.size() && text[i + 1] == '\n') {
        ++i;
        continue;
      }
      if (i + 2 < text.size() && text[i + 1] == '\r' && text[i + 2] == '\n') {
        i += 2;
        continue;
      }
    }
    joined.push_back(text[i]);
  }
  const std::string ascii = detail::to_ascii(joined);

  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < ascii.size()) {
    while (i < ascii.size() && std::isspace(static_cast<unsigned char>(ascii[i]))) ++i;
    const std::size_t start = i;
    bool letters_only = true;
    while (i < ascii.size() && !std::isspace(static_cast<unsigned char>(ascii[i]))) {
      if (!std::isalpha(static_cast<unsigned char>(ascii[i]))) letters_only = false;
      ++i;
    }
    if (i == start || !letters_only) continue;
    std::string token(ascii, start, i - start);
    for (auto& c : token) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (!stopwords.contains(token)) tokens.push_back(std::move(token));
  }
  return tokens;
}

inline std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& config) {
  return tokenize(text, load_stopwords(config.stopword_path));
}

// Frequency filtering over already-tokenized documents, in reading order.
inline Corpus build_corpus_from_tokens(std::vector<VolumeRecord> records,
                                       const std::vector<std::vector<std::string>>& tokens,
                                       const TokenizerConfig& config) {
  if (config.min_count > config.max_count)
    throw InputError("corpus", "min_count exceeds max_count");
  if (tokens.size() != records.size())
    throw InputError("corpus", "token lists do not match the records");

  std::map<std::string, std::uint64_t> counts;
  std::uint64_t raw = 0;
  for (const auto& doc : tokens) {
    raw += doc.size();
    for (const auto& t : doc) ++counts[t];
  }
  std::vector<std::string> kept;
  std::vector<std::uint64_t> freq;
  for (const auto& [token, n] : counts) {
    if (n >= config.min_count && n <= config.max_count) {
      kept.push_back(token);
      freq.push_back(n);
    }
  }
  Corpus corpus;
  corpus.vocabulary = Vocabulary(std::move(kept), std::move(freq));

  corpus.matrix.documents.resize(tokens.size());
  for (std::size_t d = 0; d < tokens.size(); ++d) {
    std::map<std::uint32_t, std::uint32_t> doc_counts;
    for (const auto& t : tokens[d])
      if (auto id = corpus.vocabulary.find(t)) ++doc_counts[*id];
    if (doc_counts.empty())
      throw InputError("corpus", "document '" + records[d].id + "' has no tokens left after filtering");
    auto& row = corpus.matrix.documents[d];
    row.reserve(doc_counts.size());
    for (const auto& [term, n] : doc_counts) row.push_back({term, n});
  }
  for (std::size_t i = 0; i < records.size(); ++i) records[i].read_seq = i;
  corpus.records = std::move(records);
  corpus.stats = {corpus.records.size(), raw, corpus.matrix.total(), corpus.vocabulary.size()};
  return corpus;
}

// Reads and tokenizes every record's text (optionally in parallel) and
// applies the frequency filter.
inline Corpus build_corpus(std::vector<VolumeRecord> records, const TokenizerConfig& config,
                           unsigned threads = 1) {
  const Stopwords stopwords = load_stopwords(config.stopword_path);
  std::vector<std::vector<std::string>> tokens(records.size());
  parallel_for(records.size(), threads, [&](std::size_t d) {
    tokens[d] = tokenize(detail::read_file(records[d].text_path, "corpus"), stopwords);
  });
  return build_corpus_from_tokens(std::move(records), tokens, config);
}

// Stable identity of the vocabulary and counts; models record it so that a
// model is never paired with a different corpus.
inline std::string corpus_fingerprint(const Corpus& corpus) {
  std::string bytes;
  for (const auto& t : corpus.vocabulary.tokens()) {
    bytes += t;
    bytes.push_back('\0');
  }
  for (const auto& doc : corpus.matrix.documents) {
    for (const auto& tc : doc) bytes += std::to_string(tc.term) + ':' + std::to_string(tc.count) + ' ';
    bytes.push_back('\n');
  }
  return detail::fnv1a_hex(bytes);
}

inline constexpr int corpus_format_version = 1;

inline nlohmann::json corpus_to_json(const Corpus& corpus) {
  nlohmann::json j;
  j["format"] = "readpath.corpus";
  j["format_version"] = corpus_format_version;
  j["fingerprint"] = corpus_fingerprint(corpus);
  auto& recs = j["records"] = nlohmann::json::array();
  for (const auto& r : corpus.records) {
    recs.push_back({{"id", r.id},
                    {"title", r.title},
                    {"read_date", format_iso_date(r.read_date)},
                    {"read_seq", r.read_seq},
                    {"pub_year", r.pub_year},
                    {"text_path", r.text_path.generic_string()}});
  }
  j["vocabulary"] = corpus.vocabulary.tokens();
  j["frequency"] = corpus.vocabulary.frequencies();
  auto& docs = j["documents"] = nlohmann::json::array();
  for (const auto& doc : corpus.matrix.documents) {
    auto row = nlohmann::json::array();
    for (const auto& tc : doc) row.push_back({tc.term, tc.count});
    docs.push_back(std::move(row));
  }
  j["stats"] = {{"documents", corpus.stats.documents},
                {"tokens_before_filter", corpus.stats.tokens_before_filter},
                {"tokens", corpus.stats.tokens},
                {"vocabulary_size", corpus.stats.vocabulary_size}};
  return j;
}

inline Corpus corpus_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "readpath.corpus")
    throw InputError("corpus", "not a corpus cache (format tag mismatch)");
  if (j.value("format_version", 0) != corpus_format_version)
    throw InputError("corpus", "unsupported corpus cache version");
  Corpus corpus;
  for (const auto& r : j.at("records")) {
    VolumeRecord rec;
    rec.id = r.at("id").get<std::string>();
    rec.title = r.at("title").get<std::string>();
    const auto date = parse_iso_date(r.at("read_date").get<std::string>());
    if (!date) throw InputError("corpus", "corrupt cache date for '" + rec.id + "'");
    rec.read_date = *date;
    rec.read_seq = r.at("read_seq").get<std::size_t>();
    rec.pub_year = r.at("pub_year").get<int>();
    rec.text_path = r.at("text_path").get<std::string>();
    corpus.records.push_back(std::move(rec));
  }
  corpus.vocabulary = Vocabulary(j.at("vocabulary").get<std::vector<std::string>>(),
                                 j.at("frequency").get<std::vector<std::uint64_t>>());
  for (const auto& row : j.at("documents")) {
    std::vector<TermCount> doc;
    for (const auto& tc : row) doc.push_back({tc.at(0).get<std::uint32_t>(), tc.at(1).get<std::uint32_t>()});
    corpus.matrix.documents.push_back(std::move(doc));
  }
  const auto& s = j.at("stats");
  corpus.stats = {s.at("documents").get<std::size_t>(), s.at("tokens_before_filter").get<std::uint64_t>(),
                  s.at("tokens").get<std::uint64_t>(), s.at("vocabulary_size").get<std::size_t>()};
  if (corpus.matrix.size() != corpus.records.size())
    throw InputError("corpus", "corrupt cache: document count does not match records");
  if (j.value("fingerprint", "") != corpus_fingerprint(corpus))
    throw InputError("corpus", "corrupt cache: fingerprint mismatch");
  return corpus;
}

inline void save_corpus_cache(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("corpus", "cannot write " + path.string());
  out << corpus_to_json(corpus).dump() << '\n';
}

inline Corpus load_corpus_cache(const std::filesystem::path& path) {
  try {
    return corpus_from_json(nlohmann::json::parse(detail::read_file(path, "corpus")));
  } catch (const nlohmann::json::exception& e) {
    throw InputError("corpus", "cannot parse cache " + path.string() + ": " + e.what());
  }
}

} // namespace readpath
