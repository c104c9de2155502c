#include <fstream>
#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "readpath/corpus.hpp"

using namespace readpath;
namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

fs::path manifest_with(const fs::path& dir, const std::string& rows) {
  write_text(dir / "a.txt", "alpha");
  write_text(dir / "b.txt", "beta");
  write_text(dir / "c.txt", "gamma");
  write_text(dir / "manifest.csv", "id,title,read_date,pub_year,text_path\n" + rows);
  return dir / "manifest.csv";
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const InputError& e) {
    return e.what();
  }
  return {};
}

} // namespace

TEST(Manifest, SameDateKeepsFileOrder) {
  const auto dir = oracle::temp_dir("manifest-order");
  const auto path = manifest_with(dir, "c,Third,1850-03-01,1849,c.txt\n"
                                       "b,\"Second, with comma\",1840-05-02,1840,b.txt\n"
                                       "a,First,1840-05-02,1839,a.txt\n");
  const auto records = load_manifest(path);
  ASSERT_EQ(records.size(), 3u);
  EXPECT_EQ(records[0].id, "b");
  EXPECT_EQ(records[1].id, "a");
  EXPECT_EQ(records[2].id, "c");
  EXPECT_EQ(records[0].title, "Second, with comma");
  for (std::size_t i = 0; i < records.size(); ++i) EXPECT_EQ(records[i].read_seq, i);
  EXPECT_EQ(records[2].text_path, dir / "c.txt");
}

TEST(Manifest, HeaderOnlyIsEmpty) {
  const auto dir = oracle::temp_dir("manifest-empty");
  EXPECT_TRUE(load_manifest(manifest_with(dir, "")).empty());
}

TEST(Manifest, PublicationAfterReadingNamesRecord) {
  const auto dir = oracle::temp_dir("manifest-pubyear");
  const auto path = manifest_with(dir, "late,Late,1860-01-01,1870,a.txt\n");
  const auto msg = message_of([&] { load_manifest(path); });
  EXPECT_NE(msg.find("late"), std::string::npos) << msg;
}

TEST(Manifest, Errors) {
  const auto dir = oracle::temp_dir("manifest-errors");
  EXPECT_NE(message_of([&] { load_manifest(manifest_with(dir, "a,A,1840-01-01,1830,a.txt\na,B,1841-01-01,1830,b.txt\n")); })
                .find("duplicate id 'a'"),
            std::string::npos);
  EXPECT_NE(message_of([&] { load_manifest(manifest_with(dir, "a,A,1840-13-01,1830,a.txt\n")); }).find("read_date"),
            std::string::npos);
  EXPECT_NE(message_of([&] { load_manifest(manifest_with(dir, "gone,A,1840-01-01,1830,nowhere.txt\n")); }).find("'gone'"),
            std::string::npos);
  write_text(dir / "bad.csv", "id,title,date\n");
  EXPECT_THROW(load_manifest(dir / "bad.csv"), InputError);
}

TEST(Tokenize, HyphenAtLineBreakJoins) {
  const Stopwords none;
  EXPECT_EQ(tokenize("natu-\nral selection", none), (std::vector<std::string>{"natural", "selection"}));
  EXPECT_EQ(tokenize("natu-\r\nral", none), (std::vector<std::string>{"natural"}));
  // Intra-line hyphens make the token punctuation-bearing.
  EXPECT_TRUE(tokenize("well-known", none).empty());
}

TEST(Tokenize, DropsPunctuationAndDigits) {
  EXPECT_EQ(tokenize("Origin 1859 spec1es", Stopwords{}), (std::vector<std::string>{"origin"}));
  EXPECT_EQ(tokenize("species. don't (Lyell) plain", Stopwords{}), (std::vector<std::string>{"plain"}));
}

TEST(Tokenize, LowercasesBeforeStopwords) {
  EXPECT_TRUE(tokenize("The THE the", Stopwords{"the"}).empty());
}

TEST(Tokenize, TransliteratesToAscii) {
  EXPECT_EQ(tokenize("na\xC3\xAFve \xC3\x86sop \xEF\xAC\x81sh Stra\xC3\x9F" "e", Stopwords{}),
            (std::vector<std::string>{"naive", "aesop", "fish", "strasse"}));
  // Unmapped characters vanish; an em dash becomes "--" and poisons the token.
  EXPECT_EQ(tokenize("\xCE\xA9mega one\xE2\x80\x94two", Stopwords{}), (std::vector<std::string>{"mega"}));
  // No-break space separates.
  EXPECT_EQ(tokenize("a\xC2\xA0" "b", Stopwords{}), (std::vector<std::string>{"a", "b"}));
}

TEST(Tokenize, IdempotentOnOwnOutput) {
  std::mt19937_64 gen(11);
  const std::string alphabet = "abcXYZ é-.,'1\n\t";
  const Stopwords stop{"abc", "x"};
  for (int trial = 0; trial < 500; ++trial) {
    std::string text;
    const auto len = gen() % 80;
    for (std::size_t i = 0; i < len; ++i) text += alphabet[gen() % alphabet.size()];
    const auto tokens = tokenize(text, stop);
    std::string joined;
    for (const auto& t : tokens) joined += (joined.empty() ? "" : " ") + t;
    EXPECT_EQ(tokenize(joined, stop), tokens) << text;
  }
}

TEST(Tokenize, ShippedStopwordList) {
  const auto stop = load_stopwords(fs::path(READPATH_DATA_DIR) / "stopwords_en.txt");
  EXPECT_EQ(stop.size(), 179u);
  EXPECT_EQ(tokenize("On the Origin of Species", stop), (std::vector<std::string>{"origin", "species"}));
}

namespace {

std::vector<VolumeRecord> records_for(std::size_t n) {
  std::vector<VolumeRecord> r(n);
  for (std::size_t i = 0; i < n; ++i) {
    r[i].id = "d" + std::to_string(i);
    r[i].read_date = *parse_iso_date("1850-01-01");
    r[i].pub_year = 1849;
  }
  return r;
}

} // namespace

TEST(BuildCorpus, MinCountBoundary) {
  std::vector<std::string> doc(29, "rare");
  doc.insert(doc.end(), 30, "common");
  TokenizerConfig cfg{30, 15000, {}};
  const auto c = build_corpus_from_tokens(records_for(1), {doc}, cfg);
  EXPECT_EQ(c.vocabulary.tokens(), (std::vector<std::string>{"common"}));
  EXPECT_EQ(c.vocabulary.frequency(0), 30u);
}

TEST(BuildCorpus, IdentityFilterKeepsEverything) {
  const std::vector<std::vector<std::string>> docs{{"b", "a", "b"}, {"c"}};
  TokenizerConfig cfg{0, TokenizerConfig::unbounded, {}};
  const auto c = build_corpus_from_tokens(records_for(2), docs, cfg);
  EXPECT_EQ(c.vocabulary.tokens(), (std::vector<std::string>{"a", "b", "c"}));
}

TEST(BuildCorpus, HandCountedToyCorpus) {
  // Counts: apple 3, pear 2, fig 1, plum 2, kiwi 1.
  const std::vector<std::vector<std::string>> docs{
      {"apple", "pear", "fig"}, {"apple", "plum", "plum"}, {"apple", "pear", "kiwi"}};
  TokenizerConfig cfg{2, TokenizerConfig::unbounded, {}};
  const auto c = build_corpus_from_tokens(records_for(3), docs, cfg);
  EXPECT_EQ(c.vocabulary.tokens(), (std::vector<std::string>{"apple", "pear", "plum"}));
  EXPECT_EQ(c.matrix.documents[0], (std::vector<TermCount>{{0, 1}, {1, 1}}));
  EXPECT_EQ(c.matrix.documents[1], (std::vector<TermCount>{{0, 1}, {2, 2}}));
  EXPECT_EQ(c.matrix.documents[2], (std::vector<TermCount>{{0, 1}, {1, 1}}));
  EXPECT_EQ(c.stats.tokens_before_filter, 9u);
  EXPECT_EQ(c.stats.tokens, 7u);
  EXPECT_EQ(c.matrix.total(), c.stats.tokens);
}

TEST(BuildCorpus, MaxCountFilters) {
  const std::vector<std::vector<std::string>> docs{{"a", "a", "a", "b"}, {"b", "c"}};
  const auto c = build_corpus_from_tokens(records_for(2), docs, TokenizerConfig{1, 2, {}});
  EXPECT_EQ(c.vocabulary.tokens(), (std::vector<std::string>{"b", "c"}));
}

TEST(BuildCorpus, EmptiedDocumentIsAnError) {
  const std::vector<std::vector<std::string>> docs{{"a", "a"}, {"z"}};
  const auto msg = message_of([&] { build_corpus_from_tokens(records_for(2), docs, TokenizerConfig{2, 100, {}}); });
  EXPECT_NE(msg.find("'d1'"), std::string::npos) << msg;
  EXPECT_THROW(build_corpus_from_tokens(records_for(1), {{"a"}}, TokenizerConfig{3, 2, {}}), InputError);
}

TEST(BuildCorpus, FromFilesDeterministicAcrossThreads) {
  const auto dir = oracle::temp_dir("corpus-files");
  std::string manifest = "id,title,read_date,pub_year,text_path\n";
  std::mt19937_64 gen(3);
  const std::vector<std::string> words{"finch", "barnacle", "coral", "pigeon", "orchid", "worm"};
  for (int d = 0; d < 12; ++d) {
    std::string text;
    for (int i = 0; i < 40; ++i) text += words[gen() % words.size()] + (i % 7 == 6 ? "\n" : " ");
    write_text(dir / ("t" + std::to_string(d) + ".txt"), text);
    manifest += "v" + std::to_string(d) + ",T,18" + std::to_string(40 + d) + "-01-01,1839,t" + std::to_string(d) + ".txt\n";
  }
  write_text(dir / "m.csv", manifest);
  TokenizerConfig cfg{1, TokenizerConfig::unbounded, {}};
  const auto a = build_corpus(load_manifest(dir / "m.csv"), cfg, 1);
  const auto b = build_corpus(load_manifest(dir / "m.csv"), cfg, 4);
  EXPECT_EQ(a.vocabulary, b.vocabulary);
  EXPECT_EQ(a.matrix, b.matrix);
  EXPECT_TRUE(std::is_sorted(a.vocabulary.tokens().begin(), a.vocabulary.tokens().end()));
  EXPECT_EQ(a.matrix.total(), a.stats.tokens);

  save_corpus_cache(a, dir / "cache1.json");
  const auto loaded = load_corpus_cache(dir / "cache1.json");
  EXPECT_EQ(loaded.records, a.records);
  EXPECT_EQ(loaded.matrix, a.matrix);
  EXPECT_EQ(loaded.vocabulary, a.vocabulary);
  EXPECT_EQ(loaded.stats, a.stats);
  save_corpus_cache(loaded, dir / "cache2.json");
  EXPECT_EQ(detail::read_file(dir / "cache1.json", "t"), detail::read_file(dir / "cache2.json", "t"));
}

TEST(BuildCorpus, RejectsForeignCache) {
  const auto dir = oracle::temp_dir("corpus-foreign");
  write_text(dir / "x.json", R"({"format":"something-else","format_version":1})");
  EXPECT_THROW(load_corpus_cache(dir / "x.json"), InputError);
}

TEST(Dates, DecimalYearAndCalendarShift) {
  EXPECT_DOUBLE_EQ(decimal_year(*parse_iso_date("1850-01-01")), 1850.0);
  EXPECT_DOUBLE_EQ(decimal_year(*parse_iso_date("1852-07-02")), 1852.0 + 183.0 / 366.0);
  EXPECT_EQ(format_iso_date(add_years(*parse_iso_date("1852-02-29"), 5)), "1857-02-28");
  EXPECT_FALSE(parse_iso_date("1850-02-30"));
  EXPECT_FALSE(parse_iso_date("1850-2-3"));
}
