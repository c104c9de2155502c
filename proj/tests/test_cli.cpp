#include <cstdlib>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "readpath/cli.hpp"
#include "readpath/synthetic.hpp"

using namespace readpath;
namespace fs = std::filesystem;

namespace {

struct Result {
  int status;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int status = cli::run(std::move(args), out, err);
  return {status, out.str(), err.str()};
}

fs::path toy_corpus(const std::string& name, std::size_t docs = 6) {
  const auto dir = oracle::temp_dir(name);
  synthetic::Spec spec;
  spec.documents = docs;
  spec.tokens_per_document = 60;
  spec.words_per_topic = 10;
  spec.seed = 4;
  synthetic::write(synthetic::generate(spec), dir);
  return dir;
}

std::vector<std::string> quick_run(const fs::path& corpus, const fs::path& out) {
  return {"run",
          "--corpus.manifest", (corpus / "manifest.csv").string(),
          "--corpus.stopwords", (corpus / "stopwords.txt").string(),
          "--corpus.min_count", "1",
          "--k", "2",
          "--topics.iterations", "30",
          "--samples", "20",
          "--seed", "3",
          "--out", out.string()};
}

std::string slurp(const fs::path& p) { return readpath::detail::read_file(p, "test"); }

} // namespace

TEST(Ingest, WritesCacheAndStats) {
  const auto dir = toy_corpus("cli-ingest");
  const auto r = invoke({"ingest", "--corpus.manifest", (dir / "manifest.csv").string(), "--corpus.min_count", "1",
                         "--out", (dir / "out").string()});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_TRUE(fs::is_regular_file(dir / "out" / "corpus.json"));
  const auto stats = nlohmann::json::parse(r.out);
  EXPECT_EQ(stats.at("documents"), 6);
  EXPECT_GT(stats.at("vocabulary_size").get<int>(), 0);

  const auto first = slurp(dir / "out" / "corpus.json");
  ASSERT_EQ(invoke({"ingest", "--corpus.manifest", (dir / "manifest.csv").string(), "--corpus.min_count", "1",
                    "--out", (dir / "out").string(), "--threads", "4"})
                .status,
            0);
  EXPECT_EQ(slurp(dir / "out" / "corpus.json"), first);
}

TEST(Ingest, MissingTextNamesTheId) {
  const auto dir = toy_corpus("cli-missing");
  fs::remove(dir / "texts" / "doc3.txt");
  const auto r = invoke({"ingest", "--corpus.manifest", (dir / "manifest.csv").string(), "--out", (dir / "out").string()});
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("doc3"), std::string::npos) << r.err;
}

TEST(Ingest, ProcessExitStatus) {
  const auto dir = toy_corpus("cli-process");
  const std::string cli = READPATH_CLI_PATH;
  const auto ok = cli + " ingest --corpus.min_count 1 --corpus.manifest " + (dir / "manifest.csv").string() +
                  " --out " + (dir / "out").string() + " > /dev/null";
  EXPECT_EQ(std::system(ok.c_str()), 0);
  const auto bad = cli + " ingest --corpus.manifest " + (dir / "nope.csv").string() + " 2> /dev/null";
  const int status = std::system(bad.c_str());
  EXPECT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 1);
}

TEST(Parse, BadArguments) {
  EXPECT_EQ(invoke({}).status, 1);
  EXPECT_EQ(invoke({"frobnicate"}).status, 1);
  EXPECT_EQ(invoke({"run", "--threads", "0"}).status, 1);
  EXPECT_EQ(invoke({"run", "--k", "2,x"}).status, 1);
  EXPECT_EQ(invoke({"run", "--epochs.input", "sideways"}).status, 1);
  const auto help = invoke({"--help"});
  EXPECT_EQ(help.status, 0);
  EXPECT_NE(help.out.find("ingest"), std::string::npos);
}

TEST(Run, BundleIsCompleteAndParses) {
  const auto corpus = toy_corpus("cli-bundle");
  const auto out = corpus / "out";
  const auto r = invoke(quick_run(corpus, out));
  ASSERT_EQ(r.status, 0) << r.err;
  const auto bundle = nlohmann::json::parse(slurp(out / "bundle.json"));
  EXPECT_EQ(bundle.at("format_version"), 1);
  for (const auto& f : bundle.at("files")) {
    const auto path = out / f.get<std::string>();
    ASSERT_TRUE(fs::is_regular_file(path)) << path;
    const auto text = slurp(path);
    if (path.extension() == ".json") {
      const auto j = nlohmann::json::parse(text);
      EXPECT_TRUE(j.contains("format_version")) << path;
    } else if (path.extension() == ".csv") {
      EXPECT_FALSE(text.empty()) << path;
      EXPECT_NE(text.find('\n'), std::string::npos) << path;
    }
  }
  for (const auto* name : {"series_t2t.csv", "series_t2p.csv", "null_t2t.json", "null_t2p.csv", "puborder_t2t.csv",
                           "greedy_t2p.csv", "ranks.csv", "cumulative_t2t.csv"})
    EXPECT_TRUE(fs::is_regular_file(out / "k2" / name)) << name;
  const auto header = slurp(out / "k2" / "series_t2t.csv").substr(0, 34);
  EXPECT_EQ(header, "position,doc_id,date,value_bits\n1,");
}

TEST(Run, SameSeedSameSummaryAnyThreads) {
  const auto corpus = toy_corpus("cli-determinism", 12);
  auto a = quick_run(corpus, corpus / "a");
  a.insert(a.end(), {"--threads", "1"});
  auto b = quick_run(corpus, corpus / "b");
  b.insert(b.end(), {"--threads", "5"});
  ASSERT_EQ(invoke(a).status, 0);
  ASSERT_EQ(invoke(b).status, 0);
  EXPECT_EQ(slurp(corpus / "a" / "summary.json"), slurp(corpus / "b" / "summary.json"));
  EXPECT_EQ(slurp(corpus / "a" / "k2" / "null_t2t.csv"), slurp(corpus / "b" / "k2" / "null_t2t.csv"));
}

TEST(Run, KListMakesOneDirectoryPerK) {
  const auto corpus = toy_corpus("cli-klist");
  auto args = quick_run(corpus, corpus / "out");
  args[8] = "2,3,4";
  ASSERT_EQ(invoke(args).status, 0);
  const auto summary = nlohmann::json::parse(slurp(corpus / "out" / "summary.json"));
  ASSERT_EQ(summary.at("models").size(), 3u);
  for (int k : {2, 3, 4}) EXPECT_TRUE(fs::is_regular_file(corpus / "out" / ("k" + std::to_string(k)) / "summary.json"));
}

TEST(Run, ReusesCacheWithoutManifest) {
  const auto corpus = toy_corpus("cli-reuse");
  ASSERT_EQ(invoke(quick_run(corpus, corpus / "out")).status, 0);
  const auto before = slurp(corpus / "out" / "summary.json");
  const auto r = invoke({"surprise", "--k", "2", "--topics.iterations", "30", "--seed", "3", "--out",
                         (corpus / "out").string()});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(slurp(corpus / "out" / "summary.json"), before);
  EXPECT_EQ(invoke({"surprise", "--out", (corpus / "empty").string()}).status, 1);
}

TEST(Config, FileSuppliesDefaultsFlagsWin) {
  const auto corpus = toy_corpus("cli-config");
  std::ofstream(corpus / "run.ini") << "[corpus]\nmin_count = 1\nmanifest = " << (corpus / "manifest.csv").string()
                                    << "\n[topics]\nk = 3\niterations = 25\n[null]\nsamples = 7\n";
  const auto r = invoke({"run", "--config", (corpus / "run.ini").string(), "--samples", "9", "--out",
                         (corpus / "out").string()});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto cfg = nlohmann::json::parse(slurp(corpus / "out" / "summary.json")).at("config");
  EXPECT_EQ(cfg.at("topics").at("k"), nlohmann::json::array({3}));
  EXPECT_EQ(cfg.at("topics").at("iterations"), 25);
  EXPECT_EQ(cfg.at("null").at("samples"), 9);
  EXPECT_EQ(invoke({"run", "--config", (corpus / "absent.ini").string()}).status, 1);
}

TEST(Report, RowsMatchSummary) {
  const auto corpus = toy_corpus("cli-report");
  ASSERT_EQ(invoke(quick_run(corpus, corpus / "out")).status, 0);
  const auto r = invoke({"report", (corpus / "out").string()});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto summary = nlohmann::json::parse(slurp(corpus / "out" / "summary.json"));
  for (const auto* tag : {"t2t", "t2p"}) {
    const auto& t = summary.at("models").at(0).at("table2").at(tag);
    std::istringstream lines(r.out);
    std::string line;
    bool found = false;
    while (std::getline(lines, line)) {
      std::istringstream fields(line);
      std::string kind, observed, null_mean, null_std, p, greedy;
      fields >> kind >> observed >> null_mean >> null_std >> p >> greedy;
      if (kind != tag) continue;
      found = true;
      EXPECT_EQ(observed, readpath::detail::fixed(t.at("observed")));
      EXPECT_EQ(null_mean, readpath::detail::fixed(t.at("null_mean")));
      EXPECT_EQ(p, readpath::detail::fixed(t.at("p_value"), 4));
      EXPECT_EQ(greedy, readpath::detail::fixed(t.at("greedy")));
    }
    EXPECT_TRUE(found) << tag;
  }
}

TEST(Report, MissingNullEnsembleIsNamed) {
  const auto corpus = toy_corpus("cli-report-missing");
  ASSERT_EQ(invoke(quick_run(corpus, corpus / "out")).status, 0);
  fs::remove(corpus / "out" / "k2" / "null_t2t.json");
  const auto r = invoke({"report", (corpus / "out").string()});
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("k2/null_t2t.json"), std::string::npos) << r.err;
}

TEST(Report, DegenerateBundlePrintsZeros) {
  const auto dir = oracle::temp_dir("cli-report-zero");
  nlohmann::json zero = {{"observed", 0.0}, {"null_mean", 0.0}, {"null_std", 0.0},
                         {"p_value", 1.0},  {"greedy", 0.0},    {"publication_order", 0.0}};
  nlohmann::json summary = {
      {"format_version", 1},
      {"models", {{{"k", 2}, {"table2", {{"t2t", zero}, {"t2p", zero}}}, {"table3", {{"t2t", nullptr}, {"t2p", nullptr}}}}}}};
  std::ofstream(dir / "summary.json") << summary.dump();
  std::ofstream(dir / "bundle.json") << nlohmann::json{{"files", {"summary.json"}}}.dump();
  const auto r = invoke({"report", dir.string()});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.out.find("t2t       0.000       0.000      0.000   1.0000     0.000      0.000"), std::string::npos)
      << r.out;
}
