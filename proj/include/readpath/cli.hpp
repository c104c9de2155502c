#pragma once

// Command-line front end. Every setting has a dotted name (`topics.k`,
// `null.samples`, ...). A `--config` file in INI form supplies defaults with
// one section per module:
//
//   [topics]
//   k = 20,40,60,80
//   seed = 7
//
// and any flag of the same dotted name on the command line wins over it.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "readpath/error.hpp"
#include "readpath/pipeline.hpp"

namespace readpath::cli {

namespace detail {

inline std::vector<std::size_t> parse_k_list(const std::string& text) {
  std::vector<std::size_t> ks;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    item = readpath::detail::trim(item);
    if (item.empty()) continue;
    std::size_t k = 0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), k);
    if (ec != std::errc{} || ptr != item.data() + item.size())
      throw InputError("cli", "invalid topic count '" + item + "'");
    ks.push_back(k);
  }
  if (ks.empty()) throw InputError("cli", "empty topic count list");
  return ks;
}

// Turns config-file entries into `--section.key value` arguments.
inline std::vector<std::string> config_arguments(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cli", "cannot open config file " + path);
  CLI::ConfigINI ini;
  std::vector<std::string> args;
  for (const auto& item : ini.from_config(in)) {
    if (item.name == "++" || item.name == "--") continue;
    std::string name;
    for (const auto& p : item.parents) name += p + ".";
    name += item.name;
    if (item.parents.empty() || item.parents.front() == "default") name = item.name;
    std::string value;
    for (std::size_t i = 0; i < item.inputs.size(); ++i) value += (i ? "," : "") + item.inputs[i];
    args.push_back("--" + name + "=" + value);
  }
  return args;
}

inline std::string find_config(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].starts_with("--config=")) return args[i].substr(9);
  }
  return {};
}

} // namespace detail

// Runs one invocation; returns the process exit status (0 ok, 1 input or
// validation error, 2 internal invariant failure).
inline int run(std::vector<std::string> args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Surprise, null-model and epoch analysis of document reading sequences", "readpath"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  RunConfig config;
  std::string config_file, manifest, stopwords, k_list = "80", out_dir = config.out.string();
  std::string bundle;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::size_t min_years = 5;
  std::size_t max_count = config.tokenizer.max_count;

  app.add_option("--config", config_file, "INI configuration file");
  app.add_option("--corpus.manifest", manifest, "Reading manifest CSV");
  app.add_option("--corpus.stopwords", stopwords, "Stopword file, one word per line");
  app.add_option("--corpus.min_count", config.tokenizer.min_count, "Drop tokens rarer than this");
  app.add_option("--corpus.max_count", max_count, "Drop tokens more frequent than this (0 = no limit)");
  app.add_option("--k,--topics.k", k_list, "Topic count or comma-separated list");
  app.add_option("--topics.alpha", alpha, "Document-topic concentration (default 50/k)");
  app.add_option("--topics.beta", config.topics.beta, "Topic-word concentration");
  app.add_option("--topics.iterations", config.topics.iterations, "Gibbs sweeps");
  app.add_option("--topics.seed", config.topics.seed, "Sampler seed");
  app.add_option("--topics.average_samples", config.topics.average_samples, "Average estimates after burn-in");
  app.add_option("--topics.burn_in", config.topics.burn_in, "Sweeps discarded before averaging");
  app.add_option("--samples,--null.samples", config.null.samples, "Null-model permutations");
  app.add_option("--null.seed", config.null.seed, "Null-model seed");
  app.add_option("--null.within_year_exact_threshold", config.null.within_year_exact_threshold,
                 "Largest tie group averaged exactly");
  app.add_option("--null.within_year_samples", config.null.within_year_samples, "Random tie orders otherwise");
  app.add_option("--epochs.n_max", config.epochs.n_max, "Largest epoch count considered");
  app.add_option("--epochs.min_length_points", config.epochs.min_length.points, "Minimum epoch length in points");
  app.add_option("--epochs.min_length_years", min_years, "Minimum epoch length in years (0 = points only)");
  app.add_option("--epochs.variance_floor", config.epochs.variance_floor, "Variance floor");
  app.add_option("--epochs.literal_normalization", config.epochs.literal_normalization,
                 "Normalize by (m - 1) instead of m");
  app.add_option("--epochs.input", config.epoch_input, "raw or relative (series minus null mean)")
      ->check(CLI::IsMember({"raw", "relative"}));
  app.add_option("--out,--run.out", out_dir, "Output directory");
  app.add_option("--threads,--run.threads", config.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--run.export_matrix", config.export_matrix, "Also write the divergence matrix");
  auto* seed_opt = app.add_option("--seed", seed, "Seed for both the topic sampler and the null model");

  const char* names[][2] = {
      {"ingest", "Tokenize the manifest's texts and write the corpus cache"},
      {"train", "Fit topic models"},
      {"surprise", "Text-to-text and text-to-past series in reading order"},
      {"null", "Publication-constrained null ensembles"},
      {"puborder", "Publication-order baseline"},
      {"greedy", "Greedy minimum-surprise paths"},
      {"ranks", "Rank distribution of consecutive choices"},
      {"epochs", "Epoch segmentation and AIC selection"},
      {"run", "Full analysis bundle"},
      {"report", "Print tables from a bundle"},
  };
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, help] : names) subs[name] = app.add_subcommand(name, help)->fallthrough();
  subs["report"]->add_option("bundle", bundle, "Bundle directory (defaults to --out)");

  try {
    std::vector<std::string> argv;
    const auto cfg = detail::find_config(args);
    if (!cfg.empty()) argv = detail::config_arguments(cfg);
    argv.insert(argv.end(), args.begin(), args.end());
    std::reverse(argv.begin(), argv.end());
    app.parse(argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    config.manifest = manifest;
    config.tokenizer.stopword_path = stopwords;
    config.tokenizer.max_count = max_count == 0 ? TokenizerConfig::unbounded : max_count;
    config.k_list = detail::parse_k_list(k_list);
    if (app.get_option("--topics.alpha")->count() > 0) config.topics.alpha = alpha;
    if (seed_opt->count() > 0) seed_given = true;
    if (seed_given) config.topics.seed = config.null.seed = seed;
    config.epochs.min_length.years = min_years > 0 ? std::optional<int>(static_cast<int>(min_years)) : std::nullopt;
    config.out = out_dir;

    if (subs["report"]->parsed()) {
      cmd_report(bundle.empty() ? config.out : std::filesystem::path(bundle), out);
      return 0;
    }
    config.validate();
    if (subs["ingest"]->parsed()) cmd_ingest(config, out);
    else if (subs["train"]->parsed()) cmd_train(config, out);
    else if (subs["surprise"]->parsed()) cmd_surprise(config, out);
    else if (subs["null"]->parsed()) cmd_null(config, out);
    else if (subs["puborder"]->parsed()) cmd_puborder(config, out);
    else if (subs["greedy"]->parsed()) cmd_greedy(config, out);
    else if (subs["ranks"]->parsed()) cmd_ranks(config, out);
    else if (subs["epochs"]->parsed()) cmd_epochs(config, out);
    else if (subs["run"]->parsed()) cmd_run(config, out);
    return 0;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const InvariantError& e) {
    err << "internal error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 2;
  }
}

inline int run(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return run(std::vector<std::string>(argv + 1, argv + argc), out, err);
}

} // namespace readpath::cli
