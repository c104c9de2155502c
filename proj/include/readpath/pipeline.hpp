#pragma once

// End-to-end orchestration behind the command-line front end: corpus cache,
// per-k models, every analysis and its exports, and the bundle summary.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "readpath/corpus.hpp"
#include "readpath/epochs.hpp"
#include "readpath/error.hpp"
#include "readpath/nullmodel.hpp"
#include "readpath/paths.hpp"
#include "readpath/surprise.hpp"
#include "readpath/topics.hpp"

namespace readpath {

inline constexpr int export_format_version = 1;

struct RunConfig {
  std::filesystem::path manifest;
  TokenizerConfig tokenizer;
  std::vector<std::size_t> k_list{80};
  TopicModelParams topics;
  NullConfig null;
  EpochSearchConfig epochs;
  std::string epoch_input = "raw"; // raw | relative
  bool export_matrix = false;
  std::filesystem::path out = "readpath-out";
  unsigned threads = 1;

  void validate() const {
    if (!manifest.empty() && !std::filesystem::is_regular_file(manifest))
      throw InputError("cli", "manifest not found: " + manifest.string());
    if (!tokenizer.stopword_path.empty() && !std::filesystem::is_regular_file(tokenizer.stopword_path))
      throw InputError("cli", "stopword file not found: " + tokenizer.stopword_path.string());
    if (k_list.empty()) throw InputError("cli", "no topic counts given");
    if (epoch_input != "raw" && epoch_input != "relative")
      throw InputError("cli", "epochs.input must be 'raw' or 'relative'");
    if (threads < 1) throw InputError("cli", "threads must be at least 1");
    for (auto k : k_list) {
      TopicModelParams p = topics;
      p.k = k;
      p.validate();
    }
    null.validate();
    epochs.validate();
  }

  // Settings that determine results; output location and thread count are
  // deliberately absent.
  nlohmann::json echo() const {
    nlohmann::json min_length = {{"points", epochs.min_length.points}};
    if (epochs.min_length.years) min_length["years"] = *epochs.min_length.years;
    return {{"corpus",
             {{"manifest", manifest.generic_string()},
              {"stopwords", tokenizer.stopword_path.generic_string()},
              {"min_count", tokenizer.min_count},
              {"max_count", tokenizer.max_count}}},
            {"topics",
             {{"k", k_list},
              {"alpha", topics.alpha ? nlohmann::json(*topics.alpha) : nlohmann::json("50/k")},
              {"beta", topics.beta},
              {"iterations", topics.iterations},
              {"seed", topics.seed},
              {"estimate", topics.average_samples ? "averaged" : "final_state"},
              {"burn_in", topics.burn_in}}},
            {"null",
             {{"samples", null.samples},
              {"seed", null.seed},
              {"within_year_exact_threshold", null.within_year_exact_threshold},
              {"within_year_samples", null.within_year_samples}}},
            {"epochs",
             {{"n_max", epochs.n_max},
              {"min_length", min_length},
              {"variance_floor", epochs.variance_floor},
              {"literal_normalization", epochs.literal_normalization},
              {"input", epoch_input}}}};
  }
};

namespace detail {

inline std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

class CsvWriter {
public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path, std::ios::binary) {
    if (!out_) throw InputError("cli", "cannot write " + path.string());
    row(header);
  }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << csv_field(fields[i]);
    }
    out_ << '\n';
  }

private:
  std::ofstream out_;
};

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cli", "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cli", "missing artifact " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("cli", "cannot parse " + path.string() + ": " + e.what());
  }
}

inline std::string kind_tag(SurpriseKind kind) {
  return kind.measure == SurpriseKind::Measure::text_to_text ? "t2t" : "t2p";
}

} // namespace detail

inline nlohmann::json stats_json(const IngestStats& s) {
  return {{"format_version", export_format_version},
          {"documents", s.documents},
          {"tokens_before_filter", s.tokens_before_filter},
          {"tokens", s.tokens},
          {"vocabulary_size", s.vocabulary_size}};
}

inline std::filesystem::path corpus_cache_path(const RunConfig& config) { return config.out / "corpus.json"; }

// With a manifest the corpus is rebuilt and the cache rewritten; otherwise
// the cache in the output directory is used.
inline Corpus obtain_corpus(const RunConfig& config) {
  std::filesystem::create_directories(config.out);
  if (!config.manifest.empty()) {
    auto corpus = build_corpus(load_manifest(config.manifest), config.tokenizer, config.threads);
    save_corpus_cache(corpus, corpus_cache_path(config));
    return corpus;
  }
  if (!std::filesystem::is_regular_file(corpus_cache_path(config)))
    throw InputError("cli", "no manifest given and no corpus cache at " + corpus_cache_path(config).string());
  return load_corpus_cache(corpus_cache_path(config));
}

inline std::filesystem::path k_directory(const RunConfig& config, std::size_t k) {
  return config.out / ("k" + std::to_string(k));
}

// Model i of the k list is trained with seed topics.seed + i. A stored model
// is reused when its parameters and corpus fingerprint match.
inline std::vector<TopicModel> obtain_models(const RunConfig& config, const Corpus& corpus) {
  const std::string fingerprint = corpus_fingerprint(corpus);
  std::vector<TopicModel> models(config.k_list.size());
  std::vector<bool> loaded(config.k_list.size(), false);
  for (std::size_t i = 0; i < config.k_list.size(); ++i) {
    TopicModelParams p = config.topics;
    p.k = config.k_list[i];
    p.seed = config.topics.seed + i;
    const auto path = k_directory(config, p.k) / "model.bin";
    if (!std::filesystem::is_regular_file(path)) continue;
    try {
      auto m = load_model(path);
      if (m.corpus_fingerprint == fingerprint && m.params.k == p.k && m.params.alpha_value() == p.alpha_value() &&
          m.params.beta == p.beta && m.params.iterations == p.iterations && m.params.seed == p.seed &&
          m.params.average_samples == p.average_samples && m.params.burn_in == p.burn_in &&
          m.theta.rows() == corpus.records.size()) {
        models[i] = std::move(m);
        loaded[i] = true;
      }
    } catch (const InputError&) {
    }
  }
  parallel_for(config.k_list.size(), config.threads, [&](std::size_t i) {
    if (loaded[i]) return;
    TopicModelParams p = config.topics;
    p.k = config.k_list[i];
    p.seed = config.topics.seed + i;
    models[i] = train(corpus, p);
    const auto dir = k_directory(config, p.k);
    std::filesystem::create_directories(dir);
    save_model(models[i], dir / "model.bin");
    detail::write_json(dir / "model.json", model_metadata(models[i]));
  });
  return models;
}

// Everything computed for one topic model; parts are built on first use.
class Analysis {
public:
  Analysis(const RunConfig& config, const Corpus& corpus, const TopicModel& model)
      : config_(config), corpus_(corpus), model_(model), dir_(k_directory(config, model.params.k)) {
    if (model.theta.rows() != corpus.records.size())
      throw InputError("cli", "model and corpus differ in document count");
    std::filesystem::create_directories(dir_);
  }

  const std::filesystem::path& directory() const { return dir_; }
  std::size_t k() const { return model_.params.k; }

  const SurpriseSeries& series(SurpriseKind kind) {
    auto& slot = kind.measure == SurpriseKind::Measure::text_to_text ? t2t_ : t2p_;
    if (!slot) slot = surprise_series(kind, model_.theta);
    return *slot;
  }

  const NullEnsemble& null(SurpriseKind kind) {
    auto& slot = kind.measure == SurpriseKind::Measure::text_to_text ? null_t2t_ : null_t2p_;
    if (!slot) slot = build_null(model_.theta, corpus_.records, kind, config_.null, config_.threads);
    return *slot;
  }

  const PublicationOrderSeries& publication(SurpriseKind kind) {
    auto& slot = kind.measure == SurpriseKind::Measure::text_to_text ? pub_t2t_ : pub_t2p_;
    if (!slot) slot = publication_order_series(model_.theta, corpus_.records, kind, config_.null);
    return *slot;
  }

  const DivergenceMatrix& matrix() {
    if (!matrix_) matrix_ = DivergenceMatrix::from_thetas(model_.theta, config_.threads);
    return *matrix_;
  }

  const GreedyPath& greedy(SurpriseKind kind) {
    if (kind.measure == SurpriseKind::Measure::text_to_text) {
      if (!greedy_t2t_) greedy_t2t_ = greedy_t2t_path(matrix(), 0);
      return *greedy_t2t_;
    }
    if (!greedy_t2p_) greedy_t2p_ = greedy_t2p_path(model_.theta, 0);
    return *greedy_t2p_;
  }

  const RankDistribution& ranks() {
    if (!ranks_) {
      std::vector<std::size_t> observed(corpus_.records.size());
      std::iota(observed.begin(), observed.end(), std::size_t{0});
      ranks_ = rank_distribution(matrix(), observed, null(SurpriseKind::t2t()).orders);
    }
    return *ranks_;
  }

  // Dates of series positions: position i is document i.
  std::vector<Date> series_dates() const {
    std::vector<Date> dates;
    for (std::size_t i = 1; i < corpus_.records.size(); ++i) dates.push_back(corpus_.records[i].read_date);
    return dates;
  }

  std::vector<double> epoch_input(SurpriseKind kind) {
    auto values = series(kind).values;
    if (config_.epoch_input == "relative") {
      const auto& mean = null(kind).position_mean;
      for (std::size_t i = 0; i < values.size(); ++i) values[i] -= mean[i];
    }
    return values;
  }

  std::size_t effective_n_max() const {
    const auto dates = series_dates();
    return std::min(config_.epochs.n_max,
                    max_feasible_epochs(corpus_.records.size() - 1, config_.epochs, dates));
  }

  // Empty when no epoch is feasible under the minimum length.
  const std::optional<EpochSelection>& epochs(SurpriseKind kind) {
    auto& slot = kind.measure == SurpriseKind::Measure::text_to_text ? epochs_t2t_ : epochs_t2p_;
    if (!slot) {
      const std::size_t n_max = effective_n_max();
      if (n_max == 0) {
        slot.emplace(std::nullopt);
      } else {
        auto cfg = config_.epochs;
        cfg.n_max = n_max;
        const auto dates = series_dates();
        slot.emplace(select_n(epoch_input(kind), cfg, dates));
      }
    }
    return *slot;
  }

  // ---- exports ----

  void export_series(SurpriseKind kind) {
    const auto& s = series(kind);
    const auto tag = detail::kind_tag(kind);
    detail::CsvWriter csv(dir_ / ("series_" + tag + ".csv"), {"position", "doc_id", "date", "value_bits"});
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      const auto& rec = corpus_.records[i + 1];
      csv.row({std::to_string(i + 1), rec.id, format_iso_date(rec.read_date), detail::fmt_double(s.values[i])});
    }
    detail::write_json(dir_ / ("series_" + tag + ".json"), series_metadata(s));
  }

  void export_null(SurpriseKind kind) {
    const auto& ens = null(kind);
    const auto tag = detail::kind_tag(kind);
    detail::CsvWriter csv(dir_ / ("null_" + tag + ".csv"), {"position", "null_mean_bits", "null_std_bits"});
    for (std::size_t i = 0; i < ens.position_mean.size(); ++i)
      csv.row({std::to_string(i + 1), detail::fmt_double(ens.position_mean[i]), detail::fmt_double(ens.position_std[i])});
    detail::write_json(dir_ / ("null_" + tag + ".json"), null_json(ens));

    const auto cumulative = cumulative_relative(series(kind).values, ens.position_mean);
    detail::CsvWriter cum(dir_ / ("cumulative_" + tag + ".csv"),
                          {"position", "doc_id", "date", "value_bits", "null_mean_bits", "cumulative_relative_bits"});
    for (std::size_t i = 0; i < cumulative.size(); ++i) {
      const auto& rec = corpus_.records[i + 1];
      cum.row({std::to_string(i + 1), rec.id, format_iso_date(rec.read_date), detail::fmt_double(ens.observed[i]),
               detail::fmt_double(ens.position_mean[i]), detail::fmt_double(cumulative[i])});
    }
  }

  void export_publication(SurpriseKind kind) {
    const auto& p = publication(kind);
    const auto tag = detail::kind_tag(kind);
    // Ordinal positions; doc_id/date describe the base (reading-index) tie order.
    detail::CsvWriter csv(dir_ / ("puborder_" + tag + ".csv"), {"position", "doc_id", "date", "value_bits"});
    for (std::size_t i = 0; i < p.series.values.size(); ++i) {
      const auto& rec = corpus_.records[p.base[i + 1]];
      csv.row({std::to_string(i + 1), rec.id, std::to_string(rec.pub_year), detail::fmt_double(p.series.values[i])});
    }
    auto meta = series_metadata(p.series);
    meta["exact_within_year_average"] = p.exact;
    meta["mean_bits"] = p.series.mean();
    detail::write_json(dir_ / ("puborder_" + tag + ".json"), meta);
  }

  void export_greedy(SurpriseKind kind) {
    const auto& g = greedy(kind);
    const auto tag = detail::kind_tag(kind);
    detail::CsvWriter csv(dir_ / ("greedy_" + tag + ".csv"), {"step", "doc_id", "step_bits"});
    for (std::size_t s = 0; s < g.order.size(); ++s)
      csv.row({std::to_string(s), corpus_.records[g.order[s]].id, s == 0 ? "" : detail::fmt_double(g.step_bits[s - 1])});
  }

  void export_matrix() {
    const auto& m = matrix();
    std::vector<std::string> header{"from"};
    for (const auto& r : corpus_.records) header.push_back(r.id);
    detail::CsvWriter csv(dir_ / "matrix.csv", header);
    for (std::size_t i = 0; i < m.size(); ++i) {
      std::vector<std::string> row{corpus_.records[i].id};
      for (std::size_t j = 0; j < m.size(); ++j) row.push_back(detail::fmt_double(m(i, j)));
      csv.row(row);
    }
  }

  void export_ranks() {
    const auto& r = ranks();
    detail::CsvWriter csv(dir_ / "ranks.csv", {"rank_low", "rank_high", "observed", "null", "observed_fraction",
                                               "null_fraction", "ratio", "band_low", "band_high"});
    for (const auto& b : r.bins)
      csv.row({std::to_string(b.low), std::to_string(b.high), std::to_string(b.observed), std::to_string(b.null),
               detail::fmt_double(b.observed_fraction), detail::fmt_double(b.null_fraction),
               detail::fmt_double(b.ratio), detail::fmt_double(b.band_low), detail::fmt_double(b.band_high)});
    detail::write_json(dir_ / "ranks.json", ranks_json());
  }

  // False when the minimum epoch length leaves no feasible segmentation.
  bool export_epochs(SurpriseKind kind) {
    const auto& sel = epochs(kind);
    if (!sel) return false;
    const auto tag = detail::kind_tag(kind);
    detail::write_json(dir_ / ("epochs_" + tag + ".json"), epochs_json(kind));
    auto cfg = config_.epochs;
    const auto dates = series_dates();
    detail::CsvWriter csv(dir_ / ("landscape_" + tag + ".csv"), {"break_index", "doc_id", "date", "log_likelihood", "delta_loglik"});
    if (max_feasible_epochs(dates.size(), cfg, dates) >= 2) {
      for (const auto& p : break_landscape(epoch_input(kind), cfg, dates)) {
        const auto& rec = corpus_.records[p.break_index + 1];
        csv.row({std::to_string(p.break_index), rec.id, format_iso_date(rec.read_date),
                 detail::fmt_double(p.log_likelihood), detail::fmt_double(p.delta)});
      }
    }
    return true;
  }

  // ---- JSON views ----

  nlohmann::json series_metadata(const SurpriseSeries& s) const {
    return {{"format_version", export_format_version},
            {"kind", s.kind.label()},
            {"ordering", s.ordering},
            {"units", "bits"},
            {"k", model_.params.k},
            {"model_fingerprint", model_.corpus_fingerprint + "/k" + std::to_string(model_.params.k) + "/seed" +
                                      std::to_string(model_.params.seed)}};
  }

  nlohmann::json null_json(const NullEnsemble& ens) const {
    return {{"format_version", export_format_version},
            {"kind", ens.kind.label()},
            {"config",
             {{"samples", config_.null.samples},
              {"seed", config_.null.seed},
              {"within_year_exact_threshold", config_.null.within_year_exact_threshold},
              {"within_year_samples", config_.null.within_year_samples}}},
            {"observed_mean_bits", ens.observed_aggregate},
            {"null_mean_bits", ens.null_mean},
            {"null_std_bits", ens.null_std},
            {"null_percentile_2_5", ens.percentile_low},
            {"null_percentile_97_5", ens.percentile_high},
            {"p_value", ens.p_value},
            {"p_value_definition", "(#{null <= observed} + 1) / (samples + 1)"}};
  }

  nlohmann::json ranks_json() {
    const auto& r = ranks();
    nlohmann::json bins = nlohmann::json::array();
    for (const auto& b : r.bins)
      bins.push_back({{"rank_low", b.low}, {"rank_high", b.high}, {"observed", b.observed}, {"null", b.null},
                      {"ratio", b.ratio}, {"band_low", b.band_low}, {"band_high", b.band_high}});
    return {{"format_version", export_format_version}, {"observed_ranks", r.observed_ranks}, {"bins", bins}};
  }

  nlohmann::json epochs_json(SurpriseKind kind) {
    const auto& sel = epochs(kind);
    if (!sel) return nullptr;
    auto model_json = [&](const EpochModel& m) {
      nlohmann::json breaks = nlohmann::json::array();
      for (const auto& [index, date] : break_to_date(m, corpus_.records, 1))
        breaks.push_back({{"index", index}, {"doc_id", corpus_.records[index + 1].id}, {"date", format_iso_date(date)}});
      nlohmann::json segs = nlohmann::json::array();
      for (const auto& s : m.segments)
        segs.push_back({{"start", s.start}, {"end", s.end}, {"mean", s.mean}, {"variance", s.variance},
                        {"log_likelihood", s.log_likelihood}});
      return nlohmann::json{{"n", m.n()}, {"parameters", m.parameter_count()}, {"breaks", breaks},
                            {"segments", segs}, {"log_likelihood", m.log_likelihood}, {"aic", m.aic}};
    };
    nlohmann::json table = nlohmann::json::array();
    for (const auto& row : sel->table) {
      auto j = model_json(row.model);
      j["relative_likelihood"] = row.relative_likelihood;
      j["delta_loglik"] = row.delta_loglik ? nlohmann::json(*row.delta_loglik) : nlohmann::json(nullptr);
      table.push_back(std::move(j));
    }
    const auto& ens = null(kind);
    return {{"format_version", export_format_version},
            {"kind", kind.label()},
            {"input", config_.epoch_input},
            {"n_max", effective_n_max()},
            {"selected", model_json(sel->best)},
            {"relative_means", epoch_mean_relative(series(kind).values, ens.position_mean, sel->best.breaks)},
            {"aic_table", table}};
  }

  nlohmann::json summary() {
    nlohmann::json table2, table3, aic;
    for (auto kind : {SurpriseKind::t2t(), SurpriseKind::t2p()}) {
      const auto tag = detail::kind_tag(kind);
      const auto& ens = null(kind);
      table2[tag] = {{"observed", ens.observed_aggregate},
                     {"null_mean", ens.null_mean},
                     {"null_std", ens.null_std},
                     {"null_percentile_2_5", ens.percentile_low},
                     {"null_percentile_97_5", ens.percentile_high},
                     {"p_value", ens.p_value},
                     {"greedy", greedy(kind).mean_bits()},
                     {"publication_order", publication(kind).series.mean()}};
      const auto e = epochs_json(kind);
      if (e.is_null()) {
        table3[tag] = nullptr;
        aic[tag] = nullptr;
      } else {
        table3[tag] = {{"breaks", e["selected"]["breaks"]}, {"relative_means", e["relative_means"]}};
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& row : e["aic_table"])
          rows.push_back({{"n", row["n"]}, {"parameters", row["parameters"]}, {"breaks", row["breaks"]},
                          {"log_likelihood", row["log_likelihood"]}, {"aic", row["aic"]},
                          {"relative_likelihood", row["relative_likelihood"]}, {"delta_loglik", row["delta_loglik"]}});
        aic[tag] = rows;
      }
    }
    const auto& r = ranks();
    return {{"k", model_.params.k},
            {"seed", model_.params.seed},
            {"alpha", model_.params.alpha_value()},
            {"table2", table2},
            {"table3", table3},
            {"aic", aic},
            {"nearest_neighbor_ratio", r.bins.empty() ? 0.0 : r.bins.front().ratio}};
  }

private:
  const RunConfig& config_;
  const Corpus& corpus_;
  const TopicModel& model_;
  std::filesystem::path dir_;
  std::optional<SurpriseSeries> t2t_, t2p_;
  std::optional<NullEnsemble> null_t2t_, null_t2p_;
  std::optional<PublicationOrderSeries> pub_t2t_, pub_t2p_;
  std::optional<DivergenceMatrix> matrix_;
  std::optional<GreedyPath> greedy_t2t_, greedy_t2p_;
  std::optional<RankDistribution> ranks_;
  std::optional<std::optional<EpochSelection>> epochs_t2t_, epochs_t2p_;
};

// ---- subcommands ----

inline void cmd_ingest(const RunConfig& config, std::ostream& out) {
  if (config.manifest.empty()) throw InputError("cli", "ingest needs corpus.manifest");
  const auto corpus = obtain_corpus(config);
  out << stats_json(corpus.stats).dump() << '\n';
}

inline void cmd_train(const RunConfig& config, std::ostream& out) {
  const auto corpus = obtain_corpus(config);
  const auto models = obtain_models(config, corpus);
  nlohmann::json list = nlohmann::json::array();
  for (const auto& m : models) {
    auto meta = model_metadata(m);
    meta.erase("created_unix");
    list.push_back(meta);
  }
  out << list.dump() << '\n';
}

// Runs `body(analysis)` for every k.
template <typename Body>
void for_each_model(const RunConfig& config, Body&& body) {
  const auto corpus = obtain_corpus(config);
  const auto models = obtain_models(config, corpus);
  for (const auto& model : models) {
    Analysis analysis(config, corpus, model);
    body(analysis, corpus);
  }
}

inline void cmd_surprise(const RunConfig& config, std::ostream& out) {
  for_each_model(config, [&](Analysis& a, const Corpus&) {
    for (auto kind : {SurpriseKind::t2t(), SurpriseKind::t2p()}) a.export_series(kind);
    out << a.directory().generic_string() << '\n';
  });
}

inline void cmd_null(const RunConfig& config, std::ostream& out) {
  for_each_model(config, [&](Analysis& a, const Corpus&) {
    nlohmann::json j;
    for (auto kind : {SurpriseKind::t2t(), SurpriseKind::t2p()}) {
      a.export_null(kind);
      j[detail::kind_tag(kind)] = a.null_json(a.null(kind));
    }
    j["k"] = a.k();
    out << j.dump() << '\n';
  });
}

inline void cmd_puborder(const RunConfig& config, std::ostream& out) {
  for_each_model(config, [&](Analysis& a, const Corpus&) {
    for (auto kind : {SurpriseKind::t2t(), SurpriseKind::t2p()}) a.export_publication(kind);
    out << a.directory().generic_string() << '\n';
  });
}

inline void cmd_greedy(const RunConfig& config, std::ostream& out) {
  for_each_model(config, [&](Analysis& a, const Corpus&) {
    nlohmann::json j{{"k", a.k()}};
    for (auto kind : {SurpriseKind::t2t(), SurpriseKind::t2p()}) {
      a.export_greedy(kind);
      j[detail::kind_tag(kind)] = a.greedy(kind).mean_bits();
    }
    if (config.export_matrix) a.export_matrix();
    out << j.dump() << '\n';
  });
}

inline void cmd_ranks(const RunConfig& config, std::ostream& out) {
  for_each_model(config, [&](Analysis& a, const Corpus&) {
    a.export_ranks();
    out << a.directory().generic_string() << '\n';
  });
}

inline void cmd_epochs(const RunConfig& config, std::ostream& out) {
  for_each_model(config, [&](Analysis& a, const Corpus&) {
    nlohmann::json j{{"k", a.k()}};
    for (auto kind : {SurpriseKind::t2t(), SurpriseKind::t2p()}) {
      a.export_epochs(kind);
      j[detail::kind_tag(kind)] = a.epochs_json(kind);
    }
    out << j.dump() << '\n';
  });
}

inline void export_reading_density(const Corpus& corpus, const std::filesystem::path& path) {
  std::vector<Date> dates;
  for (const auto& r : corpus.records) dates.push_back(r.read_date);
  detail::CsvWriter csv(path, {"month", "readings_per_month"});
  if (dates.empty()) return;
  for (const auto& p : reading_density(dates, 6)) csv.row({format_iso_date(p.month), detail::fmt_double(p.density)});
}

// Full analysis for every k. Writes per-k exports, summary.json and the
// bundle manifest (bundle.json) listing every export.
inline nlohmann::json cmd_run(const RunConfig& config, std::ostream& out) {
  config.validate();
  const auto corpus = obtain_corpus(config);
  const auto models = obtain_models(config, corpus);

  nlohmann::json files = nlohmann::json::array({"corpus.json", "summary.json", "reading_density.csv"});
  export_reading_density(corpus, config.out / "reading_density.csv");

  nlohmann::json per_k = nlohmann::json::array();
  for (const auto& model : models) {
    Analysis a(config, corpus, model);
    const std::string prefix = a.directory().filename().generic_string() + "/";
    for (auto kind : {SurpriseKind::t2t(), SurpriseKind::t2p()}) {
      const auto tag = detail::kind_tag(kind);
      a.export_series(kind);
      a.export_null(kind);
      a.export_publication(kind);
      a.export_greedy(kind);
      for (const auto* name : {"series_", "null_", "puborder_"}) {
        files.push_back(prefix + name + tag + ".csv");
        files.push_back(prefix + name + tag + ".json");
      }
      files.push_back(prefix + "cumulative_" + tag + ".csv");
      files.push_back(prefix + "greedy_" + tag + ".csv");
      if (a.export_epochs(kind)) {
        files.push_back(prefix + "epochs_" + tag + ".json");
        files.push_back(prefix + "landscape_" + tag + ".csv");
      }
    }
    a.export_ranks();
    files.push_back(prefix + "ranks.csv");
    files.push_back(prefix + "ranks.json");
    files.push_back(prefix + "model.bin");
    files.push_back(prefix + "model.json");
    if (config.export_matrix) {
      a.export_matrix();
      files.push_back(prefix + "matrix.csv");
    }
    auto s = a.summary();
    auto file = s;
    file["format"] = "readpath.summary.k";
    file["format_version"] = export_format_version;
    detail::write_json(a.directory() / "summary.json", file);
    files.push_back(prefix + "summary.json");
    per_k.push_back(std::move(s));
  }

  nlohmann::json regression = nullptr;
  if (corpus.records.size() >= 2) {
    try {
      const auto r = pub_read_regression(corpus.records);
      regression = {{"slope", r.slope}, {"intercept", r.intercept}, {"r2", r.r2}};
    } catch (const InputError&) {
    }
  }
  nlohmann::json summary = {{"format", "readpath.summary"},
                            {"format_version", export_format_version},
                            {"corpus", stats_json(corpus.stats)},
                            {"corpus_fingerprint", corpus_fingerprint(corpus)},
                            {"config", config.echo()},
                            {"pub_read_regression", regression},
                            {"models", per_k}};
  detail::write_json(config.out / "summary.json", summary);
  detail::write_json(config.out / "bundle.json",
                     {{"format", "readpath.bundle"}, {"format_version", export_format_version}, {"files", files}});
  out << (config.out / "summary.json").generic_string() << '\n';
  return summary;
}

namespace detail {

inline std::string fixed(const nlohmann::json& v, int precision = 3) {
  if (v.is_null()) return "-";
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v.get<double>();
  return os.str();
}

inline std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

} // namespace detail

// Text tables from a bundle written by cmd_run. Every file listed in the
// bundle manifest must exist.
inline void cmd_report(const std::filesystem::path& bundle, std::ostream& out) {
  const auto manifest = detail::read_json(bundle / "bundle.json");
  for (const auto& f : manifest.at("files")) {
    const auto path = bundle / f.get<std::string>();
    if (!std::filesystem::is_regular_file(path)) throw InputError("cli", "bundle is missing " + f.get<std::string>());
  }
  const auto summary = detail::read_json(bundle / "summary.json");
  for (const auto& m : summary.at("models")) {
    out << "k = " << m.at("k").get<std::size_t>() << "\n";
    out << "Surprise (bits/step)\n";
    out << "  kind    observed   null mean   null std  p-value    greedy  pub-order\n";
    for (const auto* tag : {"t2t", "t2p"}) {
      const auto& t = m.at("table2").at(tag);
      out << "  " << std::string(tag) << "  " << detail::pad(detail::fixed(t.at("observed")), 10)
          << detail::pad(detail::fixed(t.at("null_mean")), 12) << detail::pad(detail::fixed(t.at("null_std")), 11)
          << detail::pad(detail::fixed(t.at("p_value"), 4), 9) << detail::pad(detail::fixed(t.at("greedy")), 10)
          << detail::pad(detail::fixed(t.at("publication_order")), 11) << "\n";
    }
    out << "Epochs (mean surprise relative to null, bits)\n";
    for (const auto* tag : {"t2t", "t2p"}) {
      const auto& t = m.at("table3").at(tag);
      out << "  " << tag << ":";
      if (t.is_null()) {
        out << " no feasible epochs\n";
        continue;
      }
      for (std::size_t i = 0; i < t.at("relative_means").size(); ++i) {
        const auto& b = t.at("breaks").at(i);
        out << "  [" << b.at("date").get<std::string>() << "] " << detail::fixed(t.at("relative_means").at(i));
      }
      out << "\n";
    }
    out << "\n";
  }
}

} // namespace readpath
