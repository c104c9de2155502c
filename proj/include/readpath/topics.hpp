#pragma once

// LDA by collapsed Gibbs sampling over a CorpusMatrix.

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "readpath/corpus.hpp"
#include "readpath/error.hpp"
#include "readpath/matrix.hpp"
#include "readpath/parallel.hpp"
#include "readpath/rng.hpp"
#include "readpath/surprise.hpp"

namespace readpath {

struct TopicModelParams {
  std::size_t k = 80;
  std::optional<double> alpha; // symmetric; defaults to 50 / k
  double beta = 0.01;
  std::size_t iterations = 1000;
  std::uint64_t seed = 0;
  // Average theta/phi over every sweep after `burn_in` instead of taking the
  // final state.
  bool average_samples = false;
  std::size_t burn_in = 0;

  double alpha_value() const { return alpha ? *alpha : 50.0 / static_cast<double>(k); }

  void validate() const {
    if (k < 2) throw InputError("topics", "k must be at least 2");
    if (!(alpha_value() > 0.0)) throw InputError("topics", "alpha must be positive");
    if (!(beta > 0.0)) throw InputError("topics", "beta must be positive");
    if (iterations < 1) throw InputError("topics", "iterations must be at least 1");
    if (average_samples && burn_in >= iterations)
      throw InputError("topics", "burn_in must be smaller than iterations when averaging");
  }
};

struct TopicModel {
  Matrix theta; // documents x k
  Matrix phi;   // k x vocabulary
  TopicModelParams params;
  std::string corpus_fingerprint;

  std::size_t documents() const noexcept { return theta.rows(); }
  std::size_t topics() const noexcept { return theta.cols(); }
};

namespace detail {

class GibbsState {
public:
  GibbsState(const CorpusMatrix& corpus, std::size_t vocab, const TopicModelParams& params)
      : k_(params.k), vocab_(vocab), alpha_(params.alpha_value()), beta_(params.beta),
        rng_(params.seed), doc_topic_(corpus.size() * k_, 0), topic_word_(k_ * vocab, 0),
        topic_total_(k_, 0), weights_(k_) {
    doc_start_.reserve(corpus.size() + 1);
    doc_start_.push_back(0);
    for (const auto& doc : corpus.documents) {
      for (const auto& tc : doc) {
        if (tc.term >= vocab) throw InputError("topics", "term index outside the vocabulary");
        words_.insert(words_.end(), tc.count, tc.term);
      }
      doc_start_.push_back(words_.size());
    }
    assignment_.resize(words_.size());
    for (std::size_t d = 0; d + 1 < doc_start_.size(); ++d) {
      for (std::size_t i = doc_start_[d]; i < doc_start_[d + 1]; ++i) {
        const auto z = static_cast<std::uint32_t>(rng_.below(k_));
        assignment_[i] = z;
        ++doc_topic_[d * k_ + z];
        ++topic_word_[z * vocab_ + words_[i]];
        ++topic_total_[z];
      }
    }
  }

  std::size_t tokens() const noexcept { return words_.size(); }

  void sweep() {
    const double vbeta = static_cast<double>(vocab_) * beta_;
    for (std::size_t d = 0; d + 1 < doc_start_.size(); ++d) {
      std::uint32_t* nd = &doc_topic_[d * k_];
      for (std::size_t i = doc_start_[d]; i < doc_start_[d + 1]; ++i) {
        const std::uint32_t w = words_[i];
        std::uint32_t z = assignment_[i];
        --nd[z];
        --topic_word_[z * vocab_ + w];
        --topic_total_[z];
        double total = 0.0;
        for (std::size_t t = 0; t < k_; ++t) {
          total += (nd[t] + alpha_) * (topic_word_[t * vocab_ + w] + beta_) / (topic_total_[t] + vbeta);
          weights_[t] = total;
        }
        const double u = rng_.uniform() * total;
        z = 0;
        while (z + 1 < k_ && weights_[z] <= u) ++z;
        assignment_[i] = z;
        ++nd[z];
        ++topic_word_[z * vocab_ + w];
        ++topic_total_[z];
      }
    }
  }

  void accumulate(Matrix& theta, Matrix& phi) const {
    const double kalpha = static_cast<double>(k_) * alpha_;
    const double vbeta = static_cast<double>(vocab_) * beta_;
    for (std::size_t d = 0; d < theta.rows(); ++d) {
      const double nd = static_cast<double>(doc_start_[d + 1] - doc_start_[d]);
      for (std::size_t t = 0; t < k_; ++t) theta(d, t) += (doc_topic_[d * k_ + t] + alpha_) / (nd + kalpha);
    }
    for (std::size_t t = 0; t < k_; ++t)
      for (std::size_t v = 0; v < vocab_; ++v)
        phi(t, v) += (topic_word_[t * vocab_ + v] + beta_) / (topic_total_[t] + vbeta);
  }

private:
  std::size_t k_;
  std::size_t vocab_;
  double alpha_;
  double beta_;
  Rng rng_;
  std::vector<std::uint32_t> words_;
  std::vector<std::size_t> doc_start_;
  std::vector<std::uint32_t> assignment_;
  std::vector<std::uint32_t> doc_topic_;
  std::vector<std::uint32_t> topic_word_;
  std::vector<std::uint32_t> topic_total_;
  std::vector<double> weights_;
};

inline void renormalize_rows(Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    double sum = 0.0;
    for (double x : row) sum += x;
    for (double& x : row) x /= sum;
  }
}

} // namespace detail

// Deterministic for a fixed corpus and params: the chain is sequential and
// draws only from Rng(params.seed).
inline TopicModel train(const CorpusMatrix& corpus, std::size_t vocabulary_size,
                        const TopicModelParams& params, std::string fingerprint = {}) {
  params.validate();
  if (corpus.size() == 0) throw InputError("topics", "empty corpus");
  for (std::size_t d = 0; d < corpus.size(); ++d)
    if (corpus.documents[d].empty())
      throw InputError("topics", "document " + std::to_string(d) + " is empty");
  if (vocabulary_size == 0) throw InputError("topics", "empty vocabulary");

  detail::GibbsState state(corpus, vocabulary_size, params);
  if (params.k > state.tokens())
    throw InputError("topics", "k = " + std::to_string(params.k) + " exceeds the corpus token count " +
                                   std::to_string(state.tokens()));

  TopicModel model;
  model.params = params;
  model.params.alpha = params.alpha_value();
  model.corpus_fingerprint = std::move(fingerprint);
  model.theta = Matrix(corpus.size(), params.k);
  model.phi = Matrix(params.k, vocabulary_size);

  for (std::size_t it = 0; it < params.iterations; ++it) {
    state.sweep();
    if (params.average_samples && it >= params.burn_in) state.accumulate(model.theta, model.phi);
  }
  if (!params.average_samples) state.accumulate(model.theta, model.phi);
  // Accumulated rows are sums of simplex points; dividing by the row sum
  // averages them and trims rounding in the single-state case.
  detail::renormalize_rows(model.theta);
  detail::renormalize_rows(model.phi);
  return model;
}

inline TopicModel train(const Corpus& corpus, const TopicModelParams& params) {
  return train(corpus.matrix, corpus.vocabulary.size(), params, corpus_fingerprint(corpus));
}

inline TopicDistribution theta_row(const TopicModel& model, std::size_t doc_index) {
  if (doc_index >= model.documents())
    throw InputError("topics", "document index " + std::to_string(doc_index) + " out of range");
  const auto row = model.theta.row(doc_index);
  return TopicDistribution(std::vector<double>(row.begin(), row.end()));
}

// One independent model per k; model i uses seed base.seed + i. With an unset
// alpha each model gets its own 50 / k.
inline std::vector<TopicModel> sweep_k(const Corpus& corpus, const std::vector<std::size_t>& k_list,
                                       const TopicModelParams& base, unsigned threads = 1) {
  if (k_list.empty()) throw InputError("topics", "empty k list");
  std::vector<TopicModel> models(k_list.size());
  parallel_for(k_list.size(), threads, [&](std::size_t i) {
    TopicModelParams p = base;
    p.k = k_list[i];
    p.seed = base.seed + i;
    models[i] = train(corpus, p);
  });
  return models;
}

// Binary model artifact: magic, version, shape, params, fingerprint, then
// theta and phi as little-endian IEEE doubles in row-major order. Run
// metadata (timestamps) lives only in the JSON sidecar.
inline constexpr std::uint32_t model_format_version = 1;

namespace detail {

template <typename T>
void put(std::ostream& out, T value) {
  static_assert(std::endian::native == std::endian::little, "little-endian host expected");
  out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof value);
  if (!in) throw InputError("topics", "truncated model file");
  return value;
}

} // namespace detail

inline void save_model(const TopicModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("topics", "cannot write " + path.string());
  out.write("RPTM", 4);
  detail::put<std::uint32_t>(out, model_format_version);
  detail::put<std::uint64_t>(out, model.theta.rows());
  detail::put<std::uint64_t>(out, model.params.k);
  detail::put<std::uint64_t>(out, model.phi.cols());
  detail::put<double>(out, model.params.alpha_value());
  detail::put<double>(out, model.params.beta);
  detail::put<std::uint64_t>(out, model.params.iterations);
  detail::put<std::uint64_t>(out, model.params.seed);
  detail::put<std::uint8_t>(out, model.params.average_samples ? 1 : 0);
  detail::put<std::uint64_t>(out, model.params.burn_in);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(model.corpus_fingerprint.size()));
  out.write(model.corpus_fingerprint.data(), static_cast<std::streamsize>(model.corpus_fingerprint.size()));
  for (double x : model.theta.data()) detail::put<double>(out, x);
  for (double x : model.phi.data()) detail::put<double>(out, x);
}

inline TopicModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("topics", "cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "RPTM", 4) != 0) throw InputError("topics", "not a model file: " + path.string());
  if (detail::get<std::uint32_t>(in) != model_format_version)
    throw InputError("topics", "unsupported model version in " + path.string());
  TopicModel model;
  const auto docs = detail::get<std::uint64_t>(in);
  model.params.k = detail::get<std::uint64_t>(in);
  const auto vocab = detail::get<std::uint64_t>(in);
  model.params.alpha = detail::get<double>(in);
  model.params.beta = detail::get<double>(in);
  model.params.iterations = detail::get<std::uint64_t>(in);
  model.params.seed = detail::get<std::uint64_t>(in);
  model.params.average_samples = detail::get<std::uint8_t>(in) != 0;
  model.params.burn_in = detail::get<std::uint64_t>(in);
  model.corpus_fingerprint.resize(detail::get<std::uint32_t>(in));
  in.read(model.corpus_fingerprint.data(), static_cast<std::streamsize>(model.corpus_fingerprint.size()));
  model.theta = Matrix(docs, model.params.k);
  model.phi = Matrix(model.params.k, vocab);
  for (double& x : model.theta.data()) x = detail::get<double>(in);
  for (double& x : model.phi.data()) x = detail::get<double>(in);
  return model;
}

inline nlohmann::json model_metadata(const TopicModel& model) {
  const auto now = std::chrono::system_clock::now();
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
  return {{"format", "readpath.model"},
          {"format_version", model_format_version},
          {"k", model.params.k},
          {"alpha", model.params.alpha_value()},
          {"beta", model.params.beta},
          {"iterations", model.params.iterations},
          {"seed", model.params.seed},
          {"estimate", model.params.average_samples ? "averaged" : "final_state"},
          {"burn_in", model.params.burn_in},
          {"documents", model.theta.rows()},
          {"vocabulary_size", model.phi.cols()},
          {"corpus_fingerprint", model.corpus_fingerprint},
          {"created_unix", secs}};
}

} // namespace readpath
