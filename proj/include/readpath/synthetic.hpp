#pragma once

// Planted-topic corpora for demos and recovery checks: every topic owns a
// disjoint block of made-up words, and each document mixes the topics with
// Dirichlet-drawn weights.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "readpath/corpus.hpp"
#include "readpath/dates.hpp"
#include "readpath/matrix.hpp"
#include "readpath/rng.hpp"

namespace readpath::synthetic {

struct Spec {
  std::size_t documents = 200;
  std::size_t topics = 2;
  std::size_t words_per_topic = 50;
  std::size_t tokens_per_document = 200;
  double concentration = 1.0; // symmetric Dirichlet over topic weights
  std::uint64_t seed = 1;
  int first_year = 1837;
  int span_years = 20;
  int max_publication_lag = 10;
};

struct Corpus {
  std::vector<VolumeRecord> records;
  std::vector<std::vector<std::string>> tokens;
  Matrix planted; // documents x topics
};

// Marsaglia-Tsang; shape < 1 is boosted by U^(1/shape).
inline double gamma(Rng& rng, double shape) {
  if (shape < 1.0) {
    double u = rng.uniform();
    while (u <= 0.0) u = rng.uniform();
    return gamma(rng, shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = 0.0, v = 0.0;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

inline std::vector<double> dirichlet(Rng& rng, std::size_t k, double concentration) {
  std::vector<double> w(k);
  double sum = 0.0;
  for (auto& x : w) sum += (x = gamma(rng, concentration));
  for (auto& x : w) x /= sum;
  return w;
}

inline std::string word(std::size_t topic, std::size_t index) {
  std::string w = "top";
  w.push_back(static_cast<char>('a' + topic % 26));
  if (topic >= 26) w.push_back(static_cast<char>('a' + topic / 26 % 26));
  w += "w";
  do {
    w.push_back(static_cast<char>('a' + index % 26));
    index /= 26;
  } while (index > 0);
  return w;
}

inline Corpus generate(const Spec& spec) {
  Rng rng(spec.seed);
  Corpus c;
  c.planted = Matrix(spec.documents, spec.topics);
  const auto start = std::chrono::sys_days{std::chrono::year{spec.first_year} / 1 / 1};
  const long span_days = static_cast<long>(spec.span_years) * 365;
  for (std::size_t d = 0; d < spec.documents; ++d) {
    const auto weights = dirichlet(rng, spec.topics, spec.concentration);
    for (std::size_t t = 0; t < spec.topics; ++t) c.planted(d, t) = weights[t];
    std::vector<std::string> doc;
    for (std::size_t i = 0; i < spec.tokens_per_document; ++i) {
      const double u = rng.uniform();
      std::size_t t = 0;
      double acc = weights[0];
      while (t + 1 < spec.topics && u >= acc) acc += weights[++t];
      doc.push_back(word(t, rng.below(spec.words_per_topic)));
    }
    c.tokens.push_back(std::move(doc));

    VolumeRecord rec;
    rec.id = "doc" + std::to_string(d);
    rec.title = "Synthetic volume " + std::to_string(d);
    const long offset = spec.documents > 1 ? static_cast<long>(d) * span_days / static_cast<long>(spec.documents) : 0;
    rec.read_date = Date{start + std::chrono::days{offset}};
    rec.pub_year = year_of(rec.read_date) - static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.max_publication_lag) + 1));
    rec.read_seq = d;
    rec.text_path = "texts/" + rec.id + ".txt";
    c.records.push_back(std::move(rec));
  }
  return c;
}

// Writes manifest.csv, texts/*.txt and an empty stopwords.txt under `dir`.
inline std::filesystem::path write(const Corpus& c, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "texts");
  std::ofstream manifest(dir / "manifest.csv", std::ios::binary);
  manifest << "id,title,read_date,pub_year,text_path\n";
  for (std::size_t d = 0; d < c.records.size(); ++d) {
    const auto& r = c.records[d];
    manifest << r.id << ',' << r.title << ',' << format_iso_date(r.read_date) << ',' << r.pub_year << ','
             << r.text_path.generic_string() << '\n';
    std::ofstream text(dir / r.text_path, std::ios::binary);
    for (std::size_t i = 0; i < c.tokens[d].size(); ++i)
      text << c.tokens[d][i] << ((i + 1) % 12 == 0 ? '\n' : ' ');
    text << '\n';
  }
  std::ofstream(dir / "stopwords.txt", std::ios::binary) << "the\nand\nof\n";
  return dir / "manifest.csv";
}

} // namespace readpath::synthetic
