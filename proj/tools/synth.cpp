// Writes a planted-topic demo corpus (manifest, texts, stopwords).

#include <iostream>

#include "CLI11.hpp"
#include "readpath/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic reading corpus", "readpath_synth"};
  readpath::synthetic::Spec spec;
  std::string dir = "synthetic-corpus";
  app.add_option("--dir", dir, "Output directory");
  app.add_option("--documents", spec.documents);
  app.add_option("--topics", spec.topics);
  app.add_option("--words-per-topic", spec.words_per_topic);
  app.add_option("--tokens", spec.tokens_per_document, "Tokens per document");
  app.add_option("--seed", spec.seed);
  app.add_option("--first-year", spec.first_year);
  app.add_option("--span-years", spec.span_years);
  CLI11_PARSE(app, argc, argv);
  const auto manifest = readpath::synthetic::write(readpath::synthetic::generate(spec), dir);
  std::cout << manifest.generic_string() << '\n';
  return 0;
}
