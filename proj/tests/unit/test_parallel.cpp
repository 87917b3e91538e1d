#include <random>

#include "sumeval/lexmetrics.hpp"
#include "sumeval/modelmetrics.hpp"
#include "sumeval/stats.hpp"
#include "test_util.hpp"

using namespace sumeval;

namespace {

std::string random_text(std::mt19937_64& rng, std::size_t words) {
  static const std::vector<std::string> vocab{"a",     "device", "comprising", "hinge", "frame", "sensor",
                                              "signal", "the",    "wherein",    "claim", "method", "."};
  std::string out;
  for (std::size_t i = 0; i < words; ++i) {
    if (!out.empty()) out += ' ';
    out += vocab[rng() % vocab.size()];
  }
  return out + ".";
}

}  // namespace

TEST_CASE("parallel lexical batch equals the serial reference") {
  std::mt19937_64 rng(21);
  std::vector<lexmetrics::PairInput> pairs;
  for (int i = 0; i < 64; ++i)
    pairs.push_back({"c" + std::to_string(i), "r" + std::to_string(i), random_text(rng, 5 + rng() % 40),
                     random_text(rng, 20 + rng() % 80)});
  CHECK(lexmetrics::score_batch(pairs) == lexmetrics::reference::score_batch_serial(pairs));
}

TEST_CASE("parallel cosine matrix and consistency scoring equal the serial reference") {
  std::mt19937_64 rng(22);
  providers::OneHotEmbedder embedder(64);
  providers::ExactMatchNli nli;
  for (int trial = 0; trial < 10; ++trial) {
    const auto cand = embedder.embed(random_text(rng, 3 + rng() % 30));
    const auto ref = embedder.embed(random_text(rng, 3 + rng() % 60));
    CHECK(modelmetrics::cosine_matrix(cand, ref) == modelmetrics::reference::cosine_matrix_serial(cand, ref));

    std::string summary_text, document_text;
    for (std::size_t i = 0, n = 1 + rng() % 4; i < n; ++i) summary_text += random_text(rng, 2 + rng() % 3) + " ";
    for (std::size_t i = 0, n = 1 + rng() % 6; i < n; ++i) document_text += random_text(rng, 2 + rng() % 3) + " ";
    const auto summary = textproc::split_sentences(summary_text);
    const auto document = textproc::split_sentences(document_text);
    const auto par = modelmetrics::summac_zs(summary, document, nli);
    const auto ser = modelmetrics::reference::summac_zs_serial(summary, document, nli);
    CHECK(par.score == ser.score);
    CHECK(par.sentence_matrix == ser.sentence_matrix);
  }
}

TEST_CASE("parallel correlation matrix and exact p-values equal the serial reference") {
  std::mt19937_64 rng(23);
  std::vector<std::string> units;
  for (int i = 0; i < 8; ++i) units.push_back("u" + std::to_string(i));
  std::vector<stats::ScoreVector> vectors;
  for (int v = 0; v < 6; ++v) {
    std::vector<double> values;
    for (int i = 0; i < 8; ++i) values.push_back(static_cast<double>(rng() % 5));
    vectors.push_back({"v" + std::to_string(v), values, units});
  }
  vectors.push_back({"flat", std::vector<double>(8, 2.0), units});
  for (auto method : {stats::Method::Pearson, stats::Method::Spearman, stats::Method::KendallTauB}) {
    const auto par = stats::correlation_matrix(vectors, method);
    const auto ser = stats::reference::correlation_matrix_serial(vectors, method);
    CHECK(par.to_csv() == ser.to_csv());
  }
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(8), y(8);
    for (auto& v : x) v = static_cast<double>(rng() % 4);
    for (auto& v : y) v = static_cast<double>(rng() % 4);
    CHECK(stats::kendall_exact_p_value(x, y) == stats::reference::kendall_exact_p_value_serial(x, y));
  }
}
