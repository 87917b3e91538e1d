#include <random>
#include <vector>

#include "doctest.h"
#include "oracles/lex_oracles.hpp"
#include "sumeval/errors.hpp"
#include "sumeval/lexmetrics.hpp"

using namespace sumeval;
using namespace sumeval::lexmetrics;
using textproc::make_token_seq;
using Tokens = std::vector<std::string>;

namespace {

Tokens random_tokens(std::mt19937_64& rng, std::size_t max_len, int alphabet = 5) {
  Tokens t(rng() % (max_len + 1));
  for (auto& s : t) s = std::string(1, static_cast<char>('a' + rng() % alphabet));
  return t;
}

double bleu1(const Tokens& c, const Tokens& r, BleuOptions o = {}) {
  std::vector<textproc::TokenSeq> refs{make_token_seq(r)};
  return bleu(make_token_seq(c), refs, o);
}

}  // namespace

TEST_CASE("rouge_n examples") {
  const auto cand = make_token_seq({"the", "cat", "sat"});
  const auto ref = make_token_seq({"the", "cat", "ran"});
  const auto r1 = rouge_n(cand, ref, 1);
  CHECK(r1.precision == doctest::Approx(2.0 / 3));
  CHECK(r1.recall == doctest::Approx(2.0 / 3));
  CHECK(r1.f1 == doctest::Approx(0.6667).epsilon(1e-4));
  const auto r2 = rouge_n(cand, ref, 2);
  CHECK(r2.precision == 0.5);
  CHECK(r2.recall == 0.5);
  CHECK(r2.f1 == 0.5);
  CHECK(rouge_n(cand, cand, 2).f1 == 1.0);
  CHECK_THROWS_AS(rouge_n(cand, ref, 3), Error);
}

TEST_CASE("rouge_l examples") {
  const auto r = rouge_l(make_token_seq({"a", "b", "c", "d"}), make_token_seq({"a", "c", "b", "d"}));
  CHECK(r.precision == 0.75);
  CHECK(r.recall == 0.75);
  CHECK(r.f1 == 0.75);
  const auto disjoint = rouge_l(make_token_seq({"a", "b"}), make_token_seq({"c", "d"}));
  CHECK(disjoint.f1 == 0.0);
  CHECK(disjoint.precision == 0.0);
  CHECK(rouge_l(make_token_seq({"x", "y"}), make_token_seq({"x", "y"})).f1 == 1.0);
  CHECK(lcs_length({"a", "b", "c", "d"}, {"a", "c", "b", "d"}) == 3);
}

TEST_CASE("empty sequences") {
  const auto empty = make_token_seq({});
  const auto some = make_token_seq({"a"});
  CHECK(rouge_n(empty, empty, 1).f1 == 1.0);
  CHECK(rouge_n(empty, some, 1).f1 == 0.0);
  CHECK(rouge_l(empty, empty).f1 == 1.0);
  CHECK(rouge_l(some, empty).f1 == 0.0);
  CHECK(bleu1({}, {"a"}) == 0.0);
}

TEST_CASE("rouge matches the brute-force oracles on random sequences") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const auto c = random_tokens(rng, 10), r = random_tokens(rng, 10);
    for (int n : {1, 2}) {
      const auto got = rouge_n(make_token_seq(c), make_token_seq(r), n);
      const auto want = oracle::rouge_n(c, r, static_cast<std::size_t>(n));
      CHECK(got.precision == doctest::Approx(want.p).epsilon(1e-12));
      CHECK(got.recall == doctest::Approx(want.r).epsilon(1e-12));
      CHECK(got.f1 == doctest::Approx(want.f).epsilon(1e-12));
    }
    CHECK(lcs_length(c, r) == oracle::lcs_exhaustive(c, r));
  }
}

TEST_CASE("rouge F1 is symmetric and precision/recall swap") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const auto c = make_token_seq(random_tokens(rng, 12)), r = make_token_seq(random_tokens(rng, 12));
    for (int n : {1, 2}) {
      const auto a = rouge_n(c, r, n), b = rouge_n(r, c, n);
      CHECK(a.f1 == doctest::Approx(b.f1));
      CHECK(a.precision == doctest::Approx(b.recall));
    }
    const auto a = rouge_l(c, r), b = rouge_l(r, c);
    CHECK(a.f1 == doctest::Approx(b.f1));
  }
}

TEST_CASE("scores stay in [0,1] and self-scores are 1") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const auto ct = random_tokens(rng, 12);
    const auto c = make_token_seq(ct), r = make_token_seq(random_tokens(rng, 12));
    for (double v : {rouge_n(c, r, 1).f1, rouge_n(c, r, 2).f1, rouge_l(c, r).f1, bleu1(ct, r.tokens)}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    if (!ct.empty()) {
      CHECK(rouge_n(c, c, 1).f1 == 1.0);
      CHECK(rouge_n(c, c, 2).f1 == 1.0);
      CHECK(rouge_l(c, c).f1 == 1.0);
      CHECK(bleu1(ct, ct) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("appending a reference token never lowers ROUGE-1 recall") {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 200; ++trial) {
    auto c = random_tokens(rng, 10);
    const auto r = random_tokens(rng, 10);
    if (r.empty()) continue;
    const double before = rouge_n(make_token_seq(c), make_token_seq(r), 1).recall;
    c.push_back(r[rng() % r.size()]);
    CHECK(rouge_n(make_token_seq(c), make_token_seq(r), 1).recall >= before);
  }
}

TEST_CASE("bleu boundaries") {
  CHECK(bleu1({"the", "cat", "sat", "on", "the", "mat"}, {"the", "cat", "sat", "on", "the", "mat"}) == 1.0);
  CHECK(bleu1({"a", "b", "c", "d"}, {"e", "f", "g", "h"}) == 0.0);
  CHECK(bleu1({"the", "cat"}, {"the", "cat", "sat"}) == doctest::Approx(std::exp(1.0 - 1.5)).epsilon(1e-12));
  CHECK(bleu1({"the", "cat"}, {"the", "cat", "sat"}) == doctest::Approx(0.6065).epsilon(1e-4));
  // unigram overlap but no 4-gram: zero without smoothing, positive with it
  const Tokens c{"a", "b", "c", "d", "e"}, r{"a", "x", "c", "y", "e"};
  CHECK(bleu1(c, r) == 0.0);
  CHECK(bleu1(c, r, {4, true}) > 0.0);
  std::vector<textproc::TokenSeq> none;
  CHECK_THROWS_AS(bleu(make_token_seq({"a"}), none), Error);
}

TEST_CASE("bleu picks the closest reference length") {
  std::vector<textproc::TokenSeq> refs{make_token_seq({"the", "cat", "sat", "down"}),
                                       make_token_seq({"the", "cat", "sat"})};
  CHECK(bleu(make_token_seq({"the", "cat", "sat"}), refs) == 1.0);
}

TEST_CASE("readability formulas") {
  CHECK(fre("The cat sat. The dog ran.") == doctest::Approx(119.19).epsilon(1e-9));
  CHECK(fre("Go.") == doctest::Approx(121.22).epsilon(1e-9));
  const auto all = textproc::FamiliarWords::from_text("the\ncat\nsat\ndog\nran\n");
  const textproc::FamiliarWords none;
  CHECK(dcr("The cat sat. The dog ran.", all) == doctest::Approx(0.1488).epsilon(1e-9));
  CHECK(dcr("The cat sat. The dog ran.", none) == doctest::Approx(15.9388).epsilon(1e-9));
  CHECK_THROWS_AS(fre(""), Error);
  CHECK_THROWS_AS(dcr("", all), Error);
}

TEST_CASE("fre falls with syllables per word, dcr rises with difficult words") {
  textproc::ReadabilityStats s;
  s.asl = 10;
  s.words = 10;
  s.sentences = 1;
  double prev = 1e9;
  for (double asw = 1.0; asw < 3.0; asw += 0.25) {
    s.asw = asw;
    CHECK(fre(s) < prev);
    prev = fre(s);
  }
  prev = -1;
  for (double pdw = 0.0; pdw <= 1.0; pdw += 0.1) {
    s.pdw = pdw;
    CHECK(dcr(s) > prev);
    prev = dcr(s);
  }
}

TEST_CASE("score_lexical fills one report") {
  PairInput p{"cand", "ref", "The cat sat.", "The cat sat on the mat."};
  const auto r = score_lexical(p);
  CHECK(r.candidate_id == "cand");
  CHECK(r.reference_kind == "source:abstract+claims");
  CHECK(r.rouge1.precision == 1.0);
  CHECK(r.rouge1.recall == doctest::Approx(0.5));
  CHECK_FALSE(r.bertscore.has_value());
  CHECK_THROWS_AS(score_lexical({"c", "r", "...", "x"}), Error);
}
