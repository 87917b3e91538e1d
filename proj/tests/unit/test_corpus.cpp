#include <functional>
#include <filesystem>
#include <numeric>

#include "doctest.h"
#include "sumeval/corpus.hpp"
#include "sumeval/errors.hpp"

using namespace sumeval;
using namespace sumeval::corpus;

namespace {

std::string record(const std::string& id, const std::string& abstract = "An abstract here.",
                   const std::string& claims = "1. A claim.") {
  return R"({"id":")" + id + R"(","title":"T )" + id + R"(","abstract":")" + abstract + R"(","claims":")" + claims +
         "\"}\n";
}

Corpus make_corpus(std::size_t n) {
  std::vector<Document> docs;
  for (std::size_t i = 0; i < n; ++i)
    docs.push_back({"d" + std::to_string(i), "title", "abstract words " + std::to_string(i), "claim text"});
  return Corpus(docs, "mem");
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("three well-formed records load in file order") {
  const auto c = parse_corpus(record("c") + record("a") + record("b"));
  REQUIRE(c.size() == 3);
  CHECK(c.documents()[0].id == "c");
  CHECK(c.documents()[1].id == "a");
  CHECK(c.documents()[2].id == "b");
}

TEST_CASE("record lacking claims is reported with its line number") {
  const std::string text = record("a") + R"({"id":"b","title":"t","abstract":"x y"})" + "\n";
  try {
    parse_corpus(text);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MalformedRecord);
    CHECK(e.line() == 2);
    CHECK(e.reason() == ErrorCode::MissingField);
  }
}

TEST_CASE("duplicate ids and empty texts are rejected") {
  CHECK(code_of([] { parse_corpus(record("p1") + record("p1")); }) == ErrorCode::DuplicateId);
  CHECK(code_of([] { parse_corpus(record("p1", "  ...  ")); }) == ErrorCode::EmptyText);
  CHECK(code_of([] { parse_corpus("{not json}\n"); }) == ErrorCode::MalformedRecord);
  CHECK(code_of([] { parse_corpus(R"({"id":1,"title":"t","abstract":"a","claims":"c"})"); }) ==
        ErrorCode::MalformedRecord);
}

TEST_CASE("save then load is the identity on content") {
  const auto c = parse_corpus(record("x", "First \\\"quoted\\\" words.", "1. Claim\\nwith newline.") + record("y"));
  const auto path = std::filesystem::temp_directory_path() / "sumeval_corpus_roundtrip.jsonl";
  save_corpus(c, path);
  const auto back = load_corpus(path);
  CHECK(back.documents() == c.documents());
  CHECK(back.content_hash() == c.content_hash());
  std::filesystem::remove(path);
}

TEST_CASE("sampling") {
  SUBCASE("exhaustive sample returns every document") {
    const auto c = make_corpus(5);
    const auto s = sample(c, {5, 7});
    CHECK(s.documents() == c.documents());
  }
  SUBCASE("same seed gives the same sub-corpus") {
    const auto c = make_corpus(1630);
    const auto a = sample(c, {30, 42});
    const auto b = sample(c, {30, 42});
    CHECK(a.size() == 30);
    CHECK(a.documents() == b.documents());
    const auto other = sample(c, {30, 43});
    CHECK(other.documents() != a.documents());
  }
  SUBCASE("oversized and empty requests fail") {
    const auto c = make_corpus(10);
    CHECK(code_of([&] { sample(c, {11, 0}); }) == ErrorCode::SampleTooLarge);
    CHECK(code_of([&] { sample(c, {0, 0}); }) == ErrorCode::InvalidArgument);
  }
  SUBCASE("sample keeps corpus order and has no repeats") {
    const auto c = make_corpus(200);
    const auto s = sample(c, {50, 3});
    std::size_t last = 0;
    bool first = true;
    for (const auto& d : s) {
      const auto idx = static_cast<std::size_t>(std::stoul(d.id.substr(1)));
      if (!first) CHECK(idx > last);
      last = idx;
      first = false;
    }
  }
}

TEST_CASE("length histogram") {
  auto words = [](std::size_t n) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) s += "w ";
    return s;
  };
  SUBCASE("word counts 100, 150, 900 at width 500") {
    Corpus c({{"a", "t", words(50), words(50)}, {"b", "t", words(75), words(75)}, {"c", "t", words(450), words(450)}},
             "");
    const auto h = length_histogram(c, 500);
    REQUIRE(h.size() == 2);
    CHECK(h[0] == std::pair<std::size_t, std::size_t>{0, 2});
    CHECK(h[1] == std::pair<std::size_t, std::size_t>{500, 1});
  }
  SUBCASE("single 1500-word document at width 1000") {
    Corpus c({{"a", "t", words(700), words(800)}}, "");
    const auto h = length_histogram(c, 1000);
    REQUIRE(h.size() == 2);
    CHECK(h[0] == std::pair<std::size_t, std::size_t>{0, 0});
    CHECK(h[1] == std::pair<std::size_t, std::size_t>{1000, 1});
  }
  SUBCASE("width 0 is rejected") { CHECK(code_of([] { length_histogram(make_corpus(2), 0); }) == ErrorCode::InvalidArgument); }
  SUBCASE("counts sum to corpus size for every width") {
    const auto c = make_corpus(37);
    for (std::size_t w : {1, 2, 3, 5, 8, 100}) {
      const auto h = length_histogram(c, w);
      std::size_t total = 0;
      for (const auto& [start, count] : h) total += count;
      CHECK(total == 37);
    }
  }
}
