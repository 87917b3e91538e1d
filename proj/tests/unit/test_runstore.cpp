#include <random>

#include "sumeval/runstore.hpp"
#include "test_util.hpp"

using namespace sumeval;
using namespace sumeval::runstore;
using testutil::error_code;

namespace {

RunStore memory_store(const std::string& run_id = "r1") { return RunStore(std::make_shared<MemoryStorage>(), run_id); }

SummaryRecord summary(const std::string& doc, const std::string& model, int round = 0, const std::string& text = "a summary") {
  return {doc, model, text, "2026-01-01T00:00:00Z", Provenance::Ingested, round};
}

MetricRecord metric(const std::string& doc, const std::string& model, double bleu = 0.5) {
  MetricRecord m;
  m.document_id = doc;
  m.model_name = model;
  m.report.candidate_id = doc + "/" + model;
  m.report.reference_id = doc;
  m.report.rouge1 = lexmetrics::PrfScore::from_pr(0.5, 0.25);
  m.report.rouge2 = lexmetrics::PrfScore::from_pr(0.2, 0.1);
  m.report.rougeL = lexmetrics::PrfScore::from_pr(0.4, 0.2);
  m.report.bleu = bleu;
  m.report.fre = 55.5;
  m.report.dcr = 9.25;
  return m;
}

RatingRecord human(const std::string& doc, const std::string& model, const std::string& rater, int score,
                   const std::string& session = "") {
  RatingRecord r;
  r.document_id = doc;
  r.model_name = model;
  r.evaluator_id = rater;
  r.evaluator_kind = EvaluatorKind::Human;
  r.scores = {score, score, score, score, rater, std::nullopt};
  r.session_id = session.empty() ? rater : session;
  return r;
}

RatingRecord gold(const std::string& session, int i, bool passed) {
  auto r = human("gold-" + std::to_string(i), "GOLD", session, 3, session);
  r.is_gold_check = true;
  r.passed_gold = passed;
  return r;
}

// Three sessions whose gold pass rates are 1.0, 2/3 and 0.
std::vector<RatingRecord> three_sessions() {
  std::vector<RatingRecord> out;
  const std::vector<std::pair<std::string, std::vector<bool>>> plan{
      {"s-good", {true, true, true}}, {"s-mid", {true, true, false}}, {"s-bad", {false, false, false}}};
  for (const auto& [session, passes] : plan) {
    for (std::size_t i = 0; i < passes.size(); ++i) out.push_back(gold(session, static_cast<int>(i), passes[i]));
    for (int d = 0; d < 4; ++d) out.push_back(human("d" + std::to_string(d), "BART", session, 4, session));
  }
  return out;
}

}  // namespace

TEST_CASE("records round-trip through the store") {
  testutil::TempDir tmp;
  {
    auto store = RunStore::open_directory(tmp.path() / "run");
    store.append(summary("d1", "BART"));
    auto m = metric("d1", "BART");
    m.report.bertscore = lexmetrics::PrfScore::from_pr(0.9, 0.8);
    m.report.summac = 0.75;
    m.summac_aggregation = "zero-shot";
    store.append(m);
    store.append(human("d1", "BART", "alice", 4));
    RatingRecord llm;
    llm.document_id = "d1";
    llm.model_name = "BART";
    llm.evaluator_id = "mock-judge";
    llm.evaluator_kind = EvaluatorKind::Llm;
    llm.scores = {5, 4, 3, 2, "mock-judge", std::string("fine")};
    store.append(llm);
  }
  auto store = RunStore::open_directory(tmp.path() / "run");
  CHECK(store.run_id() == "run");
  REQUIRE(store.summaries().size() == 1);
  CHECK(store.summaries()[0] == summary("d1", "BART"));
  REQUIRE(store.metrics().size() == 1);
  CHECK(store.metrics()[0].report.summac == 0.75);
  CHECK(store.metrics()[0].report.bertscore->recall == 0.8);
  CHECK(store.metrics()[0].report.rouge1 == metric("d1", "BART").report.rouge1);
  const auto ratings = store.ratings();
  REQUIRE(ratings.size() == 2);
  CHECK(ratings[0] == human("d1", "BART", "alice", 4));
  CHECK(ratings[1].scores.rationale == "fine");
  CHECK(std::filesystem::exists(tmp.path() / "run" / "summaries.jsonl"));
}

TEST_CASE("manifest round trip and run id") {
  testutil::TempDir tmp;
  RunManifest m;
  m.run_id = "demo-run";
  m.corpus_uri = "corpus.jsonl";
  m.corpus_hash = "abc";
  m.sample_size = 6;
  m.seed = 7;
  m.roster = {"BART", "LongT5"};
  m.gold_threshold = 0.5;
  {
    auto store = RunStore::open_directory(tmp.path() / "dir");
    CHECK_FALSE(store.manifest().has_value());
    CHECK(error_code([&] { store.write_manifest(m); }) == ErrorCode::ValidationFailed);
    RunStore named(std::make_shared<DirectoryStorage>(tmp.path() / "dir"), "demo-run");
    named.write_manifest(m);
  }
  auto store = RunStore::open_directory(tmp.path() / "dir");
  CHECK(store.run_id() == "demo-run");
  const auto back = store.manifest();
  REQUIRE(back);
  CHECK(back->roster == m.roster);
  CHECK(back->sample_size == 6);
  CHECK(back->seed == 7);
  CHECK(back->gold_threshold == 0.5);
}

TEST_CASE("validation rejects bad records") {
  auto store = memory_store();
  auto bad = human("d1", "BART", "alice", 4);
  bad.scores.overall = 6;
  CHECK(error_code([&] { store.append(bad); }) == ErrorCode::ValidationFailed);
  auto no_session = human("d1", "BART", "alice", 4);
  no_session.session_id.reset();
  CHECK(error_code([&] { store.append(no_session); }) == ErrorCode::ValidationFailed);
  auto gold_without_flag = human("d1", "BART", "alice", 4);
  gold_without_flag.is_gold_check = true;
  CHECK(error_code([&] { store.append(gold_without_flag); }) == ErrorCode::ValidationFailed);
  auto flag_without_gold = human("d1", "BART", "alice", 4);
  flag_without_gold.passed_gold = true;
  CHECK(error_code([&] { store.append(flag_without_gold); }) == ErrorCode::ValidationFailed);
  auto m = metric("d1", "BART", 1.5);
  CHECK(error_code([&] { store.append(m); }) == ErrorCode::ValidationFailed);
  CHECK(store.ratings().empty());
  CHECK(store.metrics().empty());
}

TEST_CASE("appends are idempotent per natural key") {
  auto store = memory_store();
  const auto id1 = store.append(summary("d1", "BART"));
  const auto id2 = store.append(summary("d1", "BART"));
  CHECK(id1 == id2);
  CHECK(store.raw_lines("summaries").size() == 1);
  CHECK(error_code([&] { store.append(summary("d1", "BART", 0, "different text")); }) == ErrorCode::DuplicateKey);
  CHECK(store.append(summary("d1", "BART", 1)) != id1);
  CHECK(store.has_summary("d1", "BART", 1));
  CHECK_FALSE(store.has_summary("d2", "BART", 0));
  CHECK(store.append(metric("d1", "BART")) == store.append(metric("d1", "BART")));
  CHECK(error_code([&] { store.append(metric("d1", "BART", 0.25)); }) == ErrorCode::DuplicateKey);
  CHECK(store.has_metric("d1", "BART", 0));
  // Two raters on the same item are distinct records.
  store.append(human("d1", "BART", "alice", 4));
  store.append(human("d1", "BART", "bob", 4));
  CHECK(store.ratings().size() == 2);
  CHECK(store.has_rating(human("d1", "BART", "bob", 1)));
}

TEST_CASE("record ids are stable across store instances") {
  auto a = memory_store("same-run");
  auto b = memory_store("same-run");
  CHECK(a.append(summary("d1", "BART")) == b.append(summary("d1", "BART")));
  auto c = memory_store("other-run");
  CHECK(a.append(summary("d1", "BART")) != c.append(summary("d1", "BART")));
}

TEST_CASE("gold filtering keeps only fully reliable sessions") {
  const auto all = three_sessions();
  const auto kept = filter_reliable(all, 1.0);
  CHECK(kept.size() == 7);
  for (const auto& r : kept) CHECK(r.session_id == "s-good");
  const auto relaxed = filter_reliable(all, 0.6);
  CHECK(relaxed.size() == 14);
  CHECK(filter_reliable(all, 0.0).size() == all.size());

  auto with_llm = all;
  RatingRecord llm;
  llm.document_id = "d1";
  llm.model_name = "BART";
  llm.evaluator_id = "judge";
  llm.evaluator_kind = EvaluatorKind::Llm;
  llm.scores = {2, 2, 2, 2, "judge", std::nullopt};
  with_llm.push_back(llm);
  CHECK(filter_reliable(with_llm, 1.0).size() == 8);

  auto no_gold = all;
  no_gold.push_back(human("d9", "BART", "carol", 3, "s-carol"));
  CHECK(error_code([&] { filter_reliable(no_gold, 1.0); }) == ErrorCode::NoGoldChecks);
}

TEST_CASE("raising the threshold never retains more records") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<RatingRecord> ratings;
    const int sessions = 1 + static_cast<int>(rng() % 6);
    for (int s = 0; s < sessions; ++s) {
      const std::string id = "s" + std::to_string(s);
      const int golds = 1 + static_cast<int>(rng() % 4);
      for (int g = 0; g < golds; ++g) ratings.push_back(gold(id, g, rng() % 2 == 0));
      for (int d = 0; d < 3; ++d) ratings.push_back(human("d" + std::to_string(d), "BART", id, 3, id));
    }
    std::size_t previous = ratings.size() + 1;
    for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      const auto n = filter_reliable(ratings, t).size();
      CHECK(n <= previous);
      previous = n;
    }
  }
}

TEST_CASE("ratings CSV round trip and defaults") {
  auto ratings = three_sessions();
  ratings[0].round = 2;
  CHECK(ratings_from_csv(ratings_to_csv(ratings)) == ratings);

  const auto minimal = ratings_from_csv(
      "document_id,model_name,evaluator_id,clarity,accuracy,coverage,overall\n"
      "d1,BART,alice,4,3,\"5\",2\n");
  REQUIRE(minimal.size() == 1);
  CHECK(minimal[0].evaluator_kind == EvaluatorKind::Human);
  CHECK(minimal[0].session_id == "alice");
  CHECK(minimal[0].scores.coverage == 5);
  CHECK_FALSE(minimal[0].is_gold_check);
  CHECK(error_code([] { ratings_from_csv("document_id,model_name\nd1,BART\n"); }) == ErrorCode::MalformedRecord);
  CHECK(error_code([] {
          ratings_from_csv("document_id,model_name,evaluator_id,clarity,accuracy,coverage,overall\nd1,BART,a,9,3,3,3\n");
        }) == ErrorCode::ValidationFailed);
}

TEST_CASE("reports") {
  auto store = memory_store();
  CHECK(error_code([&] { render_table(store, TableKind::Metrics); }) == ErrorCode::EmptyRun);
  CHECK(error_code([&] { render_table(store, TableKind::Judgments); }) == ErrorCode::EmptyRun);
  CHECK(error_code([&] { render_table(store, TableKind::Correlations); }) == ErrorCode::EmptyRun);

  for (int d = 0; d < 3; ++d) {
    const auto doc = "d" + std::to_string(d);
    store.append(metric(doc, "LongT5", 0.1 * d));
    store.append(metric(doc, "BART", 0.2));
    store.append(human(doc, "LongT5", "alice", 2 + d));
    store.append(human(doc, "BART", "alice", 4));
  }
  const auto judgments = render_table(store, TableKind::Judgments);
  // Four dimensions by two models, reference order puts BART first.
  std::istringstream lines(judgments.csv);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "block,row,model,mean,std,n");
  std::vector<std::string> rows;
  while (std::getline(lines, line)) rows.push_back(line);
  CHECK(rows.size() == 8);
  CHECK(rows[0] == "Human evaluation,Clarity,BART,4.0,0.0,3");
  CHECK(rows[1] == "Human evaluation,Clarity,LongT5,3.0,1.0,3");
  CHECK(judgments.text.find("Overall") != std::string::npos);
  CHECK(judgments.text.find("BART") < judgments.text.find("LongT5"));

  const auto metrics = render_table(store, TableKind::Metrics);
  CHECK(metrics.text.find("abstract + claims") != std::string::npos);
  CHECK(metrics.csv.find("Automatic metrics (mean(std) over documents; ROUGE and BERTScore are F1),BLEU,LongT5,0.1,0.1,3") !=
        std::string::npos);
  CHECK(metrics.csv.find(",BERTScore,BART,,,0") != std::string::npos);
}

TEST_CASE("per-document rater means aggregate to the published cell format") {
  auto store = memory_store();
  // 30 documents, two raters each: 3 documents average 4.0, 21 average 4.5, 6 average 5.0.
  for (int d = 0; d < 30; ++d) {
    const auto doc = "d" + std::to_string(d);
    const int first = d < 24 ? 4 : 5;
    const int second = d < 3 ? 4 : 5;
    store.append(human(doc, "GPT-3.5", "r1", first));
    store.append(human(doc, "GPT-3.5", "r2", second));
  }
  const auto table = render_table(store, TableKind::Judgments);
  CHECK(table.text.find("4.55(0.27)") != std::string::npos);
}

TEST_CASE("gold records filter the judgment table") {
  auto store = memory_store();
  for (const auto& r : three_sessions()) store.append(r);
  auto bad = human("d7", "BART", "s-bad", 1, "s-bad");
  store.append(bad);
  const auto table = render_table(store, TableKind::Judgments);
  CHECK(table.csv.find("Human evaluation,Clarity,BART,4.0,0.0,4") != std::string::npos);
  CHECK(table.csv.find("GOLD") == std::string::npos);
}

TEST_CASE("correlation records render their matrix") {
  auto store = memory_store();
  const std::vector<std::string> units{"a", "b", "c", "d"};
  CorrelationRecord rec{"demo", "model",
                        stats::correlation_matrix({{"x", {1, 2, 3, 4}, units}, {"y", {2, 1, 4, 3}, units}},
                                                  stats::Method::Pearson)};
  store.append(rec);
  store.append(rec);
  CHECK(store.correlations().size() == 1);
  CHECK(store.correlations()[0].matrix.at("x", "y").result->coefficient == doctest::Approx(0.6));
  const auto table = render_table(store, TableKind::Correlations);
  CHECK(table.text.find("demo") != std::string::npos);
  CHECK(table.csv == rec.matrix.to_csv());
}

TEST_CASE("model ordering") {
  CHECK(order_models({"GPT-3.5", "Zeta", "BART", "HUPD_T5_base"}) ==
        std::vector<std::string>{"HUPD_T5_base", "BART", "GPT-3.5", "Zeta"});
  CHECK(order_models({"BART", "GPT-3.5", "GPT-3.5@r1"}, {"GPT-3.5"}) ==
        std::vector<std::string>{"GPT-3.5", "GPT-3.5@r1", "BART"});
}
