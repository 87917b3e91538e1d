#include <algorithm>
#include <cctype>
#include <thread>

#include "httplib.h"
#include "sumeval/service.hpp"
#include "test_util.hpp"

using namespace sumeval;
using namespace sumeval::service;
using testutil::error_code;
using nlohmann::json;

namespace {

corpus::Document doc(int i) {
  const auto n = std::to_string(i);
  return {"US-" + n, "Device " + n, "A device with part " + n + ".", "1. A device comprising part " + n + "."};
}

std::vector<TaskItem> items(int n) {
  std::vector<TaskItem> out;
  for (int i = 0; i < n; ++i) out.push_back({doc(i), i % 2 ? "BART" : "LongT5", 0, "Summary of device " + std::to_string(i)});
  return out;
}

std::vector<GoldItem> golds(int n) {
  std::vector<GoldItem> out;
  for (int i = 0; i < n; ++i)
    out.push_back({{doc(100 + i), "CHECK", 0, "Unrelated text about weather."}, {1, 1, 1, 1, "key", std::nullopt}});
  return out;
}

runstore::RunStore memory_store() { return runstore::RunStore(std::make_shared<runstore::MemoryStorage>(), "svc-run"); }

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

TEST_CASE("gold items parse from JSONL") {
  const auto g = parse_gold_items(
      R"({"document":{"id":"G1","title":"t","abstract":"a","claims":"c"},"model_name":"m","summary":"s","key":{"clarity":1,"accuracy":2,"coverage":3,"overall":4}})"
      "\n");
  REQUIRE(g.size() == 1);
  CHECK(g[0].item.document.id == "G1");
  CHECK(g[0].key.coverage == 3);
  CHECK(load_gold_items(testutil::fixture("demo/gold_items.jsonl")).size() == 2);
  CHECK(error_code([] { parse_gold_items(R"({"document":{"id":"G1"}})"); }) == ErrorCode::MalformedRecord);
}

TEST_CASE("sessions receive regular tasks plus hidden gold checks") {
  auto store = memory_store();
  AnnotationService svc(store, items(5), golds(3), {0.2, 3, 0, 11, ""});
  CHECK_FALSE(svc.instructions().empty());
  const auto s = svc.register_session("alice");
  int regular = 0, gold = 0;
  std::vector<std::string> ids;
  while (true) {
    try {
      const auto t = svc.next_task(s);
      ids.push_back(t.task_id);
      (t.is_gold_check ? gold : regular)++;
      const auto wire = t.to_wire_json();
      CHECK(lower(wire.dump()).find("gold") == std::string::npos);
      CHECK(wire.dump().find(t.document.id) == std::string::npos);
      CHECK(wire.at("dimensions").size() == 4);
      CHECK(wire.at("scale").size() == 5);
      CHECK(wire.at("document").contains("claims"));
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NoTasksLeft);
      break;
    }
  }
  CHECK(regular == 5);
  CHECK(gold == 1);
  std::sort(ids.begin(), ids.end());
  CHECK(std::unique(ids.begin(), ids.end()) == ids.end());
  CHECK(error_code([&] { svc.next_task("nope"); }) == ErrorCode::UnknownSession);
}

TEST_CASE("a regular task is dispensed to at most `redundancy` sessions") {
  auto store = memory_store();
  AnnotationService svc(store, items(4), {}, {0.0, 2, 0, 1, ""});
  std::vector<int> served(3, 0);
  for (int k = 0; k < 3; ++k) {
    const auto s = svc.register_session("r" + std::to_string(k));
    while (true) {
      try {
        svc.next_task(s);
        ++served[static_cast<std::size_t>(k)];
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NoTasksLeft);
        break;
      }
    }
  }
  CHECK(served == std::vector<int>{4, 4, 0});
  for (std::size_t i = 0; i < 4; ++i) CHECK(svc.dispense_count(i) == 2);
}

TEST_CASE("submissions are validated and persisted") {
  auto store = memory_store();
  AnnotationService svc(store, items(2), golds(1), {0.5, 3, 0, 3, ""});
  const auto a = svc.register_session("alice");
  const auto b = svc.register_session("bob");
  const auto t = svc.next_task(a);
  CHECK(error_code([&] { svc.submit_rating(b, t.task_id, 3, 3, 3, 3); }) == ErrorCode::UnknownTask);
  CHECK(error_code([&] { svc.submit_rating("nope", t.task_id, 3, 3, 3, 3); }) == ErrorCode::UnknownSession);
  CHECK(error_code([&] { svc.submit_rating(a, "t-missing", 3, 3, 3, 3); }) == ErrorCode::UnknownTask);
  CHECK(error_code([&] { svc.submit_rating(a, t.task_id, 0, 3, 3, 3); }) == ErrorCode::OutOfRange);
  const auto sub = svc.submit_rating(a, t.task_id, 1, 1, 1, 1);
  CHECK(error_code([&] { svc.submit_rating(a, t.task_id, 1, 1, 1, 1); }) == ErrorCode::DuplicateSubmission);
  CHECK(sub.is_gold_check == t.is_gold_check);
  if (t.is_gold_check) CHECK(sub.passed_gold == true);

  // Drain alice's queue; a gold answered off-key fails.
  while (true) {
    AnnotationTask next;
    try {
      next = svc.next_task(a);
    } catch (const Error&) {
      break;
    }
    const auto s = svc.submit_rating(a, next.task_id, 2, 2, 2, 2);
    if (next.is_gold_check) CHECK(s.passed_gold == false);
  }
  const auto ratings = store.ratings();
  CHECK(ratings.size() == 3);
  for (const auto& r : ratings) {
    CHECK(r.evaluator_id == "alice");
    CHECK(r.session_id == a);
    CHECK(r.evaluator_kind == runstore::EvaluatorKind::Human);
    CHECK(r.passed_gold.has_value() == r.is_gold_check);
  }
  CHECK(std::count_if(ratings.begin(), ratings.end(), [](const auto& r) { return r.is_gold_check; }) == 1);
}

TEST_CASE("service records are bit-identical to CSV ingestion of the same ratings") {
  auto store = memory_store();
  AnnotationService svc(store, items(3), golds(2), {0.34, 2, 0, 5, ""});
  for (const auto* rater : {"alice", "bob"}) {
    const auto s = svc.register_session(rater);
    int k = 0;
    while (true) {
      try {
        const auto t = svc.next_task(s);
        svc.submit_rating(s, t.task_id, 1 + k % 5, 2, 3, 1 + (k * 2) % 5);
        ++k;
      } catch (const Error&) {
        break;
      }
    }
  }
  auto replay = memory_store();
  for (const auto& r : runstore::ratings_from_csv(runstore::ratings_to_csv(store.ratings()))) replay.append(r);
  CHECK(replay.raw_lines("ratings") == store.raw_lines("ratings"));
  CHECK(store.raw_lines("ratings").size() == 8);
}

TEST_CASE("HTTP endpoints") {
  auto store = memory_store();
  for (const auto& it : items(2)) store.append(runstore::SummaryRecord{it.document.id, it.model_name, it.summary_text, "t", runstore::Provenance::Ingested, 0});
  AnnotationService svc(store, items(2), golds(1), {0.5, 3, 0, 9, "Rate each summary."});
  httplib::Server server;
  install_routes(server, svc);
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client client("127.0.0.1", port);

  auto res = client.Post("/sessions", R"({"rater_id":"alice"})", "application/json");
  REQUIRE(res);
  CHECK(res->status == 201);
  const auto session = json::parse(res->body).at("session").get<std::string>();

  res = client.Get("/instructions");
  REQUIRE(res);
  CHECK(res->body == "Rate each summary.");

  res = client.Get("/tasks/next?session=unknown");
  REQUIRE(res);
  CHECK(res->status == 401);

  int stored = 0;
  std::string last_task;
  while (true) {
    res = client.Get(("/tasks/next?session=" + session).c_str());
    REQUIRE(res);
    if (res->status == 404) {
      CHECK(json::parse(res->body).at("error") == "NoTasksLeft");
      break;
    }
    CHECK(res->status == 200);
    CHECK(lower(res->body).find("gold") == std::string::npos);
    const auto task = json::parse(res->body);
    last_task = task.at("task_id");
    const json rating{{"session", session},
                      {"task_id", last_task},
                      {"scores", {{"clarity", 1}, {"accuracy", 1}, {"coverage", 1}, {"overall", 1}}}};
    res = client.Post("/ratings", rating.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 201);
    CHECK(json::parse(res->body).at("status") == "stored");
    ++stored;
  }
  CHECK(stored == 3);

  const json again{{"session", session}, {"task_id", last_task}, {"scores", {{"clarity", 1}, {"accuracy", 1}, {"coverage", 1}, {"overall", 1}}}};
  res = client.Post("/ratings", again.dump(), "application/json");
  REQUIRE(res);
  CHECK(res->status == 409);
  res = client.Post("/ratings", "{not json", "application/json");
  REQUIRE(res);
  CHECK(res->status == 400);

  res = client.Get("/reports/svc-run/judgments?format=csv");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->body.rfind("block,row,model,mean,std,n", 0) == 0);
  CHECK(res->body.find("Human evaluation,Overall,LongT5,1.0,0.0,1") != std::string::npos);
  res = client.Get("/reports/other-run/judgments");
  REQUIRE(res);
  CHECK(res->status == 404);
  res = client.Get("/reports/svc-run/nonsense");
  REQUIRE(res);
  CHECK(res->status == 400);

  server.stop();
  thread.join();
}
