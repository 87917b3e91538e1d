#include "sumeval/service.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "httplib.h"
#include "sumeval/assets.hpp"
#include "sumeval/errors.hpp"
#include "sumeval/hashing.hpp"

namespace sumeval::service {

using nlohmann::json;

namespace {

corpus::Document document_from_json(const json& j) {
  return {j.at("id").get<std::string>(), j.at("title").get<std::string>(), j.at("abstract").get<std::string>(),
          j.at("claims").get<std::string>()};
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t ordinal) {
  const auto h = sha256_hex(std::to_string(seed) + ":" + std::to_string(ordinal)).substr(0, 16);
  return std::stoull(h, nullptr, 16);
}

}  // namespace

std::vector<GoldItem> parse_gold_items(std::string_view jsonl) {
  std::vector<GoldItem> out;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      GoldItem g;
      g.item.document = document_from_json(j.at("document"));
      g.item.model_name = j.value("model_name", "gold");
      g.item.summary_text = j.at("summary").get<std::string>();
      const auto& k = j.at("key");
      g.key.clarity = k.at("clarity").get<int>();
      g.key.accuracy = k.at("accuracy").get<int>();
      g.key.coverage = k.at("coverage").get<int>();
      g.key.overall = k.at("overall").get<int>();
      g.key.validate();
      out.push_back(std::move(g));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::MalformedRecord, std::string("gold item: ") + e.what(), line_no);
    }
  }
  return out;
}

std::vector<GoldItem> load_gold_items(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_gold_items(buf.str());
}

std::vector<TaskItem> tasks_from_run(const runstore::RunStore& store, const corpus::Corpus& corpus) {
  std::vector<TaskItem> out;
  for (const auto& s : store.summaries()) {
    const auto* doc = corpus.find(s.document_id);
    if (!doc) continue;
    out.push_back({*doc, s.model_name, s.round, s.text});
  }
  return out;
}

json AnnotationTask::to_wire_json() const {
  json dims = json::array();
  for (auto d : judge::kDimensions) dims.push_back({{"name", judge::name(d)}, {"label", judge::label(d)}});
  return {{"task_id", task_id},
          {"document", {{"title", document.title}, {"abstract", document.abstract}, {"claims", document.claims}}},
          {"summary", summary_text},
          {"instructions", instructions},
          {"dimensions", dims},
          {"scale",
           {{{"value", 1}, {"anchor", "Poor"}},
            {{"value", 2}, {"anchor", "Fair"}},
            {{"value", 3}, {"anchor", "Good"}},
            {{"value", 4}, {"anchor", "Very good"}},
            {{"value", 5}, {"anchor", "Excellent"}}}}};
}

AnnotationService::AnnotationService(runstore::RunStore& store, std::vector<TaskItem> items,
                                     std::vector<GoldItem> golds, ServiceConfig config)
    : store_(store), items_(std::move(items)), golds_(std::move(golds)), config_(std::move(config)) {
  if (config_.instructions.empty()) config_.instructions = std::string(assets::judge_instructions());
  if (config_.redundancy < 1) throw Error(ErrorCode::ConfigError, "redundancy must be at least 1");
  if (config_.gold_rate < 0) throw Error(ErrorCode::ConfigError, "gold_rate must be non-negative");
  item_sessions_.resize(items_.size());
}

std::string AnnotationService::register_session(const std::string& rater_id) {
  if (rater_id.empty()) throw Error(ErrorCode::InvalidArgument, "rater id is empty");
  std::lock_guard lock(mu_);
  const std::uint64_t ordinal = session_counter_++;
  std::mt19937_64 rng(mix_seed(config_.seed, ordinal));

  Session s;
  s.rater_id = rater_id;
  for (std::size_t i = 0; i < items_.size(); ++i) s.queue.push_back({false, i});
  std::size_t gold_count =
      static_cast<std::size_t>(std::llround(config_.gold_rate * static_cast<double>(items_.size())));
  gold_count = std::min(gold_count, golds_.size());
  std::vector<std::size_t> gold_order(golds_.size());
  for (std::size_t i = 0; i < gold_order.size(); ++i) gold_order[i] = i;
  std::shuffle(gold_order.begin(), gold_order.end(), rng);
  for (std::size_t i = 0; i < gold_count; ++i) s.queue.push_back({true, gold_order[i]});
  std::shuffle(s.queue.begin(), s.queue.end(), rng);

  std::string salt = std::to_string(entropy_()) + std::to_string(entropy_());
  std::string token = "s-" + sha256_hex(salt + ":" + std::to_string(ordinal) + ":" + rater_id).substr(0, 24);
  sessions_.emplace(token, std::move(s));
  return token;
}

AnnotationTask AnnotationService::next_task(const std::string& session) {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(session);
  if (it == sessions_.end()) throw Error(ErrorCode::UnknownSession, "unknown session");
  auto& s = it->second;
  while (s.cursor < s.queue.size()) {
    const auto entry = s.queue[s.cursor];
    const std::size_t position = s.cursor++;
    if (!entry.gold && static_cast<int>(item_sessions_[entry.index].size()) >= config_.redundancy) continue;
    const TaskItem& item = entry.gold ? golds_[entry.index].item : items_[entry.index];
    if (!entry.gold) item_sessions_[entry.index].insert(session);
    AnnotationTask task;
    task.task_id = "t-" + sha256_hex(session + ":" + std::to_string(position)).substr(0, 20);
    task.document = item.document;
    task.summary_text = item.summary_text;
    task.instructions = config_.instructions;
    task.is_gold_check = entry.gold;
    tasks_[task.task_id] = {session, entry, false};
    return task;
  }
  throw Error(ErrorCode::NoTasksLeft, "no tasks left for this session");
}

Submission AnnotationService::submit_rating(const std::string& session, const std::string& task_id, int clarity,
                                            int accuracy, int coverage, int overall) {
  std::lock_guard lock(mu_);
  auto sit = sessions_.find(session);
  if (sit == sessions_.end()) throw Error(ErrorCode::UnknownSession, "unknown session");
  auto tit = tasks_.find(task_id);
  if (tit == tasks_.end() || tit->second.session != session)
    throw Error(ErrorCode::UnknownTask, "task " + task_id + " was not dispensed to this session");
  if (tit->second.submitted) throw Error(ErrorCode::DuplicateSubmission, "task " + task_id + " already rated");

  judge::JudgeScores scores;
  scores.clarity = clarity;
  scores.accuracy = accuracy;
  scores.coverage = coverage;
  scores.overall = overall;
  scores.evaluator_id = sit->second.rater_id;
  scores.validate();

  const auto& entry = tit->second.entry;
  const TaskItem& item = entry.gold ? golds_[entry.index].item : items_[entry.index];
  runstore::RatingRecord rec;
  rec.document_id = item.document.id;
  rec.model_name = item.model_name;
  rec.evaluator_id = sit->second.rater_id;
  rec.evaluator_kind = runstore::EvaluatorKind::Human;
  rec.scores = scores;
  rec.is_gold_check = entry.gold;
  rec.session_id = session;
  rec.round = item.round;
  if (entry.gold) {
    const auto& key = golds_[entry.index].key;
    bool pass = true;
    for (auto d : judge::kDimensions) pass = pass && std::abs(scores.get(d) - key.get(d)) <= config_.gold_tolerance;
    rec.passed_gold = pass;
  }
  Submission out;
  out.record_id = store_.append(rec);
  out.is_gold_check = rec.is_gold_check;
  out.passed_gold = rec.passed_gold;
  tit->second.submitted = true;
  return out;
}

int AnnotationService::dispense_count(std::size_t item_index) const {
  std::lock_guard lock(mu_);
  return static_cast<int>(item_sessions_.at(item_index).size());
}

// --- HTTP -------------------------------------------------------------------

namespace {

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownSession: return 401;
    case ErrorCode::UnknownTask:
    case ErrorCode::NoTasksLeft:
    case ErrorCode::EmptyRun: return 404;
    case ErrorCode::DuplicateSubmission:
    case ErrorCode::DuplicateKey: return 409;
    case ErrorCode::StorageFailure: return 500;
    default: return 400;
  }
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const Error& e) {
  send_json(res, http_status(e.code()), {{"error", to_string(e.code())}, {"message", e.what()}});
}

template <class F>
void guarded(httplib::Response& res, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    send_error(res, e);
  } catch (const json::exception& e) {
    send_json(res, 400, {{"error", "ValidationFailed"}, {"message", e.what()}});
  }
}

}  // namespace

void install_routes(httplib::Server& server, AnnotationService& service) {
  server.Post("/sessions", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto body = req.body.empty() ? json::object() : json::parse(req.body);
      const auto rater = body.at("rater_id").get<std::string>();
      send_json(res, 201, {{"session", service.register_session(rater)}});
    });
  });

  server.Get("/tasks/next", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      if (!req.has_param("session")) throw Error(ErrorCode::UnknownSession, "missing session parameter");
      send_json(res, 200, service.next_task(req.get_param_value("session")).to_wire_json());
    });
  });

  server.Post("/ratings", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto body = json::parse(req.body);
      const auto& s = body.at("scores");
      const auto sub = service.submit_rating(body.at("session").get<std::string>(), body.at("task_id").get<std::string>(),
                                             s.at("clarity").get<int>(), s.at("accuracy").get<int>(),
                                             s.at("coverage").get<int>(), s.at("overall").get<int>());
      send_json(res, 201, {{"status", "stored"}, {"record_id", sub.record_id}});
    });
  });

  server.Get(R"(/reports/([^/]+)/([^/]+))", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string run_id = req.matches[1];
      if (run_id != service.store().run_id()) throw Error(ErrorCode::EmptyRun, "unknown run " + run_id);
      const auto table = runstore::render_table(service.store(), runstore::table_kind_from_string(req.matches[2].str()));
      if (req.get_param_value("format") == "csv")
        res.set_content(table.csv, "text/csv");
      else
        res.set_content(table.text, "text/plain; charset=utf-8");
    });
  });

  server.Get("/instructions", [&service](const httplib::Request&, httplib::Response& res) {
    res.set_content(service.instructions(), "text/plain; charset=utf-8");
  });
}

void serve(AnnotationService& service, const std::string& host, int port) {
  httplib::Server server;
  install_routes(server, service);
  if (!server.listen(host, port))
    throw Error(ErrorCode::IoError, "cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace sumeval::service
