#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "sumeval/corpus.hpp"
#include "sumeval/judge.hpp"
#include "sumeval/runstore.hpp"

namespace httplib {
class Server;
}

// Rating task queue behind the annotation UI.
namespace sumeval::service {

/// One (document, summary) pair to be rated.
struct TaskItem {
  corpus::Document document;
  std::string model_name;
  int round = 0;
  std::string summary_text;
};

/// A task with a known answer key, mixed into each session's queue.
struct GoldItem {
  TaskItem item;
  judge::JudgeScores key;
};

/// Lines of {"document":{id,title,abstract,claims},"model_name","summary","key":{clarity,...}}.
std::vector<GoldItem> parse_gold_items(std::string_view jsonl);
std::vector<GoldItem> load_gold_items(const std::filesystem::path& path);

/// Every stored summary whose document is in `corpus`, in store order.
std::vector<TaskItem> tasks_from_run(const runstore::RunStore& store, const corpus::Corpus& corpus);

struct ServiceConfig {
  /// Gold tasks per session = round(gold_rate × regular tasks), capped by the gold pool.
  double gold_rate = 0.2;
  /// Distinct sessions a regular task is dispensed to.
  int redundancy = 3;
  /// A gold answer passes when every dimension is within this distance of the key.
  int gold_tolerance = 0;
  std::uint64_t seed = 0;
  std::string instructions;  // judge instruction asset when empty
};

struct AnnotationTask {
  std::string task_id;
  corpus::Document document;
  std::string summary_text;
  std::string instructions;
  bool is_gold_check = false;  // server side only

  /// Payload sent to raters; carries no gold information and no document id.
  nlohmann::json to_wire_json() const;
};

struct Submission {
  std::string record_id;
  bool is_gold_check = false;
  std::optional<bool> passed_gold;
};

/// Thread-safe; dispense and submit are serialized through one lock, so each
/// task is linearized with its RunStore append.
class AnnotationService {
 public:
  AnnotationService(runstore::RunStore& store, std::vector<TaskItem> items, std::vector<GoldItem> golds,
                    ServiceConfig config);

  /// Returns an opaque session token.
  std::string register_session(const std::string& rater_id);

  /// Throws UnknownSession or NoTasksLeft.
  AnnotationTask next_task(const std::string& session);

  /// Throws UnknownSession, UnknownTask (not dispensed to this session),
  /// OutOfRange, DuplicateSubmission.
  Submission submit_rating(const std::string& session, const std::string& task_id, int clarity, int accuracy,
                           int coverage, int overall);

  const std::string& instructions() const noexcept { return config_.instructions; }
  runstore::RunStore& store() noexcept { return store_; }

  /// Number of distinct sessions a regular task has been dispensed to.
  int dispense_count(std::size_t item_index) const;

 private:
  struct QueueEntry {
    bool gold = false;
    std::size_t index = 0;  // into items_ or golds_
  };
  struct Session {
    std::string rater_id;
    std::vector<QueueEntry> queue;
    std::size_t cursor = 0;
  };
  struct Dispensed {
    std::string session;
    QueueEntry entry;
    bool submitted = false;
  };

  runstore::RunStore& store_;
  std::vector<TaskItem> items_;
  std::vector<GoldItem> golds_;
  ServiceConfig config_;
  mutable std::mutex mu_;
  std::map<std::string, Session> sessions_;
  std::map<std::string, Dispensed> tasks_;
  std::vector<std::set<std::string>> item_sessions_;
  std::uint64_t session_counter_ = 0;
  std::random_device entropy_;
};

/// Installs POST /sessions, GET /tasks/next, POST /ratings,
/// GET /reports/:run_id/:kind and GET /instructions.
void install_routes(httplib::Server& server, AnnotationService& service);

/// Blocks serving on host:port until the server stops.
void serve(AnnotationService& service, const std::string& host, int port);

}  // namespace sumeval::service
