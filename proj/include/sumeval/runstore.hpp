#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "sumeval/judge.hpp"
#include "sumeval/lexmetrics.hpp"
#include "sumeval/refine.hpp"
#include "sumeval/stats.hpp"
#include "sumeval/summary_record.hpp"

// Append-only persistence for one run. Each record kind lives in its own
// line-delimited stream (summaries, metrics, ratings, transcripts,
// correlations) next to a manifest.json.
namespace sumeval::runstore {

enum class EvaluatorKind { Human, Llm };
std::string_view to_string(EvaluatorKind kind);
EvaluatorKind evaluator_kind_from_string(std::string_view s);
std::string_view to_string(Provenance p);

struct MetricRecord {
  std::string document_id;
  std::string model_name;
  int round = 0;
  lexmetrics::MetricReport report;
  /// Aggregation tag of the consistency score, e.g. "zero-shot".
  std::optional<std::string> summac_aggregation;

  bool operator==(const MetricRecord&) const = default;
};

struct RatingRecord {
  std::string document_id;
  std::string model_name;
  std::string evaluator_id;
  EvaluatorKind evaluator_kind = EvaluatorKind::Human;
  judge::JudgeScores scores;
  bool is_gold_check = false;
  std::optional<bool> passed_gold;        // set exactly for gold checks
  std::optional<std::string> session_id;  // required for human records
  int round = 0;

  bool operator==(const RatingRecord&) const = default;
};

struct CorrelationRecord {
  std::string analysis;  // free label, e.g. "all"
  std::string level;     // model | sample
  stats::CorrelationMatrix matrix;
};

struct RunManifest {
  std::string run_id;
  std::string created_at;
  std::string corpus_uri;
  std::string corpus_hash;
  std::size_t sample_size = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> roster;  // column order for reports
  nlohmann::json providers = nlohmann::json::object();  // redacted configs
  nlohmann::json module_versions = nlohmann::json::object();
  double gold_threshold = 1.0;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

// JSON forms shared by the store, the CSV path and the HTTP service.
nlohmann::json to_json(const SummaryRecord& r);
nlohmann::json to_json(const MetricRecord& r);
nlohmann::json to_json(const RatingRecord& r);
nlohmann::json to_json(const stats::CorrelationMatrix& m);
SummaryRecord summary_from_json(const nlohmann::json& j);
MetricRecord metric_from_json(const nlohmann::json& j);
RatingRecord rating_from_json(const nlohmann::json& j);
stats::CorrelationMatrix matrix_from_json(const nlohmann::json& j);

/// Throws ValidationFailed describing the first violated invariant.
void validate(const SummaryRecord& r);
void validate(const MetricRecord& r);
void validate(const RatingRecord& r);

/// Backend for the store: named append-only line streams plus small blobs.
class Storage {
 public:
  virtual ~Storage() = default;
  virtual std::vector<std::string> read_lines(const std::string& stream) const = 0;
  virtual void append_line(const std::string& stream, const std::string& line) = 0;
  virtual std::optional<std::string> read_blob(const std::string& name) const = 0;
  virtual void write_blob(const std::string& name, const std::string& content) = 0;
};

/// <dir>/<stream>.jsonl files, flushed on every append.
class DirectoryStorage : public Storage {
 public:
  explicit DirectoryStorage(std::filesystem::path dir);
  std::vector<std::string> read_lines(const std::string& stream) const override;
  void append_line(const std::string& stream, const std::string& line) override;
  std::optional<std::string> read_blob(const std::string& name) const override;
  void write_blob(const std::string& name, const std::string& content) override;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

class MemoryStorage : public Storage {
 public:
  std::vector<std::string> read_lines(const std::string& stream) const override;
  void append_line(const std::string& stream, const std::string& line) override;
  std::optional<std::string> read_blob(const std::string& name) const override;
  void write_blob(const std::string& name, const std::string& content) override;

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::vector<std::string>> streams_;
  std::map<std::string, std::string> blobs_;
};

/// Single writer per run; appends are serialized internally. Appending a
/// record whose natural key already exists returns the existing id when the
/// content matches and throws DuplicateKey otherwise.
class RunStore {
 public:
  RunStore(std::shared_ptr<Storage> storage, std::string run_id);

  /// Opens (creating if needed) a run directory; run id = manifest run_id,
  /// else the directory name.
  static RunStore open_directory(const std::filesystem::path& dir);

  const std::string& run_id() const noexcept { return run_id_; }

  std::optional<RunManifest> manifest() const;
  void write_manifest(const RunManifest& manifest);

  std::string append(const SummaryRecord& r);
  std::string append(const MetricRecord& r);
  std::string append(const RatingRecord& r);
  std::string append(const refine::RefinementTranscript& t);
  std::string append(const CorrelationRecord& r);

  std::vector<SummaryRecord> summaries() const;
  std::vector<MetricRecord> metrics() const;
  std::vector<RatingRecord> ratings() const;
  std::vector<refine::RefinementTranscript> transcripts() const;
  std::vector<CorrelationRecord> correlations() const;

  bool has_summary(std::string_view document_id, std::string_view model, int round) const;
  bool has_metric(std::string_view document_id, std::string_view model, int round) const;
  bool has_rating(const RatingRecord& key_fields) const;
  bool has_transcript(std::string_view document_id, std::string_view generator_model) const;

  /// Raw stored lines of a stream, for audits and byte-level checks.
  std::vector<std::string> raw_lines(const std::string& stream) const;

  static std::string natural_key(const SummaryRecord& r);
  static std::string natural_key(const MetricRecord& r);
  static std::string natural_key(const RatingRecord& r);
  static std::string natural_key(const refine::RefinementTranscript& t);
  static std::string natural_key(const CorrelationRecord& r);

 private:
  std::string append_json(const std::string& stream, const std::string& key, nlohmann::json body);
  std::vector<nlohmann::json> bodies(const std::string& stream) const;
  bool has_key(const std::string& stream, const std::string& key) const;
  void load_index(const std::string& stream) const;

  std::shared_ptr<Storage> storage_;
  std::string run_id_;
  mutable std::mutex mu_;
  // stream -> natural key -> (record id, canonical body)
  mutable std::unordered_map<std::string, std::unordered_map<std::string, std::pair<std::string, std::string>>> index_;
};

/// Keeps LLM records untouched and drops every record of a human session
/// whose gold pass rate is below `gold_threshold`. Throws NoGoldChecks for a
/// human session without gold checks.
std::vector<RatingRecord> filter_reliable(const std::vector<RatingRecord>& ratings, double gold_threshold = 1.0);

/// CSV columns: document_id, model_name, evaluator_id, clarity, accuracy,
/// coverage, overall; optional evaluator_kind (default human), session_id
/// (default evaluator_id for humans), is_gold_check, passed_gold, round.
std::vector<RatingRecord> ratings_from_csv(std::string_view csv);
std::string ratings_to_csv(const std::vector<RatingRecord>& ratings);

enum class TableKind { Metrics, Judgments, Correlations };
TableKind table_kind_from_string(std::string_view s);
std::string_view to_string(TableKind k);

struct RenderedTable {
  std::string text;
  std::string csv;
};

/// Model columns follow the manifest roster, then the reference roster
/// (HUPD_T5_small, HUPD_T5_base, XLNet, BART, BigBird, Pegasus, LongT5,
/// GPT-3.5, Llama-3), then name order.
std::vector<std::string> order_models(std::vector<std::string> models, const std::vector<std::string>& roster = {});

/// Metric and judgment cells are mean(std) over documents (ratings are first
/// averaged per document across raters). Throws EmptyRun when the run has no
/// records of the needed kind.
RenderedTable render_table(const RunStore& store, TableKind kind);

}  // namespace sumeval::runstore
