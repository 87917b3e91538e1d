#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sumeval/corpus.hpp"
#include "sumeval/providers.hpp"
#include "sumeval/runstore.hpp"
#include "sumeval/stats.hpp"

// Orchestration of the evaluation workflow over one run directory.
namespace sumeval::cli {

inline constexpr const char* kVersion = "0.1.0";

/// A summarizer column: either ingested from a file of document_id -> summary
/// lines ({"document_id","summary"}) or generated with a chat provider.
struct RosterEntry {
  std::string name;
  std::optional<std::filesystem::path> ingest;
  std::optional<providers::ProviderConfig> generate;
};

struct RefineSettings {
  std::string model;  // roster entry with a generator
  int max_rounds = 2;
  bool stop_on_perfect = true;
  bool stop_on_fixed_point = true;
};

struct ServiceSettings {
  std::string host = "127.0.0.1";
  int port = 8080;
  double gold_rate = 0.2;
  int redundancy = 3;
  int gold_tolerance = 0;
  std::optional<std::filesystem::path> gold_items;
};

/// Mirrors the JSON config file. Relative paths resolve against the config
/// file's directory.
struct RunConfig {
  std::filesystem::path corpus;
  corpus::SampleSpec sample;
  std::filesystem::path run_dir;
  std::vector<RosterEntry> roster;
  bool metrics = true;  // lexical metrics in evaluate
  std::optional<providers::ProviderConfig> bertscore;
  std::optional<providers::ProviderConfig> summac;
  std::optional<providers::ProviderConfig> judge;
  int judge_retries = 1;
  std::optional<RefineSettings> refine;
  ServiceSettings service;
  std::optional<std::filesystem::path> familiar_words;
  double gold_threshold = 1.0;
  int workers = 4;

  static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static RunConfig load(const std::filesystem::path& path);
  /// Throws ConfigError: empty roster, no metric or judge enabled, missing
  /// files, refine model without a generator.
  void validate() const;
};

struct CommandResult {
  std::string run_id;
  std::size_t computed = 0;
  std::size_t skipped = 0;
  std::vector<std::string> failures;  // per-unit errors; progress is kept
  std::vector<std::filesystem::path> artifacts;

  bool complete() const { return failures.empty(); }
};

/// Loads and samples the corpus, writes or checks the manifest and stores the
/// round-0 summaries of every roster entry (ingested or generated).
CommandResult prepare_run(const RunConfig& config, std::ostream& log);

/// Metrics for every stored summary of the sampled documents; resumable.
CommandResult cmd_evaluate(const RunConfig& config, std::ostream& log);
/// LLM judge ratings for every stored summary; resumable.
CommandResult cmd_judge(const RunConfig& config, std::ostream& log);
/// Refinement loop per sampled document for the configured generator. Round k
/// summaries and judge ratings are stored under "<model>-refine", round k-1.
CommandResult cmd_refine(const RunConfig& config, std::ostream& log);

enum class Level { Model, Sample };
Level level_from_string(std::string_view s);
std::string_view to_string(Level level);

/// Score vectors of a run: human and LLM dimensions (gold-filtered when the
/// run has gold checks) and metric means, by model column or by sample.
std::vector<stats::ScoreVector> run_vectors(const runstore::RunStore& store, Level level);

/// Wide CSV: first column is the unit id, every other column one vector.
std::vector<stats::ScoreVector> vectors_from_csv(std::string_view csv);

struct AnalyzeResult {
  CommandResult command;
  stats::CorrelationMatrix matrix;
};
AnalyzeResult cmd_analyze(const std::filesystem::path& run_dir, stats::Method method, Level level,
                          const std::optional<std::filesystem::path>& vectors_csv, std::ostream& out);

/// Renders every available table (or only `kind`); EmptyRun when none is.
CommandResult cmd_report(const std::filesystem::path& run_dir, std::optional<runstore::TableKind> kind,
                         std::ostream& out);

CommandResult cmd_ingest_ratings(const std::filesystem::path& run_dir, const std::filesystem::path& csv,
                                 std::ostream& log);

/// Blocks while serving the annotation endpoints for the run.
void cmd_serve(const RunConfig& config, std::ostream& log);

/// 0 on success, 6 on partial completion, otherwise by error kind:
/// 2 config/input, 3 provider, 4 storage, 5 empty run, 1 anything else.
int exit_code(ErrorCode code);
inline constexpr int kExitPartial = 6;

/// Full command line entry point.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sumeval::cli
