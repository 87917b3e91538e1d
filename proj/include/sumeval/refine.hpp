#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sumeval/corpus.hpp"
#include "sumeval/judge.hpp"
#include "sumeval/providers.hpp"

// Iterative summary improvement: the judge's verbal evaluation of round k is
// embedded into the generation prompt of round k + 1.
namespace sumeval::refine {

struct RefineConfig {
  int max_rounds = 2;
  bool stop_on_perfect = true;      // judged overall == 5
  bool stop_on_fixed_point = true;  // regenerated text identical to previous round
  /// Templates with {document}, {previous_summary} and {feedback} placeholders.
  std::string base_template;
  std::string refine_template;
  std::string joiner = std::string(corpus::kDefaultJoiner);
  double temperature = 0.0;
  int max_tokens = 1024;
  int judge_retries = 1;
  judge::JudgeConfig judge = judge::JudgeConfig::defaults();

  static RefineConfig defaults();
};

struct Feedback {
  std::string previous_summary;
  std::string feedback_text;
};

struct Generation {
  std::string text;
  std::string prompt;
};

/// Base prompt without feedback, refinement prompt (previous summary and
/// feedback embedded verbatim) with it. Throws EmptyCompletion on blank output.
Generation generate_summary(const corpus::Document& document, providers::ChatProvider& provider,
                            const std::optional<Feedback>& prior, const RefineConfig& config = RefineConfig::defaults());

/// Judge rationale followed by the four scores as labeled lines.
std::string render_feedback(const judge::JudgeScores& scores);

struct Round {
  int index = 1;  // 1-based
  std::string prompt;
  std::string prompt_hash;  // sha256(prompt)
  std::string chain_hash;   // sha256(previous chain_hash, previous feedback, prompt_hash)
  std::string summary_text;
  judge::JudgeScores scores;
  std::string feedback_text;
};

enum class StopReason { MaxRounds, PerfectScore, FixedPoint, Aborted };
std::string_view to_string(StopReason reason);
StopReason stop_reason_from_string(std::string_view s);

struct RefinementTranscript {
  std::string document_id;
  std::string generator_model;
  std::string judge_model;
  int max_rounds = 2;
  bool stop_on_perfect = true;
  bool stop_on_fixed_point = true;
  std::vector<Round> rounds;
  StopReason stop_reason = StopReason::MaxRounds;
  std::optional<std::string> error;  // set when Aborted

  nlohmann::json to_json() const;
  static RefinementTranscript from_json(const nlohmann::json& j);
};

std::string chain_link(const std::string& previous_chain, const std::string& previous_feedback,
                       const std::string& prompt_hash);

/// Rounds run strictly in sequence. A provider or judge failure stops the loop
/// with StopReason::Aborted, keeping the rounds that completed; if round 1
/// itself fails the error is rethrown. Throws InvalidArgument for max_rounds < 1.
RefinementTranscript refine_loop(const corpus::Document& document, providers::ChatProvider& generator,
                                 providers::ChatProvider& judge_provider,
                                 const RefineConfig& config = RefineConfig::defaults());

/// Recomputes every hash and checks that each prompt from round 2 on contains
/// the previous round's summary and feedback. `why` gets the first failure.
bool verify_chain(const RefinementTranscript& transcript, std::string* why = nullptr);

}  // namespace sumeval::refine
