#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "sumeval/corpus.hpp"
#include "sumeval/providers.hpp"
#include "sumeval/summary_record.hpp"

namespace sumeval::judge {

enum class Dimension { Clarity, Accuracy, Coverage, Overall };
inline constexpr std::array<Dimension, 4> kDimensions = {Dimension::Clarity, Dimension::Accuracy,
                                                         Dimension::Coverage, Dimension::Overall};

/// Lowercase name: clarity, accuracy, coverage, overall.
std::string_view name(Dimension d);
/// Display label used in prompts and tables: Clarity, Accuracy, Coverage, Overall.
std::string_view label(Dimension d);

struct JudgeScores {
  int clarity = 0;
  int accuracy = 0;
  int coverage = 0;
  int overall = 0;
  std::string evaluator_id;
  std::optional<std::string> rationale;

  int get(Dimension d) const;
  int& get(Dimension d);
  /// Throws OutOfRange unless every dimension is in 1..5.
  void validate() const;

  bool operator==(const JudgeScores&) const = default;
};

struct JudgeConfig {
  /// Rater instructions, shared verbatim with the annotation service.
  std::string instructions;
  /// Labeled-line answer format appended after the instructions.
  std::string output_format;
  double temperature = 0.0;
  int max_tokens = 512;
  std::string joiner = std::string(corpus::kDefaultJoiner);
  /// 0 keeps the full document; otherwise the source text is cut to this many
  /// bytes and the prompt is marked truncation_applied.
  std::size_t max_document_chars = 0;

  /// Bundled instruction and format assets.
  static JudgeConfig defaults();
};

struct JudgePrompt {
  std::string instruction_text;
  std::string document_text;
  std::string summary_text;
  std::string output_format_contract;
  bool truncation_applied = false;

  /// The instruction text, byte-identical to what human raters see.
  std::string system_prompt() const;
  /// Document, summary and output contract.
  std::string user_prompt() const;
};

/// Throws MismatchedIds when the summary belongs to another document.
JudgePrompt build_prompt(const corpus::Document& document, const runstore::SummaryRecord& summary,
                         const JudgeConfig& config = JudgeConfig::defaults());

/// Canonical labeled-line rendering; parse_scores(render_scores(s)) == s up to evaluator_id.
std::string render_scores(const JudgeScores& scores);

/// Extracts "<Dimension>: <int>" lines, case-insensitively, tolerating
/// markdown emphasis and surrounding prose. "Overall quality" counts as
/// Overall. Non-integers raise AmbiguousScore, as do conflicting repeats;
/// values outside 1..5 raise OutOfRange; absent dimensions raise
/// MissingDimension. Remaining text becomes the rationale.
JudgeScores parse_scores(std::string_view response_text);

struct JudgeOutcome {
  JudgeScores scores;
  std::string raw_response;
  int attempts = 1;
};

/// One chat call, parsed; on a parse failure re-asks with a format reminder up
/// to `retries` more times, then raises JudgeUnparseable. evaluator_id is the
/// provider's model name.
JudgeOutcome judge_summary(const corpus::Document& document, const runstore::SummaryRecord& summary,
                           providers::ChatProvider& provider, int retries = 1,
                           const JudgeConfig& config = JudgeConfig::defaults());

}  // namespace sumeval::judge
