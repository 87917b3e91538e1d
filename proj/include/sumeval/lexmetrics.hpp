#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sumeval/textproc.hpp"

namespace sumeval::lexmetrics {

using textproc::TokenSeq;

struct PrfScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  /// f1 is 0 when precision + recall == 0, otherwise the harmonic mean.
  static PrfScore from_pr(double precision, double recall);
  /// overlap / totals. Both totals zero scores 1 (identity of empties);
  /// exactly one zero total scores 0.
  static PrfScore from_counts(double overlap, double candidate_total, double reference_total);

  bool operator==(const PrfScore&) const = default;
};

/// Clipped n-gram overlap. n must be 1 or 2 (InvalidArgument otherwise).
PrfScore rouge_n(const TokenSeq& candidate, const TokenSeq& reference, int n);

/// Longest common subsequence length by dynamic programming, O(|a|·|b|) time,
/// O(min) memory.
std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b);
PrfScore rouge_l(const TokenSeq& candidate, const TokenSeq& reference);

struct BleuOptions {
  int max_n = 4;
  /// Off by default: zero n-gram matches give BLEU 0. When on, zero counts are
  /// replaced by 0.1 (epsilon smoothing).
  bool smoothing = false;
};

/// Clipped modified precisions for n = 1..min(max_n, |candidate|), geometric
/// mean, brevity penalty exp(1 - r/c) when c < r with r the closest reference
/// length (shorter wins ties). Empty candidate scores 0.
double bleu(const TokenSeq& candidate, std::span<const TokenSeq> references,
            const BleuOptions& options = {});

/// 206.835 - 1.015·ASL - 84.6·ASW. Throws EmptyText.
double fre(const textproc::ReadabilityStats& stats);
double fre(std::string_view text);

/// 0.1579·(PDW·100) + 0.0496·ASL, with PDW the difficult-word fraction. The
/// 3.6365 adjustment of the original Dale-Chall formula is not applied.
double dcr(const textproc::ReadabilityStats& stats);
double dcr(std::string_view text, const textproc::FamiliarWords& familiar);

/// One scored (candidate, reference) pair. Model-backed fields are empty
/// when the metric was skipped. fre/dcr look at the candidate only.
struct MetricReport {
  std::string candidate_id;
  std::string reference_id;
  PrfScore rouge1;
  PrfScore rouge2;
  PrfScore rougeL;
  double bleu = 0.0;
  double fre = 0.0;
  double dcr = 0.0;
  std::optional<PrfScore> bertscore;
  std::optional<double> summac;
  /// What the candidate was compared against, e.g. "source:abstract+claims".
  std::string reference_kind = "source:abstract+claims";

  bool operator==(const MetricReport&) const = default;
};

struct PairInput {
  std::string candidate_id;
  std::string reference_id;
  std::string candidate_text;
  std::string reference_text;
};

struct LexicalOptions {
  BleuOptions bleu;
  const textproc::FamiliarWords* familiar = nullptr;  // bundled list when null
};

/// ROUGE-1/2/L, BLEU, FRE, DCR for one pair. Throws EmptyText when the
/// candidate has no words.
MetricReport score_lexical(const PairInput& pair, const LexicalOptions& options = {});

/// OpenMP-parallel over pairs. Output order matches input order. Any failure
/// is rethrown after the loop (first failing index wins).
std::vector<MetricReport> score_batch(std::span<const PairInput> pairs,
                                      const LexicalOptions& options = {});

namespace reference {
/// Single-threaded version of score_batch, kept as the test/bench baseline.
std::vector<MetricReport> score_batch_serial(std::span<const PairInput> pairs,
                                             const LexicalOptions& options = {});
}  // namespace reference

}  // namespace sumeval::lexmetrics
