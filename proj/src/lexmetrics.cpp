#include "sumeval/lexmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>

#include "sumeval/errors.hpp"

namespace sumeval::lexmetrics {

PrfScore PrfScore::from_pr(double precision, double recall) {
  PrfScore s{precision, recall, 0.0};
  if (precision + recall > 0.0) s.f1 = 2.0 * precision * recall / (precision + recall);
  return s;
}

PrfScore PrfScore::from_counts(double overlap, double candidate_total, double reference_total) {
  if (candidate_total == 0.0 && reference_total == 0.0) return {1.0, 1.0, 1.0};
  if (candidate_total == 0.0 || reference_total == 0.0) return {};
  return from_pr(overlap / candidate_total, overlap / reference_total);
}

namespace {

struct ClippedCounts {
  std::size_t overlap = 0;
  std::size_t candidate_total = 0;
  std::size_t reference_total = 0;
};

ClippedCounts clipped_counts(const std::vector<std::string>& cand,
                             const std::vector<std::string>& ref, std::size_t n) {
  ClippedCounts out;
  const auto c = textproc::ngrams(cand, n);
  const auto r = textproc::ngrams(ref, n);
  for (const auto& [gram, count] : c) {
    out.candidate_total += count;
    if (auto it = r.find(gram); it != r.end()) out.overlap += std::min(count, it->second);
  }
  for (const auto& [gram, count] : r) out.reference_total += count;
  return out;
}

}  // namespace

PrfScore rouge_n(const TokenSeq& candidate, const TokenSeq& reference, int n) {
  if (n != 1 && n != 2) throw Error(ErrorCode::InvalidArgument, "ROUGE-N supports n = 1 or 2");
  const auto counts = clipped_counts(candidate.tokens, reference.tokens, static_cast<std::size_t>(n));
  return PrfScore::from_counts(static_cast<double>(counts.overlap),
                               static_cast<double>(counts.candidate_total),
                               static_cast<double>(counts.reference_total));
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const auto& outer = a.size() >= b.size() ? a : b;
  const auto& inner = a.size() >= b.size() ? b : a;
  std::vector<std::size_t> prev(inner.size() + 1, 0), cur(inner.size() + 1, 0);
  for (const auto& x : outer) {
    for (std::size_t j = 1; j <= inner.size(); ++j)
      cur[j] = (x == inner[j - 1]) ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[inner.size()];
}

PrfScore rouge_l(const TokenSeq& candidate, const TokenSeq& reference) {
  const auto lcs = static_cast<double>(lcs_length(candidate.tokens, reference.tokens));
  return PrfScore::from_counts(lcs, static_cast<double>(candidate.size()),
                               static_cast<double>(reference.size()));
}

double bleu(const TokenSeq& candidate, std::span<const TokenSeq> references, const BleuOptions& options) {
  if (references.empty()) throw Error(ErrorCode::NoReference, "BLEU needs at least one reference");
  if (options.max_n < 1) throw Error(ErrorCode::InvalidArgument, "BLEU max_n must be >= 1");
  const std::size_t c = candidate.size();
  if (c == 0) return 0.0;
  const std::size_t max_n = std::min<std::size_t>(static_cast<std::size_t>(options.max_n), c);

  double log_sum = 0.0;
  for (std::size_t n = 1; n <= max_n; ++n) {
    const auto cand = textproc::ngrams(candidate.tokens, n);
    textproc::NgramCounts max_ref;
    for (const auto& ref : references)
      for (const auto& [gram, count] : textproc::ngrams(ref.tokens, n))
        max_ref[gram] = std::max(max_ref[gram], count);
    std::size_t matched = 0, total = 0;
    for (const auto& [gram, count] : cand) {
      total += count;
      if (auto it = max_ref.find(gram); it != max_ref.end()) matched += std::min(count, it->second);
    }
    double numerator = static_cast<double>(matched);
    if (matched == 0) {
      if (!options.smoothing) return 0.0;
      numerator = 0.1;
    }
    log_sum += std::log(numerator / static_cast<double>(total));
  }

  std::size_t r = references.front().size();
  for (const auto& ref : references) {
    const auto d = [c](std::size_t len) { return len > c ? len - c : c - len; };
    if (d(ref.size()) < d(r) || (d(ref.size()) == d(r) && ref.size() < r)) r = ref.size();
  }
  const double bp = c < r ? std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c)) : 1.0;
  return bp * std::exp(log_sum / static_cast<double>(max_n));
}

double fre(const textproc::ReadabilityStats& stats) {
  if (stats.words == 0) throw Error(ErrorCode::EmptyText, "text has no words");
  return 206.835 - 1.015 * stats.asl - 84.6 * stats.asw;
}

double fre(std::string_view text) {
  return fre(textproc::readability_stats(text, textproc::FamiliarWords::bundled()));
}

double dcr(const textproc::ReadabilityStats& stats) {
  if (stats.words == 0) throw Error(ErrorCode::EmptyText, "text has no words");
  return 0.1579 * stats.pdw * 100.0 + 0.0496 * stats.asl;
}

double dcr(std::string_view text, const textproc::FamiliarWords& familiar) {
  return dcr(textproc::readability_stats(text, familiar));
}

MetricReport score_lexical(const PairInput& pair, const LexicalOptions& options) {
  const auto& familiar = options.familiar ? *options.familiar : textproc::FamiliarWords::bundled();
  const TokenSeq cand = textproc::tokenize(pair.candidate_text);
  const TokenSeq ref = textproc::tokenize(pair.reference_text);
  const auto stats = textproc::readability_stats(pair.candidate_text, familiar);

  MetricReport report;
  report.candidate_id = pair.candidate_id;
  report.reference_id = pair.reference_id;
  report.rouge1 = rouge_n(cand, ref, 1);
  report.rouge2 = rouge_n(cand, ref, 2);
  report.rougeL = rouge_l(cand, ref);
  report.bleu = bleu(cand, std::span<const TokenSeq>(&ref, 1), options.bleu);
  report.fre = fre(stats);
  report.dcr = dcr(stats);
  return report;
}

std::vector<MetricReport> score_batch(std::span<const PairInput> pairs, const LexicalOptions& options) {
  const auto n = static_cast<std::ptrdiff_t>(pairs.size());
  std::vector<MetricReport> out(pairs.size());
  std::vector<std::exception_ptr> errors(pairs.size());
  // Warm the lazily built familiar list outside the parallel region.
  if (!options.familiar) (void)textproc::FamiliarWords::bundled();

#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = score_lexical(pairs[static_cast<std::size_t>(i)], options);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

namespace reference {

std::vector<MetricReport> score_batch_serial(std::span<const PairInput> pairs,
                                             const LexicalOptions& options) {
  std::vector<MetricReport> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(score_lexical(p, options));
  return out;
}

}  // namespace reference

}  // namespace sumeval::lexmetrics
