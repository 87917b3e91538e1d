#include "sumeval/modelmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iostream>
#include <limits>
#include <numeric>

#include "sumeval/errors.hpp"

namespace sumeval::modelmetrics {

namespace {

std::vector<double> norms(const providers::EmbeddingMatrix& m) {
  std::vector<double> out;
  out.reserve(m.vectors.size());
  for (const auto& v : m.vectors) out.push_back(std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0)));
  return out;
}

double cosine(const std::vector<double>& a, double na, const std::vector<double>& b, double nb) {
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0) / (na * nb);
}

void check_pair(const providers::EmbeddingMatrix& c, const providers::EmbeddingMatrix& r) {
  c.validate();
  r.validate();
  if (c.vectors.empty() || r.vectors.empty()) throw Error(ErrorCode::EmptyInput, "BERTScore needs non-empty inputs");
  if (c.dimension() != r.dimension())
    throw Error(ErrorCode::MalformedProviderResponse, "candidate and reference embeddings differ in dimension");
}

// Shortens the premise, then the hypothesis, so that together they fit `budget`
// tokens. Returns true when anything was cut.
bool truncate_pair(std::string& premise, std::string& hypothesis, std::size_t budget) {
  if (budget == 0) return false;
  auto p = textproc::tokenize(premise);
  auto h = textproc::tokenize(hypothesis);
  if (p.size() + h.size() <= budget) return false;
  const std::size_t keep_h = std::min(h.size(), budget);
  const std::size_t keep_p = budget - keep_h > p.size() ? p.size() : budget - keep_h;
  if (keep_p < p.size()) premise = keep_p ? premise.substr(0, p.spans[keep_p - 1].end) : std::string();
  if (keep_h < h.size()) hypothesis = keep_h ? hypothesis.substr(0, h.spans[keep_h - 1].end) : std::string();
  return true;
}

void check_sentences(const textproc::SentenceSeq& summary, const textproc::SentenceSeq& document) {
  if (summary.empty()) throw Error(ErrorCode::EmptySummary, "summary has no sentences");
  if (document.empty()) throw Error(ErrorCode::EmptyDocument, "document has no sentences");
}

double score_cell(const textproc::Sentence& summary, const textproc::Sentence& document,
                  providers::NliProvider& nli, bool& truncated) {
  std::string premise = document.text;
  std::string hypothesis = summary.text;
  truncated = truncate_pair(premise, hypothesis, nli.max_pair_tokens());
  auto j = nli.nli(premise, hypothesis);
  j.validate();
  return j.entailment;
}

void warn_truncated(std::size_t n) {
  if (n) std::clog << "warning: " << n << " NLI sentence pair(s) truncated to the provider budget\n";
}

}  // namespace

Matrix cosine_matrix(const providers::EmbeddingMatrix& candidate, const providers::EmbeddingMatrix& reference) {
  const auto nc = norms(candidate);
  const auto nr = norms(reference);
  Matrix sim(candidate.vectors.size(), std::vector<double>(reference.vectors.size()));
  const auto rows = static_cast<std::ptrdiff_t>(sim.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    for (std::size_t j = 0; j < reference.vectors.size(); ++j)
      sim[ui][j] = cosine(candidate.vectors[ui], nc[ui], reference.vectors[j], nr[j]);
  }
  return sim;
}

PrfScore greedy_match(const Matrix& similarity) {
  if (similarity.empty() || similarity.front().empty()) throw Error(ErrorCode::EmptyInput, "empty similarity matrix");
  const std::size_t rows = similarity.size(), cols = similarity.front().size();
  std::vector<double> col_max(cols, -std::numeric_limits<double>::infinity());
  double row_sum = 0.0;
  for (const auto& row : similarity) {
    row_sum += *std::max_element(row.begin(), row.end());
    for (std::size_t j = 0; j < cols; ++j) col_max[j] = std::max(col_max[j], row[j]);
  }
  const double precision = row_sum / static_cast<double>(rows);
  const double recall = std::accumulate(col_max.begin(), col_max.end(), 0.0) / static_cast<double>(cols);
  return PrfScore::from_pr(precision, recall);
}

PrfScore bertscore(const providers::EmbeddingMatrix& candidate, const providers::EmbeddingMatrix& reference) {
  check_pair(candidate, reference);
  return greedy_match(cosine_matrix(candidate, reference));
}

PrfScore bertscore(const textproc::TokenSeq& candidate, const textproc::TokenSeq& reference,
                   providers::EmbeddingProvider& embedder) {
  if (candidate.empty() || reference.empty()) throw Error(ErrorCode::EmptyInput, "BERTScore needs non-empty inputs");
  return bertscore(embedder.embed(candidate.joined()), embedder.embed(reference.joined()));
}

double aggregate_zero_shot(const Matrix& entailment) {
  if (entailment.empty()) throw Error(ErrorCode::EmptySummary, "no summary sentences");
  double total = 0.0;
  for (const auto& row : entailment) {
    if (row.empty()) throw Error(ErrorCode::EmptyDocument, "no document sentences");
    total += *std::max_element(row.begin(), row.end());
  }
  return total / static_cast<double>(entailment.size());
}

ConsistencyReport summac_zs(const textproc::SentenceSeq& summary, const textproc::SentenceSeq& document,
                            providers::NliProvider& nli) {
  check_sentences(summary, document);
  const std::size_t rows = summary.size(), cols = document.size();
  ConsistencyReport report;
  report.sentence_matrix.assign(rows, std::vector<double>(cols, 0.0));
  std::vector<std::exception_ptr> errors(rows * cols);
  std::vector<char> truncated(rows * cols, 0);
  const auto cells = static_cast<std::ptrdiff_t>(rows * cols);

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t c = 0; c < cells; ++c) {
    const auto cell = static_cast<std::size_t>(c);
    const std::size_t i = cell / cols, j = cell % cols;
    try {
      bool cut = false;
      report.sentence_matrix[i][j] = score_cell(summary.sentences[i], document.sentences[j], nli, cut);
      truncated[cell] = cut;
    } catch (...) {
      errors[cell] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  report.truncated_pairs = static_cast<std::size_t>(std::count(truncated.begin(), truncated.end(), 1));
  warn_truncated(report.truncated_pairs);
  report.score = aggregate_zero_shot(report.sentence_matrix);
  return report;
}

namespace reference {

Matrix cosine_matrix_serial(const providers::EmbeddingMatrix& candidate, const providers::EmbeddingMatrix& reference) {
  const auto nc = norms(candidate);
  const auto nr = norms(reference);
  Matrix sim;
  for (std::size_t i = 0; i < candidate.vectors.size(); ++i) {
    auto& row = sim.emplace_back();
    for (std::size_t j = 0; j < reference.vectors.size(); ++j)
      row.push_back(cosine(candidate.vectors[i], nc[i], reference.vectors[j], nr[j]));
  }
  return sim;
}

ConsistencyReport summac_zs_serial(const textproc::SentenceSeq& summary, const textproc::SentenceSeq& document,
                                   providers::NliProvider& nli) {
  check_sentences(summary, document);
  ConsistencyReport report;
  for (const auto& s : summary.sentences) {
    auto& row = report.sentence_matrix.emplace_back();
    for (const auto& d : document.sentences) {
      bool cut = false;
      row.push_back(score_cell(s, d, nli, cut));
      report.truncated_pairs += cut;
    }
  }
  warn_truncated(report.truncated_pairs);
  report.score = aggregate_zero_shot(report.sentence_matrix);
  return report;
}

}  // namespace reference

}  // namespace sumeval::modelmetrics
