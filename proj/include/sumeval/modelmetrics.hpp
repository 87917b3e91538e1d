#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sumeval/lexmetrics.hpp"
#include "sumeval/providers.hpp"
#include "sumeval/textproc.hpp"

namespace sumeval::modelmetrics {

using lexmetrics::PrfScore;
using Matrix = std::vector<std::vector<double>>;

/// rows = candidate tokens, columns = reference tokens. Zero vectors have
/// similarity 0 with everything. OpenMP over rows.
Matrix cosine_matrix(const providers::EmbeddingMatrix& candidate, const providers::EmbeddingMatrix& reference);

/// Greedy matching over a similarity matrix: precision = mean row max,
/// recall = mean column max. No idf weighting, no baseline rescaling.
PrfScore greedy_match(const Matrix& similarity);

/// Throws EmptyInput when either side has no tokens; provider errors propagate.
PrfScore bertscore(const providers::EmbeddingMatrix& candidate, const providers::EmbeddingMatrix& reference);
PrfScore bertscore(const textproc::TokenSeq& candidate, const textproc::TokenSeq& reference,
                   providers::EmbeddingProvider& embedder);

inline constexpr const char* kZeroShotAggregation = "zero-shot";

struct ConsistencyReport {
  double score = 0.0;
  Matrix sentence_matrix;  // [summary sentence][document sentence] entailment
  std::string aggregation = kZeroShotAggregation;
  std::size_t truncated_pairs = 0;
};

/// Max over document sentences, then mean over summary sentences.
double aggregate_zero_shot(const Matrix& entailment);

/// Sentence-pair NLI consistency. Cell (i, j) holds the entailment probability
/// of summary sentence i given document sentence j. Cells are scored in
/// parallel; pairs over the provider's token budget are cut from the right
/// (premise first) and counted in truncated_pairs.
ConsistencyReport summac_zs(const textproc::SentenceSeq& summary, const textproc::SentenceSeq& document,
                            providers::NliProvider& nli);

namespace reference {
Matrix cosine_matrix_serial(const providers::EmbeddingMatrix& candidate, const providers::EmbeddingMatrix& reference);
ConsistencyReport summac_zs_serial(const textproc::SentenceSeq& summary, const textproc::SentenceSeq& document,
                                   providers::NliProvider& nli);
}  // namespace reference

}  // namespace sumeval::modelmetrics
