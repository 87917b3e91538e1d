#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sumeval/errors.hpp"

// Correlation meta-analysis: Pearson, Spearman and Kendall tau-b with
// significance, plus mean(std) aggregation for report tables.
namespace sumeval::stats {

/// Scores of one metric or evaluator dimension, keyed by unit (model name or
/// sample id). Two vectors are paired by unit id, never by position.
struct ScoreVector {
  std::string label;
  std::vector<double> values;
  std::vector<std::string> unit_ids;
};

enum class Method { Pearson, Spearman, KendallTauB };
std::string_view to_string(Method m);
/// Accepts pearson, spearman, kendall (or kendall_tau_b).
Method method_from_string(std::string_view s);

struct CorrelationResult {
  double coefficient = 0.0;
  double p_value = 1.0;
  Method method = Method::Pearson;
  std::size_t n = 0;
  std::string stars;  // "*" p < 0.05, "**" p < 0.01, "***" p < 0.001
};

std::string significance_stars(double p_value);

/// Values of `y` reordered to x's unit order. Throws Misaligned when the unit
/// sets differ or contain duplicates.
std::pair<std::vector<double>, std::vector<double>> align(const ScoreVector& x, const ScoreVector& y);

/// Average ranks, 1-based; ties share the mean of the positions they occupy.
std::vector<double> mean_ranks(const std::vector<double>& values);

/// All three need n >= 3 (TooFewSamples) and non-constant inputs (ConstantVector).
/// Pearson and Spearman p-values use the two-sided t approximation with n - 2
/// degrees of freedom.
CorrelationResult pearson(const ScoreVector& x, const ScoreVector& y);
CorrelationResult spearman(const ScoreVector& x, const ScoreVector& y);
/// tau-b = (C - D) / sqrt((n0 - n1)(n0 - n2)). Two-sided p from exact
/// enumeration of all n! orderings when n <= 8, tie-corrected normal
/// approximation otherwise.
CorrelationResult kendall_tau_b(const ScoreVector& x, const ScoreVector& y);
CorrelationResult correlate(const ScoreVector& x, const ScoreVector& y, Method method);

// Position-paired primitives behind the ScoreVector API.
double pearson_coefficient(const std::vector<double>& x, const std::vector<double>& y);
double pearson_t_p_value(double r, std::size_t n);

struct KendallCounts {
  long long concordant = 0;
  long long discordant = 0;
  long long pairs = 0;     // n0
  long long x_ties = 0;    // n1: pairs tied in x (including joint ties)
  long long y_ties = 0;    // n2
  double tau_b() const;
};
KendallCounts kendall_counts(const std::vector<double>& x, const std::vector<double>& y);

/// Fraction of the n! orderings of y whose |C - D| reaches the observed one.
/// OpenMP over the first position.
double kendall_exact_p_value(const std::vector<double>& x, const std::vector<double>& y);
double kendall_normal_p_value(const std::vector<double>& x, const std::vector<double>& y);

inline constexpr std::size_t kExactKendallMaxN = 8;

struct AggregateCell {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1); 0 when n == 1
  std::size_t n = 0;
  int mean_decimals = 2;
  int std_decimals = 2;

  /// "mean(std)" with trailing zeros dropped, keeping at least one decimal:
  /// [3, 5] at 2 decimals -> "4.0(1.41)".
  std::string render() const;
};

/// Both decimals set to `precision`. Throws EmptyInput for an empty list.
AggregateCell aggregate(const std::vector<double>& per_sample_scores, int precision = 2);

/// Fixed-point with `decimals` digits, trailing zeros dropped, one decimal kept.
std::string format_decimal(double value, int decimals);

struct MatrixCell {
  std::optional<CorrelationResult> result;
  std::optional<ErrorCode> error;
  std::string message;
};

struct CorrelationMatrix {
  Method method = Method::KendallTauB;
  std::vector<std::string> labels;
  std::vector<std::vector<MatrixCell>> cells;

  const MatrixCell& at(std::string_view row, std::string_view col) const;

  /// Long form: row,column,method,n,coefficient,p_value,stars,error.
  std::string to_csv() const;
  /// Aligned grid of "coef" + stars, error cells shown by code.
  std::string to_text(int decimals = 3) const;
};

/// Symmetric matrix over all pairs. A failing pair records its error in the
/// cell and the rest of the matrix is still computed. Throws InvalidArgument
/// for fewer than two vectors. OpenMP over the upper triangle.
CorrelationMatrix correlation_matrix(const std::vector<ScoreVector>& vectors, Method method);

namespace reference {
CorrelationMatrix correlation_matrix_serial(const std::vector<ScoreVector>& vectors, Method method);
double kendall_exact_p_value_serial(const std::vector<double>& x, const std::vector<double>& y);
}  // namespace reference

}  // namespace sumeval::stats
