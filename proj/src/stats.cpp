#include "sumeval/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <boost/math/distributions/students_t.hpp>

namespace sumeval::stats {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::Pearson: return "pearson";
    case Method::Spearman: return "spearman";
    case Method::KendallTauB: return "kendall_tau_b";
  }
  return "";
}

Method method_from_string(std::string_view s) {
  if (s == "pearson") return Method::Pearson;
  if (s == "spearman") return Method::Spearman;
  if (s == "kendall" || s == "kendall_tau_b") return Method::KendallTauB;
  throw Error(ErrorCode::InvalidArgument, "unknown correlation method '" + std::string(s) + "'");
}

std::string significance_stars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

std::pair<std::vector<double>, std::vector<double>> align(const ScoreVector& x, const ScoreVector& y) {
  for (const auto* v : {&x, &y})
    if (v->values.size() != v->unit_ids.size())
      throw Error(ErrorCode::Misaligned, "'" + v->label + "' has " + std::to_string(v->values.size()) + " values for " +
                                             std::to_string(v->unit_ids.size()) + " units");
  if (x.unit_ids.size() != y.unit_ids.size())
    throw Error(ErrorCode::Misaligned, "'" + x.label + "' and '" + y.label + "' cover different units");
  std::unordered_map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < y.unit_ids.size(); ++i)
    if (!pos.emplace(y.unit_ids[i], i).second)
      throw Error(ErrorCode::Misaligned, "duplicate unit '" + y.unit_ids[i] + "' in '" + y.label + "'");
  std::vector<double> yv;
  yv.reserve(x.values.size());
  std::unordered_map<std::string, bool> seen_x;
  for (const auto& u : x.unit_ids) {
    if (!seen_x.emplace(u, true).second) throw Error(ErrorCode::Misaligned, "duplicate unit '" + u + "' in '" + x.label + "'");
    auto it = pos.find(u);
    if (it == pos.end()) throw Error(ErrorCode::Misaligned, "unit '" + u + "' missing from '" + y.label + "'");
    yv.push_back(y.values[it->second]);
  }
  return {x.values, std::move(yv)};
}

std::vector<double> mean_ranks(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

namespace {

void require_usable(const ScoreVector& v, const std::vector<double>& values) {
  if (values.size() < 3)
    throw Error(ErrorCode::TooFewSamples, "'" + v.label + "' has " + std::to_string(values.size()) + " samples, need 3");
  if (std::all_of(values.begin(), values.end(), [&](double a) { return a == values.front(); }))
    throw Error(ErrorCode::ConstantVector, "'" + v.label + "' is constant");
}

std::pair<std::vector<double>, std::vector<double>> checked(const ScoreVector& x, const ScoreVector& y) {
  auto aligned = align(x, y);
  require_usable(x, aligned.first);
  require_usable(y, aligned.second);
  return aligned;
}

CorrelationResult make_result(double coefficient, double p, Method m, std::size_t n) {
  CorrelationResult r;
  r.coefficient = std::clamp(coefficient, -1.0, 1.0);
  r.p_value = std::clamp(p, 0.0, 1.0);
  r.method = m;
  r.n = n;
  r.stars = significance_stars(r.p_value);
  return r;
}

}  // namespace

double pearson_coefficient(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double pearson_t_p_value(double r, std::size_t n) {
  if (n < 3) return 1.0;
  if (std::abs(r) >= 1.0) return 0.0;
  const double df = static_cast<double>(n - 2);
  const double t = std::abs(r) * std::sqrt(df / (1.0 - r * r));
  boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, t));
}

CorrelationResult pearson(const ScoreVector& x, const ScoreVector& y) {
  const auto [a, b] = checked(x, y);
  const double r = pearson_coefficient(a, b);
  return make_result(r, pearson_t_p_value(r, a.size()), Method::Pearson, a.size());
}

CorrelationResult spearman(const ScoreVector& x, const ScoreVector& y) {
  const auto [a, b] = checked(x, y);
  const double rho = pearson_coefficient(mean_ranks(a), mean_ranks(b));
  return make_result(rho, pearson_t_p_value(rho, a.size()), Method::Spearman, a.size());
}

double KendallCounts::tau_b() const {
  const double denom = std::sqrt(static_cast<double>(pairs - x_ties) * static_cast<double>(pairs - y_ties));
  return static_cast<double>(concordant - discordant) / denom;
}

KendallCounts kendall_counts(const std::vector<double>& x, const std::vector<double>& y) {
  KendallCounts k;
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      ++k.pairs;
      const double dx = x[i] - x[j], dy = y[i] - y[j];
      if (dx == 0) ++k.x_ties;
      if (dy == 0) ++k.y_ties;
      if (dx == 0 || dy == 0) continue;
      ((dx > 0) == (dy > 0) ? k.concordant : k.discordant) += 1;
    }
  }
  return k;
}

namespace {

long long s_statistic(const std::vector<double>& x, const std::vector<double>& y, const std::vector<std::size_t>& perm) {
  long long s = 0;
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = x[i] - x[j], dy = y[perm[i]] - y[perm[j]];
      if (dx == 0 || dy == 0) continue;
      s += (dx > 0) == (dy > 0) ? 1 : -1;
    }
  return s;
}

double factorial(std::size_t n) {
  double f = 1;
  for (std::size_t i = 2; i <= n; ++i) f *= static_cast<double>(i);
  return f;
}

}  // namespace

double kendall_exact_p_value(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  std::vector<std::size_t> identity(n);
  std::iota(identity.begin(), identity.end(), 0);
  const long long observed = std::llabs(s_statistic(x, y, identity));
  long long hits = 0;
  const auto first_count = static_cast<std::ptrdiff_t>(n);

#pragma omp parallel for reduction(+ : hits) schedule(dynamic)
  for (std::ptrdiff_t f = 0; f < first_count; ++f) {
    std::vector<std::size_t> perm;
    perm.reserve(n);
    perm.push_back(static_cast<std::size_t>(f));
    for (std::size_t i = 0; i < n; ++i)
      if (i != static_cast<std::size_t>(f)) perm.push_back(i);
    do {
      if (std::llabs(s_statistic(x, y, perm)) >= observed) ++hits;
    } while (std::next_permutation(perm.begin() + 1, perm.end()));
  }
  return static_cast<double>(hits) / factorial(n);
}

double kendall_normal_p_value(const std::vector<double>& x, const std::vector<double>& y) {
  const auto k = kendall_counts(x, y);
  const double n = static_cast<double>(x.size());
  auto tie_sums = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    double a = 0, b = 0, c = 0;  // sum t(t-1)(2t+5), sum t(t-1), sum t(t-1)(t-2)
    for (std::size_t i = 0; i < v.size();) {
      std::size_t j = i;
      while (j < v.size() && v[j] == v[i]) ++j;
      const double t = static_cast<double>(j - i);
      a += t * (t - 1) * (2 * t + 5);
      b += t * (t - 1);
      c += t * (t - 1) * (t - 2);
      i = j;
    }
    return std::array<double, 3>{a, b, c};
  };
  const auto tx = tie_sums(x), ty = tie_sums(y);
  const double v0 = n * (n - 1) * (2 * n + 5);
  const double var = (v0 - tx[0] - ty[0]) / 18.0 + tx[1] * ty[1] / (2 * n * (n - 1)) +
                     tx[2] * ty[2] / (9 * n * (n - 1) * (n - 2));
  const double s = static_cast<double>(k.concordant - k.discordant);
  if (var <= 0) return 1.0;
  return std::erfc(std::abs(s) / std::sqrt(var) / std::sqrt(2.0));
}

CorrelationResult kendall_tau_b(const ScoreVector& x, const ScoreVector& y) {
  const auto [a, b] = checked(x, y);
  const auto k = kendall_counts(a, b);
  if (k.pairs == k.x_ties || k.pairs == k.y_ties)
    throw Error(ErrorCode::ConstantVector, "all pairs tied");
  const double p = a.size() <= kExactKendallMaxN ? kendall_exact_p_value(a, b) : kendall_normal_p_value(a, b);
  return make_result(k.tau_b(), p, Method::KendallTauB, a.size());
}

CorrelationResult correlate(const ScoreVector& x, const ScoreVector& y, Method method) {
  switch (method) {
    case Method::Pearson: return pearson(x, y);
    case Method::Spearman: return spearman(x, y);
    case Method::KendallTauB: return kendall_tau_b(x, y);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown method");
}

std::string format_decimal(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  std::string s = buf;
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  if (auto dot = s.find('.'); dot != std::string::npos) {
    while (s.size() > dot + 2 && s.back() == '0') s.pop_back();
  } else {
    s += ".0";
  }
  return s;
}

std::string AggregateCell::render() const {
  return format_decimal(mean, mean_decimals) + "(" + format_decimal(std, std_decimals) + ")";
}

AggregateCell aggregate(const std::vector<double>& values, int precision) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "no scores to aggregate");
  AggregateCell cell;
  cell.n = values.size();
  cell.mean_decimals = precision;
  cell.std_decimals = precision;
  cell.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0;
    for (double v : values) ss += (v - cell.mean) * (v - cell.mean);
    cell.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return cell;
}

const MatrixCell& CorrelationMatrix::at(std::string_view row, std::string_view col) const {
  auto idx = [&](std::string_view l) {
    auto it = std::find(labels.begin(), labels.end(), l);
    if (it == labels.end()) throw Error(ErrorCode::InvalidArgument, "no label '" + std::string(l) + "'");
    return static_cast<std::size_t>(it - labels.begin());
  };
  return cells[idx(row)][idx(col)];
}

std::string CorrelationMatrix::to_csv() const {
  std::ostringstream out;
  out << "row,column,method,n,coefficient,p_value,stars,error\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t j = 0; j < labels.size(); ++j) {
      const auto& c = cells[i][j];
      out << labels[i] << ',' << labels[j] << ',' << to_string(method) << ',';
      if (c.result)
        out << c.result->n << ',' << c.result->coefficient << ',' << c.result->p_value << ',' << c.result->stars << ",\n";
      else
        out << ",,,," << (c.error ? to_string(*c.error) : "") << '\n';
    }
  return out.str();
}

std::string CorrelationMatrix::to_text(int decimals) const {
  std::vector<std::vector<std::string>> grid;
  grid.emplace_back();
  grid.back().push_back("");
  for (const auto& l : labels) grid.back().push_back(l);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& row = grid.emplace_back();
    row.push_back(labels[i]);
    for (std::size_t j = 0; j < labels.size(); ++j) {
      const auto& c = cells[i][j];
      row.push_back(c.result ? format_decimal(c.result->coefficient, decimals) + c.result->stars
                             : "[" + std::string(c.error ? to_string(*c.error) : "n/a") + "]");
    }
  }
  std::vector<std::size_t> width(grid.front().size(), 0);
  for (const auto& row : grid)
    for (std::size_t j = 0; j < row.size(); ++j) width[j] = std::max(width[j], row[j].size());
  std::ostringstream out;
  for (const auto& row : grid) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      out << std::left << std::setw(static_cast<int>(width[j])) << row[j];
      if (j + 1 < row.size()) out << "  ";
    }
    out << '\n';
  }
  out << "* p < 0.05, ** p < 0.01, *** p < 0.001 (" << to_string(method) << ")\n";
  return out.str();
}

namespace {

MatrixCell compute_cell(const ScoreVector& x, const ScoreVector& y, Method method) {
  MatrixCell cell;
  try {
    cell.result = correlate(x, y, method);
  } catch (const Error& e) {
    cell.error = e.code();
    cell.message = e.what();
  }
  return cell;
}

CorrelationMatrix empty_matrix(const std::vector<ScoreVector>& vectors, Method method) {
  if (vectors.size() < 2) throw Error(ErrorCode::InvalidArgument, "correlation matrix needs at least two vectors");
  CorrelationMatrix m;
  m.method = method;
  for (const auto& v : vectors) m.labels.push_back(v.label);
  m.cells.assign(vectors.size(), std::vector<MatrixCell>(vectors.size()));
  return m;
}

}  // namespace

CorrelationMatrix correlation_matrix(const std::vector<ScoreVector>& vectors, Method method) {
  auto m = empty_matrix(vectors, method);
  const std::size_t k = vectors.size();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i; j < k; ++j) pairs.emplace_back(i, j);
  const auto count = static_cast<std::ptrdiff_t>(pairs.size());

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t p = 0; p < count; ++p) {
    const auto [i, j] = pairs[static_cast<std::size_t>(p)];
    m.cells[i][j] = compute_cell(vectors[i], vectors[j], method);
  }
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < i; ++j) m.cells[i][j] = m.cells[j][i];
  return m;
}

namespace reference {

CorrelationMatrix correlation_matrix_serial(const std::vector<ScoreVector>& vectors, Method method) {
  auto m = empty_matrix(vectors, method);
  for (std::size_t i = 0; i < vectors.size(); ++i)
    for (std::size_t j = 0; j < vectors.size(); ++j)
      m.cells[i][j] = j < i ? m.cells[j][i] : compute_cell(vectors[i], vectors[j], method);
  return m;
}

double kendall_exact_p_value_serial(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<std::size_t> perm(x.size());
  std::iota(perm.begin(), perm.end(), 0);
  const long long observed = std::llabs(s_statistic(x, y, perm));
  long long hits = 0, total = 0;
  do {
    ++total;
    if (std::llabs(s_statistic(x, y, perm)) >= observed) ++hits;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace reference

}  // namespace sumeval::stats
