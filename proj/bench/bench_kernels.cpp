// Serial reference kernels against their OpenMP counterparts.
#include <benchmark/benchmark.h>

#include <random>

#include "sumeval/lexmetrics.hpp"
#include "sumeval/modelmetrics.hpp"
#include "sumeval/stats.hpp"

using namespace sumeval;

namespace {

std::string random_text(std::mt19937_64& rng, std::size_t words) {
  std::string out;
  for (std::size_t i = 0; i < words; ++i) {
    out += "w" + std::to_string(rng() % 400);
    out += (i % 15 == 14) ? ". " : " ";
  }
  return out + "end.";
}

std::vector<lexmetrics::PairInput> pairs(std::size_t n) {
  std::mt19937_64 rng(1);
  std::vector<lexmetrics::PairInput> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back({"c" + std::to_string(i), "r" + std::to_string(i), random_text(rng, 120), random_text(rng, 600)});
  return out;
}

std::vector<stats::ScoreVector> vectors(std::size_t count, std::size_t n) {
  std::mt19937_64 rng(2);
  std::vector<std::string> units;
  for (std::size_t i = 0; i < n; ++i) units.push_back("u" + std::to_string(i));
  std::vector<stats::ScoreVector> out;
  for (std::size_t v = 0; v < count; ++v) {
    std::vector<double> values(n);
    for (auto& x : values) x = static_cast<double>(rng() % 5);
    out.push_back({"v" + std::to_string(v), values, units});
  }
  return out;
}

void BM_LexicalSerial(benchmark::State& state) {
  const auto input = pairs(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(lexmetrics::reference::score_batch_serial(input));
}
void BM_LexicalParallel(benchmark::State& state) {
  const auto input = pairs(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(lexmetrics::score_batch(input));
}

void BM_CosineSerial(benchmark::State& state) {
  std::mt19937_64 rng(3);
  providers::OneHotEmbedder e(4096);
  const auto a = e.embed(random_text(rng, 150)), b = e.embed(random_text(rng, 600));
  for (auto _ : state) benchmark::DoNotOptimize(modelmetrics::reference::cosine_matrix_serial(a, b));
}
void BM_CosineParallel(benchmark::State& state) {
  std::mt19937_64 rng(3);
  providers::OneHotEmbedder e(4096);
  const auto a = e.embed(random_text(rng, 150)), b = e.embed(random_text(rng, 600));
  for (auto _ : state) benchmark::DoNotOptimize(modelmetrics::cosine_matrix(a, b));
}

void BM_MatrixSerial(benchmark::State& state) {
  const auto v = vectors(16, 8);
  for (auto _ : state) benchmark::DoNotOptimize(stats::reference::correlation_matrix_serial(v, stats::Method::KendallTauB));
}
void BM_MatrixParallel(benchmark::State& state) {
  const auto v = vectors(16, 8);
  for (auto _ : state) benchmark::DoNotOptimize(stats::correlation_matrix(v, stats::Method::KendallTauB));
}

}  // namespace

BENCHMARK(BM_LexicalSerial)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LexicalParallel)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CosineSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CosineParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MatrixSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MatrixParallel)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
