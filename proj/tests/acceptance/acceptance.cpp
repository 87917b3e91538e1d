// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "oracles/lex_oracles.hpp"
#include "oracles/stats_oracles.hpp"
#include "sumeval/cli.hpp"
#include "sumeval/lexmetrics.hpp"
#include "sumeval/modelmetrics.hpp"
#include "sumeval/refine.hpp"
#include "sumeval/runstore.hpp"
#include "sumeval/service.hpp"
#include "sumeval/stats.hpp"

using namespace sumeval;
using Tokens = std::vector<std::string>;
namespace fs = std::filesystem;

namespace {

struct Check {
  std::vector<std::string> problems;
  void expect(bool ok, const std::string& what) {
    if (!ok && problems.size() < 5) problems.push_back(what);
  }
  void near(double got, double want, double tol, const std::string& what) {
    std::ostringstream s;
    s.precision(17);
    s << what << ": got " << got << ", want " << want;
    expect(std::abs(got - want) <= tol, s.str());
  }
};

int failures = 0;

void criterion(const std::string& name, double time_limit_s, const std::function<void(Check&)>& body) {
  Check c;
  const auto start = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.problems.push_back(std::string("exception: ") + e.what());
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (time_limit_s > 0 && elapsed >= time_limit_s)
    c.problems.push_back("took " + std::to_string(elapsed) + " s, limit " + std::to_string(time_limit_s) + " s");
  const bool ok = c.problems.empty();
  failures += !ok;
  std::cout << (ok ? "PASS" : "FAIL") << "  " << name << "  (" << std::to_string(elapsed).substr(0, 6) << " s)";
  for (const auto& p : c.problems) std::cout << "\n      " << p;
  std::cout << std::endl;
}

Tokens random_tokens(std::mt19937_64& rng, std::size_t min_len, std::size_t max_len, int alphabet) {
  Tokens t(min_len + rng() % (max_len - min_len + 1));
  for (auto& s : t) s = std::string(1, static_cast<char>('a' + rng() % alphabet));
  return t;
}

stats::ScoreVector model_vector(const std::string& label, std::vector<double> values) {
  return {label, std::move(values), {"HUPD_T5_base", "XLNet", "BART", "LongT5", "GPT-3.5"}};
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void metric_oracles(Check& c) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 500; ++trial) {
    const auto a = random_tokens(rng, 0, 12, 5), b = random_tokens(rng, 0, 12, 5);
    const auto ca = textproc::make_token_seq(a), cb = textproc::make_token_seq(b);
    for (int n : {1, 2}) {
      const auto got = lexmetrics::rouge_n(ca, cb, n);
      const auto want = oracle::rouge_n(a, b, static_cast<std::size_t>(n));
      c.near(got.precision, want.p, 1e-9, "rouge-" + std::to_string(n) + " precision");
      c.near(got.recall, want.r, 1e-9, "rouge-" + std::to_string(n) + " recall");
      c.near(got.f1, want.f, 1e-9, "rouge-" + std::to_string(n) + " f1");
    }
    if (a.size() <= 10 && b.size() <= 10) {
      const auto got = lexmetrics::rouge_l(ca, cb);
      const auto want = oracle::rouge_l(a, b);
      c.near(got.precision, want.p, 1e-9, "rouge-l precision");
      c.near(got.recall, want.r, 1e-9, "rouge-l recall");
      c.near(got.f1, want.f, 1e-9, "rouge-l f1");
    }
  }
}

void readability(Check& c) {
  const std::string text = "The cat sat. The dog ran.";
  c.near(lexmetrics::fre(text), 119.19, 5e-5, "FRE two sentences");
  c.near(lexmetrics::fre("Go."), 121.22, 5e-5, "FRE one word");
  const auto familiar = textproc::FamiliarWords::from_text("the\ncat\nsat\ndog\nran\n");
  c.near(lexmetrics::dcr(text, familiar), 0.1488, 5e-5, "DCR all familiar");
  c.near(lexmetrics::dcr(text, textproc::FamiliarWords{}), 15.9388, 5e-5, "DCR all difficult");
}

void bleu_boundaries(Check& c) {
  auto bleu = [](const Tokens& cand, const Tokens& ref) {
    std::vector<textproc::TokenSeq> refs{textproc::make_token_seq(ref)};
    return lexmetrics::bleu(textproc::make_token_seq(cand), refs);
  };
  const Tokens sentence{"a", "device", "folds", "along", "a", "hinge", "line"};
  c.near(bleu(sentence, sentence), 1.0, 1e-12, "identical");
  c.expect(bleu({"red", "green", "blue", "cyan"}, {"one", "two", "three", "four"}) == 0.0, "disjoint is not exactly 0");
  c.near(bleu({"the", "cat"}, {"the", "cat", "sat"}), 0.6065, 1e-4, "short candidate");
}

void published_means(Check& c) {
  const auto accuracy = model_vector("accuracy", {2.017, 2.883, 2.783, 2.083, 4.35});
  const auto coverage = model_vector("coverage", {1.8, 2.517, 2.517, 2.133, 4.517});
  const auto overall = model_vector("overall", {1.7, 2.467, 2.6, 2.0, 4.45});
  const auto acc_overall = stats::kendall_tau_b(accuracy, overall).coefficient;
  c.expect(acc_overall == 0.8, "tau-b(accuracy, overall) = " + std::to_string(acc_overall) + ", want exactly 0.8");
  c.near(stats::kendall_tau_b(accuracy, coverage).coefficient, 0.9487, 5e-4, "tau-b(accuracy, coverage)");
  const auto rho = stats::spearman(accuracy, overall).coefficient;
  c.near(rho, 0.9, 1e-12, "spearman(accuracy, overall)");
}

void stats_oracles(Check& c) {
  std::mt19937_64 rng(77);
  int done = 0, exact = 0;
  while (done < 1000) {
    const std::size_t n = 3 + rng() % 10;
    std::vector<double> x(n), y(n);
    for (auto& v : x) v = static_cast<double>(rng() % 6);
    for (auto& v : y) v = static_cast<double>(rng() % 6);
    auto constant = [](const std::vector<double>& v) {
      return std::all_of(v.begin(), v.end(), [&](double e) { return e == v[0]; });
    };
    if (constant(x) || constant(y)) continue;
    std::vector<std::string> units;
    for (std::size_t i = 0; i < n; ++i) units.push_back("u" + std::to_string(i));
    const stats::ScoreVector xv{"x", x, units}, yv{"y", y, units};
    c.near(stats::pearson(xv, yv).coefficient, oracle::pearson(x, y), 1e-12, "pearson");
    c.near(stats::spearman(xv, yv).coefficient, oracle::spearman(x, y), 1e-12, "spearman");
    c.near(stats::kendall_tau_b(xv, yv).coefficient, oracle::kendall_tau_b(x, y), 1e-12, "kendall tau-b");
    if (n <= 8) {
      c.near(stats::kendall_exact_p_value(x, y), oracle::kendall_exact_p(x, y), 1e-12, "exact kendall p");
      ++exact;
    }
    ++done;
  }
  c.expect(exact > 200, "too few exact p-value comparisons");
}

void bertscore_onehot(Check& c) {
  std::mt19937_64 rng(99);
  providers::OneHotEmbedder embedder;
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = random_tokens(rng, 1, 15, 8), b = random_tokens(rng, 1, 15, 8);
    const auto got = modelmetrics::bertscore(textproc::make_token_seq(a), textproc::make_token_seq(b), embedder);
    const auto want = oracle::onehot_bertscore(a, b);
    c.near(got.precision, want.p, 1e-9, "bertscore precision");
    c.near(got.recall, want.r, 1e-9, "bertscore recall");
    c.near(got.f1, want.f, 1e-9, "bertscore f1");
  }
}

void summac_aggregation(Check& c) {
  const auto fixtures = nlohmann::json::parse(read_file(fs::path(SUMEVAL_FIXTURES) / "summac_matrices.json"));
  int seen_2 = 0, seen_3 = 0;
  for (const auto& f : fixtures) {
    const auto m = f.at("entailment").get<modelmetrics::Matrix>();
    const double expected = f.at("expected").get<double>();
    const auto name = f.at("name").get<std::string>();
    (m.size() == 2 ? seen_2 : seen_3)++;
    c.near(modelmetrics::aggregate_zero_shot(m), expected, 1e-12, name + " aggregation");

    // Same matrix through the sentence-level scorer with a table-driven NLI mock.
    std::map<std::pair<std::string, std::string>, double> table;
    std::string summary, document;
    for (std::size_t i = 0; i < m.size(); ++i) summary += "Summary line " + std::to_string(i) + ". ";
    for (std::size_t j = 0; j < m[0].size(); ++j) document += "Document line " + std::to_string(j) + ". ";
    for (std::size_t i = 0; i < m.size(); ++i)
      for (std::size_t j = 0; j < m[i].size(); ++j)
        table[{"Document line " + std::to_string(j) + ".", "Summary line " + std::to_string(i) + "."}] = m[i][j];
    providers::TableNli nli(table, -1.0);
    const auto report = modelmetrics::summac_zs(textproc::split_sentences(summary), textproc::split_sentences(document), nli);
    c.near(report.score, expected, 1e-12, name + " sentence scoring");
    c.expect(report.sentence_matrix == m, name + " sentence matrix differs");
  }
  c.expect(seen_2 >= 2 && seen_3 >= 2, "fixture set lacks 2x2 or 3x3 matrices");
}

runstore::RatingRecord session_rating(const std::string& session, int i, std::optional<bool> gold) {
  runstore::RatingRecord r;
  r.document_id = (gold ? "gold-" : "doc-") + std::to_string(i);
  r.model_name = "BART";
  r.evaluator_id = "rater-" + session;
  r.scores = {3, 3, 3, 3, r.evaluator_id, std::nullopt};
  r.session_id = session;
  r.is_gold_check = gold.has_value();
  r.passed_gold = gold;
  return r;
}

void gold_filtering(Check& c) {
  std::vector<runstore::RatingRecord> ratings;
  const std::vector<std::pair<std::string, std::vector<bool>>> sessions{
      {"s1", {true, true, true}}, {"s2", {true, true, false}}, {"s3", {false, false, false}}};
  std::size_t first_session = 0;
  for (const auto& [id, passes] : sessions) {
    for (std::size_t g = 0; g < passes.size(); ++g) ratings.push_back(session_rating(id, static_cast<int>(g), passes[g]));
    for (int d = 0; d < 5; ++d) ratings.push_back(session_rating(id, d, std::nullopt));
    if (id == "s1") first_session = ratings.size();
  }
  const auto kept = runstore::filter_reliable(ratings, 1.0);
  const std::vector<runstore::RatingRecord> want(ratings.begin(), ratings.begin() + static_cast<long>(first_session));
  c.expect(kept == want, "retained " + std::to_string(kept.size()) + " records, want the " +
                             std::to_string(want.size()) + " of the first session");
}

void mock_end_to_end(Check& c) {
  const fs::path demo = fs::path(SUMEVAL_FIXTURES) / "demo";
  const fs::path dir = fs::temp_directory_path() / ("sumeval-acceptance-" + std::to_string(std::random_device{}()));
  fs::remove_all(dir);
  struct Cleanup {
    fs::path p;
    ~Cleanup() {
      std::error_code ec;
      fs::remove_all(p, ec);
    }
  } cleanup{dir};

  auto config = cli::RunConfig::load(demo / "run.json");
  config.run_dir = dir / "run";
  c.expect(config.refine && config.refine->max_rounds == 2, "demo config does not refine for two rounds");
  std::ostringstream log;
  c.expect(cli::cmd_evaluate(config, log).complete(), "evaluate incomplete");
  c.expect(cli::cmd_judge(config, log).complete(), "judge incomplete");
  c.expect(cli::cmd_refine(config, log).complete(), "refine incomplete");

  // Two simulated raters through the annotation service, answering gold checks correctly.
  {
    auto store = runstore::RunStore::open_directory(config.run_dir);
    const auto sample = corpus::sample(corpus::load_corpus(config.corpus), config.sample);
    const auto golds = service::load_gold_items(*config.service.gold_items);
    service::AnnotationService svc(store, service::tasks_from_run(store, sample), golds,
                                   {config.service.gold_rate, 3, 0, config.sample.seed, ""});
    for (const char* rater : {"rater-a", "rater-b"}) {
      const auto session = svc.register_session(rater);
      for (int k = 0;; ++k) {
        service::AnnotationTask task;
        try {
          task = svc.next_task(session);
        } catch (const Error&) {
          break;
        }
        const int s = task.is_gold_check ? 1 : 1 + (k + static_cast<int>(task.summary_text.size())) % 5;
        svc.submit_rating(session, task.task_id, s, s, s, s);
      }
    }
  }

  std::ostringstream out;
  cli::cmd_analyze(config.run_dir, stats::Method::KendallTauB, cli::Level::Model, std::nullopt, out);
  const auto report = cli::cmd_report(config.run_dir, std::nullopt, out);
  c.expect(report.complete(), "report incomplete");
  const auto judgments = read_file(config.run_dir / "report_judgments.txt");
  for (const char* needle : {"Human evaluation", "LLM (mock-judge) evaluation", "Clarity", "Accuracy", "Coverage", "Overall",
                             "BART", "LongT5", "GPT-3.5"})
    c.expect(judgments.find(needle) != std::string::npos, std::string("judgment table lacks ") + needle);
  c.expect(fs::exists(config.run_dir / "report_metrics.txt"), "no metrics table");
  c.expect(fs::exists(config.run_dir / "report_correlations.txt"), "no correlations table");

  auto store = runstore::RunStore::open_directory(config.run_dir);
  const auto transcripts = store.transcripts();
  c.expect(transcripts.size() == config.sample.size, "expected one transcript per sampled document");
  int two_round = 0;
  for (const auto& t : transcripts) {
    std::string why;
    c.expect(refine::verify_chain(t, &why), "hash chain broken for " + t.document_id + ": " + why);
    if (t.rounds.size() >= 2) {
      ++two_round;
      c.expect(t.rounds[1].prompt.find(t.rounds[0].feedback_text) != std::string::npos,
               "round-2 prompt lacks round-1 feedback for " + t.document_id);
      c.expect(t.rounds[1].chain_hash ==
                   refine::chain_link(t.rounds[0].chain_hash, t.rounds[0].feedback_text, t.rounds[1].prompt_hash),
               "round-2 chain link mismatch for " + t.document_id);
    }
  }
  c.expect(two_round > 0, "no transcript reached round 2");
}

}  // namespace

int main() {
  criterion("Metric oracle equivalence (ROUGE-1/2 vs clipped n-gram oracle, ROUGE-L vs exhaustive LCS)", 10.0, metric_oracles);
  criterion("Formula exactness (FRE 119.19 / 121.22, DCR 0.1488 / 15.9388)", 0, readability);
  criterion("BLEU boundary behavior (identical 1.0, disjoint 0.0, short candidate 0.6065)", 0, bleu_boundaries);
  criterion("Published human means: tau-b(acc,overall)=0.8, tau-b(acc,coverage)=0.9487, spearman(acc,overall)=0.9", 1.0,
            published_means);
  criterion("Statistics oracle equivalence (1000 random tied vectors, exact p for n<=8)", 0, stats_oracles);
  criterion("Mock-driven end-to-end (evaluate, judge, refine x2, analyze, report, hash chain)", 30.0, mock_end_to_end);
  criterion("BERTScore one-hot oracle (200 random pairs)", 0, bertscore_onehot);
  criterion("SummaC zero-shot aggregation on 2x2 and 3x3 fixture matrices", 0, summac_aggregation);
  criterion("Gold filtering keeps exactly the fully reliable session", 0, gold_filtering);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
