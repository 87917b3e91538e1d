#include "sumeval/cli.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "sumeval/errors.hpp"
#include "sumeval/hashing.hpp"
#include "sumeval/judge.hpp"
#include "sumeval/lexmetrics.hpp"
#include "sumeval/modelmetrics.hpp"
#include "sumeval/refine.hpp"
#include "sumeval/service.hpp"
#include "sumeval/textproc.hpp"

namespace sumeval::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) throw Error(ErrorCode::StorageFailure, "cannot write " + path.string());
}

std::string column(const std::string& model, int round) {
  return round == 0 ? model : model + "@r" + std::to_string(round);
}

// Runs fn(i) for i in [0, n) on up to `workers` threads. fn handles its own errors.
template <class F>
void for_each_unit(std::size_t n, int workers, F&& fn) {
  std::atomic<std::size_t> next{0};
  auto body = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) fn(i);
  };
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, workers)), n);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();
}

struct Failures {
  std::mutex mu;
  std::vector<std::string> list;
  void add(const std::string& unit, const std::exception& e) {
    std::lock_guard lock(mu);
    list.push_back(unit + ": " + e.what());
  }
};

struct Workspace {
  runstore::RunStore store;
  corpus::Corpus sample;
};

Workspace open_workspace(const RunConfig& config) {
  return Workspace{runstore::RunStore::open_directory(config.run_dir),
                   corpus::sample(corpus::load_corpus(config.corpus), config.sample)};
}

std::map<std::string, std::string> load_ingest_file(const fs::path& path) {
  std::map<std::string, std::string> out;
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      const auto id = j.at("document_id").get<std::string>();
      const auto text = j.contains("summary") ? j.at("summary").get<std::string>() : j.at("text").get<std::string>();
      if (!out.emplace(id, text).second)
        throw Error(ErrorCode::DuplicateId, path.string() + ": duplicate document_id " + id, line_no);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::MalformedRecord, path.string() + ": " + e.what(), line_no);
    }
  }
  return out;
}

json provider_manifest(const RunConfig& config) {
  json p = json::object();
  for (const auto& r : config.roster)
    if (r.generate) p["generate:" + r.name] = r.generate->to_redacted_json();
  if (config.judge) p["judge"] = config.judge->to_redacted_json();
  if (config.bertscore) p["bertscore"] = config.bertscore->to_redacted_json();
  if (config.summac) p["summac"] = config.summac->to_redacted_json();
  return p;
}

const textproc::FamiliarWords* familiar_for(const RunConfig& config, std::optional<textproc::FamiliarWords>& holder) {
  if (!config.familiar_words) return nullptr;
  holder = textproc::FamiliarWords::from_file(*config.familiar_words);
  return &*holder;
}

}  // namespace

// --- config -----------------------------------------------------------------

RunConfig RunConfig::from_json(const json& j, const fs::path& base) {
  RunConfig c;
  try {
    if (j.contains("corpus")) c.corpus = resolve(base, j.at("corpus").get<std::string>());
    if (j.contains("run_dir")) c.run_dir = resolve(base, j.at("run_dir").get<std::string>());
    if (auto s = j.find("sample"); s != j.end()) {
      c.sample.size = s->value("size", c.sample.size);
      c.sample.seed = s->value("seed", c.sample.seed);
    }
    for (const auto& r : j.value("roster", json::array())) {
      RosterEntry e;
      e.name = r.at("name").get<std::string>();
      if (r.contains("ingest")) e.ingest = resolve(base, r.at("ingest").get<std::string>());
      if (r.contains("generate")) e.generate = providers::ProviderConfig::from_json(r.at("generate"));
      c.roster.push_back(std::move(e));
    }
    if (auto m = j.find("metrics"); m != j.end()) {
      c.metrics = m->value("lexical", true);
      if (m->contains("bertscore") && !m->at("bertscore").is_null())
        c.bertscore = providers::ProviderConfig::from_json(m->at("bertscore"));
      if (m->contains("summac") && !m->at("summac").is_null())
        c.summac = providers::ProviderConfig::from_json(m->at("summac"));
    }
    if (j.contains("judge") && !j.at("judge").is_null()) c.judge = providers::ProviderConfig::from_json(j.at("judge"));
    c.judge_retries = j.value("judge_retries", c.judge_retries);
    if (auto r = j.find("refine"); r != j.end() && !r->is_null()) {
      RefineSettings s;
      s.model = r->at("model").get<std::string>();
      s.max_rounds = r->value("max_rounds", s.max_rounds);
      s.stop_on_perfect = r->value("stop_on_perfect", s.stop_on_perfect);
      s.stop_on_fixed_point = r->value("stop_on_fixed_point", s.stop_on_fixed_point);
      c.refine = s;
    }
    if (auto s = j.find("service"); s != j.end()) {
      auto& v = c.service;
      v.host = s->value("host", v.host);
      v.port = s->value("port", v.port);
      v.gold_rate = s->value("gold_rate", v.gold_rate);
      v.redundancy = s->value("redundancy", v.redundancy);
      v.gold_tolerance = s->value("gold_tolerance", v.gold_tolerance);
      if (s->contains("gold_items")) v.gold_items = resolve(base, s->at("gold_items").get<std::string>());
    }
    if (j.contains("familiar_words")) c.familiar_words = resolve(base, j.at("familiar_words").get<std::string>());
    c.gold_threshold = j.value("gold_threshold", c.gold_threshold);
    c.workers = j.value("workers", c.workers);
  } catch (const json::exception& e) {
    config_error(std::string("bad config: ") + e.what());
  }
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    config_error(path.string() + ": " + e.what());
  }
  return from_json(j, path.parent_path());
}

void RunConfig::validate() const {
  if (corpus.empty()) config_error("no corpus given");
  if (!fs::exists(corpus)) config_error("corpus not found: " + corpus.string());
  if (run_dir.empty()) config_error("no run directory given");
  if (roster.empty()) config_error("roster is empty");
  if (!metrics && !bertscore && !summac && !judge) config_error("no metric or judge enabled");
  std::set<std::string> names;
  for (const auto& r : roster) {
    if (r.name.empty()) config_error("roster entry without a name");
    if (!names.insert(r.name).second) config_error("roster lists " + r.name + " twice");
    if (r.ingest.has_value() == r.generate.has_value())
      config_error("roster entry " + r.name + " needs exactly one of ingest or generate");
    if (r.ingest && !fs::exists(*r.ingest)) config_error("summary file for " + r.name + " not found: " + r.ingest->string());
  }
  if (familiar_words && !fs::exists(*familiar_words)) config_error("familiar-word list not found: " + familiar_words->string());
  if (service.gold_items && !fs::exists(*service.gold_items))
    config_error("gold items not found: " + service.gold_items->string());
  if (refine) {
    auto it = std::find_if(roster.begin(), roster.end(), [&](const RosterEntry& r) { return r.name == refine->model; });
    if (it == roster.end() || !it->generate) config_error("refine model " + refine->model + " is not a generated roster entry");
    if (refine->max_rounds < 1) config_error("max_rounds must be at least 1");
  }
  if (gold_threshold < 0 || gold_threshold > 1) config_error("gold_threshold must be in [0,1]");
}

// --- prepare ----------------------------------------------------------------

CommandResult prepare_run(const RunConfig& config, std::ostream& log) {
  config.validate();
  auto ws = open_workspace(config);
  auto& store = ws.store;
  CommandResult result;
  result.run_id = store.run_id();

  // Every ingest file must cover the sample before anything is written.
  std::map<std::string, std::map<std::string, std::string>> ingested;
  for (const auto& r : config.roster) {
    if (!r.ingest) continue;
    auto summaries = load_ingest_file(*r.ingest);
    std::vector<std::string> missing;
    for (const auto& d : ws.sample)
      if (!summaries.count(d.id)) missing.push_back(d.id);
    if (!missing.empty())
      config_error(r.ingest->string() + " has no summary for " + std::to_string(missing.size()) + " sampled document(s), e.g. " +
                   missing.front());
    ingested[r.name] = std::move(summaries);
  }

  const auto hash = corpus::load_corpus(config.corpus).content_hash();
  runstore::RunManifest manifest;
  if (auto existing = store.manifest()) {
    if (existing->corpus_hash != hash || existing->sample_size != config.sample.size || existing->seed != config.sample.seed)
      config_error("run directory " + config.run_dir.string() + " was created for a different corpus or sample");
    manifest = *existing;
  } else {
    manifest.run_id = store.run_id();
    manifest.created_at = utc_now_iso8601();
    manifest.corpus_hash = hash;
    manifest.sample_size = config.sample.size;
    manifest.seed = config.sample.seed;
  }
  manifest.corpus_uri = config.corpus.string();
  manifest.roster.clear();
  for (const auto& r : config.roster) manifest.roster.push_back(r.name);
  if (config.refine) manifest.roster.push_back(config.refine->model + "-refine");
  manifest.providers = provider_manifest(config);
  manifest.module_versions = {{"sumeval", kVersion}};
  manifest.gold_threshold = config.gold_threshold;
  store.write_manifest(manifest);
  result.artifacts.push_back(config.run_dir / "manifest.json");

  Failures failures;
  for (const auto& r : config.roster) {
    if (r.ingest) {
      for (const auto& d : ws.sample) {
        if (store.has_summary(d.id, r.name, 0)) {
          ++result.skipped;
          continue;
        }
        runstore::SummaryRecord rec{d.id, r.name, ingested[r.name].at(d.id), utc_now_iso8601(),
                                    runstore::Provenance::Ingested, 0};
        store.append(rec);
        ++result.computed;
      }
      continue;
    }
    auto provider = providers::make_chat_provider(*r.generate);
    const auto refine_cfg = refine::RefineConfig::defaults();
    const auto& docs = ws.sample.documents();
    std::atomic<std::size_t> made{0}, skipped{0};
    for_each_unit(docs.size(), config.workers, [&](std::size_t i) {
      const auto& d = docs[i];
      if (store.has_summary(d.id, r.name, 0)) {
        ++skipped;
        return;
      }
      try {
        const auto gen = refine::generate_summary(d, *provider, std::nullopt, refine_cfg);
        store.append(runstore::SummaryRecord{d.id, r.name, gen.text, utc_now_iso8601(), runstore::Provenance::Generated, 0});
        ++made;
      } catch (const Error& e) {
        failures.add(d.id + "/" + r.name, e);
      }
    });
    result.computed += made;
    result.skipped += skipped;
  }
  result.failures = std::move(failures.list);
  result.artifacts.push_back(config.run_dir / "summaries.jsonl");
  log << "run " << result.run_id << ": " << result.computed << " summaries stored, " << result.skipped << " already present\n";
  return result;
}

// --- evaluate ---------------------------------------------------------------

CommandResult cmd_evaluate(const RunConfig& config, std::ostream& log) {
  auto result = prepare_run(config, log);
  auto ws = open_workspace(config);
  auto& store = ws.store;
  result.computed = result.skipped = 0;

  std::vector<runstore::SummaryRecord> todo;
  for (const auto& s : store.summaries()) {
    if (!ws.sample.find(s.document_id)) continue;
    if (store.has_metric(s.document_id, s.model_name, s.round))
      ++result.skipped;
    else
      todo.push_back(s);
  }

  std::vector<lexmetrics::PairInput> pairs;
  for (const auto& s : todo)
    pairs.push_back({s.document_id + "/" + column(s.model_name, s.round), s.document_id, s.text,
                     ws.sample.find(s.document_id)->source_text()});

  std::optional<textproc::FamiliarWords> familiar_holder;
  lexmetrics::LexicalOptions options;
  options.familiar = familiar_for(config, familiar_holder);

  std::vector<std::optional<lexmetrics::MetricReport>> reports(pairs.size());
  Failures failures;
  try {
    auto batch = lexmetrics::score_batch(pairs, options);
    for (std::size_t i = 0; i < batch.size(); ++i) reports[i] = std::move(batch[i]);
  } catch (const Error&) {
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      try {
        reports[i] = lexmetrics::score_lexical(pairs[i], options);
      } catch (const Error& e) {
        failures.add(pairs[i].candidate_id, e);
      }
    }
  }

  std::unique_ptr<providers::EmbeddingProvider> embedder;
  std::unique_ptr<providers::NliProvider> nli;
  if (config.bertscore) embedder = providers::make_embedding_provider(*config.bertscore);
  if (config.summac) nli = providers::make_nli_provider(*config.summac);

  std::atomic<std::size_t> computed{0};
  for_each_unit(pairs.size(), config.workers, [&](std::size_t i) {
    if (!reports[i]) return;
    auto& report = *reports[i];
    const auto& s = todo[i];
    try {
      if (embedder)
        report.bertscore = modelmetrics::bertscore(textproc::tokenize(pairs[i].candidate_text),
                                                   textproc::tokenize(pairs[i].reference_text), *embedder);
      runstore::MetricRecord rec{s.document_id, s.model_name, s.round, report, std::nullopt};
      if (nli) {
        const auto consistency = modelmetrics::summac_zs(textproc::split_sentences(pairs[i].candidate_text),
                                                         textproc::split_sentences(pairs[i].reference_text), *nli);
        rec.report.summac = consistency.score;
        rec.summac_aggregation = consistency.aggregation;
      }
      store.append(rec);
      ++computed;
    } catch (const Error& e) {
      failures.add(pairs[i].candidate_id, e);
    }
  });
  result.computed = computed;
  result.failures.insert(result.failures.end(), failures.list.begin(), failures.list.end());
  result.artifacts = {config.run_dir / "metrics.jsonl"};
  log << "evaluate: " << result.computed << " computed, " << result.skipped << " already present, "
      << result.failures.size() << " failed\n";
  return result;
}

// --- judge ------------------------------------------------------------------

CommandResult cmd_judge(const RunConfig& config, std::ostream& log) {
  if (!config.judge) config_error("no judge provider configured");
  auto result = prepare_run(config, log);
  auto ws = open_workspace(config);
  auto& store = ws.store;
  result.computed = result.skipped = 0;
  auto provider = providers::make_chat_provider(*config.judge);
  const auto judge_id = provider->model_name();

  std::vector<runstore::SummaryRecord> todo;
  for (const auto& s : store.summaries()) {
    if (!ws.sample.find(s.document_id)) continue;
    runstore::RatingRecord key;
    key.document_id = s.document_id;
    key.model_name = s.model_name;
    key.round = s.round;
    key.evaluator_kind = runstore::EvaluatorKind::Llm;
    key.evaluator_id = judge_id;
    if (store.has_rating(key))
      ++result.skipped;
    else
      todo.push_back(s);
  }

  Failures failures;
  std::atomic<std::size_t> computed{0};
  for_each_unit(todo.size(), config.workers, [&](std::size_t i) {
    const auto& s = todo[i];
    try {
      const auto outcome = judge::judge_summary(*ws.sample.find(s.document_id), s, *provider, config.judge_retries);
      runstore::RatingRecord rec;
      rec.document_id = s.document_id;
      rec.model_name = s.model_name;
      rec.evaluator_id = outcome.scores.evaluator_id;
      rec.evaluator_kind = runstore::EvaluatorKind::Llm;
      rec.scores = outcome.scores;
      rec.round = s.round;
      store.append(rec);
      ++computed;
    } catch (const Error& e) {
      failures.add(s.document_id + "/" + column(s.model_name, s.round), e);
    }
  });
  result.computed = computed;
  result.failures.insert(result.failures.end(), failures.list.begin(), failures.list.end());
  result.artifacts = {config.run_dir / "ratings.jsonl"};
  log << "judge: " << result.computed << " rated, " << result.skipped << " already present, " << result.failures.size()
      << " failed\n";
  return result;
}

// --- refine -----------------------------------------------------------------

CommandResult cmd_refine(const RunConfig& config, std::ostream& log) {
  if (!config.refine) config_error("no refine section configured");
  if (!config.judge) config_error("refinement needs a judge provider");
  auto result = prepare_run(config, log);
  auto ws = open_workspace(config);
  auto& store = ws.store;
  result.computed = result.skipped = 0;

  const auto& settings = *config.refine;
  const auto& entry = *std::find_if(config.roster.begin(), config.roster.end(),
                                    [&](const RosterEntry& r) { return r.name == settings.model; });
  auto generator = providers::make_chat_provider(*entry.generate);
  auto judge_provider = providers::make_chat_provider(*config.judge);
  auto rc = refine::RefineConfig::defaults();
  rc.max_rounds = settings.max_rounds;
  rc.stop_on_perfect = settings.stop_on_perfect;
  rc.stop_on_fixed_point = settings.stop_on_fixed_point;
  rc.judge_retries = config.judge_retries;
  const std::string refined_name = settings.model + "-refine";

  const auto& docs = ws.sample.documents();
  Failures failures;
  std::atomic<std::size_t> computed{0}, skipped{0};
  for_each_unit(docs.size(), config.workers, [&](std::size_t i) {
    const auto& d = docs[i];
    if (store.has_transcript(d.id, generator->model_name())) {
      ++skipped;
      return;
    }
    try {
      auto t = refine::refine_loop(d, *generator, *judge_provider, rc);
      for (const auto& round : t.rounds) {
        const int r = round.index - 1;
        store.append(runstore::SummaryRecord{d.id, refined_name, round.summary_text, utc_now_iso8601(),
                                             runstore::Provenance::Generated, r});
        runstore::RatingRecord rec;
        rec.document_id = d.id;
        rec.model_name = refined_name;
        rec.evaluator_id = round.scores.evaluator_id;
        rec.evaluator_kind = runstore::EvaluatorKind::Llm;
        rec.scores = round.scores;
        rec.round = r;
        store.append(rec);
      }
      store.append(t);
      if (t.stop_reason == refine::StopReason::Aborted)
        failures.add(d.id, Error(ErrorCode::ProviderFailure, "refinement aborted: " + t.error.value_or("")));
      ++computed;
    } catch (const Error& e) {
      failures.add(d.id, e);
    }
  });
  result.computed = computed;
  result.skipped = skipped;
  result.failures.insert(result.failures.end(), failures.list.begin(), failures.list.end());
  result.artifacts = {config.run_dir / "transcripts.jsonl", config.run_dir / "summaries.jsonl",
                      config.run_dir / "ratings.jsonl"};
  log << "refine: " << result.computed << " transcripts, " << result.skipped << " already present, "
      << result.failures.size() << " failed\n";
  return result;
}

// --- analyze ----------------------------------------------------------------

Level level_from_string(std::string_view s) {
  if (s == "model") return Level::Model;
  if (s == "sample") return Level::Sample;
  throw Error(ErrorCode::InvalidArgument, "level must be model or sample, got '" + std::string(s) + "'");
}

std::string_view to_string(Level level) { return level == Level::Model ? "model" : "sample"; }

std::vector<stats::ScoreVector> run_vectors(const runstore::RunStore& store, Level level) {
  // label -> unit -> values to average
  std::map<std::string, std::map<std::string, std::vector<double>>> raw;
  std::vector<std::string> label_order;
  auto put = [&](const std::string& label, const std::string& unit, double v) {
    if (!raw.count(label)) label_order.push_back(label);
    raw[label][unit].push_back(v);
  };

  auto ratings = store.ratings();
  if (std::any_of(ratings.begin(), ratings.end(), [](const auto& r) { return r.is_gold_check; })) {
    const auto m = store.manifest();
    ratings = runstore::filter_reliable(ratings, m ? m->gold_threshold : 1.0);
  }
  std::set<std::string> judges;
  for (const auto& r : ratings)
    if (r.evaluator_kind == runstore::EvaluatorKind::Llm) judges.insert(r.evaluator_id);

  auto prefix_of = [&](const runstore::RatingRecord& r) -> std::string {
    if (r.evaluator_kind == runstore::EvaluatorKind::Human) return "human";
    return judges.size() == 1 ? "llm" : "llm[" + r.evaluator_id + "]";
  };
  // Per-document average over raters first.
  std::map<std::tuple<std::string, std::string, std::string>, std::vector<double>> per_doc;  // (label, doc, col)
  for (const auto& r : ratings) {
    if (r.is_gold_check) continue;
    for (auto d : judge::kDimensions) {
      const auto label = prefix_of(r) + "_" + std::string(judge::name(d));
      if (!raw.count(label)) {
        label_order.push_back(label);
        raw[label];
      }
      per_doc[{label, r.document_id, column(r.model_name, r.round)}].push_back(r.scores.get(d));
    }
  }
  for (const auto& [key, vals] : per_doc) {
    const auto& [label, doc, col] = key;
    double mean = 0;
    for (double v : vals) mean += v;
    mean /= static_cast<double>(vals.size());
    raw[label][level == Level::Model ? col : doc + "|" + col].push_back(mean);
  }

  for (const auto& m : store.metrics()) {
    const auto unit = level == Level::Model ? column(m.model_name, m.round)
                                            : m.document_id + "|" + column(m.model_name, m.round);
    const auto& r = m.report;
    put("rouge1", unit, r.rouge1.f1);
    put("rouge2", unit, r.rouge2.f1);
    put("rougeL", unit, r.rougeL.f1);
    put("bleu", unit, r.bleu);
    put("fre", unit, r.fre);
    put("dcr", unit, r.dcr);
    if (r.bertscore) put("bertscore", unit, r.bertscore->f1);
    if (r.summac) put("summac", unit, *r.summac);
  }

  // Keep units every non-empty vector covers, so cells are paired on the same set.
  std::optional<std::set<std::string>> common;
  for (const auto& label : label_order) {
    if (raw[label].empty()) continue;
    std::set<std::string> units;
    for (const auto& [u, _] : raw[label]) units.insert(u);
    if (!common) {
      common = units;
    } else {
      std::set<std::string> both;
      std::set_intersection(common->begin(), common->end(), units.begin(), units.end(), std::inserter(both, both.begin()));
      common = both;
    }
  }
  std::vector<stats::ScoreVector> out;
  if (!common) return out;
  for (const auto& label : label_order) {
    if (raw[label].empty()) continue;
    stats::ScoreVector v;
    v.label = label;
    for (const auto& u : *common) {
      const auto& vals = raw[label].at(u);
      double mean = 0;
      for (double x : vals) mean += x;
      v.unit_ids.push_back(u);
      v.values.push_back(mean / static_cast<double>(vals.size()));
    }
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<stats::ScoreVector> vectors_from_csv(std::string_view csv) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in{std::string(csv)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(std::move(cells));
  }
  if (rows.size() < 2) throw Error(ErrorCode::EmptyInput, "vector CSV needs a header and at least one row");
  const auto& header = rows.front();
  if (header.size() < 2) throw Error(ErrorCode::MalformedRecord, "vector CSV needs a unit column and a value column", 1);
  std::vector<stats::ScoreVector> out(header.size() - 1);
  for (std::size_t c = 1; c < header.size(); ++c) out[c - 1].label = header[c];
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != header.size())
      throw Error(ErrorCode::MalformedRecord, "expected " + std::to_string(header.size()) + " cells", r + 1);
    for (std::size_t c = 1; c < header.size(); ++c) {
      try {
        std::size_t used = 0;
        const double v = std::stod(rows[r][c], &used);
        if (used != rows[r][c].size()) throw std::invalid_argument(rows[r][c]);
        out[c - 1].values.push_back(v);
        out[c - 1].unit_ids.push_back(rows[r][0]);
      } catch (const std::logic_error&) {
        throw Error(ErrorCode::MalformedRecord, "not a number: '" + rows[r][c] + "'", r + 1);
      }
    }
  }
  return out;
}

AnalyzeResult cmd_analyze(const fs::path& run_dir, stats::Method method, Level level,
                          const std::optional<fs::path>& vectors_csv, std::ostream& out) {
  auto store = runstore::RunStore::open_directory(run_dir);
  std::vector<stats::ScoreVector> vectors;
  std::string analysis;
  if (vectors_csv) {
    vectors = vectors_from_csv(read_file(*vectors_csv));
    analysis = "fixture:" + vectors_csv->stem().string();
  } else {
    vectors = run_vectors(store, level);
    if (vectors.size() < 2) throw Error(ErrorCode::EmptyRun, "run " + store.run_id() + " has fewer than two score vectors");
    json fingerprint = json::array();
    for (const auto& v : vectors) fingerprint.push_back({v.label, v.unit_ids, v.values});
    analysis = "run@" + sha256_hex(fingerprint.dump()).substr(0, 8);
  }
  AnalyzeResult result;
  result.matrix = stats::correlation_matrix(vectors, method);
  result.command.run_id = store.run_id();
  store.append(runstore::CorrelationRecord{analysis, std::string(to_string(level)), result.matrix});
  result.command.computed = 1;

  std::string stem = "correlations_" + analysis + "_" + std::string(stats::to_string(method)) + "_" + std::string(to_string(level));
  std::replace(stem.begin(), stem.end(), ':', '-');
  std::replace(stem.begin(), stem.end(), '@', '-');
  const auto csv_path = run_dir / (stem + ".csv");
  write_file(csv_path, result.matrix.to_csv());
  result.command.artifacts = {csv_path, run_dir / "correlations.jsonl"};
  out << "Correlations '" << analysis << "' (" << stats::to_string(method) << ", level " << to_string(level) << ", n = "
      << (vectors.empty() ? 0 : vectors.front().values.size()) << ")\n"
      << result.matrix.to_text() << "\n";
  return result;
}

// --- report -----------------------------------------------------------------

CommandResult cmd_report(const fs::path& run_dir, std::optional<runstore::TableKind> kind, std::ostream& out) {
  if (!fs::exists(run_dir)) throw Error(ErrorCode::EmptyRun, "run directory " + run_dir.string() + " does not exist");
  auto store = runstore::RunStore::open_directory(run_dir);
  CommandResult result;
  result.run_id = store.run_id();
  std::vector<runstore::TableKind> kinds;
  if (kind)
    kinds = {*kind};
  else
    kinds = {runstore::TableKind::Metrics, runstore::TableKind::Judgments, runstore::TableKind::Correlations};
  for (auto k : kinds) {
    runstore::RenderedTable table;
    try {
      table = runstore::render_table(store, k);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::EmptyRun && !kind) {
        ++result.skipped;
        continue;
      }
      throw;
    }
    const std::string name = "report_" + std::string(runstore::to_string(k));
    write_file(run_dir / (name + ".txt"), table.text);
    write_file(run_dir / (name + ".csv"), table.csv);
    result.artifacts.push_back(run_dir / (name + ".txt"));
    result.artifacts.push_back(run_dir / (name + ".csv"));
    out << table.text << "\n";
    ++result.computed;
  }
  if (result.computed == 0) throw Error(ErrorCode::EmptyRun, "run " + result.run_id + " has nothing to report");
  return result;
}

// --- ratings / serve ----------------------------------------------------------

CommandResult cmd_ingest_ratings(const fs::path& run_dir, const fs::path& csv, std::ostream& log) {
  auto store = runstore::RunStore::open_directory(run_dir);
  const auto ratings = runstore::ratings_from_csv(read_file(csv));
  CommandResult result;
  result.run_id = store.run_id();
  for (const auto& r : ratings) {
    if (store.has_rating(r)) {
      store.append(r);  // raises DuplicateKey when the stored rating differs
      ++result.skipped;
    } else {
      store.append(r);
      ++result.computed;
    }
  }
  result.artifacts = {run_dir / "ratings.jsonl"};
  log << "ingest-ratings: " << result.computed << " stored, " << result.skipped << " already present\n";
  return result;
}

void cmd_serve(const RunConfig& config, std::ostream& log) {
  prepare_run(config, log);
  auto ws = open_workspace(config);
  std::vector<service::GoldItem> golds;
  if (config.service.gold_items) golds = service::load_gold_items(*config.service.gold_items);
  service::ServiceConfig sc;
  sc.gold_rate = config.service.gold_rate;
  sc.redundancy = config.service.redundancy;
  sc.gold_tolerance = config.service.gold_tolerance;
  sc.seed = config.sample.seed;
  service::AnnotationService svc(ws.store, service::tasks_from_run(ws.store, ws.sample), std::move(golds), sc);
  log << "serving run " << ws.store.run_id() << " on http://" << config.service.host << ":" << config.service.port << "\n";
  log.flush();
  service::serve(svc, config.service.host, config.service.port);
}

// --- entry point ------------------------------------------------------------

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidArgument:
    case ErrorCode::IoError:
    case ErrorCode::MissingField:
    case ErrorCode::DuplicateId:
    case ErrorCode::EmptyText:
    case ErrorCode::MalformedRecord:
    case ErrorCode::SampleTooLarge:
    case ErrorCode::ValidationFailed:
    case ErrorCode::EmptyInput: return 2;
    case ErrorCode::AuthFailure:
    case ErrorCode::RateLimited:
    case ErrorCode::Timeout:
    case ErrorCode::MalformedProviderResponse:
    case ErrorCode::ProviderFailure:
    case ErrorCode::JudgeUnparseable:
    case ErrorCode::EmptyCompletion: return 3;
    case ErrorCode::StorageFailure:
    case ErrorCode::DuplicateKey: return 4;
    case ErrorCode::EmptyRun: return 5;
    default: return 1;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Patent summary evaluation toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  std::string config_path, corpus_path, run_dir, familiar, method = "kendall", level = "model", vectors, kind, csv;
  std::optional<std::size_t> sample_size;
  std::optional<std::uint64_t> seed;
  std::optional<int> max_rounds;

  auto add_config_opts = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Run configuration (JSON)");
    sub->add_option("--corpus", corpus_path, "Corpus file, one JSON document per line");
    sub->add_option("--sample-size", sample_size, "Documents to sample");
    sub->add_option("--seed", seed, "Sampling seed");
    sub->add_option("--run-dir", run_dir, "Run directory");
    sub->add_option("--familiar-words", familiar, "Familiar-word list for DCR");
  };
  auto* evaluate = app.add_subcommand("evaluate", "Store summaries and compute metrics");
  add_config_opts(evaluate);
  auto* judge_cmd = app.add_subcommand("judge", "Rate summaries with the LLM judge");
  add_config_opts(judge_cmd);
  auto* refine_cmd = app.add_subcommand("refine", "Run the feedback refinement loop");
  add_config_opts(refine_cmd);
  refine_cmd->add_option("--max-rounds", max_rounds, "Refinement rounds (1 = no feedback)");
  auto* serve_cmd = app.add_subcommand("serve", "Serve rating tasks over HTTP");
  add_config_opts(serve_cmd);

  auto* analyze = app.add_subcommand("analyze", "Correlate evaluators and metrics");
  analyze->add_option("--run-dir", run_dir, "Run directory")->required();
  analyze->add_option("--method", method, "pearson | spearman | kendall")
      ->check(CLI::IsMember({"pearson", "spearman", "kendall"}));
  analyze->add_option("--level", level, "model | sample")->check(CLI::IsMember({"model", "sample"}));
  analyze->add_option("--vectors", vectors, "Wide CSV of score vectors instead of run data")->check(CLI::ExistingFile);

  auto* report = app.add_subcommand("report", "Render metric, judgment and correlation tables");
  report->add_option("--run-dir", run_dir, "Run directory")->required();
  report->add_option("--kind", kind, "metrics | judgments | correlations")
      ->check(CLI::IsMember({"metrics", "judgments", "correlations"}));

  auto* ingest = app.add_subcommand("ingest-ratings", "Load human ratings from CSV");
  ingest->add_option("--run-dir", run_dir, "Run directory")->required();
  ingest->add_option("csv", csv, "Ratings CSV")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  auto build_config = [&] {
    RunConfig c = config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
    if (!corpus_path.empty()) c.corpus = corpus_path;
    if (!run_dir.empty()) c.run_dir = run_dir;
    if (!familiar.empty()) c.familiar_words = fs::path(familiar);
    if (sample_size) c.sample.size = *sample_size;
    if (seed) c.sample.seed = *seed;
    if (max_rounds && c.refine) c.refine->max_rounds = *max_rounds;
    return c;
  };
  auto finish = [&](const CommandResult& r) {
    for (const auto& a : r.artifacts) out << "wrote " << a.string() << "\n";
    for (const auto& f : r.failures) err << "failed: " << f << "\n";
    return r.complete() ? 0 : kExitPartial;
  };

  try {
    if (*evaluate) return finish(cmd_evaluate(build_config(), err));
    if (*judge_cmd) return finish(cmd_judge(build_config(), err));
    if (*refine_cmd) return finish(cmd_refine(build_config(), err));
    if (*serve_cmd) {
      cmd_serve(build_config(), err);
      return 0;
    }
    if (*analyze) {
      std::optional<fs::path> v;
      if (!vectors.empty()) v = vectors;
      return finish(cmd_analyze(run_dir, stats::method_from_string(method), level_from_string(level), v, out).command);
    }
    if (*report) {
      std::optional<runstore::TableKind> k;
      if (!kind.empty()) k = runstore::table_kind_from_string(kind);
      return finish(cmd_report(run_dir, k, out));
    }
    if (*ingest) return finish(cmd_ingest_ratings(run_dir, csv, err));
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace sumeval::cli
