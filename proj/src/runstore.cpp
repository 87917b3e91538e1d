#include "sumeval/runstore.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "sumeval/errors.hpp"
#include "sumeval/hashing.hpp"

namespace sumeval::runstore {

using nlohmann::json;

std::string_view to_string(EvaluatorKind kind) { return kind == EvaluatorKind::Human ? "human" : "llm"; }

EvaluatorKind evaluator_kind_from_string(std::string_view s) {
  if (s == "human") return EvaluatorKind::Human;
  if (s == "llm") return EvaluatorKind::Llm;
  throw Error(ErrorCode::ValidationFailed, "evaluator_kind must be human or llm, got '" + std::string(s) + "'");
}

std::string_view to_string(Provenance p) { return p == Provenance::Generated ? "generated" : "ingested"; }

namespace {

template <class T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <class T>
std::optional<T> opt_from(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

json prf(const lexmetrics::PrfScore& s) { return {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}}; }

lexmetrics::PrfScore prf_from(const json& j) {
  return {j.at("precision").get<double>(), j.at("recall").get<double>(), j.at("f1").get<double>()};
}

json scores_json(const judge::JudgeScores& s) {
  return {{"clarity", s.clarity},   {"accuracy", s.accuracy},         {"coverage", s.coverage},
          {"overall", s.overall},   {"evaluator_id", s.evaluator_id}, {"rationale", opt(s.rationale)}};
}

judge::JudgeScores scores_from(const json& j) {
  judge::JudgeScores s;
  s.clarity = j.at("clarity").get<int>();
  s.accuracy = j.at("accuracy").get<int>();
  s.coverage = j.at("coverage").get<int>();
  s.overall = j.at("overall").get<int>();
  s.evaluator_id = j.at("evaluator_id").get<std::string>();
  s.rationale = opt_from<std::string>(j, "rationale");
  return s;
}

void fail(const std::string& msg) { throw Error(ErrorCode::ValidationFailed, msg); }

void check_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) fail(std::string(what) + " outside [0,1]");
}

void check_prf(const lexmetrics::PrfScore& s, const char* what) {
  check_unit(s.precision, what);
  check_unit(s.recall, what);
  check_unit(s.f1, what);
}

}  // namespace

// --- JSON -------------------------------------------------------------------

json to_json(const SummaryRecord& r) {
  return {{"document_id", r.document_id}, {"model_name", r.model_name}, {"text", r.text},
          {"created_at", r.created_at},   {"provenance", std::string(to_string(r.provenance))},
          {"round", r.round}};
}

SummaryRecord summary_from_json(const json& j) {
  SummaryRecord r;
  r.document_id = j.at("document_id").get<std::string>();
  r.model_name = j.at("model_name").get<std::string>();
  r.text = j.at("text").get<std::string>();
  r.created_at = j.at("created_at").get<std::string>();
  const auto p = j.at("provenance").get<std::string>();
  if (p != "generated" && p != "ingested") fail("unknown provenance '" + p + "'");
  r.provenance = p == "generated" ? Provenance::Generated : Provenance::Ingested;
  r.round = j.at("round").get<int>();
  return r;
}

json to_json(const MetricRecord& r) {
  const auto& m = r.report;
  json report = {{"candidate_id", m.candidate_id},
                 {"reference_id", m.reference_id},
                 {"reference_kind", m.reference_kind},
                 {"rouge1", prf(m.rouge1)},
                 {"rouge2", prf(m.rouge2)},
                 {"rougeL", prf(m.rougeL)},
                 {"bleu", m.bleu},
                 {"fre", m.fre},
                 {"dcr", m.dcr},
                 {"bertscore", m.bertscore ? prf(*m.bertscore) : json(nullptr)},
                 {"summac", opt(m.summac)}};
  return {{"document_id", r.document_id}, {"model_name", r.model_name}, {"round", r.round},
          {"report", report},             {"summac_aggregation", opt(r.summac_aggregation)}};
}

MetricRecord metric_from_json(const json& j) {
  MetricRecord r;
  r.document_id = j.at("document_id").get<std::string>();
  r.model_name = j.at("model_name").get<std::string>();
  r.round = j.at("round").get<int>();
  r.summac_aggregation = opt_from<std::string>(j, "summac_aggregation");
  const auto& m = j.at("report");
  auto& o = r.report;
  o.candidate_id = m.at("candidate_id").get<std::string>();
  o.reference_id = m.at("reference_id").get<std::string>();
  o.reference_kind = m.at("reference_kind").get<std::string>();
  o.rouge1 = prf_from(m.at("rouge1"));
  o.rouge2 = prf_from(m.at("rouge2"));
  o.rougeL = prf_from(m.at("rougeL"));
  o.bleu = m.at("bleu").get<double>();
  o.fre = m.at("fre").get<double>();
  o.dcr = m.at("dcr").get<double>();
  if (!m.at("bertscore").is_null()) o.bertscore = prf_from(m.at("bertscore"));
  o.summac = opt_from<double>(m, "summac");
  return r;
}

json to_json(const RatingRecord& r) {
  return {{"document_id", r.document_id},
          {"model_name", r.model_name},
          {"evaluator_id", r.evaluator_id},
          {"evaluator_kind", std::string(to_string(r.evaluator_kind))},
          {"scores", scores_json(r.scores)},
          {"is_gold_check", r.is_gold_check},
          {"passed_gold", opt(r.passed_gold)},
          {"session_id", opt(r.session_id)},
          {"round", r.round}};
}

RatingRecord rating_from_json(const json& j) {
  RatingRecord r;
  r.document_id = j.at("document_id").get<std::string>();
  r.model_name = j.at("model_name").get<std::string>();
  r.evaluator_id = j.at("evaluator_id").get<std::string>();
  r.evaluator_kind = evaluator_kind_from_string(j.at("evaluator_kind").get<std::string>());
  r.scores = scores_from(j.at("scores"));
  r.is_gold_check = j.at("is_gold_check").get<bool>();
  r.passed_gold = opt_from<bool>(j, "passed_gold");
  r.session_id = opt_from<std::string>(j, "session_id");
  r.round = j.at("round").get<int>();
  return r;
}

json to_json(const stats::CorrelationMatrix& m) {
  json cells = json::array();
  for (const auto& row : m.cells) {
    json jr = json::array();
    for (const auto& c : row) {
      if (c.result)
        jr.push_back({{"coefficient", c.result->coefficient},
                      {"p_value", c.result->p_value},
                      {"n", c.result->n},
                      {"stars", c.result->stars}});
      else
        jr.push_back({{"error", c.error ? std::string(to_string(*c.error)) : ""}, {"message", c.message}});
    }
    cells.push_back(jr);
  }
  return {{"method", std::string(stats::to_string(m.method))}, {"labels", m.labels}, {"cells", cells}};
}

namespace {

ErrorCode error_code_from_string(const std::string& s) {
  for (auto c : {ErrorCode::ConstantVector, ErrorCode::Misaligned, ErrorCode::TooFewSamples, ErrorCode::InvalidArgument})
    if (to_string(c) == s) return c;
  return ErrorCode::InvalidArgument;
}

}  // namespace

stats::CorrelationMatrix matrix_from_json(const json& j) {
  stats::CorrelationMatrix m;
  m.method = stats::method_from_string(j.at("method").get<std::string>());
  m.labels = j.at("labels").get<std::vector<std::string>>();
  for (const auto& jr : j.at("cells")) {
    auto& row = m.cells.emplace_back();
    for (const auto& jc : jr) {
      stats::MatrixCell c;
      if (jc.contains("coefficient")) {
        stats::CorrelationResult r;
        r.coefficient = jc.at("coefficient").get<double>();
        r.p_value = jc.at("p_value").get<double>();
        r.n = jc.at("n").get<std::size_t>();
        r.stars = jc.at("stars").get<std::string>();
        r.method = m.method;
        c.result = r;
      } else {
        c.error = error_code_from_string(jc.at("error").get<std::string>());
        c.message = jc.value("message", "");
      }
      row.push_back(std::move(c));
    }
  }
  return m;
}

json RunManifest::to_json() const {
  return {{"run_id", run_id},
          {"created_at", created_at},
          {"corpus_uri", corpus_uri},
          {"corpus_hash", corpus_hash},
          {"sample", {{"size", sample_size}, {"seed", seed}}},
          {"roster", roster},
          {"providers", providers},
          {"module_versions", module_versions},
          {"gold_threshold", gold_threshold}};
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  m.run_id = j.at("run_id").get<std::string>();
  m.created_at = j.value("created_at", "");
  m.corpus_uri = j.value("corpus_uri", "");
  m.corpus_hash = j.value("corpus_hash", "");
  if (auto s = j.find("sample"); s != j.end()) {
    m.sample_size = s->value("size", std::size_t{0});
    m.seed = s->value("seed", std::uint64_t{0});
  }
  m.roster = j.value("roster", std::vector<std::string>{});
  m.providers = j.value("providers", json::object());
  m.module_versions = j.value("module_versions", json::object());
  m.gold_threshold = j.value("gold_threshold", 1.0);
  return m;
}

// --- validation -------------------------------------------------------------

void validate(const SummaryRecord& r) {
  if (r.document_id.empty()) fail("summary without document_id");
  if (r.model_name.empty()) fail("summary without model_name");
  if (r.text.find_first_not_of(" \t\r\n") == std::string::npos) fail("summary text is empty");
  if (r.round < 0) fail("summary round is negative");
}

void validate(const MetricRecord& r) {
  if (r.document_id.empty() || r.model_name.empty()) fail("metric record without document_id/model_name");
  if (r.round < 0) fail("metric round is negative");
  const auto& m = r.report;
  check_prf(m.rouge1, "rouge1");
  check_prf(m.rouge2, "rouge2");
  check_prf(m.rougeL, "rougeL");
  check_unit(m.bleu, "bleu");
  if (!std::isfinite(m.fre) || !std::isfinite(m.dcr)) fail("readability score is not finite");
  if (m.dcr < 0) fail("dcr is negative");
  if (m.summac) check_unit(*m.summac, "summac");
  if (m.bertscore && !(std::isfinite(m.bertscore->f1))) fail("bertscore is not finite");
}

void validate(const RatingRecord& r) {
  if (r.document_id.empty() || r.model_name.empty() || r.evaluator_id.empty())
    fail("rating without document_id/model_name/evaluator_id");
  try {
    r.scores.validate();
  } catch (const Error& e) {
    fail(e.what());
  }
  if (r.is_gold_check != r.passed_gold.has_value()) fail("passed_gold must be set exactly for gold checks");
  if (r.evaluator_kind == EvaluatorKind::Human && (!r.session_id || r.session_id->empty()))
    fail("human rating without session_id");
  if (r.round < 0) fail("rating round is negative");
}

// --- storage ----------------------------------------------------------------

DirectoryStorage::DirectoryStorage(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw Error(ErrorCode::StorageFailure, "cannot create run directory " + dir_.string() + ": " + ec.message());
}

std::vector<std::string> DirectoryStorage::read_lines(const std::string& stream) const {
  std::vector<std::string> lines;
  std::ifstream in(dir_ / (stream + ".jsonl"), std::ios::binary);
  if (!in) return lines;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) lines.push_back(line);
  return lines;
}

void DirectoryStorage::append_line(const std::string& stream, const std::string& line) {
  std::ofstream out(dir_ / (stream + ".jsonl"), std::ios::binary | std::ios::app);
  out << line << '\n';
  out.flush();
  if (!out) throw Error(ErrorCode::StorageFailure, "cannot append to " + stream);
}

std::optional<std::string> DirectoryStorage::read_blob(const std::string& name) const {
  std::ifstream in(dir_ / name, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void DirectoryStorage::write_blob(const std::string& name, const std::string& content) {
  const auto tmp = dir_ / (name + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw Error(ErrorCode::StorageFailure, "cannot write " + name);
  }
  std::filesystem::rename(tmp, dir_ / name);
}

std::vector<std::string> MemoryStorage::read_lines(const std::string& stream) const {
  std::lock_guard lock(mu_);
  auto it = streams_.find(stream);
  return it == streams_.end() ? std::vector<std::string>{} : it->second;
}

void MemoryStorage::append_line(const std::string& stream, const std::string& line) {
  std::lock_guard lock(mu_);
  streams_[stream].push_back(line);
}

std::optional<std::string> MemoryStorage::read_blob(const std::string& name) const {
  std::lock_guard lock(mu_);
  auto it = blobs_.find(name);
  if (it == blobs_.end()) return std::nullopt;
  return it->second;
}

void MemoryStorage::write_blob(const std::string& name, const std::string& content) {
  std::lock_guard lock(mu_);
  blobs_[name] = content;
}

// --- RunStore ---------------------------------------------------------------

namespace {

constexpr const char* kSummaries = "summaries";
constexpr const char* kMetrics = "metrics";
constexpr const char* kRatings = "ratings";
constexpr const char* kTranscripts = "transcripts";
constexpr const char* kCorrelations = "correlations";
constexpr char kSep = '\x1f';

std::string join_key(std::initializer_list<std::string_view> parts) {
  std::string k;
  for (auto p : parts) {
    if (!k.empty()) k.push_back(kSep);
    k.append(p);
  }
  return k;
}

}  // namespace

RunStore::RunStore(std::shared_ptr<Storage> storage, std::string run_id)
    : storage_(std::move(storage)), run_id_(std::move(run_id)) {
  if (run_id_.empty()) throw Error(ErrorCode::ValidationFailed, "run id is empty");
}

RunStore RunStore::open_directory(const std::filesystem::path& dir) {
  auto storage = std::make_shared<DirectoryStorage>(dir);
  std::string run_id = std::filesystem::absolute(dir).lexically_normal().filename().string();
  if (run_id.empty()) run_id = std::filesystem::absolute(dir).lexically_normal().parent_path().filename().string();
  if (auto blob = storage->read_blob("manifest.json")) {
    try {
      run_id = RunManifest::from_json(json::parse(*blob)).run_id;
    } catch (const json::exception& e) {
      throw Error(ErrorCode::StorageFailure, std::string("corrupt manifest.json: ") + e.what());
    }
  }
  return RunStore(storage, run_id);
}

std::optional<RunManifest> RunStore::manifest() const {
  auto blob = storage_->read_blob("manifest.json");
  if (!blob) return std::nullopt;
  return RunManifest::from_json(json::parse(*blob));
}

void RunStore::write_manifest(const RunManifest& manifest) {
  if (manifest.run_id != run_id_) throw Error(ErrorCode::ValidationFailed, "manifest run_id does not match the store");
  storage_->write_blob("manifest.json", manifest.to_json().dump(2) + "\n");
}

std::string RunStore::natural_key(const SummaryRecord& r) {
  return join_key({r.document_id, r.model_name, std::to_string(r.round)});
}
std::string RunStore::natural_key(const MetricRecord& r) {
  return join_key({r.document_id, r.model_name, std::to_string(r.round)});
}
std::string RunStore::natural_key(const RatingRecord& r) {
  return join_key({r.document_id, r.model_name, std::to_string(r.round), to_string(r.evaluator_kind), r.evaluator_id,
                   r.session_id.value_or("")});
}
std::string RunStore::natural_key(const refine::RefinementTranscript& t) {
  return join_key({t.document_id, t.generator_model});
}
std::string RunStore::natural_key(const CorrelationRecord& r) {
  return join_key({r.analysis, stats::to_string(r.matrix.method), r.level});
}

void RunStore::load_index(const std::string& stream) const {
  if (index_.count(stream)) return;
  auto& idx = index_[stream];
  for (const auto& line : storage_->read_lines(stream)) {
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::StorageFailure, stream + ": unreadable line: " + e.what());
    }
    const auto id = j.at("id").get<std::string>();
    const auto key = j.at("key").get<std::string>();
    idx.emplace(key, std::make_pair(id, j.at("record").dump()));
  }
}

std::string RunStore::append_json(const std::string& stream, const std::string& key, json body) {
  std::lock_guard lock(mu_);
  load_index(stream);
  auto& idx = index_[stream];
  const std::string canonical = body.dump();
  if (auto it = idx.find(key); it != idx.end()) {
    if (it->second.second == canonical) return it->second.first;
    throw Error(ErrorCode::DuplicateKey, stream + " already holds a different record for this key");
  }
  const std::string id = std::string(stream.substr(0, 3)) + "-" + sha256_hex(run_id_ + kSep + key).substr(0, 16);
  json line = {{"id", id}, {"run_id", run_id_}, {"key", key}, {"record", std::move(body)}};
  storage_->append_line(stream, line.dump());
  idx.emplace(key, std::make_pair(id, canonical));
  return id;
}

std::string RunStore::append(const SummaryRecord& r) {
  validate(r);
  return append_json(kSummaries, natural_key(r), to_json(r));
}
std::string RunStore::append(const MetricRecord& r) {
  validate(r);
  return append_json(kMetrics, natural_key(r), to_json(r));
}
std::string RunStore::append(const RatingRecord& r) {
  validate(r);
  return append_json(kRatings, natural_key(r), to_json(r));
}
std::string RunStore::append(const refine::RefinementTranscript& t) {
  if (t.rounds.empty()) throw Error(ErrorCode::ValidationFailed, "transcript without rounds");
  return append_json(kTranscripts, natural_key(t), t.to_json());
}
std::string RunStore::append(const CorrelationRecord& r) {
  json body = {{"analysis", r.analysis}, {"level", r.level}, {"matrix", to_json(r.matrix)}};
  return append_json(kCorrelations, natural_key(r), std::move(body));
}

std::vector<json> RunStore::bodies(const std::string& stream) const {
  std::vector<json> out;
  for (const auto& line : storage_->read_lines(stream)) {
    auto j = json::parse(line);
    if (j.at("run_id").get<std::string>() != run_id_)
      throw Error(ErrorCode::StorageFailure, stream + " holds a record of run " + j.at("run_id").get<std::string>());
    out.push_back(std::move(j.at("record")));
  }
  return out;
}

std::vector<SummaryRecord> RunStore::summaries() const {
  std::vector<SummaryRecord> out;
  for (const auto& j : bodies(kSummaries)) out.push_back(summary_from_json(j));
  return out;
}
std::vector<MetricRecord> RunStore::metrics() const {
  std::vector<MetricRecord> out;
  for (const auto& j : bodies(kMetrics)) out.push_back(metric_from_json(j));
  return out;
}
std::vector<RatingRecord> RunStore::ratings() const {
  std::vector<RatingRecord> out;
  for (const auto& j : bodies(kRatings)) out.push_back(rating_from_json(j));
  return out;
}
std::vector<refine::RefinementTranscript> RunStore::transcripts() const {
  std::vector<refine::RefinementTranscript> out;
  for (const auto& j : bodies(kTranscripts)) out.push_back(refine::RefinementTranscript::from_json(j));
  return out;
}
std::vector<CorrelationRecord> RunStore::correlations() const {
  std::vector<CorrelationRecord> out;
  for (const auto& j : bodies(kCorrelations))
    out.push_back({j.at("analysis").get<std::string>(), j.at("level").get<std::string>(), matrix_from_json(j.at("matrix"))});
  return out;
}

bool RunStore::has_key(const std::string& stream, const std::string& key) const {
  std::lock_guard lock(mu_);
  load_index(stream);
  return index_[stream].count(key) > 0;
}

bool RunStore::has_summary(std::string_view document_id, std::string_view model, int round) const {
  return has_key(kSummaries, join_key({document_id, model, std::to_string(round)}));
}
bool RunStore::has_metric(std::string_view document_id, std::string_view model, int round) const {
  return has_key(kMetrics, join_key({document_id, model, std::to_string(round)}));
}
bool RunStore::has_rating(const RatingRecord& r) const { return has_key(kRatings, natural_key(r)); }
bool RunStore::has_transcript(std::string_view document_id, std::string_view generator_model) const {
  return has_key(kTranscripts, join_key({document_id, generator_model}));
}

std::vector<std::string> RunStore::raw_lines(const std::string& stream) const { return storage_->read_lines(stream); }

// --- gold filtering -----------------------------------------------------------

std::vector<RatingRecord> filter_reliable(const std::vector<RatingRecord>& ratings, double gold_threshold) {
  std::map<std::string, std::pair<int, int>> sessions;  // session -> (passed, golds)
  for (const auto& r : ratings) {
    if (r.evaluator_kind != EvaluatorKind::Human) continue;
    auto& s = sessions[r.session_id.value_or(r.evaluator_id)];
    if (r.is_gold_check) {
      ++s.second;
      if (r.passed_gold.value_or(false)) ++s.first;
    }
  }
  std::set<std::string> kept;
  for (const auto& [session, counts] : sessions) {
    if (counts.second == 0) throw Error(ErrorCode::NoGoldChecks, session);
    if (static_cast<double>(counts.first) / static_cast<double>(counts.second) >= gold_threshold) kept.insert(session);
  }
  std::vector<RatingRecord> out;
  for (const auto& r : ratings)
    if (r.evaluator_kind != EvaluatorKind::Human || kept.count(r.session_id.value_or(r.evaluator_id))) out.push_back(r);
  return out;
}

// --- CSV --------------------------------------------------------------------

namespace {

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field.push_back(c);
      any = true;
    }
  }
  if (quoted) throw Error(ErrorCode::MalformedRecord, "unterminated quote in CSV");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

bool parse_bool(const std::string& s, std::size_t line) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no" || s.empty()) return false;
  throw Error(ErrorCode::MalformedRecord, "not a boolean: '" + s + "'", line);
}

}  // namespace

std::vector<RatingRecord> ratings_from_csv(std::string_view csv) {
  const auto rows = parse_csv(csv);
  if (rows.empty()) return {};
  const auto& header = rows.front();
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* required : {"document_id", "model_name", "evaluator_id", "clarity", "accuracy", "coverage", "overall"})
    if (!col.count(required))
      throw Error(ErrorCode::MalformedRecord, std::string("CSV lacks column ") + required, 1, ErrorCode::MissingField);

  std::vector<RatingRecord> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::size_t line = r + 1;
    auto get = [&](const std::string& name) -> std::optional<std::string> {
      auto it = col.find(name);
      if (it == col.end() || it->second >= row.size()) return std::nullopt;
      return row[it->second];
    };
    auto req = [&](const std::string& name) {
      auto v = get(name);
      if (!v) throw Error(ErrorCode::MalformedRecord, "missing " + name, line, ErrorCode::MissingField);
      return *v;
    };
    auto score = [&](const std::string& name) {
      const auto v = req(name);
      try {
        std::size_t used = 0;
        const int s = std::stoi(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return s;
      } catch (const std::logic_error&) {
        throw Error(ErrorCode::MalformedRecord, name + " is not an integer: '" + v + "'", line);
      }
    };
    RatingRecord rec;
    rec.document_id = req("document_id");
    rec.model_name = req("model_name");
    rec.evaluator_id = req("evaluator_id");
    rec.scores.clarity = score("clarity");
    rec.scores.accuracy = score("accuracy");
    rec.scores.coverage = score("coverage");
    rec.scores.overall = score("overall");
    rec.scores.evaluator_id = rec.evaluator_id;
    if (auto k = get("evaluator_kind"); k && !k->empty()) rec.evaluator_kind = evaluator_kind_from_string(*k);
    if (auto s = get("session_id"); s && !s->empty()) rec.session_id = *s;
    else if (rec.evaluator_kind == EvaluatorKind::Human) rec.session_id = rec.evaluator_id;
    if (auto g = get("is_gold_check")) rec.is_gold_check = parse_bool(*g, line);
    if (auto p = get("passed_gold"); p && !p->empty()) rec.passed_gold = parse_bool(*p, line);
    if (auto rd = get("round"); rd && !rd->empty()) rec.round = std::stoi(*rd);
    try {
      validate(rec);
    } catch (const Error& e) {
      throw Error(ErrorCode::ValidationFailed, e.what(), line);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::string ratings_to_csv(const std::vector<RatingRecord>& ratings) {
  std::ostringstream out;
  out << "document_id,model_name,evaluator_id,clarity,accuracy,coverage,overall,evaluator_kind,session_id,"
         "is_gold_check,passed_gold,round\n";
  for (const auto& r : ratings) {
    out << csv_field(r.document_id) << ',' << csv_field(r.model_name) << ',' << csv_field(r.evaluator_id) << ','
        << r.scores.clarity << ',' << r.scores.accuracy << ',' << r.scores.coverage << ',' << r.scores.overall << ','
        << to_string(r.evaluator_kind) << ',' << csv_field(r.session_id.value_or("")) << ','
        << (r.is_gold_check ? "true" : "false") << ','
        << (r.passed_gold ? (*r.passed_gold ? "true" : "false") : "") << ',' << r.round << '\n';
  }
  return out.str();
}

// --- reports ----------------------------------------------------------------

TableKind table_kind_from_string(std::string_view s) {
  if (s == "metrics") return TableKind::Metrics;
  if (s == "judgments") return TableKind::Judgments;
  if (s == "correlations") return TableKind::Correlations;
  throw Error(ErrorCode::InvalidArgument, "unknown table kind '" + std::string(s) + "'");
}

std::string_view to_string(TableKind k) {
  switch (k) {
    case TableKind::Metrics: return "metrics";
    case TableKind::Judgments: return "judgments";
    case TableKind::Correlations: return "correlations";
  }
  return "";
}

namespace {

const std::vector<std::vector<std::string>>& reference_roster() {
  static const std::vector<std::vector<std::string>> roster = {
      {"hupd_t5_small", "hts"}, {"hupd_t5_base", "htb"}, {"xlnet", "x"},          {"bart", "b"},
      {"bigbird", "bb"},        {"pegasus", "p"},        {"longt5", "lt5"},       {"gpt-3.5", "gpt", "gpt-3.5-turbo"},
      {"llama-3", "ll", "llama3", "llama-3-8b"}};
  return roster;
}

std::string lowercase(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::size_t reference_rank(const std::string& model) {
  const auto m = lowercase(model);
  const auto& roster = reference_roster();
  for (std::size_t i = 0; i < roster.size(); ++i)
    if (std::find(roster[i].begin(), roster[i].end(), m) != roster[i].end()) return i;
  return roster.size();
}

std::string column_name(const std::string& model, int round) {
  return round == 0 ? model : model + "@r" + std::to_string(round);
}

struct Block {
  std::string title;
  std::vector<std::string> rows;
  std::vector<std::string> columns;
  // row -> column -> per-document values
  std::map<std::string, std::map<std::string, std::vector<double>>> values;
};

void render_block(const Block& b, int mean_decimals, int std_decimals, std::ostringstream& text, std::ostringstream& csv) {
  std::vector<std::vector<std::string>> grid;
  grid.push_back({""});
  for (const auto& c : b.columns) grid.back().push_back(c);
  for (const auto& row : b.rows) {
    auto& g = grid.emplace_back();
    g.push_back(row);
    for (const auto& c : b.columns) {
      auto rit = b.values.find(row);
      const std::vector<double>* vals = nullptr;
      if (rit != b.values.end())
        if (auto cit = rit->second.find(c); cit != rit->second.end() && !cit->second.empty()) vals = &cit->second;
      if (!vals) {
        g.push_back("-");
        csv << csv_field(b.title) << ',' << csv_field(row) << ',' << csv_field(c) << ",,,0\n";
        continue;
      }
      auto cell = stats::aggregate(*vals);
      cell.mean_decimals = mean_decimals;
      cell.std_decimals = std_decimals;
      g.push_back(cell.render());
      csv << csv_field(b.title) << ',' << csv_field(row) << ',' << csv_field(c) << ',' << stats::format_decimal(cell.mean, 6)
          << ',' << stats::format_decimal(cell.std, 6) << ',' << cell.n << '\n';
    }
  }
  std::vector<std::size_t> width(grid.front().size(), 0);
  for (const auto& r : grid)
    for (std::size_t j = 0; j < r.size(); ++j) width[j] = std::max(width[j], r[j].size());
  text << b.title << "\n";
  for (const auto& r : grid) {
    for (std::size_t j = 0; j < r.size(); ++j) {
      text << r[j];
      if (j + 1 < r.size()) text << std::string(width[j] - r[j].size() + 2, ' ');
    }
    text << "\n";
  }
  text << "\n";
}

std::vector<std::string> roster_of(const RunStore& store) {
  if (auto m = store.manifest()) return m->roster;
  return {};
}

RenderedTable metrics_table(const RunStore& store) {
  const auto records = store.metrics();
  if (records.empty()) throw Error(ErrorCode::EmptyRun, "run " + store.run_id() + " has no metric records");
  Block b;
  b.title = "Automatic metrics (mean(std) over documents; ROUGE and BERTScore are F1)";
  b.rows = {"BLEU", "ROUGE-1", "ROUGE-2", "ROUGE-L", "BERTScore", "SummaC", "FRE", "DCR"};
  std::vector<std::string> cols;
  bool zero_shot = false;
  for (const auto& r : records) {
    const auto col = column_name(r.model_name, r.round);
    if (std::find(cols.begin(), cols.end(), col) == cols.end()) cols.push_back(col);
    const auto& m = r.report;
    b.values["BLEU"][col].push_back(m.bleu);
    b.values["ROUGE-1"][col].push_back(m.rouge1.f1);
    b.values["ROUGE-2"][col].push_back(m.rouge2.f1);
    b.values["ROUGE-L"][col].push_back(m.rougeL.f1);
    if (m.bertscore) b.values["BERTScore"][col].push_back(m.bertscore->f1);
    if (m.summac) b.values["SummaC"][col].push_back(*m.summac);
    b.values["FRE"][col].push_back(m.fre);
    b.values["DCR"][col].push_back(m.dcr);
    zero_shot = zero_shot || r.summac_aggregation.value_or("") == "zero-shot";
  }
  b.columns = order_models(cols, roster_of(store));
  std::ostringstream text, csv;
  csv << "block,row,model,mean,std,n\n";
  render_block(b, 3, 2, text, csv);
  text << "Compared against the source document (abstract + claims).";
  if (zero_shot) text << " SummaC uses zero-shot (max-then-mean) aggregation.";
  text << " BERTScore and SummaC depend on the configured providers and compare only within this run.";
  text << "\n";
  return {text.str(), csv.str()};
}

RenderedTable judgments_table(const RunStore& store) {
  auto ratings = store.ratings();
  if (ratings.empty()) throw Error(ErrorCode::EmptyRun, "run " + store.run_id() + " has no ratings");
  const bool any_gold = std::any_of(ratings.begin(), ratings.end(), [](const RatingRecord& r) { return r.is_gold_check; });
  const double threshold = store.manifest() ? store.manifest()->gold_threshold : 1.0;
  if (any_gold) ratings = filter_reliable(ratings, threshold);

  // block title -> (doc, column) -> dimension -> values across raters
  std::map<std::string, std::map<std::pair<std::string, std::string>, std::array<std::vector<double>, 4>>> per_doc;
  std::vector<std::string> block_order;
  std::vector<std::string> cols;
  for (const auto& r : ratings) {
    if (r.is_gold_check) continue;
    const std::string title = r.evaluator_kind == EvaluatorKind::Human ? "Human evaluation"
                                                                       : "LLM (" + r.evaluator_id + ") evaluation";
    if (std::find(block_order.begin(), block_order.end(), title) == block_order.end()) block_order.push_back(title);
    const auto col = column_name(r.model_name, r.round);
    if (std::find(cols.begin(), cols.end(), col) == cols.end()) cols.push_back(col);
    auto& dims = per_doc[title][{r.document_id, col}];
    for (auto d : judge::kDimensions) dims[static_cast<std::size_t>(d)].push_back(r.scores.get(d));
  }
  if (block_order.empty()) throw Error(ErrorCode::EmptyRun, "run " + store.run_id() + " has no usable ratings");
  std::stable_sort(block_order.begin(), block_order.end(), [](const std::string& a, const std::string& b) {
    return (a == "Human evaluation") > (b == "Human evaluation");
  });
  const auto columns = order_models(cols, roster_of(store));

  std::ostringstream text, csv;
  csv << "block,row,model,mean,std,n\n";
  for (const auto& title : block_order) {
    Block b;
    b.title = title;
    b.columns = columns;
    for (auto d : judge::kDimensions) b.rows.emplace_back(judge::label(d));
    for (const auto& [key, dims] : per_doc[title])
      for (auto d : judge::kDimensions) {
        const auto& v = dims[static_cast<std::size_t>(d)];
        double mean = 0;
        for (double x : v) mean += x;
        b.values[std::string(judge::label(d))][key.second].push_back(mean / static_cast<double>(v.size()));
      }
    render_block(b, 3, 2, text, csv);
  }
  text << "Scores 1-5, averaged per document over raters, then mean(std) over documents.";
  if (any_gold) text << " Human sessions filtered at gold pass rate >= " << stats::format_decimal(threshold, 2) << ".";
  text << "\n";
  return {text.str(), csv.str()};
}

RenderedTable correlations_table(const RunStore& store) {
  const auto records = store.correlations();
  if (records.empty()) throw Error(ErrorCode::EmptyRun, "run " + store.run_id() + " has no correlation analyses");
  std::ostringstream text, csv;
  for (const auto& r : records) {
    text << "Correlations '" << r.analysis << "' (" << stats::to_string(r.matrix.method) << ", level " << r.level << ")\n";
    text << r.matrix.to_text() << "\n";
    csv << r.matrix.to_csv();
  }
  return {text.str(), csv.str()};
}

}  // namespace

std::vector<std::string> order_models(std::vector<std::string> models, const std::vector<std::string>& roster) {
  auto base = [](const std::string& col) { return col.substr(0, col.find("@r")); };
  auto roster_rank = [&](const std::string& m) {
    auto it = std::find(roster.begin(), roster.end(), base(m));
    return static_cast<std::size_t>(it - roster.begin());
  };
  std::stable_sort(models.begin(), models.end(), [&](const std::string& a, const std::string& b) {
    const auto ka = std::make_tuple(roster_rank(a), reference_rank(base(a)), base(a), a);
    const auto kb = std::make_tuple(roster_rank(b), reference_rank(base(b)), base(b), b);
    return ka < kb;
  });
  return models;
}

RenderedTable render_table(const RunStore& store, TableKind kind) {
  switch (kind) {
    case TableKind::Metrics: return metrics_table(store);
    case TableKind::Judgments: return judgments_table(store);
    case TableKind::Correlations: return correlations_table(store);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown table kind");
}

}  // namespace sumeval::runstore
