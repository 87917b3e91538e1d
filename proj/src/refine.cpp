#include "sumeval/refine.hpp"

#include <map>

#include "sumeval/assets.hpp"
#include "sumeval/errors.hpp"
#include "sumeval/hashing.hpp"

namespace sumeval::refine {

using nlohmann::json;

RefineConfig RefineConfig::defaults() {
  RefineConfig c;
  c.base_template = std::string(assets::summarize_prompt());
  c.refine_template = std::string(assets::refine_prompt());
  return c;
}

namespace {

const char* kSystemPrompt = "You write accurate, concise summaries of patent documents.";

// Single pass, so placeholder-like text inside substituted values stays literal.
std::string fill(const std::string& tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find('{', pos);
    if (open == std::string::npos) break;
    const auto close = tmpl.find('}', open);
    if (close == std::string::npos) break;
    auto it = values.find(tmpl.substr(open + 1, close - open - 1));
    if (it == values.end()) {
      out.append(tmpl, pos, open + 1 - pos);
      pos = open + 1;
      continue;
    }
    out.append(tmpl, pos, open - pos);
    out += it->second;
    pos = close + 1;
  }
  out.append(tmpl, pos, std::string::npos);
  return out;
}

bool blank(const std::string& s) { return s.find_first_not_of(" \t\r\n") == std::string::npos; }

}  // namespace

Generation generate_summary(const corpus::Document& document, providers::ChatProvider& provider,
                            const std::optional<Feedback>& prior, const RefineConfig& config) {
  std::map<std::string, std::string> values{{"document", "Title: " + document.title + "\n\n" + document.source_text(config.joiner)}};
  if (prior) {
    values["previous_summary"] = prior->previous_summary;
    values["feedback"] = prior->feedback_text;
  }
  Generation g;
  g.prompt = fill(prior ? config.refine_template : config.base_template, values);

  providers::ChatRequest request;
  request.system_prompt = kSystemPrompt;
  request.user_prompt = g.prompt;
  request.temperature = config.temperature;
  request.max_tokens = config.max_tokens;
  request.model_name = provider.model_name();
  g.text = provider.chat(request).text;
  if (blank(g.text)) throw Error(ErrorCode::EmptyCompletion, "generator returned no text for " + document.id);
  return g;
}

std::string render_feedback(const judge::JudgeScores& scores) {
  std::string out;
  if (scores.rationale && !scores.rationale->empty()) out += *scores.rationale + "\n\n";
  out += "Scores (1 = Poor, 5 = Excellent):\n";
  judge::JudgeScores bare = scores;
  bare.rationale.reset();
  out += judge::render_scores(bare);
  return out;
}

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::MaxRounds: return "max_rounds";
    case StopReason::PerfectScore: return "perfect_score";
    case StopReason::FixedPoint: return "fixed_point";
    case StopReason::Aborted: return "aborted";
  }
  return "";
}

StopReason stop_reason_from_string(std::string_view s) {
  for (auto r : {StopReason::MaxRounds, StopReason::PerfectScore, StopReason::FixedPoint, StopReason::Aborted})
    if (to_string(r) == s) return r;
  throw Error(ErrorCode::ValidationFailed, "unknown stop reason '" + std::string(s) + "'");
}

std::string chain_link(const std::string& previous_chain, const std::string& previous_feedback,
                       const std::string& prompt_hash) {
  return sha256_hex(previous_chain + "\n" + sha256_hex(previous_feedback) + "\n" + prompt_hash);
}

RefinementTranscript refine_loop(const corpus::Document& document, providers::ChatProvider& generator,
                                 providers::ChatProvider& judge_provider, const RefineConfig& config) {
  if (config.max_rounds < 1) throw Error(ErrorCode::InvalidArgument, "max_rounds must be >= 1");
  RefinementTranscript t;
  t.document_id = document.id;
  t.generator_model = generator.model_name();
  t.judge_model = judge_provider.model_name();
  t.max_rounds = config.max_rounds;
  t.stop_on_perfect = config.stop_on_perfect;
  t.stop_on_fixed_point = config.stop_on_fixed_point;
  t.stop_reason = StopReason::MaxRounds;

  for (int k = 1; k <= config.max_rounds; ++k) {
    Round round;
    round.index = k;
    try {
      std::optional<Feedback> prior;
      if (!t.rounds.empty()) prior = Feedback{t.rounds.back().summary_text, t.rounds.back().feedback_text};
      auto gen = generate_summary(document, generator, prior, config);
      round.prompt = std::move(gen.prompt);
      round.summary_text = std::move(gen.text);

      runstore::SummaryRecord record;
      record.document_id = document.id;
      record.model_name = generator.model_name();
      record.text = round.summary_text;
      record.provenance = runstore::Provenance::Generated;
      record.round = k - 1;
      round.scores = judge::judge_summary(document, record, judge_provider, config.judge_retries, config.judge).scores;
    } catch (const std::exception& e) {
      if (t.rounds.empty()) throw;
      t.stop_reason = StopReason::Aborted;
      t.error = e.what();
      return t;
    }
    round.feedback_text = render_feedback(round.scores);
    round.prompt_hash = sha256_hex(round.prompt);
    round.chain_hash = t.rounds.empty()
                           ? chain_link("", "", round.prompt_hash)
                           : chain_link(t.rounds.back().chain_hash, t.rounds.back().feedback_text, round.prompt_hash);
    const bool same_as_previous = !t.rounds.empty() && t.rounds.back().summary_text == round.summary_text;
    t.rounds.push_back(std::move(round));

    if (config.stop_on_perfect && t.rounds.back().scores.overall == 5) {
      t.stop_reason = StopReason::PerfectScore;
      break;
    }
    if (config.stop_on_fixed_point && same_as_previous) {
      t.stop_reason = StopReason::FixedPoint;
      break;
    }
  }
  return t;
}

bool verify_chain(const RefinementTranscript& t, std::string* why) {
  auto fail = [why](std::string msg) {
    if (why) *why = std::move(msg);
    return false;
  };
  if (t.rounds.empty()) return fail("transcript has no rounds");
  if (static_cast<int>(t.rounds.size()) > t.max_rounds) return fail("more rounds than max_rounds");
  std::string chain, feedback;
  for (std::size_t i = 0; i < t.rounds.size(); ++i) {
    const auto& r = t.rounds[i];
    const std::string label = "round " + std::to_string(i + 1);
    if (r.index != static_cast<int>(i + 1)) return fail(label + ": index out of sequence");
    if (sha256_hex(r.prompt) != r.prompt_hash) return fail(label + ": prompt hash mismatch");
    if (i > 0) {
      const auto& prev = t.rounds[i - 1];
      if (r.prompt.find(prev.feedback_text) == std::string::npos)
        return fail(label + ": prompt does not embed the previous feedback");
      if (r.prompt.find(prev.summary_text) == std::string::npos)
        return fail(label + ": prompt does not embed the previous summary");
    }
    const std::string expected = chain_link(chain, feedback, r.prompt_hash);
    if (expected != r.chain_hash) return fail(label + ": chain hash mismatch");
    chain = r.chain_hash;
    feedback = r.feedback_text;
  }
  return true;
}

namespace {

json scores_json(const judge::JudgeScores& s) {
  json j = {{"clarity", s.clarity}, {"accuracy", s.accuracy}, {"coverage", s.coverage},
            {"overall", s.overall}, {"evaluator_id", s.evaluator_id}};
  j["rationale"] = s.rationale ? json(*s.rationale) : json(nullptr);
  return j;
}

judge::JudgeScores scores_from(const json& j) {
  judge::JudgeScores s;
  s.clarity = j.at("clarity").get<int>();
  s.accuracy = j.at("accuracy").get<int>();
  s.coverage = j.at("coverage").get<int>();
  s.overall = j.at("overall").get<int>();
  s.evaluator_id = j.at("evaluator_id").get<std::string>();
  if (j.contains("rationale") && !j.at("rationale").is_null()) s.rationale = j.at("rationale").get<std::string>();
  return s;
}

}  // namespace

json RefinementTranscript::to_json() const {
  json rounds_j = json::array();
  for (const auto& r : rounds)
    rounds_j.push_back({{"index", r.index},
                        {"prompt", r.prompt},
                        {"prompt_hash", r.prompt_hash},
                        {"chain_hash", r.chain_hash},
                        {"summary_text", r.summary_text},
                        {"scores", scores_json(r.scores)},
                        {"feedback_text", r.feedback_text}});
  json j = {{"document_id", document_id},
            {"generator_model", generator_model},
            {"judge_model", judge_model},
            {"config", {{"max_rounds", max_rounds}, {"stop_on_perfect", stop_on_perfect}, {"stop_on_fixed_point", stop_on_fixed_point}}},
            {"rounds", rounds_j},
            {"stop_reason", std::string(to_string(stop_reason))}};
  j["error"] = error ? json(*error) : json(nullptr);
  return j;
}

RefinementTranscript RefinementTranscript::from_json(const json& j) {
  RefinementTranscript t;
  t.document_id = j.at("document_id").get<std::string>();
  t.generator_model = j.at("generator_model").get<std::string>();
  t.judge_model = j.at("judge_model").get<std::string>();
  const auto& c = j.at("config");
  t.max_rounds = c.at("max_rounds").get<int>();
  t.stop_on_perfect = c.at("stop_on_perfect").get<bool>();
  t.stop_on_fixed_point = c.at("stop_on_fixed_point").get<bool>();
  for (const auto& r : j.at("rounds")) {
    Round round;
    round.index = r.at("index").get<int>();
    round.prompt = r.at("prompt").get<std::string>();
    round.prompt_hash = r.at("prompt_hash").get<std::string>();
    round.chain_hash = r.at("chain_hash").get<std::string>();
    round.summary_text = r.at("summary_text").get<std::string>();
    round.scores = scores_from(r.at("scores"));
    round.feedback_text = r.at("feedback_text").get<std::string>();
    t.rounds.push_back(std::move(round));
  }
  t.stop_reason = stop_reason_from_string(j.at("stop_reason").get<std::string>());
  if (!j.at("error").is_null()) t.error = j.at("error").get<std::string>();
  return t;
}

}  // namespace sumeval::refine
