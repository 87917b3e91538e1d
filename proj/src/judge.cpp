#include "sumeval/judge.hpp"

#include <regex>
#include <sstream>

#include "sumeval/assets.hpp"
#include "sumeval/errors.hpp"

namespace sumeval::judge {

std::string_view name(Dimension d) {
  switch (d) {
    case Dimension::Clarity: return "clarity";
    case Dimension::Accuracy: return "accuracy";
    case Dimension::Coverage: return "coverage";
    case Dimension::Overall: return "overall";
  }
  return "";
}

std::string_view label(Dimension d) {
  switch (d) {
    case Dimension::Clarity: return "Clarity";
    case Dimension::Accuracy: return "Accuracy";
    case Dimension::Coverage: return "Coverage";
    case Dimension::Overall: return "Overall";
  }
  return "";
}

int JudgeScores::get(Dimension d) const { return const_cast<JudgeScores*>(this)->get(d); }

int& JudgeScores::get(Dimension d) {
  switch (d) {
    case Dimension::Clarity: return clarity;
    case Dimension::Accuracy: return accuracy;
    case Dimension::Coverage: return coverage;
    case Dimension::Overall: return overall;
  }
  return overall;
}

void JudgeScores::validate() const {
  for (auto d : kDimensions) {
    const int v = get(d);
    if (v < 1 || v > 5)
      throw Error(ErrorCode::OutOfRange, std::string(name(d)) + " = " + std::to_string(v) + " is outside 1..5");
  }
}

JudgeConfig JudgeConfig::defaults() {
  JudgeConfig c;
  c.instructions = std::string(assets::judge_instructions());
  c.output_format = std::string(assets::judge_output_format());
  return c;
}

std::string JudgePrompt::system_prompt() const { return instruction_text; }

std::string JudgePrompt::user_prompt() const {
  std::string out;
  out += "### Source document\n";
  out += document_text;
  if (truncation_applied) out += "\n[document truncated]";
  out += "\n\n### Summary\n";
  out += summary_text;
  out += "\n\n### Answer format\n";
  out += output_format_contract;
  return out;
}

JudgePrompt build_prompt(const corpus::Document& document, const runstore::SummaryRecord& summary,
                         const JudgeConfig& config) {
  if (summary.document_id != document.id)
    throw Error(ErrorCode::MismatchedIds,
                "summary of '" + summary.document_id + "' paired with document '" + document.id + "'");
  JudgePrompt p;
  p.instruction_text = config.instructions;
  p.output_format_contract = config.output_format;
  p.document_text = "Title: " + document.title + "\n\n" + document.source_text(config.joiner);
  if (config.max_document_chars && p.document_text.size() > config.max_document_chars) {
    p.document_text.resize(config.max_document_chars);
    p.truncation_applied = true;
  }
  p.summary_text = summary.text;
  return p;
}

std::string render_scores(const JudgeScores& scores) {
  std::ostringstream out;
  for (auto d : kDimensions) out << label(d) << ": " << scores.get(d) << "\n";
  std::string s = out.str();
  if (scores.rationale && !scores.rationale->empty()) s += *scores.rationale;
  else s.pop_back();
  return s;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

const std::regex& score_line() {
  static const std::regex re(
      R"(^[\s>*#_\-]*(clarity|accuracy|coverage|overall(?:[ \t]+quality)?)[\s*_]*[:=][\s*_]*([^\s*_,;]+))",
      std::regex::icase);
  return re;
}

Dimension dimension_of(std::string label_text) {
  for (auto& c : label_text) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (label_text.starts_with("clarity")) return Dimension::Clarity;
  if (label_text.starts_with("accuracy")) return Dimension::Accuracy;
  if (label_text.starts_with("coverage")) return Dimension::Coverage;
  return Dimension::Overall;
}

int parse_value(Dimension d, std::string token) {
  while (!token.empty() && (token.back() == '.' || token.back() == ')')) token.pop_back();
  if (auto slash = token.find('/'); slash != std::string::npos && token.substr(slash) == "/5")
    token.resize(slash);
  static const std::regex integer(R"(^[+-]?\d+$)");
  if (!std::regex_match(token, integer))
    throw Error(ErrorCode::AmbiguousScore, std::string(name(d)) + " has non-integer score '" + token + "'");
  int v = 0;
  try {
    v = std::stoi(token);
  } catch (const std::out_of_range&) {
    throw Error(ErrorCode::OutOfRange, std::string(name(d)) + " = " + token + " is outside 1..5");
  }
  if (v < 1 || v > 5)
    throw Error(ErrorCode::OutOfRange, std::string(name(d)) + " = " + std::to_string(v) + " is outside 1..5");
  return v;
}

}  // namespace

JudgeScores parse_scores(std::string_view response_text) {
  JudgeScores scores;
  std::array<bool, 4> seen{};
  std::string rationale;
  std::istringstream in{std::string(response_text)};
  std::string line;
  while (std::getline(in, line)) {
    std::smatch m;
    if (std::regex_search(line, m, score_line())) {
      const Dimension d = dimension_of(m[1].str());
      const int v = parse_value(d, m[2].str());
      auto& slot = scores.get(d);
      const auto idx = static_cast<std::size_t>(d);
      if (seen[idx] && slot != v)
        throw Error(ErrorCode::AmbiguousScore,
                    std::string(name(d)) + " given twice (" + std::to_string(slot) + " and " + std::to_string(v) + ")");
      seen[idx] = true;
      slot = v;
      continue;
    }
    auto t = trim(line);
    if (t.empty() && rationale.empty()) continue;
    rationale += line;
    rationale += '\n';
  }
  for (auto d : kDimensions)
    if (!seen[static_cast<std::size_t>(d)]) throw Error(ErrorCode::MissingDimension, std::string(name(d)));
  if (auto t = trim(rationale); !t.empty()) scores.rationale = std::string(t);
  return scores;
}

JudgeOutcome judge_summary(const corpus::Document& document, const runstore::SummaryRecord& summary,
                           providers::ChatProvider& provider, int retries, const JudgeConfig& config) {
  const JudgePrompt prompt = build_prompt(document, summary, config);
  providers::ChatRequest request;
  request.system_prompt = prompt.system_prompt();
  request.user_prompt = prompt.user_prompt();
  request.temperature = config.temperature;
  request.max_tokens = config.max_tokens;
  request.model_name = provider.model_name();

  std::string last_error;
  for (int attempt = 0; attempt <= retries; ++attempt) {
    const auto response = provider.chat(request);
    try {
      JudgeOutcome out;
      out.scores = parse_scores(response.text);
      out.scores.evaluator_id = provider.model_name();
      out.raw_response = response.text;
      out.attempts = attempt + 1;
      return out;
    } catch (const Error& e) {
      last_error = e.what();
    }
    request.user_prompt = prompt.user_prompt() + "\n\nYour previous answer could not be read (" + last_error +
                          "). Reply again using exactly the answer format above.";
  }
  throw Error(ErrorCode::JudgeUnparseable,
              "no parseable scores after " + std::to_string(retries + 1) + " attempt(s); last error: " + last_error);
}

}  // namespace sumeval::judge
