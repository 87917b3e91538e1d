#include "sumeval/providers.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "sumeval/errors.hpp"
#include "sumeval/hashing.hpp"
#include "sumeval/textproc.hpp"

namespace sumeval::providers {

using nlohmann::json;

void EmbeddingMatrix::validate() const {
  if (tokens.size() != vectors.size())
    throw Error(ErrorCode::MalformedProviderResponse,
                "embedding has " + std::to_string(tokens.size()) + " tokens but " +
                    std::to_string(vectors.size()) + " vectors");
  const std::size_t dim = dimension();
  for (const auto& v : vectors)
    if (v.size() != dim || dim == 0)
      throw Error(ErrorCode::MalformedProviderResponse, "embedding vectors differ in dimension");
}

void NliJudgment::validate() const {
  for (double p : {entailment, contradiction, neutral})
    if (!(p >= 0.0 && p <= 1.0))
      throw Error(ErrorCode::MalformedProviderResponse, "NLI probability outside [0,1]");
  if (std::abs(entailment + contradiction + neutral - 1.0) > 1e-6)
    throw Error(ErrorCode::MalformedProviderResponse, "NLI probabilities do not sum to 1");
}

// --- ScriptedChatProvider ---------------------------------------------------

ScriptedChatProvider::ScriptedChatProvider(std::string model_name, std::vector<std::string> script)
    : model_name_(std::move(model_name)), script_(std::move(script)) {}

ScriptedChatProvider::ScriptedChatProvider(std::string model_name, Responder responder)
    : model_name_(std::move(model_name)), responder_(std::move(responder)) {}

ChatResponse ScriptedChatProvider::chat(const ChatRequest& request) {
  std::size_t index;
  {
    std::lock_guard lock(mu_);
    index = requests_.size();
    requests_.push_back(request);
  }
  ChatResponse response;
  if (responder_) {
    response.text = responder_(request, index);
  } else {
    if (index >= script_.size())
      throw Error(ErrorCode::ProviderFailure, "mock script exhausted after " +
                                                  std::to_string(script_.size()) + " responses");
    response.text = script_[index];
  }
  response.usage.prompt_tokens =
      static_cast<int>(textproc::tokenize(request.system_prompt).size() + textproc::tokenize(request.user_prompt).size());
  response.usage.completion_tokens = static_cast<int>(textproc::tokenize(response.text).size());
  return response;
}

std::vector<ChatRequest> ScriptedChatProvider::requests() const {
  std::lock_guard lock(mu_);
  return requests_;
}

std::size_t ScriptedChatProvider::calls() const {
  std::lock_guard lock(mu_);
  return requests_.size();
}

namespace {

int hex_value(char c) { return c <= '9' ? c - '0' : c - 'a' + 10; }

std::string_view section_after(std::string_view prompt, std::string_view marker) {
  auto pos = prompt.find(marker);
  if (pos == std::string_view::npos) return prompt;
  std::string_view rest = prompt.substr(pos + marker.size());
  auto next = rest.find("\n###");
  return next == std::string_view::npos ? rest : rest.substr(0, next);
}

}  // namespace

std::unique_ptr<ChatProvider> make_mock_judge(std::string model_name) {
  return std::make_unique<ScriptedChatProvider>(
      std::move(model_name), [](const ChatRequest& request, std::size_t) {
        const std::string h = sha256_hex(request.system_prompt + "\n" + request.user_prompt);
        const char* names[] = {"Clarity", "Accuracy", "Coverage", "Overall"};
        std::ostringstream out;
        for (int d = 0; d < 4; ++d) out << names[d] << ": " << 1 + hex_value(h[d]) % 5 << "\n";
        out << "The summary was assessed by a deterministic mock judge (ref " << h.substr(0, 8) << ").";
        return out.str();
      });
}

std::unique_ptr<ChatProvider> make_mock_summarizer(std::string model_name) {
  return std::make_unique<ScriptedChatProvider>(
      std::move(model_name), [](const ChatRequest& request, std::size_t) {
        const auto doc = section_after(request.user_prompt, "### Document\n");
        std::istringstream words{std::string(doc)};
        std::string word, out;
        for (int i = 0; i < 30 && words >> word; ++i) out += (i ? " " : "") + word;
        return out + " [draft " + sha256_hex(request.user_prompt).substr(0, 8) + "]";
      });
}

// --- OneHotEmbedder / NLI mocks ---------------------------------------------

EmbeddingMatrix OneHotEmbedder::embed(std::string_view text) {
  auto seq = textproc::tokenize(text);
  EmbeddingMatrix m;
  m.vectors.reserve(seq.size());
  std::lock_guard lock(mu_);
  for (auto& tok : seq.tokens) {
    auto [it, inserted] = index_.try_emplace(tok, index_.size());
    if (it->second >= dimension_)
      throw Error(ErrorCode::ProviderFailure, "one-hot vocabulary exceeds dimension " + std::to_string(dimension_));
    std::vector<double> v(dimension_, 0.0);
    v[it->second] = 1.0;
    m.vectors.push_back(std::move(v));
    m.tokens.push_back(std::move(tok));
  }
  return m;
}

NliJudgment ExactMatchNli::nli(std::string_view premise, std::string_view hypothesis) {
  if (textproc::tokenize(premise).tokens == textproc::tokenize(hypothesis).tokens) return {1.0, 0.0, 0.0};
  return {0.0, 0.0, 1.0};
}

NliJudgment TableNli::nli(std::string_view premise, std::string_view hypothesis) {
  std::pair<std::string, std::string> key{std::string(premise), std::string(hypothesis)};
  {
    std::lock_guard lock(mu_);
    seen_.push_back(key);
  }
  auto it = table_.find(key);
  const double e = it == table_.end() ? fallback_ : it->second;
  return {e, 0.0, 1.0 - e};
}

std::vector<std::pair<std::string, std::string>> TableNli::seen() const {
  std::lock_guard lock(mu_);
  return seen_;
}

// --- config + factories -----------------------------------------------------

ProviderConfig ProviderConfig::from_json(const json& j) {
  ProviderConfig c;
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, "provider config must be an object");
  try {
    c.kind = j.value("kind", c.kind);
    c.endpoint = j.value("endpoint", c.endpoint);
    c.model = j.value("model", c.model);
    c.api_key_env = j.value("api_key_env", c.api_key_env);
    c.timeout_ms = j.value("timeout_ms", c.timeout_ms);
    c.max_retries = j.value("max_retries", c.max_retries);
    c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
    c.min_interval_ms = j.value("min_interval_ms", c.min_interval_ms);
    c.backoff_initial_ms = j.value("backoff_initial_ms", c.backoff_initial_ms);
    c.backoff_factor = j.value("backoff_factor", c.backoff_factor);
    c.backoff_cap_ms = j.value("backoff_cap_ms", c.backoff_cap_ms);
    c.max_pair_tokens = j.value("max_pair_tokens", c.max_pair_tokens);
    c.script = j.value("script", c.script);
    c.onehot_dimension = j.value("dimension", c.onehot_dimension);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("provider config: ") + e.what());
  }
  if (c.max_in_flight < 1 || c.max_in_flight > 1024)
    throw Error(ErrorCode::ConfigError, "max_in_flight must be in [1, 1024]");
  if (c.max_retries < 0) throw Error(ErrorCode::ConfigError, "max_retries must be >= 0");
  return c;
}

json ProviderConfig::to_redacted_json() const {
  json j = {{"kind", kind},
            {"endpoint", endpoint},
            {"model", model},
            {"api_key_env", api_key_env},
            {"timeout_ms", timeout_ms},
            {"max_retries", max_retries},
            {"max_in_flight", max_in_flight},
            {"min_interval_ms", min_interval_ms}};
  if (!script.empty()) j["script_length"] = script.size();
  return j;
}

namespace {

std::shared_ptr<JsonPostClient> make_client(const ProviderConfig& config) {
  if (config.endpoint.empty()) throw Error(ErrorCode::ConfigError, "provider endpoint is required");
  std::string key;
  if (!config.api_key_env.empty()) {
    const char* v = std::getenv(config.api_key_env.c_str());
    if (!v) throw Error(ErrorCode::AuthFailure, "environment variable " + config.api_key_env + " is not set");
    key = v;
  }
  return std::make_shared<JsonPostClient>(
      config, make_http_transport(config.endpoint, std::chrono::milliseconds(config.timeout_ms)), key);
}

}  // namespace

std::unique_ptr<ChatProvider> make_chat_provider(const ProviderConfig& config) {
  const std::string name = config.model.empty() ? config.kind : config.model;
  if (config.kind == "openai") return std::make_unique<OpenAiChatProvider>(make_client(config));
  if (config.kind == "mock-judge") return make_mock_judge(name);
  if (config.kind == "mock-summarizer") return make_mock_summarizer(name);
  if (config.kind == "scripted") return std::make_unique<ScriptedChatProvider>(name, config.script);
  throw Error(ErrorCode::ConfigError, "unknown chat provider kind '" + config.kind + "'");
}

std::unique_ptr<EmbeddingProvider> make_embedding_provider(const ProviderConfig& config) {
  if (config.kind == "onehot") return std::make_unique<OneHotEmbedder>(config.onehot_dimension);
  if (config.kind == "http") return std::make_unique<HttpEmbeddingProvider>(make_client(config));
  throw Error(ErrorCode::ConfigError, "unknown embedding provider kind '" + config.kind + "'");
}

std::unique_ptr<NliProvider> make_nli_provider(const ProviderConfig& config) {
  if (config.kind == "exact-match") return std::make_unique<ExactMatchNli>();
  if (config.kind == "http") return std::make_unique<HttpNliProvider>(make_client(config));
  throw Error(ErrorCode::ConfigError, "unknown NLI provider kind '" + config.kind + "'");
}

}  // namespace sumeval::providers
