#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"

// Contracts for model-backed capabilities (chat, token embeddings, NLI) and
// the deterministic mocks used offline. Every provider is a shareable handle:
// implementations are safe to call from several threads at once.
namespace sumeval::providers {

struct ChatRequest {
  std::string system_prompt;
  std::string user_prompt;
  double temperature = 0.0;
  int max_tokens = 1024;
  std::string model_name;
};

struct TokenUsage {
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

struct ChatResponse {
  std::string text;
  TokenUsage usage;
  double latency_ms = 0.0;
  int retries = 0;  // transient failures absorbed before success
};

class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  virtual ChatResponse chat(const ChatRequest& request) = 0;
  virtual std::string model_name() const = 0;
};

struct EmbeddingMatrix {
  std::vector<std::string> tokens;
  std::vector<std::vector<double>> vectors;

  std::size_t dimension() const { return vectors.empty() ? 0 : vectors.front().size(); }
  /// Throws MalformedProviderResponse on count or dimension mismatch.
  void validate() const;
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual EmbeddingMatrix embed(std::string_view text) = 0;
};

struct NliJudgment {
  double entailment = 0.0;
  double contradiction = 0.0;
  double neutral = 0.0;
  /// Throws MalformedProviderResponse unless each is in [0,1] and they sum to 1 ± 1e-6.
  void validate() const;
};

class NliProvider {
 public:
  virtual ~NliProvider() = default;
  virtual NliJudgment nli(std::string_view premise, std::string_view hypothesis) = 0;
  /// Token budget for premise + hypothesis; 0 means unbounded.
  virtual std::size_t max_pair_tokens() const { return 0; }
};

// ---------------------------------------------------------------------------
// Mocks

/// Replays a fixed script of responses in order and records every request.
/// Exhausting the script raises ProviderFailure. A responder function can be
/// supplied instead of a script.
class ScriptedChatProvider : public ChatProvider {
 public:
  using Responder = std::function<std::string(const ChatRequest&, std::size_t call_index)>;

  ScriptedChatProvider(std::string model_name, std::vector<std::string> script);
  ScriptedChatProvider(std::string model_name, Responder responder);

  ChatResponse chat(const ChatRequest& request) override;
  std::string model_name() const override { return model_name_; }

  std::vector<ChatRequest> requests() const;
  std::size_t calls() const;

 private:
  std::string model_name_;
  std::vector<std::string> script_;
  Responder responder_;
  mutable std::mutex mu_;
  std::vector<ChatRequest> requests_;
};

/// Prompt-hash driven judge: emits four scores and a short rationale in the
/// labeled-line format. Same prompt, same answer.
std::unique_ptr<ChatProvider> make_mock_judge(std::string model_name);

/// Prompt-hash driven summarizer: returns the first words of the document
/// section of the prompt plus a draft tag that changes with the prompt.
std::unique_ptr<ChatProvider> make_mock_summarizer(std::string model_name);

/// Distinct tokens get orthogonal unit vectors (basis vectors assigned on first
/// sight), equal tokens get equal vectors. Throws ProviderFailure once more
/// than `dimension` distinct tokens have been seen.
class OneHotEmbedder : public EmbeddingProvider {
 public:
  explicit OneHotEmbedder(std::size_t dimension = 4096) : dimension_(dimension) {}
  EmbeddingMatrix embed(std::string_view text) override;

 private:
  std::size_t dimension_;
  std::mutex mu_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// entailment = 1 when premise and hypothesis tokenize identically, else neutral = 1.
class ExactMatchNli : public NliProvider {
 public:
  NliJudgment nli(std::string_view premise, std::string_view hypothesis) override;
};

/// Entailment looked up by (premise, hypothesis); remaining mass goes to neutral.
class TableNli : public NliProvider {
 public:
  explicit TableNli(std::map<std::pair<std::string, std::string>, double> entailment,
                    double fallback = 0.0, std::size_t max_pair_tokens = 0)
      : table_(std::move(entailment)), fallback_(fallback), max_pair_tokens_(max_pair_tokens) {}
  NliJudgment nli(std::string_view premise, std::string_view hypothesis) override;
  std::size_t max_pair_tokens() const override { return max_pair_tokens_; }
  std::vector<std::pair<std::string, std::string>> seen() const;

 private:
  std::map<std::pair<std::string, std::string>, double> table_;
  double fallback_;
  std::size_t max_pair_tokens_;
  mutable std::mutex mu_;
  std::vector<std::pair<std::string, std::string>> seen_;
};

// ---------------------------------------------------------------------------
// HTTP

struct HttpResponse {
  int status = 0;  // 0 when no response arrived
  std::string body;
  std::optional<double> retry_after_s;
  bool timed_out = false;
};

/// POSTs JSON to a path relative to the transport's base URL.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post_json(const std::string& path, const std::string& body,
                                 const std::multimap<std::string, std::string>& headers) = 0;
};

/// cpp-httplib transport; base_url like "https://api.example.com/v1".
std::unique_ptr<HttpTransport> make_http_transport(const std::string& base_url,
                                                   std::chrono::milliseconds timeout);

struct ProviderConfig {
  /// openai | mock-judge | mock-summarizer | scripted (chat);
  /// onehot | http (embeddings); exact-match | http (nli).
  std::string kind = "openai";
  std::string endpoint;
  std::string model;
  std::string api_key_env;  // name of the environment variable holding the key
  int timeout_ms = 60000;
  int max_retries = 3;
  int max_in_flight = 4;
  int min_interval_ms = 0;  // spacing between request starts
  int backoff_initial_ms = 500;
  double backoff_factor = 2.0;
  int backoff_cap_ms = 30000;
  std::size_t max_pair_tokens = 0;   // nli only
  std::vector<std::string> script;   // scripted only
  std::size_t onehot_dimension = 4096;

  static ProviderConfig from_json(const nlohmann::json& j);
  /// Never contains the key itself.
  nlohmann::json to_redacted_json() const;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// Retrying JSON-over-HTTP client shared by the HTTP providers.
///
/// 401/403 raise AuthFailure at once; 429 retries honouring Retry-After and
/// raises RateLimited when retries run out; 408, 5xx and transport failures
/// retry with exponential backoff (capped) and end in Timeout or
/// ProviderFailure; other statuses and non-JSON bodies fail without retry.
/// At most max_in_flight requests run concurrently.
class JsonPostClient {
 public:
  JsonPostClient(ProviderConfig config, std::unique_ptr<HttpTransport> transport, std::string api_key,
                 Sleeper sleeper = {});

  struct Result {
    nlohmann::json body;
    int retries = 0;
    double latency_ms = 0.0;
  };
  Result post(const std::string& path, const nlohmann::json& body);

  const ProviderConfig& config() const noexcept { return config_; }
  std::size_t total_retries() const noexcept { return total_retries_.load(); }

 private:
  void pace();

  ProviderConfig config_;
  std::unique_ptr<HttpTransport> transport_;
  std::string api_key_;
  Sleeper sleeper_;
  std::counting_semaphore<1024> in_flight_;
  std::mutex pace_mu_;
  std::chrono::steady_clock::time_point next_start_{};
  std::atomic<std::size_t> total_retries_{0};
};

/// OpenAI-compatible chat completions: POST {endpoint}/chat/completions with
/// model, messages (system + user), temperature, max_tokens.
class OpenAiChatProvider : public ChatProvider {
 public:
  explicit OpenAiChatProvider(std::shared_ptr<JsonPostClient> client) : client_(std::move(client)) {}
  ChatResponse chat(const ChatRequest& request) override;
  std::string model_name() const override { return client_->config().model; }

  static nlohmann::json request_body(const ChatRequest& request);

 private:
  std::shared_ptr<JsonPostClient> client_;
};

/// POST {endpoint}/embed {"model","input"} -> {"tokens":[...],"vectors":[[...]]}.
class HttpEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit HttpEmbeddingProvider(std::shared_ptr<JsonPostClient> client) : client_(std::move(client)) {}
  EmbeddingMatrix embed(std::string_view text) override;

 private:
  std::shared_ptr<JsonPostClient> client_;
};

/// POST {endpoint}/nli {"model","premise","hypothesis"} ->
/// {"entailment","contradiction","neutral"}.
class HttpNliProvider : public NliProvider {
 public:
  explicit HttpNliProvider(std::shared_ptr<JsonPostClient> client) : client_(std::move(client)) {}
  NliJudgment nli(std::string_view premise, std::string_view hypothesis) override;
  std::size_t max_pair_tokens() const override { return client_->config().max_pair_tokens; }

 private:
  std::shared_ptr<JsonPostClient> client_;
};

/// Reads the API key from the environment variable named in the config.
std::unique_ptr<ChatProvider> make_chat_provider(const ProviderConfig& config);
std::unique_ptr<EmbeddingProvider> make_embedding_provider(const ProviderConfig& config);
std::unique_ptr<NliProvider> make_nli_provider(const ProviderConfig& config);

}  // namespace sumeval::providers
