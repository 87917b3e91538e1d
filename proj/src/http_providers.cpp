#include <algorithm>
#include <cmath>
#include <thread>

#include "httplib.h"
#include "sumeval/errors.hpp"
#include "sumeval/providers.hpp"

namespace sumeval::providers {

using nlohmann::json;

namespace {

struct ParsedUrl {
  std::string scheme_host_port;
  std::string path_prefix;
};

ParsedUrl parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::ConfigError, "endpoint must include a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl out;
  out.scheme_host_port = url.substr(0, path_start);
  if (path_start != std::string::npos) out.path_prefix = url.substr(path_start);
  while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
  return out;
}

class HttplibTransport : public HttpTransport {
 public:
  HttplibTransport(const std::string& base_url, std::chrono::milliseconds timeout)
      : url_(parse_url(base_url)), timeout_(timeout) {}

  HttpResponse post_json(const std::string& path, const std::string& body,
                         const std::multimap<std::string, std::string>& headers) override {
    // httplib::Client is not safe for concurrent use; one per request.
    httplib::Client client(url_.scheme_host_port);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    httplib::Headers h(headers.begin(), headers.end());
    auto res = client.Post(url_.path_prefix + path, h, body, "application/json");
    HttpResponse out;
    if (!res) {
      out.timed_out = res.error() == httplib::Error::ConnectionTimeout || res.error() == httplib::Error::Read;
      out.body = httplib::to_string(res.error());
      return out;
    }
    out.status = res->status;
    out.body = res->body;
    if (res->has_header("Retry-After")) {
      try {
        out.retry_after_s = std::stod(res->get_header_value("Retry-After"));
      } catch (const std::exception&) {
      }
    }
    return out;
  }

 private:
  ParsedUrl url_;
  std::chrono::milliseconds timeout_;
};

}  // namespace

std::unique_ptr<HttpTransport> make_http_transport(const std::string& base_url,
                                                   std::chrono::milliseconds timeout) {
  return std::make_unique<HttplibTransport>(base_url, timeout);
}

JsonPostClient::JsonPostClient(ProviderConfig config, std::unique_ptr<HttpTransport> transport,
                               std::string api_key, Sleeper sleeper)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      api_key_(std::move(api_key)),
      sleeper_(sleeper ? std::move(sleeper) : Sleeper([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })),
      in_flight_(std::clamp(config_.max_in_flight, 1, 1024)) {}

void JsonPostClient::pace() {
  if (config_.min_interval_ms <= 0) return;
  std::chrono::milliseconds wait{0};
  {
    std::lock_guard lock(pace_mu_);
    const auto now = std::chrono::steady_clock::now();
    const auto start = std::max(now, next_start_);
    next_start_ = start + std::chrono::milliseconds(config_.min_interval_ms);
    wait = std::chrono::duration_cast<std::chrono::milliseconds>(start - now);
  }
  if (wait.count() > 0) sleeper_(wait);
}

JsonPostClient::Result JsonPostClient::post(const std::string& path, const json& body) {
  std::multimap<std::string, std::string> headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  const std::string payload = body.dump();

  struct Permit {
    std::counting_semaphore<1024>& s;
    explicit Permit(std::counting_semaphore<1024>& sem) : s(sem) { s.acquire(); }
    ~Permit() { s.release(); }
  } permit(in_flight_);

  double delay_ms = config_.backoff_initial_ms;
  const auto started = std::chrono::steady_clock::now();
  for (int attempt = 0;; ++attempt) {
    pace();
    const HttpResponse res = transport_->post_json(path, payload, headers);
    const bool last = attempt >= config_.max_retries;

    if (res.status == 200) {
      Result out;
      try {
        out.body = json::parse(res.body);
      } catch (const json::parse_error& e) {
        throw Error(ErrorCode::MalformedProviderResponse, std::string("response is not JSON: ") + e.what());
      }
      out.retries = attempt;
      out.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
      return out;
    }
    if (res.status == 401 || res.status == 403)
      throw Error(ErrorCode::AuthFailure, "provider rejected credentials (HTTP " + std::to_string(res.status) + ")");

    std::chrono::milliseconds wait{static_cast<long long>(std::min<double>(delay_ms, config_.backoff_cap_ms))};
    if (res.status == 429) {
      if (last) throw RateLimitedError("provider kept throttling after " + std::to_string(attempt) + " retries",
                                       res.retry_after_s);
      if (res.retry_after_s)
        wait = std::chrono::milliseconds(static_cast<long long>(
            std::min<double>(*res.retry_after_s * 1000.0, config_.backoff_cap_ms)));
    } else if (res.status == 408 || res.timed_out) {
      if (last) throw Error(ErrorCode::Timeout, "provider timed out after " + std::to_string(attempt) + " retries");
    } else if (res.status == 0 || res.status >= 500) {
      if (last)
        throw Error(ErrorCode::ProviderFailure,
                    "transient failure persisted (" + (res.status ? "HTTP " + std::to_string(res.status) : res.body) + ")");
    } else {
      throw Error(ErrorCode::ProviderFailure, "HTTP " + std::to_string(res.status) + ": " + res.body.substr(0, 200));
    }
    ++total_retries_;
    sleeper_(wait);
    delay_ms *= config_.backoff_factor;
  }
}

json OpenAiChatProvider::request_body(const ChatRequest& request) {
  json messages = json::array();
  if (!request.system_prompt.empty()) messages.push_back({{"role", "system"}, {"content", request.system_prompt}});
  messages.push_back({{"role", "user"}, {"content", request.user_prompt}});
  return {{"model", request.model_name},
          {"messages", messages},
          {"temperature", request.temperature},
          {"max_tokens", request.max_tokens}};
}

ChatResponse OpenAiChatProvider::chat(const ChatRequest& request) {
  ChatRequest req = request;
  if (req.model_name.empty()) req.model_name = model_name();
  auto result = client_->post("/chat/completions", request_body(req));
  ChatResponse out;
  try {
    const auto& choice = result.body.at("choices").at(0);
    const auto& content = choice.at("message").at("content");
    if (!content.is_string()) throw Error(ErrorCode::MalformedProviderResponse, "message content is not text");
    out.text = content.get<std::string>();
    if (auto u = result.body.find("usage"); u != result.body.end() && u->is_object()) {
      out.usage.prompt_tokens = u->value("prompt_tokens", 0);
      out.usage.completion_tokens = u->value("completion_tokens", 0);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedProviderResponse, std::string("unexpected chat response: ") + e.what());
  }
  out.latency_ms = result.latency_ms;
  out.retries = result.retries;
  return out;
}

EmbeddingMatrix HttpEmbeddingProvider::embed(std::string_view text) {
  auto result = client_->post("/embed", {{"model", client_->config().model}, {"input", std::string(text)}});
  EmbeddingMatrix m;
  try {
    m.tokens = result.body.at("tokens").get<std::vector<std::string>>();
    m.vectors = result.body.at("vectors").get<std::vector<std::vector<double>>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedProviderResponse, std::string("unexpected embedding response: ") + e.what());
  }
  m.validate();
  return m;
}

NliJudgment HttpNliProvider::nli(std::string_view premise, std::string_view hypothesis) {
  auto result = client_->post("/nli", {{"model", client_->config().model},
                                       {"premise", std::string(premise)},
                                       {"hypothesis", std::string(hypothesis)}});
  NliJudgment j;
  try {
    j.entailment = result.body.at("entailment").get<double>();
    j.contradiction = result.body.at("contradiction").get<double>();
    j.neutral = result.body.at("neutral").get<double>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedProviderResponse, std::string("unexpected NLI response: ") + e.what());
  }
  j.validate();
  return j;
}

}  // namespace sumeval::providers
