#include "picl/llm.hpp"

#include <stdexcept>

#include "json.hpp"
#include "picl/http.hpp"
#include "picl/prompt.hpp"
#include "picl/util.hpp"

namespace picl::llm {

namespace {

std::string cache_key(const std::string& model, const std::string& prompt) {
  const std::string forward = model + '\0' + prompt;
  const std::string backward = prompt + '\0' + model;
  return to_hex(fnv1a64(forward)) + to_hex(fnv1a64(backward));
}

class OracleBase : public ChatClient {
 public:
  OracleBase(const corpus::Dataset& dataset, DropRule drop)
      : schema_(dataset.schema), drop_(std::move(drop)) {
    for (const auto& s : dataset.test) {
      gold_by_text_.emplace(s.text, s.gold);
    }
  }

  CompletionResult complete(const CompletionRequest& request) override {
    const std::string query = query_text_of_prompt(request.prompt);
    auto it = gold_by_text_.find(query);
    if (it == gold_by_text_.end()) {
      throw std::runtime_error("oracle: no test sentence matches input '" + query + "'");
    }
    std::vector<corpus::GoldMention> kept;
    for (const auto& m : it->second) {
      if (!drop_ || !drop_(m)) kept.push_back(m);
    }
    CompletionResult result;
    result.text = prompt::serialize_output(kept, schema_);
    return result;
  }

 private:
  std::vector<corpus::EntityType> schema_;
  DropRule drop_;
  // first occurrence wins for duplicate texts
  std::unordered_map<std::string, std::vector<corpus::GoldMention>> gold_by_text_;
};

}  // namespace

CompletionResult complete(ChatClient& client, const CompletionRequest& request) {
  if (request.prompt.empty()) throw std::invalid_argument("complete: empty prompt");
  return client.complete(request);
}

std::string build_request_body(const CompletionRequest& request) {
  nlohmann::ordered_json body;
  body["model"] = request.model;
  body["messages"] = nlohmann::ordered_json::array(
      {{{"role", "user"}, {"content", request.prompt}}});
  body["temperature"] = 0;  // greedy decoding, always
  body["max_tokens"] = request.max_output_tokens;
  return body.dump();
}

std::string parse_response_text(const std::string& response_json) {
  nlohmann::json j = nlohmann::json::parse(response_json, nullptr, false);
  if (j.is_discarded()) throw std::runtime_error("completion response is not JSON");
  if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
    throw std::runtime_error("completion response has no choices");
  }
  const auto& first = j["choices"][0];
  if (!first.contains("message") || !first["message"].contains("content") ||
      !first["message"]["content"].is_string()) {
    throw std::runtime_error("completion response missing message content");
  }
  return first["message"]["content"].get<std::string>();
}

HttpChatClient::HttpChatClient(HttpClientConfig config) : config_(std::move(config)) {
  if (config_.url.empty()) throw std::invalid_argument("chat client needs a URL");
}

CompletionResult HttpChatClient::complete(const CompletionRequest& request) {
  const auto start = std::chrono::steady_clock::now();
  const std::string response = http_post_json(config_.url, build_request_body(request),
                                              config_.api_key, config_.max_attempts,
                                              config_.backoff_ms);
  CompletionResult result;
  result.text = parse_response_text(response);
  result.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - start);
  return result;
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::optional<std::string> ResponseCache::get(const std::string& model,
                                              const std::string& prompt) {
  const std::string key = cache_key(model, prompt);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = memory_.find(key);
    if (it != memory_.end()) return it->second;
  }
  if (dir_.empty()) return std::nullopt;
  const auto path = dir_ / (key + ".json");
  if (!std::filesystem::exists(path)) return std::nullopt;
  nlohmann::json j = nlohmann::json::parse(read_text_file(path), nullptr, false);
  if (j.is_discarded()) throw std::runtime_error("corrupt response cache entry: " + path.string());
  if (j.value("model", "") != model || j.value("prompt_fnv", "") != to_hex(fnv1a64(prompt))) {
    throw std::runtime_error("response cache key collision at " + path.string());
  }
  std::string text = j.value("text", "");
  {
    std::lock_guard<std::mutex> lock(mutex_);
    memory_.emplace(key, text);
  }
  return text;
}

void ResponseCache::put(const std::string& model, const std::string& prompt,
                        const std::string& text) {
  const std::string key = cache_key(model, prompt);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    if (!memory_.emplace(key, text).second) return;  // append-only
  }
  if (dir_.empty()) return;
  const auto path = dir_ / (key + ".json");
  if (std::filesystem::exists(path)) return;
  nlohmann::ordered_json j;
  j["model"] = model;
  j["prompt_fnv"] = to_hex(fnv1a64(prompt));
  j["text"] = text;
  write_text_file_atomic(path, j.dump());
}

CachedClient::CachedClient(std::unique_ptr<ChatClient> inner, std::shared_ptr<ResponseCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {
  if (!inner_) throw std::invalid_argument("CachedClient needs an inner client");
  if (!cache_) cache_ = std::make_shared<ResponseCache>();
}

CompletionResult CachedClient::complete(const CompletionRequest& request) {
  const std::string key = cache_key(request.model, request.prompt);
  {
    std::unique_lock<std::mutex> lock(mutex_);
    for (;;) {
      if (auto hit = cache_->get(request.model, request.prompt)) {
        CompletionResult result;
        result.text = std::move(*hit);
        result.cached = true;
        return result;
      }
      if (!inflight_.count(key)) {
        inflight_.insert(key);
        break;
      }
      cv_.wait(lock);
    }
  }
  try {
    CompletionResult result = inner_->complete(request);
    {
      std::lock_guard<std::mutex> lock(mutex_);
      cache_->put(request.model, request.prompt, result.text);
      inflight_.erase(key);
    }
    cv_.notify_all();
    return result;
  } catch (...) {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      inflight_.erase(key);
    }
    cv_.notify_all();
    throw;
  }
}

std::unique_ptr<ChatClient> gold_oracle(const corpus::Dataset& dataset) {
  return std::make_unique<OracleBase>(dataset, nullptr);
}

std::unique_ptr<ChatClient> corruptor_oracle(const corpus::Dataset& dataset, DropRule drop) {
  if (!drop) throw std::invalid_argument("corruptor_oracle needs a drop rule");
  return std::make_unique<OracleBase>(dataset, std::move(drop));
}

DropRule drop_rule_by_name(const std::string& name) {
  if (name == "drop_odd_len") {
    return [](const corpus::GoldMention& m) { return m.surface.size() % 2 == 1; };
  }
  throw std::invalid_argument("unknown drop rule '" + name + "'");
}

ScriptedClient::ScriptedClient(std::deque<std::string> responses)
    : responses_(std::move(responses)) {}

CompletionResult ScriptedClient::complete(const CompletionRequest&) {
  std::lock_guard<std::mutex> lock(mutex_);
  if (responses_.empty()) throw std::runtime_error("scripted client: response queue exhausted");
  CompletionResult result;
  result.text = std::move(responses_.front());
  responses_.pop_front();
  return result;
}

std::string query_text_of_prompt(const std::string& prompt) {
  static constexpr std::string_view kMarker = "Input: ";
  size_t pos = std::string::npos;
  size_t from = 0;
  for (;;) {
    const size_t found = prompt.find(kMarker, from);
    if (found == std::string::npos) break;
    if (found == 0 || prompt[found - 1] == '\n') pos = found;
    from = found + 1;
  }
  if (pos == std::string::npos) {
    throw std::runtime_error("prompt has no 'Input: ' line");
  }
  std::string text = prompt.substr(pos + kMarker.size());
  const size_t newline = text.find('\n');
  if (newline != std::string::npos) text.resize(newline);
  return text;
}

}  // namespace picl::llm
