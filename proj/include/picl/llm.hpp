#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>

#include "picl/corpus.hpp"

namespace picl::llm {

/// Decoding is always greedy: every outgoing request carries temperature 0.
struct CompletionRequest {
  std::string model;
  std::string prompt;
  int max_output_tokens = 512;
  static constexpr double temperature = 0.0;
};

struct CompletionResult {
  std::string text;  // verbatim, untrimmed
  std::chrono::milliseconds latency{0};
  bool cached = false;
};

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual CompletionResult complete(const CompletionRequest& request) = 0;
};

/// Entry point used by the runner; validates the request first.
CompletionResult complete(ChatClient& client, const CompletionRequest& request);

/// Chat-completions wire body: {"model", "messages": [{"role": "user",
/// "content": prompt}], "temperature": 0, "max_tokens"}. Pure; exposed for
/// wire-contract tests.
std::string build_request_body(const CompletionRequest& request);

/// First choice's message content; throws on a malformed payload.
std::string parse_response_text(const std::string& response_json);

struct HttpClientConfig {
  std::string url;  // full endpoint, e.g. https://host/v1/chat/completions
  std::string api_key;
  int max_attempts = 3;
  int backoff_ms = 200;
};

class HttpChatClient final : public ChatClient {
 public:
  explicit HttpChatClient(HttpClientConfig config);
  CompletionResult complete(const CompletionRequest& request) override;

 private:
  HttpClientConfig config_;
};

/// (model, prompt)-keyed response store; append-only, never evicts. Disk
/// entries are one JSON file per key, written atomically.
class ResponseCache {
 public:
  ResponseCache() = default;  // memory only
  explicit ResponseCache(std::filesystem::path dir);

  std::optional<std::string> get(const std::string& model, const std::string& prompt);
  void put(const std::string& model, const std::string& prompt, const std::string& text);

 private:
  std::filesystem::path dir_;
  std::mutex mutex_;
  std::unordered_map<std::string, std::string> memory_;
};

/// Caches an inner client. Concurrent requests for the same key are
/// single-flighted so a (model, prompt) pair reaches the network at most
/// once per process, and never again once the cache holds it.
class CachedClient final : public ChatClient {
 public:
  CachedClient(std::unique_ptr<ChatClient> inner, std::shared_ptr<ResponseCache> cache);
  CompletionResult complete(const CompletionRequest& request) override;

 private:
  std::unique_ptr<ChatClient> inner_;
  std::shared_ptr<ResponseCache> cache_;
  std::mutex mutex_;
  std::condition_variable cv_;
  std::set<std::string> inflight_;
};

/// Offline double: resolves the prompt's trailing "Input:" line to the
/// matching test sentence and answers with its canonical gold JSON.
std::unique_ptr<ChatClient> gold_oracle(const corpus::Dataset& dataset);

/// Gold oracle with a deterministic defect: mentions matching `drop` are
/// omitted from the answer. Used to validate the scorer end to end.
using DropRule = std::function<bool(const corpus::GoldMention&)>;
std::unique_ptr<ChatClient> corruptor_oracle(const corpus::Dataset& dataset, DropRule drop);

/// Named rule for config files: "drop_odd_len" drops every mention whose
/// surface byte length is odd.
DropRule drop_rule_by_name(const std::string& name);

/// Replays queued responses in order; throws when exhausted.
class ScriptedClient final : public ChatClient {
 public:
  explicit ScriptedClient(std::deque<std::string> responses);
  CompletionResult complete(const CompletionRequest& request) override;

 private:
  std::mutex mutex_;
  std::deque<std::string> responses_;
};

/// Text after the prompt's last line-initial "Input: " marker (the query).
std::string query_text_of_prompt(const std::string& prompt);

}  // namespace picl::llm
