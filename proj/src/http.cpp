#include "picl/http.hpp"

#include <chrono>
#include <stdexcept>
#include <thread>

#ifdef PICL_HAVE_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include "httplib.h"

namespace picl {

std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw std::invalid_argument("URL missing scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

namespace {

bool transient_status(int status) {
  return status == 408 || status == 429 || (status >= 500 && status < 600);
}

}  // namespace

std::string http_post_json(const std::string& url, const std::string& body,
                           const std::string& bearer_token, int max_attempts, int backoff_ms) {
  const auto [origin, path] = split_url(url);
  if (max_attempts < 1) max_attempts = 1;

  std::string last_error;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    httplib::Client client(origin);
    client.set_connection_timeout(30, 0);
    client.set_read_timeout(300, 0);
    httplib::Headers headers;
    if (!bearer_token.empty()) {
      headers.emplace("Authorization", "Bearer " + bearer_token);
    }
    auto res = client.Post(path, headers, body, "application/json");
    if (res && res->status >= 200 && res->status < 300) {
      return res->body;
    }
    bool retryable;
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      retryable = true;
    } else {
      last_error = "HTTP " + std::to_string(res->status) +
                   (res->body.empty() ? "" : (": " + res->body.substr(0, 200)));
      retryable = transient_status(res->status);
    }
    if (!retryable) {
      throw std::runtime_error("request to " + url + " failed (" + last_error + ")");
    }
    if (attempt < max_attempts && backoff_ms > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms << (attempt - 1)));
    }
  }
  throw std::runtime_error("request to " + url + " failed after " +
                           std::to_string(max_attempts) + " attempts (" + last_error + ")");
}

}  // namespace picl
