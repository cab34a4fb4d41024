#pragma once

#include <string>

namespace picl {

/// POST a JSON body and return the response body on 2xx. Transient failures
/// (connect errors, timeouts, 408/429/5xx) are retried with exponential
/// backoff up to max_attempts; anything else throws immediately. An empty
/// bearer_token sends no Authorization header.
std::string http_post_json(const std::string& url, const std::string& body,
                           const std::string& bearer_token, int max_attempts, int backoff_ms);

/// Splits "scheme://host[:port]/path" into origin and path ("/" when absent).
std::pair<std::string, std::string> split_url(const std::string& url);

}  // namespace picl
