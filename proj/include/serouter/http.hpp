#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace serouter {

struct EndpointConfig {
  std::string url;  // http://host:port/path
  int timeout_ms = 10'000;
  int retries = 3;  // total attempts
};

struct HttpOutcome {
  enum class Status { Ok, Timeout, TransportError, BadStatus, BadPayload };
  Status status = Status::Ok;
  int http_status = 0;
  nlohmann::json body;
  std::string detail;
  int attempts = 0;

  bool ok() const { return status == Status::Ok; }
};

// POSTs a JSON body, retrying on transport errors, timeouts and 5xx replies.
// 4xx replies are not retried. Never throws for network problems; the caller
// maps the outcome onto its own error code.
HttpOutcome post_json(const EndpointConfig& endpoint, const nlohmann::json& body);

struct ParsedUrl {
  std::string scheme_host_port;
  std::string path;
};
// Throws InvalidArgument for anything other than http://host[:port][/path].
ParsedUrl parse_http_url(const std::string& url);

}  // namespace serouter
