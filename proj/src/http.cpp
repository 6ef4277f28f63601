#include "serouter/http.hpp"

#include <httplib.h>

#include "serouter/errors.hpp"

namespace serouter {

ParsedUrl parse_http_url(const std::string& url) {
  const std::string prefix = "http://";
  if (url.rfind(prefix, 0) != 0 || url.size() == prefix.size()) {
    throw Error(ErrorCode::InvalidArgument, "unsupported URL '" + url + "'");
  }
  auto slash = url.find('/', prefix.size());
  ParsedUrl parsed;
  parsed.scheme_host_port = url.substr(0, slash);
  parsed.path = slash == std::string::npos ? "/" : url.substr(slash);
  auto host = parsed.scheme_host_port.substr(prefix.size());
  if (host.empty() || host.front() == ':') throw Error(ErrorCode::InvalidArgument, "URL has no host '" + url + "'");
  return parsed;
}

HttpOutcome post_json(const EndpointConfig& endpoint, const nlohmann::json& body) {
  ParsedUrl url = parse_http_url(endpoint.url);
  const std::string payload = body.dump();
  const int attempts = std::max(1, endpoint.retries);
  const time_t sec = endpoint.timeout_ms / 1000;
  const time_t usec = (endpoint.timeout_ms % 1000) * 1000;

  HttpOutcome outcome;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    outcome = HttpOutcome{};
    outcome.attempts = attempt;
    httplib::Client client(url.scheme_host_port);
    client.set_connection_timeout(sec, usec);
    client.set_read_timeout(sec, usec);
    client.set_write_timeout(sec, usec);
    auto res = client.Post(url.path, payload, "application/json");
    if (!res) {
      auto err = res.error();
      outcome.status = (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout)
                           ? HttpOutcome::Status::Timeout
                           : HttpOutcome::Status::TransportError;
      outcome.detail = httplib::to_string(err);
      continue;
    }
    outcome.http_status = res->status;
    if (res->status >= 500) {
      outcome.status = HttpOutcome::Status::BadStatus;
      outcome.detail = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status >= 400) {
      outcome.status = HttpOutcome::Status::BadStatus;
      outcome.detail = "HTTP " + std::to_string(res->status);
      return outcome;
    }
    auto parsed = nlohmann::json::parse(res->body, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object()) {
      outcome.status = HttpOutcome::Status::BadPayload;
      outcome.detail = "response is not a JSON object";
      continue;
    }
    outcome.body = std::move(parsed);
    return outcome;
  }
  return outcome;
}

}  // namespace serouter
