#include "serouter/gateway.hpp"

#include <cstdlib>
#include <cstdio>

#include <httplib.h>

#include "serouter/errors.hpp"
#include "serouter/jsonl.hpp"
#include "serouter/text.hpp"

namespace serouter {
namespace {

Usd price_from_json(const nlohmann::json& j) {
  if (j.is_string()) return Usd::parse(j.get<std::string>());
  if (j.is_number()) return Usd::from_double(j.get<double>());
  throw Error(ErrorCode::InvalidArgument, "price must be a decimal string or number");
}

std::pair<std::string, int> split_listen(const std::string& listen) {
  auto colon = listen.rfind(':');
  if (colon == std::string::npos || colon == 0) throw Error(ErrorCode::InvalidArgument, "listen must be host:port");
  int port = 0;
  try {
    port = std::stoi(listen.substr(colon + 1));
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, "bad port in '" + listen + "'");
  }
  if (port < 0 || port > 65535) throw Error(ErrorCode::InvalidArgument, "port out of range in '" + listen + "'");
  return {listen.substr(0, colon), port};
}

HttpReply error_reply(int status, const std::string& message) {
  return HttpReply{status, nlohmann::json{{"error", message}}};
}

}  // namespace

nlohmann::json model_ref_to_json(const ModelRef& model) {
  return {{"id", model.id},
          {"price_per_input_token", model.price_per_input_token.to_string()},
          {"price_per_output_token", model.price_per_output_token.to_string()}};
}

ModelRef model_ref_from_json(const nlohmann::json& j, Tier tier) {
  try {
    return ModelRef::make(j.at("id").get<std::string>(), tier, price_from_json(j.at("price_per_input_token")),
                          price_from_json(j.at("price_per_output_token")));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed model entry: ") + e.what());
  }
}

std::string prompt_query_id(std::string_view prompt) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "q-%016llx", static_cast<unsigned long long>(fnv1a64(prompt)));
  return buf;
}

void GatewayConfig::validate() const {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw Error(ErrorCode::InvalidArgument, "threshold must be in [0, 1]");
  if (max_concurrent_upstream < 1 || max_concurrent_upstream > 4096) {
    throw Error(ErrorCode::InvalidArgument, "max_concurrent_upstream must be in [1, 4096]");
  }
  validate_model_pair(strong, weak);
  for (const auto* ep : {&strong_backend, &weak_backend}) {
    if (!ep->url.empty()) parse_http_url(ep->url);
  }
  if (embedding_provider != "mock") parse_http_url(embedding_endpoint.url);
}

GatewayConfig GatewayConfig::from_json(const nlohmann::json& j) {
  GatewayConfig cfg;
  try {
    if (j.contains("listen")) std::tie(cfg.listen_host, cfg.listen_port) = split_listen(j.at("listen").get<std::string>());
    cfg.artifact_path = j.value("artifact", std::string{});
    cfg.threshold = j.value("threshold", 0.5);
    cfg.max_concurrent_upstream = j.value("max_concurrent_upstream", 16);
    const int timeout_ms = j.value("timeout_ms", 10'000);
    const int retries = j.value("retries", 3);
    const auto& models = j.at("models");
    cfg.strong = model_ref_from_json(models.at("strong"), Tier::Strong);
    cfg.weak = model_ref_from_json(models.at("weak"), Tier::Weak);
    cfg.strong_backend = {models.at("strong").value("endpoint", std::string{}), timeout_ms, retries};
    cfg.weak_backend = {models.at("weak").value("endpoint", std::string{}), timeout_ms, retries};
    cfg.embedding_provider = j.value("embedding", std::string("mock"));
    cfg.embedding_endpoint = {cfg.embedding_provider == "mock" ? std::string{} : cfg.embedding_provider, timeout_ms,
                              retries};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed gateway config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

GatewayConfig GatewayConfig::load(const std::string& path) {
  auto j = nlohmann::json::parse(read_text_file(path), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::InvalidArgument, path + " is not valid JSON");
  if (const char* listen = std::getenv("SEROUTER_LISTEN")) j["listen"] = listen;
  if (const char* artifact = std::getenv("SEROUTER_ARTIFACT")) j["artifact"] = artifact;
  return from_json(j);
}

std::shared_ptr<const Embedder> make_embedder(const std::string& provider, const EndpointConfig& endpoint,
                                              std::size_t expected_dim) {
  if (provider == "mock") return std::make_shared<MockEmbedder>(expected_dim ? expected_dim : MockEmbedder::kDefaultDim);
  return std::make_shared<HttpEmbedder>(endpoint, expected_dim);
}

// ---------------------------------------------------------------------------

Gateway::Gateway(GatewayConfig config, std::shared_ptr<const Embedder> embedder)
    : config_(std::move(config)),
      pair_(validate_model_pair(config_.strong, config_.weak)),
      embedder_(std::move(embedder)),
      upstream_slots_(config_.max_concurrent_upstream) {
  config_.validate();
}

Gateway::~Gateway() { stop(); }

void Gateway::load_artifact() {
  auto loaded = std::make_shared<Loaded>();
  loaded->router = load_model(config_.artifact_path, &loaded->header);
  std::lock_guard lock(artifact_mutex_);
  artifact_ = std::move(loaded);
}

std::shared_ptr<const Gateway::Loaded> Gateway::snapshot() const {
  std::lock_guard lock(artifact_mutex_);
  return artifact_;
}

bool Gateway::loaded() const { return snapshot() != nullptr; }

HttpReply Gateway::decide(const nlohmann::json& request, const Loaded& loaded, RoutingDecision* decision) const {
  if (!request.is_object()) return error_reply(400, "request body must be a JSON object");
  auto prompt_it = request.find("prompt");
  if (prompt_it == request.end() || !prompt_it->is_string()) return error_reply(400, "missing string field 'prompt'");
  const std::string prompt = prompt_it->get<std::string>();
  if (trim(prompt).empty()) return error_reply(400, "prompt is empty");
  std::string query_id = request.contains("id") && request["id"].is_string() ? request["id"].get<std::string>()
                                                                             : prompt_query_id(prompt);
  double p = 0.0;
  try {
    static const EmbeddingVector kUnused{{0.0}};
    if (loaded.router->embedding_dim() == 0) {
      p = loaded.router->predict(query_id, kUnused);
    } else {
      EmbeddingVector q = embedder_->embed(prompt);
      if (q.dim() != loaded.router->embedding_dim()) {
        return error_reply(502, "embedding provider returned dim " + std::to_string(q.dim()) + ", artifact expects " +
                                    std::to_string(loaded.router->embedding_dim()));
      }
      p = loaded.router->predict(query_id, q);
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ProviderFailure || e.code() == ErrorCode::DimensionMismatch) {
      return error_reply(502, e.what());
    }
    return error_reply(500, e.what());
  }
  *decision = decide_route(pair_, std::move(query_id), p, config_.threshold, loaded.router->kind());
  return HttpReply{200, {}};
}

HttpReply Gateway::route(const nlohmann::json& request) const {
  auto loaded = snapshot();
  if (!loaded) return error_reply(503, "router artifact not loaded");
  RoutingDecision decision;
  HttpReply reply = decide(request, *loaded, &decision);
  if (reply.status != 200) return reply;
  reply.body = {{"chosen_model", decision.chosen},
                {"p_win_strong", decision.p_win_strong},
                {"threshold", decision.threshold},
                {"router_kind", to_string(decision.router_kind)}};
  return reply;
}

HttpReply Gateway::complete(const nlohmann::json& request) const {
  auto loaded = snapshot();
  if (!loaded) return error_reply(503, "router artifact not loaded");
  RoutingDecision decision;
  HttpReply reply = decide(request, *loaded, &decision);
  if (reply.status != 200) return reply;
  const bool strong = decision.chosen == pair_.strong().id;
  const ModelRef& model = strong ? pair_.strong() : pair_.weak();
  const EndpointConfig& backend = strong ? config_.strong_backend : config_.weak_backend;
  if (backend.url.empty()) return error_reply(502, "no backend configured for " + model.id);

  HttpOutcome outcome;
  upstream_slots_.acquire();
  try {
    outcome = post_json(backend, nlohmann::json{{"prompt", request.at("prompt")}});
  } catch (...) {
    upstream_slots_.release();
    throw;
  }
  upstream_slots_.release();
  if (!outcome.ok()) {
    return error_reply(outcome.status == HttpOutcome::Status::Timeout ? 504 : 502,
                       "backend " + model.id + " failed after " + std::to_string(outcome.attempts) +
                           " attempts: " + outcome.detail);
  }
  const auto& body = outcome.body;
  if (!body.contains("text") || !body["text"].is_string() || !body.contains("in_tokens") ||
      !body["in_tokens"].is_number_integer() || !body.contains("out_tokens") ||
      !body["out_tokens"].is_number_integer()) {
    return error_reply(502, "backend " + model.id + " returned a malformed completion");
  }
  const auto in_tokens = body["in_tokens"].get<std::int64_t>();
  const auto out_tokens = body["out_tokens"].get<std::int64_t>();
  if (in_tokens < 0 || out_tokens < 0) return error_reply(502, "backend reported negative token counts");
  reply.body = {{"chosen_model", model.id},
                {"response_text", body["text"]},
                {"usage",
                 {{"in_tokens", in_tokens},
                  {"out_tokens", out_tokens},
                  {"cost_usd", model.cost(in_tokens, out_tokens).to_string()}}}};
  return reply;
}

HttpReply Gateway::health() const {
  auto loaded = snapshot();
  if (!loaded) return HttpReply{503, {{"status", "loading"}}};
  return HttpReply{200,
                   {{"status", "ok"},
                    {"router_kind", to_string(loaded->header.router_kind)},
                    {"artifact_checksum", loaded->header.checksum}}};
}

int Gateway::start() {
  server_ = std::make_unique<httplib::Server>();
  auto send = [](httplib::Response& res, const HttpReply& reply) {
    res.status = reply.status;
    res.set_content(reply.body.dump(), "application/json");
  };
  auto json_handler = [this, send](HttpReply (Gateway::*handler)(const nlohmann::json&) const) {
    return [this, send, handler](const httplib::Request& req, httplib::Response& res) {
      auto body = nlohmann::json::parse(req.body, nullptr, false);
      if (body.is_discarded()) {
        send(res, error_reply(400, "request body is not valid JSON"));
        return;
      }
      try {
        send(res, (this->*handler)(body));
      } catch (const std::exception& e) {
        send(res, error_reply(500, e.what()));
      }
    };
  };
  server_->Post("/v1/route", json_handler(&Gateway::route));
  server_->Post("/v1/complete", json_handler(&Gateway::complete));
  server_->Get("/healthz", [this, send](const httplib::Request&, httplib::Response& res) { send(res, health()); });

  int port = config_.listen_port;
  if (port == 0) {
    port = server_->bind_to_any_port(config_.listen_host);
  } else if (!server_->bind_to_port(config_.listen_host, port)) {
    port = -1;
  }
  if (port < 0) throw Error(ErrorCode::Io, "cannot bind " + config_.listen_host + ":" + std::to_string(config_.listen_port));
  server_thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port;
}

void Gateway::stop() {
  if (server_) server_->stop();
  if (server_thread_.joinable()) server_thread_.join();
  server_.reset();
}

}  // namespace serouter
