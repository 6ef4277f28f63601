#pragma once

#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "serouter/artifact.hpp"
#include "serouter/core.hpp"
#include "serouter/embed.hpp"
#include "serouter/http.hpp"

namespace httplib {
class Server;
}

namespace serouter {

struct GatewayConfig {
  std::string listen_host = "127.0.0.1";
  int listen_port = 8080;  // 0 picks a free port
  std::string artifact_path;
  double threshold = 0.5;
  ModelRef strong;
  ModelRef weak;
  EndpointConfig strong_backend;
  EndpointConfig weak_backend;
  // "mock" or an http:// URL.
  std::string embedding_provider = "mock";
  EndpointConfig embedding_endpoint;
  int max_concurrent_upstream = 16;

  // Validates threshold range, URLs and the model pair.
  void validate() const;

  static GatewayConfig from_json(const nlohmann::json& j);
  // Reads a JSON config file, then applies SEROUTER_LISTEN (host:port) and
  // SEROUTER_ARTIFACT overrides from the environment.
  static GatewayConfig load(const std::string& path);
};

nlohmann::json model_ref_to_json(const ModelRef& model);
ModelRef model_ref_from_json(const nlohmann::json& j, Tier tier);

// Query id used when a request does not carry one; the offline `route`
// command derives ids the same way so both paths agree for the Random router.
std::string prompt_query_id(std::string_view prompt);

struct HttpReply {
  int status = 200;
  nlohmann::json body;
};

class Gateway {
 public:
  Gateway(GatewayConfig config, std::shared_ptr<const Embedder> embedder);
  ~Gateway();
  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  // Loads config.artifact_path; the new artifact becomes visible atomically.
  void load_artifact();
  bool loaded() const;

  HttpReply route(const nlohmann::json& request) const;
  HttpReply complete(const nlohmann::json& request) const;
  HttpReply health() const;

  // Binds and serves on a background thread; returns the bound port.
  int start();
  void stop();

  const GatewayConfig& config() const { return config_; }

 private:
  struct Loaded {
    std::unique_ptr<Router> router;
    ArtifactHeader header;
  };

  std::shared_ptr<const Loaded> snapshot() const;
  // Either a decision or an error reply.
  HttpReply decide(const nlohmann::json& request, const Loaded& loaded, RoutingDecision* decision) const;

  GatewayConfig config_;
  ModelPair pair_;
  std::shared_ptr<const Embedder> embedder_;
  mutable std::mutex artifact_mutex_;
  std::shared_ptr<const Loaded> artifact_;
  mutable std::counting_semaphore<4096> upstream_slots_;
  std::unique_ptr<httplib::Server> server_;
  std::thread server_thread_;
};

std::shared_ptr<const Embedder> make_embedder(const std::string& provider, const EndpointConfig& endpoint,
                                              std::size_t expected_dim = 0);

}  // namespace serouter
