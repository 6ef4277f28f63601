#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "serouter/core.hpp"
#include "serouter/eval.hpp"
#include "serouter/http.hpp"
#include "serouter/preference.hpp"
#include "serouter/routers.hpp"
#include "serouter/synthetic.hpp"

namespace serouter {

// Each provider is "mock" or an http:// endpoint.
struct ProviderSettings {
  std::string generation = "mock";
  std::string nli = "mock";
  std::string embedding = "mock";
  std::string judge = "mock";
  int timeout_ms = 10'000;
  int retries = 3;

  EndpointConfig endpoint(const std::string& url) const { return {url, timeout_ms, retries}; }
};

struct PipelinePaths {
  std::string prompts;
  std::string bench_prompts;
  std::string generations;
  std::string clusterings;
  std::string se;
  std::string prefs;
  std::string embeddings;
  std::string bench;
  std::string bench_embeddings;
  std::string artifacts;  // directory
  std::string reports;    // directory
};

struct Manifest {
  std::uint64_t seed = 0;
  double tau = kDefaultTau;
  std::size_t samples_per_query = 10;
  ModelRef strong;
  ModelRef weak;
  std::string strong_endpoint;  // generation backends, used when providers.generation != "mock"
  std::string weak_endpoint;
  ProviderSettings providers;
  MockTopicTable mock_topics = default_mock_topics();
  PipelinePaths paths;
  SwConfig sw;
  MfConfig mf;
  MlpConfig mlp;
  std::size_t knn_k = 1;
  double route_threshold = 0.5;
  CptReading cpt_reading = CptReading::GapRecovery;
  std::vector<RouterKind> judge_routers{RouterKind::SW, RouterKind::MF, RouterKind::KNN};
  double judge_x = 50.0;

  // Relative paths resolve against the manifest's directory.
  static Manifest load(const std::string& path);
  static Manifest from_json(const nlohmann::json& j, const std::string& base_dir);

  void set_seed(std::uint64_t seed);
  void force_mock();
  ModelPair pair() const { return validate_model_pair(strong, weak); }

  std::string artifact_path(RouterKind kind) const;
  std::string curve_path(RouterKind kind) const;
  std::string summary_path(RouterKind kind) const;
  std::string judge_path() const;
};

std::string router_slug(RouterKind kind);  // "sw", "mf", ...

std::vector<PromptRow> load_prompts(const std::string& path);
std::vector<BenchmarkItem> load_benchmark(const std::string& path);
std::vector<PreferenceRecord> load_preferences(const std::string& path);

// Pipeline stages. Each reads its declared upstream files (checking stage
// tags) and writes byte-identical output for identical inputs and seeds.
void run_sample(const Manifest& m);
void run_cluster(const Manifest& m);
void run_se(const Manifest& m);
DatasetStats run_build_prefs(const Manifest& m);
void run_embed(const Manifest& m);
void run_train(const Manifest& m, RouterKind kind);
CostQualityCurve run_sweep(const Manifest& m, RouterKind kind);
// Writes the summary JSON and returns CPT at x_percent.
double run_cpt(const Manifest& m, RouterKind kind, double x_percent, CptSummary* summary = nullptr);
nlohmann::json run_judge(const Manifest& m);
// Offline decision for one prompt, matching the gateway's /v1/route body.
nlohmann::json run_route(const Manifest& m, RouterKind kind, const std::string& prompt);

// sample -> cluster -> se -> build-prefs -> embed -> train/sweep/cpt for every router.
void run_all(const Manifest& m);

}  // namespace serouter
