#include "serouter/pipeline.hpp"

#include <filesystem>
#include <algorithm>
#include <map>
#include <memory>

#include "serouter/artifact.hpp"
#include "serouter/embed.hpp"
#include "serouter/errors.hpp"
#include "serouter/gateway.hpp"
#include "serouter/jsonl.hpp"
#include "serouter/text.hpp"
#include "serouter/uncertainty.hpp"

namespace serouter {
namespace fs = std::filesystem;

namespace {

constexpr std::string_view kStageSample = "sample";
constexpr std::string_view kStageBenchmark = "benchmark";
constexpr std::string_view kStageCluster = "cluster";
constexpr std::string_view kStageSe = "se";
constexpr std::string_view kStagePrefs = "build-prefs";

std::string resolve(const std::string& base, const std::string& path) {
  if (path.empty()) return path;
  fs::path p(path);
  return p.is_absolute() ? p.string() : (fs::path(base) / p).lexically_normal().string();
}

void require_file(const std::string& path, std::string_view what) {
  if (path.empty()) throw Error(ErrorCode::MissingInput, std::string(what) + " path is not set in the manifest");
  if (!fs::exists(path)) throw Error(ErrorCode::MissingInput, path);
}

Tier parse_tier(const std::string& text) {
  if (text == "strong") return Tier::Strong;
  if (text == "weak") return Tier::Weak;
  throw Error(ErrorCode::InvalidArgument, "unknown tier '" + text + "'");
}

nlohmann::json sample_to_json(const GenerationSample& s) {
  return {{"text", s.text}, {"seq_logprob", s.seq_logprob}, {"token_count", s.token_count}};
}

GenerationSample sample_from_json(const nlohmann::json& j) {
  return GenerationSample::make(j.at("text").get<std::string>(), j.at("seq_logprob").get<double>(),
                                j.at("token_count").get<int>());
}

struct GenerationRow {
  std::string query_id;
  Tier tier;
  std::string model;
  std::vector<GenerationSample> samples;
};

std::vector<GenerationRow> load_generations(const std::string& path) {
  require_file(path, "generations");
  std::vector<GenerationRow> rows;
  for (const auto& j : read_jsonl(path, kStageSample).rows) {
    GenerationRow row{j.at("query_id").get<std::string>(), parse_tier(j.at("tier").get<std::string>()),
                      j.at("model").get<std::string>(), {}};
    for (const auto& s : j.at("samples")) row.samples.push_back(sample_from_json(s));
    if (row.samples.empty()) throw Error(ErrorCode::EmptyInput, "no samples for query " + row.query_id);
    rows.push_back(std::move(row));
  }
  return rows;
}

// Backend sampling: {"prompt","temperature","seed"} -> {"text","in_tokens","out_tokens"[,"seq_logprob"]}.
struct SampledResponse {
  GenerationSample sample;
  TokenCounts tokens;
};

SampledResponse sample_remote(const EndpointConfig& endpoint, const std::string& prompt, std::uint64_t seed) {
  HttpOutcome outcome = post_json(endpoint, {{"prompt", prompt}, {"temperature", 1.0}, {"seed", seed}});
  if (!outcome.ok()) {
    throw Error(ErrorCode::ProviderFailure, "generation backend " + endpoint.url + " failed: " + outcome.detail);
  }
  const auto& b = outcome.body;
  if (!b.contains("text") || !b["text"].is_string()) {
    throw Error(ErrorCode::ProviderFailure, "generation backend returned no 'text'");
  }
  TokenCounts tokens{b.value("in_tokens", std::int64_t{0}), b.value("out_tokens", std::int64_t{1})};
  int token_count = static_cast<int>(std::max<std::int64_t>(1, tokens.out));
  double logprob = std::min(0.0, b.value("seq_logprob", 0.0));
  return {GenerationSample::make(b["text"].get<std::string>(), logprob, token_count), tokens};
}

std::int64_t count_tokens(const std::string& text) {
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(normalized_tokens(text).size()));
}

std::unique_ptr<EntailmentOracle> make_oracle(const Manifest& m) {
  if (m.providers.nli == "mock") return std::make_unique<MockEntailmentOracle>();
  return std::make_unique<HttpEntailmentOracle>(m.providers.endpoint(m.providers.nli));
}

std::unique_ptr<JudgeClient> make_judge(const Manifest& m) {
  if (m.providers.judge == "mock") return std::make_unique<MockJudgeClient>();
  return std::make_unique<HttpJudgeClient>(m.providers.endpoint(m.providers.judge));
}

std::shared_ptr<const Embedder> manifest_embedder(const Manifest& m, std::size_t expected_dim = 0) {
  return make_embedder(m.providers.embedding, m.providers.endpoint(m.providers.embedding), expected_dim);
}

void ensure_benchmark_usable(const std::vector<BenchmarkItem>& bench) {
  if (bench.empty()) throw Error(ErrorCode::EmptyBenchmark, "benchmark is empty");
}

}  // namespace

// ---------------------------------------------------------------------------

std::string router_slug(RouterKind kind) { return to_lower(to_string(kind)); }

Manifest Manifest::load(const std::string& path) {
  auto j = nlohmann::json::parse(read_text_file(path), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::InvalidArgument, path + " is not a JSON object");
  return from_json(j, fs::absolute(path).parent_path().string());
}

Manifest Manifest::from_json(const nlohmann::json& j, const std::string& base_dir) {
  Manifest m;
  try {
    m.seed = j.value("seed", std::uint64_t{0});
    m.tau = j.value("tau", kDefaultTau);
    m.samples_per_query = j.value("samples_per_query", std::size_t{10});
    const auto& models = j.at("models");
    m.strong = model_ref_from_json(models.at("strong"), Tier::Strong);
    m.weak = model_ref_from_json(models.at("weak"), Tier::Weak);
    m.strong_endpoint = models.at("strong").value("endpoint", std::string{});
    m.weak_endpoint = models.at("weak").value("endpoint", std::string{});

    if (j.contains("providers")) {
      const auto& p = j.at("providers");
      m.providers.generation = p.value("generation", m.providers.generation);
      m.providers.nli = p.value("nli", m.providers.nli);
      m.providers.embedding = p.value("embedding", m.providers.embedding);
      m.providers.judge = p.value("judge", m.providers.judge);
      m.providers.timeout_ms = p.value("timeout_ms", m.providers.timeout_ms);
      m.providers.retries = p.value("retries", m.providers.retries);
    }
    if (j.contains("mock_topics")) {
      m.mock_topics.clear();
      for (const auto& [topic, rates] : j.at("mock_topics").items()) {
        m.mock_topics[topic] = MockTopicRates{rates.at("strong").get<double>(), rates.at("weak").get<double>()};
      }
    }

    const auto paths = j.value("paths", nlohmann::json::object());
    const std::string work = resolve(base_dir, paths.value("work_dir", std::string("work")));
    auto path_or = [&](const char* key, const std::string& fallback) {
      return paths.contains(key) ? resolve(base_dir, paths.at(key).get<std::string>()) : fallback;
    };
    m.paths.prompts = path_or("prompts", "");
    m.paths.bench_prompts = path_or("bench_prompts", "");
    m.paths.generations = path_or("generations", work + "/generations.jsonl");
    m.paths.clusterings = path_or("clusterings", work + "/clusterings.jsonl");
    m.paths.se = path_or("se", work + "/se.jsonl");
    m.paths.prefs = path_or("prefs", work + "/preferences.jsonl");
    m.paths.embeddings = path_or("embeddings", work + "/embeddings.jsonl");
    m.paths.bench = path_or("bench", work + "/benchmark.jsonl");
    m.paths.bench_embeddings = path_or("bench_embeddings", work + "/bench_embeddings.jsonl");
    m.paths.artifacts = path_or("artifacts", work + "/artifacts");
    m.paths.reports = path_or("reports", work + "/reports");

    const auto routers = j.value("routers", nlohmann::json::object());
    if (routers.contains("sw")) {
      const auto& r = routers.at("sw");
      m.sw.gamma = r.value("gamma", m.sw.gamma);
      m.sw.steps = r.value("steps", m.sw.steps);
      m.sw.learning_rate = r.value("learning_rate", m.sw.learning_rate);
    }
    if (routers.contains("mf")) {
      const auto& r = routers.at("mf");
      m.mf.latent_dim = r.value("latent_dim", m.mf.latent_dim);
      m.mf.epochs = r.value("epochs", m.mf.epochs);
      m.mf.learning_rate = r.value("learning_rate", m.mf.learning_rate);
      m.mf.init_scale = r.value("init_scale", m.mf.init_scale);
    }
    if (routers.contains("mlp")) {
      const auto& r = routers.at("mlp");
      m.mlp.hidden = r.value("hidden", m.mlp.hidden);
      m.mlp.epochs = r.value("epochs", m.mlp.epochs);
      m.mlp.learning_rate = r.value("learning_rate", m.mlp.learning_rate);
      m.mlp.batch_size = r.value("batch_size", m.mlp.batch_size);
    }
    if (routers.contains("knn")) m.knn_k = routers.at("knn").value("k", m.knn_k);

    m.route_threshold = j.value("route_threshold", m.route_threshold);
    const auto reading = j.value("cpt_reading", std::string("gap"));
    if (reading == "gap") {
      m.cpt_reading = CptReading::GapRecovery;
    } else if (reading == "relative") {
      m.cpt_reading = CptReading::RelativeToWeak;
    } else {
      throw Error(ErrorCode::InvalidArgument, "cpt_reading must be 'gap' or 'relative'");
    }
    if (j.contains("judge")) {
      const auto& jd = j.at("judge");
      if (jd.contains("routers")) {
        m.judge_routers.clear();
        for (const auto& r : jd.at("routers")) m.judge_routers.push_back(parse_router_kind(r.get<std::string>()));
      }
      m.judge_x = jd.value("x", m.judge_x);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed manifest: ") + e.what());
  }
  if (!(m.tau > 0.0)) throw Error(ErrorCode::InvalidArgument, "tau must be positive");
  if (m.samples_per_query == 0) throw Error(ErrorCode::InvalidArgument, "samples_per_query must be positive");
  if (!(m.route_threshold >= 0.0 && m.route_threshold <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "route_threshold must be in [0, 1]");
  }
  if (m.judge_routers.empty() || m.judge_routers.size() > 3) {
    throw Error(ErrorCode::InvalidArgument, "judge.routers must name 1 to 3 routers");
  }
  validate_model_pair(m.strong, m.weak);
  m.set_seed(m.seed);
  return m;
}

void Manifest::set_seed(std::uint64_t value) {
  seed = value;
  mf.seed = splitmix64(value ^ 0x6d66ULL);
  mlp.seed = splitmix64(value ^ 0x6d6c70ULL);
}

void Manifest::force_mock() {
  providers.generation = providers.nli = providers.embedding = providers.judge = "mock";
}

std::string Manifest::artifact_path(RouterKind kind) const {
  return (fs::path(paths.artifacts) / (router_slug(kind) + ".model")).string();
}
std::string Manifest::curve_path(RouterKind kind) const {
  return (fs::path(paths.reports) / (router_slug(kind) + "_curve.csv")).string();
}
std::string Manifest::summary_path(RouterKind kind) const {
  return (fs::path(paths.reports) / (router_slug(kind) + "_summary.json")).string();
}
std::string Manifest::judge_path() const { return (fs::path(paths.reports) / "judge.json").string(); }

// ---------------------------------------------------------------------------

std::vector<PromptRow> load_prompts(const std::string& path) {
  require_file(path, "prompts");
  std::vector<PromptRow> rows;
  for (const auto& j : read_jsonl(path).rows) rows.push_back(prompt_row_from_json(j));
  if (rows.empty()) throw Error(ErrorCode::EmptyInput, path + " has no prompts");
  return rows;
}

std::vector<BenchmarkItem> load_benchmark(const std::string& path) {
  require_file(path, "benchmark");
  std::vector<BenchmarkItem> items;
  for (const auto& j : read_jsonl(path).rows) items.push_back(benchmark_item_from_json(j));
  return items;
}

std::vector<PreferenceRecord> load_preferences(const std::string& path) {
  require_file(path, "preference dataset");
  std::vector<PreferenceRecord> records;
  for (const auto& j : read_jsonl(path, kStagePrefs).rows) records.push_back(preference_from_json(j));
  return records;
}

void run_sample(const Manifest& m) {
  auto prompts = load_prompts(m.paths.prompts);
  const bool mock = m.providers.generation == "mock";
  MockGenerator generator(m.seed, m.mock_topics);
  auto draw = [&](const PromptRow& row, Tier tier, std::size_t count, std::uint64_t salt) {
    const ModelRef& model = tier == Tier::Strong ? m.strong : m.weak;
    std::vector<SampledResponse> out;
    if (mock) {
      for (auto& s : generator.sample(row, tier, model.id, count, salt)) {
        TokenCounts tokens{count_tokens(row.prompt), s.token_count};
        out.push_back({std::move(s), tokens});
      }
      return out;
    }
    const auto& url = tier == Tier::Strong ? m.strong_endpoint : m.weak_endpoint;
    if (url.empty()) throw Error(ErrorCode::InvalidArgument, "no generation endpoint for " + model.id);
    for (std::size_t i = 0; i < count; ++i) {
      std::uint64_t seed = splitmix64(m.seed ^ salt ^ fnv1a64(row.id) ^ i);
      out.push_back(sample_remote(m.providers.endpoint(url), row.prompt, seed));
    }
    return out;
  };

  std::vector<nlohmann::json> rows;
  for (const auto& row : prompts) {
    for (Tier tier : {Tier::Strong, Tier::Weak}) {
      nlohmann::json samples = nlohmann::json::array();
      for (const auto& r : draw(row, tier, m.samples_per_query, 0)) samples.push_back(sample_to_json(r.sample));
      rows.push_back({{"query_id", row.id},
                      {"tier", to_string(tier)},
                      {"model", tier == Tier::Strong ? m.strong.id : m.weak.id},
                      {"samples", std::move(samples)}});
    }
  }
  write_jsonl(m.paths.generations, stage_header(kStageSample), rows);

  if (m.paths.bench_prompts.empty()) return;
  auto bench_prompts = load_prompts(m.paths.bench_prompts);
  std::vector<nlohmann::json> items;
  constexpr std::uint64_t kBenchSalt = 0xbe7c4ULL;
  for (const auto& row : bench_prompts) {
    if (row.reference_answer.empty()) {
      throw Error(ErrorCode::InvalidArgument, "benchmark prompt " + row.id + " has no reference_answer");
    }
    BenchmarkItem item;
    item.id = row.id;
    item.prompt = row.prompt;
    item.reference_answer = row.reference_answer;
    auto strong = draw(row, Tier::Strong, 1, kBenchSalt).front();
    auto weak = draw(row, Tier::Weak, 1, kBenchSalt).front();
    item.strong_response = strong.sample.text;
    item.strong_correct = answers_match(item.strong_response, row.reference_answer);
    item.strong_tokens = strong.tokens;
    item.weak_response = weak.sample.text;
    item.weak_correct = answers_match(item.weak_response, row.reference_answer);
    item.weak_tokens = weak.tokens;
    items.push_back(to_json(item));
  }
  write_jsonl(m.paths.bench, stage_header(kStageBenchmark), items);
}

void run_cluster(const Manifest& m) {
  auto generations = load_generations(m.paths.generations);
  auto oracle = make_oracle(m);
  std::vector<nlohmann::json> rows;
  for (const auto& g : generations) {
    auto clustering = cluster_by_entailment(g.query_id, g.samples, *oracle);
    nlohmann::json clusters = nlohmann::json::array();
    for (const auto& c : clustering.clusters) {
      clusters.push_back({{"members", c.member_indices}, {"prob_mass", c.prob_mass}});
    }
    rows.push_back({{"query_id", g.query_id},
                    {"tier", to_string(g.tier)},
                    {"model", g.model},
                    {"clusters", std::move(clusters)}});
  }
  write_jsonl(m.paths.clusterings, stage_header(kStageCluster), rows);
}

void run_se(const Manifest& m) {
  require_file(m.paths.clusterings, "clusterings");
  auto generations = load_generations(m.paths.generations);
  std::map<std::pair<std::string, std::string>, const GenerationRow*> by_key;
  for (const auto& g : generations) by_key[{g.query_id, std::string(to_string(g.tier))}] = &g;

  std::vector<nlohmann::json> rows;
  for (const auto& j : read_jsonl(m.paths.clusterings, kStageCluster).rows) {
    const auto query_id = j.at("query_id").get<std::string>();
    const auto tier = j.at("tier").get<std::string>();
    auto it = by_key.find({query_id, tier});
    if (it == by_key.end()) throw Error(ErrorCode::StageMismatch, "clustering for unknown generation " + query_id);
    const auto& samples = it->second->samples;
    SemanticClustering clustering{query_id, {}};
    std::vector<bool> seen(samples.size(), false);
    for (const auto& c : j.at("clusters")) {
      SemanticCluster cluster;
      cluster.prob_mass = c.at("prob_mass").get<double>();
      for (auto idx : c.at("members").get<std::vector<std::size_t>>()) {
        if (idx >= samples.size() || seen[idx]) {
          throw Error(ErrorCode::InvalidArgument, "clustering for " + query_id + " is not a partition");
        }
        seen[idx] = true;
        cluster.members.push_back(samples[idx]);
        cluster.member_indices.push_back(idx);
      }
      if (cluster.members.empty()) throw Error(ErrorCode::InvalidArgument, "empty cluster for " + query_id);
      clustering.clusters.push_back(std::move(cluster));
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
      throw Error(ErrorCode::InvalidArgument, "clustering for " + query_id + " does not cover every sample");
    }
    SEScore score = semantic_entropy(clustering);
    rows.push_back({{"query_id", query_id},
                    {"tier", tier},
                    {"model", it->second->model},
                    {"se", score.value},
                    {"num_clusters", score.num_clusters},
                    {"num_samples", score.num_samples}});
  }
  write_jsonl(m.paths.se, stage_header(kStageSe), rows);
}

DatasetStats run_build_prefs(const Manifest& m) {
  auto prompts = load_prompts(m.paths.prompts);
  auto generations = load_generations(m.paths.generations);
  require_file(m.paths.se, "se");
  std::map<std::pair<std::string, Tier>, SEScore> scores;
  for (const auto& j : read_jsonl(m.paths.se, kStageSe).rows) {
    SEScore s{j.at("se").get<double>(), j.at("num_clusters").get<int>(), j.at("num_samples").get<int>()};
    scores[{j.at("query_id").get<std::string>(), parse_tier(j.at("tier").get<std::string>())}] = s;
  }
  std::map<std::pair<std::string, Tier>, std::string> responses;
  for (const auto& g : generations) responses[{g.query_id, g.tier}] = g.samples.front().text;

  std::vector<SEPair> pairs;
  for (const auto& row : prompts) {
    auto s = scores.find({row.id, Tier::Strong});
    auto w = scores.find({row.id, Tier::Weak});
    if (s == scores.end() || w == scores.end()) {
      throw Error(ErrorCode::StageMismatch, "missing SE score for prompt " + row.id);
    }
    pairs.push_back(SEPair{Query::make(row.id, row.prompt), s->second, w->second, responses[{row.id, Tier::Strong}],
                           responses[{row.id, Tier::Weak}]});
  }
  DatasetStats stats;
  auto records = build_dataset(pairs, m.tau, m.strong, m.weak, &stats);
  std::vector<nlohmann::json> rows;
  for (const auto& r : records) rows.push_back(to_json(r));
  write_jsonl(m.paths.prefs, stage_header(kStagePrefs), rows);
  return stats;
}

void run_embed(const Manifest& m) {
  auto records = load_preferences(m.paths.prefs);
  auto embedder = manifest_embedder(m);
  EmbeddingStore store;
  store.provider = embedder->provider_name();
  for (const auto& r : records) store.insert(r.id, embedder->embed(r.prompt));
  store.save(m.paths.embeddings);

  if (m.paths.bench_prompts.empty() && !fs::exists(m.paths.bench)) return;
  auto bench = load_benchmark(m.paths.bench);
  EmbeddingStore bench_store;
  bench_store.provider = store.provider;
  bench_store.dim = store.dim;
  for (const auto& item : bench) bench_store.insert(item.id, embedder->embed(item.prompt));
  bench_store.save(m.paths.bench_embeddings);
}

void run_train(const Manifest& m, RouterKind kind) {
  std::unique_ptr<Router> router;
  if (kind == RouterKind::Random) {
    router = std::make_unique<RandomRouter>(m.seed);
  } else {
    auto records = load_preferences(m.paths.prefs);
    require_file(m.paths.embeddings, "embeddings");
    auto ts = TrainingSet::make(records, EmbeddingStore::load(m.paths.embeddings));
    switch (kind) {
      case RouterKind::SW: router = std::make_unique<SwRouter>(std::move(ts), m.sw); break;
      case RouterKind::MF: router = std::make_unique<MfRouter>(mf_train(ts, m.mf)); break;
      case RouterKind::MLP: router = std::make_unique<MlpRouter>(mlp_train(ts, m.mlp)); break;
      case RouterKind::KNN: router = std::make_unique<KnnRouter>(std::move(ts), m.knn_k); break;
      case RouterKind::Random: break;
    }
  }
  save_model(*router, m.artifact_path(kind));
}

CostQualityCurve run_sweep(const Manifest& m, RouterKind kind) {
  auto router = load_model(m.artifact_path(kind));
  auto bench = load_benchmark(m.paths.bench);
  ensure_benchmark_usable(bench);
  EmbeddingStore embeddings;
  if (router->embedding_dim() != 0) {
    require_file(m.paths.bench_embeddings, "benchmark embeddings");
    embeddings = EmbeddingStore::load(m.paths.bench_embeddings);
  }
  auto curve = sweep(*router, bench, embeddings, m.pair());
  write_text_file(m.curve_path(kind), curve_to_csv(curve));
  return curve;
}

double run_cpt(const Manifest& m, RouterKind kind, double x_percent, CptSummary* summary_out) {
  auto curve = curve_from_csv(read_text_file(m.curve_path(kind)));
  auto bench = load_benchmark(m.paths.bench);
  ensure_benchmark_usable(bench);
  const double acc_weak = benchmark_accuracy(bench, Tier::Weak);
  const double acc_strong = benchmark_accuracy(bench, Tier::Strong);
  CptSummary summary;
  summary.cpt50 = cpt(curve, 50.0, acc_weak, acc_strong, m.cpt_reading);
  summary.cpt80 = cpt(curve, 80.0, acc_weak, acc_strong, m.cpt_reading);
  summary.total_cost_all_strong = total_cost(bench, m.strong);
  summary.total_cost_all_weak = total_cost(bench, m.weak);
  write_text_file(m.summary_path(kind), to_json(summary).dump(2) + "\n");
  if (summary_out) *summary_out = summary;
  return cpt(curve, x_percent, acc_weak, acc_strong, m.cpt_reading);
}

nlohmann::json run_judge(const Manifest& m) {
  auto bench = load_benchmark(m.paths.bench);
  ensure_benchmark_usable(bench);
  const double acc_weak = benchmark_accuracy(bench, Tier::Weak);
  const double acc_strong = benchmark_accuracy(bench, Tier::Strong);
  EmbeddingStore embeddings;

  struct Candidate {
    std::string label;
    std::vector<double> predictions;
    double threshold;
  };
  std::vector<Candidate> candidates;
  for (RouterKind kind : m.judge_routers) {
    auto router = load_model(m.artifact_path(kind));
    if (router->embedding_dim() != 0 && embeddings.vectors.empty()) {
      require_file(m.paths.bench_embeddings, "benchmark embeddings");
      embeddings = EmbeddingStore::load(m.paths.bench_embeddings);
    }
    auto predictions = predict_all(*router, bench, embeddings);
    auto curve = sweep(predictions, bench, m.pair());
    const double fraction = cpt(curve, m.judge_x, acc_weak, acc_strong, m.cpt_reading);
    candidates.push_back({std::string(to_string(kind)), std::move(predictions), operating_point(curve, fraction).threshold});
  }

  auto judge = make_judge(m);
  std::vector<JudgeResult> results;
  std::size_t abstained = 0;
  for (std::size_t i = 0; i < bench.size(); ++i) {
    std::vector<LabeledResponse> responses;
    for (const auto& c : candidates) {
      Tier tier = routes_strong(c.predictions[i], c.threshold) ? Tier::Strong : Tier::Weak;
      responses.push_back({c.label, bench[i].response(tier)});
    }
    try {
      results.push_back(judge_query(*judge, bench[i].id, bench[i].prompt, bench[i].reference_answer, responses));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::UnparseableVerdict && e.code() != ErrorCode::JudgeFailure) throw;
      ++abstained;
    }
  }
  nlohmann::json report{{"x", m.judge_x}, {"total", results.size()}, {"abstained", abstained}};
  nlohmann::json scores = nlohmann::json::object();
  for (const auto& c : candidates) {
    scores[c.label] = results.empty() ? 0.0 : judge_score(results, c.label, results.size());
  }
  report["scores"] = std::move(scores);
  write_text_file(m.judge_path(), report.dump(2) + "\n");
  return report;
}

nlohmann::json run_route(const Manifest& m, RouterKind kind, const std::string& prompt) {
  Query query = Query::make(prompt_query_id(prompt), prompt);
  auto router = load_model(m.artifact_path(kind));
  double p = 0.0;
  if (router->embedding_dim() == 0) {
    p = router->predict(query.id, EmbeddingVector{{0.0}});
  } else {
    auto q = manifest_embedder(m, router->embedding_dim())->embed(prompt);
    p = router->predict(query.id, q);
  }
  auto decision = decide_route(m.pair(), query.id, p, m.route_threshold, router->kind());
  return {{"chosen_model", decision.chosen},
          {"p_win_strong", decision.p_win_strong},
          {"threshold", decision.threshold},
          {"router_kind", to_string(decision.router_kind)}};
}

void run_all(const Manifest& m) {
  run_sample(m);
  run_cluster(m);
  run_se(m);
  run_build_prefs(m);
  run_embed(m);
  for (RouterKind kind : {RouterKind::SW, RouterKind::MF, RouterKind::MLP, RouterKind::KNN, RouterKind::Random}) {
    run_train(m, kind);
    run_sweep(m, kind);
    run_cpt(m, kind, 50.0);
  }
}

}  // namespace serouter
