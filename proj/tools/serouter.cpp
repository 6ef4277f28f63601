// Command-line driver for the routing pipeline.
#include <atomic>
#include <csignal>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "serouter/errors.hpp"
#include "serouter/gateway.hpp"
#include "serouter/jsonl.hpp"
#include "serouter/pipeline.hpp"
#include "serouter/synthetic.hpp"

namespace {

using namespace serouter;

std::atomic<bool> g_stop{false};

struct Options {
  std::string manifest = "manifest.json";
  std::optional<std::uint64_t> seed;
  std::optional<double> tau;
  std::string router = "sw";
  double x = 50.0;
  bool mock = false;
  std::string prompt;
  std::string gateway_config;
  std::string listen = "127.0.0.1:8080";
  std::size_t synth_per_topic = 25;
  std::string synth_prefix = "p";
  std::string synth_out;
};

Manifest load_manifest(const Options& opt) {
  Manifest m = Manifest::load(opt.manifest);
  if (opt.seed) m.set_seed(*opt.seed);
  if (opt.tau) {
    if (!(*opt.tau > 0.0)) throw Error(ErrorCode::InvalidArgument, "--tau must be positive");
    m.tau = *opt.tau;
  }
  if (opt.mock) m.force_mock();
  return m;
}

void print_json(const nlohmann::json& j) { std::cout << j.dump(2) << "\n"; }

int serve(const Options& opt) {
  GatewayConfig cfg;
  if (!opt.gateway_config.empty()) {
    cfg = GatewayConfig::load(opt.gateway_config);
  } else {
    // Derive the gateway from the manifest and the chosen router's artifact.
    Manifest m = load_manifest(opt);
    nlohmann::json j{{"listen", opt.listen},
                     {"artifact", m.artifact_path(parse_router_kind(opt.router))},
                     {"threshold", m.route_threshold},
                     {"timeout_ms", m.providers.timeout_ms},
                     {"retries", m.providers.retries},
                     {"embedding", m.providers.embedding}};
    j["models"]["strong"] = model_ref_to_json(m.strong);
    j["models"]["weak"] = model_ref_to_json(m.weak);
    if (!m.strong_endpoint.empty()) j["models"]["strong"]["endpoint"] = m.strong_endpoint;
    if (!m.weak_endpoint.empty()) j["models"]["weak"]["endpoint"] = m.weak_endpoint;
    if (const char* env = std::getenv("SEROUTER_LISTEN")) j["listen"] = env;
    if (const char* env = std::getenv("SEROUTER_ARTIFACT")) j["artifact"] = env;
    cfg = GatewayConfig::from_json(j);
  }
  Gateway gateway(cfg, make_embedder(cfg.embedding_provider, cfg.embedding_endpoint));
  const int port = gateway.start();
  std::fprintf(stderr, "listening on %s:%d\n", cfg.listen_host.c_str(), port);
  // The listener answers /healthz with 503 until the artifact is in place.
  gateway.load_artifact();
  std::fprintf(stderr, "loaded %s\n", cfg.artifact_path.c_str());
  std::signal(SIGINT, [](int) { g_stop = true; });
  std::signal(SIGTERM, [](int) { g_stop = true; });
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  gateway.stop();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  CLI::App app{"Semantic-entropy LLM router: data pipeline, training, evaluation and gateway"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--manifest", opt.manifest, "Pipeline manifest (JSON)");
  app.add_option("--seed", opt.seed, "Override the manifest seed");
  app.add_option("--tau", opt.tau, "Override the preference tie threshold");
  app.add_flag("--mock", opt.mock, "Use mock providers for every external call");

  auto router_opt = [&](CLI::App* sub) {
    return sub->add_option("--router", opt.router, "sw | mf | mlp | knn | random");
  };

  app.add_subcommand("sample", "Draw generations from both models (and record the benchmark)");
  app.add_subcommand("cluster", "Cluster generations by bidirectional entailment");
  app.add_subcommand("se", "Compute semantic entropy per query and model");
  app.add_subcommand("build-prefs", "Turn SE pairs into preference records");
  app.add_subcommand("embed", "Embed preference and benchmark prompts");
  router_opt(app.add_subcommand("train", "Train a router and write its artifact"));
  router_opt(app.add_subcommand("sweep", "Sweep thresholds and write the cost-quality CSV"));
  auto* cpt_cmd = app.add_subcommand("cpt", "Compute CPT from the sweep curve and write the summary JSON");
  router_opt(cpt_cmd);
  cpt_cmd->add_option("--x", opt.x, "Quality-gap percentage")->check(CLI::Range(0.0, 100.0));
  app.add_subcommand("judge", "Score routers with the LLM judge at their CPT(x) operating points")
      ->add_option("--x", opt.x, "Quality-gap percentage")
      ->check(CLI::Range(0.0, 100.0));
  auto* route_cmd = app.add_subcommand("route", "Route one prompt offline");
  router_opt(route_cmd);
  route_cmd->add_option("--prompt", opt.prompt, "Prompt text")->required();
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP gateway");
  router_opt(serve_cmd);
  serve_cmd->add_option("--config", opt.gateway_config, "Gateway config (JSON); defaults derive from the manifest");
  serve_cmd->add_option("--listen", opt.listen, "host:port when no --config is given");
  app.add_subcommand("run-all", "Run every stage and every router in order");
  auto* synth_cmd = app.add_subcommand("synth", "Write a two-topic synthetic prompt file");
  synth_cmd->add_option("--per-topic", opt.synth_per_topic, "Prompts per topic")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--prefix", opt.synth_prefix, "Id prefix");
  synth_cmd->add_option("--out", opt.synth_out, "Output JSONL path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    if (cmd == "synth") {
      std::vector<nlohmann::json> rows;
      for (const auto& r : make_synthetic_prompts(opt.synth_per_topic, opt.seed.value_or(0), opt.synth_prefix)) {
        rows.push_back(to_json(r));
      }
      write_jsonl(opt.synth_out, nlohmann::json(), rows);
      return 0;
    }
    if (cmd == "serve") return serve(opt);

    const Manifest m = load_manifest(opt);
    if (cmd == "sample") {
      run_sample(m);
    } else if (cmd == "cluster") {
      run_cluster(m);
    } else if (cmd == "se") {
      run_se(m);
    } else if (cmd == "build-prefs") {
      DatasetStats s = run_build_prefs(m);
      print_json({{"strong_wins", s.strong_wins}, {"weak_wins", s.weak_wins}, {"ties", s.ties},
                  {"degenerate", s.degenerate}});
    } else if (cmd == "embed") {
      run_embed(m);
    } else if (cmd == "train") {
      run_train(m, parse_router_kind(opt.router));
    } else if (cmd == "sweep") {
      run_sweep(m, parse_router_kind(opt.router));
    } else if (cmd == "cpt") {
      const RouterKind kind = parse_router_kind(opt.router);
      CptSummary summary;
      const double value = run_cpt(m, kind, opt.x, &summary);
      auto out = to_json(summary);
      out["router"] = router_slug(kind);
      out["x"] = opt.x;
      out["cpt"] = value;
      print_json(out);
    } else if (cmd == "judge") {
      Manifest judged = m;
      if (app.get_subcommand("judge")->count("--x")) judged.judge_x = opt.x;
      print_json(run_judge(judged));
    } else if (cmd == "route") {
      print_json(run_route(m, parse_router_kind(opt.router), opt.prompt));
    } else if (cmd == "run-all") {
      run_all(m);
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return is_provider_error(e.code()) ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
