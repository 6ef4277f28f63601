#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "serouter/errors.hpp"
#include "serouter/eval.hpp"
#include "serouter/rng.hpp"
#include "test_support.hpp"

namespace serouter {
namespace {

using testing::thrown_code;

ModelPair pair() { return validate_model_pair(testing::strong_model(), testing::weak_model()); }

BenchmarkItem item(const std::string& id, bool strong_ok, bool weak_ok) {
  BenchmarkItem it;
  it.id = id;
  it.prompt = "prompt " + id;
  it.reference_answer = "42";
  it.strong_response = strong_ok ? "42" : "41";
  it.strong_correct = strong_ok;
  it.weak_response = weak_ok ? "42" : "40";
  it.weak_correct = weak_ok;
  it.strong_tokens = {1000, 500};  // 0.03 + 0.03 USD
  it.weak_tokens = {1000, 500};    // 0.0002 + 0.0002 USD
  return it;
}

// Four items, hand-counted below.
//   p      strong  weak
//   0.9    ok      -
//   0.2    -       ok
//   0.5    ok      ok
//   0.5    ok      -
std::vector<BenchmarkItem> four_items() {
  return {item("a", true, false), item("b", false, true), item("c", true, true), item("d", true, false)};
}
const std::vector<double> kFourPredictions{0.9, 0.2, 0.5, 0.5};

TEST(Sweep, HandCountedCurve) {
  auto bench = four_items();
  auto curve = sweep(kFourPredictions, bench, pair());
  ASSERT_EQ(curve.points.size(), 4u);
  const double fractions[] = {0.0, 0.25, 0.75, 1.0};
  const double accuracy[] = {0.5, 0.75, 1.0, 0.75};
  const char* costs[] = {"0.0016", "0.0612", "0.1804", "0.24"};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_DOUBLE_EQ(curve.points[i].strong_fraction, fractions[i]);
    EXPECT_DOUBLE_EQ(curve.points[i].accuracy, accuracy[i]);
    EXPECT_EQ(curve.points[i].cost_usd.to_string(), costs[i]);
  }
  EXPECT_EQ(curve.points[0].threshold, all_weak_threshold());
  // alpha = 0 and alpha = 0.2 both route everything; the larger alpha is kept.
  EXPECT_DOUBLE_EQ(curve.points[3].threshold, 0.2);
}

TEST(Sweep, ConstantPredictorGivesOnlyEndpoints) {
  auto bench = four_items();
  auto curve = sweep(std::vector<double>(4, 0.5), bench, pair());
  ASSERT_EQ(curve.points.size(), 2u);
  EXPECT_EQ(curve.points[0].strong_fraction, 0.0);
  EXPECT_EQ(curve.points[1].strong_fraction, 1.0);
}

TEST(Sweep, EndpointsMatchSingleModelTotals) {
  Rng rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<BenchmarkItem> bench;
    std::vector<double> preds;
    for (int i = 0; i < 1 + static_cast<int>(rng.below(40)); ++i) {
      auto it = item("i" + std::to_string(i), rng.bernoulli(0.7), rng.bernoulli(0.4));
      it.strong_tokens = {static_cast<std::int64_t>(rng.below(3000)), static_cast<std::int64_t>(rng.below(900))};
      it.weak_tokens = {static_cast<std::int64_t>(rng.below(3000)), static_cast<std::int64_t>(rng.below(900))};
      bench.push_back(it);
      preds.push_back(std::round(rng.uniform(0.0, 1.0) * 8.0) / 8.0);
    }
    auto curve = sweep(preds, bench, pair());
    const auto& lo = curve.points.front();
    const auto& hi = curve.points.back();
    ASSERT_EQ(lo.strong_fraction, 0.0);
    ASSERT_EQ(hi.strong_fraction, 1.0);
    ASSERT_DOUBLE_EQ(lo.accuracy, benchmark_accuracy(bench, Tier::Weak));
    ASSERT_DOUBLE_EQ(hi.accuracy, benchmark_accuracy(bench, Tier::Strong));
    ASSERT_EQ(lo.cost_usd, total_cost(bench, testing::weak_model()));
    ASSERT_EQ(hi.cost_usd, total_cost(bench, testing::strong_model()));
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
      ASSERT_LT(curve.points[i - 1].strong_fraction, curve.points[i].strong_fraction);
    }
    // Each point agrees with a direct recount at its threshold.
    for (const auto& p : curve.points) {
      int routed = 0, correct = 0;
      Usd cost;
      for (std::size_t i = 0; i < bench.size(); ++i) {
        bool strong = preds[i] >= p.threshold;
        routed += strong;
        correct += bench[i].correct(strong ? Tier::Strong : Tier::Weak);
        const auto& t = bench[i].tokens(strong ? Tier::Strong : Tier::Weak);
        cost += (strong ? testing::strong_model() : testing::weak_model()).cost(t.in, t.out);
      }
      ASSERT_DOUBLE_EQ(p.strong_fraction, static_cast<double>(routed) / bench.size());
      ASSERT_DOUBLE_EQ(p.accuracy, static_cast<double>(correct) / bench.size());
      ASSERT_EQ(p.cost_usd, cost);
    }
  }
}

TEST(Sweep, ItemOrderDoesNotChangeTheCurve) {
  auto bench = four_items();
  auto preds = kFourPredictions;
  auto base = sweep(preds, bench, pair());
  std::vector<std::size_t> perm{3, 1, 0, 2};
  std::vector<BenchmarkItem> b2;
  std::vector<double> p2;
  for (auto i : perm) {
    b2.push_back(bench[i]);
    p2.push_back(preds[i]);
  }
  auto shuffled = sweep(p2, b2, pair());
  ASSERT_EQ(base.points.size(), shuffled.points.size());
  for (std::size_t i = 0; i < base.points.size(); ++i) {
    EXPECT_EQ(base.points[i].strong_fraction, shuffled.points[i].strong_fraction);
    EXPECT_EQ(base.points[i].accuracy, shuffled.points[i].accuracy);
    EXPECT_EQ(base.points[i].cost_usd, shuffled.points[i].cost_usd);
  }
}

TEST(Sweep, RejectsBadInput) {
  auto bench = four_items();
  EXPECT_EQ(thrown_code([&] { sweep(std::vector<double>{0.5}, bench, pair()); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(thrown_code([&] { sweep(std::vector<double>{0.5, 0.5, 1.5, 0.5}, bench, pair()); }),
            ErrorCode::InvalidArgument);
  EXPECT_EQ(thrown_code([&] { sweep(std::vector<double>{}, std::vector<BenchmarkItem>{}, pair()); }),
            ErrorCode::EmptyBenchmark);
}

// ---------------------------------------------------------------------------

TEST(Cpt, InterpolatesOnTheHandCountedCurve) {
  auto curve = sweep(kFourPredictions, four_items(), pair());
  // acc_weak 0.5, acc_strong 0.75.
  EXPECT_NEAR(cpt(curve, 50, 0.5, 0.75), 0.125, 1e-12);
  EXPECT_NEAR(cpt(curve, 80, 0.5, 0.75), 0.2, 1e-12);
  EXPECT_NEAR(cpt(curve, 100, 0.5, 0.75), 0.25, 1e-12);
  EXPECT_NEAR(cpt(curve, 50, 0.5, 0.75, CptReading::RelativeToWeak), 0.25, 1e-12);
  EXPECT_NEAR(cpt(curve, 60, 0.5, 0.75, CptReading::RelativeToWeak), 0.35, 1e-12);
}

TEST(Cpt, PerfectRouterNeedsOnlyTheRecoverableItems) {
  // Weak solves 0-3, strong solves 0-7: four of ten items need the strong model.
  std::vector<BenchmarkItem> bench;
  std::vector<double> preds;
  for (int i = 0; i < 10; ++i) {
    bench.push_back(item(std::to_string(i), i < 8, i < 4));
    preds.push_back(i >= 4 && i < 8 ? 1.0 : 0.0);
  }
  auto curve = sweep(preds, bench, pair());
  EXPECT_NEAR(cpt(curve, 50, 0.4, 0.8), 0.2, 1e-12);
  EXPECT_NEAR(cpt(curve, 100, 0.4, 0.8), 0.4, 1e-12);

  // No other predictor on this benchmark can do better.
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> other;
    for (int i = 0; i < 10; ++i) other.push_back(rng.uniform(0.0, 1.0));
    auto c = sweep(other, bench, pair());
    for (double x : {20.0, 50.0, 80.0, 100.0}) {
      ASSERT_GE(cpt(c, x, 0.4, 0.8), cpt(curve, x, 0.4, 0.8) - 1e-12);
    }
  }
}

TEST(Cpt, NonDecreasingInX) {
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<BenchmarkItem> bench;
    std::vector<double> preds;
    for (int i = 0; i < 30; ++i) {
      bench.push_back(item(std::to_string(i), rng.bernoulli(0.8), rng.bernoulli(0.3)));
      preds.push_back(rng.uniform(0.0, 1.0));
    }
    double aw = benchmark_accuracy(bench, Tier::Weak), as = benchmark_accuracy(bench, Tier::Strong);
    if (!(as > aw)) continue;
    auto curve = sweep(preds, bench, pair());
    double prev = 0.0;
    for (int x = 5; x <= 100; x += 5) {
      double v = cpt(curve, x, aw, as);
      ASSERT_GE(v, prev - 1e-12);
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
      prev = v;
    }
  }
}

TEST(Cpt, ErrorCases) {
  auto curve = sweep(std::vector<double>(4, 0.5), four_items(), pair());
  EXPECT_EQ(thrown_code([&] { cpt(curve, 0, 0.5, 0.75); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(thrown_code([&] { cpt(curve, 101, 0.5, 0.75); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(thrown_code([&] { cpt(curve, 50, 0.75, 0.75); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(thrown_code([&] { cpt(curve, 60, 0.5, 0.75, CptReading::RelativeToWeak); }),
            ErrorCode::TargetUnreachable);
  EXPECT_EQ(thrown_code([&] { cpt(CostQualityCurve{}, 50, 0.5, 0.75); }), ErrorCode::EmptyBenchmark);
}

TEST(OperatingPoint, FirstPointAtOrBeyondFraction) {
  auto curve = sweep(kFourPredictions, four_items(), pair());
  EXPECT_DOUBLE_EQ(operating_point(curve, 0.5).strong_fraction, 0.75);
  EXPECT_DOUBLE_EQ(operating_point(curve, 0.25).threshold, 0.9);
  EXPECT_DOUBLE_EQ(operating_point(curve, 0.0).strong_fraction, 0.0);
}

TEST(CurveCsv, RoundTripIsExact) {
  auto curve = sweep(std::vector<double>{0.1, 1.0 / 3.0, 0.7, 0.7}, four_items(), pair());
  auto csv = curve_to_csv(curve);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "threshold,strong_fraction,accuracy,cost_usd");
  auto back = curve_from_csv(csv);
  ASSERT_EQ(back.points.size(), curve.points.size());
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    EXPECT_EQ(back.points[i].threshold, curve.points[i].threshold);
    EXPECT_EQ(back.points[i].strong_fraction, curve.points[i].strong_fraction);
    EXPECT_EQ(back.points[i].accuracy, curve.points[i].accuracy);
    EXPECT_EQ(back.points[i].cost_usd, curve.points[i].cost_usd);
  }
  EXPECT_EQ(thrown_code([] { curve_from_csv("a,b\n"); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(thrown_code([] { curve_from_csv("threshold,strong_fraction,accuracy,cost_usd\n1,2\n"); }),
            ErrorCode::InvalidArgument);
}

TEST(BenchmarkItem, JsonRoundTrip) {
  auto it = item("z", true, false);
  auto back = benchmark_item_from_json(to_json(it));
  EXPECT_EQ(back.id, "z");
  EXPECT_EQ(back.strong_tokens.out, 500);
  EXPECT_TRUE(back.strong_correct);
  EXPECT_FALSE(back.weak_correct);
  auto bad = to_json(it);
  bad["weak_tokens"]["in"] = -1;
  EXPECT_EQ(thrown_code([&] { benchmark_item_from_json(bad); }), ErrorCode::InvalidArgument);
}

// ---------------------------------------------------------------------------
// Judge

TEST(JudgePrompt, FillsSlotsAndPadsMissingResponses) {
  std::vector<std::string> responses{"x = 4", "x = 5"};
  auto prompt = render_judge_prompt("Solve 2x = 8.", "4", responses);
  EXPECT_EQ(prompt.rfind("You are an evaluator for math problem solutions.", 0), 0u);
  EXPECT_NE(prompt.find("\nQuestion: Solve 2x = 8.\n"), std::string::npos);
  EXPECT_NE(prompt.find("\nGround Truth Answer:4\n"), std::string::npos);
  EXPECT_NE(prompt.find("\nLLM 1 Response: x = 4\nLLM 2 Response: x = 5\nLLM 3 Response: N/A\n"),
            std::string::npos);
  EXPECT_EQ(prompt.find("{}"), std::string::npos);
  EXPECT_EQ(prompt.size() - std::string_view(kJudgePromptTemplate).size(),
            std::string("Solve 2x = 8.4x = 4x = 5N/A").size() - 10);
}

TEST(JudgePrompt, TakesOneToThreeResponses) {
  EXPECT_EQ(thrown_code([] { render_judge_prompt("q", "a", std::vector<std::string>{}); }),
            ErrorCode::InvalidArgument);
  EXPECT_EQ(thrown_code([] { render_judge_prompt("q", "a", std::vector<std::string>(4, "r")); }),
            ErrorCode::InvalidArgument);
}

TEST(ParseVerdict, AcceptedShapes) {
  EXPECT_EQ(parse_verdict("LLM 2", 3), (std::set<int>{2}));
  EXPECT_EQ(parse_verdict("LLM 1 and LLM 3", 3), (std::set<int>{1, 3}));
  EXPECT_EQ(parse_verdict("LLM 1, LLM 2 and LLM 3", 3), (std::set<int>{1, 2, 3}));
  EXPECT_EQ(parse_verdict("  llm 3.\n", 3), (std::set<int>{3}));
  EXPECT_EQ(parse_verdict("'LLM 1'", 3), (std::set<int>{1}));
  EXPECT_EQ(parse_verdict("LLM1, LLM2", 2), (std::set<int>{1, 2}));
}

TEST(ParseVerdict, RejectsOtherReplies) {
  for (const char* reply : {"", "None", "LLM 4", "The best is LLM 1", "LLM 1 or LLM 2", "LLM 1 because it is right",
                            "LLM", "LLM 1 and"}) {
    EXPECT_EQ(thrown_code([&] { parse_verdict(reply, 3); }), ErrorCode::UnparseableVerdict) << reply;
  }
  EXPECT_EQ(thrown_code([] { parse_verdict("LLM 3", 2); }), ErrorCode::UnparseableVerdict);
}

std::vector<JudgeResult> results_with(int selected_sw, int total) {
  std::vector<JudgeResult> out;
  for (int i = 0; i < total; ++i) {
    JudgeResult r{"q" + std::to_string(i), {"mf"}};
    if (i < selected_sw) r.selected.insert("sw");
    out.push_back(r);
  }
  return out;
}

TEST(JudgeScore, PercentOfJudgedQueries) {
  EXPECT_DOUBLE_EQ(judge_score(results_with(0, 10), "sw", 10), 0.0);
  EXPECT_DOUBLE_EQ(judge_score(results_with(10, 10), "sw", 10), 100.0);
  EXPECT_DOUBLE_EQ(judge_score(results_with(80, 100), "sw", 100), 80.0);
  EXPECT_DOUBLE_EQ(judge_score(results_with(3, 10), "mf", 10), 100.0);
  EXPECT_EQ(thrown_code([] { judge_score(std::vector<JudgeResult>{}, "sw", 0); }), ErrorCode::ZeroTotal);
}

TEST(JudgeScore, ScoresMayExceedOneHundredInTotal) {
  auto r = results_with(10, 10);
  EXPECT_DOUBLE_EQ(judge_score(r, "sw", 10) + judge_score(r, "mf", 10), 200.0);
}

TEST(MockJudge, SelectsResponsesMatchingTheGroundTruth) {
  MockJudgeClient judge;
  std::vector<LabeledResponse> responses{{"sw", "42"}, {"mf", "41"}, {"knn", "42.0000000001"}};
  auto r = judge_query(judge, "q1", "What is six times seven?", "42", responses);
  EXPECT_EQ(r.query_id, "q1");
  EXPECT_EQ(r.selected, (std::set<std::string>{"sw", "knn"}));

  std::vector<LabeledResponse> wrong{{"sw", "1"}, {"mf", "2"}};
  EXPECT_EQ(thrown_code([&] { judge_query(judge, "q2", "q", "42", wrong); }), ErrorCode::UnparseableVerdict);
}

TEST(HttpJudge, SendsOneSystemMessageAndParsesContent) {
  testing::StubServer server;
  nlohmann::json seen;
  server.on("/judge", [&](const nlohmann::json& req, httplib::Response& res) {
    seen = req;
    testing::StubServer::reply(res, {{"content", "LLM 2"}});
  });
  server.on("/broken", [](const nlohmann::json&, httplib::Response& res) {
    testing::StubServer::reply(res, {{"error", "x"}}, 503);
  });
  server.on("/nocontent", [](const nlohmann::json&, httplib::Response& res) {
    testing::StubServer::reply(res, {{"text", "LLM 2"}});
  });
  server.start();

  HttpJudgeClient judge(EndpointConfig{server.url("/judge"), 2000, 1});
  std::vector<LabeledResponse> responses{{"sw", "a"}, {"mf", "b"}, {"knn", "c"}};
  auto r = judge_query(judge, "q", "question", "b", responses);
  EXPECT_EQ(r.selected, (std::set<std::string>{"mf"}));
  ASSERT_EQ(seen.at("messages").size(), 1u);
  EXPECT_EQ(seen["messages"][0]["role"], "system");
  std::vector<std::string> texts{"a", "b", "c"};
  EXPECT_EQ(seen["messages"][0]["content"], render_judge_prompt("question", "b", texts));

  HttpJudgeClient broken(EndpointConfig{server.url("/broken"), 2000, 2});
  EXPECT_EQ(thrown_code([&] { broken.complete(nlohmann::json::array()); }), ErrorCode::JudgeFailure);
  HttpJudgeClient nocontent(EndpointConfig{server.url("/nocontent"), 2000, 1});
  EXPECT_EQ(thrown_code([&] { nocontent.complete(nlohmann::json::array()); }), ErrorCode::JudgeFailure);
}

}  // namespace
}  // namespace serouter
