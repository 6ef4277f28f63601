#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "serouter/core.hpp"
#include "serouter/decimal.hpp"
#include "serouter/embed.hpp"
#include "serouter/http.hpp"
#include "serouter/routers.hpp"

namespace serouter {

struct TokenCounts {
  std::int64_t in = 0;
  std::int64_t out = 0;
};

// Recorded responses of both models; sweeps never call a live model.
struct BenchmarkItem {
  std::string id;
  std::string prompt;
  std::string reference_answer;
  std::string strong_response;
  bool strong_correct = false;
  std::string weak_response;
  bool weak_correct = false;
  TokenCounts strong_tokens;
  TokenCounts weak_tokens;

  bool correct(Tier tier) const { return tier == Tier::Strong ? strong_correct : weak_correct; }
  const TokenCounts& tokens(Tier tier) const { return tier == Tier::Strong ? strong_tokens : weak_tokens; }
  const std::string& response(Tier tier) const { return tier == Tier::Strong ? strong_response : weak_response; }
};

nlohmann::json to_json(const BenchmarkItem& item);
BenchmarkItem benchmark_item_from_json(const nlohmann::json& j);

double benchmark_accuracy(std::span<const BenchmarkItem> bench, Tier tier);
// Exact decimal sum of tokens x price when every item goes to one model.
Usd total_cost(std::span<const BenchmarkItem> bench, const ModelRef& model);

struct CurvePoint {
  double threshold = 0.0;
  double strong_fraction = 0.0;
  double accuracy = 0.0;
  Usd cost_usd;
};

struct CostQualityCurve {
  std::vector<CurvePoint> points;  // strong_fraction ascending
};

// Threshold above every probability; routes everything to the weak model.
double all_weak_threshold();

// Sweeps alpha over the distinct predictions plus {0, all_weak_threshold()},
// routing item i strong iff predictions[i] >= alpha. Points sharing a
// strong_fraction collapse to the most accurate one (larger alpha on ties).
CostQualityCurve sweep(std::span<const double> predictions, std::span<const BenchmarkItem> bench,
                       const ModelPair& pair);
CostQualityCurve sweep(const Router& router, std::span<const BenchmarkItem> bench, const EmbeddingStore& embeddings,
                       const ModelPair& pair);

std::vector<double> predict_all(const Router& router, std::span<const BenchmarkItem> bench,
                                const EmbeddingStore& embeddings);

enum class CptReading {
  GapRecovery,     // target = acc_weak + x% of (acc_strong - acc_weak)
  RelativeToWeak,  // target = acc_weak * (1 + x%)
};

// Smallest strong_fraction whose linearly interpolated accuracy reaches the
// target. TargetUnreachable if no point of the curve gets there.
double cpt(const CostQualityCurve& curve, double x_percent, double acc_weak, double acc_strong,
           CptReading reading = CptReading::GapRecovery);

// Smallest-fraction curve point at or beyond the given strong fraction.
const CurvePoint& operating_point(const CostQualityCurve& curve, double strong_fraction);

std::string curve_to_csv(const CostQualityCurve& curve);
CostQualityCurve curve_from_csv(const std::string& csv);

struct CptSummary {
  double cpt50 = 0.0;
  double cpt80 = 0.0;
  Usd total_cost_all_strong;
  Usd total_cost_all_weak;
};
nlohmann::json to_json(const CptSummary& summary);

// Shortest round-trip decimal text for a double.
std::string format_double(double value);

// ---------------------------------------------------------------------------
// LLM-as-a-judge.

extern const std::string_view kJudgePromptTemplate;

// Fills the template; unused response slots read "N/A". 1-3 responses.
std::string render_judge_prompt(std::string_view question, std::string_view ground_truth,
                                std::span<const std::string> responses);

// Parses "LLM 2", "LLM 1 and LLM 3", "LLM 1, LLM 2 and LLM 3" (case-insensitive)
// into 1-based slots. UnparseableVerdict if the reply has any other shape or
// names a slot above num_slots.
std::set<int> parse_verdict(std::string_view reply, int num_slots);

class JudgeClient {
 public:
  virtual ~JudgeClient() = default;
  // messages: [{"role": ..., "content": ...}]; returns the reply content.
  virtual std::string complete(const nlohmann::json& messages) const = 0;
};

// {"messages": [...]} -> {"content": str}; JudgeFailure after retries.
class HttpJudgeClient final : public JudgeClient {
 public:
  explicit HttpJudgeClient(EndpointConfig endpoint) : endpoint_(std::move(endpoint)) {}
  std::string complete(const nlohmann::json& messages) const override;

 private:
  EndpointConfig endpoint_;
};

// Deterministic stand-in: selects every response matching the ground truth
// (answers_match) and answers with an explanation, which parses as an
// abstention, when none does.
class MockJudgeClient final : public JudgeClient {
 public:
  std::string complete(const nlohmann::json& messages) const override;
};

struct JudgeResult {
  std::string query_id;
  std::set<std::string> selected;  // router labels
};

struct LabeledResponse {
  std::string label;
  std::string text;
};

JudgeResult judge_query(const JudgeClient& judge, std::string query_id, std::string_view question,
                        std::string_view ground_truth, std::span<const LabeledResponse> responses);

// (S_i / T) * 100 where S_i counts results whose selection includes label.
double judge_score(std::span<const JudgeResult> results, std::string_view label, std::size_t total);

}  // namespace serouter
