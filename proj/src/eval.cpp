#include "serouter/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <regex>
#include <sstream>

#include "serouter/errors.hpp"
#include "serouter/text.hpp"

namespace serouter {

nlohmann::json to_json(const BenchmarkItem& item) {
  return nlohmann::json{{"id", item.id},
                        {"prompt", item.prompt},
                        {"reference_answer", item.reference_answer},
                        {"strong_response", item.strong_response},
                        {"strong_correct", item.strong_correct},
                        {"weak_response", item.weak_response},
                        {"weak_correct", item.weak_correct},
                        {"strong_tokens", {{"in", item.strong_tokens.in}, {"out", item.strong_tokens.out}}},
                        {"weak_tokens", {{"in", item.weak_tokens.in}, {"out", item.weak_tokens.out}}}};
}

BenchmarkItem benchmark_item_from_json(const nlohmann::json& j) {
  try {
    BenchmarkItem item;
    item.id = j.at("id").get<std::string>();
    item.prompt = j.at("prompt").get<std::string>();
    item.reference_answer = j.at("reference_answer").get<std::string>();
    item.strong_response = j.at("strong_response").get<std::string>();
    item.strong_correct = j.at("strong_correct").get<bool>();
    item.weak_response = j.at("weak_response").get<std::string>();
    item.weak_correct = j.at("weak_correct").get<bool>();
    item.strong_tokens = {j.at("strong_tokens").at("in").get<std::int64_t>(),
                          j.at("strong_tokens").at("out").get<std::int64_t>()};
    item.weak_tokens = {j.at("weak_tokens").at("in").get<std::int64_t>(),
                        j.at("weak_tokens").at("out").get<std::int64_t>()};
    if (item.strong_tokens.in < 0 || item.strong_tokens.out < 0 || item.weak_tokens.in < 0 ||
        item.weak_tokens.out < 0) {
      throw Error(ErrorCode::InvalidArgument, "negative token count in benchmark item " + item.id);
    }
    return item;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed benchmark item: ") + e.what());
  }
}

double benchmark_accuracy(std::span<const BenchmarkItem> bench, Tier tier) {
  if (bench.empty()) throw Error(ErrorCode::EmptyBenchmark, "benchmark is empty");
  std::size_t correct = 0;
  for (const auto& item : bench) correct += item.correct(tier);
  return static_cast<double>(correct) / static_cast<double>(bench.size());
}

Usd total_cost(std::span<const BenchmarkItem> bench, const ModelRef& model) {
  Usd total;
  for (const auto& item : bench) {
    const auto& t = item.tokens(model.tier);
    total += model.cost(t.in, t.out);
  }
  return total;
}

double all_weak_threshold() { return std::nextafter(1.0, 2.0); }

CostQualityCurve sweep(std::span<const double> predictions, std::span<const BenchmarkItem> bench,
                       const ModelPair& pair) {
  if (bench.empty()) throw Error(ErrorCode::EmptyBenchmark, "benchmark is empty");
  if (predictions.size() != bench.size()) {
    throw Error(ErrorCode::InvalidArgument, "one prediction per benchmark item is required");
  }
  const std::size_t n = bench.size();
  for (double p : predictions) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidArgument, "prediction outside [0, 1]");
  }
  // Items sorted by prediction descending: every threshold routes a prefix to strong.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return predictions[a] > predictions[b]; });

  std::vector<double> thresholds(predictions.begin(), predictions.end());
  thresholds.push_back(0.0);
  thresholds.push_back(all_weak_threshold());
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  long correct = 0;
  Usd cost;
  for (const auto& item : bench) {
    correct += item.weak_correct;
    cost += pair.weak().cost(item.weak_tokens.in, item.weak_tokens.out);
  }

  std::vector<CurvePoint> raw;
  std::size_t routed = 0;
  for (double alpha : thresholds) {
    while (routed < n && routes_strong(predictions[order[routed]], alpha)) {
      const auto& item = bench[order[routed]];
      correct += static_cast<long>(item.strong_correct) - static_cast<long>(item.weak_correct);
      cost += pair.strong().cost(item.strong_tokens.in, item.strong_tokens.out);
      cost += Usd::from_pico(-pair.weak().cost(item.weak_tokens.in, item.weak_tokens.out).pico());
      ++routed;
    }
    raw.push_back(CurvePoint{alpha, static_cast<double>(routed) / static_cast<double>(n),
                             static_cast<double>(correct) / static_cast<double>(n), cost});
  }
  // Thresholds were visited descending, so fractions are already ascending.
  CostQualityCurve curve;
  for (const auto& p : raw) {
    if (!curve.points.empty() && curve.points.back().strong_fraction == p.strong_fraction) {
      if (p.accuracy > curve.points.back().accuracy) curve.points.back() = p;
      continue;
    }
    curve.points.push_back(p);
  }
  return curve;
}

std::vector<double> predict_all(const Router& router, std::span<const BenchmarkItem> bench,
                                const EmbeddingStore& embeddings) {
  std::vector<double> predictions;
  predictions.reserve(bench.size());
  static const EmbeddingVector kUnused{{0.0}};
  for (const auto& item : bench) {
    const EmbeddingVector& q = router.embedding_dim() == 0 ? kUnused : embeddings.at(item.id);
    predictions.push_back(router.predict(item.id, q));
  }
  return predictions;
}

CostQualityCurve sweep(const Router& router, std::span<const BenchmarkItem> bench, const EmbeddingStore& embeddings,
                       const ModelPair& pair) {
  if (bench.empty()) throw Error(ErrorCode::EmptyBenchmark, "benchmark is empty");
  auto predictions = predict_all(router, bench, embeddings);
  return sweep(predictions, bench, pair);
}

double cpt(const CostQualityCurve& curve, double x_percent, double acc_weak, double acc_strong, CptReading reading) {
  if (!(x_percent > 0.0 && x_percent <= 100.0)) throw Error(ErrorCode::InvalidArgument, "x must be in (0, 100]");
  if (!(acc_strong > acc_weak)) throw Error(ErrorCode::InvalidArgument, "strong accuracy must exceed weak accuracy");
  if (curve.points.empty()) throw Error(ErrorCode::EmptyBenchmark, "curve has no points");
  const double target = reading == CptReading::GapRecovery ? acc_weak + (x_percent / 100.0) * (acc_strong - acc_weak)
                                                           : acc_weak * (1.0 + x_percent / 100.0);
  // Absorbs rounding in the target so the all-strong endpoint reaches x = 100.
  constexpr double kSlack = 1e-12;
  const auto& pts = curve.points;
  if (pts.front().accuracy >= target - kSlack) return pts.front().strong_fraction;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (pts[i].accuracy >= target - kSlack) {
      const auto& a = pts[i - 1];
      const auto& b = pts[i];
      const double t = std::clamp((target - a.accuracy) / (b.accuracy - a.accuracy), 0.0, 1.0);
      return a.strong_fraction + t * (b.strong_fraction - a.strong_fraction);
    }
  }
  throw Error(ErrorCode::TargetUnreachable, "no curve point reaches accuracy " + format_double(target));
}

const CurvePoint& operating_point(const CostQualityCurve& curve, double strong_fraction) {
  if (curve.points.empty()) throw Error(ErrorCode::EmptyBenchmark, "curve has no points");
  for (const auto& p : curve.points) {
    if (p.strong_fraction >= strong_fraction - 1e-12) return p;
  }
  return curve.points.back();
}

std::string format_double(double value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

std::string curve_to_csv(const CostQualityCurve& curve) {
  std::string out = "threshold,strong_fraction,accuracy,cost_usd\n";
  for (const auto& p : curve.points) {
    out += format_double(p.threshold) + "," + format_double(p.strong_fraction) + "," + format_double(p.accuracy) +
           "," + p.cost_usd.to_string() + "\n";
  }
  return out;
}

CostQualityCurve curve_from_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != "threshold,strong_fraction,accuracy,cost_usd") {
    throw Error(ErrorCode::InvalidArgument, "curve CSV has an unexpected header");
  }
  CostQualityCurve curve;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != 4) throw Error(ErrorCode::InvalidArgument, "curve CSV row needs 4 cells: " + line);
    CurvePoint p;
    double* targets[] = {&p.threshold, &p.strong_fraction, &p.accuracy};
    for (int i = 0; i < 3; ++i) {
      auto [ptr, ec] = std::from_chars(cells[i].data(), cells[i].data() + cells[i].size(), *targets[i]);
      if (ec != std::errc()) throw Error(ErrorCode::InvalidArgument, "bad number in curve CSV: " + cells[i]);
    }
    p.cost_usd = Usd::parse(cells[3]);
    curve.points.push_back(p);
  }
  return curve;
}

nlohmann::json to_json(const CptSummary& s) {
  return nlohmann::json{{"cpt50", s.cpt50},
                        {"cpt80", s.cpt80},
                        {"total_cost_all_strong", s.total_cost_all_strong.to_string()},
                        {"total_cost_all_weak", s.total_cost_all_weak.to_string()}};
}

// ---------------------------------------------------------------------------

const std::string_view kJudgePromptTemplate =
    "You are an evaluator for math problem solutions. You will receive:\n"
    "1. A question.\n"
    "2. A ground truth answer.\n"
    "3. Three LLM-generated responses.\n"
    "Your task is to select which response(s) is/are best, based on whether the answer is correct and the "
    "reasoning is precise.\n"
    "Follow these rules: \n"
    "* DO NOT provide any explanation or reasoning in your answer-only state which LLM(s) you judge as having the "
    "best response.\n"
    "* If more than one response is equally best, name each of them.\n"
    "Question: {}\n"
    "Ground Truth Answer:{}\n"
    "LLM 1 Response: {}\n"
    "LLM 2 Response: {}\n"
    "LLM 3 Response: {}\n"
    "Your output must ONLY indicate the selected LLM(s). For example, 'LLM 1' or 'LLM 1 and LLM 3'.";

std::string render_judge_prompt(std::string_view question, std::string_view ground_truth,
                                std::span<const std::string> responses) {
  if (responses.empty() || responses.size() > 3) {
    throw Error(ErrorCode::InvalidArgument, "the judge prompt takes 1 to 3 responses");
  }
  std::vector<std::string_view> slots{question, ground_truth};
  for (std::size_t i = 0; i < 3; ++i) slots.push_back(i < responses.size() ? std::string_view(responses[i]) : "N/A");
  std::string out;
  std::size_t next = 0;
  std::string_view tmpl = kJudgePromptTemplate;
  for (std::size_t pos = 0; pos < tmpl.size();) {
    if (tmpl.compare(pos, 2, "{}") == 0) {
      out += slots.at(next++);
      pos += 2;
    } else {
      out += tmpl[pos++];
    }
  }
  return out;
}

std::set<int> parse_verdict(std::string_view reply, int num_slots) {
  static const std::regex kShape(
      R"(^\s*['"`]?\s*llm\s*([1-3])((\s*,\s*(and\s+)?|\s+and\s+)llm\s*([1-3]))*\s*['"`]?\s*\.?\s*$)",
      std::regex::icase | std::regex::ECMAScript);
  static const std::regex kSlot(R"(llm\s*([1-3]))", std::regex::icase | std::regex::ECMAScript);
  const std::string text(reply);
  if (!std::regex_match(text, kShape)) {
    throw Error(ErrorCode::UnparseableVerdict, "judge reply '" + text + "'");
  }
  std::set<int> slots;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), kSlot); it != std::sregex_iterator(); ++it) {
    int slot = std::stoi((*it)[1].str());
    if (slot > num_slots) throw Error(ErrorCode::UnparseableVerdict, "judge selected unfilled slot " + std::to_string(slot));
    slots.insert(slot);
  }
  return slots;
}

std::string HttpJudgeClient::complete(const nlohmann::json& messages) const {
  HttpOutcome outcome = post_json(endpoint_, nlohmann::json{{"messages", messages}});
  if (!outcome.ok()) {
    throw Error(ErrorCode::JudgeFailure,
                "judge endpoint failed after " + std::to_string(outcome.attempts) + " attempts: " + outcome.detail);
  }
  auto content = outcome.body.find("content");
  if (content == outcome.body.end() || !content->is_string()) {
    throw Error(ErrorCode::JudgeFailure, "judge response has no string 'content'");
  }
  return content->get<std::string>();
}

std::string MockJudgeClient::complete(const nlohmann::json& messages) const {
  const std::string prompt = messages.at(0).at("content").get<std::string>();
  std::istringstream in(prompt);
  std::string line, truth;
  std::vector<std::pair<int, std::string>> responses;
  while (std::getline(in, line)) {
    if (line.rfind("Ground Truth Answer:", 0) == 0) truth = line.substr(20);
    for (int slot = 1; slot <= 3; ++slot) {
      std::string prefix = "LLM " + std::to_string(slot) + " Response: ";
      if (line.rfind(prefix, 0) == 0) responses.emplace_back(slot, line.substr(prefix.size()));
    }
  }
  std::vector<int> chosen;
  for (const auto& [slot, text] : responses) {
    if (text != "N/A" && answers_match(text, truth)) chosen.push_back(slot);
  }
  if (chosen.empty()) return "None of the responses reach the ground truth.";
  std::string out;
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    if (i > 0) out += i + 1 == chosen.size() ? " and " : ", ";
    out += "LLM " + std::to_string(chosen[i]);
  }
  return out;
}

JudgeResult judge_query(const JudgeClient& judge, std::string query_id, std::string_view question,
                        std::string_view ground_truth, std::span<const LabeledResponse> responses) {
  std::vector<std::string> texts;
  for (const auto& r : responses) texts.push_back(r.text);
  nlohmann::json messages = nlohmann::json::array(
      {{{"role", "system"}, {"content", render_judge_prompt(question, ground_truth, texts)}}});
  const std::string reply = judge.complete(messages);
  JudgeResult result{std::move(query_id), {}};
  for (int slot : parse_verdict(reply, static_cast<int>(responses.size()))) {
    result.selected.insert(responses[slot - 1].label);
  }
  return result;
}

double judge_score(std::span<const JudgeResult> results, std::string_view label, std::size_t total) {
  if (total == 0) throw Error(ErrorCode::ZeroTotal, "no judged queries");
  std::size_t selected = 0;
  for (const auto& r : results) selected += r.selected.count(std::string(label));
  return static_cast<double>(selected) / static_cast<double>(total) * 100.0;
}

}  // namespace serouter
