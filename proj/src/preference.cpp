#include "serouter/preference.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "serouter/errors.hpp"

namespace serouter {

std::string_view to_string(Winner winner) {
  switch (winner) {
    case Winner::StrongWins: return "strong";
    case Winner::WeakWins: return "weak";
    case Winner::Tie: return "tie";
  }
  return "tie";
}

Winner PreferenceRecord::winner() const {
  if (winner_model_a == 1) return Winner::StrongWins;
  if (winner_model_b == 1) return Winner::WeakWins;
  return Winner::Tie;
}

double PreferenceRecord::strong_target() const {
  switch (winner()) {
    case Winner::StrongWins: return 1.0;
    case Winner::WeakWins: return 0.0;
    case Winner::Tie: return 0.5;
  }
  return 0.5;
}

void validate(const PreferenceRecord& record) {
  for (int flag : {record.winner_model_a, record.winner_model_b, record.winner_tie}) {
    if (flag != 0 && flag != 1) throw Error(ErrorCode::InvalidArgument, "winner flag must be 0 or 1 in " + record.id);
  }
  if (record.winner_model_a + record.winner_model_b + record.winner_tie != 1) {
    throw Error(ErrorCode::InvalidArgument, "record " + record.id + " must have exactly one winner flag");
  }
}

double normalized_se_delta(const SEPair& pair) {
  const double strong = pair.se_strong.value;
  if (!(strong > kDegenerateSeEpsilon)) {
    throw Error(ErrorCode::DegenerateDenominator, "SE_strong is ~0 for query " + pair.query.id);
  }
  return std::fabs((strong - pair.se_weak.value) / strong);
}

Winner decide_winner(const SEPair& pair, double tau) {
  if (!(tau > 0.0)) throw Error(ErrorCode::InvalidArgument, "tau must be positive");
  double delta = 0.0;
  try {
    delta = normalized_se_delta(pair);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::DegenerateDenominator) return Winner::Tie;
    throw;
  }
  if (!(delta > tau)) return Winner::Tie;
  // delta > 0 implies the two values differ, so the argmin is unique.
  return pair.se_strong.value < pair.se_weak.value ? Winner::StrongWins : Winner::WeakWins;
}

std::vector<PreferenceRecord> build_dataset(std::span<const SEPair> pairs, double tau, const ModelRef& strong,
                                            const ModelRef& weak, DatasetStats* stats) {
  if (pairs.empty()) throw Error(ErrorCode::EmptyInput, "no SE pairs");
  DatasetStats local;
  std::vector<PreferenceRecord> records;
  records.reserve(pairs.size());
  for (const auto& pair : pairs) {
    Winner w = decide_winner(pair, tau);
    if (!(pair.se_strong.value > kDegenerateSeEpsilon)) ++local.degenerate;
    PreferenceRecord r;
    r.id = pair.query.id;
    r.model_a = strong.id;
    r.model_b = weak.id;
    r.prompt = pair.query.prompt;
    r.response_a = pair.response_strong;
    r.response_b = pair.response_weak;
    r.winner_model_a = w == Winner::StrongWins;
    r.winner_model_b = w == Winner::WeakWins;
    r.winner_tie = w == Winner::Tie;
    switch (w) {
      case Winner::StrongWins: ++local.strong_wins; break;
      case Winner::WeakWins: ++local.weak_wins; break;
      case Winner::Tie: ++local.ties; break;
    }
    records.push_back(std::move(r));
  }
  if (stats) *stats = local;
  return records;
}

nlohmann::json to_json(const PreferenceRecord& r) {
  return nlohmann::json{{"id", r.id},
                        {"model_a", r.model_a},
                        {"model_b", r.model_b},
                        {"prompt", r.prompt},
                        {"response_a", r.response_a},
                        {"response_b", r.response_b},
                        {"winner_model_a", r.winner_model_a},
                        {"winner_model_b", r.winner_model_b},
                        {"winner_tie", r.winner_tie}};
}

PreferenceRecord preference_from_json(const nlohmann::json& j) {
  PreferenceRecord r;
  try {
    r.id = j.at("id").get<std::string>();
    r.model_a = j.at("model_a").get<std::string>();
    r.model_b = j.at("model_b").get<std::string>();
    r.prompt = j.at("prompt").get<std::string>();
    r.response_a = j.at("response_a").get<std::string>();
    r.response_b = j.at("response_b").get<std::string>();
    r.winner_model_a = j.at("winner_model_a").get<int>();
    r.winner_model_b = j.at("winner_model_b").get<int>();
    r.winner_tie = j.at("winner_tie").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed preference record: ") + e.what());
  }
  validate(r);
  return r;
}

}  // namespace serouter
