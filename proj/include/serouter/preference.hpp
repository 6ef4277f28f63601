#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "serouter/core.hpp"
#include "serouter/uncertainty.hpp"

namespace serouter {

inline constexpr double kDefaultTau = 0.1;
inline constexpr double kDegenerateSeEpsilon = 1e-9;

struct SEPair {
  Query query;
  SEScore se_strong;
  SEScore se_weak;
  std::string response_strong;
  std::string response_weak;
};

enum class Winner { StrongWins, WeakWins, Tie };

std::string_view to_string(Winner winner);

// One row of the preference dataset. model_a is always the strong model.
struct PreferenceRecord {
  std::string id;
  std::string model_a;
  std::string model_b;
  std::string prompt;
  std::string response_a;
  std::string response_b;
  int winner_model_a = 0;
  int winner_model_b = 0;
  int winner_tie = 1;

  Winner winner() const;
  // Soft target for P(win_strong): 1, 0 or 0.5.
  double strong_target() const;
  bool decisive() const { return winner_tie == 0; }
  bool operator==(const PreferenceRecord&) const = default;
};

// Exactly one flag set, each in {0,1}; throws InvalidArgument otherwise.
void validate(const PreferenceRecord& record);

// |(SE_strong - SE_weak) / SE_strong|; DegenerateDenominator when SE_strong <= 1e-9.
double normalized_se_delta(const SEPair& pair);

// Lower-SE model wins when delta > tau, otherwise Tie. Degenerate denominators are Tie.
Winner decide_winner(const SEPair& pair, double tau);

struct DatasetStats {
  std::size_t strong_wins = 0;
  std::size_t weak_wins = 0;
  std::size_t ties = 0;
  std::size_t degenerate = 0;  // ties forced by SE_strong ~ 0
};

std::vector<PreferenceRecord> build_dataset(std::span<const SEPair> pairs, double tau, const ModelRef& strong,
                                            const ModelRef& weak, DatasetStats* stats = nullptr);

nlohmann::json to_json(const PreferenceRecord& record);
PreferenceRecord preference_from_json(const nlohmann::json& j);

}  // namespace serouter
