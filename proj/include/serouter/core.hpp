#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "serouter/decimal.hpp"

namespace serouter {

enum class Tier { Strong, Weak };

enum class RouterKind { SW, MF, MLP, KNN, Random };

std::string_view to_string(Tier tier);
std::string_view to_string(RouterKind kind);
// Accepts the lower-case CLI spelling ("sw", "knn", ...) as well as upper case.
RouterKind parse_router_kind(std::string_view text);

struct ModelRef {
  std::string id;
  Tier tier = Tier::Weak;
  Usd price_per_input_token;
  Usd price_per_output_token;

  // Throws InvalidArgument on an empty id or negative prices.
  static ModelRef make(std::string id, Tier tier, Usd price_in, Usd price_out);

  Usd cost(std::int64_t in_tokens, std::int64_t out_tokens) const {
    return price_per_input_token * in_tokens + price_per_output_token * out_tokens;
  }
};

class ModelPair {
 public:
  const ModelRef& strong() const { return strong_; }
  const ModelRef& weak() const { return weak_; }
  const ModelRef& by_tier(Tier tier) const { return tier == Tier::Strong ? strong_ : weak_; }

 private:
  ModelPair(ModelRef strong, ModelRef weak) : strong_(std::move(strong)), weak_(std::move(weak)) {}
  friend ModelPair validate_model_pair(ModelRef strong, ModelRef weak);

  ModelRef strong_;
  ModelRef weak_;
};

// DuplicateId when ids are equal, TierMismatch unless tiers are (Strong, Weak).
ModelPair validate_model_pair(ModelRef strong, ModelRef weak);

struct Query {
  std::string id;
  std::string prompt;

  // Throws InvalidArgument when the prompt is blank after trimming.
  static Query make(std::string id, std::string prompt);
};

struct GenerationSample {
  std::string text;
  double seq_logprob = 0.0;  // natural-log sequence probability
  int token_count = 1;

  // Throws InvalidArgument unless seq_logprob is finite and <= 0 and token_count >= 1.
  static GenerationSample make(std::string text, double seq_logprob, int token_count);

  double length_normalized_logprob() const { return seq_logprob / token_count; }
  bool operator==(const GenerationSample&) const = default;
};

struct RoutingDecision {
  std::string query_id;
  std::string chosen;
  double p_win_strong = 0.0;
  double threshold = 0.0;
  RouterKind router_kind = RouterKind::Random;
};

// The inclusive routing rule shared by the evaluator, CLI and gateway.
inline bool routes_strong(double p_win_strong, double threshold) { return p_win_strong >= threshold; }

RoutingDecision decide_route(const ModelPair& pair, std::string query_id, double p_win_strong,
                             double threshold, RouterKind kind);

}  // namespace serouter
