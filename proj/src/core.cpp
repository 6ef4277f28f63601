#include "serouter/core.hpp"

#include <cmath>

#include "serouter/errors.hpp"
#include "serouter/text.hpp"

namespace serouter {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::TierMismatch: return "TierMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::OracleFailure: return "OracleFailure";
    case ErrorCode::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorCode::ProviderFailure: return "ProviderFailure";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::EmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorCode::NoDecisiveRecords: return "NoDecisiveRecords";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::CorruptArtifact: return "CorruptArtifact";
    case ErrorCode::EmptyBenchmark: return "EmptyBenchmark";
    case ErrorCode::TargetUnreachable: return "TargetUnreachable";
    case ErrorCode::ZeroTotal: return "ZeroTotal";
    case ErrorCode::JudgeFailure: return "JudgeFailure";
    case ErrorCode::UnparseableVerdict: return "UnparseableVerdict";
    case ErrorCode::MissingInput: return "MissingInput";
    case ErrorCode::StageMismatch: return "StageMismatch";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

std::string_view to_string(Tier tier) { return tier == Tier::Strong ? "strong" : "weak"; }

std::string_view to_string(RouterKind kind) {
  switch (kind) {
    case RouterKind::SW: return "SW";
    case RouterKind::MF: return "MF";
    case RouterKind::MLP: return "MLP";
    case RouterKind::KNN: return "KNN";
    case RouterKind::Random: return "Random";
  }
  return "Random";
}

RouterKind parse_router_kind(std::string_view text) {
  std::string lower = to_lower(text);
  if (lower == "sw") return RouterKind::SW;
  if (lower == "mf") return RouterKind::MF;
  if (lower == "mlp") return RouterKind::MLP;
  if (lower == "knn") return RouterKind::KNN;
  if (lower == "random") return RouterKind::Random;
  throw Error(ErrorCode::InvalidArgument, "unknown router kind '" + std::string(text) + "'");
}

ModelRef ModelRef::make(std::string id, Tier tier, Usd price_in, Usd price_out) {
  if (id.empty()) throw Error(ErrorCode::InvalidArgument, "model id is empty");
  if (price_in < Usd{} || price_out < Usd{}) {
    throw Error(ErrorCode::InvalidArgument, "negative price for model " + id);
  }
  return ModelRef{std::move(id), tier, price_in, price_out};
}

ModelPair validate_model_pair(ModelRef strong, ModelRef weak) {
  if (strong.id == weak.id) throw Error(ErrorCode::DuplicateId, "both models are '" + strong.id + "'");
  if (strong.tier != Tier::Strong || weak.tier != Tier::Weak) {
    throw Error(ErrorCode::TierMismatch, "expected (strong, weak), got (" + std::string(to_string(strong.tier)) +
                                             ", " + std::string(to_string(weak.tier)) + ")");
  }
  // Re-validate in case the refs were aggregate-initialized.
  return ModelPair(ModelRef::make(std::move(strong.id), strong.tier, strong.price_per_input_token,
                                  strong.price_per_output_token),
                   ModelRef::make(std::move(weak.id), weak.tier, weak.price_per_input_token,
                                  weak.price_per_output_token));
}

Query Query::make(std::string id, std::string prompt) {
  if (trim(prompt).empty()) throw Error(ErrorCode::InvalidArgument, "prompt is blank for query '" + id + "'");
  return Query{std::move(id), std::move(prompt)};
}

GenerationSample GenerationSample::make(std::string text, double seq_logprob, int token_count) {
  if (!std::isfinite(seq_logprob) || seq_logprob > 0.0) {
    throw Error(ErrorCode::InvalidArgument, "seq_logprob must be finite and <= 0");
  }
  if (token_count < 1) throw Error(ErrorCode::InvalidArgument, "token_count must be >= 1");
  return GenerationSample{std::move(text), seq_logprob, token_count};
}

RoutingDecision decide_route(const ModelPair& pair, std::string query_id, double p_win_strong,
                             double threshold, RouterKind kind) {
  if (!(p_win_strong >= 0.0 && p_win_strong <= 1.0)) throw Error(ErrorCode::InvalidArgument, "p_win_strong outside [0, 1]");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw Error(ErrorCode::InvalidArgument, "threshold outside [0, 1]");
  const ModelRef& chosen = routes_strong(p_win_strong, threshold) ? pair.strong() : pair.weak();
  return RoutingDecision{std::move(query_id), chosen.id, p_win_strong, threshold, kind};
}

}  // namespace serouter
