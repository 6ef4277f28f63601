#include "serouter/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "serouter/errors.hpp"
#include "serouter/text.hpp"

namespace serouter {

bool MockEntailmentOracle::entails(std::string_view premise, std::string_view hypothesis) {
  auto a_tokens = normalized_tokens(premise);
  auto b_tokens = normalized_tokens(hypothesis);
  std::set<std::string> a(a_tokens.begin(), a_tokens.end());
  std::set<std::string> b(b_tokens.begin(), b_tokens.end());
  if (std::includes(b.begin(), b.end(), a.begin(), a.end())) return true;
  std::size_t common = 0;
  for (const auto& token : a) common += b.count(token);
  std::size_t unioned = a.size() + b.size() - common;
  if (unioned == 0) return true;
  // Strictly above the threshold: "A B C D E" vs "A B C" (J = 0.6) must not
  // entail forward, only via the subset rule backward.
  return static_cast<double>(common) / static_cast<double>(unioned) > kJaccardThreshold;
}

EntailmentVerdict MockEntailmentOracle::check(std::string_view a, std::string_view b) const {
  return EntailmentVerdict{entails(a, b), entails(b, a)};
}

bool HttpEntailmentOracle::entails(std::string_view premise, std::string_view hypothesis) const {
  nlohmann::json request = {{"premise", premise}, {"hypothesis", hypothesis}};
  HttpOutcome outcome = post_json(endpoint_, request);
  if (!outcome.ok()) {
    throw Error(ErrorCode::OracleFailure,
                "NLI endpoint failed after " + std::to_string(outcome.attempts) + " attempts: " + outcome.detail);
  }
  auto label = outcome.body.find("label");
  if (label == outcome.body.end() || !label->is_string()) {
    throw Error(ErrorCode::OracleFailure, "NLI response has no string 'label'");
  }
  auto value = to_lower(label->get<std::string>());
  if (value != "entailment" && value != "neutral" && value != "contradiction") {
    throw Error(ErrorCode::OracleFailure, "unknown NLI label '" + value + "'");
  }
  return value == "entailment";
}

EntailmentVerdict HttpEntailmentOracle::check(std::string_view a, std::string_view b) const {
  return EntailmentVerdict{entails(a, b), entails(b, a)};
}

std::vector<WeightedSample> normalize_sample_probs(std::span<const GenerationSample> samples) {
  if (samples.empty()) throw Error(ErrorCode::EmptyInput, "no samples to normalize");
  double max_lp = -std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    if (!std::isfinite(s.seq_logprob) || s.token_count < 1) {
      throw Error(ErrorCode::InvalidArgument, "sample with non-finite logprob or empty token count");
    }
    max_lp = std::max(max_lp, s.length_normalized_logprob());
  }
  std::vector<WeightedSample> out;
  out.reserve(samples.size());
  double total = 0.0;
  for (const auto& s : samples) {
    double w = std::exp(s.length_normalized_logprob() - max_lp);
    out.push_back({s, w});
    total += w;
  }
  for (auto& ws : out) ws.prob /= total;
  return out;
}

SemanticClustering cluster_by_entailment(std::string query_id, std::span<const GenerationSample> samples,
                                         const EntailmentOracle& oracle) {
  auto weighted = normalize_sample_probs(samples);
  SemanticClustering result;
  result.query_id = std::move(query_id);
  for (std::size_t i = 0; i < weighted.size(); ++i) {
    const auto& ws = weighted[i];
    auto it = std::find_if(result.clusters.begin(), result.clusters.end(), [&](const SemanticCluster& c) {
      return oracle.check(ws.sample.text, c.representative().text).bidirectional_equivalent();
    });
    if (it == result.clusters.end()) {
      result.clusters.push_back(SemanticCluster{{ws.sample}, {i}, ws.prob});
    } else {
      it->members.push_back(ws.sample);
      it->member_indices.push_back(i);
      it->prob_mass += ws.prob;
    }
  }
  return result;
}

SEScore semantic_entropy(const SemanticClustering& clustering) {
  if (clustering.clusters.empty()) throw Error(ErrorCode::EmptyInput, "clustering has no clusters");
  SEScore score;
  score.num_clusters = static_cast<int>(clustering.clusters.size());
  score.num_samples = 0;
  if (score.num_clusters == 1) {
    score.num_samples = static_cast<int>(clustering.clusters.front().members.size());
    score.value = 0.0;
    return score;
  }
  double sum_log = 0.0;
  for (const auto& c : clustering.clusters) {
    if (!(c.prob_mass > 0.0)) throw Error(ErrorCode::InvalidArgument, "cluster with zero probability mass");
    sum_log += std::log(c.prob_mass);
    score.num_samples += static_cast<int>(c.members.size());
  }
  score.value = std::max(0.0, -sum_log / score.num_clusters);
  return score;
}

}  // namespace serouter
