#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "serouter/core.hpp"
#include "serouter/http.hpp"

namespace serouter {

struct EntailmentVerdict {
  bool forward = false;   // a entails b
  bool backward = false;  // b entails a

  bool bidirectional_equivalent() const { return forward && backward; }
};

// Implementations must be safe to call concurrently.
class EntailmentOracle {
 public:
  virtual ~EntailmentOracle() = default;
  virtual EntailmentVerdict check(std::string_view a, std::string_view b) const = 0;
};

// Token-overlap stand-in for an NLI model. Not semantic: a entails b when the
// normalized token sets overlap strongly or a's tokens are a subset of b's.
class MockEntailmentOracle final : public EntailmentOracle {
 public:
  static constexpr double kJaccardThreshold = 0.6;

  EntailmentVerdict check(std::string_view a, std::string_view b) const override;
  static bool entails(std::string_view premise, std::string_view hypothesis);
};

// NLI service client: {"premise","hypothesis"} -> {"label"}; one request per
// direction. Throws OracleFailure once retries are exhausted.
class HttpEntailmentOracle final : public EntailmentOracle {
 public:
  explicit HttpEntailmentOracle(EndpointConfig endpoint) : endpoint_(std::move(endpoint)) {}
  EntailmentVerdict check(std::string_view a, std::string_view b) const override;

 private:
  bool entails(std::string_view premise, std::string_view hypothesis) const;
  EndpointConfig endpoint_;
};

struct WeightedSample {
  GenerationSample sample;
  double prob = 0.0;
};

struct SemanticCluster {
  std::vector<GenerationSample> members;    // members[0] is the representative
  std::vector<std::size_t> member_indices;  // positions in the input sample list
  double prob_mass = 0.0;

  const GenerationSample& representative() const { return members.front(); }
};

struct SemanticClustering {
  std::string query_id;
  std::vector<SemanticCluster> clusters;
};

struct SEScore {
  double value = 0.0;  // nats
  int num_clusters = 1;
  int num_samples = 1;
};

// exp(seq_logprob / token_count) per sample, renormalized to sum to 1.
// Computed in log space so very negative log-probs do not underflow.
std::vector<WeightedSample> normalize_sample_probs(std::span<const GenerationSample> samples);

// Greedy first-match clustering against each cluster's first member, in
// cluster creation order. Oracle exceptions propagate; no partial result.
SemanticClustering cluster_by_entailment(std::string query_id, std::span<const GenerationSample> samples,
                                         const EntailmentOracle& oracle);

// -(1/|C|) * sum_i ln p(C_i | x). Note the 1/|C| average rather than a
// p-weighted sum; this is the estimator the router is trained against.
SEScore semantic_entropy(const SemanticClustering& clustering);

}  // namespace serouter
