#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "serouter/core.hpp"
#include "serouter/embed.hpp"
#include "serouter/preference.hpp"

namespace serouter {

struct TrainingExample {
  std::string id;
  EmbeddingVector embedding;
  Winner winner = Winner::Tie;

  double strong_target() const { return winner == Winner::StrongWins ? 1.0 : winner == Winner::WeakWins ? 0.0 : 0.5; }
};

class TrainingSet {
 public:
  // Every record id must have an embedding in the store; all share one dim.
  static TrainingSet make(std::span<const PreferenceRecord> records, const EmbeddingStore& store);
  static TrainingSet from_examples(std::vector<TrainingExample> examples);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return examples_.size(); }
  bool empty() const { return examples_.empty(); }
  const std::vector<TrainingExample>& examples() const { return examples_; }
  const TrainingExample& operator[](std::size_t i) const { return examples_[i]; }

  nlohmann::json to_json() const;
  static TrainingSet from_json(const nlohmann::json& j);

 private:
  std::vector<TrainingExample> examples_;
  std::size_t dim_ = 0;
};

// A trained, immutable router. predict() returns P(win_strong) in [0, 1] and
// is safe to call concurrently.
class Router {
 public:
  virtual ~Router() = default;
  virtual RouterKind kind() const = 0;
  // 0 when the router ignores the embedding (Random).
  virtual std::size_t embedding_dim() const = 0;
  virtual std::uint64_t seed() const { return 0; }
  virtual double predict(std::string_view query_id, const EmbeddingVector& query) const = 0;
  virtual nlohmann::json parameters() const = 0;
};

// ---------------------------------------------------------------------------
// Similarity-weighted Bradley-Terry ranking.

struct SwConfig {
  double gamma = 10.0;
  int steps = 200;
  double learning_rate = 0.05;
};

// gamma^(1 + similarity).
double sw_weight(double gamma, double similarity);

struct BradleyTerryFit {
  double xi_strong = 0.0;
  double xi_weak = 0.0;

  double p_win_strong() const;
};

// Gradient descent from xi = 0 on the weighted mean of
// BCE(target_i, sigmoid(xi_strong - xi_weak)). Dividing by the weight total
// does not move the minimizer and keeps the step size independent of |D|.
BradleyTerryFit fit_bradley_terry(std::span<const double> weights, std::span<const double> targets, int steps,
                                  double learning_rate);

class SwRouter final : public Router {
 public:
  SwRouter(TrainingSet training, SwConfig config = {});

  RouterKind kind() const override { return RouterKind::SW; }
  std::size_t embedding_dim() const override { return training_.dim(); }
  double predict(std::string_view query_id, const EmbeddingVector& query) const override;
  nlohmann::json parameters() const override;
  static std::unique_ptr<SwRouter> from_parameters(const nlohmann::json& j);

  // cos(q, e_i) / max_{s != i} cos(e_i, e_s); not clamped, may exceed 1.
  double similarity(const EmbeddingVector& query, std::size_t i) const;
  std::vector<double> weights(const EmbeddingVector& query) const;
  const SwConfig& config() const { return config_; }

 private:
  TrainingSet training_;
  SwConfig config_;
  std::vector<double> normalizers_;
};

// ---------------------------------------------------------------------------
// Bilinear matrix factorization: s(M, q) = v_M . (P^T e) + b_M.

struct MfConfig {
  std::size_t latent_dim = 8;
  int epochs = 50;
  double learning_rate = 0.01;
  double init_scale = 0.1;  // projection ~ U(-init_scale, init_scale)
  std::uint64_t seed = 0;
};

class MfRouter final : public Router {
 public:
  static MfRouter zeros(std::size_t dim, std::size_t latent_dim);

  RouterKind kind() const override { return RouterKind::MF; }
  std::size_t embedding_dim() const override { return dim_; }
  std::uint64_t seed() const override { return seed_; }
  double predict(std::string_view query_id, const EmbeddingVector& query) const override;
  nlohmann::json parameters() const override;
  static std::unique_ptr<MfRouter> from_parameters(const nlohmann::json& j, std::uint64_t seed);

  double score(Tier tier, const EmbeddingVector& query) const;
  // Mean BCE against the soft strong targets.
  double loss(const TrainingSet& ts) const;

  std::size_t latent_dim() const { return latent_; }
  const std::vector<double>& projection() const { return projection_; }
  const std::array<std::vector<double>, 2>& model_vectors() const { return model_vectors_; }
  const std::array<double, 2>& bias() const { return bias_; }

 private:
  friend MfRouter mf_train(const TrainingSet&, const MfConfig&, std::vector<double>*);
  std::vector<double> latent(const EmbeddingVector& query) const;

  std::size_t dim_ = 0;
  std::size_t latent_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<double> projection_;                  // dim x latent, row-major
  std::array<std::vector<double>, 2> model_vectors_;  // [strong, weak]
  std::array<double, 2> bias_{0.0, 0.0};
};

// Per-record SGD in a seeded shuffled order. NoDecisiveRecords if every record is a tie.
// epoch_losses, when given, receives the training loss after each epoch.
MfRouter mf_train(const TrainingSet& ts, const MfConfig& config, std::vector<double>* epoch_losses = nullptr);

// ---------------------------------------------------------------------------
// Two-layer perceptron with a 3-way softmax over {strong-win, weak-win, tie}.

struct MlpConfig {
  std::size_t hidden = 128;
  int epochs = 100;
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
};

enum MlpClass : int { kStrongWin = 0, kWeakWin = 1, kTie = 2 };

class MlpRouter final : public Router {
 public:
  static MlpRouter zeros(std::size_t dim, std::size_t hidden);
  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
  static MlpRouter random_init(std::size_t dim, std::size_t hidden, std::uint64_t seed);

  RouterKind kind() const override { return RouterKind::MLP; }
  std::size_t embedding_dim() const override { return dim_; }
  std::uint64_t seed() const override { return seed_; }
  // p(strong-win) + 0.5 * p(tie).
  double predict(std::string_view query_id, const EmbeddingVector& query) const override;
  nlohmann::json parameters() const override;
  static std::unique_ptr<MlpRouter> from_parameters(const nlohmann::json& j, std::uint64_t seed);

  std::array<double, 3> forward(const EmbeddingVector& query) const;

  // Mean cross-entropy over the batch; gradient (same layout as params()) by backprop.
  double loss_and_gradient(std::span<const EmbeddingVector* const> inputs, std::span<const int> classes,
                           std::vector<double>* gradient) const;

  // Flat parameter block: W1 (dim x hidden), b1, W2 (hidden x 3), b2.
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  std::size_t hidden() const { return hidden_; }

 private:
  friend MlpRouter mlp_train(const TrainingSet&, const MlpConfig&, std::vector<double>*);
  MlpRouter(std::size_t dim, std::size_t hidden);
  std::size_t w1() const { return 0; }
  std::size_t b1() const { return dim_ * hidden_; }
  std::size_t w2() const { return b1() + hidden_; }
  std::size_t b2() const { return w2() + hidden_ * 3; }

  std::size_t dim_ = 0;
  std::size_t hidden_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<double> params_;
};

int mlp_class(Winner winner);

// Mini-batch Adam on the mean cross-entropy. EmptyTrainingSet on empty input.
MlpRouter mlp_train(const TrainingSet& ts, const MlpConfig& config, std::vector<double>* epoch_losses = nullptr);

// ---------------------------------------------------------------------------
// k nearest neighbours by cosine similarity.

class KnnRouter final : public Router {
 public:
  KnnRouter(TrainingSet training, std::size_t k = 1);

  RouterKind kind() const override { return RouterKind::KNN; }
  std::size_t embedding_dim() const override { return training_.dim(); }
  // Mean strong target of the k most similar records; similarity ties go to the lower index.
  double predict(std::string_view query_id, const EmbeddingVector& query) const override;
  nlohmann::json parameters() const override;
  static std::unique_ptr<KnnRouter> from_parameters(const nlohmann::json& j);

  std::vector<std::size_t> neighbours(const EmbeddingVector& query) const;
  std::size_t k() const { return k_; }

 private:
  TrainingSet training_;
  std::size_t k_;
};

// ---------------------------------------------------------------------------
// Untrained baseline.

// Uniform in [0, 1), a pure function of (seed, query_id).
double random_predict(std::uint64_t seed, std::string_view query_id);

class RandomRouter final : public Router {
 public:
  explicit RandomRouter(std::uint64_t seed) : seed_(seed) {}

  RouterKind kind() const override { return RouterKind::Random; }
  std::size_t embedding_dim() const override { return 0; }
  std::uint64_t seed() const override { return seed_; }
  double predict(std::string_view query_id, const EmbeddingVector&) const override {
    return random_predict(seed_, query_id);
  }
  nlohmann::json parameters() const override { return nlohmann::json::object(); }

 private:
  std::uint64_t seed_;
};

double sigmoid(double x);

}  // namespace serouter
