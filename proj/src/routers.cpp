#include "serouter/routers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "serouter/errors.hpp"
#include "serouter/rng.hpp"

namespace serouter {
namespace {

Winner parse_winner(const std::string& text) {
  if (text == "strong") return Winner::StrongWins;
  if (text == "weak") return Winner::WeakWins;
  if (text == "tie") return Winner::Tie;
  throw Error(ErrorCode::InvalidArgument, "unknown winner '" + text + "'");
}

double clamp01(double p) { return std::isfinite(p) ? std::clamp(p, 0.0, 1.0) : 0.5; }

void check_query_dim(std::size_t expected, const EmbeddingVector& query) {
  if (query.dim() != expected) {
    throw Error(ErrorCode::DimensionMismatch,
                "query dim " + std::to_string(query.dim()) + ", router dim " + std::to_string(expected));
  }
}

// BCE with a soft target, stable for large |logit|.
double bce_with_logit(double logit, double target) {
  // -[t log s(x) + (1-t) log(1-s(x))] = softplus(x) - t x
  double softplus = logit > 0 ? logit + std::log1p(std::exp(-logit)) : std::log1p(std::exp(logit));
  return softplus - target * logit;
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

// ---------------------------------------------------------------------------

TrainingSet TrainingSet::make(std::span<const PreferenceRecord> records, const EmbeddingStore& store) {
  std::vector<TrainingExample> examples;
  examples.reserve(records.size());
  for (const auto& r : records) {
    validate(r);
    examples.push_back(TrainingExample{r.id, store.at(r.id), r.winner()});
  }
  return from_examples(std::move(examples));
}

TrainingSet TrainingSet::from_examples(std::vector<TrainingExample> examples) {
  TrainingSet ts;
  for (const auto& ex : examples) {
    if (ts.dim_ == 0) ts.dim_ = ex.embedding.dim();
    if (ex.embedding.dim() != ts.dim_) {
      throw Error(ErrorCode::DimensionMismatch, "training example '" + ex.id + "' has dim " +
                                                    std::to_string(ex.embedding.dim()));
    }
  }
  ts.examples_ = std::move(examples);
  return ts;
}

nlohmann::json TrainingSet::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& ex : examples_) {
    rows.push_back({{"id", ex.id}, {"winner", to_string(ex.winner)}, {"embedding", ex.embedding.values}});
  }
  return {{"dim", dim_}, {"examples", std::move(rows)}};
}

TrainingSet TrainingSet::from_json(const nlohmann::json& j) {
  std::vector<TrainingExample> examples;
  for (const auto& row : j.at("examples")) {
    examples.push_back(TrainingExample{row.at("id").get<std::string>(),
                                       EmbeddingVector::make(row.at("embedding").get<std::vector<double>>()),
                                       parse_winner(row.at("winner").get<std::string>())});
  }
  auto ts = from_examples(std::move(examples));
  if (!ts.empty() && ts.dim() != j.at("dim").get<std::size_t>()) {
    throw Error(ErrorCode::DimensionMismatch, "training set dim does not match its header");
  }
  return ts;
}

// ---------------------------------------------------------------------------

double sw_weight(double gamma, double similarity) { return std::pow(gamma, 1.0 + similarity); }

double BradleyTerryFit::p_win_strong() const { return sigmoid(xi_strong - xi_weak); }

BradleyTerryFit fit_bradley_terry(std::span<const double> weights, std::span<const double> targets, int steps,
                                  double learning_rate) {
  if (weights.size() != targets.size()) throw Error(ErrorCode::InvalidArgument, "weights/targets size mismatch");
  if (weights.empty()) throw Error(ErrorCode::EmptyTrainingSet, "no comparisons to fit");
  double total = 0.0;
  double weighted_target = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    total += weights[i];
    weighted_target += weights[i] * targets[i];
  }
  if (!(total > 0.0)) throw Error(ErrorCode::InvalidArgument, "weights must sum to a positive value");
  const double mean_target = weighted_target / total;
  BradleyTerryFit fit;
  for (int step = 0; step < steps; ++step) {
    // d/d(xi_strong) of the weighted mean BCE; d/d(xi_weak) is its negative.
    double grad = sigmoid(fit.xi_strong - fit.xi_weak) - mean_target;
    fit.xi_strong -= learning_rate * grad;
    fit.xi_weak += learning_rate * grad;
  }
  return fit;
}

SwRouter::SwRouter(TrainingSet training, SwConfig config) : training_(std::move(training)), config_(config) {
  if (training_.empty()) throw Error(ErrorCode::EmptyTrainingSet, "SW router needs training records");
  if (!std::isfinite(config_.gamma) || !(config_.gamma > 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "gamma must be finite and > 1");
  }
  const std::size_t n = training_.size();
  normalizers_.assign(n, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t s = i + 1; s < n; ++s) {
      double c = cosine(training_[i].embedding, training_[s].embedding);
      normalizers_[i] = std::max(normalizers_[i], c);
      normalizers_[s] = std::max(normalizers_[s], c);
    }
  }
  // No usable neighbour (single record, or nothing positively similar): leave cos unscaled.
  for (double& m : normalizers_) {
    if (!(m > 1e-12)) m = 1.0;
  }
}

double SwRouter::similarity(const EmbeddingVector& query, std::size_t i) const {
  return cosine(query, training_[i].embedding) / normalizers_[i];
}

std::vector<double> SwRouter::weights(const EmbeddingVector& query) const {
  check_query_dim(training_.dim(), query);
  std::vector<double> w(training_.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = sw_weight(config_.gamma, similarity(query, i));
  return w;
}

double SwRouter::predict(std::string_view, const EmbeddingVector& query) const {
  check_query_dim(training_.dim(), query);
  const std::size_t n = training_.size();
  // Weights in log space, shifted by the max: a global rescale leaves the fit unchanged.
  std::vector<double> log_w(n);
  std::vector<double> targets(n);
  const double log_gamma = std::log(config_.gamma);
  for (std::size_t i = 0; i < n; ++i) {
    log_w[i] = (1.0 + similarity(query, i)) * log_gamma;
    targets[i] = training_[i].strong_target();
  }
  const double shift = *std::max_element(log_w.begin(), log_w.end());
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = std::exp(log_w[i] - shift);
  return clamp01(fit_bradley_terry(w, targets, config_.steps, config_.learning_rate).p_win_strong());
}

nlohmann::json SwRouter::parameters() const {
  return {{"gamma", config_.gamma},
          {"steps", config_.steps},
          {"learning_rate", config_.learning_rate},
          {"training", training_.to_json()}};
}

std::unique_ptr<SwRouter> SwRouter::from_parameters(const nlohmann::json& j) {
  SwConfig cfg;
  cfg.gamma = j.at("gamma").get<double>();
  cfg.steps = j.at("steps").get<int>();
  cfg.learning_rate = j.at("learning_rate").get<double>();
  return std::make_unique<SwRouter>(TrainingSet::from_json(j.at("training")), cfg);
}

// ---------------------------------------------------------------------------

MfRouter MfRouter::zeros(std::size_t dim, std::size_t latent_dim) {
  if (dim == 0 || latent_dim == 0) throw Error(ErrorCode::InvalidArgument, "MF dims must be positive");
  MfRouter m;
  m.dim_ = dim;
  m.latent_ = latent_dim;
  m.projection_.assign(dim * latent_dim, 0.0);
  m.model_vectors_ = {std::vector<double>(latent_dim, 0.0), std::vector<double>(latent_dim, 0.0)};
  return m;
}

std::vector<double> MfRouter::latent(const EmbeddingVector& query) const {
  std::vector<double> z(latent_, 0.0);
  for (std::size_t i = 0; i < dim_; ++i) {
    const double x = query.values[i];
    if (x == 0.0) continue;
    const double* row = &projection_[i * latent_];
    for (std::size_t k = 0; k < latent_; ++k) z[k] += x * row[k];
  }
  return z;
}

double MfRouter::score(Tier tier, const EmbeddingVector& query) const {
  check_query_dim(dim_, query);
  const int m = tier == Tier::Strong ? 0 : 1;
  auto z = latent(query);
  return std::inner_product(z.begin(), z.end(), model_vectors_[m].begin(), bias_[m]);
}

double MfRouter::predict(std::string_view, const EmbeddingVector& query) const {
  return clamp01(sigmoid(score(Tier::Strong, query) - score(Tier::Weak, query)));
}

double MfRouter::loss(const TrainingSet& ts) const {
  if (ts.empty()) return 0.0;
  double total = 0.0;
  for (const auto& ex : ts.examples()) {
    total += bce_with_logit(score(Tier::Strong, ex.embedding) - score(Tier::Weak, ex.embedding), ex.strong_target());
  }
  return total / static_cast<double>(ts.size());
}

nlohmann::json MfRouter::parameters() const {
  return {{"dim", dim_},
          {"latent_dim", latent_},
          {"projection", projection_},
          {"model_vectors", {model_vectors_[0], model_vectors_[1]}},
          {"bias", {bias_[0], bias_[1]}}};
}

std::unique_ptr<MfRouter> MfRouter::from_parameters(const nlohmann::json& j, std::uint64_t seed) {
  auto m = std::make_unique<MfRouter>(zeros(j.at("dim").get<std::size_t>(), j.at("latent_dim").get<std::size_t>()));
  m->seed_ = seed;
  auto projection = j.at("projection").get<std::vector<double>>();
  auto vectors = j.at("model_vectors").get<std::vector<std::vector<double>>>();
  auto bias = j.at("bias").get<std::vector<double>>();
  if (projection.size() != m->projection_.size() || vectors.size() != 2 || vectors[0].size() != m->latent_ ||
      vectors[1].size() != m->latent_ || bias.size() != 2) {
    throw Error(ErrorCode::CorruptArtifact, "MF parameter shapes do not match header");
  }
  m->projection_ = std::move(projection);
  m->model_vectors_ = {std::move(vectors[0]), std::move(vectors[1])};
  m->bias_ = {bias[0], bias[1]};
  return m;
}

MfRouter mf_train(const TrainingSet& ts, const MfConfig& config, std::vector<double>* epoch_losses) {
  if (ts.empty()) throw Error(ErrorCode::EmptyTrainingSet, "MF training set is empty");
  if (std::none_of(ts.examples().begin(), ts.examples().end(), [](const auto& ex) { return ex.winner != Winner::Tie; })) {
    throw Error(ErrorCode::NoDecisiveRecords, "MF needs at least one non-tie record");
  }
  MfRouter model = MfRouter::zeros(ts.dim(), config.latent_dim);
  model.seed_ = config.seed;
  Rng rng(config.seed);
  for (double& p : model.projection_) p = rng.uniform(-config.init_scale, config.init_scale);

  const std::size_t L = model.latent_;
  std::vector<std::size_t> order(ts.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> diff(L);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t idx : order) {
      const auto& ex = ts[idx];
      auto z = model.latent(ex.embedding);
      double d = model.bias_[0] - model.bias_[1];
      for (std::size_t k = 0; k < L; ++k) {
        diff[k] = model.model_vectors_[0][k] - model.model_vectors_[1][k];
        d += diff[k] * z[k];
      }
      const double g = sigmoid(d) - ex.strong_target();
      const double step = config.learning_rate * g;
      for (std::size_t k = 0; k < L; ++k) {
        model.model_vectors_[0][k] -= step * z[k];
        model.model_vectors_[1][k] += step * z[k];
      }
      model.bias_[0] -= step;
      model.bias_[1] += step;
      for (std::size_t i = 0; i < model.dim_; ++i) {
        const double x = ex.embedding.values[i];
        if (x == 0.0) continue;
        double* row = &model.projection_[i * L];
        for (std::size_t k = 0; k < L; ++k) row[k] -= step * x * diff[k];
      }
    }
    if (epoch_losses) epoch_losses->push_back(model.loss(ts));
  }
  return model;
}

// ---------------------------------------------------------------------------

MlpRouter::MlpRouter(std::size_t dim, std::size_t hidden) : dim_(dim), hidden_(hidden) {
  if (dim == 0 || hidden == 0) throw Error(ErrorCode::InvalidArgument, "MLP dims must be positive");
  params_.assign(dim * hidden + hidden + hidden * 3 + 3, 0.0);
}

MlpRouter MlpRouter::zeros(std::size_t dim, std::size_t hidden) { return MlpRouter(dim, hidden); }

MlpRouter MlpRouter::random_init(std::size_t dim, std::size_t hidden, std::uint64_t seed) {
  MlpRouter m(dim, hidden);
  m.seed_ = seed;
  Rng rng(seed);
  const double bound1 = 1.0 / std::sqrt(static_cast<double>(dim));
  const double bound2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (std::size_t i = m.w1(); i < m.b1(); ++i) m.params_[i] = rng.uniform(-bound1, bound1);
  for (std::size_t i = m.w2(); i < m.b2(); ++i) m.params_[i] = rng.uniform(-bound2, bound2);
  return m;
}

int mlp_class(Winner winner) {
  switch (winner) {
    case Winner::StrongWins: return kStrongWin;
    case Winner::WeakWins: return kWeakWin;
    case Winner::Tie: return kTie;
  }
  return kTie;
}

std::array<double, 3> MlpRouter::forward(const EmbeddingVector& query) const {
  check_query_dim(dim_, query);
  std::vector<double> h(params_.begin() + b1(), params_.begin() + w2());
  for (std::size_t i = 0; i < dim_; ++i) {
    const double x = query.values[i];
    if (x == 0.0) continue;
    const double* row = &params_[w1() + i * hidden_];
    for (std::size_t j = 0; j < hidden_; ++j) h[j] += x * row[j];
  }
  std::array<double, 3> logits{params_[b2()], params_[b2() + 1], params_[b2() + 2]};
  for (std::size_t j = 0; j < hidden_; ++j) {
    if (h[j] <= 0.0) continue;
    const double* row = &params_[w2() + j * 3];
    for (int k = 0; k < 3; ++k) logits[k] += h[j] * row[k];
  }
  const double mx = std::max({logits[0], logits[1], logits[2]});
  double total = 0.0;
  for (double& l : logits) total += (l = std::exp(l - mx));
  for (double& l : logits) l /= total;
  return logits;
}

double MlpRouter::predict(std::string_view, const EmbeddingVector& query) const {
  auto p = forward(query);
  return clamp01(p[kStrongWin] + 0.5 * p[kTie]);
}

double MlpRouter::loss_and_gradient(std::span<const EmbeddingVector* const> inputs, std::span<const int> classes,
                                    std::vector<double>* gradient) const {
  if (inputs.size() != classes.size() || inputs.empty()) {
    throw Error(ErrorCode::InvalidArgument, "MLP batch must be nonempty with one class per input");
  }
  if (gradient) gradient->assign(params_.size(), 0.0);
  const double scale = 1.0 / static_cast<double>(inputs.size());
  std::vector<double> pre(hidden_);
  std::vector<double> dpre(hidden_);
  double loss = 0.0;
  for (std::size_t n = 0; n < inputs.size(); ++n) {
    const EmbeddingVector& x = *inputs[n];
    check_query_dim(dim_, x);
    std::copy(params_.begin() + b1(), params_.begin() + w2(), pre.begin());
    for (std::size_t i = 0; i < dim_; ++i) {
      const double xi = x.values[i];
      if (xi == 0.0) continue;
      const double* row = &params_[w1() + i * hidden_];
      for (std::size_t j = 0; j < hidden_; ++j) pre[j] += xi * row[j];
    }
    std::array<double, 3> logits{params_[b2()], params_[b2() + 1], params_[b2() + 2]};
    for (std::size_t j = 0; j < hidden_; ++j) {
      if (pre[j] <= 0.0) continue;
      const double* row = &params_[w2() + j * 3];
      for (int k = 0; k < 3; ++k) logits[k] += pre[j] * row[k];
    }
    const double mx = std::max({logits[0], logits[1], logits[2]});
    double total = 0.0;
    std::array<double, 3> p{};
    for (int k = 0; k < 3; ++k) total += (p[k] = std::exp(logits[k] - mx));
    for (double& v : p) v /= total;
    const int c = classes[n];
    if (c < 0 || c > 2) throw Error(ErrorCode::InvalidArgument, "MLP class out of range");
    loss += -(logits[c] - mx - std::log(total));
    if (!gradient) continue;

    auto& g = *gradient;
    std::array<double, 3> dlogit = p;
    dlogit[c] -= 1.0;
    for (double& v : dlogit) v *= scale;
    for (int k = 0; k < 3; ++k) g[b2() + k] += dlogit[k];
    for (std::size_t j = 0; j < hidden_; ++j) {
      if (pre[j] <= 0.0) {
        dpre[j] = 0.0;
        continue;
      }
      const double* w = &params_[w2() + j * 3];
      double* gw = &g[w2() + j * 3];
      double dh = 0.0;
      for (int k = 0; k < 3; ++k) {
        gw[k] += pre[j] * dlogit[k];
        dh += w[k] * dlogit[k];
      }
      dpre[j] = dh;
      g[b1() + j] += dh;
    }
    for (std::size_t i = 0; i < dim_; ++i) {
      const double xi = x.values[i];
      if (xi == 0.0) continue;
      double* gw = &g[w1() + i * hidden_];
      for (std::size_t j = 0; j < hidden_; ++j) gw[j] += xi * dpre[j];
    }
  }
  return loss * scale;
}

nlohmann::json MlpRouter::parameters() const {
  return {{"dim", dim_}, {"hidden", hidden_}, {"params", params_}};
}

std::unique_ptr<MlpRouter> MlpRouter::from_parameters(const nlohmann::json& j, std::uint64_t seed) {
  auto m = std::unique_ptr<MlpRouter>(new MlpRouter(j.at("dim").get<std::size_t>(), j.at("hidden").get<std::size_t>()));
  m->seed_ = seed;
  auto params = j.at("params").get<std::vector<double>>();
  if (params.size() != m->params_.size()) throw Error(ErrorCode::CorruptArtifact, "MLP parameter count mismatch");
  m->params_ = std::move(params);
  return m;
}

MlpRouter mlp_train(const TrainingSet& ts, const MlpConfig& config, std::vector<double>* epoch_losses) {
  if (ts.empty()) throw Error(ErrorCode::EmptyTrainingSet, "MLP training set is empty");
  MlpRouter model = MlpRouter::random_init(ts.dim(), config.hidden, config.seed);
  Rng rng(splitmix64(config.seed ^ 0x6d6c70ULL));

  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  std::vector<double> m1(model.params_.size(), 0.0), m2(model.params_.size(), 0.0), grad;
  std::vector<std::size_t> order(ts.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<const EmbeddingVector*> all_inputs;
  std::vector<int> all_classes;
  for (const auto& ex : ts.examples()) {
    all_inputs.push_back(&ex.embedding);
    all_classes.push_back(mlp_class(ex.winner));
  }
  const std::size_t batch = std::max<std::size_t>(1, config.batch_size);
  long step = 0;
  std::vector<const EmbeddingVector*> xs;
  std::vector<int> ys;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      xs.clear();
      ys.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + batch); ++i) {
        xs.push_back(all_inputs[order[i]]);
        ys.push_back(all_classes[order[i]]);
      }
      model.loss_and_gradient(xs, ys, &grad);
      ++step;
      const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      for (std::size_t p = 0; p < grad.size(); ++p) {
        m1[p] = kBeta1 * m1[p] + (1.0 - kBeta1) * grad[p];
        m2[p] = kBeta2 * m2[p] + (1.0 - kBeta2) * grad[p] * grad[p];
        model.params_[p] -= config.learning_rate * (m1[p] / c1) / (std::sqrt(m2[p] / c2) + kEps);
      }
    }
    if (epoch_losses) epoch_losses->push_back(model.loss_and_gradient(all_inputs, all_classes, nullptr));
  }
  return model;
}

// ---------------------------------------------------------------------------

KnnRouter::KnnRouter(TrainingSet training, std::size_t k) : training_(std::move(training)), k_(k) {
  if (training_.empty()) throw Error(ErrorCode::EmptyTrainingSet, "kNN router needs training records");
  if (k_ == 0 || k_ > training_.size()) {
    throw Error(ErrorCode::InvalidArgument, "k must be in [1, " + std::to_string(training_.size()) + "]");
  }
}

std::vector<std::size_t> KnnRouter::neighbours(const EmbeddingVector& query) const {
  check_query_dim(training_.dim(), query);
  // Bounded selection: keep the best k seen so far, ordered by (similarity desc, index asc).
  std::vector<std::pair<double, std::size_t>> best;
  best.reserve(k_ + 1);
  auto better = [](const std::pair<double, std::size_t>& a, const std::pair<double, std::size_t>& b) {
    return a.first > b.first || (a.first == b.first && a.second < b.second);
  };
  for (std::size_t i = 0; i < training_.size(); ++i) {
    std::pair<double, std::size_t> cand{cosine(query, training_[i].embedding), i};
    if (best.size() == k_ && !better(cand, best.back())) continue;
    best.insert(std::upper_bound(best.begin(), best.end(), cand, better), cand);
    if (best.size() > k_) best.pop_back();
  }
  std::vector<std::size_t> out;
  for (const auto& [sim, i] : best) out.push_back(i);
  return out;
}

double KnnRouter::predict(std::string_view, const EmbeddingVector& query) const {
  double total = 0.0;
  auto idx = neighbours(query);
  for (std::size_t i : idx) total += training_[i].strong_target();
  return clamp01(total / static_cast<double>(idx.size()));
}

nlohmann::json KnnRouter::parameters() const { return {{"k", k_}, {"training", training_.to_json()}}; }

std::unique_ptr<KnnRouter> KnnRouter::from_parameters(const nlohmann::json& j) {
  return std::make_unique<KnnRouter>(TrainingSet::from_json(j.at("training")), j.at("k").get<std::size_t>());
}

// ---------------------------------------------------------------------------

double random_predict(std::uint64_t seed, std::string_view query_id) {
  Rng rng(splitmix64(seed) ^ fnv1a64(query_id));
  return rng.uniform();
}

}  // namespace serouter
