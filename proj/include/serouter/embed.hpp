#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "serouter/http.hpp"

namespace serouter {

struct EmbeddingVector {
  std::vector<double> values;

  // Throws InvalidArgument on empty input or any NaN/Inf component.
  static EmbeddingVector make(std::vector<double> values);

  std::size_t dim() const { return values.size(); }
  double norm() const;
  bool operator==(const EmbeddingVector&) const = default;
};

// Cosine similarity clamped to [-1, 1]. DimensionMismatch or ZeroVector on bad input.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual EmbeddingVector embed(std::string_view text) const = 0;
  virtual std::string provider_name() const = 0;
};

// Signed feature hashing of case-folded unigrams and bigrams, L2-normalized.
class MockEmbedder final : public Embedder {
 public:
  static constexpr std::size_t kDefaultDim = 256;

  explicit MockEmbedder(std::size_t dim = kDefaultDim);
  EmbeddingVector embed(std::string_view text) const override;
  std::string provider_name() const override { return "mock"; }

 private:
  std::size_t dim_;
};

// {"input": text} -> {"embedding": [...]}. ProviderFailure after retries;
// DimensionMismatch when expected_dim is nonzero and the reply differs.
class HttpEmbedder final : public Embedder {
 public:
  HttpEmbedder(EndpointConfig endpoint, std::size_t expected_dim = 0)
      : endpoint_(std::move(endpoint)), expected_dim_(expected_dim) {}
  EmbeddingVector embed(std::string_view text) const override;
  std::string provider_name() const override { return endpoint_.url; }

 private:
  EndpointConfig endpoint_;
  std::size_t expected_dim_;
};

// Persisted embeddings keyed by record id. JSONL file: a header line
// {"stage","format_version","dim","provider"} followed by {"id","embedding"} rows.
struct EmbeddingStore {
  std::string provider;
  std::size_t dim = 0;
  std::map<std::string, EmbeddingVector> vectors;

  const EmbeddingVector& at(const std::string& id) const;
  void insert(const std::string& id, EmbeddingVector v);

  void save(const std::string& path) const;
  static EmbeddingStore load(const std::string& path);
};

}  // namespace serouter
