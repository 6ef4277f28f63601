#include "serouter/embed.hpp"

#include <algorithm>
#include <cmath>

#include "serouter/errors.hpp"
#include "serouter/jsonl.hpp"
#include "serouter/text.hpp"

namespace serouter {

EmbeddingVector EmbeddingVector::make(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "embedding has no components");
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "embedding has a non-finite component");
  }
  return EmbeddingVector{std::move(values)};
}

double EmbeddingVector::norm() const {
  double sum = 0.0;
  for (double v : values) sum += v * v;
  return std::sqrt(sum);
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::DimensionMismatch, std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::ZeroVector, "cosine of a zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

MockEmbedder::MockEmbedder(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw Error(ErrorCode::InvalidArgument, "embedding dim must be positive");
}

EmbeddingVector MockEmbedder::embed(std::string_view text) const {
  if (trim(text).empty()) throw Error(ErrorCode::InvalidArgument, "cannot embed empty text");
  auto tokens = normalized_tokens(text);
  std::vector<std::string> grams;
  if (tokens.empty()) {
    grams.emplace_back(to_lower(trim(text)));
  } else {
    grams = tokens;
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) grams.push_back(tokens[i] + '\x1f' + tokens[i + 1]);
  }
  std::vector<double> values(dim_, 0.0);
  for (const auto& gram : grams) {
    std::uint64_t h = fnv1a64(gram);
    values[h % dim_] += (h >> 63) ? -1.0 : 1.0;
  }
  double n = 0.0;
  for (double v : values) n += v * v;
  if (n == 0.0) {
    // Every hashed feature cancelled; fall back to an unsigned bucket.
    values[fnv1a64(text) % dim_] = 1.0;
    n = 1.0;
  }
  n = std::sqrt(n);
  for (double& v : values) v /= n;
  return EmbeddingVector{std::move(values)};
}

EmbeddingVector HttpEmbedder::embed(std::string_view text) const {
  if (trim(text).empty()) throw Error(ErrorCode::InvalidArgument, "cannot embed empty text");
  HttpOutcome outcome = post_json(endpoint_, nlohmann::json{{"input", text}});
  if (!outcome.ok()) {
    throw Error(ErrorCode::ProviderFailure, "embedding endpoint failed after " + std::to_string(outcome.attempts) +
                                                " attempts: " + outcome.detail);
  }
  auto field = outcome.body.find("embedding");
  if (field == outcome.body.end() || !field->is_array()) {
    throw Error(ErrorCode::ProviderFailure, "embedding response has no 'embedding' array");
  }
  std::vector<double> values;
  values.reserve(field->size());
  for (const auto& v : *field) {
    if (!v.is_number()) throw Error(ErrorCode::ProviderFailure, "non-numeric embedding component");
    values.push_back(v.get<double>());
  }
  if (expected_dim_ != 0 && values.size() != expected_dim_) {
    throw Error(ErrorCode::DimensionMismatch, "provider returned dim " + std::to_string(values.size()) +
                                                  ", expected " + std::to_string(expected_dim_));
  }
  try {
    return EmbeddingVector::make(std::move(values));
  } catch (const Error& e) {
    throw Error(ErrorCode::ProviderFailure, e.what());
  }
}

const EmbeddingVector& EmbeddingStore::at(const std::string& id) const {
  auto it = vectors.find(id);
  if (it == vectors.end()) throw Error(ErrorCode::MissingInput, "no embedding for id '" + id + "'");
  return it->second;
}

void EmbeddingStore::insert(const std::string& id, EmbeddingVector v) {
  if (dim == 0) dim = v.dim();
  if (v.dim() != dim) {
    throw Error(ErrorCode::DimensionMismatch, "embedding for '" + id + "' has dim " + std::to_string(v.dim()) +
                                                  ", store dim is " + std::to_string(dim));
  }
  vectors.insert_or_assign(id, std::move(v));
}

void EmbeddingStore::save(const std::string& path) const {
  auto header = stage_header("embed");
  header["dim"] = dim;
  header["provider"] = provider;
  std::vector<nlohmann::json> rows;
  rows.reserve(vectors.size());
  for (const auto& [id, v] : vectors) rows.push_back({{"id", id}, {"embedding", v.values}});
  write_jsonl(path, header, rows);
}

EmbeddingStore EmbeddingStore::load(const std::string& path) {
  auto file = read_jsonl(path, "embed");
  EmbeddingStore store;
  store.provider = file.header.value("provider", std::string{});
  store.dim = file.header.value("dim", std::size_t{0});
  for (const auto& row : file.rows) {
    auto id = row.at("id").get<std::string>();
    store.insert(id, EmbeddingVector::make(row.at("embedding").get<std::vector<double>>()));
  }
  return store;
}

}  // namespace serouter
