#include <gtest/gtest.h>

#include <cmath>

#include "serouter/embed.hpp"
#include "serouter/errors.hpp"
#include "serouter/rng.hpp"
#include "test_support.hpp"

namespace serouter {
namespace {

using testing::thrown_code;

TEST(MockEmbedder, IsDeterministicAndUnitNorm) {
  MockEmbedder e;
  auto a = e.embed("Which river flows through the capital?");
  auto b = e.embed("Which river flows through the capital?");
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.dim(), 256u);
  EXPECT_NEAR(a.norm(), 1.0, 1e-6);
}

TEST(MockEmbedder, DistinctTextsAreNotParallel) {
  MockEmbedder e;
  EXPECT_LT(cosine(e.embed("aa bb"), e.embed("cc dd")), 1.0);
}

TEST(MockEmbedder, IgnoresCaseAndPunctuation) {
  MockEmbedder e;
  EXPECT_EQ(e.embed("Hello, World!"), e.embed("hello world"));
}

TEST(MockEmbedder, SharedVocabularyRaisesSimilarity) {
  MockEmbedder e;
  auto q = e.embed("compute the integer sum of the polynomial for parameter 7");
  auto near = e.embed("compute the integer sum of the polynomial for parameter 9");
  auto far = e.embed("which river flows through the old capital city");
  EXPECT_GT(cosine(q, near), cosine(q, far));
}

TEST(MockEmbedder, RejectsEmptyTextAndZeroDim) {
  EXPECT_EQ(thrown_code([] { MockEmbedder().embed("  "); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(thrown_code([] { MockEmbedder(0); }), ErrorCode::InvalidArgument);
  EXPECT_NEAR(MockEmbedder(16).embed("?!").norm(), 1.0, 1e-12);
}

TEST(EmbeddingVector, RejectsNonFiniteAndEmpty) {
  EXPECT_EQ(thrown_code([] { EmbeddingVector::make({}); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(thrown_code([] { EmbeddingVector::make({1.0, std::nan("")}); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(thrown_code([] { EmbeddingVector::make({INFINITY}); }), ErrorCode::InvalidArgument);
}

TEST(Cosine, HandComputedValues) {
  auto v = EmbeddingVector::make({0.3, -1.2, 4.0});
  EXPECT_NEAR(cosine(v, v), 1.0, 1e-15);
  EXPECT_NEAR(cosine(EmbeddingVector::make({1, 0}), EmbeddingVector::make({0, 1})), 0.0, 1e-15);
  EXPECT_NEAR(cosine(EmbeddingVector::make({1, 0}), EmbeddingVector::make({1 / std::sqrt(2.0), 1 / std::sqrt(2.0)})),
              0.7071067811865476, 1e-12);
}

TEST(Cosine, ErrorsOnZeroVectorAndDimensionMismatch) {
  EXPECT_EQ(thrown_code([] { cosine(EmbeddingVector::make({0, 0}), EmbeddingVector::make({1, 0})); }),
            ErrorCode::ZeroVector);
  EXPECT_EQ(thrown_code([] { cosine(EmbeddingVector::make({1, 0}), EmbeddingVector::make({1, 0, 0})); }),
            ErrorCode::DimensionMismatch);
}

TEST(Cosine, SymmetricAndBounded) {
  Rng rng(17);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> a(8), b(8);
    for (auto& x : a) x = rng.uniform(-1e3, 1e3);
    for (auto& x : b) x = rng.uniform(-1e-3, 1e-3);
    auto va = EmbeddingVector::make(a), vb = EmbeddingVector::make(b);
    double ab = cosine(va, vb);
    ASSERT_NEAR(ab, cosine(vb, va), 1e-12);
    ASSERT_LE(std::fabs(ab), 1.0);
  }
}

TEST(EmbeddingStore, SaveLoadRoundTripIsExact) {
  testing::TempDir dir;
  MockEmbedder e(32);
  EmbeddingStore store;
  store.provider = e.provider_name();
  store.insert("b", e.embed("second text"));
  store.insert("a", e.embed("first text"));
  store.insert("c", EmbeddingVector::make({0.1, 1.0 / 3.0, -2e-300, 7.0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
                                           0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1e300}));
  store.save(dir.file("emb.jsonl"));
  auto loaded = EmbeddingStore::load(dir.file("emb.jsonl"));
  EXPECT_EQ(loaded.dim, 32u);
  EXPECT_EQ(loaded.provider, "mock");
  EXPECT_EQ(loaded.vectors, store.vectors);
  EXPECT_EQ(thrown_code([&] { loaded.at("zzz"); }), ErrorCode::MissingInput);
}

TEST(EmbeddingStore, RejectsMixedDimensions) {
  EmbeddingStore store;
  store.insert("a", EmbeddingVector::make({1, 2}));
  EXPECT_EQ(thrown_code([&] { store.insert("b", EmbeddingVector::make({1, 2, 3})); }), ErrorCode::DimensionMismatch);
}

// ---------------------------------------------------------------------------

TEST(HttpEmbedder, SendsInputAndParsesEmbedding) {
  testing::StubServer server;
  server.on("/embed", [](const nlohmann::json& req, httplib::Response& res) {
    std::string text = req.at("input").get<std::string>();
    testing::StubServer::reply(res, {{"embedding", {static_cast<double>(text.size()), 1.0, 0.0}}});
  });
  server.start();
  HttpEmbedder e(EndpointConfig{server.url("/embed"), 2000, 1}, 3);
  auto v = e.embed("abcd");
  EXPECT_EQ(v.values, (std::vector<double>{4.0, 1.0, 0.0}));
  HttpEmbedder wrong_dim(EndpointConfig{server.url("/embed"), 2000, 1}, 4);
  EXPECT_EQ(thrown_code([&] { wrong_dim.embed("abcd"); }), ErrorCode::DimensionMismatch);
}

TEST(HttpEmbedder, ProviderFailureAfterRetries) {
  testing::StubServer server;
  server.on("/embed", [](const nlohmann::json&, httplib::Response& res) {
    testing::StubServer::reply(res, {{"error", "boom"}}, 500);
  });
  server.on("/garbage", [](const nlohmann::json&, httplib::Response& res) {
    testing::StubServer::reply(res, {{"vector", {1, 2}}});
  });
  server.start();
  HttpEmbedder e(EndpointConfig{server.url("/embed"), 2000, 3});
  EXPECT_EQ(thrown_code([&] { e.embed("x"); }), ErrorCode::ProviderFailure);
  EXPECT_EQ(server.hits(), 3);
  HttpEmbedder g(EndpointConfig{server.url("/garbage"), 2000, 1});
  EXPECT_EQ(thrown_code([&] { g.embed("x"); }), ErrorCode::ProviderFailure);
}

}  // namespace
}  // namespace serouter
