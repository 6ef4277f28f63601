#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "serouter/errors.hpp"
#include "serouter/rng.hpp"
#include "serouter/uncertainty.hpp"
#include "test_support.hpp"

namespace serouter {
namespace {

using testing::thrown_code;

std::vector<GenerationSample> uniform_samples(const std::vector<std::string>& texts) {
  std::vector<GenerationSample> out;
  for (const auto& t : texts) out.push_back(GenerationSample::make(t, -1.0, 2));
  return out;
}

double total_mass(const SemanticClustering& c) {
  double sum = 0.0;
  for (const auto& cl : c.clusters) sum += cl.prob_mass;
  return sum;
}

// ---------------------------------------------------------------------------
// normalize_sample_probs

TEST(NormalizeSampleProbs, SingleSampleGetsAllMass) {
  auto samples = std::vector{GenerationSample::make("x", -17.3, 4)};
  auto w = normalize_sample_probs(samples);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_DOUBLE_EQ(w[0].prob, 1.0);
}

TEST(NormalizeSampleProbs, EqualNormalizedLogprobsSplitEvenly) {
  auto samples = std::vector{GenerationSample::make("a", -2.0, 2), GenerationSample::make("b", -3.0, 3)};
  auto w = normalize_sample_probs(samples);
  EXPECT_NEAR(w[0].prob, 0.5, 1e-15);
  EXPECT_NEAR(w[1].prob, 0.5, 1e-15);
}

TEST(NormalizeSampleProbs, RenormalizesPointTwoAndPointSix) {
  auto samples = std::vector{GenerationSample::make("a", 2 * std::log(0.2), 2),
                             GenerationSample::make("b", std::log(0.6), 1)};
  auto w = normalize_sample_probs(samples);
  EXPECT_NEAR(w[0].prob, 0.25, 1e-12);
  EXPECT_NEAR(w[1].prob, 0.75, 1e-12);
  EXPECT_EQ(w[0].sample.text, "a");
}

TEST(NormalizeSampleProbs, SurvivesLogprobsThatUnderflowExp) {
  auto samples = std::vector{GenerationSample::make("a", -2000.0, 1), GenerationSample::make("b", -2000.0 + std::log(3.0), 1)};
  auto w = normalize_sample_probs(samples);
  EXPECT_NEAR(w[0].prob, 0.25, 1e-12);
  EXPECT_NEAR(w[1].prob, 0.75, 1e-12);
}

TEST(NormalizeSampleProbs, EmptyInputIsAnError) {
  EXPECT_EQ(thrown_code([] { normalize_sample_probs({}); }), ErrorCode::EmptyInput);
}

// ---------------------------------------------------------------------------
// Mock oracle

TEST(MockOracle, IdenticalAfterNormalization) {
  auto v = MockEntailmentOracle().check("Paris", "paris.");
  EXPECT_TRUE(v.forward);
  EXPECT_TRUE(v.backward);
  EXPECT_TRUE(v.bidirectional_equivalent());
}

TEST(MockOracle, DisjointTextsDoNotEntail) {
  auto v = MockEntailmentOracle().check("the capital is Paris", "Berlin");
  EXPECT_FALSE(v.forward);
  EXPECT_FALSE(v.backward);
}

TEST(MockOracle, SubsetRuleIsDirectional) {
  auto v = MockEntailmentOracle().check("A B C D E", "A B C");
  EXPECT_FALSE(v.forward);
  EXPECT_TRUE(v.backward);
  EXPECT_FALSE(v.bidirectional_equivalent());
}

TEST(MockOracle, AgreesWithIndependentRuleOnRandomTexts) {
  const std::vector<std::string> vocab{"a", "b", "c", "d", "e", "f"};
  Rng rng(99);
  auto random_text = [&] {
    std::string t;
    for (std::size_t n = 1 + rng.below(5); n > 0; --n) t += vocab[rng.below(vocab.size())] + " ";
    return t;
  };
  for (int i = 0; i < 2000; ++i) {
    auto a = random_text(), b = random_text();
    ASSERT_EQ(MockEntailmentOracle::entails(a, b), oracle::mock_entails(a, b)) << a << " | " << b;
  }
}

// ---------------------------------------------------------------------------
// cluster_by_entailment

TEST(Clustering, IdenticalTextsFormOneCluster) {
  auto samples = uniform_samples({"yes", "yes", "yes", "yes", "yes"});
  auto c = cluster_by_entailment("q", samples, MockEntailmentOracle());
  ASSERT_EQ(c.clusters.size(), 1u);
  EXPECT_NEAR(c.clusters[0].prob_mass, 1.0, 1e-12);
  EXPECT_EQ(semantic_entropy(c).value, 0.0);
}

TEST(Clustering, TwoToOneSplitHasTwoThirdsAndOneThird) {
  auto samples = uniform_samples({"Paris", "Paris", "Berlin"});
  auto c = cluster_by_entailment("q", samples, MockEntailmentOracle());
  ASSERT_EQ(c.clusters.size(), 2u);
  EXPECT_NEAR(c.clusters[0].prob_mass, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(c.clusters[1].prob_mass, 1.0 / 3.0, 1e-12);
}

TEST(Clustering, LaterSampleJoinsEarliestMatchingCluster) {
  auto samples = uniform_samples({"Paris", "Berlin", "paris!"});
  auto c = cluster_by_entailment("q", samples, MockEntailmentOracle());
  ASSERT_EQ(c.clusters.size(), 2u);
  EXPECT_EQ(c.clusters[0].member_indices, (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(c.clusters[1].member_indices, (std::vector<std::size_t>{1}));
  EXPECT_EQ(c.clusters[0].representative().text, "Paris");
}

TEST(Clustering, ComparesAgainstRepresentativeOnly) {
  // Y ~ X and Z ~ Y, but Z is not equivalent to X, the representative.
  const std::string x = "a b c d e", y = "a b c d", z = "a b c";
  ASSERT_TRUE(oracle::equivalent(x, y));
  ASSERT_TRUE(oracle::equivalent(y, z));
  ASSERT_FALSE(oracle::equivalent(x, z));
  auto c = cluster_by_entailment("q", uniform_samples({x, y, z}), MockEntailmentOracle());
  ASSERT_EQ(c.clusters.size(), 2u);
  EXPECT_EQ(c.clusters[0].member_indices, (std::vector<std::size_t>{0, 1}));
}

TEST(Clustering, ProbMassMatchesMembers) {
  Rng rng(3);
  std::vector<GenerationSample> samples;
  const std::vector<std::string> texts{"one", "two", "One.", "three", "TWO"};
  for (const auto& t : texts) samples.push_back(GenerationSample::make(t, -rng.uniform(0.1, 6.0), 1 + rng.below(4)));
  auto c = cluster_by_entailment("q", samples, MockEntailmentOracle());
  auto w = normalize_sample_probs(samples);
  for (const auto& cl : c.clusters) {
    double sum = 0.0;
    for (auto i : cl.member_indices) sum += w[i].prob;
    EXPECT_NEAR(cl.prob_mass, sum, 1e-12);
  }
  EXPECT_NEAR(total_mass(c), 1.0, 1e-9);
}

class ThrowingOracle : public EntailmentOracle {
 public:
  EntailmentVerdict check(std::string_view, std::string_view) const override {
    throw Error(ErrorCode::OracleFailure, "down");
  }
};

TEST(Clustering, OracleFailureAborts) {
  auto samples = uniform_samples({"a", "b"});
  EXPECT_EQ(thrown_code([&] { cluster_by_entailment("q", samples, ThrowingOracle()); }), ErrorCode::OracleFailure);
  // A single sample never consults the oracle.
  auto one = uniform_samples({"a"});
  EXPECT_EQ(cluster_by_entailment("q", one, ThrowingOracle()).clusters.size(), 1u);
}

TEST(Clustering, AppendingADuplicateNeverAddsAClusterProperty) {
  const std::vector<std::string> pool{"red", "Red.", "blue", "red blue", "green apple", "apple"};
  Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::string> texts;
    for (std::size_t n = 1 + rng.below(7); n > 0; --n) texts.push_back(pool[rng.below(pool.size())]);
    auto before = cluster_by_entailment("q", uniform_samples(texts), MockEntailmentOracle()).clusters.size();
    texts.push_back(texts[rng.below(texts.size())]);
    auto after = cluster_by_entailment("q", uniform_samples(texts), MockEntailmentOracle()).clusters.size();
    ASSERT_LE(after, before);
  }
}

TEST(Clustering, IsDeterministic) {
  auto samples = uniform_samples({"a b", "c", "A B.", "d e f", "c!"});
  auto a = cluster_by_entailment("q", samples, MockEntailmentOracle());
  auto b = cluster_by_entailment("q", samples, MockEntailmentOracle());
  ASSERT_EQ(a.clusters.size(), b.clusters.size());
  for (std::size_t i = 0; i < a.clusters.size(); ++i) {
    EXPECT_EQ(a.clusters[i].member_indices, b.clusters[i].member_indices);
    EXPECT_EQ(a.clusters[i].prob_mass, b.clusters[i].prob_mass);
  }
}

// ---------------------------------------------------------------------------
// semantic_entropy

SemanticClustering equiprobable(int k) {
  std::vector<std::string> texts;
  for (int i = 0; i < k; ++i) texts.push_back("answer" + std::to_string(i));
  return cluster_by_entailment("q", uniform_samples(texts), MockEntailmentOracle());
}

TEST(SemanticEntropy, TwoAndFourEquiprobableClusters) {
  EXPECT_NEAR(semantic_entropy(equiprobable(2)).value, 0.6931471805599453, 1e-12);
  EXPECT_NEAR(semantic_entropy(equiprobable(4)).value, 1.3862943611198906, 1e-12);
}

TEST(SemanticEntropy, EqualsLnKForKEquiprobableClusters) {
  for (int k = 1; k <= 8; ++k) {
    auto score = semantic_entropy(equiprobable(k));
    EXPECT_NEAR(score.value, std::log(static_cast<double>(k)), 1e-9) << "K=" << k;
    EXPECT_EQ(score.num_clusters, k);
    EXPECT_EQ(score.num_samples, k);
  }
}

TEST(SemanticEntropy, AveragesOverClustersRatherThanWeightingByMass) {
  // masses 0.75 / 0.25: the per-cluster average is -(ln .75 + ln .25)/2, not
  // the Shannon entropy -(.75 ln .75 + .25 ln .25).
  auto samples = uniform_samples({"x", "x", "x", "y"});
  auto score = semantic_entropy(cluster_by_entailment("q", samples, MockEntailmentOracle()));
  EXPECT_NEAR(score.value, -(std::log(0.75) + std::log(0.25)) / 2.0, 1e-12);
}

TEST(SemanticEntropy, ZeroExactlyWhenOneCluster) {
  Rng rng(5);
  const std::vector<std::string> pool{"sun", "moon", "Sun!", "star"};
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<GenerationSample> samples;
    for (std::size_t n = 1 + rng.below(6); n > 0; --n) {
      samples.push_back(GenerationSample::make(pool[rng.below(pool.size())], -rng.uniform(0.0, 30.0), 1 + rng.below(5)));
    }
    auto c = cluster_by_entailment("q", samples, MockEntailmentOracle());
    auto se = semantic_entropy(c);
    ASSERT_GE(se.value, 0.0);
    ASSERT_EQ(se.value == 0.0, c.clusters.size() == 1);
    ASSERT_NEAR(total_mass(c), 1.0, 1e-9);
  }
}

TEST(SemanticEntropy, MatchesIndependentReplayOnRandomSampleSets) {
  Rng rng(13);
  const std::vector<std::string> pool{"a b c d e", "a b c d", "a b c", "x y", "X, y!", "z"};
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::string> texts;
    std::vector<double> logprobs;
    std::vector<int> tokens;
    std::vector<GenerationSample> samples;
    for (std::size_t n = 1 + rng.below(10); n > 0; --n) {
      texts.push_back(pool[rng.below(pool.size())]);
      logprobs.push_back(-rng.uniform(0.1, 8.0));
      tokens.push_back(1 + static_cast<int>(rng.below(5)));
      samples.push_back(GenerationSample::make(texts.back(), logprobs.back(), tokens.back()));
    }
    auto expected = oracle::cluster_average_se(oracle::label_masses(oracle::greedy_labels(texts), logprobs, tokens));
    auto got = semantic_entropy(cluster_by_entailment("q", samples, MockEntailmentOracle())).value;
    ASSERT_NEAR(got, expected, 1e-12) << "trial " << trial;
  }
}

}  // namespace
}  // namespace serouter
