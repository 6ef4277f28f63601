#include <gtest/gtest.h>

#include "serouter/errors.hpp"
#include "serouter/preference.hpp"
#include "serouter/rng.hpp"
#include "test_support.hpp"

namespace serouter {
namespace {

using testing::thrown_code;

SEPair se_pair(double strong, double weak, const std::string& id = "q") {
  return SEPair{Query::make(id, "prompt " + id), SEScore{strong, 2, 10}, SEScore{weak, 2, 10}, "rs", "rw"};
}

TEST(NormalizedDelta, HandEvaluatedExamples) {
  EXPECT_DOUBLE_EQ(normalized_se_delta(se_pair(2.0, 1.0)), 0.5);
  EXPECT_DOUBLE_EQ(normalized_se_delta(se_pair(1.3, 1.3)), 0.0);
  EXPECT_NEAR(normalized_se_delta(se_pair(1.0, 1.2)), 0.2, 1e-15);
}

TEST(NormalizedDelta, ZeroStrongEntropyIsDegenerate) {
  EXPECT_EQ(thrown_code([] { normalized_se_delta(se_pair(0.0, 0.4)); }), ErrorCode::DegenerateDenominator);
  EXPECT_EQ(thrown_code([] { normalized_se_delta(se_pair(1e-10, 0.4)); }), ErrorCode::DegenerateDenominator);
}

TEST(NormalizedDelta, ScalingBothEntropiesLeavesDeltaUnchanged) {
  Rng rng(8);
  for (int i = 0; i < 1000; ++i) {
    double s = rng.uniform(0.01, 3.0), w = rng.uniform(0.0, 3.0), k = rng.uniform(0.1, 10.0);
    ASSERT_NEAR(normalized_se_delta(se_pair(s, w)), normalized_se_delta(se_pair(k * s, k * w)), 1e-12);
  }
}

TEST(DecideWinner, TableOfCases) {
  struct Case {
    double strong, weak, tau;
    Winner expected;
  };
  const Case cases[] = {
      {2.0, 1.0, 0.1, Winner::WeakWins},    // delta 0.5, weak lower
      {1.0, 2.0, 0.1, Winner::StrongWins},  // delta 1.0, strong lower
      {1.0, 1.05, 0.1, Winner::Tie},        // delta 0.05
      {1.0, 1.1, 0.2, Winner::Tie},         // delta 0.1 <= 0.2
      {2.0, 1.0, 0.5, Winner::Tie},         // delta equal to tau is a tie
      {2.0, 1.0, 0.49, Winner::WeakWins},
      {0.0, 0.0, 0.1, Winner::Tie},         // degenerate
      {0.0, 1.5, 0.1, Winner::Tie},         // degenerate even with a large gap
      {0.5, 0.0, 0.1, Winner::WeakWins},
  };
  for (const auto& c : cases) {
    EXPECT_EQ(decide_winner(se_pair(c.strong, c.weak), c.tau), c.expected)
        << c.strong << " vs " << c.weak << " tau " << c.tau;
  }
}

TEST(DecideWinner, TauMustBePositive) {
  EXPECT_EQ(thrown_code([] { decide_winner(se_pair(1, 2), 0.0); }), ErrorCode::InvalidArgument);
}

TEST(DecideWinner, RaisingTauNeverTurnsATieIntoAWin) {
  Rng rng(2024);
  for (int i = 0; i < 1000; ++i) {
    auto pair = se_pair(rng.bernoulli(0.05) ? 0.0 : rng.uniform(0.0, 2.5), rng.uniform(0.0, 2.5));
    double lo = rng.uniform(0.001, 1.0), hi = lo + rng.uniform(0.0, 1.0);
    if (decide_winner(pair, lo) == Winner::Tie) ASSERT_EQ(decide_winner(pair, hi), Winner::Tie);
  }
}

TEST(BuildDataset, FlagsSlotsAndOrder) {
  std::vector<SEPair> pairs{se_pair(1.0, 2.0, "a"), se_pair(1.0, 1.0, "b"), se_pair(2.0, 1.0, "c"),
                            se_pair(0.0, 1.0, "d")};
  DatasetStats stats;
  auto records = build_dataset(pairs, 0.1, testing::strong_model(), testing::weak_model(), &stats);
  ASSERT_EQ(records.size(), 4u);
  EXPECT_EQ(records[0].id, "a");
  EXPECT_EQ(records[3].id, "d");
  EXPECT_EQ((std::array{records[0].winner_model_a, records[0].winner_model_b, records[0].winner_tie}),
            (std::array{1, 0, 0}));
  EXPECT_EQ((std::array{records[1].winner_model_a, records[1].winner_model_b, records[1].winner_tie}),
            (std::array{0, 0, 1}));
  EXPECT_EQ((std::array{records[2].winner_model_a, records[2].winner_model_b, records[2].winner_tie}),
            (std::array{0, 1, 0}));
  for (const auto& r : records) {
    EXPECT_EQ(r.model_a, "strong-cloud");
    EXPECT_EQ(r.model_b, "weak-edge");
    EXPECT_NO_THROW(validate(r));
  }
  EXPECT_EQ(stats.strong_wins, 1u);
  EXPECT_EQ(stats.weak_wins, 1u);
  EXPECT_EQ(stats.ties, 2u);
  EXPECT_EQ(stats.degenerate, 1u);
}

TEST(BuildDataset, EmptyInputIsAnError) {
  EXPECT_EQ(thrown_code([] { build_dataset({}, 0.1, testing::strong_model(), testing::weak_model()); }),
            ErrorCode::EmptyInput);
}

TEST(PreferenceRecord, JsonRoundTripAndValidation) {
  auto records = build_dataset(std::vector{se_pair(1.0, 3.0, "x")}, 0.1, testing::strong_model(), testing::weak_model());
  auto j = to_json(records[0]);
  EXPECT_EQ(j.size(), 9u);
  EXPECT_EQ(preference_from_json(j), records[0]);
  EXPECT_DOUBLE_EQ(records[0].strong_target(), 1.0);

  auto two_flags = j;
  two_flags["winner_tie"] = 1;
  EXPECT_EQ(thrown_code([&] { preference_from_json(two_flags); }), ErrorCode::InvalidArgument);
  auto bad_value = j;
  bad_value["winner_model_a"] = 2;
  bad_value["winner_tie"] = -1;
  EXPECT_EQ(thrown_code([&] { preference_from_json(bad_value); }), ErrorCode::InvalidArgument);
  auto missing = j;
  missing.erase("prompt");
  EXPECT_EQ(thrown_code([&] { preference_from_json(missing); }), ErrorCode::InvalidArgument);
}

}  // namespace
}  // namespace serouter
