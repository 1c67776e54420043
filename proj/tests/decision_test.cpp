#include <gtest/gtest.h>

#include <random>

#include "dsintel/decision.hpp"
#include "support/oracles.hpp"

namespace dsintel {
namespace {

UtilityIntervalChoice iv(std::string id, double lo, double hi) {
  return {std::move(id), lo, hi};
}

TEST(ExpectedInterval, Examples) {
  auto frame = Frame::make({"mid", "low", "high"});
  const std::vector<double> u{0.5, 0.0, 1.0};
  auto m = make_mass(frame, {{frame->subset({"mid"}), 0.6}, {frame->subset({"low", "high"}), 0.4}});
  const auto c = expected_interval(UtilityBpa(m, u), "a");
  EXPECT_NEAR(c.e_low, 0.3, 1e-15);
  EXPECT_NEAR(c.e_high, 0.7, 1e-15);

  auto bayes = make_mass(frame, {{frame->subset({"mid"}), 0.5}, {frame->subset({"high"}), 0.5}});
  const auto b = expected_interval(UtilityBpa(bayes, u));
  EXPECT_EQ(b.e_low, b.e_high);

  const auto v = expected_interval(UtilityBpa(MassFunction::vacuous(frame), u));
  EXPECT_EQ(v.e_low, 0.0);
  EXPECT_EQ(v.e_high, 1.0);

  EXPECT_THROW(UtilityBpa(m, {0.1, 0.2}), ValidationError);
}

TEST(RhoSegmentation, CrossoverExample) {
  const auto seg = rho_segmentation({iv("A", 0.2, 0.9), iv("B", 0.4, 0.6)});
  ASSERT_EQ(seg.segments.size(), 2U);
  EXPECT_EQ(seg.segments[0].winners, (std::vector<std::size_t>{1}));
  EXPECT_NEAR(seg.segments[0].hi, 0.4, 1e-15);
  EXPECT_EQ(seg.segments[1].winners, (std::vector<std::size_t>{0}));
  EXPECT_NEAR(seg.preference[0], 0.6, 1e-15);
  EXPECT_NEAR(seg.preference[1], 0.4, 1e-15);
  EXPECT_EQ(seg.winners_at(seg.segments[0].hi), (std::vector<std::size_t>{0}));
}

TEST(RhoSegmentation, DominanceAndIdentical) {
  const auto dom = rho_segmentation({iv("A", 0.5, 0.6), iv("B", 0.1, 0.2)});
  EXPECT_EQ(dom.preference[0], 1.0);
  EXPECT_EQ(dom.preference[1], 0.0);

  const auto same = rho_segmentation({iv("A", 0.3, 0.8), iv("B", 0.3, 0.8)});
  EXPECT_EQ(same.preference[0], 0.5);
  EXPECT_EQ(same.preference[1], 0.5);

  const auto single = rho_segmentation({iv("only", 0.1, 0.4)});
  EXPECT_EQ(single.preference[0], 1.0);

  EXPECT_THROW(rho_segmentation({}), ValidationError);
  EXPECT_THROW(rho_segmentation({iv("bad", 0.7, 0.2)}), ValidationError);
}

std::vector<UtilityIntervalChoice> random_choices(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<UtilityIntervalChoice> out;
  for (std::size_t i = 0; i < n; ++i) {
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    out.push_back(iv("c" + std::to_string(i), a, b));
  }
  return out;
}

TEST(RhoSegmentation, MatchesGridScan) {
  std::mt19937_64 rng(13);
  const int grid = 10000;
  for (int t = 0; t < 50; ++t) {
    const auto choices = random_choices(rng, 2 + t % 5);
    const auto seg = rho_segmentation(choices);
    std::vector<double> scan(choices.size(), 0.0);
    for (int g = 0; g < grid; ++g) {
      const double rho = (g + 0.5) / grid;
      std::size_t best = 0;
      for (std::size_t i = 1; i < choices.size(); ++i)
        if (choices[i].value(rho) > choices[best].value(rho)) best = i;
      scan[best] += 1.0 / grid;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < choices.size(); ++i) {
      EXPECT_GE(seg.preference[i], 0.0);
      EXPECT_NEAR(seg.preference[i], scan[i], 2e-4);
      total += seg.preference[i];
    }
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
}

TEST(RhoSegmentation, ShiftLeavesWinnersUnchanged) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 50; ++t) {
    auto choices = random_choices(rng, 4);
    const auto seg = rho_segmentation(choices);
    for (auto& c : choices) {
      c.e_low += 3.25;
      c.e_high += 3.25;
    }
    const auto shifted = rho_segmentation(choices);
    ASSERT_EQ(seg.segments.size(), shifted.segments.size());
    for (std::size_t k = 0; k < seg.segments.size(); ++k) {
      EXPECT_EQ(seg.segments[k].winners, shifted.segments[k].winners);
      EXPECT_NEAR(seg.segments[k].hi, shifted.segments[k].hi, 1e-9);
    }
  }
}

std::vector<DecisionMaker> xyz_game() {
  return {{"DM1", {iv("X", 0.2, 0.9)}}, {"DM2", {iv("Y", 0.4, 0.6), iv("Z", 0.0, 1.0)}}};
}

TEST(SequentialPlay, Examples) {
  const auto high = sequential_play(xyz_game(), 0.9);
  EXPECT_EQ(high.choice, (std::vector<std::size_t>{0, 1}));
  EXPECT_NEAR(high.value[1], 0.9, 1e-15);

  const auto mid = sequential_play(xyz_game(), 0.5);
  EXPECT_EQ(mid.choice, (std::vector<std::size_t>{0, 0}));
  EXPECT_NEAR(mid.value[0], 0.55, 1e-15);

  const std::vector<DecisionMaker> solo{{"only", {iv("a", 0.1, 0.2), iv("b", 0.0, 0.9)}}};
  EXPECT_EQ(sequential_play(solo, 0.1).choice[0], 0U);
  EXPECT_EQ(sequential_play(solo, 0.8).choice[0], 1U);

  EXPECT_THROW(sequential_play(xyz_game(), 1.5), ValidationError);
  EXPECT_THROW(sequential_play({{"empty", {}}}, 0.5), ValidationError);
}

TEST(SequentialPlay, MatchesProfileEnumeration) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> size(1, 3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 300; ++t) {
    std::vector<DecisionMaker> makers(size(rng));
    for (std::size_t d = 0; d < makers.size(); ++d) {
      makers[d].id = "dm" + std::to_string(d);
      makers[d].choices = random_choices(rng, size(rng));
    }
    const double rho = t % 10 == 0 ? 0.5 : u(rng);
    EXPECT_EQ(sequential_play(makers, rho).choice, testing::enumerate_game(makers, rho));
  }
}

TEST(CompetitivePreferences, IntegratesGameOutcome) {
  // Y holds the maximum on [0, 0.4] and Z on [2/3, 1]; in between DM2
  // cannot win and takes the larger own value, Y below 0.5 and Z above.
  const auto pref = competitive_preferences(xyz_game());
  ASSERT_EQ(pref.size(), 2U);
  EXPECT_NEAR(pref[0][0], 1.0, 1e-12);
  EXPECT_NEAR(pref[1][0], 0.5, 1e-12);
  EXPECT_NEAR(pref[1][1], 0.5, 1e-12);
}

}  // namespace
}  // namespace dsintel
