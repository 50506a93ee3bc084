#include <gtest/gtest.h>

#include "support.hpp"

using namespace daycare;

namespace {

PrimitiveEvent ev(int tick, EventKind kind, AgentKind agent, FruitId fruit = 0,
                  FruitColor color = FruitColor::Yellow) {
  PrimitiveEvent e;
  e.tick = tick;
  e.kind = kind;
  e.agent = agent;
  e.fruit = fruit;
  e.color = color;
  return e;
}

constexpr auto Fail = EventKind::GraspFailed;
constexpr auto Pick = EventKind::FruitPicked;
constexpr auto Drop = EventKind::FruitDropped;
constexpr auto Eat = EventKind::FruitEaten;
constexpr auto T = AgentKind::Tall;
constexpr auto S = AgentKind::Short;

std::vector<PrimitiveEvent> canonical(int t0 = 0, FruitId f = 0) {
  return {ev(t0, Fail, S, f), ev(t0 + 10, Pick, T, f), ev(t0 + 20, Drop, T, f), ev(t0 + 30, Pick, S, f),
          ev(t0 + 31, Eat, S, f)};
}

}  // namespace

TEST(Detector, CanonicalSequence) {
  HelpingDetector d(6);
  const auto log = canonical();
  const auto done = d.ingest(log);
  ASSERT_EQ(done.size(), 1u);
  EXPECT_EQ(done[0], (HelpingEvent{0, 0, 10, 20, 31, 6}));
  EXPECT_EQ(format_helping(done[0]), "H fruit=0 fail=0 pick=10 drop=20 eat=31 desert=6");
  EXPECT_TRUE(d.records().empty());
}

TEST(Detector, RepeatedFailsAndRepicks) {
  std::vector<PrimitiveEvent> log{ev(0, Fail, S),  ev(5, Fail, S),  ev(9, Pick, T),  ev(12, Drop, T),
                                  ev(14, Pick, T), ev(20, Drop, T), ev(25, Pick, S), ev(26, Eat, S)};
  const auto done = HelpingDetector().ingest(log);
  ASSERT_EQ(done.size(), 1u);
  EXPECT_EQ(done[0].fail_tick, 5);
  EXPECT_EQ(done[0].pick_tick, 14);
  EXPECT_EQ(done[0].drop_tick, 20);
}

TEST(Detector, BrokenSequences) {
  // Red fruit never starts a sequence.
  EXPECT_EQ(count_per_episode(std::vector{ev(0, Fail, S, 0, FruitColor::Red), ev(1, Pick, T), ev(2, Drop, T),
                                          ev(3, Pick, S), ev(4, Eat, S)}),
            0);
  // Short picks it up without the tall agent's involvement.
  EXPECT_EQ(count_per_episode(std::vector{ev(0, Fail, S), ev(1, Pick, S), ev(2, Eat, S)}), 0);
  // Tall eats the fruit itself.
  EXPECT_EQ(count_per_episode(std::vector{ev(0, Fail, S), ev(1, Pick, T), ev(2, Eat, T)}), 0);
  // Short drops instead of eating.
  EXPECT_EQ(count_per_episode(std::vector{ev(0, Fail, S), ev(1, Pick, T), ev(2, Drop, T), ev(3, Pick, S),
                                          ev(4, Drop, S)}),
            0);
  // Tall grasp failures do not count.
  EXPECT_EQ(count_per_episode(std::vector{ev(0, Fail, T), ev(1, Pick, T), ev(2, Drop, T), ev(3, Pick, S),
                                          ev(4, Eat, S)}),
            0);
}

TEST(Detector, Window) {
  auto log = canonical();
  log.back().tick = 200;
  EXPECT_EQ(count_per_episode(log, 200), 1);
  log.back().tick = 201;
  EXPECT_EQ(count_per_episode(log, 200), 0);
  EXPECT_EQ(count_per_episode(log, 500), 1);
}

TEST(Detector, InterleavedFruits) {
  auto a = canonical(0, 1), b = canonical(5, 2);
  std::vector<PrimitiveEvent> log;
  log.insert(log.end(), a.begin(), a.end());
  log.insert(log.end(), b.begin(), b.end());
  std::stable_sort(log.begin(), log.end(), [](auto& x, auto& y) { return x.tick < y.tick; });
  EXPECT_EQ(count_per_episode(log), 2);
}

TEST(Detector, RestartAfterDiscard) {
  // A failed grasp that interrupts a tall pick starts a fresh record.
  std::vector<PrimitiveEvent> log{ev(0, Fail, S), ev(1, Pick, T), ev(2, Fail, S), ev(3, Pick, T),
                                  ev(4, Drop, T), ev(5, Pick, S), ev(6, Eat, S)};
  const auto done = HelpingDetector().ingest(log);
  ASSERT_EQ(done.size(), 1u);
  EXPECT_EQ(done[0].fail_tick, 2);
}

TEST(Detector, StreamingEqualsWhole) {
  Rng rng(2, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto log = daycare::testing::random_helping_log(rng);
    HelpingDetector d;
    int streamed = 0;
    for (std::size_t i = 0; i < log.size(); ++i) streamed += static_cast<int>(d.ingest(std::span(&log[i], 1)).size());
    EXPECT_EQ(streamed, count_per_episode(log));
    EXPECT_EQ(d.completed(), streamed);
  }
}

TEST(Detector, OutOfOrderRejected) {
  HelpingDetector d;
  d.ingest(std::vector{ev(10, Fail, S)});
  EXPECT_THROW(d.ingest(std::vector{ev(9, Fail, S)}), InputError);
}

TEST(Detector, MatchesBruteForceOracle) {
  Rng rng(1, 0);
  int nonzero = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto log = daycare::testing::random_helping_log(rng);
    const int want = daycare::testing::oracle::count_helping_brute_force(log, kHelpingWindow);
    ASSERT_EQ(count_per_episode(log), want) << "trial " << trial;
    nonzero += want > 0;
  }
  EXPECT_GT(nonzero, 100);
}

TEST(Detector, ParsedLogRoundTrip) {
  for (const auto& e : canonical(3, 7)) EXPECT_EQ(parse_event(format_event(e)), e);
}
