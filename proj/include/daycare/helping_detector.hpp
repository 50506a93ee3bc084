#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "daycare/env.hpp"
#include "daycare/errors.hpp"

namespace daycare {

/// Default matching window, in ticks after the failed grasp.
inline constexpr int kHelpingWindow = 200;

struct HelpingEvent {
  FruitId fruit = kNone;
  int fail_tick = 0;
  int pick_tick = 0;
  int drop_tick = 0;
  int eat_tick = 0;
  int desert_size = 0;
  friend bool operator==(const HelpingEvent&, const HelpingEvent&) = default;
};

inline std::string format_helping(const HelpingEvent& h) {
  return "H fruit=" + std::to_string(h.fruit) + " fail=" + std::to_string(h.fail_tick) +
         " pick=" + std::to_string(h.pick_tick) + " drop=" + std::to_string(h.drop_tick) +
         " eat=" + std::to_string(h.eat_tick) + " desert=" + std::to_string(h.desert_size);
}

/// Streaming detector for completed helping sequences.
///
/// Per fruit F, the accepted sequence of F's own events is
///
///   grasp_failed(short, yellow)+  (picked(tall) dropped(tall))+  picked(short)  eaten(short)
///
/// with the eat no later than `window` ticks after the last failed grasp. A
/// repeated failed grasp refreshes the fail tick; a tall re-pick after its own
/// drop returns to the tall-holds stage. Any other event on F discards F's
/// record, after which the event is reconsidered as a possible new start.
class HelpingDetector {
 public:
  enum class Stage { FailedGrasp, TallHolds, OnGroundAfterDrop, ShortHolds };

  struct Record {
    Stage stage = Stage::FailedGrasp;
    int fail_tick = 0;
    int pick_tick = 0;
    int drop_tick = 0;
    int stage_tick = 0;
  };

  explicit HelpingDetector(int desert_size = 0, int window = kHelpingWindow)
      : desert_size_(desert_size), window_(window) {}

  std::vector<HelpingEvent> ingest(std::span<const PrimitiveEvent> events) {
    std::vector<HelpingEvent> done;
    for (const auto& e : events) {
      if (e.tick < last_tick_)
        throw InputError("event ticks out of order: " + std::to_string(e.tick) + " after " +
                         std::to_string(last_tick_));
      last_tick_ = e.tick;
      expire(e.tick);
      advance(e, done);
    }
    return done;
  }

  const std::map<FruitId, Record>& records() const { return records_; }
  int completed() const { return completed_; }

 private:
  void expire(int tick) {
    for (auto it = records_.begin(); it != records_.end();) {
      if (tick > it->second.fail_tick + window_) it = records_.erase(it);
      else ++it;
    }
  }

  static bool starts(const PrimitiveEvent& e) {
    return e.kind == EventKind::GraspFailed && e.agent == AgentKind::Short && e.color == FruitColor::Yellow;
  }

  void advance(const PrimitiveEvent& e, std::vector<HelpingEvent>& done) {
    auto it = records_.find(e.fruit);
    if (it != records_.end()) {
      Record& r = it->second;
      const bool tall = e.agent == AgentKind::Tall;
      switch (r.stage) {
        case Stage::FailedGrasp:
          if (starts(e)) {
            r.fail_tick = e.tick;
            r.stage_tick = e.tick;
            return;
          }
          if (e.kind == EventKind::FruitPicked && tall) {
            r.stage = Stage::TallHolds;
            r.pick_tick = r.stage_tick = e.tick;
            return;
          }
          break;
        case Stage::TallHolds:
          if (e.kind == EventKind::FruitDropped && tall) {
            r.stage = Stage::OnGroundAfterDrop;
            r.drop_tick = r.stage_tick = e.tick;
            return;
          }
          break;
        case Stage::OnGroundAfterDrop:
          if (e.kind == EventKind::FruitPicked && tall) {
            r.stage = Stage::TallHolds;
            r.pick_tick = r.stage_tick = e.tick;
            return;
          }
          if (e.kind == EventKind::FruitPicked && !tall) {
            r.stage = Stage::ShortHolds;
            r.stage_tick = e.tick;
            return;
          }
          break;
        case Stage::ShortHolds:
          if (e.kind == EventKind::FruitEaten && !tall) {
            done.push_back({e.fruit, r.fail_tick, r.pick_tick, r.drop_tick, e.tick, desert_size_});
            ++completed_;
            records_.erase(it);
            return;
          }
          break;
      }
      records_.erase(it);
    }
    if (starts(e)) {
      Record r;
      r.fail_tick = r.stage_tick = e.tick;
      records_[e.fruit] = r;
    }
  }

  int desert_size_;
  int window_;
  int last_tick_ = 0;
  int completed_ = 0;
  std::map<FruitId, Record> records_;
};

/// Number of completed helping events in a whole-episode log.
inline int count_per_episode(std::span<const PrimitiveEvent> log, int window = kHelpingWindow) {
  HelpingDetector d(0, window);
  return static_cast<int>(d.ingest(log).size());
}

}  // namespace daycare
