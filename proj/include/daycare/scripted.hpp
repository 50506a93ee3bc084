#pragma once

#include <algorithm>
#include <cstdlib>
#include <deque>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "daycare/controller.hpp"
#include "daycare/env.hpp"
#include "daycare/errors.hpp"
#include "daycare/rng.hpp"

namespace daycare {

/// Breadth-first distances from one agent over cells it can walk on.
class DistanceField {
 public:
  static constexpr int kUnreachable = std::numeric_limits<int>::max();

  DistanceField(const EnvState& s, AgentKind self) : s_(s) {
    dist_.assign(static_cast<std::size_t>(s.height) * s.width, kUnreachable);
    parent_.assign(dist_.size(), -1);
    const Coord start = s.agent(self).position;
    std::deque<Coord> queue{start};
    dist_[s.index(start)] = 0;
    while (!queue.empty()) {
      const Coord c = queue.front();
      queue.pop_front();
      for (int d = 0; d < 4; ++d) {
        const Coord n = c + facing_delta(static_cast<Facing>(d));
        if (!s.passable(n) || dist_[s.index(n)] != kUnreachable) continue;
        dist_[s.index(n)] = dist_[s.index(c)] + 1;
        parent_[s.index(n)] = s.index(c);
        queue.push_back(n);
      }
    }
  }

  int at(Coord c) const { return s_.in_bounds(c) ? dist_[s_.index(c)] : kUnreachable; }

  /// Cheapest cell adjacent to `target` from which it can be faced.
  std::optional<Coord> best_stand(Coord target) const {
    std::optional<Coord> best;
    int best_d = kUnreachable;
    for (int d = 0; d < 4; ++d) {
      const Coord n = target + facing_delta(static_cast<Facing>(d));
      const int dn = at(n);
      if (dn < best_d) {
        best_d = dn;
        best = n;
      }
    }
    return best;
  }

  int cost_to_face(Coord target) const {
    auto stand = best_stand(target);
    return stand ? at(*stand) : kUnreachable;
  }

  /// First cell on a shortest path to `goal` (goal itself if adjacent).
  Coord first_step(Coord goal) const {
    int idx = s_.index(goal);
    while (parent_[idx] != -1 && dist_[parent_[idx]] != 0) idx = parent_[idx];
    return {idx / s_.width, idx % s_.width};
  }

 private:
  const EnvState& s_;
  std::vector<int> dist_;
  std::vector<int> parent_;
};

namespace nav {

/// Movement action that shifts the agent by `delta` given its facing.
inline Action move_action(Facing facing, Coord delta) {
  if (delta == facing_delta(facing)) return Action::Forward;
  if (delta == facing_delta(turn_right(facing))) return Action::StrafeRight;
  if (delta == facing_delta(turn_left(facing))) return Action::StrafeLeft;
  return Action::Backward;
}

inline Action turn_toward(Facing facing, Coord delta) {
  return delta == facing_delta(turn_right(facing)) ? Action::TurnRight : Action::TurnLeft;
}

/// Walks to a cell next to `target` and turns to face it. Returns
/// `on_arrival` once facing it, or nullopt if unreachable.
inline std::optional<Action> approach(const EnvState& s, AgentKind self, const DistanceField& field, Coord target,
                                      Action on_arrival) {
  const AgentBody& me = s.agent(self);
  const Coord delta = target - me.position;
  if (std::abs(delta.row) + std::abs(delta.col) == 1) {
    if (s.faced_cell(me) == target) return on_arrival;
    return turn_toward(me.facing, delta);
  }
  auto stand = field.best_stand(target);
  if (!stand || field.at(*stand) == DistanceField::kUnreachable) return std::nullopt;
  const Coord next = field.first_step(*stand);
  return move_action(me.facing, next - me.position);
}

/// Drop on the faced cell if possible, otherwise turn toward a free neighbour.
inline Action drop_nearby(const EnvState& s, AgentKind self) {
  const AgentBody& me = s.agent(self);
  auto droppable = [&](Coord c) { return s.passable(c) && s.ground_fruit(c) == kNone; };
  if (droppable(s.faced_cell(me))) return Action::Drop;
  for (Facing f : {turn_right(me.facing), turn_left(me.facing), turn_right(turn_right(me.facing))})
    if (droppable(me.position + facing_delta(f))) return turn_toward(me.facing, facing_delta(f));
  for (int d = 0; d < 4; ++d) {
    const Coord delta = facing_delta(static_cast<Facing>(d));
    if (s.passable(me.position + delta)) return move_action(me.facing, delta);
  }
  return Action::Noop;
}

/// Step toward the nearest non-desert cell (for eating).
inline Action leave_desert(const EnvState& s, AgentKind self, const DistanceField& field) {
  const AgentBody& me = s.agent(self);
  std::optional<Coord> best;
  int best_d = DistanceField::kUnreachable;
  for (int r = 0; r < s.height; ++r)
    for (int c = 0; c < s.width; ++c) {
      const Coord cell{r, c};
      const int d = field.at(cell);
      if (!s.is_desert(cell) && d < best_d) {
        best_d = d;
        best = cell;
      }
    }
  if (!best || best_d == 0) return Action::Noop;
  return move_action(me.facing, field.first_step(*best) - me.position);
}

}  // namespace nav

/// Shared scaffolding for scripted agents: two scripted agents can mirror
/// each other's detours forever, so when an agent has kept trying to move but
/// stayed within two cells over the last few ticks, it sometimes takes a
/// random step instead (seeded per episode).
class ScriptedController : public Controller {
 public:
  void begin_episode(const EnvState& s, AgentKind self, std::uint64_t seed) final {
    rng_.reseed(seed, 5);
    recent_.clear();
    reset(s, self);
  }

  Action act(const EnvState& s, AgentKind self, const AgentContext& ctx) final {
    const Action a = decide(s, self, ctx);
    recent_.push_back(s.agent(self).position);
    if (recent_.size() > kHistory) recent_.pop_front();
    const bool moving = a == Action::Forward || a == Action::Backward || a == Action::StrafeLeft ||
                        a == Action::StrafeRight;
    if (!moving || recent_.size() < kHistory) return a;
    std::vector<Coord> distinct;
    for (const Coord& c : recent_)
      if (std::find(distinct.begin(), distinct.end(), c) == distinct.end()) distinct.push_back(c);
    if (distinct.size() > 2 || !rng_.bernoulli(0.3)) return a;
    static constexpr Action kMoves[] = {Action::Forward, Action::Backward, Action::StrafeLeft, Action::StrafeRight};
    return kMoves[rng_.below(4)];
  }

 protected:
  virtual void reset(const EnvState& s, AgentKind self) = 0;
  virtual Action decide(const EnvState& s, AgentKind self, const AgentContext& ctx) = 0;

 private:
  static constexpr std::size_t kHistory = 6;
  Rng rng_;
  std::deque<Coord> recent_;
};

enum class HelpMode { Never, Always, BelowThreshold };
enum class ForageMode { Nearest, Home, FarPatch, FarBelowThreshold };

struct ScriptedTallSpec {
  HelpMode help = HelpMode::Never;
  ForageMode forage = ForageMode::Nearest;
  int threshold = 10;
};

/// Scripted tall agent with privileged access to the true state.
///
/// Helping: while enabled, commits to the nearest fruit-bearing plant that
/// shows a reach marker, picks its fruit and drops it beside itself, even if
/// the marker expires on the way. Foraging: eats plant fruit from the region
/// selected by the forage mode (never ground fruit).
class ScriptedTall final : public ScriptedController {
 public:
  explicit ScriptedTall(ScriptedTallSpec spec) : spec_(spec) {}

  const ScriptedTallSpec& spec() const { return spec_; }

 protected:
  void reset(const EnvState&, AgentKind) override {
    help_target_.reset();
    pending_help_pick_ = false;
    carrying_help_ = false;
  }

  Action decide(const EnvState& s, AgentKind self, const AgentContext&) override {
    const AgentBody& me = s.agent(self);
    if (me.held && pending_help_pick_) carrying_help_ = true;
    pending_help_pick_ = false;
    if (!me.held) carrying_help_ = false;

    const DistanceField field(s, self);
    if (me.held) {
      if (carrying_help_) return nav::drop_nearby(s, self);
      if (s.is_desert(me.position)) return nav::leave_desert(s, self, field);
      return Action::Eat;
    }

    if (helping(s)) {
      if (help_target_ && !s.plants[*help_target_].fruit) help_target_.reset();
      if (!help_target_) help_target_ = nearest_plant(s, field, [&](const Plant& p) {
        return p.fruit && p.reach_marker_ttl > 0;
      });
      if (help_target_) {
        if (auto a = nav::approach(s, self, field, s.plants[*help_target_].position, Action::Grasp)) {
          if (*a == Action::Grasp) pending_help_pick_ = true;
          return *a;
        }
        help_target_.reset();
      }
    } else {
      help_target_.reset();
    }

    const bool far = forage_far(s);
    const int home_begin = s.config.patch_height + s.config.desert_size;
    auto target = nearest_plant(s, field, [&](const Plant& p) {
      if (!p.fruit) return false;
      switch (spec_.forage) {
        case ForageMode::Nearest: return true;
        default: return far ? p.position.row < s.config.patch_height : p.position.row >= home_begin;
      }
    });
    if (target)
      if (auto a = nav::approach(s, self, field, s.plants[*target].position, Action::Grasp)) return *a;
    return Action::Noop;
  }

 private:
  bool helping(const EnvState& s) const {
    switch (spec_.help) {
      case HelpMode::Never: return false;
      case HelpMode::Always: return true;
      case HelpMode::BelowThreshold: return s.config.desert_size < spec_.threshold;
    }
    return false;
  }

  bool forage_far(const EnvState& s) const {
    switch (spec_.forage) {
      case ForageMode::FarPatch: return true;
      case ForageMode::FarBelowThreshold: return s.config.desert_size < spec_.threshold;
      default: return false;
    }
  }

  template <typename Pred>
  static std::optional<PlantId> nearest_plant(const EnvState& s, const DistanceField& field, Pred pred) {
    std::optional<PlantId> best;
    int best_d = DistanceField::kUnreachable;
    for (PlantId pid = 0; pid < static_cast<PlantId>(s.plants.size()); ++pid) {
      if (!pred(s.plants[pid])) continue;
      const int d = field.cost_to_face(s.plants[pid].position);
      if (d < best_d) {
        best_d = d;
        best = pid;
      }
    }
    return best;
  }

  ScriptedTallSpec spec_;
  std::optional<PlantId> help_target_;
  bool pending_help_pick_ = false;
  bool carrying_help_ = false;
};

/// Scripted short agent. Picks up yellow ground fruit first; otherwise keeps
/// grasping at the nearest plant bearing yellow fruit (it cannot tell trees
/// from shrubs) and gives up on a plant after `patience` failed attempts.
class ScriptedShort final : public ScriptedController {
 public:
  explicit ScriptedShort(int patience = 40, int cooldown = 150) : patience_(patience), cooldown_(cooldown) {}

 protected:
  void reset(const EnvState&, AgentKind) override {
    target_.reset();
    attempts_ = 0;
    blocked_until_.clear();
  }

  Action decide(const EnvState& s, AgentKind self, const AgentContext&) override {
    const AgentBody& me = s.agent(self);
    const DistanceField field(s, self);
    if (me.held) {
      if (s.fruits[*me.held].color == FruitColor::Yellow) {
        if (s.is_desert(me.position)) return nav::leave_desert(s, self, field);
        return Action::Eat;
      }
      return nav::drop_nearby(s, self);
    }

    // Yellow fruit on the ground.
    std::optional<Coord> ground;
    int ground_d = DistanceField::kUnreachable;
    for (const auto& f : s.fruits) {
      const auto* g = std::get_if<OnGround>(&f.location);
      if (!g || f.color != FruitColor::Yellow) continue;
      const int d = field.cost_to_face(g->cell);
      if (d < ground_d) {
        ground_d = d;
        ground = g->cell;
      }
    }
    if (ground)
      if (auto a = nav::approach(s, self, field, *ground, Action::Grasp)) return *a;

    auto usable = [&](PlantId pid) {
      const Plant& p = s.plants[pid];
      if (!p.fruit || s.fruits[*p.fruit].color != FruitColor::Yellow) return false;
      auto it = blocked_until_.find(pid);
      return it == blocked_until_.end() || it->second <= s.tick;
    };
    if (target_ && !usable(*target_)) target_.reset();
    if (!target_) {
      int best_d = DistanceField::kUnreachable;
      for (PlantId pid = 0; pid < static_cast<PlantId>(s.plants.size()); ++pid) {
        if (!usable(pid)) continue;
        const int d = field.cost_to_face(s.plants[pid].position);
        if (d < best_d) {
          best_d = d;
          target_ = pid;
        }
      }
      attempts_ = 0;
    }
    if (!target_) return Action::Noop;
    auto a = nav::approach(s, self, field, s.plants[*target_].position, Action::Grasp);
    if (!a) {
      blocked_until_[*target_] = s.tick + cooldown_;
      target_.reset();
      return Action::Noop;
    }
    if (*a == Action::Grasp && ++attempts_ >= patience_) {
      blocked_until_[*target_] = s.tick + cooldown_;
      target_.reset();
    }
    return *a;
  }

 private:
  int patience_;
  int cooldown_;
  std::optional<PlantId> target_;
  int attempts_ = 0;
  std::map<PlantId, int> blocked_until_;
};

class UniformRandomController final : public Controller {
 public:
  void begin_episode(const EnvState&, AgentKind, std::uint64_t seed) override { rng_.reseed(seed, 7); }
  Action act(const EnvState&, AgentKind, const AgentContext&) override {
    return static_cast<Action>(rng_.below(kNumActions));
  }

 private:
  Rng rng_;
};

class NoopController final : public Controller {
 public:
  void begin_episode(const EnvState&, AgentKind, std::uint64_t) override {}
  Action act(const EnvState&, AgentKind, const AgentContext&) override { return Action::Noop; }
};

/// Builds a scripted controller from its CLI name. Tall kinds:
/// selfish, always-helper, threshold-helper:D, home-forager, far-forager,
/// cost-threshold-forager:D, inflexible-helper. Short kinds: short-forager.
/// Either agent: random, noop.
inline std::unique_ptr<Controller> make_scripted(const std::string& name) {
  auto threshold = [&](const std::string& prefix) -> std::optional<int> {
    if (name.rfind(prefix + ":", 0) != 0) return std::nullopt;
    try {
      return std::stoi(name.substr(prefix.size() + 1));
    } catch (const std::exception&) {
      throw InputError("bad threshold in policy '" + name + "'");
    }
  };
  if (name == "selfish") return std::make_unique<ScriptedTall>(ScriptedTallSpec{HelpMode::Never, ForageMode::Nearest});
  if (name == "always-helper")
    return std::make_unique<ScriptedTall>(ScriptedTallSpec{HelpMode::Always, ForageMode::Nearest});
  if (auto d = threshold("threshold-helper"))
    return std::make_unique<ScriptedTall>(ScriptedTallSpec{HelpMode::BelowThreshold, ForageMode::Nearest, *d});
  if (name == "home-forager") return std::make_unique<ScriptedTall>(ScriptedTallSpec{HelpMode::Never, ForageMode::Home});
  if (name == "far-forager")
    return std::make_unique<ScriptedTall>(ScriptedTallSpec{HelpMode::Never, ForageMode::FarPatch});
  if (auto d = threshold("cost-threshold-forager"))
    return std::make_unique<ScriptedTall>(ScriptedTallSpec{HelpMode::Never, ForageMode::FarBelowThreshold, *d});
  if (name == "inflexible-helper")
    return std::make_unique<ScriptedTall>(ScriptedTallSpec{HelpMode::Always, ForageMode::FarPatch});
  if (name == "short-forager") return std::make_unique<ScriptedShort>();
  if (name == "random") return std::make_unique<UniformRandomController>();
  if (name == "noop") return std::make_unique<NoopController>();
  throw InputError("unknown policy kind '" + name + "'");
}

}  // namespace daycare
