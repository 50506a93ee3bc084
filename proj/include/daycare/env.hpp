#pragma once

#include <array>
#include <compare>
#include <deque>
#include <limits>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "daycare/config.hpp"
#include "daycare/errors.hpp"
#include "daycare/rng.hpp"

namespace daycare {

enum class AgentKind : std::uint8_t { Tall = 0, Short = 1 };
enum class Facing : std::uint8_t { N = 0, E = 1, S = 2, W = 3 };
enum class PlantHeight : std::uint8_t { Tree, Shrub };
enum class FruitColor : std::uint8_t { Red, Yellow };
enum class Terrain : std::uint8_t { Ground, Desert };

enum class Action : std::uint8_t {
  Noop,
  Forward,
  Backward,
  StrafeLeft,
  StrafeRight,
  TurnLeft,
  TurnRight,
  Grasp,
  Eat,
  Drop,
};
inline constexpr int kNumActions = 10;

inline constexpr std::array<std::string_view, kNumActions> kActionNames = {
    "noop", "forward", "backward", "strafe_left", "strafe_right",
    "turn_left", "turn_right", "grasp", "eat", "drop"};

inline Action action_from_index(int index) {
  if (index < 0 || index >= kNumActions)
    throw InputError("action index out of range: " + std::to_string(index));
  return static_cast<Action>(index);
}

inline std::string_view action_name(Action a) { return kActionNames[static_cast<int>(a)]; }

inline Action action_from_name(std::string_view name) {
  for (int i = 0; i < kNumActions; ++i)
    if (kActionNames[i] == name) return static_cast<Action>(i);
  throw InputError("unknown action '" + std::string(name) + "'");
}

inline std::string_view agent_name(AgentKind k) { return k == AgentKind::Tall ? "tall" : "short"; }
inline std::string_view color_name(FruitColor c) { return c == FruitColor::Red ? "red" : "yellow"; }

inline int agent_index(AgentKind k) { return static_cast<int>(k); }

struct Coord {
  int row = 0;
  int col = 0;
  friend auto operator<=>(const Coord&, const Coord&) = default;
  Coord operator+(const Coord& o) const { return {row + o.row, col + o.col}; }
  Coord operator-(const Coord& o) const { return {row - o.row, col - o.col}; }
  Coord operator*(int k) const { return {row * k, col * k}; }
};

/// Unit step in (row, col) for each facing; row 0 is the top (north) edge.
inline Coord facing_delta(Facing f) {
  switch (f) {
    case Facing::N: return {-1, 0};
    case Facing::E: return {0, 1};
    case Facing::S: return {1, 0};
    case Facing::W: return {0, -1};
  }
  return {0, 0};
}
inline Facing turn_right(Facing f) { return static_cast<Facing>((static_cast<int>(f) + 1) % 4); }
inline Facing turn_left(Facing f) { return static_cast<Facing>((static_cast<int>(f) + 3) % 4); }

using FruitId = std::int32_t;
using PlantId = std::int32_t;
inline constexpr std::int32_t kNone = -1;

struct Plant {
  Coord position;
  PlantHeight height = PlantHeight::Shrub;
  std::optional<FruitId> fruit;
  int reach_marker_ttl = 0;
  /// Colour every regrown fruit takes; empty means uniformly random.
  std::optional<FruitColor> color_rule;
};

struct OnPlant {
  PlantId plant;
  friend bool operator==(const OnPlant&, const OnPlant&) = default;
};
struct OnGround {
  Coord cell;
  friend bool operator==(const OnGround&, const OnGround&) = default;
};
struct Held {
  AgentKind agent;
  friend bool operator==(const Held&, const Held&) = default;
};
struct Consumed {
  friend bool operator==(const Consumed&, const Consumed&) = default;
};
using FruitLocation = std::variant<OnPlant, OnGround, Held, Consumed>;

struct Fruit {
  FruitId id = 0;
  FruitColor color = FruitColor::Red;
  FruitLocation location = Consumed{};
  /// Plant the fruit grew on.
  PlantId origin = kNone;
};

struct AgentBody {
  AgentKind kind = AgentKind::Tall;
  Coord position;
  Facing facing = Facing::N;
  std::optional<FruitId> held;
  bool alive = true;
};

enum class EventKind : std::uint8_t { GraspFailed, FruitPicked, FruitDropped, FruitEaten };

inline std::string_view event_kind_name(EventKind k) {
  switch (k) {
    case EventKind::GraspFailed: return "grasp_failed";
    case EventKind::FruitPicked: return "fruit_picked";
    case EventKind::FruitDropped: return "fruit_dropped";
    case EventKind::FruitEaten: return "fruit_eaten";
  }
  return "?";
}

/// One primitive interaction. `cell` is the plant cell for grasp/pick-from-plant,
/// the ground cell for pick-from-ground and drop, and the eater's cell for eat.
/// `plant` is kNone for ground picks, drops and eats.
struct PrimitiveEvent {
  int tick = 0;
  EventKind kind = EventKind::GraspFailed;
  AgentKind agent = AgentKind::Tall;
  FruitId fruit = kNone;
  FruitColor color = FruitColor::Red;
  Coord cell;
  PlantId plant = kNone;
  friend bool operator==(const PrimitiveEvent&, const PrimitiveEvent&) = default;
};

struct EnvState {
  MapConfig config;
  int height = 0;
  int width = 0;
  int tick = 0;
  std::vector<Terrain> terrain;
  std::vector<PlantId> plant_at;
  std::vector<FruitId> ground_fruit_at;
  std::vector<Plant> plants;
  std::vector<Fruit> fruits;
  std::array<AgentBody, 2> agents;
  Rng grasp_rng;
  Rng regrow_rng;

  bool in_bounds(Coord c) const { return c.row >= 0 && c.row < height && c.col >= 0 && c.col < width; }
  int index(Coord c) const { return c.row * width + c.col; }
  bool done() const { return tick >= config.episode_length; }

  const AgentBody& agent(AgentKind k) const { return agents[agent_index(k)]; }
  AgentBody& agent(AgentKind k) { return agents[agent_index(k)]; }

  PlantId plant_id_at(Coord c) const { return in_bounds(c) ? plant_at[index(c)] : kNone; }
  FruitId ground_fruit(Coord c) const { return in_bounds(c) ? ground_fruit_at[index(c)] : kNone; }
  bool is_desert(Coord c) const { return in_bounds(c) && terrain[index(c)] == Terrain::Desert; }

  /// Alive agent standing at `c`, if any.
  std::optional<AgentKind> occupant(Coord c) const {
    for (const auto& a : agents)
      if (a.alive && a.position == c) return a.kind;
    return std::nullopt;
  }

  bool passable(Coord c) const { return in_bounds(c) && plant_at[index(c)] == kNone && !occupant(c); }

  Coord faced_cell(const AgentBody& a) const { return a.position + facing_delta(a.facing); }

  /// Removes an agent from play (used for the solo probe).
  void despawn(AgentKind k) {
    auto& a = agent(k);
    if (a.held) throw LifecycleError("cannot despawn an agent that holds fruit");
    a.alive = false;
  }
};

struct StepResult {
  std::array<double, 2> rewards{0.0, 0.0};
  std::vector<PrimitiveEvent> events;
  bool done = false;
};

namespace detail {

inline FruitId spawn_fruit(EnvState& s, PlantId pid, FruitColor color) {
  Fruit f;
  f.id = static_cast<FruitId>(s.fruits.size());
  f.color = color;
  f.location = OnPlant{pid};
  f.origin = pid;
  s.fruits.push_back(f);
  s.plants[pid].fruit = f.id;
  return f.id;
}

inline FruitColor draw_color(const Plant& p, Rng& rng) {
  if (p.color_rule) return *p.color_rule;
  return rng.bernoulli(0.5) ? FruitColor::Yellow : FruitColor::Red;
}

inline Coord sample_free_cell(const EnvState& s, int row_begin, int row_end, Rng& rng) {
  std::vector<Coord> free;
  for (int r = row_begin; r < row_end; ++r)
    for (int c = 0; c < s.width; ++c)
      if (s.passable({r, c})) free.push_back({r, c});
  if (free.empty()) throw ConfigError("no free cell to spawn an agent");
  return free[rng.below(free.size())];
}

/// Removes the fewest planned plants needed so that every free cell is
/// reachable from `origin` (0-1 BFS from each isolated pocket; ties broken
/// by scan order). Keeps agents from being walled in.
inline void connect_free_cells(const EnvState& s, std::vector<bool>& blocked, Coord origin) {
  const int n = s.height * s.width;
  std::vector<bool> reached(n, false);
  auto flood = [&](int start) {
    std::deque<int> q{start};
    reached[start] = true;
    while (!q.empty()) {
      const int i = q.front();
      q.pop_front();
      const Coord c{i / s.width, i % s.width};
      for (int d = 0; d < 4; ++d) {
        const Coord nb = c + facing_delta(static_cast<Facing>(d));
        if (!s.in_bounds(nb)) continue;
        const int j = s.index(nb);
        if (reached[j] || blocked[j]) continue;
        reached[j] = true;
        q.push_back(j);
      }
    }
  };
  flood(s.index(origin));
  for (int start = 0; start < n; ++start) {
    if (blocked[start] || reached[start]) continue;
    // Cheapest path (in plant cells crossed) from this pocket to the reached set.
    std::vector<int> dist(n, std::numeric_limits<int>::max()), parent(n, -1);
    std::deque<int> q{start};
    dist[start] = 0;
    int hit = -1;
    while (!q.empty()) {
      const int i = q.front();
      q.pop_front();
      if (reached[i]) {
        hit = i;
        break;
      }
      const Coord c{i / s.width, i % s.width};
      for (int d = 0; d < 4; ++d) {
        const Coord nb = c + facing_delta(static_cast<Facing>(d));
        if (!s.in_bounds(nb)) continue;
        const int j = s.index(nb);
        const int w = blocked[j] ? 1 : 0;
        if (dist[i] + w >= dist[j]) continue;
        dist[j] = dist[i] + w;
        parent[j] = i;
        if (w == 0) q.push_front(j);
        else q.push_back(j);
      }
    }
    for (int i = hit; i != -1; i = parent[i]) blocked[i] = false;
    flood(start);
  }
}

}  // namespace detail

/// Builds the initial state for `config`.
///
/// Agents are placed first (tall in the bottom patch, short in the top patch),
/// then every remaining patch cell grows a plant with probability
/// `plant_density`, except that plants sealing off a pocket of free cells are
/// cleared. All draws come from the map-generation stream.
inline EnvState generate_map(const MapConfig& config) {
  config.validate();
  EnvState s;
  s.config = config;
  s.height = config.height();
  s.width = config.width;
  const std::size_t cells = static_cast<std::size_t>(s.height) * s.width;
  s.terrain.assign(cells, Terrain::Ground);
  s.plant_at.assign(cells, kNone);
  s.ground_fruit_at.assign(cells, kNone);
  for (int r = 0; r < s.height; ++r)
    if (config.is_desert_row(r))
      for (int c = 0; c < s.width; ++c) s.terrain[s.index({r, c})] = Terrain::Desert;

  Rng map_rng(config.seed, /*stream=*/1);
  s.grasp_rng.reseed(config.seed, 2);
  s.regrow_rng.reseed(config.seed, 3);

  const int bottom_begin = config.patch_height + config.desert_size;
  auto& tall = s.agents[0];
  tall.kind = AgentKind::Tall;
  tall.position = detail::sample_free_cell(s, bottom_begin, s.height, map_rng);
  tall.facing = static_cast<Facing>(map_rng.below(4));
  auto& shrt = s.agents[1];
  shrt.kind = AgentKind::Short;
  shrt.position = detail::sample_free_cell(s, 0, config.patch_height, map_rng);
  shrt.facing = static_cast<Facing>(map_rng.below(4));

  // Plant candidates: every patch cell draws grow, height and colour in a
  // fixed order, so later carving never shifts the stream.
  struct Candidate {
    bool grow = false;
    bool tree = false;
    bool yellow = false;
  };
  std::vector<Candidate> cand(cells);
  for (int r = 0; r < s.height; ++r) {
    if (config.is_desert_row(r)) continue;
    for (int c = 0; c < s.width; ++c) {
      Candidate& k = cand[s.index({r, c})];
      k.grow = map_rng.bernoulli(config.plant_density);
      k.tree = map_rng.bernoulli(config.tree_fraction);
      k.yellow = map_rng.bernoulli(0.5);
      if (s.occupant({r, c})) k.grow = false;
    }
  }
  std::vector<bool> blocked(cells);
  for (std::size_t i = 0; i < cells; ++i) blocked[i] = cand[i].grow;
  detail::connect_free_cells(s, blocked, tall.position);

  const bool separated = config.desert_size > 0;
  for (int r = 0; r < s.height; ++r) {
    for (int c = 0; c < s.width; ++c) {
      const Candidate& k = cand[s.index({r, c})];
      if (!blocked[s.index({r, c})]) continue;
      Plant p;
      p.position = {r, c};
      p.height = k.tree ? PlantHeight::Tree : PlantHeight::Shrub;
      FruitColor color = k.yellow ? FruitColor::Yellow : FruitColor::Red;
      if (separated) {
        p.color_rule = config.is_top_patch_row(r) ? FruitColor::Yellow : FruitColor::Red;
        color = *p.color_rule;
      }
      const auto pid = static_cast<PlantId>(s.plants.size());
      s.plants.push_back(p);
      s.plant_at[s.index({r, c})] = pid;
      detail::spawn_fruit(s, pid, color);
    }
  }
  return s;
}

/// Refills each empty plant with probability `regrow_prob` from the regrow
/// stream. No draw is made when the outcome is certain.
inline std::vector<FruitId> regrow(EnvState& s) {
  std::vector<FruitId> grown;
  const double p = s.config.regrow_prob;
  if (p <= 0.0) return grown;
  for (PlantId pid = 0; pid < static_cast<PlantId>(s.plants.size()); ++pid) {
    if (s.plants[pid].fruit) continue;
    if (p < 1.0 && !s.regrow_rng.bernoulli(p)) continue;
    grown.push_back(detail::spawn_fruit(s, pid, detail::draw_color(s.plants[pid], s.regrow_rng)));
  }
  return grown;
}

namespace detail {

inline Coord move_delta(const AgentBody& a, Action act) {
  const Coord fwd = facing_delta(a.facing);
  const Coord right = facing_delta(turn_right(a.facing));
  switch (act) {
    case Action::Forward: return fwd;
    case Action::Backward: return fwd * -1;
    case Action::StrafeLeft: return right * -1;
    case Action::StrafeRight: return right;
    default: return {0, 0};
  }
}

inline void move_phase(EnvState& s, AgentBody& a, Action act) {
  switch (act) {
    case Action::TurnLeft: a.facing = turn_left(a.facing); return;
    case Action::TurnRight: a.facing = turn_right(a.facing); return;
    case Action::Forward:
    case Action::Backward:
    case Action::StrafeLeft:
    case Action::StrafeRight: {
      const Coord target = a.position + move_delta(a, act);
      if (s.passable(target)) a.position = target;
      return;
    }
    default: return;
  }
}

inline double reward_for(AgentKind eater, FruitColor color) {
  if (eater == AgentKind::Tall) return 1.0;
  return color == FruitColor::Yellow ? 1.0 : 0.0;
}

inline void interact_phase(EnvState& s, AgentBody& a, Action act, StepResult& out) {
  const int tick = s.tick;
  switch (act) {
    case Action::Grasp: {
      if (a.held) return;
      const Coord target = s.faced_cell(a);
      if (!s.in_bounds(target)) return;
      const PlantId pid = s.plant_id_at(target);
      if (pid != kNone) {
        Plant& plant = s.plants[pid];
        if (!plant.fruit) return;
        const FruitId fid = *plant.fruit;
        bool success = true;
        if (a.kind == AgentKind::Short) {
          success = plant.height == PlantHeight::Shrub && s.grasp_rng.bernoulli(kShortShrubGraspProb);
        }
        Fruit& fruit = s.fruits[fid];
        if (!success) {
          plant.reach_marker_ttl = s.config.marker_ttl;
          out.events.push_back({tick, EventKind::GraspFailed, a.kind, fid, fruit.color, target, pid});
          return;
        }
        plant.fruit.reset();
        fruit.location = Held{a.kind};
        a.held = fid;
        out.events.push_back({tick, EventKind::FruitPicked, a.kind, fid, fruit.color, target, pid});
        return;
      }
      const FruitId fid = s.ground_fruit(target);
      if (fid == kNone) return;
      s.ground_fruit_at[s.index(target)] = kNone;
      s.fruits[fid].location = Held{a.kind};
      a.held = fid;
      out.events.push_back({tick, EventKind::FruitPicked, a.kind, fid, s.fruits[fid].color, target, kNone});
      return;
    }
    case Action::Eat: {
      if (!a.held || s.is_desert(a.position)) return;
      Fruit& fruit = s.fruits[*a.held];
      fruit.location = Consumed{};
      a.held.reset();
      out.rewards[agent_index(a.kind)] += reward_for(a.kind, fruit.color);
      out.events.push_back({tick, EventKind::FruitEaten, a.kind, fruit.id, fruit.color, a.position, kNone});
      return;
    }
    case Action::Drop: {
      if (!a.held) return;
      const Coord target = s.faced_cell(a);
      if (!s.passable(target) || s.ground_fruit(target) != kNone) return;
      Fruit& fruit = s.fruits[*a.held];
      fruit.location = OnGround{target};
      s.ground_fruit_at[s.index(target)] = fruit.id;
      a.held.reset();
      out.events.push_back({tick, EventKind::FruitDropped, a.kind, fruit.id, fruit.color, target, kNone});
      return;
    }
    default: return;
  }
}

}  // namespace detail

/// Advances the episode by one tick.
///
/// Phases, in order: reach markers decay; movement and turning (tall first,
/// then short, each blocked by walls, plants and the other agent's current
/// cell); interactions (tall first); regrowth; tick increment. Actions of a
/// despawned agent are ignored.
inline StepResult step(EnvState& s, const std::array<Action, 2>& actions) {
  if (s.done()) throw LifecycleError("step called after episode end (tick " + std::to_string(s.tick) + ")");
  for (Action a : actions) action_from_index(static_cast<int>(a));
  StepResult out;
  for (auto& p : s.plants)
    if (p.reach_marker_ttl > 0) --p.reach_marker_ttl;
  for (auto& agent : s.agents)
    if (agent.alive) detail::move_phase(s, agent, actions[agent_index(agent.kind)]);
  for (auto& agent : s.agents)
    if (agent.alive) detail::interact_phase(s, agent, actions[agent_index(agent.kind)], out);
  regrow(s);
  ++s.tick;
  out.done = s.done();
  return out;
}

inline StepResult step(EnvState& s, int tall_action, int short_action) {
  return step(s, {action_from_index(tall_action), action_from_index(short_action)});
}

}  // namespace daycare
