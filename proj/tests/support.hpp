#pragma once

// Helpers shared by the unit tests and the acceptance binary. Everything in
// `oracle::` is written independently of the library code it checks.

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "daycare/daycare.hpp"

namespace daycare::testing {

namespace fs = std::filesystem;

/// Fresh empty directory under the system temp dir.
inline fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("daycare_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

inline std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CommandResult {
  int status = -1;
  std::string output;
};

/// Runs a shell command, capturing stdout and stderr together.
inline CommandResult run_command(const std::string& cmd) {
  CommandResult r;
  FILE* pipe = popen((cmd + " 2>&1").c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n = 0;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.output.append(buf, n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

// ------------------------------------------------------------ grasp bench

/// An empty single-patch map with one plant directly in front of the chosen
/// agent. Nothing regrows; the plant is refilled by `refill`.
struct GraspBench {
  EnvState s;
  AgentKind who;
  PlantId plant = kNone;

  GraspBench(AgentKind agent, PlantHeight height, std::uint64_t seed) : who(agent) {
    MapConfig m;
    m.desert_size = 0;
    m.patch_height = 3;
    m.width = 5;
    m.plant_density = 0.0;
    m.regrow_prob = 0.0;
    m.episode_length = 1 << 30;
    m.seed = seed;
    s = generate_map(m);
    s.agents[0].position = {2, 2};
    s.agents[1].position = {4, 2};
    AgentBody& a = s.agent(who);
    a.facing = Facing::E;
    const Coord cell = s.faced_cell(a);
    Plant p;
    p.position = cell;
    p.height = height;
    plant = static_cast<PlantId>(s.plants.size());
    s.plants.push_back(p);
    s.plant_at[s.index(cell)] = plant;
    refill();
  }

  void refill() {
    AgentBody& a = s.agent(who);
    if (a.held) {
      s.fruits[*a.held].location = Consumed{};
      a.held.reset();
    }
    if (!s.plants[plant].fruit) detail::spawn_fruit(s, plant, FruitColor::Yellow);
  }

  /// One grasp attempt; true on success.
  bool attempt() {
    refill();
    std::array<Action, 2> acts{Action::Noop, Action::Noop};
    acts[agent_index(who)] = Action::Grasp;
    const StepResult r = step(s, acts);
    for (const auto& e : r.events)
      if (e.agent == who && e.kind == EventKind::FruitPicked) return true;
    return false;
  }
};

// ------------------------------------------------------------ random states

/// A map with random geometry after `ticks` random joint actions.
inline EnvState random_state(Rng& rng, int max_ticks = 60) {
  MapConfig m;
  m.desert_size = static_cast<int>(rng.below(7));
  m.patch_height = 3 + static_cast<int>(rng.below(5));
  m.width = 5 + static_cast<int>(rng.below(8));
  m.plant_density = 0.2 + 0.5 * rng.uniform();
  m.regrow_prob = 0.1;
  m.seed = rng.next_u64();
  EnvState s = generate_map(m);
  const int ticks = static_cast<int>(rng.below(static_cast<std::uint64_t>(max_ticks) + 1));
  for (int t = 0; t < ticks; ++t)
    step(s, {action_from_index(static_cast<int>(rng.below(kNumActions))),
             action_from_index(static_cast<int>(rng.below(kNumActions)))});
  return s;
}

// ------------------------------------------------------------ oracles

namespace oracle {

/// r~_t = sum_k lambda^(t-k) r_k, evaluated as an explicit power sum.
inline double smoothed_direct(const std::vector<double>& rewards, std::size_t t, double lambda) {
  double acc = 0.0;
  for (std::size_t k = 0; k <= t; ++k) acc += std::pow(lambda, static_cast<double>(t - k)) * rewards[k];
  return acc;
}

inline double shaped_direct(double r_tall, double smooth_tall, double smooth_short, double beta) {
  const double gap = smooth_tall - smooth_short;
  return gap > 0.0 ? r_tall - beta * gap : r_tall;
}

/// Token of one primitive event with respect to its own fruit:
/// G short failed grasp on yellow, P tall pick, D tall drop, p short pick,
/// E short eat, X anything else.
inline char token(const PrimitiveEvent& e) {
  const bool tall = e.agent == AgentKind::Tall;
  switch (e.kind) {
    case EventKind::GraspFailed: return (!tall && e.color == FruitColor::Yellow) ? 'G' : 'X';
    case EventKind::FruitPicked: return tall ? 'P' : 'p';
    case EventKind::FruitDropped: return tall ? 'D' : 'X';
    case EventKind::FruitEaten: return tall ? 'X' : 'E';
  }
  return 'X';
}

/// Counts helping events by enumerating every contiguous subsequence of each
/// fruit's events that spells G+(PD)+pE with the eat within `window` ticks of
/// the last G of the subsequence. Matches cannot contain an inner E, so
/// overlapping matches share their final event; each final event counts once.
inline int count_helping_brute_force(const std::vector<PrimitiveEvent>& log, int window) {
  std::map<FruitId, std::vector<const PrimitiveEvent*>> per_fruit;
  for (const auto& e : log) per_fruit[e.fruit].push_back(&e);
  static const std::regex pattern("G+(PD)+pE");
  int count = 0;
  for (const auto& [fruit, events] : per_fruit) {
    std::string word;
    for (const auto* e : events) word += token(*e);
    for (std::size_t j = 0; j < word.size(); ++j) {
      bool found = false;
      for (std::size_t i = 0; i <= j && !found; ++i) {
        if (!std::regex_match(word.begin() + static_cast<long>(i), word.begin() + static_cast<long>(j) + 1, pattern))
          continue;
        int last_fail = 0;
        for (std::size_t k = i; k <= j; ++k)
          if (word[k] == 'G') last_fail = events[k]->tick;
        if (events[j]->tick <= last_fail + window) found = true;
      }
      if (found) ++count;
    }
  }
  return count;
}

}  // namespace oracle

/// Random time-ordered log of at most `max_events` events over a few fruits,
/// biased so that complete and near-complete helping sequences are common.
inline std::vector<PrimitiveEvent> random_helping_log(Rng& rng, int max_events = 50) {
  const int n = static_cast<int>(rng.below(static_cast<std::uint64_t>(max_events) + 1));
  const int fruits = 1 + static_cast<int>(rng.below(3));
  std::vector<int> phase(fruits, 0);
  std::vector<PrimitiveEvent> log;
  int tick = 0;
  for (int i = 0; i < n; ++i) {
    tick += static_cast<int>(rng.below(90));
    PrimitiveEvent e;
    e.tick = tick;
    e.fruit = static_cast<FruitId>(rng.below(static_cast<std::uint64_t>(fruits)));
    e.color = FruitColor::Yellow;
    int& ph = phase[e.fruit];
    if (rng.bernoulli(0.75)) {
      // Follow the canonical order G P D p E for this fruit.
      static const EventKind kinds[] = {EventKind::GraspFailed, EventKind::FruitPicked, EventKind::FruitDropped,
                                        EventKind::FruitPicked, EventKind::FruitEaten};
      static const AgentKind agents[] = {AgentKind::Short, AgentKind::Tall, AgentKind::Tall, AgentKind::Short,
                                         AgentKind::Short};
      e.kind = kinds[ph];
      e.agent = agents[ph];
      if (rng.bernoulli(0.1)) e.color = FruitColor::Red;
      ph = (ph + 1) % 5;
      if (ph == 3 && rng.bernoulli(0.2)) ph = 1;  // tall re-picks its own drop
    } else {
      e.kind = static_cast<EventKind>(rng.below(4));
      e.agent = rng.bernoulli(0.5) ? AgentKind::Tall : AgentKind::Short;
      if (rng.bernoulli(0.5)) e.color = FruitColor::Red;
      if (rng.bernoulli(0.3)) ph = 0;
    }
    log.push_back(e);
  }
  return log;
}


// ------------------------------------------------------------ gradient check

/// Tiny dense recurrent net: 86 weights.
inline Architecture tiny_dense_architecture() {
  Architecture a;
  a.encoder = EncoderKind::Dense;
  a.input_size = 3;
  a.torso1 = 2;
  a.torso2 = 2;
  a.aux_size = 1;
  a.lstm_size = 2;
  a.head_size = 2;
  a.num_actions = 3;
  return a;
}

struct GradientCheck {
  long weights = 0;
  double max_rel_error = 0.0;
  long worst_index = -1;
};

/// Compares a2c_loss's analytic gradient with central differences on every
/// weight. Relative error is |a - n| / max(|a|, |n|, floor).
inline GradientCheck check_gradients(const Architecture& arch, std::uint64_t seed, int steps = 3, int batch = 2,
                                     double h = 1e-4, double floor = 1e-6) {
  using Net = PolicyNet<double>;
  Net net(arch, seed);
  Rng rng(seed, 77);
  // Move off the initial uniform policy so every segment carries gradient.
  for (Eigen::Index i = 0; i < net.num_parameters(); ++i) net.parameters()(i) = 0.5 * rng.normal();

  TrajectoryBatch<double> tb;
  tb.reset(steps, batch, arch.aux_size, arch.lstm_size);
  for (int t = 0; t < steps; ++t)
    for (int b = 0; b < batch; ++b) {
      const std::size_t k = static_cast<std::size_t>(t) * batch + b;
      PolicyInput& in = tb.obs[k];
      switch (arch.encoder) {
        case EncoderKind::Dense:
          for (int i = 0; i < arch.input_size; ++i) in.dense.push_back(static_cast<float>(rng.normal()));
          break;
        case EncoderKind::MultiHot:
          for (int i = 0; i < arch.input_size; ++i)
            if (rng.bernoulli(0.3)) in.active.push_back(i);
          break;
        case EncoderKind::Conv:
          for (int i = 0; i < arch.input_size; ++i) in.pixels.push_back(static_cast<std::uint8_t>(rng.below(256)));
          break;
      }
      for (int j = 0; j < arch.aux_size; ++j) tb.aux[k * arch.aux_size + j] = rng.normal();
      tb.actions[k] = static_cast<int>(rng.below(static_cast<std::uint64_t>(arch.num_actions)));
      tb.first[k] = t == 0 || (t == steps - 1 && b == 1);
    }
  for (Eigen::Index i = 0; i < tb.initial.h.size(); ++i) tb.initial.h.data()[i] = 0.3 * rng.normal();
  for (Eigen::Index i = 0; i < tb.initial.c.size(); ++i) tb.initial.c.data()[i] = 0.3 * rng.normal();
  std::vector<double> adv(static_cast<std::size_t>(steps) * batch), target(adv.size());
  for (auto& a : adv) a = rng.normal();
  for (auto& v : target) v = rng.normal();
  A2CHyper hyper;
  hyper.value_coef = 0.5;
  hyper.entropy_coef = 0.05;

  Net::Vector grad;
  a2c_loss(net, tb, adv, target, hyper, &grad);
  GradientCheck out;
  out.weights = static_cast<long>(net.num_parameters());
  for (Eigen::Index i = 0; i < net.num_parameters(); ++i) {
    const double saved = net.parameters()(i);
    net.parameters()(i) = saved + h;
    const double up = a2c_loss(net, tb, adv, target, hyper, nullptr).total;
    net.parameters()(i) = saved - h;
    const double down = a2c_loss(net, tb, adv, target, hyper, nullptr).total;
    net.parameters()(i) = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double analytic = grad(i);
    const double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
    if (rel > out.max_rel_error) {
      out.max_rel_error = rel;
      out.worst_index = static_cast<long>(i);
    }
  }
  return out;
}

}  // namespace daycare::testing
