#pragma once

#include <array>
#include <string>
#include <vector>

#include "daycare/controller.hpp"
#include "daycare/env.hpp"
#include "daycare/event_log.hpp"
#include "daycare/helping_detector.hpp"
#include "daycare/kv.hpp"
#include "daycare/reward_shaping.hpp"

namespace daycare {

struct EpisodeSpec {
  MapConfig map;
  int index = 0;
  /// Short agent despawned before the first tick (neutral probe).
  bool solo = false;
  double beta = 0.0;
  double lambda = kDefaultSmoothing;
  std::uint64_t controller_seed = 0;
  int window = kHelpingWindow;
  bool keep_log = false;
};

struct EpisodeResult {
  std::array<double, 2> returns{0.0, 0.0};
  double shaped_tall_return = 0.0;
  std::vector<HelpingEvent> helping;
  /// Fruit from the top patch eaten by the tall agent.
  int far_patch_eaten = 0;
  int ticks = 0;
  std::string log;
};

inline std::string format_episode_header(const EpisodeSpec& spec) {
  std::string s = "episode index=" + std::to_string(spec.index);
  if (spec.solo) s += " solo=1";
  return s + " " + spec.map.to_line();
}

inline std::string format_episode_end(int index, const EpisodeResult& r) {
  return "end index=" + std::to_string(index) + " tall_return=" + KeyValues::format_double(r.returns[0]) +
         " short_return=" + KeyValues::format_double(r.returns[1]) +
         " helping=" + std::to_string(r.helping.size());
}

/// Plays one episode to completion. `short_ctl` may be null when solo.
inline EpisodeResult run_episode(const EpisodeSpec& spec, Controller& tall, Controller* short_ctl) {
  EnvState s = generate_map(spec.map);
  if (spec.solo) s.despawn(AgentKind::Short);
  if (!spec.solo && !short_ctl) throw InputError("short controller required unless solo");

  EpisodeResult out;
  auto line = [&](const std::string& text) {
    if (spec.keep_log) {
      out.log += text;
      out.log += '\n';
    }
  };
  line(format_episode_header(spec));

  tall.begin_episode(s, AgentKind::Tall, mix_seed(spec.controller_seed, 0));
  if (!spec.solo) short_ctl->begin_episode(s, AgentKind::Short, mix_seed(spec.controller_seed, 1));

  HelpingDetector detector(spec.map.desert_size, spec.window);
  RewardShaper shaper(spec.beta, spec.lambda);
  std::array<double, 2> last{0.0, 0.0};
  while (!s.done()) {
    const SmoothedRewards& sm = shaper.smoothed();
    AgentContext ctx{0.0, sm.tall, sm.short_, spec.lambda};
    std::array<Action, 2> acts{Action::Noop, Action::Noop};
    ctx.last_reward = last[0];
    acts[0] = tall.act(s, AgentKind::Tall, ctx);
    if (!spec.solo) {
      ctx.last_reward = last[1];
      acts[1] = short_ctl->act(s, AgentKind::Short, ctx);
    }
    line(format_actions(s.tick, acts));
    StepResult r = step(s, acts);
    for (const auto& e : r.events) {
      line(format_event(e));
      if (e.kind == EventKind::FruitEaten && e.agent == AgentKind::Tall &&
          s.config.is_top_patch_row(s.plants[s.fruits[e.fruit].origin].position.row))
        ++out.far_patch_eaten;
    }
    for (auto& h : detector.ingest(r.events)) {
      line(format_helping(h));
      out.helping.push_back(h);
    }
    out.shaped_tall_return += shaper(r.rewards[0], r.rewards[1]);
    out.returns[0] += r.rewards[0];
    out.returns[1] += r.rewards[1];
    last = r.rewards;
  }
  out.ticks = s.tick;
  line(format_episode_end(spec.index, out));
  return out;
}

}  // namespace daycare
