#pragma once

#include <cstdint>

#include "daycare/env.hpp"

namespace daycare {

/// Per-tick signals an agent may condition on besides its observation.
struct AgentContext {
  double last_reward = 0.0;
  double smoothed_tall = 0.0;
  double smoothed_short = 0.0;
  double lambda = 0.975;
};

/// Anything that picks actions for one agent during an episode.
///
/// Learned controllers only read their own aliased observation of `state`;
/// scripted controllers may read the true state (test and validation use).
class Controller {
 public:
  virtual ~Controller() = default;
  virtual void begin_episode(const EnvState& state, AgentKind self, std::uint64_t seed) = 0;
  virtual Action act(const EnvState& state, AgentKind self, const AgentContext& ctx) = 0;
};

}  // namespace daycare
