#pragma once

// Umbrella header.

#include "daycare/a2c.hpp"
#include "daycare/agents.hpp"
#include "daycare/checkpoint.hpp"
#include "daycare/config.hpp"
#include "daycare/controller.hpp"
#include "daycare/env.hpp"
#include "daycare/episode.hpp"
#include "daycare/errors.hpp"
#include "daycare/evaluation.hpp"
#include "daycare/event_log.hpp"
#include "daycare/helping_detector.hpp"
#include "daycare/kv.hpp"
#include "daycare/perception.hpp"
#include "daycare/policy_net.hpp"
#include "daycare/reward_shaping.hpp"
#include "daycare/rng.hpp"
#include "daycare/scripted.hpp"
#include "daycare/stats.hpp"
#include "daycare/svg_plot.hpp"
#include "daycare/training.hpp"
