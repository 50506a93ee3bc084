#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "daycare/errors.hpp"

namespace daycare {

inline constexpr double kDefaultSmoothing = 0.975;

inline void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericError(std::string("non-finite ") + what);
}

/// Exponentially smoothed reward of both agents. Starts at zero each episode.
struct SmoothedRewards {
  double tall = 0.0;
  double short_ = 0.0;
  double lambda = kDefaultSmoothing;
};

/// r~ <- lambda * r~ + r, for both agents.
inline SmoothedRewards smooth_update(const SmoothedRewards& prev, double r_tall, double r_short) {
  require_finite(r_tall, "tall reward");
  require_finite(r_short, "short reward");
  SmoothedRewards next = prev;
  next.tall = prev.lambda * prev.tall + r_tall;
  next.short_ = prev.lambda * prev.short_ + r_short;
  return next;
}

struct InequityConfig {
  double beta = 0.0;
};

/// Advantageous inequity aversion for the tall agent. `smoothed` must already
/// include the current tick's rewards. The short agent's reward is never
/// shaped.
inline double inequity_adjusted_reward(double r_tall, const SmoothedRewards& smoothed, const InequityConfig& cfg) {
  const double penalty = cfg.beta * std::max(smoothed.tall - smoothed.short_, 0.0);
  const double out = r_tall - penalty;
  require_finite(out, "shaped reward");
  return out;
}

/// Per-episode shaping state for one tall/short pair.
class RewardShaper {
 public:
  RewardShaper(double beta, double lambda) : cfg_{beta} { smoothed_.lambda = lambda; }

  void reset() {
    smoothed_.tall = 0.0;
    smoothed_.short_ = 0.0;
  }

  /// Consumes the tick's extrinsic rewards and returns the shaped tall reward.
  double operator()(double r_tall, double r_short) {
    smoothed_ = smooth_update(smoothed_, r_tall, r_short);
    return inequity_adjusted_reward(r_tall, smoothed_, cfg_);
  }

  const SmoothedRewards& smoothed() const { return smoothed_; }
  double beta() const { return cfg_.beta; }

 private:
  InequityConfig cfg_;
  SmoothedRewards smoothed_;
};

inline constexpr double kPopArtStep = 1e-3;
inline constexpr double kPopArtMinScale = 1e-2;
inline constexpr double kPopArtMaxScale = 1e6;

/// Adaptive target normalisation statistics.
///
/// First and second moments are exponential moving averages with step
/// `step_size`, bias-corrected for the zero start so that a constant stream
/// is matched exactly from the first update.
struct PopArtState {
  double mean_acc = 0.0;
  double second_acc = 0.0;
  double weight_acc = 0.0;
  double step_size = kPopArtStep;
  double min_scale = kPopArtMinScale;
  double max_scale = kPopArtMaxScale;

  double mean() const { return weight_acc > 0.0 ? mean_acc / weight_acc : 0.0; }
  double second_moment() const { return weight_acc > 0.0 ? second_acc / weight_acc : 1.0; }
  double scale() const {
    const double m = mean();
    const double var = std::max(second_moment() - m * m, 0.0);
    return std::clamp(std::sqrt(var), min_scale, max_scale);
  }
};

struct PopArtUpdate {
  PopArtState state;
  double normalized_target = 0.0;
  double old_mean = 0.0;
  double old_scale = 1.0;
};

inline PopArtUpdate popart_update(const PopArtState& prev, double target) {
  require_finite(target, "Pop-Art target");
  PopArtUpdate out;
  out.old_mean = prev.mean();
  out.old_scale = prev.scale();
  PopArtState s = prev;
  const double keep = 1.0 - s.step_size;
  s.mean_acc = keep * s.mean_acc + s.step_size * target;
  s.second_acc = keep * s.second_acc + s.step_size * target * target;
  s.weight_acc = keep * s.weight_acc + s.step_size;
  out.state = s;
  out.normalized_target = (target - s.mean()) / s.scale();
  return out;
}

/// Rescales a linear value output (weights w, bias b) so that
/// scale * (w.x + b) + mean is unchanged when statistics move from
/// (old_mean, old_scale) to (new_mean, new_scale).
template <typename WeightRange>
void preserve_outputs(WeightRange& weights, double& bias, double old_mean, double old_scale, double new_mean,
                      double new_scale) {
  const double ratio = old_scale / new_scale;
  for (auto& w : weights) w = static_cast<std::remove_reference_t<decltype(w)>>(w * ratio);
  bias = (old_scale * bias + old_mean - new_mean) / new_scale;
}

}  // namespace daycare
