#pragma once

#include <array>
#include <memory>

#include "daycare/controller.hpp"
#include "daycare/perception.hpp"
#include "daycare/policy_net.hpp"
#include "daycare/rng.hpp"

namespace daycare {

/// Network input for `viewer`, always built from the aliased view.
inline PolicyInput encode_observation(const EnvState& s, AgentKind viewer, EncoderKind encoder) {
  PolicyInput in;
  const SymbolicView view = render_symbolic(s, viewer);
  switch (encoder) {
    case EncoderKind::MultiHot: in.active = multi_hot(view); break;
    case EncoderKind::Dense: {
      in.dense.assign(kSymbolicFeatures, 0.0f);
      for (auto i : multi_hot(view)) in.dense[i] = 1.0f;
      break;
    }
    case EncoderKind::Conv: in.pixels = render_pixels(view); break;
  }
  return in;
}

/// Auxiliary scalars: own last reward and both smoothed rewards, the latter
/// scaled by (1 - lambda) so they stay in the range of a single reward.
inline std::array<double, 3> make_aux(const AgentContext& ctx) {
  const double k = 1.0 - ctx.lambda;
  return {ctx.last_reward, k * ctx.smoothed_tall, k * ctx.smoothed_short};
}

/// Inverse-CDF draw from one column of action probabilities.
template <typename Col>
int sample_action(const Col& probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  const int n = static_cast<int>(probs.size());
  for (int a = 0; a < n; ++a) {
    acc += static_cast<double>(probs(a));
    if (u < acc) return a;
  }
  return n - 1;
}

/// Runs a frozen network for one agent, carrying the LSTM state across ticks.
class NetworkController final : public Controller {
 public:
  using Net = PolicyNet<float>;

  explicit NetworkController(std::shared_ptr<const Net> net) : net_(std::move(net)) {}

  void begin_episode(const EnvState&, AgentKind, std::uint64_t seed) override {
    state_ = net_->initial_state(1);
    rng_.reseed(seed, 11);
  }

  Action act(const EnvState& s, AgentKind self, const AgentContext& ctx) override {
    const auto& arch = net_->architecture();
    const PolicyInput in = encode_observation(s, self, arch.encoder);
    Net::Matrix aux(arch.aux_size, 1);
    const auto values = make_aux(ctx);
    for (int j = 0; j < arch.aux_size; ++j) aux(j, 0) = static_cast<float>(j < 3 ? values[j] : 0.0);
    net_->forward(std::span<const PolicyInput>(&in, 1), aux, state_, cache_);
    return static_cast<Action>(sample_action(cache_.probs.col(0), rng_));
  }

  const Net& net() const { return *net_; }

 private:
  std::shared_ptr<const Net> net_;
  Net::RecurrentState state_;
  Net::StepCache cache_;
  Rng rng_;
};

}  // namespace daycare
