#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "daycare/errors.hpp"
#include "daycare/policy_net.hpp"
#include "daycare/reward_shaping.hpp"

namespace daycare {

struct A2CHyper {
  double discount = 0.99;
  double learning_rate = 3e-4;
  double value_coef = 0.5;
  double entropy_coef = 0.003;
  /// Global gradient-norm clip; 0 disables.
  double max_grad_norm = 10.0;
  AdamConfig adam{};
};

/// Rollout segment for B environments over T steps, index [t * B + b].
template <typename T>
struct TrajectoryBatch {
  int steps = 0;
  int batch = 0;
  std::vector<PolicyInput> obs;
  std::vector<T> aux;              // aux_size values per entry
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<std::uint8_t> first;  // recurrent state zeroed before this step
  std::vector<std::uint8_t> done;   // episode ended after this step
  std::vector<double> values;       // value estimates recorded during the rollout
  std::vector<double> bootstrap;    // value of the state after the last step, per env
  typename PolicyNet<T>::RecurrentState initial;

  void reset(int T_, int B_, int aux_size, int lstm) {
    steps = T_;
    batch = B_;
    obs.assign(static_cast<std::size_t>(T_) * B_, {});
    aux.assign(static_cast<std::size_t>(T_) * B_ * aux_size, T(0));
    actions.assign(static_cast<std::size_t>(T_) * B_, 0);
    rewards.assign(static_cast<std::size_t>(T_) * B_, 0.0);
    first.assign(static_cast<std::size_t>(T_) * B_, 0);
    done.assign(static_cast<std::size_t>(T_) * B_, 0);
    values.assign(static_cast<std::size_t>(T_) * B_, 0.0);
    bootstrap.assign(B_, 0.0);
    initial.h = PolicyNet<T>::Matrix::Zero(lstm, B_);
    initial.c = PolicyNet<T>::Matrix::Zero(lstm, B_);
  }
};

/// Bootstrapped discounted returns over each unroll:
/// R_t = r_t + discount * (1 - done_t) * R_{t+1}, R_T = bootstrap.
inline std::vector<double> n_step_returns(std::span<const double> rewards, std::span<const std::uint8_t> done,
                                          std::span<const double> bootstrap, int steps, int batch, double discount) {
  std::vector<double> out(static_cast<std::size_t>(steps) * batch);
  for (int b = 0; b < batch; ++b) {
    double acc = bootstrap[b];
    for (int t = steps - 1; t >= 0; --t) {
      const std::size_t k = static_cast<std::size_t>(t) * batch + b;
      acc = rewards[k] + (done[k] ? 0.0 : discount * acc);
      out[k] = acc;
    }
  }
  return out;
}

struct LossReport {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double total = 0.0;
  double grad_norm = 0.0;
};

/// Mean-over-steps A2C loss and its gradient.
///
///   L = mean[ -A * log pi(a) + value_coef * 0.5 * (target - v)^2 - entropy_coef * H(pi) ]
///
/// `advantages` and `value_targets` are held constant (they are computed
/// from the returns before the pass). When `popart` is given, the value head
/// predicts in normalised units and `value_targets` must be normalised.
template <typename T>
LossReport a2c_loss(const PolicyNet<T>& net, const TrajectoryBatch<T>& batch, std::span<const double> advantages,
                    std::span<const double> value_targets, const A2CHyper& hyper,
                    typename PolicyNet<T>::Vector* grad) {
  using Matrix = typename PolicyNet<T>::Matrix;
  const auto& arch = net.architecture();
  const int steps = batch.steps, B = batch.batch, A = arch.num_actions;
  const double n = static_cast<double>(steps) * B;

  std::vector<typename PolicyNet<T>::StepCache> caches(steps);
  auto state = batch.initial;
  Matrix aux(arch.aux_size, B);
  LossReport rep;
  std::vector<Matrix> dlogits(steps), dvalues(steps);
  for (int t = 0; t < steps; ++t) {
    for (int b = 0; b < B; ++b) {
      const std::size_t k = static_cast<std::size_t>(t) * B + b;
      if (batch.first[k]) {
        state.h.col(b).setZero();
        state.c.col(b).setZero();
      }
      for (int j = 0; j < arch.aux_size; ++j) aux(j, b) = batch.aux[k * arch.aux_size + j];
    }
    std::span<const PolicyInput> inputs(batch.obs.data() + static_cast<std::size_t>(t) * B, B);
    net.forward(inputs, aux, state, caches[t]);
    const auto& probs = caches[t].probs;
    dlogits[t].resize(A, B);
    dvalues[t].resize(1, B);
    for (int b = 0; b < B; ++b) {
      const std::size_t k = static_cast<std::size_t>(t) * B + b;
      const int act = batch.actions[k];
      double entropy = 0.0;
      for (int a = 0; a < A; ++a) {
        const double p = static_cast<double>(probs(a, b));
        if (p > 0.0) entropy -= p * std::log(p);
      }
      const double logp = std::log(std::max(static_cast<double>(probs(act, b)), 1e-300));
      const double adv = advantages[k];
      const double v = static_cast<double>(caches[t].values(0, b));
      const double err = v - value_targets[k];
      rep.policy_loss += -adv * logp / n;
      rep.value_loss += 0.5 * err * err / n;
      rep.entropy += entropy / n;
      for (int a = 0; a < A; ++a) {
        const double p = static_cast<double>(probs(a, b));
        const double onehot = a == act ? 1.0 : 0.0;
        // d(-A log p_act)/dlogit_a = -A (1[a=act] - p_a)
        // d(-c H)/dlogit_a = c p_a (log p_a + H)
        const double dpg = -adv * (onehot - p);
        const double dent = p > 0.0 ? hyper.entropy_coef * p * (std::log(p) + entropy) : 0.0;
        dlogits[t](a, b) = static_cast<T>((dpg + dent) / n);
      }
      dvalues[t](0, b) = static_cast<T>(hyper.value_coef * err / n);
    }
  }
  rep.total = rep.policy_loss + hyper.value_coef * rep.value_loss - hyper.entropy_coef * rep.entropy;
  if (!std::isfinite(rep.total)) throw NumericError("non-finite A2C loss");
  if (!grad) return rep;

  grad->setZero(net.num_parameters());
  Matrix dh = Matrix::Zero(arch.lstm_size, B), dc = Matrix::Zero(arch.lstm_size, B);
  std::vector<bool> reset(B);
  for (int t = steps - 1; t >= 0; --t) {
    for (int b = 0; b < B; ++b) reset[b] = batch.first[static_cast<std::size_t>(t) * B + b] != 0;
    std::span<const PolicyInput> inputs(batch.obs.data() + static_cast<std::size_t>(t) * B, B);
    net.backward(inputs, caches[t], dlogits[t], dvalues[t], reset, dh, dc, *grad);
  }
  rep.grad_norm = static_cast<double>(grad->norm());
  return rep;
}

/// Owns a network, its optimiser state and optional Pop-Art statistics.
template <typename T>
class A2CLearner {
 public:
  using Vector = typename PolicyNet<T>::Vector;

  A2CLearner() = default;
  A2CLearner(PolicyNet<T> net, A2CHyper hyper, bool use_popart)
      : net_(std::move(net)), hyper_(hyper), use_popart_(use_popart) {}

  PolicyNet<T>& net() { return net_; }
  const PolicyNet<T>& net() const { return net_; }
  AdamState<T>& adam() { return adam_; }
  const AdamState<T>& adam() const { return adam_; }
  PopArtState& popart() { return popart_; }
  const PopArtState& popart() const { return popart_; }
  bool uses_popart() const { return use_popart_; }
  const A2CHyper& hyper() const { return hyper_; }

  /// Value head output mapped back to return units.
  double denormalize(double v) const { return use_popart_ ? popart_.scale() * v + popart_.mean() : v; }

  /// One optimiser step on `batch`. Returns the loss report; on a
  /// non-finite loss writes `dump_path` (when set) and rethrows.
  LossReport update(const TrajectoryBatch<T>& batch, const std::string& dump_path = {}) {
    const auto returns =
        n_step_returns(batch.rewards, batch.done, batch.bootstrap, batch.steps, batch.batch, hyper_.discount);
    std::vector<double> advantages(returns.size()), targets(returns.size());
    for (std::size_t k = 0; k < returns.size(); ++k) advantages[k] = returns[k] - batch.values[k];
    if (use_popart_) {
      const double old_mean = popart_.mean(), old_scale = popart_.scale();
      for (double r : returns) popart_ = popart_update(popart_, r).state;
      auto w = net_.param(net_.value_out_weight());
      auto b = net_.param(net_.value_out_bias());
      double bias = static_cast<double>(b(0, 0));
      std::span<T> weights(w.data(), static_cast<std::size_t>(w.size()));
      preserve_outputs(weights, bias, old_mean, old_scale, popart_.mean(), popart_.scale());
      b(0, 0) = static_cast<T>(bias);
      for (std::size_t k = 0; k < returns.size(); ++k) targets[k] = (returns[k] - popart_.mean()) / popart_.scale();
    } else {
      targets = returns;
    }
    Vector grad;
    LossReport rep;
    try {
      rep = a2c_loss(net_, batch, advantages, targets, hyper_, &grad);
      if (!grad.allFinite()) throw NumericError("non-finite gradient");
    } catch (const NumericError& e) {
      if (!dump_path.empty()) dump(batch, returns, dump_path, e.what());
      throw;
    }
    if (hyper_.max_grad_norm > 0.0 && rep.grad_norm > hyper_.max_grad_norm)
      grad *= static_cast<T>(hyper_.max_grad_norm / rep.grad_norm);
    AdamConfig adam_cfg = hyper_.adam;
    adam_cfg.learning_rate = hyper_.learning_rate;
    adam_step(net_.parameters(), grad, adam_, adam_cfg);
    return rep;
  }

 private:
  static void dump(const TrajectoryBatch<T>& batch, const std::vector<double>& returns, const std::string& path,
                   const std::string& reason) {
    std::ofstream out(path);
    out << "# " << reason << "\n# t b action reward done first value return\n";
    for (int t = 0; t < batch.steps; ++t)
      for (int b = 0; b < batch.batch; ++b) {
        const std::size_t k = static_cast<std::size_t>(t) * batch.batch + b;
        out << t << ' ' << b << ' ' << batch.actions[k] << ' ' << batch.rewards[k] << ' ' << int(batch.done[k])
            << ' ' << int(batch.first[k]) << ' ' << batch.values[k] << ' ' << returns[k] << '\n';
      }
  }

  PolicyNet<T> net_;
  A2CHyper hyper_;
  bool use_popart_ = false;
  AdamState<T> adam_;
  PopArtState popart_;
};

}  // namespace daycare
