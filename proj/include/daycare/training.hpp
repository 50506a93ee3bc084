#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "daycare/a2c.hpp"
#include "daycare/agents.hpp"
#include "daycare/checkpoint.hpp"
#include "daycare/env.hpp"
#include "daycare/helping_detector.hpp"
#include "daycare/kv.hpp"
#include "daycare/reward_shaping.hpp"

namespace daycare {

inline const std::vector<int>& training_deserts() {
  static const std::vector<int> sizes{0, 1, 3, 5, 7, 9, 11, 13, 15};
  return sizes;
}

inline const std::vector<int>& evaluation_deserts() {
  static const std::vector<int> sizes{0, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20};
  return sizes;
}

/// Uniform draws from a fixed set of desert sizes.
class DesertSampler {
 public:
  DesertSampler(std::vector<int> sizes, std::uint64_t seed) : sizes_(std::move(sizes)), rng_(seed, 21) {
    if (sizes_.empty()) throw ConfigError("desert sampler needs at least one size");
  }
  int draw() { return sizes_[rng_.below(sizes_.size())]; }
  const std::vector<int>& sizes() const { return sizes_; }
  Rng& rng() { return rng_; }
  const Rng& rng() const { return rng_; }

 private:
  std::vector<int> sizes_;
  Rng rng_;
};

inline std::string join_ints(const std::vector<int>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + std::to_string(xs[i]);
  return s;
}

inline std::vector<int> split_ints(const std::string& text) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = std::min(text.find(',', pos), text.size());
    const std::string tok = text.substr(pos, comma - pos);
    int v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || ec != std::errc() || p != tok.data() + tok.size())
      throw ConfigError("bad integer list '" + text + "'");
    out.push_back(v);
    pos = comma + 1;
  }
  return out;
}

struct TrainConfig {
  double beta = 0.0;
  /// Environment ticks summed over all parallel environments.
  std::int64_t total_steps = 2'000'000;
  std::uint64_t seed = 0;
  int num_envs = 16;
  int unroll = 100;
  A2CHyper hyper{};
  Architecture arch = Architecture::desk();
  /// Geometry template; desert_size and seed are set per episode.
  MapConfig geometry{};
  std::vector<int> deserts = training_deserts();
  double lambda = kDefaultSmoothing;
  bool popart = false;
  /// Accepted for config compatibility; no contrastive loss is implemented.
  bool cpc = false;
  /// Train the tall agent alone with the short agent despawned.
  bool solo = false;
  std::int64_t checkpoint_interval = 500'000;
  std::int64_t curve_interval = 20'000;

  void validate() const {
    if (!(beta >= 0.0)) throw ConfigError("beta must be >= 0");
    if (total_steps < 0) throw ConfigError("steps must be >= 0");
    if (num_envs < 1 || unroll < 1) throw ConfigError("num_envs and unroll must be >= 1");
    if (!(lambda >= 0.0 && lambda < 1.0)) throw ConfigError("lambda must be in [0, 1)");
    if (deserts.empty()) throw ConfigError("at least one training desert size is required");
    for (int d : deserts)
      if (d < 0 || d > kMaxDesertSize) throw ConfigError("training desert size out of range");
    if (checkpoint_interval < 0 || curve_interval < 1) throw ConfigError("bad interval");
    geometry.validate();
  }

  KeyValues to_kv() const {
    KeyValues kv;
    kv.set("beta", beta);
    kv.set("steps", total_steps);
    kv.set("seed", seed);
    kv.set("num_envs", num_envs);
    kv.set("unroll", unroll);
    kv.set("discount", hyper.discount);
    kv.set("learning_rate", hyper.learning_rate);
    kv.set("value_coef", hyper.value_coef);
    kv.set("entropy_coef", hyper.entropy_coef);
    kv.set("max_grad_norm", hyper.max_grad_norm);
    kv.set("lambda", lambda);
    kv.set("popart", popart);
    kv.set("cpc", cpc);
    kv.set("solo", solo);
    kv.set("train_deserts", join_ints(deserts));
    kv.set("checkpoint_interval", checkpoint_interval);
    kv.set("curve_interval", curve_interval);
    const KeyValues a = arch.to_kv();
    for (const auto& k : a.keys()) kv.set("arch." + k, a.get(k));
    const KeyValues g = geometry.to_kv();
    for (const auto& k : g.keys())
      if (k != "desert_size" && k != "seed") kv.set("map." + k, g.get(k));
    return kv;
  }

  static TrainConfig from_kv(const KeyValues& kv) {
    TrainConfig c;
    KeyValues arch_kv, map_kv;
    for (const auto& k : kv.keys()) {
      if (k.rfind("arch.", 0) == 0) arch_kv.set(k.substr(5), kv.get(k));
      else if (k.rfind("map.", 0) == 0) map_kv.set(k.substr(4), kv.get(k));
      else if (k == "beta") c.beta = kv.get_double(k);
      else if (k == "steps") c.total_steps = kv.get_int(k);
      else if (k == "seed") c.seed = kv.get_u64(k);
      else if (k == "num_envs") c.num_envs = static_cast<int>(kv.get_int(k));
      else if (k == "unroll") c.unroll = static_cast<int>(kv.get_int(k));
      else if (k == "discount") c.hyper.discount = kv.get_double(k);
      else if (k == "learning_rate") c.hyper.learning_rate = kv.get_double(k);
      else if (k == "value_coef") c.hyper.value_coef = kv.get_double(k);
      else if (k == "entropy_coef") c.hyper.entropy_coef = kv.get_double(k);
      else if (k == "max_grad_norm") c.hyper.max_grad_norm = kv.get_double(k);
      else if (k == "lambda") c.lambda = kv.get_double(k);
      else if (k == "popart") c.popart = kv.get_bool(k);
      else if (k == "cpc") c.cpc = kv.get_bool(k);
      else if (k == "solo") c.solo = kv.get_bool(k);
      else if (k == "train_deserts") c.deserts = split_ints(kv.get(k));
      else if (k == "checkpoint_interval") c.checkpoint_interval = kv.get_int(k);
      else if (k == "curve_interval") c.curve_interval = kv.get_int(k);
      else if (k == "fingerprint" || k == "steps_done" || k == "episodes_done") continue;
      else throw ConfigError("unknown run config key '" + k + "'");
    }
    if (!arch_kv.keys().empty()) c.arch = Architecture::from_kv(arch_kv);
    if (!map_kv.keys().empty()) c.geometry = MapConfig::from_kv(map_kv);
    c.validate();
    return c;
  }

  std::string fingerprint() const { return hex64(fnv1a(to_kv().to_string())); }
};

struct CurveRow {
  std::int64_t steps = 0;
  std::int64_t episodes = 0;
  double tall_return = 0.0;
  double tall_shaped_return = 0.0;
  double short_return = 0.0;
  double helping = 0.0;
  double tall_entropy = 0.0;
  double short_entropy = 0.0;
};

inline std::string curve_header() {
  return "steps,episodes,tall_return,tall_shaped_return,short_return,helping,tall_entropy,short_entropy";
}

inline std::string format_curve_row(const CurveRow& r) {
  auto f = KeyValues::format_double;
  return std::to_string(r.steps) + "," + std::to_string(r.episodes) + "," + f(r.tall_return) + "," +
         f(r.tall_shaped_return) + "," + f(r.short_return) + "," + f(r.helping) + "," + f(r.tall_entropy) + "," +
         f(r.short_entropy);
}

/// Synchronous vectorised A2C over `num_envs` daycare environments. Both
/// agents learn at once: tall on the inequity-shaped reward, short on its
/// extrinsic reward. Every episode draws its desert size from the training
/// set and its map seed from the run seed and a global episode counter.
class Trainer {
 public:
  using Net = PolicyNet<float>;
  using Batch = TrajectoryBatch<float>;

  explicit Trainer(TrainConfig cfg)
      : cfg_((cfg.validate(), std::move(cfg))),
        sampler_(cfg_.deserts, cfg_.seed),
        learners_{A2CLearner<float>(Net(cfg_.arch, mix_seed(cfg_.seed, 201)), cfg_.hyper, cfg_.popart),
                  A2CLearner<float>(Net(cfg_.arch, mix_seed(cfg_.seed, 202)), cfg_.hyper, cfg_.popart)},
        policy_rng_{Rng(cfg_.seed, 301), Rng(cfg_.seed, 302)} {
    slots_.resize(cfg_.num_envs);
    for (int b = 0; b < cfg_.num_envs; ++b) start_episode(slots_[b]);
    for (auto& st : state_) st = learners_[0].net().initial_state(cfg_.num_envs);
  }

  const TrainConfig& config() const { return cfg_; }
  std::int64_t steps_done() const { return steps_; }
  std::int64_t episodes_done() const { return episodes_; }
  A2CLearner<float>& learner(AgentKind k) { return learners_[agent_index(k)]; }
  const A2CLearner<float>& learner(AgentKind k) const { return learners_[agent_index(k)]; }
  const std::vector<int>& desert_draws() const { return desert_draws_; }

  /// One rollout of `unroll` ticks in every environment plus one update per
  /// trained agent. `dump_dir`, when set, receives batch dumps on failure.
  std::array<LossReport, 2> iterate(const std::filesystem::path& dump_dir = {}) {
    const int B = cfg_.num_envs, U = cfg_.unroll;
    const int agents = cfg_.solo ? 1 : 2;
    for (int k = 0; k < agents; ++k) {
      batches_[k].reset(U, B, cfg_.arch.aux_size, cfg_.arch.lstm_size);
      batches_[k].initial = state_[k];
    }
    Net::Matrix aux(cfg_.arch.aux_size, B);
    std::vector<PolicyInput> inputs(B);
    for (int t = 0; t < U; ++t) {
      std::vector<std::array<Action, 2>> acts(B, {Action::Noop, Action::Noop});
      for (int k = 0; k < agents; ++k) {
        const AgentKind kind = static_cast<AgentKind>(k);
        auto& batch = batches_[k];
        for (int b = 0; b < B; ++b) {
          Slot& slot = slots_[b];
          const std::size_t idx = static_cast<std::size_t>(t) * B + b;
          if (slot.fresh) {
            state_[k].h.col(b).setZero();
            state_[k].c.col(b).setZero();
            batch.first[idx] = 1;
          }
          inputs[b] = encode_observation(slot.env, kind, cfg_.arch.encoder);
          const auto& sm = slot.shaper.smoothed();
          const auto a = make_aux({slot.last[k], sm.tall, sm.short_, cfg_.lambda});
          for (int j = 0; j < cfg_.arch.aux_size; ++j) {
            aux(j, b) = static_cast<float>(j < 3 ? a[j] : 0.0);
            batch.aux[idx * cfg_.arch.aux_size + j] = aux(j, b);
          }
        }
        learners_[k].net().forward(inputs, aux, state_[k], cache_);
        for (int b = 0; b < B; ++b) {
          const std::size_t idx = static_cast<std::size_t>(t) * B + b;
          const int action = sample_action(cache_.probs.col(b), policy_rng_[k]);
          acts[b][k] = static_cast<Action>(action);
          batch.actions[idx] = action;
          batch.values[idx] = learners_[k].denormalize(static_cast<double>(cache_.values(0, b)));
          batch.obs[idx] = std::move(inputs[b]);
        }
      }
      for (int b = 0; b < B; ++b) {
        Slot& slot = slots_[b];
        slot.fresh = false;
        const std::size_t idx = static_cast<std::size_t>(t) * B + b;
        StepResult r = step(slot.env, acts[b]);
        const double shaped = slot.shaper(r.rewards[0], r.rewards[1]);
        batches_[0].rewards[idx] = shaped;
        if (agents == 2) batches_[1].rewards[idx] = r.rewards[1];
        slot.last = r.rewards;
        slot.tall_return += r.rewards[0];
        slot.short_return += r.rewards[1];
        slot.shaped_return += shaped;
        slot.helping += static_cast<int>(slot.detector.ingest(r.events).size());
        ++steps_;
        if (r.done) {
          for (int k = 0; k < agents; ++k) batches_[k].done[idx] = 1;
          finish_episode(slot);
          start_episode(slot);
        }
      }
    }
    // Bootstrap values from the state after the last tick, without
    // advancing the carried recurrent state.
    for (int k = 0; k < agents; ++k) {
      const AgentKind kind = static_cast<AgentKind>(k);
      auto probe = state_[k];
      for (int b = 0; b < B; ++b) {
        Slot& slot = slots_[b];
        if (slot.fresh) {
          probe.h.col(b).setZero();
          probe.c.col(b).setZero();
        }
        inputs[b] = encode_observation(slot.env, kind, cfg_.arch.encoder);
        const auto& sm = slot.shaper.smoothed();
        const auto a = make_aux({slot.last[k], sm.tall, sm.short_, cfg_.lambda});
        for (int j = 0; j < cfg_.arch.aux_size; ++j) aux(j, b) = static_cast<float>(j < 3 ? a[j] : 0.0);
      }
      learners_[k].net().forward(inputs, aux, probe, cache_);
      for (int b = 0; b < B; ++b)
        batches_[k].bootstrap[b] = learners_[k].denormalize(static_cast<double>(cache_.values(0, b)));
    }
    std::array<LossReport, 2> reports{};
    for (int k = 0; k < agents; ++k) {
      std::string dump;
      if (!dump_dir.empty())
        dump = (dump_dir / ("nonfinite_" + std::string(agent_name(static_cast<AgentKind>(k))) + ".txt")).string();
      reports[k] = learners_[k].update(batches_[k], dump);
    }
    accumulate_losses(reports, agents);
    return reports;
  }

  /// Trains to `total_steps`, writing checkpoints, run.cfg and curve.csv
  /// under `out_dir`. `progress` (optional) receives one line per curve row.
  void run(const std::filesystem::path& out_dir, std::ostream* progress = nullptr) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw PersistenceError("cannot create " + out_dir.string() + ": " + ec.message());
    std::ofstream curve(out_dir / "curve.csv");
    if (!curve) throw PersistenceError("cannot write " + (out_dir / "curve.csv").string());
    curve << "# run " << cfg_.fingerprint() << " seed=" << cfg_.seed << " beta=" << KeyValues::format_double(cfg_.beta)
          << "\n"
          << curve_header() << "\n";
    write_run_config(out_dir / "run.cfg");
    std::int64_t next_curve = cfg_.curve_interval;
    std::int64_t next_ckpt = cfg_.checkpoint_interval > 0 ? cfg_.checkpoint_interval : -1;
    while (steps_ < cfg_.total_steps) {
      iterate(out_dir);
      if (steps_ >= next_curve || steps_ >= cfg_.total_steps) {
        const CurveRow row = take_curve_row();
        curve << format_curve_row(row) << "\n" << std::flush;
        if (!curve) throw PersistenceError("write failed: " + (out_dir / "curve.csv").string());
        if (progress) *progress << format_curve_row(row) << std::endl;
        while (next_curve <= steps_) next_curve += cfg_.curve_interval;
      }
      if (next_ckpt > 0 && steps_ >= next_ckpt && steps_ < cfg_.total_steps) {
        save(out_dir / ("step_" + std::to_string(steps_)));
        while (next_ckpt <= steps_) next_ckpt += cfg_.checkpoint_interval;
      }
    }
    save(out_dir);
  }

  /// Writes tall.ckpt, short.ckpt (unless solo) and run.cfg into `dir`.
  void save(const std::filesystem::path& dir) const {
    const int agents = cfg_.solo ? 1 : 2;
    for (int k = 0; k < agents; ++k) {
      const AgentKind kind = static_cast<AgentKind>(k);
      Checkpoint ck{learners_[k].net(), learners_[k].adam(), std::nullopt, {}, {}};
      if (learners_[k].uses_popart()) ck.popart = learners_[k].popart();
      ck.meta.set("agent", std::string(agent_name(kind)));
      ck.meta.set("beta", kind == AgentKind::Tall ? cfg_.beta : 0.0);
      ck.meta.set("seed", cfg_.seed);
      ck.meta.set("steps", steps_);
      ck.meta.set("episodes", episodes_);
      ck.meta.set("lambda", cfg_.lambda);
      ck.meta.set("run_fingerprint", cfg_.fingerprint());
      ck.rng["policy"] = policy_rng_[k].serialize();
      ck.rng["desert_sampler"] = sampler_.rng().serialize();
      save_checkpoint(dir / (std::string(agent_name(kind)) + ".ckpt"), ck);
    }
    write_run_config(dir / "run.cfg");
  }

 private:
  struct Slot {
    EnvState env;
    RewardShaper shaper{0.0, kDefaultSmoothing};
    HelpingDetector detector;
    std::array<double, 2> last{0.0, 0.0};
    double tall_return = 0.0, short_return = 0.0, shaped_return = 0.0;
    int helping = 0;
    bool fresh = true;
  };

  void start_episode(Slot& slot) {
    MapConfig m = cfg_.geometry;
    m.desert_size = sampler_.draw();
    desert_draws_.push_back(m.desert_size);
    m.seed = mix_seed(cfg_.seed, 0x100000 + static_cast<std::uint64_t>(episodes_started_++));
    slot.env = generate_map(m);
    if (cfg_.solo) slot.env.despawn(AgentKind::Short);
    slot.shaper = RewardShaper(cfg_.beta, cfg_.lambda);
    slot.detector = HelpingDetector(m.desert_size);
    slot.last = {0.0, 0.0};
    slot.tall_return = slot.short_return = slot.shaped_return = 0.0;
    slot.helping = 0;
    slot.fresh = true;
  }

  void finish_episode(const Slot& slot) {
    ++episodes_;
    ++acc_.episodes;
    acc_.tall_return += slot.tall_return;
    acc_.short_return += slot.short_return;
    acc_.shaped_return += slot.shaped_return;
    acc_.helping += slot.helping;
  }

  void accumulate_losses(const std::array<LossReport, 2>& reports, int agents) {
    ++acc_.updates;
    acc_.entropy[0] += reports[0].entropy;
    if (agents == 2) acc_.entropy[1] += reports[1].entropy;
  }

  CurveRow take_curve_row() {
    CurveRow row;
    row.steps = steps_;
    row.episodes = episodes_;
    if (acc_.episodes > 0) {
      const double n = static_cast<double>(acc_.episodes);
      row.tall_return = acc_.tall_return / n;
      row.tall_shaped_return = acc_.shaped_return / n;
      row.short_return = acc_.short_return / n;
      row.helping = acc_.helping / n;
    }
    if (acc_.updates > 0) {
      row.tall_entropy = acc_.entropy[0] / acc_.updates;
      row.short_entropy = acc_.entropy[1] / acc_.updates;
    }
    acc_ = {};
    return row;
  }

  void write_run_config(const std::filesystem::path& path) const {
    KeyValues kv = cfg_.to_kv();
    kv.set("fingerprint", cfg_.fingerprint());
    kv.set("steps_done", steps_);
    kv.set("episodes_done", episodes_);
    kv.write_file(path.string(), "daycare training run");
  }

  struct Accumulator {
    std::int64_t episodes = 0;
    std::int64_t updates = 0;
    double tall_return = 0.0, short_return = 0.0, shaped_return = 0.0, helping = 0.0;
    std::array<double, 2> entropy{0.0, 0.0};
  };

  TrainConfig cfg_;
  DesertSampler sampler_;
  std::array<A2CLearner<float>, 2> learners_;
  std::array<Rng, 2> policy_rng_;
  std::array<Net::RecurrentState, 2> state_;
  std::array<Batch, 2> batches_;
  Net::StepCache cache_;
  std::vector<Slot> slots_;
  std::vector<int> desert_draws_;
  std::int64_t steps_ = 0;
  std::int64_t episodes_ = 0;
  std::int64_t episodes_started_ = 0;
  Accumulator acc_;
};

}  // namespace daycare
