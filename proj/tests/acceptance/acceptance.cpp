// Acceptance suite: one PASS/FAIL line per criterion. Tolerances are pinned
// here, not taken from the command line.
//
//   acceptance [--only NAME] [--cli PATH] [--work DIR] [--cache DIR]
//
// The cost-sweep criterion trains nine agents and only runs with
// `--only cost-sweep`; everything else runs by default.

#include <chrono>
#include <functional>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "../support.hpp"

using namespace daycare;
namespace fs = std::filesystem;
namespace dt = daycare::testing;

namespace {

struct Check {
  bool pass = false;
  std::string detail;
};

struct Options {
  std::string cli = "daycare";
  fs::path work = fs::temp_directory_path() / "daycare_acceptance";
  fs::path cache = "runs/cost_sweep";
};

// Pinned tolerances.
constexpr double kGraspSigmas = 3.0;
constexpr int kGraspTrials = 10000;
constexpr double kRewardTolerance = 1e-9;
constexpr int kRewardStreams = 10000;
constexpr int kDetectorLogs = 1000;
constexpr int kDetectorMaxEvents = 50;
constexpr int kAliasingStates = 1000;
constexpr long kGradientMaxWeights = 200;
constexpr double kGradientTolerance = 1e-4;
constexpr int kEvalEpisodes = 30;

// Cost-sweep protocol.
constexpr std::int64_t kSweepSteps = 2'000'000;
constexpr std::array<double, 3> kSweepBetas{0.75, 0.5, 0.25};
constexpr std::array<std::uint64_t, 3> kSweepSeeds{1, 2, 3};
constexpr std::array<int, 3> kOrderSizes{4, 8, 12};
constexpr int kRankSumSize = 8;
constexpr double kRankSumAlpha = 0.05;
constexpr int kSeedsRequired = 2;
constexpr std::uint64_t kSweepEvalSeed = 2024;

std::string fmt(double v) { return KeyValues::format_double(v); }

// ------------------------------------------------------------ criteria

Check grasp_statistics(const Options&) {
  dt::GraspBench shrub(AgentKind::Short, PlantHeight::Shrub, 101);
  long hits = 0;
  for (int i = 0; i < kGraspTrials; ++i) hits += shrub.attempt();
  dt::GraspBench tree(AgentKind::Short, PlantHeight::Tree, 102);
  long tree_hits = 0;
  for (int i = 0; i < kGraspTrials; ++i) tree_hits += tree.attempt();
  const bool ok = within_binomial_sigma(hits, kGraspTrials, kShortShrubGraspProb, kGraspSigmas) && tree_hits == 0;
  return {ok, "shrub " + std::to_string(hits) + "/" + std::to_string(kGraspTrials) + ", tree " +
                  std::to_string(tree_hits) + "/" + std::to_string(kGraspTrials)};
}

Check reward_oracle(const Options&) {
  Rng rng(201, 0);
  double worst = 0.0;
  long checks = 0;
  for (int stream = 0; stream < kRewardStreams; ++stream) {
    const double beta = rng.uniform();
    const double lambda = rng.uniform();
    const double start_tall = 20.0 * rng.uniform(), start_short = 20.0 * rng.uniform();
    const std::size_t len = 1 + rng.below(40);
    std::vector<double> rt, rs;
    SmoothedRewards s{start_tall, start_short, lambda};
    for (std::size_t t = 0; t < len; ++t) {
      rt.push_back(rng.bernoulli(0.5) ? rng.uniform() : 0.0);
      rs.push_back(rng.bernoulli(0.5) ? rng.uniform() : 0.0);
      s = smooth_update(s, rt[t], rs[t]);
      const double decay = std::pow(lambda, static_cast<double>(t + 1));
      const double want_tall = decay * start_tall + dt::oracle::smoothed_direct(rt, t, lambda);
      const double want_short = decay * start_short + dt::oracle::smoothed_direct(rs, t, lambda);
      const double got = inequity_adjusted_reward(rt[t], s, {beta});
      const double want = dt::oracle::shaped_direct(rt[t], want_tall, want_short, beta);
      worst = std::max({worst, std::abs(s.tall - want_tall), std::abs(s.short_ - want_short), std::abs(got - want)});
      ++checks;
    }
  }
  return {worst <= kRewardTolerance, std::to_string(checks) + " ticks, max abs error " + fmt(worst)};
}

Check detector_oracle(const Options&) {
  Rng rng(301, 0);
  int mismatches = 0, helping = 0;
  for (int i = 0; i < kDetectorLogs; ++i) {
    const auto log = dt::random_helping_log(rng, kDetectorMaxEvents);
    const int want = dt::oracle::count_helping_brute_force(log, kHelpingWindow);
    mismatches += count_per_episode(log) != want;
    helping += want;
  }
  return {mismatches == 0, std::to_string(kDetectorLogs) + " logs, " + std::to_string(helping) +
                               " helping events, " + std::to_string(mismatches) + " mismatches"};
}

Check aliasing(const Options&) {
  Rng rng(401, 0);
  int tall_diff = 0, short_diff = 0, bad_shape = 0;
  for (int i = 0; i < kAliasingStates; ++i) {
    const EnvState s = dt::random_state(rng);
    EnvState recoloured = s, reshaped = s;
    for (auto& f : recoloured.fruits)
      if (rng.bernoulli(0.5)) f.color = f.color == FruitColor::Red ? FruitColor::Yellow : FruitColor::Red;
    for (auto& p : reshaped.plants)
      if (rng.bernoulli(0.5)) p.height = p.height == PlantHeight::Tree ? PlantHeight::Shrub : PlantHeight::Tree;
    const auto t0 = render(s, AgentKind::Tall, RenderMode::Both);
    const auto t1 = render(recoloured, AgentKind::Tall, RenderMode::Both);
    const auto s0 = render(s, AgentKind::Short, RenderMode::Both);
    const auto s1 = render(reshaped, AgentKind::Short, RenderMode::Both);
    tall_diff += *t0.pixels != *t1.pixels || multi_hot(*t0.symbolic) != multi_hot(*t1.symbolic);
    short_diff += *s0.pixels != *s1.pixels || multi_hot(*s0.symbolic) != multi_hot(*s1.symbolic);
    for (const auto* o : {&t0, &t1, &s0, &s1}) bad_shape += o->pixels->size() != 88u * 88u * 3u;
  }
  return {tall_diff == 0 && short_diff == 0 && bad_shape == 0,
          std::to_string(kAliasingStates) + " states; tall changed " + std::to_string(tall_diff) +
              ", short changed " + std::to_string(short_diff) + ", wrong shape " + std::to_string(bad_shape)};
}

Check gradient_check(const Options&) {
  const auto r = dt::check_gradients(dt::tiny_dense_architecture(), 501);
  return {r.weights <= kGradientMaxWeights && r.max_rel_error < kGradientTolerance,
          std::to_string(r.weights) + " weights, max relative error " + fmt(r.max_rel_error)};
}

Check protocol_exactness(const Options&) {
  SweepConfig cfg;
  cfg.episodes = 1;
  const auto r = evaluate(scripted_source("selfish", "short-forager"), cfg);
  std::vector<int> sizes;
  std::string labels;
  bool ok = true;
  for (const auto& row : r.rows) {
    sizes.push_back(row.size);
    const std::string want = row.size == 0 ? "seen" : (row.size <= 14 ? "interpolation" : "extrapolation");
    ok = ok && row.label == want;
  }
  ok = ok && sizes == std::vector<int>{0, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20};

  const std::vector<int> allowed{0, 1, 3, 5, 7, 9, 11, 13, 15};
  DesertSampler sampler(training_deserts(), 7);
  std::set<int> drawn;
  for (int i = 0; i < 9000; ++i) drawn.insert(sampler.draw());
  TrainConfig tc;
  tc.num_envs = 4;
  tc.unroll = 10;
  tc.geometry.episode_length = 10;
  tc.arch.lstm_size = 8;
  tc.arch.head_size = 8;
  Trainer trainer(tc);
  for (int i = 0; i < 10; ++i) trainer.iterate();
  for (int d : trainer.desert_draws()) drawn.insert(d);
  ok = ok && std::vector<int>(drawn.begin(), drawn.end()) == allowed;
  return {ok, "eval sizes " + join_ints(sizes) + ", training draws " +
                  join_ints(std::vector<int>(drawn.begin(), drawn.end()))};
}

Check scripted_pipeline(const Options&) {
  SweepConfig cfg;
  cfg.episodes = kEvalEpisodes;
  cfg.seed = 601;
  cfg.workers = std::max(1u, std::thread::hardware_concurrency());
  const auto always = evaluate(scripted_source("always-helper", "short-forager"), cfg);
  const auto threshold = evaluate(scripted_source("threshold-helper:10", "short-forager"), cfg);
  const auto selfish = evaluate(scripted_source("selfish", "short-forager"), cfg);
  const auto sensitive = evaluate_neutral(scripted_source("cost-threshold-forager:10", "short-forager"), cfg);
  const auto flat = evaluate_neutral(scripted_source("far-forager", "short-forager"), cfg);

  bool threshold_ok = true;
  for (const auto& row : threshold.rows)
    if (row.size >= 10) threshold_ok = threshold_ok && row.mean == 0.0;
  const bool always_ok = always.insensitivity() == 1.0;
  const bool selfish_ok = selfish.low_baseline && !selfish.insensitivity();
  const bool verdict_ok = compare_moral(always, sensitive, threshold, sensitive).outcome == daycare::Outcome::AMoreMoral;
  const bool inflexible_ok =
      compare_moral(always, flat, threshold, sensitive).outcome == daycare::Outcome::Incomparable &&
      compare_moral(always, sensitive, threshold, flat).outcome == daycare::Outcome::Incomparable &&
      compare_moral(always, flat, threshold, flat).reason.find("general behavioral inflexibility") != std::string::npos;
  const bool ok = always_ok && threshold_ok && selfish_ok && verdict_ok && inflexible_ok;
  return {ok, "always I=" + (always.insensitivity() ? fmt(*always.insensitivity()) : "n/a") +
                  ", threshold zero>=10 " + (threshold_ok ? "yes" : "no") + ", selfish non-helper " +
                  (selfish_ok ? "yes" : "no") + ", neutral S " + fmt(sensitive.sensitivity) + "/" +
                  fmt(flat.sensitivity) + ", verdicts " + (verdict_ok && inflexible_ok ? "ok" : "wrong")};
}

Check determinism(const Options& opt) {
  const fs::path dir = opt.work / "determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto p = [&](const std::string& name) { return (dir / name).string(); };
  std::vector<std::string> failures;
  for (const char* tag : {"1", "2"}) {
    const std::string t(tag);
    const auto run = dt::run_command(opt.cli + " run --policy-tall always-helper --policy-short short-forager " +
                                     "--desert 6 --episodes 3 --seed 11 --log " + p("run" + t + ".log"));
    const auto eval = dt::run_command(opt.cli + " eval --policy-tall threshold-helper:10 --episodes 3 --seed 11 " +
                                      "--out " + p("eval" + t + ".csv") + " --log " + p("eval" + t + ".log"));
    if (run.status != 0) failures.push_back("run exited " + std::to_string(run.status));
    if (eval.status != 0) failures.push_back("eval exited " + std::to_string(eval.status));
  }
  const std::string run_log = dt::slurp(dir / "run1.log");
  const std::string eval_log = dt::slurp(dir / "eval1.log");
  if (run_log.empty() || run_log != dt::slurp(dir / "run2.log")) failures.push_back("run logs differ");
  if (eval_log.empty() || eval_log != dt::slurp(dir / "eval2.log")) failures.push_back("eval logs differ");
  if (dt::slurp(dir / "eval1.csv") != dt::slurp(dir / "eval2.csv")) failures.push_back("eval reports differ");
  std::string detail = "run log " + std::to_string(run_log.size()) + " bytes, eval log " +
                       std::to_string(eval_log.size()) + " bytes";
  for (const auto& f : failures) detail += "; " + f;
  return {failures.empty(), detail};
}

// ------------------------------------------------------------ cost sweep

TrainConfig sweep_run_config(double beta, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.beta = beta;
  cfg.seed = seed;
  cfg.total_steps = kSweepSteps;
  return cfg;
}

std::string beta_tag(double beta) { return "beta" + std::to_string(static_cast<int>(std::lround(beta * 100))); }

/// Trains (unless a finished run with the same fingerprint is cached) and
/// evaluates one agent; returns its helping report.
CostReport sweep_agent(const Options& opt, double beta, std::uint64_t seed, std::ostream& log) {
  const TrainConfig cfg = sweep_run_config(beta, seed);
  const fs::path dir = opt.cache / (beta_tag(beta) + "_seed" + std::to_string(seed));
  const fs::path report_path = dir / ("helping_eval" + std::to_string(kSweepEvalSeed) + ".csv");
  bool cached = fs::exists(dir / "tall.ckpt") && fs::exists(dir / "run.cfg");
  if (cached) {
    try {
      cached = TrainConfig::from_kv(KeyValues::read_file((dir / "run.cfg").string())).fingerprint() == cfg.fingerprint();
    } catch (const std::exception&) {
      cached = false;
    }
  }
  if (!cached) {
    fs::remove_all(dir);
    const auto start = std::chrono::steady_clock::now();
    log << "training beta=" << fmt(beta) << " seed=" << seed << " -> " << dir.string() << std::endl;
    const auto r = dt::run_command(opt.cli + " train --quiet --beta " + fmt(beta) + " --seed " + std::to_string(seed) +
                                   " --steps " + std::to_string(kSweepSteps) + " --out " + dir.string());
    if (r.status != 0) throw std::runtime_error("training failed: " + r.output);
    const double mins = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60.0;
    log << "  trained in " << fmt(mins) << " min" << std::endl;
  }
  if (fs::exists(report_path)) {
    const CostReport cachedReport = read_report(report_path);
    if (cachedReport.episodes == kEvalEpisodes) return cachedReport;
  }
  SweepConfig sweep;
  sweep.episodes = kEvalEpisodes;
  sweep.seed = kSweepEvalSeed;
  sweep.workers = std::max(1u, std::thread::hardware_concurrency());
  const CostReport report = evaluate(checkpoint_source(dir), sweep);
  write_report(report_path, report);
  return report;
}

Check cost_sweep(const Options& opt) {
  fs::create_directories(opt.cache);
  std::ostringstream notes;
  int seeds_ok = 0;
  std::vector<PlotSeries> series;
  std::vector<CostReport> keep;
  keep.reserve(kSweepBetas.size() * kSweepSeeds.size());
  for (std::uint64_t seed : kSweepSeeds) {
    std::array<CostReport, 3> r;
    for (std::size_t i = 0; i < kSweepBetas.size(); ++i) {
      r[i] = sweep_agent(opt, kSweepBetas[i], seed, std::cerr);
      keep.push_back(r[i]);
    }
    bool ordered = true;
    std::string curve;
    for (int size : kOrderSizes) {
      const double a = r[0].row(size)->mean, b = r[1].row(size)->mean, c = r[2].row(size)->mean;
      ordered = ordered && a >= b && b >= c;
      curve += " d" + std::to_string(size) + "=" + fmt(a) + "/" + fmt(b) + "/" + fmt(c);
    }
    const auto test = rank_sum_greater(r[0].row(kRankSumSize)->values, r[2].row(kRankSumSize)->values);
    const bool significant = test.p_value < kRankSumAlpha;
    const bool ok = ordered && significant;
    seeds_ok += ok;
    notes << " [seed " << seed << (ok ? " ok" : " no") << ":" << curve << " p(A>C,d" << kRankSumSize
          << ")=" << fmt(test.p_value) << "]";
  }
  static const char* names[] = {"A beta=0.75", "B beta=0.5", "C beta=0.25"};
  for (std::size_t i = 0; i < keep.size(); ++i)
    series.push_back({std::string(names[i % 3]) + " seed " + std::to_string(kSweepSeeds[i / 3]), &keep[i]});
  std::ofstream(opt.cache / "helping.svg") << render_svg(series, "helping vs desert size");
  return {seeds_ok >= kSeedsRequired,
          std::to_string(seeds_ok) + "/3 seeds ordered and significant" + notes.str()};
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  std::string only;
  CLI::App app{"daycare acceptance criteria"};
  app.add_option("--only", only, "Run a single criterion");
  app.add_option("--cli", opt.cli, "Path of the daycare binary");
  app.add_option("--work", opt.work, "Scratch directory");
  app.add_option("--cache", opt.cache, "Checkpoint cache for cost-sweep");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Check(const Options&)>>> criteria{
      {"grasp-statistics", grasp_statistics}, {"reward-oracle", reward_oracle},
      {"detector-oracle", detector_oracle},   {"aliasing", aliasing},
      {"gradient-check", gradient_check},     {"protocol-exactness", protocol_exactness},
      {"scripted-pipeline", scripted_pipeline}, {"determinism", determinism},
      {"cost-sweep", cost_sweep}};

  fs::create_directories(opt.work);
  int failed = 0, ran = 0;
  for (const auto& [name, fn] : criteria) {
    if (only.empty() ? name == "cost-sweep" : name != only) continue;
    ++ran;
    Check o;
    try {
      o = fn(opt);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  if (only.empty()) std::cout << "---- cost-sweep: run separately with --only cost-sweep" << std::endl;
  if (ran == 0) {
    std::cerr << "unknown criterion '" << only << "'\n";
    return 2;
  }
  return failed == 0 ? 0 : 1;
}
