#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "daycare/evaluation.hpp"
#include "daycare/event_log.hpp"
#include "daycare/perception.hpp"
#include "daycare/svg_plot.hpp"
#include "daycare/training.hpp"

namespace daycare::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitUser = 1;
inline constexpr int kExitInternal = 2;

/// Environment variable naming the default configuration directory.
inline constexpr const char* kConfigDirEnv = "DAYCARE_CONFIG_DIR";

/// Resolves --config NAME: as given, else under $DAYCARE_CONFIG_DIR. With
/// no NAME, falls back to `$DAYCARE_CONFIG_DIR/<fallback>` when it exists.
inline std::optional<fs::path> resolve_config(const std::string& name, const std::string& fallback) {
  const char* dir = std::getenv(kConfigDirEnv);
  if (name.empty()) {
    if (dir && !fallback.empty() && fs::exists(fs::path(dir) / fallback)) return fs::path(dir) / fallback;
    return std::nullopt;
  }
  if (fs::exists(name)) return fs::path(name);
  if (dir && fs::exists(fs::path(dir) / name)) return fs::path(dir) / name;
  throw InputError("config file not found: " + name);
}

inline KeyValues read_kv(const fs::path& path) {
  if (!fs::exists(path)) throw InputError("file not found: " + path.string());
  return KeyValues::read_file(path.string());
}

inline MapConfig load_geometry(const std::string& config_name) {
  if (auto p = resolve_config(config_name, "map.cfg")) return MapConfig::from_kv(read_kv(*p));
  return MapConfig{};
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PersistenceError("cannot write " + path.string());
  out << text;
  if (!out) throw PersistenceError("write failed: " + path.string());
}

inline std::string ascii_layout(const EnvState& s) {
  std::string out;
  for (int r = 0; r < s.height; ++r) {
    for (int c = 0; c < s.width; ++c) {
      const Coord at{r, c};
      char ch = s.is_desert(at) ? ':' : '.';
      if (auto pid = s.plant_id_at(at); pid != kNone) {
        const Plant& p = s.plants[pid];
        const bool tree = p.height == PlantHeight::Tree;
        if (!p.fruit) ch = tree ? 'T' : 'S';
        else if (s.fruits[*p.fruit].color == FruitColor::Yellow) ch = tree ? 'Y' : 'y';
        else ch = tree ? 'R' : 'r';
      }
      if (auto who = s.occupant(at)) ch = *who == AgentKind::Tall ? '@' : '&';
      out += ch;
    }
    out += '\n';
  }
  return out;
}

struct Context {
  std::ostream& out;
  std::ostream& err;
};

// ------------------------------------------------------------- commands

inline int cmd_gen_map(Context& ctx, int desert, std::uint64_t seed, const std::string& out_path,
                       const std::string& config, const std::string& ppm) {
  MapConfig m = load_geometry(config);
  m.desert_size = desert;
  m.seed = seed;
  m.validate();
  const EnvState s = generate_map(m);
  std::string preamble = "daycare map fingerprint=" + hex64(m.fingerprint()) + " seed=" + std::to_string(seed) +
                         "\nlegend: . ground, : desert, T/S bare tree/shrub, R/r red, Y/y yellow, @ tall, & short\n";
  std::istringstream layout(ascii_layout(s));
  for (std::string line; std::getline(layout, line);) preamble += line + "\n";
  m.to_kv().write_file(out_path, preamble);
  if (!ppm.empty()) write_ppm(ppm, render_world(s), s.height * kCellPixels, s.width * kCellPixels);
  ctx.out << "wrote " << out_path << " (" << s.height << "x" << s.width << ", " << s.plants.size() << " plants)\n";
  return kExitOk;
}

inline PolicySource policy_source(const std::string& ckpt, const std::string& tall_kind, const std::string& short_kind,
                                  const std::string& config) {
  if (!ckpt.empty()) {
    if (!fs::is_directory(ckpt)) throw InputError("checkpoint directory not found: " + ckpt);
    return checkpoint_source(ckpt, short_kind);
  }
  if (tall_kind.empty()) throw InputError("either --ckpt or --policy-tall is required");
  return scripted_source(tall_kind, short_kind.empty() ? std::string("short-forager") : short_kind,
                         load_geometry(config));
}

inline std::string run_stamp(const std::string& what, const PolicySource& src, const SweepConfig& sweep) {
  MapConfig g = src.geometry;
  g.desert_size = 0;
  g.seed = 0;
  std::string sizes;
  for (int s : sweep.sizes) sizes += std::to_string(s) + ",";
  const std::string fp = hex64(fnv1a(what + "|" + src.id + "|" + g.to_line() + "|" + sizes + "|" +
                                     std::to_string(sweep.seed) + "|" + std::to_string(sweep.episodes)));
  return "# daycare " + what + " fingerprint=" + fp + " seed=" + std::to_string(sweep.seed) + " policy=" + src.id +
         " episodes=" + std::to_string(sweep.episodes) + "\n";
}

inline int cmd_run(Context& ctx, const PolicySource& src, SweepConfig sweep, bool solo, const std::string& log_path) {
  sweep.keep_logs = true;
  std::string logs;
  const CostReport r = solo ? evaluate_neutral(src, sweep, &logs) : evaluate(src, sweep, &logs);
  write_text(log_path, run_stamp(solo ? "run-solo" : "run", src, sweep) + logs);
  for (const auto& row : r.rows)
    ctx.out << "desert=" << row.size << " episodes=" << row.n << " mean_" << r.metric << "="
            << KeyValues::format_double(row.mean) << "\n";
  ctx.out << "wrote " << log_path << "\n";
  return kExitOk;
}

inline int cmd_eval(Context& ctx, const PolicySource& src, const SweepConfig& sweep, bool neutral,
                    const std::string& out_path, const std::string& log_path) {
  SweepConfig cfg = sweep;
  cfg.keep_logs = !log_path.empty();
  std::string logs;
  const CostReport r = neutral ? evaluate_neutral(src, cfg, &logs) : evaluate(src, cfg, &logs);
  write_report(out_path, r);
  if (!log_path.empty()) write_text(log_path, run_stamp(neutral ? "eval-neutral" : "eval", src, cfg) + logs);
  ctx.out << format_report_csv(r) << report_summary(r).to_string();
  return kExitOk;
}

inline int cmd_compare(Context& ctx, const std::string& ha, const std::string& na, const std::string& hb,
                       const std::string& nb, double tau, double delta, const std::string& out_path) {
  const Verdict v = compare_moral(read_report(ha), read_report(na), read_report(hb), read_report(nb), tau, delta);
  const std::string text = v.to_text();
  if (!out_path.empty()) write_text(out_path, text);
  ctx.out << text;
  return kExitOk;
}

/// Re-simulates every logged episode from its header and action records,
/// checks that the regenerated events match the logged ones, and writes one
/// PPM frame per exported tick.
inline int cmd_replay(Context& ctx, const std::string& log_path, const std::string& frames, int only_episode,
                      int every, const std::string& view) {
  std::ifstream in(log_path);
  if (!in) throw InputError("cannot open log " + log_path);
  if (every < 1) throw InputError("--every must be >= 1");
  if (view != "world" && view != "tall" && view != "short") throw InputError("--view must be world, tall or short");
  if (!frames.empty()) fs::create_directories(frames);

  std::optional<EnvState> env;
  int episode = -1, frames_written = 0, episodes_checked = 0;
  std::vector<std::string> expected, produced;
  auto export_frame = [&]() {
    if (frames.empty() || !env || (only_episode >= 0 && episode != only_episode)) return;
    if (env->tick % every != 0 && !env->done()) return;
    char name[64];
    std::snprintf(name, sizeof(name), "ep%04d_t%05d.ppm", episode, env->tick);
    const fs::path path = fs::path(frames) / name;
    if (view == "world") {
      write_ppm(path.string(), render_world(*env), env->height * kCellPixels, env->width * kCellPixels);
    } else {
      const AgentKind k = view == "tall" ? AgentKind::Tall : AgentKind::Short;
      if (!env->agent(k).alive) return;
      write_ppm(path.string(), render_pixels(render_symbolic(*env, k)), kPixelRows, kPixelCols);
    }
    ++frames_written;
  };
  auto flush_check = [&](int line_no) {
    if (expected != produced)
      throw InputError("replay diverged from logged events in episode " + std::to_string(episode) + " near line " +
                       std::to_string(line_no));
    expected.clear();
    produced.clear();
  };
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("episode ", 0) == 0) {
      flush_check(line_no);
      const MapConfig m = parse_episode_header(line, &episode);
      env = generate_map(m);
      if (line.find(" solo=1") != std::string::npos) env->despawn(AgentKind::Short);
      export_frame();
    } else if (line.rfind("A ", 0) == 0) {
      if (!env) throw InputError("action before episode header at line " + std::to_string(line_no));
      flush_check(line_no);
      const ActionRecord a = parse_actions(line);
      if (a.tick != env->tick) throw InputError("action tick mismatch at line " + std::to_string(line_no));
      for (const auto& e : step(*env, a.actions).events) produced.push_back(format_event(e));
      export_frame();
    } else if (line.rfind("E ", 0) == 0) {
      expected.push_back(format_event(parse_event(line)));
    } else if (line.rfind("end ", 0) == 0) {
      flush_check(line_no);
      if (!env || !env->done()) throw InputError("episode ended early at line " + std::to_string(line_no));
      ++episodes_checked;
    } else if (line.rfind("H ", 0) != 0) {
      throw InputError("unknown record at line " + std::to_string(line_no));
    }
  }
  flush_check(line_no);
  ctx.out << "replayed " << episodes_checked << " episodes, events match; " << frames_written << " frames\n";
  return kExitOk;
}

inline int cmd_plot(Context& ctx, const std::vector<std::string>& reports, const std::vector<std::string>& labels,
                    const std::string& out_path, const std::string& title) {
  if (!labels.empty() && labels.size() != reports.size())
    throw InputError("--labels must name every report");
  std::vector<CostReport> loaded;
  for (const auto& r : reports) loaded.push_back(read_report(r));
  std::vector<PlotSeries> series;
  for (std::size_t i = 0; i < loaded.size(); ++i)
    series.push_back({labels.empty() ? fs::path(reports[i]).stem().string() : labels[i], &loaded[i]});
  write_text(out_path, render_svg(series, title));
  ctx.out << "wrote " << out_path << "\n";
  return kExitOk;
}

inline int cmd_train(Context& ctx, TrainConfig cfg, const std::string& out_dir, bool quiet) {
  cfg.validate();
  Trainer trainer(cfg);
  ctx.out << "training fingerprint=" << cfg.fingerprint() << " beta=" << KeyValues::format_double(cfg.beta)
          << " steps=" << cfg.total_steps << " seed=" << cfg.seed << "\n";
  if (!quiet) ctx.out << curve_header() << "\n";
  trainer.run(out_dir, quiet ? nullptr : &ctx.out);
  ctx.out << "wrote " << out_dir << "\n";
  return kExitOk;
}

// ------------------------------------------------------------- dispatch

inline int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out = std::cout,
                              std::ostream& err = std::cerr) {
  Context ctx{out, err};
  CLI::App app{"daycare: two-agent helping gridworld, training and cost-sweep evaluation"};
  app.require_subcommand(1);
  app.fallthrough(false);

  // gen-map
  int gm_desert = 0;
  std::uint64_t gm_seed = 0;
  std::string gm_out, gm_config, gm_ppm;
  auto* gen = app.add_subcommand("gen-map", "Generate a map and write its config (with an ASCII preview)");
  gen->add_option("--desert", gm_desert, "Desert rows")->required();
  gen->add_option("--seed", gm_seed, "Map seed")->required();
  gen->add_option("--out", gm_out, "Output config path")->required();
  gen->add_option("--config", gm_config, "Geometry config file");
  gen->add_option("--ppm", gm_ppm, "Also write a top-down PPM image");

  // shared sweep options
  struct SweepFlags {
    std::string ckpt, tall, shrt, config, sizes, log;
    SweepConfig sweep;
  };
  auto add_sweep = [](CLI::App* c, SweepFlags& f, bool with_sizes) {
    c->add_option("--ckpt", f.ckpt, "Checkpoint directory from `train`");
    c->add_option("--policy-tall", f.tall, "Scripted tall policy kind");
    c->add_option("--policy-short", f.shrt, "Short policy kind (default: trained partner or short-forager)");
    c->add_option("--config", f.config, "Geometry config file (scripted policies)");
    c->add_option("--seed", f.sweep.seed, "Evaluation seed");
    c->add_option("--workers", f.sweep.workers, "Parallel episode workers")->check(CLI::PositiveNumber);
    c->add_option("--window", f.sweep.window, "Helping-event window in ticks");
    if (with_sizes) {
      c->add_option("--sizes", f.sizes, "Comma-separated desert sizes (default 0,2,...,20)");
      c->add_option("--epsilon", f.sweep.epsilon, "Baseline guard for the sensitivity index");
      c->add_flag("--exclude-seen", f.sweep.exclude_seen, "Skip trained sizes in the sensitivity index");
    }
  };

  SweepFlags run_f;
  int run_desert = 0;
  bool run_solo = false;
  auto* run = app.add_subcommand("run", "Play episodes at one desert size and write the event log");
  add_sweep(run, run_f, false);
  run->add_option("--desert", run_desert, "Desert rows")->required();
  run->add_option("--episodes", run_f.sweep.episodes, "Episodes")->required();
  run->add_option("--log", run_f.log, "Event log output path")->required();
  run->add_flag("--solo", run_solo, "Despawn the short agent");

  SweepFlags eval_f;
  std::string eval_out;
  auto* eval = app.add_subcommand("eval", "Helping sweep over desert sizes");
  add_sweep(eval, eval_f, true);
  eval->add_option("--episodes", eval_f.sweep.episodes, "Episodes per size");
  eval->add_option("--out", eval_out, "Report CSV path")->required();
  eval->add_option("--log", eval_f.log, "Also write the full event log");

  SweepFlags neu_f;
  std::string neu_out;
  auto* neu = app.add_subcommand("eval-neutral", "Solo far-patch foraging sweep over desert sizes");
  add_sweep(neu, neu_f, true);
  neu->add_option("--episodes", neu_f.sweep.episodes, "Episodes per size");
  neu->add_option("--out", neu_out, "Report CSV path")->required();
  neu->add_option("--log", neu_f.log, "Also write the full event log");

  std::string cmp_ha, cmp_na, cmp_hb, cmp_nb, cmp_out;
  double cmp_tau = kDefaultTau, cmp_delta = kDefaultDelta;
  auto* cmp = app.add_subcommand("compare", "Two-criterion moral comparison of two agents");
  cmp->add_option("--help-a", cmp_ha, "Helping report of agent A")->required();
  cmp->add_option("--neutral-a", cmp_na, "Neutral report of agent A")->required();
  cmp->add_option("--help-b", cmp_hb, "Helping report of agent B")->required();
  cmp->add_option("--neutral-b", cmp_nb, "Neutral report of agent B")->required();
  cmp->add_option("--tau", cmp_tau, "Neutral sensitivity threshold");
  cmp->add_option("--delta", cmp_delta, "Minimum insensitivity gap");
  cmp->add_option("--out", cmp_out, "Verdict output path");

  std::string rp_log, rp_frames, rp_view = "world";
  int rp_episode = 0, rp_every = 1;
  auto* rp = app.add_subcommand("replay", "Re-simulate a log, verify its events and export frames");
  rp->add_option("--log", rp_log, "Event log")->required();
  rp->add_option("--frames", rp_frames, "Frame output directory (omit to only verify)");
  rp->add_option("--episode", rp_episode, "Episode index to export (-1 for all)");
  rp->add_option("--every", rp_every, "Export every k-th tick");
  rp->add_option("--view", rp_view, "world, tall or short");

  std::vector<std::string> pl_reports, pl_labels;
  std::string pl_out, pl_title;
  auto* pl = app.add_subcommand("plot", "SVG of mean events per desert size, one series per report");
  pl->add_option("--reports", pl_reports, "Report CSVs")->required();
  pl->add_option("--labels", pl_labels, "Series labels");
  pl->add_option("--out", pl_out, "SVG output path")->required();
  pl->add_option("--title", pl_title, "Plot title");

  TrainConfig tc;
  std::string tr_out, tr_config, tr_profile = "desk";
  bool tr_quiet = false;
  auto* tr = app.add_subcommand("train", "Train a tall/short pair on the training desert sizes");
  tr->add_option("--beta", tc.beta, "Advantageous inequity coefficient")->required();
  tr->add_option("--steps", tc.total_steps, "Environment steps")->required();
  tr->add_option("--seed", tc.seed, "Run seed")->required();
  tr->add_option("--out", tr_out, "Output directory")->required();
  tr->add_option("--config", tr_config, "Run config file (flags override it)");
  tr->add_option("--profile", tr_profile, "Network profile: desk or pixels");
  tr->add_option("--envs", tc.num_envs, "Parallel environments");
  tr->add_option("--unroll", tc.unroll, "Unroll length");
  tr->add_option("--lr", tc.hyper.learning_rate, "Learning rate");
  tr->add_option("--checkpoint-interval", tc.checkpoint_interval, "Steps between checkpoints (0: final only)");
  tr->add_option("--curve-interval", tc.curve_interval, "Steps between training-curve rows");
  tr->add_flag("--popart", tc.popart, "Normalise value targets with Pop-Art");
  tr->add_flag("--cpc", tc.cpc, "Accepted for compatibility; no effect");
  tr->add_flag("--solo", tc.solo, "Train the tall agent alone");
  tr->add_flag("--quiet", tr_quiet, "No per-row progress output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUser;
  }

  try {
    auto sizes_or_default = [](const std::string& text) {
      return text.empty() ? evaluation_deserts() : split_ints(text);
    };
    if (gen->parsed()) return cmd_gen_map(ctx, gm_desert, gm_seed, gm_out, gm_config, gm_ppm);
    if (run->parsed()) {
      auto src = policy_source(run_f.ckpt, run_f.tall, run_f.shrt, run_f.config);
      run_f.sweep.sizes = {run_desert};
      return cmd_run(ctx, src, run_f.sweep, run_solo, run_f.log);
    }
    if (eval->parsed() || neu->parsed()) {
      SweepFlags& f = eval->parsed() ? eval_f : neu_f;
      auto src = policy_source(f.ckpt, f.tall, f.shrt, f.config);
      f.sweep.sizes = sizes_or_default(f.sizes);
      return cmd_eval(ctx, src, f.sweep, neu->parsed(), eval->parsed() ? eval_out : neu_out, f.log);
    }
    if (cmp->parsed()) return cmd_compare(ctx, cmp_ha, cmp_na, cmp_hb, cmp_nb, cmp_tau, cmp_delta, cmp_out);
    if (rp->parsed()) return cmd_replay(ctx, rp_log, rp_frames, rp_episode, rp_every, rp_view);
    if (pl->parsed()) return cmd_plot(ctx, pl_reports, pl_labels, pl_out, pl_title);
    if (tr->parsed()) {
      TrainConfig cfg;
      if (auto p = resolve_config(tr_config, "train.cfg")) cfg = TrainConfig::from_kv(read_kv(*p));
      if (tr->count("--profile")) {
        if (tr_profile == "pixels") cfg.arch = Architecture::pixels();
        else if (tr_profile == "desk") cfg.arch = Architecture::desk();
        else throw InputError("--profile must be desk or pixels");
      }
      cfg.beta = tc.beta;
      cfg.total_steps = tc.total_steps;
      cfg.seed = tc.seed;
      if (tr->count("--envs")) cfg.num_envs = tc.num_envs;
      if (tr->count("--unroll")) cfg.unroll = tc.unroll;
      if (tr->count("--lr")) cfg.hyper.learning_rate = tc.hyper.learning_rate;
      if (tr->count("--checkpoint-interval")) cfg.checkpoint_interval = tc.checkpoint_interval;
      if (tr->count("--curve-interval")) cfg.curve_interval = tc.curve_interval;
      cfg.popart = cfg.popart || tc.popart;
      cfg.cpc = cfg.cpc || tc.cpc;
      cfg.solo = cfg.solo || tc.solo;
      return cmd_train(ctx, cfg, tr_out, tr_quiet);
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUser;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUser;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  err << app.help();
  return kExitUser;
}

inline int parse_and_dispatch(const std::vector<std::string>& args, std::ostream& out = std::cout,
                              std::ostream& err = std::cerr) {
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  return parse_and_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace daycare::cli
