#pragma once

#include <array>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "daycare/env.hpp"
#include "daycare/errors.hpp"

namespace daycare {

// Line-delimited episode log. Record kinds (first token):
//
//   episode index=<i> <MapConfig as key=value pairs>
//   A t=<tick> tall=<action> short=<action>
//   E t=<tick> kind=<kind> agent=<tall|short> fruit=<id> color=<red|yellow> row=<r> col=<c> plant=<id|->
//   H fruit=<id> fail=<t> pick=<t> drop=<t> eat=<t> desert=<d>
//   end index=<i> tall_return=<x> short_return=<x> helping=<n>
//
// Every field is a decimal integer or a fixed lowercase token; the format is
// byte-stable across platforms.

inline std::string format_event(const PrimitiveEvent& e) {
  std::string s = "E t=" + std::to_string(e.tick);
  s += " kind=";
  s += event_kind_name(e.kind);
  s += " agent=";
  s += agent_name(e.agent);
  s += " fruit=" + std::to_string(e.fruit);
  s += " color=";
  s += color_name(e.color);
  s += " row=" + std::to_string(e.cell.row) + " col=" + std::to_string(e.cell.col);
  s += " plant=" + (e.plant == kNone ? std::string("-") : std::to_string(e.plant));
  return s;
}

inline std::string format_actions(int tick, const std::array<Action, 2>& actions) {
  std::string s = "A t=" + std::to_string(tick) + " tall=";
  s += action_name(actions[0]);
  s += " short=";
  s += action_name(actions[1]);
  return s;
}

namespace detail {

inline std::vector<std::pair<std::string, std::string>> split_fields(std::string_view line) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream is{std::string(line)};
  std::string tok;
  is >> tok;  // record kind
  while (is >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw InputError("malformed log field '" + tok + "'");
    out.emplace_back(tok.substr(0, eq), tok.substr(eq + 1));
  }
  return out;
}

inline int to_int(const std::string& v) {
  try {
    std::size_t used = 0;
    const int x = std::stoi(v, &used);
    if (used != v.size()) throw InputError("bad integer '" + v + "'");
    return x;
  } catch (const std::logic_error&) {
    throw InputError("bad integer '" + v + "'");
  }
}

}  // namespace detail

inline PrimitiveEvent parse_event(std::string_view line) {
  if (line.substr(0, 2) != "E ") throw InputError("not an event record: " + std::string(line));
  PrimitiveEvent e;
  for (const auto& [k, v] : detail::split_fields(line)) {
    if (k == "t") e.tick = detail::to_int(v);
    else if (k == "kind") {
      if (v == "grasp_failed") e.kind = EventKind::GraspFailed;
      else if (v == "fruit_picked") e.kind = EventKind::FruitPicked;
      else if (v == "fruit_dropped") e.kind = EventKind::FruitDropped;
      else if (v == "fruit_eaten") e.kind = EventKind::FruitEaten;
      else throw InputError("unknown event kind '" + v + "'");
    } else if (k == "agent") {
      if (v == "tall") e.agent = AgentKind::Tall;
      else if (v == "short") e.agent = AgentKind::Short;
      else throw InputError("unknown agent '" + v + "'");
    } else if (k == "fruit") e.fruit = detail::to_int(v);
    else if (k == "color") {
      if (v == "red") e.color = FruitColor::Red;
      else if (v == "yellow") e.color = FruitColor::Yellow;
      else throw InputError("unknown color '" + v + "'");
    } else if (k == "row") e.cell.row = detail::to_int(v);
    else if (k == "col") e.cell.col = detail::to_int(v);
    else if (k == "plant") e.plant = v == "-" ? kNone : detail::to_int(v);
    else throw InputError("unknown event field '" + k + "'");
  }
  return e;
}

struct ActionRecord {
  int tick = 0;
  std::array<Action, 2> actions{Action::Noop, Action::Noop};
};

inline ActionRecord parse_actions(std::string_view line) {
  if (line.substr(0, 2) != "A ") throw InputError("not an action record: " + std::string(line));
  ActionRecord r;
  for (const auto& [k, v] : detail::split_fields(line)) {
    if (k == "t") r.tick = detail::to_int(v);
    else if (k == "tall") r.actions[0] = action_from_name(v);
    else if (k == "short") r.actions[1] = action_from_name(v);
    else throw InputError("unknown action field '" + k + "'");
  }
  return r;
}

inline MapConfig parse_episode_header(std::string_view line, int* index = nullptr) {
  if (line.substr(0, 8) != "episode ") throw InputError("not an episode header: " + std::string(line));
  KeyValues kv;
  for (const auto& [k, v] : detail::split_fields(line)) {
    if (k == "index") {
      if (index) *index = detail::to_int(v);
    } else if (k == "solo") {
      // recorded separately by the caller
    } else {
      kv.set(k, v);
    }
  }
  return MapConfig::from_kv(kv);
}

}  // namespace daycare
