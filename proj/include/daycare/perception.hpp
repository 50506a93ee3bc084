#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "daycare/env.hpp"
#include "daycare/errors.hpp"

namespace daycare {

// Egocentric window: 9 cells ahead, the agent's own row, 1 cell behind,
// 5 cells to each side. The agent sits at (kViewSelfRow, kViewSelfCol).
inline constexpr int kViewAhead = 9;
inline constexpr int kViewBehind = 1;
inline constexpr int kViewSide = 5;
inline constexpr int kViewRows = kViewAhead + 1 + kViewBehind;
inline constexpr int kViewCols = 2 * kViewSide + 1;
inline constexpr int kViewSelfRow = kViewAhead;
inline constexpr int kViewSelfCol = kViewSide;
inline constexpr int kCellPixels = 8;
inline constexpr int kPixelRows = kViewRows * kCellPixels;
inline constexpr int kPixelCols = kViewCols * kCellPixels;
inline constexpr int kPixelChannels = 3;
inline constexpr int kViewCells = kViewRows * kViewCols;

enum class BaseLook : std::uint8_t {
  Ground,
  Wall,
  Desert,
  ShrubBare,
  TreeBare,
  ShrubRed,
  ShrubYellow,
  TreeRed,
  TreeYellow,
};
inline constexpr int kNumBaseLooks = 9;

enum class FruitLook : std::uint8_t { None, Red, Yellow };
enum class Occupant : std::uint8_t { None, Self, Other };

/// What one cell looks like to one viewer.
struct CellCode {
  BaseLook base = BaseLook::Ground;
  bool marker = false;
  FruitLook ground = FruitLook::None;
  Occupant occupant = Occupant::None;
  FruitLook held = FruitLook::None;
  friend auto operator<=>(const CellCode&, const CellCode&) = default;
};

// Multi-hot feature layout per cell: 9 base looks, marker, ground red/yellow,
// self/other, held red/yellow.
inline constexpr int kFeaturesPerCell = 16;
inline constexpr int kSymbolicFeatures = kViewCells * kFeaturesPerCell;

inline bool is_tree(BaseLook b) { return b == BaseLook::TreeBare || b == BaseLook::TreeRed || b == BaseLook::TreeYellow; }
inline bool is_shrub(BaseLook b) {
  return b == BaseLook::ShrubBare || b == BaseLook::ShrubRed || b == BaseLook::ShrubYellow;
}

inline FruitLook fruit_look(FruitColor c) { return c == FruitColor::Red ? FruitLook::Red : FruitLook::Yellow; }

inline BaseLook plant_look(PlantHeight h, FruitLook fruit) {
  const bool tree = h == PlantHeight::Tree;
  switch (fruit) {
    case FruitLook::None: return tree ? BaseLook::TreeBare : BaseLook::ShrubBare;
    case FruitLook::Red: return tree ? BaseLook::TreeRed : BaseLook::ShrubRed;
    case FruitLook::Yellow: return tree ? BaseLook::TreeYellow : BaseLook::ShrubYellow;
  }
  return BaseLook::Ground;
}

inline FruitLook plant_fruit(BaseLook b) {
  switch (b) {
    case BaseLook::ShrubRed:
    case BaseLook::TreeRed: return FruitLook::Red;
    case BaseLook::ShrubYellow:
    case BaseLook::TreeYellow: return FruitLook::Yellow;
    default: return FruitLook::None;
  }
}

/// Perceptual aliasing. Tall viewers see every fruit as red but keep plant
/// heights; short viewers see every plant as a shrub but keep fruit colours.
/// Codes without plants or fruit pass through.
inline CellCode alias_cell(CellCode c, AgentKind viewer) {
  if (viewer == AgentKind::Tall) {
    auto red = [](FruitLook f) { return f == FruitLook::None ? f : FruitLook::Red; };
    if (is_tree(c.base) || is_shrub(c.base))
      c.base = plant_look(is_tree(c.base) ? PlantHeight::Tree : PlantHeight::Shrub, red(plant_fruit(c.base)));
    c.ground = red(c.ground);
    c.held = red(c.held);
  } else {
    if (is_tree(c.base)) c.base = plant_look(PlantHeight::Shrub, plant_fruit(c.base));
  }
  return c;
}

/// Unaliased content of world cell `at` as seen by `viewer`.
inline CellCode truth_cell(const EnvState& s, Coord at, AgentKind viewer) {
  CellCode c;
  if (!s.in_bounds(at)) {
    c.base = BaseLook::Wall;
    return c;
  }
  const PlantId pid = s.plant_id_at(at);
  if (pid != kNone) {
    const Plant& p = s.plants[pid];
    c.base = plant_look(p.height, p.fruit ? fruit_look(s.fruits[*p.fruit].color) : FruitLook::None);
    c.marker = p.reach_marker_ttl > 0;
  } else {
    c.base = s.is_desert(at) ? BaseLook::Desert : BaseLook::Ground;
  }
  const FruitId gf = s.ground_fruit(at);
  if (gf != kNone) c.ground = fruit_look(s.fruits[gf].color);
  if (auto who = s.occupant(at)) {
    c.occupant = *who == viewer ? Occupant::Self : Occupant::Other;
    const auto& body = s.agent(*who);
    if (body.held) c.held = fruit_look(s.fruits[*body.held].color);
  }
  return c;
}

/// World coordinate shown at window cell (row, col) for an agent.
inline Coord window_to_world(const AgentBody& a, int row, int col) {
  const int ahead = kViewSelfRow - row;
  const int right = col - kViewSelfCol;
  return a.position + facing_delta(a.facing) * ahead + facing_delta(turn_right(a.facing)) * right;
}

using SymbolicView = std::array<CellCode, kViewCells>;

inline void append_features(const CellCode& c, int cell, std::vector<std::int32_t>& out) {
  const int base = cell * kFeaturesPerCell;
  out.push_back(base + static_cast<int>(c.base));
  if (c.marker) out.push_back(base + 9);
  if (c.ground != FruitLook::None) out.push_back(base + 9 + static_cast<int>(c.ground));
  if (c.occupant != Occupant::None) out.push_back(base + 11 + static_cast<int>(c.occupant));
  if (c.held != FruitLook::None) out.push_back(base + 13 + static_cast<int>(c.held));
}

/// Sorted indices of the active multi-hot features of a symbolic view.
inline std::vector<std::int32_t> multi_hot(const SymbolicView& view) {
  std::vector<std::int32_t> out;
  out.reserve(kViewCells * 2);
  for (int i = 0; i < kViewCells; ++i) append_features(view[i], i, out);
  return out;
}

// ---------------------------------------------------------------------------
// Sprite palette

inline constexpr std::string_view kDefaultPaletteText = R"(# daycare sprite palette v1
# color <char> <r> <g> <b>
# sprite <name>, then 8 rows of 8 chars; '.' is transparent (overlays only)
color g 60 120 50
color w 90 90 90
color s 220 200 140
color d 185 160 100
color b 30 160 45
color c 15 85 20
color t 110 70 30
color r 220 40 40
color y 240 220 40
color m 230 0 230
color A 40 80 230
color O 240 140 20
sprite ground
gggggggg
gggggggg
gggggggg
gggggggg
gggggggg
gggggggg
gggggggg
gggggggg
sprite wall
wwwwwwww
wwwwwwww
wwwwwwww
wwwwwwww
wwwwwwww
wwwwwwww
wwwwwwww
wwwwwwww
sprite desert
sssdssss
ssssssss
ssssssss
sssssssd
ssssssss
dsssssss
ssssssss
sdssssss
sprite shrub
gggggggg
gggggggg
gggggggg
gggggggg
gggggggg
bbbbbggg
bbbbbggg
bbbbbggg
sprite tree
gccccccg
gccccccg
gccccccg
gccccccg
gccccccg
gggttggg
gggttggg
gggttggg
sprite plant_fruit_red
........
.....rr.
.....rr.
........
........
........
........
........
sprite plant_fruit_yellow
........
.....yy.
.....yy.
........
........
........
........
........
sprite marker
mm......
mm......
........
........
........
........
........
........
sprite ground_fruit_red
........
........
........
........
........
........
......rr
......rr
sprite ground_fruit_yellow
........
........
........
........
........
........
......yy
......yy
sprite agent_self
........
........
..AAAA..
..AAAA..
..AAAA..
..AAAA..
........
........
sprite agent_other
........
........
..OOOO..
..OOOO..
..OOOO..
..OOOO..
........
........
sprite held_red
........
........
........
...rr...
...rr...
........
........
........
sprite held_yellow
........
........
........
...yy...
...yy...
........
........
........
)";

/// Named colours and 8x8 sprites. Overlays are drawn in a fixed order onto
/// the base sprite: plant fruit, marker, ground fruit, agent, held fruit.
class Palette {
 public:
  using Rgb = std::array<std::uint8_t, 3>;
  using Sprite = std::array<std::string, kCellPixels>;

  static Palette parse(std::string_view text) {
    Palette p;
    std::istringstream is{std::string(text)};
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ls(line);
      std::string word;
      ls >> word;
      if (word == "color") {
        std::string ch;
        int r = 0, g = 0, b = 0;
        if (!(ls >> ch >> r >> g >> b) || ch.size() != 1) throw ConfigError("palette: bad color line: " + line);
        p.colors_[ch[0]] = {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g), static_cast<std::uint8_t>(b)};
      } else if (word == "sprite") {
        std::string name;
        ls >> name;
        Sprite sprite;
        for (auto& row : sprite) {
          if (!std::getline(is, row) || row.size() != kCellPixels)
            throw ConfigError("palette: sprite '" + name + "' needs 8 rows of 8 chars");
          for (char ch : row)
            if (ch != '.' && !p.colors_.count(ch))
              throw ConfigError(std::string("palette: undefined color '") + ch + "' in sprite " + name);
        }
        p.sprites_[name] = sprite;
      } else {
        throw ConfigError("palette: unexpected line: " + line);
      }
    }
    for (const char* required : {"ground", "wall", "desert", "shrub", "tree", "plant_fruit_red", "plant_fruit_yellow",
                                 "marker", "ground_fruit_red", "ground_fruit_yellow", "agent_self", "agent_other",
                                 "held_red", "held_yellow"})
      if (!p.sprites_.count(required)) throw ConfigError(std::string("palette: missing sprite ") + required);
    return p;
  }

  static Palette load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw PersistenceError("cannot open palette " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  static const Palette& standard() {
    static const Palette p = parse(kDefaultPaletteText);
    return p;
  }

  /// Draws the sprite stack for `code` into an RGB buffer at (y0, x0).
  void draw(const CellCode& code, std::uint8_t* image, int stride_cols, int y0, int x0) const {
    auto put = [&](const Sprite& sprite) {
      for (int y = 0; y < kCellPixels; ++y)
        for (int x = 0; x < kCellPixels; ++x) {
          const char ch = sprite[y][x];
          if (ch == '.') continue;
          const Rgb& rgb = colors_.at(ch);
          std::uint8_t* px = image + ((y0 + y) * stride_cols + (x0 + x)) * kPixelChannels;
          px[0] = rgb[0];
          px[1] = rgb[1];
          px[2] = rgb[2];
        }
    };
    switch (code.base) {
      case BaseLook::Ground: put(sprites_.at("ground")); break;
      case BaseLook::Wall: put(sprites_.at("wall")); break;
      case BaseLook::Desert: put(sprites_.at("desert")); break;
      default: put(sprites_.at(is_tree(code.base) ? "tree" : "shrub")); break;
    }
    const FruitLook pf = plant_fruit(code.base);
    if (pf != FruitLook::None) put(sprites_.at(pf == FruitLook::Red ? "plant_fruit_red" : "plant_fruit_yellow"));
    if (code.marker) put(sprites_.at("marker"));
    if (code.ground != FruitLook::None)
      put(sprites_.at(code.ground == FruitLook::Red ? "ground_fruit_red" : "ground_fruit_yellow"));
    if (code.occupant != Occupant::None)
      put(sprites_.at(code.occupant == Occupant::Self ? "agent_self" : "agent_other"));
    if (code.held != FruitLook::None) put(sprites_.at(code.held == FruitLook::Red ? "held_red" : "held_yellow"));
  }

 private:
  std::map<char, Rgb> colors_;
  std::map<std::string, Sprite> sprites_;
};

// ---------------------------------------------------------------------------
// Rendering

enum class RenderMode { Pixels, Symbolic, Both };

struct Observation {
  AgentKind agent_kind = AgentKind::Tall;
  std::optional<SymbolicView> symbolic;
  /// Row-major 88x88x3, 8 bits per channel.
  std::optional<std::vector<std::uint8_t>> pixels;
};

inline SymbolicView render_symbolic(const EnvState& s, AgentKind viewer) {
  const AgentBody& a = s.agent(viewer);
  if (!a.alive) throw InputError(std::string("cannot render for absent agent ") + std::string(agent_name(viewer)));
  SymbolicView view;
  for (int r = 0; r < kViewRows; ++r)
    for (int c = 0; c < kViewCols; ++c)
      view[r * kViewCols + c] = alias_cell(truth_cell(s, window_to_world(a, r, c), viewer), viewer);
  return view;
}

inline std::vector<std::uint8_t> render_pixels(const SymbolicView& view, const Palette& palette = Palette::standard()) {
  std::vector<std::uint8_t> img(static_cast<std::size_t>(kPixelRows) * kPixelCols * kPixelChannels, 0);
  for (int r = 0; r < kViewRows; ++r)
    for (int c = 0; c < kViewCols; ++c)
      palette.draw(view[r * kViewCols + c], img.data(), kPixelCols, r * kCellPixels, c * kCellPixels);
  return img;
}

/// Egocentric observation. Pixels are drawn from the aliased symbolic view,
/// so both forms always agree.
inline Observation render(const EnvState& s, AgentKind viewer, RenderMode mode,
                          const Palette& palette = Palette::standard()) {
  Observation obs;
  obs.agent_kind = viewer;
  SymbolicView view = render_symbolic(s, viewer);
  if (mode != RenderMode::Symbolic) obs.pixels = render_pixels(view, palette);
  if (mode != RenderMode::Pixels) obs.symbolic = view;
  return obs;
}

/// Top-down unaliased frame of the whole grid (tall agent drawn as "self").
inline std::vector<std::uint8_t> render_world(const EnvState& s, const Palette& palette = Palette::standard()) {
  const int cols = s.width * kCellPixels;
  std::vector<std::uint8_t> img(static_cast<std::size_t>(s.height) * kCellPixels * cols * kPixelChannels, 0);
  for (int r = 0; r < s.height; ++r)
    for (int c = 0; c < s.width; ++c)
      palette.draw(truth_cell(s, {r, c}, AgentKind::Tall), img.data(), cols, r * kCellPixels, c * kCellPixels);
  return img;
}

/// Binary PPM (P6).
inline void write_ppm(const std::string& path, const std::vector<std::uint8_t>& rgb, int rows, int cols) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PersistenceError("cannot write " + path);
  out << "P6\n" << cols << ' ' << rows << "\n255\n";
  out.write(reinterpret_cast<const char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
  if (!out) throw PersistenceError("write failed: " + path);
}

}  // namespace daycare
