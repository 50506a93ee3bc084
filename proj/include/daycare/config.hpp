#pragma once

#include <cstdint>
#include <string>

#include "daycare/errors.hpp"
#include "daycare/kv.hpp"

namespace daycare {

inline constexpr int kMaxDesertSize = 64;
/// Probability that a short-agent grasp on a fruit-bearing shrub succeeds.
inline constexpr double kShortShrubGraspProb = 0.30;

/// Geometry and dynamics of one daycare episode.
///
/// Layout from top to bottom: `patch_height` rows of the yellow patch,
/// `desert_size` rows of desert, `patch_height` rows of the red patch.
struct MapConfig {
  int desert_size = 0;
  int patch_height = 9;
  int width = 15;
  double plant_density = 0.35;
  double tree_fraction = 0.5;
  double regrow_prob = 0.05;
  int episode_length = 1000;
  int marker_ttl = 25;
  std::uint64_t seed = 0;

  int height() const { return 2 * patch_height + desert_size; }
  bool is_desert_row(int row) const { return row >= patch_height && row < patch_height + desert_size; }
  bool is_top_patch_row(int row) const { return row >= 0 && row < patch_height; }

  void validate() const {
    if (desert_size < 0 || desert_size > kMaxDesertSize)
      throw ConfigError("desert_size must be in [0, 64], got " + std::to_string(desert_size));
    if (patch_height < 1) throw ConfigError("patch_height must be >= 1");
    if (width < 1) throw ConfigError("width must be >= 1");
    if (width * patch_height < 2) throw ConfigError("patch too small to spawn agents");
    if (!(plant_density >= 0.0 && plant_density <= 1.0)) throw ConfigError("plant_density must be in [0, 1]");
    if (!(tree_fraction >= 0.0 && tree_fraction <= 1.0)) throw ConfigError("tree_fraction must be in [0, 1]");
    if (!(regrow_prob >= 0.0 && regrow_prob <= 1.0)) throw ConfigError("regrow_prob must be in [0, 1]");
    if (episode_length < 1) throw ConfigError("episode_length must be >= 1");
    if (marker_ttl < 0) throw ConfigError("marker_ttl must be >= 0");
  }

  KeyValues to_kv() const {
    KeyValues kv;
    kv.set("desert_size", desert_size);
    kv.set("patch_height", patch_height);
    kv.set("width", width);
    kv.set("plant_density", plant_density);
    kv.set("tree_fraction", tree_fraction);
    kv.set("regrow_prob", regrow_prob);
    kv.set("episode_length", episode_length);
    kv.set("marker_ttl", marker_ttl);
    kv.set("seed", seed);
    return kv;
  }

  /// Missing keys keep their defaults; unknown keys are rejected.
  static MapConfig from_kv(const KeyValues& kv) {
    MapConfig c;
    for (const auto& key : kv.keys()) {
      if (key == "desert_size") c.desert_size = static_cast<int>(kv.get_int(key));
      else if (key == "patch_height") c.patch_height = static_cast<int>(kv.get_int(key));
      else if (key == "width") c.width = static_cast<int>(kv.get_int(key));
      else if (key == "plant_density") c.plant_density = kv.get_double(key);
      else if (key == "tree_fraction") c.tree_fraction = kv.get_double(key);
      else if (key == "regrow_prob") c.regrow_prob = kv.get_double(key);
      else if (key == "episode_length") c.episode_length = static_cast<int>(kv.get_int(key));
      else if (key == "marker_ttl") c.marker_ttl = static_cast<int>(kv.get_int(key));
      else if (key == "seed") c.seed = kv.get_u64(key);
      else throw ConfigError("unknown map config key '" + key + "'");
    }
    c.validate();
    return c;
  }

  /// Single-line rendering used in event logs.
  std::string to_line() const {
    const KeyValues kv = to_kv();
    std::string s;
    for (const auto& key : kv.keys()) {
      if (!s.empty()) s += ' ';
      s += key + "=" + kv.get(key);
    }
    return s;
  }

  std::uint64_t fingerprint() const { return fnv1a(to_kv().to_string()); }

  friend bool operator==(const MapConfig&, const MapConfig&) = default;
};

}  // namespace daycare
