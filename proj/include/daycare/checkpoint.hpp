#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "daycare/errors.hpp"
#include "daycare/kv.hpp"
#include "daycare/policy_net.hpp"
#include "daycare/reward_shaping.hpp"

namespace daycare {

// Checkpoint file layout (all integers little-endian):
//
//   bytes 0..7    magic "DAYCKPT\0"
//   bytes 8..11   u32 format version (1)
//   bytes 12..19  u64 header length H
//   next H bytes  UTF-8 JSON header
//   remainder     payload of IEEE-754 binary32 values, little-endian
//
// Header fields: "fingerprint" (architecture fingerprint string),
// "architecture" and "meta" (string maps), "scalar" ("f32"),
// "arrays" (list of {name, shape [rows, cols], offset, count}; offset and
// count in scalars from the start of the payload), "adam_step",
// "popart" (null or {mean_acc, second_acc, weight_acc}), "rng" (name to
// textual mt19937_64 state). Array names are the network segment names,
// then "adam.m" and "adam.v" over the flat parameter vector when present.

inline constexpr char kCheckpointMagic[8] = {'D', 'A', 'Y', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

struct Checkpoint {
  PolicyNet<float> net;
  AdamState<float> adam;
  std::optional<PopArtState> popart;
  KeyValues meta;
  std::map<std::string, std::string> rng;
};

namespace detail {

inline nlohmann::json kv_to_json(const KeyValues& kv) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& k : kv.keys()) j[k] = kv.get(k);
  return j;
}

inline KeyValues json_to_kv(const nlohmann::json& j) {
  KeyValues kv;
  for (auto it = j.begin(); it != j.end(); ++it) kv.set(it.key(), it.value().get<std::string>());
  return kv;
}

}  // namespace detail

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  using nlohmann::json;
  const auto& net = ck.net;
  json header;
  header["fingerprint"] = net.architecture().fingerprint();
  header["architecture"] = detail::kv_to_json(net.architecture().to_kv());
  header["meta"] = detail::kv_to_json(ck.meta);
  header["scalar"] = "f32";
  json arrays = json::array();
  std::int64_t offset = 0;
  for (const auto& seg : net.segments()) {
    arrays.push_back({{"name", seg.name}, {"shape", {seg.rows, seg.cols}}, {"offset", offset},
                      {"count", static_cast<std::int64_t>(seg.rows) * seg.cols}});
    offset += static_cast<std::int64_t>(seg.rows) * seg.cols;
  }
  const bool has_adam = ck.adam.m.size() == net.num_parameters();
  if (has_adam) {
    for (const char* name : {"adam.m", "adam.v"}) {
      arrays.push_back({{"name", name}, {"shape", {net.num_parameters(), 1}}, {"offset", offset},
                        {"count", static_cast<std::int64_t>(net.num_parameters())}});
      offset += net.num_parameters();
    }
  }
  header["arrays"] = arrays;
  header["adam_step"] = ck.adam.step;
  if (ck.popart)
    header["popart"] = {{"mean_acc", ck.popart->mean_acc},
                        {"second_acc", ck.popart->second_acc},
                        {"weight_acc", ck.popart->weight_acc}};
  else
    header["popart"] = nullptr;
  header["rng"] = ck.rng;
  const std::string text = header.dump(1);

  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw PersistenceError("cannot write " + tmp);
    const std::uint64_t len = text.size();
    out.write(kCheckpointMagic, 8);
    out.write(reinterpret_cast<const char*>(&kCheckpointVersion), 4);
    out.write(reinterpret_cast<const char*>(&len), 8);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    auto write_vec = [&](const Eigen::VectorXf& v) {
      out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
    };
    write_vec(net.parameters());
    if (has_adam) {
      write_vec(ck.adam.m);
      write_vec(ck.adam.v);
    }
    if (!out) throw PersistenceError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw PersistenceError("cannot move " + tmp + " to " + path.string() + ": " + ec.message());
}

/// Reads a checkpoint. When `expected` is given, a different architecture
/// fingerprint is an input error.
inline Checkpoint load_checkpoint(const std::filesystem::path& path, const Architecture* expected = nullptr) {
  using nlohmann::json;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint " + path.string());
  char magic[8];
  std::uint32_t version = 0;
  std::uint64_t len = 0;
  in.read(magic, 8);
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&len), 8);
  if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0) throw InputError("not a checkpoint: " + path.string());
  if (version != kCheckpointVersion)
    throw InputError("unsupported checkpoint version " + std::to_string(version) + " in " + path.string());
  if (len > (1u << 26)) throw InputError("corrupt checkpoint header in " + path.string());
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw InputError("truncated checkpoint " + path.string());

  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError("bad checkpoint header in " + path.string() + ": " + e.what());
  }
  try {
    const Architecture arch = Architecture::from_kv(detail::json_to_kv(header.at("architecture")));
    if (header.at("fingerprint").get<std::string>() != arch.fingerprint())
      throw InputError("checkpoint fingerprint does not match its architecture: " + path.string());
    if (expected && !(*expected == arch))
      throw InputError("architecture mismatch: checkpoint has " + arch.fingerprint() + ", expected " +
                       expected->fingerprint());
    if (header.at("scalar").get<std::string>() != "f32") throw InputError("unsupported scalar type");

    Checkpoint ck{PolicyNet<float>(arch, 0), {}, std::nullopt, detail::json_to_kv(header.at("meta")), {}};
    std::vector<float> payload;
    {
      const auto start = in.tellg();
      in.seekg(0, std::ios::end);
      const auto bytes = static_cast<std::size_t>(in.tellg() - start);
      in.seekg(start);
      if (bytes % sizeof(float) != 0) throw InputError("payload size is not a multiple of 4 in " + path.string());
      payload.resize(bytes / sizeof(float));
      in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(bytes));
    }
    auto& params = ck.net.parameters();
    const auto n = ck.net.num_parameters();
    for (const auto& a : header.at("arrays")) {
      const auto name = a.at("name").get<std::string>();
      const auto offset = a.at("offset").get<std::int64_t>();
      const auto count = a.at("count").get<std::int64_t>();
      if (offset < 0 || count < 0 || static_cast<std::size_t>(offset + count) > payload.size())
        throw InputError("array '" + name + "' out of range in " + path.string());
      const float* src = payload.data() + offset;
      if (name == "adam.m" || name == "adam.v") {
        if (count != n) throw InputError("optimiser state has wrong length in " + path.string());
        auto& dst = name == "adam.m" ? ck.adam.m : ck.adam.v;
        dst = Eigen::Map<const Eigen::VectorXf>(src, n);
        continue;
      }
      const int seg = ck.net.segment_index(name);
      const auto& s = ck.net.segments()[seg];
      const auto shape = a.at("shape");
      if (shape.at(0).get<int>() != s.rows || shape.at(1).get<int>() != s.cols)
        throw InputError("array '" + name + "' has wrong shape in " + path.string());
      std::copy(src, src + count, params.data() + s.offset);
    }
    ck.adam.step = header.at("adam_step").get<std::int64_t>();
    if (!header.at("popart").is_null()) {
      PopArtState p;
      p.mean_acc = header["popart"].at("mean_acc").get<double>();
      p.second_acc = header["popart"].at("second_acc").get<double>();
      p.weight_acc = header["popart"].at("weight_acc").get<double>();
      ck.popart = p;
    }
    ck.rng = header.at("rng").get<std::map<std::string, std::string>>();
    if (!params.allFinite()) throw InputError("checkpoint holds non-finite weights: " + path.string());
    return ck;
  } catch (const json::exception& e) {
    throw InputError("bad checkpoint header in " + path.string() + ": " + e.what());
  }
}

}  // namespace daycare
