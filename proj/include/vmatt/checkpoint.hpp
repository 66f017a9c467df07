// Copyright (c) 2026 vmatt contributors
// SPDX-License-Identifier: Apache-2.0
//
// Model checkpoints: a fixed magic and version, a JSON manifest describing
// every parameter (name, shape, offset) plus a config echo, and one flat
// little-endian float32 blob. Loading verifies the manifest against the
// live model parameter by parameter, so a config mismatch fails with the
// offending name instead of silently misreading the blob.
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "vmatt/model.hpp"

namespace vmatt {

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are little-endian; big-endian hosts need byte swaps");

inline constexpr char kCheckpointMagic[9] = "VMATCKPT";  // 8 bytes on disk
inline constexpr uint32_t kCheckpointVersion = 1;

inline nlohmann::json model_config_to_json(const ModelConfig& c) {
  return nlohmann::json{
      {"enc_channels", c.enc.channels},
      {"hidden", c.enc.hidden},
      {"heads", c.tf.heads},
      {"layers", c.tf.layers},
      {"mlp_ratio", c.tf.mlp_ratio},
      {"omega", c.tf.omega},
      {"dec_channels", c.dec.channels},
      {"write_stride", c.mem.write_stride},
      {"long_capacity", c.mem.long_capacity},
      {"short_capacity", c.mem.short_capacity},
      {"long_policy", c.mem.policy == LongTermPolicy::sparse_write ? "sparse_write" : "sparse_read"},
      {"init_seed", c.init_seed},
  };
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    j.at("enc_channels").get_to(c.enc.channels);
    c.enc.hidden = j.at("hidden").get<int>();
    c.tf.hidden = c.enc.hidden;
    c.tf.heads = j.at("heads").get<int>();
    c.tf.layers = j.at("layers").get<int>();
    c.tf.mlp_ratio = j.at("mlp_ratio").get<int>();
    c.tf.omega = j.at("omega").get<int>();
    j.at("dec_channels").get_to(c.dec.channels);
    c.mem.write_stride = j.at("write_stride").get<int>();
    c.mem.long_capacity = j.at("long_capacity").get<int>();
    c.mem.short_capacity = j.at("short_capacity").get<int>();
    c.mem.policy = j.at("long_policy").get<std::string>() == "sparse_read"
                       ? LongTermPolicy::sparse_read
                       : LongTermPolicy::sparse_write;
    c.init_seed = j.at("init_seed").get<uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("checkpoint: malformed config echo: ") + e.what());
  }
  return c;
}

namespace ckpt_detail {

inline void write_u32(std::ostream& os, uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline void write_u64(std::ostream& os, uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline std::vector<char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint: cannot open " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

}  // namespace ckpt_detail

template <class T>
void checkpoint_save(MattingModel<T>& model, const std::string& path) {
  ParamList<T> params = model.params();
  nlohmann::json manifest;
  manifest["format_version"] = kCheckpointVersion;
  manifest["config"] = model_config_to_json(model.cfg);
  nlohmann::json plist = nlohmann::json::array();
  uint64_t offset = 0;
  for (const auto& e : params) {
    plist.push_back({{"name", e.name},
                     {"shape", e.tensor->shape()},
                     {"offset", offset},
                     {"count", e.tensor->size()}});
    offset += static_cast<uint64_t>(e.tensor->size());
  }
  manifest["params"] = std::move(plist);
  const std::string mtext = manifest.dump();

  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("checkpoint: cannot write " + tmp);
    os.write(kCheckpointMagic, 8);
    ckpt_detail::write_u32(os, kCheckpointVersion);
    ckpt_detail::write_u64(os, mtext.size());
    os.write(mtext.data(), static_cast<std::streamsize>(mtext.size()));
    std::vector<float> buf;
    for (const auto& e : params) {
      buf.assign(e.tensor->data().begin(), e.tensor->data().end());
      os.write(reinterpret_cast<const char*>(buf.data()),
               static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }
    if (!os) throw IoError("checkpoint: write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

// Reads only the manifest's config echo, so a caller can construct a model
// of the right shape before loading the weights into it.
inline nlohmann::json checkpoint_peek_config(const std::string& path) {
  const std::vector<char> bytes = ckpt_detail::read_file(path);
  if (bytes.size() < 20 || std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0)
    throw IoError("checkpoint: " + path + " is not a checkpoint (bad magic)");
  uint32_t version = 0;
  std::memcpy(&version, bytes.data() + 8, 4);
  if (version != kCheckpointVersion)
    throw IoError("checkpoint: format version " + std::to_string(version) +
                  " unsupported (expected " + std::to_string(kCheckpointVersion) + ")");
  uint64_t msize = 0;
  std::memcpy(&msize, bytes.data() + 12, 8);
  if (bytes.size() < 20 + msize) throw IoError("checkpoint: truncated manifest in " + path);
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.begin() + 20, bytes.begin() + 20 + msize);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("checkpoint: manifest is not valid JSON: ") + e.what());
  }
  if (!manifest.contains("config")) throw IoError("checkpoint: manifest has no config echo");
  return manifest["config"];
}

template <class T>
void checkpoint_load(MattingModel<T>& model, const std::string& path) {
  const std::vector<char> bytes = ckpt_detail::read_file(path);
  if (bytes.size() < 20 || std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0)
    throw IoError("checkpoint: " + path + " is not a checkpoint (bad magic)");
  uint32_t version = 0;
  std::memcpy(&version, bytes.data() + 8, 4);
  if (version != kCheckpointVersion)
    throw IoError("checkpoint: format version " + std::to_string(version) +
                  " unsupported (expected " + std::to_string(kCheckpointVersion) + ")");
  uint64_t msize = 0;
  std::memcpy(&msize, bytes.data() + 12, 8);
  if (bytes.size() < 20 + msize) throw IoError("checkpoint: truncated manifest in " + path);
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.begin() + 20, bytes.begin() + 20 + msize);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("checkpoint: manifest is not valid JSON: ") + e.what());
  }

  const char* blob = bytes.data() + 20 + msize;
  const uint64_t blob_floats = (bytes.size() - 20 - msize) / sizeof(float);

  std::map<std::string, nlohmann::json> by_name;
  for (const auto& p : manifest.at("params")) by_name[p.at("name").get<std::string>()] = p;

  ParamList<T> params = model.params();
  for (const auto& e : params) {
    auto it = by_name.find(e.name);
    if (it == by_name.end())
      throw IoError("checkpoint: missing parameter " + e.name + " in manifest");
    const nlohmann::json& entry = it->second;
    const std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
    if (shape != e.tensor->shape())
      throw DimensionError("checkpoint: shape mismatch for " + e.name + ": file has " +
                           shape_str(shape) + ", model has " + shape_str(e.tensor->shape()));
    const uint64_t offset = entry.at("offset").get<uint64_t>();
    const uint64_t count = entry.at("count").get<uint64_t>();
    if (count != static_cast<uint64_t>(e.tensor->size()))
      throw DimensionError("checkpoint: element count mismatch for " + e.name);
    if (offset + count > blob_floats)
      throw IoError("checkpoint: truncated blob (parameter " + e.name + " out of range)");
    std::vector<T>& dst = e.tensor->mutable_data();
    for (uint64_t i = 0; i < count; ++i) {
      float f;
      std::memcpy(&f, blob + (offset + i) * sizeof(float), sizeof(float));
      dst[static_cast<size_t>(i)] = static_cast<T>(f);
    }
    by_name.erase(it);
  }
  if (!by_name.empty())
    throw IoError("checkpoint: unexpected parameter " + by_name.begin()->first +
                  " not present in the model");
}

}  // namespace vmatt
