// Copyright (c) 2026 vmatt contributors
// SPDX-License-Identifier: Apache-2.0
//
// Plain portable image codecs: binary P6/P5 netpbm at 8 bits for
// interchange, and raw little-endian float32 with a JSON sidecar where 8-bit
// quantization would swamp the measurement. All writes are atomic
// (temp-and-rename); all readers reject what they cannot fully parse.
#pragma once

#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "vmatt/tensor.hpp"

namespace vmatt {

namespace io_detail {

static_assert(std::endian::native == std::endian::little,
              "f32 rasters are little-endian; big-endian hosts need byte swaps");

// Round-half-up quantization of a unit-range value to one byte.
template <class T>
inline uint8_t quantize8(T v) {
  const double q = std::floor(255.0 * static_cast<double>(v) + 0.5);
  return static_cast<uint8_t>(q < 0.0 ? 0.0 : (q > 255.0 ? 255.0 : q));
}

inline void atomic_write(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write " + tmp);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

// Parses "P6"/"P5" headers: magic, then width, height, maxval separated by
// whitespace or #-comments, then exactly one whitespace byte before the
// raster.
struct PnmHeader {
  int width = 0, height = 0, maxval = 0;
  size_t data_offset = 0;
};

inline PnmHeader parse_pnm_header(const std::string& bytes, const char* magic,
                                  const std::string& path) {
  if (bytes.size() < 2 || bytes[0] != magic[0] || bytes[1] != magic[1])
    throw IoError("bad-header", path + ": not a " + magic + " file");
  size_t pos = 2;
  auto next_int = [&](const char* what) {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    if (pos >= bytes.size() || !std::isdigit(static_cast<unsigned char>(bytes[pos])))
      throw IoError("bad-header", path + ": missing " + what);
    long v = 0;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      v = v * 10 + (bytes[pos] - '0');
      if (v > 1 << 24) throw IoError("bad-header", path + ": absurd " + what);
      ++pos;
    }
    return static_cast<int>(v);
  };
  PnmHeader h;
  h.width = next_int("width");
  h.height = next_int("height");
  h.maxval = next_int("maxval");
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos])))
    throw IoError("bad-header", path + ": raster must follow a single whitespace");
  h.data_offset = pos + 1;
  if (h.width <= 0 || h.height <= 0)
    throw IoError("bad-header", path + ": non-positive dimensions");
  if (h.maxval != 255)
    throw IoError("bad-header", path + ": unsupported maxval " + std::to_string(h.maxval) +
                                    " (only 255)");
  return h;
}

}  // namespace io_detail

// [3,H,W] unit-range image -> binary P6.
template <class T>
void write_ppm(const std::string& path, const Ten<T>& img) {
  require_dims(img.ndim() == 3 && img.dim(0) == 3, "write_ppm: image must be [3,H,W]");
  const int h = img.dim(1), w = img.dim(2);
  std::string bytes = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  bytes.reserve(bytes.size() + static_cast<size_t>(3) * h * w);
  const size_t plane = static_cast<size_t>(h) * w;
  for (size_t i = 0; i < plane; ++i)
    for (int c = 0; c < 3; ++c)
      bytes.push_back(static_cast<char>(io_detail::quantize8(img.data()[c * plane + i])));
  io_detail::atomic_write(path, bytes);
}

template <class T>
Ten<T> read_ppm(const std::string& path) {
  const std::string bytes = io_detail::read_all(path);
  const io_detail::PnmHeader h = io_detail::parse_pnm_header(bytes, "P6", path);
  const size_t plane = static_cast<size_t>(h.height) * h.width;
  if (bytes.size() - h.data_offset < 3 * plane)
    throw IoError("bad-header", path + ": truncated raster");
  std::vector<T> out(3 * plane);
  for (size_t i = 0; i < plane; ++i)
    for (int c = 0; c < 3; ++c)
      out[static_cast<size_t>(c) * plane + i] =
          static_cast<T>(static_cast<uint8_t>(bytes[h.data_offset + 3 * i + c])) / T(255);
  return Ten<T>::from({3, h.height, h.width}, std::move(out));
}

// [1,H,W] unit-range raster -> binary P5.
template <class T>
void write_pgm(const std::string& path, const Ten<T>& img) {
  require_dims(img.ndim() == 3 && img.dim(0) == 1, "write_pgm: image must be [1,H,W]");
  const int h = img.dim(1), w = img.dim(2);
  std::string bytes = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  bytes.reserve(bytes.size() + static_cast<size_t>(h) * w);
  for (const T& v : img.data()) bytes.push_back(static_cast<char>(io_detail::quantize8(v)));
  io_detail::atomic_write(path, bytes);
}

template <class T>
Ten<T> read_pgm(const std::string& path) {
  const std::string bytes = io_detail::read_all(path);
  const io_detail::PnmHeader h = io_detail::parse_pnm_header(bytes, "P5", path);
  const size_t plane = static_cast<size_t>(h.height) * h.width;
  if (bytes.size() - h.data_offset < plane)
    throw IoError("bad-header", path + ": truncated raster");
  std::vector<T> out(plane);
  for (size_t i = 0; i < plane; ++i)
    out[i] = static_cast<T>(static_cast<uint8_t>(bytes[h.data_offset + i])) / T(255);
  return Ten<T>::from({1, h.height, h.width}, std::move(out));
}

// [1,H,W] raster -> raw row-major float32 plus a {"h":..,"w":..} sidecar at
// path + ".json". Lossless for float inputs.
template <class T>
void write_f32(const std::string& path, const Ten<T>& img) {
  require_dims(img.ndim() == 3 && img.dim(0) == 1, "write_f32: raster must be [1,H,W]");
  std::string bytes(img.data().size() * sizeof(float), '\0');
  for (size_t i = 0; i < img.data().size(); ++i) {
    const float f = static_cast<float>(img.data()[i]);
    std::memcpy(bytes.data() + i * sizeof(float), &f, sizeof(float));
  }
  io_detail::atomic_write(path, bytes);
  const nlohmann::json sidecar{{"h", img.dim(1)}, {"w", img.dim(2)}};
  io_detail::atomic_write(path + ".json", sidecar.dump() + "\n");
}

template <class T>
Ten<T> read_f32(const std::string& path) {
  nlohmann::json sidecar;
  try {
    sidecar = nlohmann::json::parse(io_detail::read_all(path + ".json"));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad-header", path + ".json: invalid sidecar: " + e.what());
  }
  int h = 0, w = 0;
  try {
    h = sidecar.at("h").get<int>();
    w = sidecar.at("w").get<int>();
  } catch (const nlohmann::json::exception&) {
    throw IoError("bad-header", path + ".json: sidecar must carry integer h and w");
  }
  if (h <= 0 || w <= 0) throw IoError("bad-header", path + ".json: non-positive dimensions");
  const std::string bytes = io_detail::read_all(path);
  const size_t n = static_cast<size_t>(h) * w;
  if (bytes.size() != n * sizeof(float))
    throw IoError("bad-header", path + ": raster size does not match sidecar");
  std::vector<T> out(n);
  for (size_t i = 0; i < n; ++i) {
    float f;
    std::memcpy(&f, bytes.data() + i * sizeof(float), sizeof(float));
    out[i] = static_cast<T>(f);
  }
  return Ten<T>::from({1, h, w}, std::move(out));
}

}  // namespace vmatt
