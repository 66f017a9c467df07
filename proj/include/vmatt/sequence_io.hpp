// Copyright (c) 2026 vmatt contributors
// SPDX-License-Identifier: Apache-2.0
//
// On-disk sequence layout: one directory per clip holding frame_%05d.ppm,
// alpha_%05d.pgm (plus lossless alpha_%05d.f32 sidecars), an optional
// mask_00000.pgm initial mask, and meta.json. Indices are contiguous from
// zero; every raster must agree on dimensions.
#pragma once

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vmatt/image_io.hpp"
#include "vmatt/synth.hpp"

namespace vmatt {

namespace seq_detail {

inline std::string indexed_name(const char* stem, int index, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%05d.%s", stem, index, ext);
  return buf;
}

// Indices of stem_%05d.ext present in dir, verified gap-free from zero.
inline int contiguous_count(const std::string& dir, const char* stem, const char* ext) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IoError(dir + " is not a directory");
  std::vector<bool> seen;
  const std::string prefix = std::string(stem) + "_";
  const std::string suffix = std::string(".") + ext;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() != prefix.size() + 5 + suffix.size()) continue;
    if (name.compare(0, prefix.size(), prefix) != 0) continue;
    if (name.compare(prefix.size() + 5, suffix.size(), suffix) != 0) continue;
    bool digits = true;
    int idx = 0;
    for (size_t i = prefix.size(); i < prefix.size() + 5; ++i) {
      if (!std::isdigit(static_cast<unsigned char>(name[i]))) {
        digits = false;
        break;
      }
      idx = idx * 10 + (name[i] - '0');
    }
    if (!digits) continue;
    if (idx >= static_cast<int>(seen.size())) seen.resize(static_cast<size_t>(idx) + 1, false);
    seen[static_cast<size_t>(idx)] = true;
  }
  for (size_t i = 0; i < seen.size(); ++i)
    if (!seen[i])
      throw IoError("index-gap", dir + ": missing " + indexed_name(stem, static_cast<int>(i), ext) +
                                     " but later indices exist");
  return static_cast<int>(seen.size());
}

template <class T>
void check_dims(const Ten<T>& img, int& h, int& w, const std::string& name) {
  if (h == 0) {
    h = img.dim(1);
    w = img.dim(2);
    return;
  }
  if (img.dim(1) != h || img.dim(2) != w)
    throw IoError("dim-mismatch", name + ": expected " + std::to_string(w) + "x" +
                                      std::to_string(h) + ", got " + std::to_string(img.dim(2)) +
                                      "x" + std::to_string(img.dim(1)));
}

}  // namespace seq_detail

// Writes frames, 8-bit and lossless alphas, the first ground-truth mask, and
// meta.json. The directory is created if needed.
template <class T>
void write_sequence_dir(const std::string& dir, const LabeledSequence<T>& seq,
                        const std::string& mode_tag) {
  require(!seq.frames.empty() && seq.frames.size() == seq.alpha_gt.size(),
          "write_sequence_dir: frames and alphas must align");
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  for (size_t t = 0; t < seq.frames.size(); ++t) {
    const int idx = static_cast<int>(t);
    write_ppm(dir + "/" + seq_detail::indexed_name("frame", idx, "ppm"), seq.frames[t]);
    write_pgm(dir + "/" + seq_detail::indexed_name("alpha", idx, "pgm"), seq.alpha_gt[t]);
    write_f32(dir + "/" + seq_detail::indexed_name("alpha", idx, "f32"), seq.alpha_gt[t]);
  }
  if (!seq.mask_gt.empty()) write_pgm(dir + "/mask_00000.pgm", seq.mask_gt[0]);
  const nlohmann::json meta{{"height", seq.frames[0].dim(1)},
                            {"width", seq.frames[0].dim(2)},
                            {"frames", seq.frames.size()},
                            {"fps", 15},
                            {"mode", mode_tag}};
  io_detail::atomic_write(dir + "/meta.json", meta.dump(2) + "\n");
}

// Bare alpha predictions (both precisions) plus meta.json.
template <class T>
void write_alpha_dir(const std::string& dir, const std::vector<Ten<T>>& alphas,
                     const std::string& mode_tag) {
  require(!alphas.empty(), "write_alpha_dir: need at least one alpha");
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  for (size_t t = 0; t < alphas.size(); ++t) {
    const int idx = static_cast<int>(t);
    write_pgm(dir + "/" + seq_detail::indexed_name("alpha", idx, "pgm"), alphas[t]);
    write_f32(dir + "/" + seq_detail::indexed_name("alpha", idx, "f32"), alphas[t]);
  }
  const nlohmann::json meta{{"height", alphas[0].dim(1)},
                            {"width", alphas[0].dim(2)},
                            {"frames", alphas.size()},
                            {"fps", 15},
                            {"mode", mode_tag}};
  io_detail::atomic_write(dir + "/meta.json", meta.dump(2) + "\n");
}

template <class T>
std::vector<Ten<T>> read_frames(const std::string& dir) {
  const int n = seq_detail::contiguous_count(dir, "frame", "ppm");
  if (n == 0) throw IoError(dir + ": no frame_%05d.ppm files");
  std::vector<Ten<T>> out;
  int h = 0, w = 0;
  for (int t = 0; t < n; ++t) {
    const std::string name = seq_detail::indexed_name("frame", t, "ppm");
    out.push_back(read_ppm<T>(dir + "/" + name));
    seq_detail::check_dims(out.back(), h, w, dir + "/" + name);
  }
  return out;
}

// Alpha mattes; the lossless f32 rasters win over the 8-bit ones when both
// are present.
template <class T>
std::vector<Ten<T>> read_alphas(const std::string& dir) {
  const int n_f32 = seq_detail::contiguous_count(dir, "alpha", "f32");
  const int n_pgm = n_f32 > 0 ? 0 : seq_detail::contiguous_count(dir, "alpha", "pgm");
  const int n = n_f32 > 0 ? n_f32 : n_pgm;
  if (n == 0) throw IoError(dir + ": no alpha_%05d rasters");
  std::vector<Ten<T>> out;
  int h = 0, w = 0;
  for (int t = 0; t < n; ++t) {
    const std::string name = seq_detail::indexed_name("alpha", t, n_f32 > 0 ? "f32" : "pgm");
    out.push_back(n_f32 > 0 ? read_f32<T>(dir + "/" + name) : read_pgm<T>(dir + "/" + name));
    seq_detail::check_dims(out.back(), h, w, dir + "/" + name);
  }
  return out;
}

template <class T>
std::optional<Ten<T>> read_init_mask(const std::string& dir) {
  const std::string path = dir + "/mask_00000.pgm";
  if (!std::filesystem::exists(path)) return std::nullopt;
  return read_pgm<T>(path);
}

}  // namespace vmatt
