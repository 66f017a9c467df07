// Copyright (c) 2026 vmatt contributors
// SPDX-License-Identifier: Apache-2.0
//
// The command-line surface: synth / train / infer / eval. Kept as a header
// entry point (cli_main) so the binary stays a two-line wrapper and the test
// suite can drive the exact production paths in-process.
#pragma once

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "vmatt/checkpoint.hpp"
#include "vmatt/metrics.hpp"
#include "vmatt/sequence_io.hpp"
#include "vmatt/session.hpp"
#include "vmatt/train.hpp"

#ifndef VMATT_BUILD_ID
#define VMATT_BUILD_ID "unknown"
#endif

namespace vmatt {

namespace cli_detail {

struct SizeSpec {
  int width = 64, height = 64;
};

// "64" (square) or "96x64" (width x height).
inline SizeSpec parse_size(const std::string& text) {
  SizeSpec s;
  const size_t x = text.find('x');
  try {
    if (x == std::string::npos) {
      s.width = s.height = std::stoi(text);
    } else {
      s.width = std::stoi(text.substr(0, x));
      s.height = std::stoi(text.substr(x + 1));
    }
  } catch (const std::exception&) {
    throw ConfigError("--size must be N or WxH, got '" + text + "'");
  }
  return s;
}

// "oracle", "corrupted:R", or "file:path" -> the t=0 mask for a sequence.
template <class T>
Ten<T> resolve_init_mask(const std::string& spec, const std::string& seq_dir) {
  if (spec == "oracle" || spec.rfind("corrupted:", 0) == 0) {
    const std::vector<Ten<T>> gt = read_alphas<T>(seq_dir);
    if (spec == "oracle") return oracle_mask(gt[0]);
    int radius = 0;
    try {
      radius = std::stoi(spec.substr(10));
    } catch (const std::exception&) {
      throw ConfigError("--init corrupted:R needs an integer radius, got '" + spec + "'");
    }
    require(radius >= 0, "--init corrupted radius must be non-negative");
    return corrupted_oracle_mask(gt[0], radius);
  }
  if (spec.rfind("file:", 0) == 0) return read_pgm<T>(spec.substr(5));
  throw ConfigError("--init must be oracle, corrupted:R or file:path, got '" + spec + "'");
}

inline void apply_train_overrides(const nlohmann::json& j, TrainConfig& cfg) {
  if (j.contains("steps")) cfg.steps = j.at("steps").get<int>();
  if (j.contains("base_lr")) cfg.base_lr = j.at("base_lr").get<double>();
  if (j.contains("weight_decay")) cfg.weight_decay = j.at("weight_decay").get<double>();
  if (j.contains("warmup_steps")) cfg.warmup_steps = j.at("warmup_steps").get<int>();
  if (j.contains("clips_per_step")) cfg.clips_per_step = j.at("clips_per_step").get<int>();
  if (j.contains("frames_per_clip")) cfg.frames_per_clip = j.at("frames_per_clip").get<int>();
  if (j.contains("alternate")) cfg.alternate = j.at("alternate").get<bool>();
  if (j.contains("teacher_force")) cfg.teacher_force = j.at("teacher_force").get<bool>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<uint64_t>();
}

inline nlohmann::json report_json(const MetricReport& r) {
  nlohmann::json j{{"mad", r.mad}, {"mse", r.mse}, {"grad", r.grad}};
  j["conn"] = r.conn ? nlohmann::json(*r.conn) : nlohmann::json(nullptr);
  j["dtssd"] = r.dtssd ? nlohmann::json(*r.dtssd) : nlohmann::json(nullptr);
  return j;
}

inline int run_synth(uint64_t seed, int frames, const std::string& size_text,
                     const std::string& mode, const std::string& out_dir) {
  const SizeSpec size = parse_size(size_text);
  const BgMode bg = mode == "static" ? BgMode::static_bg : BgMode::dynamic_bg;
  Rng rng(seed);
  SceneSpec spec = random_scene(rng, frames, size.height, size.width, bg);
  LabeledSequence<float> seq = generate_sequence<float>(spec);
  write_sequence_dir(out_dir, seq, mode);
  std::cout << "wrote " << frames << " frames (" << size.width << "x" << size.height << ", "
            << mode << " background) to " << out_dir << "\n";
  return 0;
}

inline int run_train(const std::string& stage_text, const std::string& out_ckpt,
                     const std::string& config_path, const std::string& trace_path,
                     const std::string& init_ckpt) {
  nlohmann::json overrides = nlohmann::json::object();
  if (!config_path.empty()) {
    try {
      overrides = nlohmann::json::parse(io_detail::read_all(config_path));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("--config " + config_path + " is not valid JSON: " + e.what());
    }
  }
  uint64_t data_seed = 2026;
  int sequences = 6, frames = 16, height = 64, width = 64;
  if (overrides.contains("data")) {
    const auto& d = overrides.at("data");
    if (d.contains("seed")) data_seed = d.at("seed").get<uint64_t>();
    if (d.contains("sequences")) sequences = d.at("sequences").get<int>();
    if (d.contains("frames")) frames = d.at("frames").get<int>();
    if (d.contains("height")) height = d.at("height").get<int>();
    if (d.contains("width")) width = d.at("width").get<int>();
  }

  ModelConfig mc;
  if (overrides.contains("model") && overrides.at("model").contains("init_seed"))
    mc.init_seed = overrides.at("model").at("init_seed").get<uint64_t>();
  MattingModel<float> model(mc);
  if (!init_ckpt.empty()) checkpoint_load(model, init_ckpt);

  std::ofstream trace;
  if (!trace_path.empty()) {
    trace.open(trace_path, std::ios::trunc);
    if (!trace) throw IoError("cannot write trace " + trace_path);
  }
  std::ostream* trace_os = trace.is_open() ? &trace : nullptr;

  auto stage_cfg = [&](int stage) {
    TrainConfig cfg = default_stage_config(stage);
    const std::string key = "stage" + std::to_string(stage);
    if (overrides.contains(key)) apply_train_overrides(overrides.at(key), cfg);
    return cfg;
  };
  auto low_set = [&] { return make_train_set<float>(data_seed, sequences, frames, height, width); };
  // Stage 3 re-renders the same scene family at doubled resolution; the
  // generator is procedural, so this costs render time instead of storage.
  auto high_set = [&] {
    return make_train_set<float>(data_seed, sequences, frames, 2 * height, 2 * width);
  };

  std::vector<TrainRecord> records;
  if (stage_text == "all") {
    TrainSet<float> low = low_set();
    TrainSet<float> high = high_set();
    for (int stage = 1; stage <= 3; ++stage) {
      auto r = train_stage(model, stage_cfg(stage), stage == 3 ? high : low, trace_os);
      records.insert(records.end(), r.begin(), r.end());
    }
  } else {
    const int stage = std::stoi(stage_text);
    TrainSet<float> data = stage == 3 ? high_set() : low_set();
    records = train_stage(model, stage_cfg(stage), data, trace_os);
  }
  checkpoint_save(model, out_ckpt);
  std::cout << "trained " << records.size() << " steps, final loss "
            << (records.empty() ? 0.0 : records.back().loss) << ", checkpoint " << out_ckpt
            << "\n";
  return 0;
}

inline int run_infer(const std::string& ckpt, const std::string& in_dir,
                     const std::string& out_dir, const std::string& init_spec,
                     const std::string& direction, const std::string& attn,
                     const std::string& update) {
  ModelConfig mc = model_config_from_json(checkpoint_peek_config(ckpt));
  MattingModel<float> model(mc);
  checkpoint_load(model, ckpt);

  SessionConfig cfg;
  cfg.attention = attn == "short" ? AttentionMode::short_only
                  : attn == "long" ? AttentionMode::long_only
                                   : AttentionMode::both;
  cfg.update = update == "alpha" ? UpdateMode::alpha
               : update == "none" ? UpdateMode::none
                                  : UpdateMode::mask;

  const std::vector<Ten<float>> frames = read_frames<float>(in_dir);
  const Ten<float> init = resolve_init_mask<float>(init_spec, in_dir);

  std::vector<Ten<float>> alphas;
  double mean_ms = 0;
  if (direction == "bi") {
    BiResult<float> bi = bidirectional_infer(model, frames, init, cfg);
    alphas = bi.alphas;
    for (double ms : bi.forward.frame_millis) mean_ms += ms;
    mean_ms /= static_cast<double>(bi.forward.frame_millis.size());
  } else {
    SequenceResult<float> res = run_sequence(model, frames, init, cfg);
    if (res.degenerate_init)
      std::cerr << "warning: initial mask has no foreground area\n";
    alphas = res.alphas;
    for (double ms : res.frame_millis) mean_ms += ms;
    mean_ms /= static_cast<double>(res.frame_millis.size());
  }
  write_alpha_dir(out_dir, alphas, direction);
  std::cout << "matted " << alphas.size() << " frames (" << direction << ", "
            << mean_ms << " ms/frame forward) to " << out_dir << "\n";
  return 0;
}

inline int run_eval(const std::string& pred_dir, const std::string& gt_dir, bool with_conn,
                    const std::string& out_path) {
  const std::vector<Ten<float>> pred = read_alphas<float>(pred_dir);
  const std::vector<Ten<float>> gt = read_alphas<float>(gt_dir);
  if (pred.size() != gt.size())
    throw IoError("dim-mismatch", "pred has " + std::to_string(pred.size()) + " frames, gt has " +
                                      std::to_string(gt.size()));
  const MetricReport report = evaluate_sequence(pred, gt, with_conn);
  const MetricReport aggregate = aggregate_reports({report});

  nlohmann::json doc;
  doc["sequences"] = nlohmann::json::array(
      {nlohmann::json{{"name", std::filesystem::path(pred_dir).filename().string()},
                      {"frames", pred.size()},
                      {"metrics", report_json(report)}}});
  doc["aggregate"] = report_json(aggregate);
  doc["config"] = {{"conn", with_conn ? "on" : "off"},
                   {"pred", pred_dir},
                   {"gt", gt_dir},
                   {"scale", "mad/mse/grad/conn x1e3, dtssd x1e2"}};
  doc["build"] = VMATT_BUILD_ID;
  io_detail::atomic_write(out_path, doc.dump(2) + "\n");
  std::cout << "mad " << report.mad << " mse " << report.mse << " grad " << report.grad
            << " conn " << (report.conn ? std::to_string(*report.conn) : "null") << " dtssd "
            << (report.dtssd ? std::to_string(*report.dtssd) : "null") << " -> " << out_path
            << "\n";
  return 0;
}

}  // namespace cli_detail

inline int cli_main(int argc, const char* const* argv) {
  CLI::App app{"video matting with an adaptive fg/bg memory"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "render a labeled synthetic sequence");
  uint64_t seed = 1;
  int frames = 16;
  std::string size_text = "64";
  std::string mode = "dynamic";
  std::string out_dir;
  synth->add_option("--seed", seed, "scene seed");
  synth->add_option("--frames", frames, "frame count")->check(CLI::PositiveNumber);
  synth->add_option("--size", size_text, "N or WxH, multiples of 16");
  synth->add_option("--mode", mode, "background motion")
      ->check(CLI::IsMember({"static", "dynamic"}));
  synth->add_option("--out", out_dir, "output sequence directory")->required();

  auto* train = app.add_subcommand("train", "run the training schedule");
  std::string stage = "all";
  std::string ckpt_out;
  std::string config_path;
  std::string trace_path;
  std::string init_ckpt;
  train->add_option("--stage", stage, "1, 2, 3 or all")
      ->check(CLI::IsMember({"1", "2", "3", "all"}));
  train->add_option("--out", ckpt_out, "checkpoint path")->required();
  train->add_option("--config", config_path, "JSON overrides");
  train->add_option("--trace", trace_path, "JSONL training trace");
  train->add_option("--init-ckpt", init_ckpt, "checkpoint to continue from");

  auto* infer = app.add_subcommand("infer", "mat a sequence with a checkpoint");
  std::string ckpt;
  std::string in_dir;
  std::string infer_out;
  std::string init_spec = "oracle";
  std::string direction = "forward";
  std::string attn = "both";
  std::string update = "mask";
  infer->add_option("--ckpt", ckpt, "checkpoint path")->required();
  infer->add_option("--in", in_dir, "input sequence directory")->required();
  infer->add_option("--out", infer_out, "output alpha directory")->required();
  infer->add_option("--init", init_spec, "oracle | corrupted:R | file:path");
  infer->add_option("--direction", direction, "pass order")
      ->check(CLI::IsMember({"forward", "bi"}));
  infer->add_option("--ablate-attn", attn, "attention terms")
      ->check(CLI::IsMember({"both", "short", "long"}));
  infer->add_option("--ablate-update", update, "value embedding signal")
      ->check(CLI::IsMember({"mask", "alpha", "none"}));

  auto* eval = app.add_subcommand("eval", "score predictions against ground truth");
  std::string pred_dir;
  std::string gt_dir;
  std::string conn = "on";
  std::string metrics_out;
  eval->add_option("--pred", pred_dir, "prediction directory")->required();
  eval->add_option("--gt", gt_dir, "ground-truth directory")->required();
  eval->add_option("--conn", conn, "connectivity metric")->check(CLI::IsMember({"on", "off"}));
  eval->add_option("--out", metrics_out, "metrics JSON path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (synth->parsed()) return cli_detail::run_synth(seed, frames, size_text, mode, out_dir);
    if (train->parsed())
      return cli_detail::run_train(stage, ckpt_out, config_path, trace_path, init_ckpt);
    if (infer->parsed())
      return cli_detail::run_infer(ckpt, in_dir, infer_out, init_spec, direction, attn, update);
    if (eval->parsed()) return cli_detail::run_eval(pred_dir, gt_dir, conn == "on", metrics_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.kind() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace vmatt
