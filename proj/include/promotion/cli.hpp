/* Copyright 2026 The Promotion Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef PROMOTION_CLI_HPP_
#define PROMOTION_CLI_HPP_

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "promotion/promotion.hpp"

namespace promotion::cli {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline json blur_record(int center, const std::vector<double>& vars, const BlurReasoningVector& v) {
  return {{"center", center}, {"variances", vars}, {"weights", v.weights}};
}

inline RgbImage clamp01(RgbImage img) {
  for (double& v : img.values()) v = std::clamp(v, 0.0, 1.0);
  return img;
}

inline RgbImage center_crop(const RgbImage& img, int size) {
  if (img.rows() < size || img.cols() < size)
    throw DataError("frame smaller than crop size " + std::to_string(size));
  const int r0 = (img.rows() - size) / 2, c0 = (img.cols() - size) / 2;
  RgbImage out(size, size);
  for (int ch = 0; ch < 3; ++ch)
    for (int r = 0; r < size; ++r)
      for (int c = 0; c < size; ++c) out(ch, r, c) = img(ch, r0 + r, c0 + c);
  return out;
}

inline std::optional<FlowField> maybe_flow(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return read_flo(path);
}

}  // namespace detail

// Options shared by the subcommands; bound to CLI11 flags.
struct Options {
  std::string in, out, gt, pred, a, b, flow, checkpoint, config, pattern = "*.png";
  int block = 16, radius = 8, m = 8, up = 8;
  double gamma = 2.2;
  RunConfig run;
};

inline int cmd_priors(const Options& o, std::ostream& out) {
  auto seq = load_sequence(o.in, o.pattern);
  auto clips = window_clips(seq, kPriorDepth);
  auto flow = detail::maybe_flow(o.flow);
  std::string jsonl;
  for (int k = 0; k < static_cast<int>(clips.size()); ++k) {
    auto prepared = prepare_clip(clips[k], flow, o.block, o.radius);
    fs::path dir = fs::path(o.out) / frame_name(k).substr(0, 8);
    const char* names[] = {"contrast", "gradient", "motion"};
    for (int g = 0; g < kPriorGroups; ++g)
      for (int i = 0; i < kPriorDepth; ++i)
        write_png(dir / (std::string(names[g]) + "_" + std::to_string(i) + ".png"),
                  prepared.priors.group(g)[i]);
    write_png(dir / "attention.png", prepared.attention.values);
    jsonl += detail::blur_record(k, blur_variances(clips[k]), prepared.blur).dump() + "\n";
  }
  write_text_file(fs::path(o.out) / "blur.jsonl", jsonl);
  out << jsonl;
  return kExitOk;
}

inline int cmd_blurvec(const Options& o, std::ostream& out) {
  auto seq = load_sequence(o.in, o.pattern);
  auto clips = window_clips(seq, kPriorDepth);
  for (int k = 0; k < static_cast<int>(clips.size()); ++k) {
    auto vars = blur_variances(clips[k]);
    out << detail::blur_record(k, vars, blur_reasoning_from_variances(vars)).dump() << "\n";
  }
  return kExitOk;
}

inline int cmd_flow(const Options& o, std::ostream& out) {
  GrayMap a = to_gray(read_png(o.a));
  GrayMap b = to_gray(read_png(o.b));
  if (!a.same_shape(b))
    throw DataError("dimension mismatch between " + o.a + " and " + o.b);
  FlowField f = estimate_flow_coarse(a, b, o.block, o.radius);
  write_flo(o.out, f);
  out << json{{"rows", f.rows()}, {"cols", f.cols()}, {"out", o.out}}.dump() << "\n";
  return kExitOk;
}

inline int cmd_synth(const Options& o, std::ostream& out) {
  auto sharp = load_sequence(o.in, o.pattern);
  auto blurred = synthesize_blur(sharp, {o.up, o.m}, {o.gamma});
  save_sequence(o.out, blurred);
  out << json{{"frames", blurred.size()}, {"out", o.out}}.dump() << "\n";
  return kExitOk;
}

inline int cmd_metrics(const Options& o, std::ostream& out) {
  auto pred_files = list_frames(o.pred, o.pattern);
  auto gt_files = list_frames(o.gt, o.pattern);
  if (pred_files.empty()) throw DataError("no frames in " + o.pred);
  if (pred_files.size() != gt_files.size())
    throw DataError("frame count mismatch: " + std::to_string(pred_files.size()) + " vs " +
                    std::to_string(gt_files.size()));
  json per_frame = json::array();
  std::vector<double> ps, ss;
  for (std::size_t i = 0; i < pred_files.size(); ++i) {
    auto a = to_frame8(read_png(pred_files[i]));
    auto b = to_frame8(read_png(gt_files[i]));
    if (a.rows != b.rows || a.cols != b.cols)
      throw DataError("dimension mismatch in " + pred_files[i].filename().string());
    ps.push_back(psnr(a, b));
    ss.push_back(ssim(a, b));
    per_frame.push_back(
        {{"frame", pred_files[i].filename().string()}, {"psnr", ps.back()}, {"ssim", ss.back()}});
  }
  const double n = static_cast<double>(ps.size());
  json result{{"psnr_mean", compensated_sum(ps) / n},
              {"ssim_mean", compensated_sum(ss) / n},
              {"per_frame", per_frame}};
  if (!o.out.empty()) write_text_file(o.out, result.dump(2) + "\n");
  out << result.dump() << "\n";
  return kExitOk;
}

inline ModelConfig model_config(const RunConfig& rc) {
  return {static_cast<std::size_t>(rc.channels), static_cast<std::size_t>(rc.blocks),
          static_cast<std::size_t>(rc.reduction), rc.seed};
}

inline int cmd_train_toy(const Options& o, std::ostream& out) {
  const RunConfig& rc = o.run;
  rc.validate();
  if (rc.output.empty()) throw DataError("train-toy: --out is required");
  FrameSequence clip;
  RgbImage target;
  if (!rc.input.empty()) {
    if (o.gt.empty()) throw DataError("train-toy: --gt is required with --in");
    auto blurred = load_sequence(rc.input, o.pattern);
    auto sharp = load_sequence(o.gt, o.pattern);
    if (blurred.size() != sharp.size()) throw DataError("train-toy: --in/--gt frame counts differ");
    clip = window_clips(blurred, kPriorDepth)[blurred.center_index];
    for (auto& f : clip.frames) f = detail::center_crop(f, rc.crop);
    target = detail::center_crop(sharp.center(), rc.crop);
  } else {
    ToyScene scene = make_toy_scene(rc.crop, rc.seed);
    clip = scene.clip();
    target = scene.target();
  }
  const fs::path dir = rc.output;
  FrameSequence sharp_center;
  sharp_center.frames = {target};
  save_sequence(dir / "clip" / "blur", clip);
  save_sequence(dir / "clip" / "sharp", sharp_center);

  auto prepared = prepare_clip(clip, detail::maybe_flow(rc.flow_source == "file" ? rc.flow_path : ""),
                               rc.flow_block, rc.flow_radius);
  PromotionModel model(model_config(rc));
  TrainOptions opt;
  opt.steps = rc.steps;
  opt.step_size = rc.step_size;
  opt.optimizer = parse_optimizer(rc.optimizer);
  opt.weights = {rc.lambda, rc.epsilon};
  auto result = train_on_clip(model, prepared, target, opt);

  std::string csv = "step,total,charbonnier,perceptual\n";
  for (const auto& r : result.history)
    csv += std::to_string(r.step) + "," + detail::fmt_double(r.total) + "," +
           detail::fmt_double(r.charbonnier) + "," + detail::fmt_double(r.perceptual) + "\n";
  write_text_file(dir / "loss.csv", csv);
  nn::save_checkpoint(dir / "checkpoint.bin", model.checkpoint());

  const RgbImage restored = detail::clamp01(model.forward(clip, prepared.priors, prepared.blur));
  const double initial = result.history.empty() ? result.final.total : result.history.front().total;
  json summary{{"steps", rc.steps},
               {"optimizer", rc.optimizer},
               {"step_size", rc.step_size},
               {"initial_loss", initial},
               {"final_loss", result.final.total},
               {"loss_ratio", result.final.total / initial},
               {"psnr_input", psnr(clip.center(), target)},
               {"psnr_output", psnr(restored, target)}};
  write_text_file(dir / "summary.json", summary.dump(2) + "\n");
  out << summary.dump() << "\n";
  return kExitOk;
}

inline int cmd_infer(const Options& o, std::ostream& out) {
  auto model = PromotionModel::from_checkpoint(nn::load_checkpoint(o.checkpoint));
  auto seq = load_sequence(o.in, o.pattern);
  auto clips = window_clips(seq, kPriorDepth);
  auto flow = detail::maybe_flow(o.flow);
  FrameSequence restored;
  for (const auto& clip : clips) {
    auto prepared = prepare_clip(clip, flow, o.block, o.radius);
    restored.frames.push_back(detail::clamp01(model.forward(clip, prepared.priors, prepared.blur)));
  }
  save_sequence(o.out, restored);
  out << json{{"frames", restored.size()}, {"out", o.out}}.dump() << "\n";
  return kExitOk;
}

// Parses argv and runs one subcommand. Exit codes: 0 success, 1 usage
// error, 2 data error; diagnostics go to `err` as a single line.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Prior-guided multi-frame video deblurring toolkit", "promotion"};
  app.require_subcommand(1);
  Options o;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Random seed");
    sub->add_option("--pattern", o.pattern, "Frame filename glob")->capture_default_str();
  };
  auto add_flow_opts = [&](CLI::App* sub) {
    sub->add_option("--block", o.block, "Block size for coarse flow")->capture_default_str();
    sub->add_option("--radius", o.radius, "Search radius for coarse flow")->capture_default_str();
  };

  auto* priors = app.add_subcommand("priors", "Write prior maps and blur vectors per clip");
  priors->add_option("--in", o.in, "Frame directory")->required();
  priors->add_option("--out", o.out, "Output directory")->required();
  priors->add_option("--flow", o.flow, "Center-frame .flo used instead of the estimator");
  add_flow_opts(priors);
  add_common(priors);

  auto* blurvec = app.add_subcommand("blurvec", "Print Laplacian variances and blur weights");
  blurvec->add_option("--in", o.in, "Frame directory")->required();
  add_common(blurvec);

  auto* flow = app.add_subcommand("flow", "Estimate block-matching flow between two frames");
  flow->add_option("--a", o.a, "First frame (PNG)")->required();
  flow->add_option("--b", o.b, "Second frame (PNG)")->required();
  flow->add_option("--out", o.out, "Output .flo")->required();
  add_flow_opts(flow);
  add_common(flow);

  auto* synth = app.add_subcommand("synth", "Synthesize blurred frames from a sharp sequence");
  synth->add_option("--in", o.in, "Sharp frame directory")->required();
  synth->add_option("--out", o.out, "Blurred frame directory")->required();
  synth->add_option("--m", o.m, "Virtual frames averaged per output")->capture_default_str();
  synth->add_option("--up", o.up, "Virtual frames per frame interval")->capture_default_str();
  synth->add_option("--gamma", o.gamma, "Camera response gamma")->capture_default_str();
  add_common(synth);

  auto* metrics = app.add_subcommand("metrics", "PSNR/SSIM between two frame directories");
  metrics->add_option("--pred", o.pred, "Predicted frames")->required();
  metrics->add_option("--gt", o.gt, "Ground-truth frames")->required();
  metrics->add_option("--out", o.out, "Also write the JSON report here");
  add_common(metrics);

  auto* train = app.add_subcommand("train-toy", "Fit the model to one clip");
  train->add_option("--config", o.config, "key = value configuration file");
  auto* t_out = train->add_option("--out", o.out, "Output directory");
  auto* t_in = train->add_option("--in", o.in, "Blurred frames (default: synthesized scene)");
  train->add_option("--gt", o.gt, "Sharp frames matching --in");
  auto* t_steps = train->add_option("--steps", o.run.steps, "Training steps");
  auto* t_lr = train->add_option("--step-size", o.run.step_size, "Optimizer step size");
  auto* t_opt = train->add_option("--optimizer", o.run.optimizer, "adam | gd");
  auto* t_crop = train->add_option("--crop", o.run.crop, "Square crop / scene size");
  auto* t_lambda = train->add_option("--lambda", o.run.lambda, "Perceptual loss weight");
  auto* t_ch = train->add_option("--channels", o.run.channels, "Feature channels");
  auto* t_blocks = train->add_option("--blocks", o.run.blocks, "Channel-attention blocks");
  auto* t_red = train->add_option("--reduction", o.run.reduction, "Channel-attention reduction");
  auto* t_flow = train->add_option("--flow", o.flow, "Center-frame .flo for the clip");
  train->add_option("--seed", seed, "Random seed");
  train->add_option("--pattern", o.pattern, "Frame filename glob")->capture_default_str();

  auto* infer = app.add_subcommand("infer", "Deblur every frame of a sequence");
  infer->add_option("--checkpoint", o.checkpoint, "Checkpoint from train-toy")->required();
  infer->add_option("--in", o.in, "Blurred frame directory")->required();
  infer->add_option("--out", o.out, "Output directory")->required();
  infer->add_option("--flow", o.flow, "Center-frame .flo used for every clip");
  add_flow_opts(infer);
  add_common(infer);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "promotion: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (train->parsed()) {
      // Precedence: defaults < config file < explicit flags.
      RunConfig flags = o.run;
      o.run = o.config.empty() ? RunConfig{} : load_config(o.config);
      if (t_steps->count()) o.run.steps = flags.steps;
      if (t_lr->count()) o.run.step_size = flags.step_size;
      if (t_opt->count()) o.run.optimizer = flags.optimizer;
      if (t_crop->count()) o.run.crop = flags.crop;
      if (t_lambda->count()) o.run.lambda = flags.lambda;
      if (t_ch->count()) o.run.channels = flags.channels;
      if (t_blocks->count()) o.run.blocks = flags.blocks;
      if (t_red->count()) o.run.reduction = flags.reduction;
      if (t_out->count()) o.run.output = o.out;
      if (t_in->count()) o.run.input = o.in;
      if (t_flow->count()) {
        o.run.flow_source = "file";
        o.run.flow_path = o.flow;
      }
      if (train->get_option("--seed")->count()) o.run.seed = seed;
      return cmd_train_toy(o, out);
    }
    if (priors->parsed()) return cmd_priors(o, out);
    if (blurvec->parsed()) return cmd_blurvec(o, out);
    if (flow->parsed()) return cmd_flow(o, out);
    if (synth->parsed()) return cmd_synth(o, out);
    if (metrics->parsed()) return cmd_metrics(o, out);
    if (infer->parsed()) return cmd_infer(o, out);
  } catch (const std::exception& e) {
    err << "promotion: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

inline int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args);
}

}  // namespace promotion::cli

#endif  // PROMOTION_CLI_HPP_
