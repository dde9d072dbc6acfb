#pragma once

// JSON (de)serialization for configuration structs: CLI config files,
// resolved-config snapshots, and artifact config hashes.

#include <json.hpp>

#include "gsblur/benchmark.hpp"
#include "gsblur/explore.hpp"
#include "gsblur/scene.hpp"
#include "gsblur/train.hpp"

namespace gsblur {

inline nlohmann::json recipe_to_json(const SceneRecipe& r) {
  return {{"seed", r.seed},
          {"count", r.count},
          {"layout", layout_to_string(r.layout)},
          {"colors", color_scheme_to_string(r.colors)},
          {"sh_degree", r.sh_degree}};
}

inline SceneRecipe recipe_from_json(const nlohmann::json& j) {
  SceneRecipe r;
  r.seed = j.value("seed", r.seed);
  r.count = j.value("count", r.count);
  if (j.contains("layout")) r.layout = layout_from_string(j["layout"]);
  if (j.contains("colors")) r.colors = color_scheme_from_string(j["colors"]);
  r.sh_degree = j.value("sh_degree", r.sh_degree);
  return r;
}

inline nlohmann::json explore_to_json(const ExplorationConfig& c) {
  return {{"s_min", c.s_min},
          {"s_max", c.s_max},
          {"candidates_per_pair", c.candidates_per_pair},
          {"extrapolation_margin", c.extrapolation_margin},
          {"literal_sign", c.literal_sign},
          {"t0", c.t0}};
}

inline ExplorationConfig explore_from_json(const nlohmann::json& j) {
  ExplorationConfig c;
  c.s_min = j.value("s_min", c.s_min);
  c.s_max = j.value("s_max", c.s_max);
  c.candidates_per_pair = j.value("candidates_per_pair", c.candidates_per_pair);
  c.extrapolation_margin = j.value("extrapolation_margin", c.extrapolation_margin);
  c.literal_sign = j.value("literal_sign", c.literal_sign);
  c.t0 = j.value("t0", c.t0);
  return c;
}

inline nlohmann::json train_config_to_json(const TrainConfig& c) {
  return {{"total_iters", c.total_iters},
          {"warmup_iters", c.warmup_iters},
          {"gen_interval", c.gen_interval},
          {"n_virtual", c.n_virtual},
          {"lambda_l1", c.lambda_l1},
          {"lambda_ssim", c.lambda_ssim},
          {"lambda_pr", c.lambda_pr},
          {"lambda_geo", c.lambda_geo},
          {"lambda_reg", c.lambda_reg},
          {"pose_lr_start", c.pose_lr_start},
          {"pose_lr_end", c.pose_lr_end},
          {"pose_start_iter", c.pose_start_iter},
          {"lr_position", c.lr_position},
          {"lr_sh", c.lr_sh},
          {"lr_opacity", c.lr_opacity},
          {"lr_scale", c.lr_scale},
          {"lr_rotation", c.lr_rotation},
          {"prune_opacity", c.prune_opacity},
          {"prune_interval", c.prune_interval},
          {"eval_interval", c.eval_interval},
          {"enable_pr", c.enable_pr},
          {"enable_explore", c.enable_explore},
          {"enable_reg", c.enable_reg},
          {"optimize_gaussians", c.optimize_gaussians},
          {"optimize_poses", c.optimize_poses},
          {"explore", explore_to_json(c.explore)},
          {"spacing", c.spacing == SampleSpacing::kInclusive ? "inclusive" : "open"},
          {"interp", c.interp == InterpMode::kCoupled ? "coupled" : "decoupled"},
          {"seed", c.seed}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.total_iters = j.value("total_iters", c.total_iters);
  c.warmup_iters = j.value("warmup_iters", c.warmup_iters);
  c.gen_interval = j.value("gen_interval", c.gen_interval);
  c.n_virtual = j.value("n_virtual", c.n_virtual);
  c.lambda_l1 = j.value("lambda_l1", c.lambda_l1);
  c.lambda_ssim = j.value("lambda_ssim", c.lambda_ssim);
  c.lambda_pr = j.value("lambda_pr", c.lambda_pr);
  c.lambda_geo = j.value("lambda_geo", c.lambda_geo);
  c.lambda_reg = j.value("lambda_reg", c.lambda_reg);
  c.pose_lr_start = j.value("pose_lr_start", c.pose_lr_start);
  c.pose_lr_end = j.value("pose_lr_end", c.pose_lr_end);
  c.pose_start_iter = j.value("pose_start_iter", c.pose_start_iter);
  c.lr_position = j.value("lr_position", c.lr_position);
  c.lr_sh = j.value("lr_sh", c.lr_sh);
  c.lr_opacity = j.value("lr_opacity", c.lr_opacity);
  c.lr_scale = j.value("lr_scale", c.lr_scale);
  c.lr_rotation = j.value("lr_rotation", c.lr_rotation);
  c.prune_opacity = j.value("prune_opacity", c.prune_opacity);
  c.prune_interval = j.value("prune_interval", c.prune_interval);
  c.eval_interval = j.value("eval_interval", c.eval_interval);
  c.enable_pr = j.value("enable_pr", c.enable_pr);
  c.enable_explore = j.value("enable_explore", c.enable_explore);
  c.enable_reg = j.value("enable_reg", c.enable_reg);
  c.optimize_gaussians = j.value("optimize_gaussians", c.optimize_gaussians);
  c.optimize_poses = j.value("optimize_poses", c.optimize_poses);
  if (j.contains("explore")) c.explore = explore_from_json(j["explore"]);
  if (j.value("spacing", "inclusive") == std::string("open"))
    c.spacing = SampleSpacing::kOpen;
  if (j.value("interp", "coupled") == std::string("decoupled"))
    c.interp = InterpMode::kDecoupled;
  c.seed = j.value("seed", c.seed);
  return c;
}

inline nlohmann::json spec_to_json(const BenchmarkSpec& s) {
  return {{"scene", recipe_to_json(s.scene)},
          {"traj", trajectory_to_string(s.traj)},
          {"exposure_amplitude", s.exposure_amplitude},
          {"frame_count", s.frame_count},
          {"image_size", s.image_size},
          {"focal_px", s.focal_px},
          {"n_train", s.n_train},
          {"train_indices", s.train_indices},
          {"n_dense", s.n_dense},
          {"init_count", s.init_count},
          {"pose_noise_rot_deg", s.pose_noise_rot_deg},
          {"pose_noise_trans_frac", s.pose_noise_trans_frac},
          {"seed", s.seed}};
}

inline BenchmarkSpec spec_from_json(const nlohmann::json& j) {
  BenchmarkSpec s;
  if (j.contains("scene")) s.scene = recipe_from_json(j["scene"]);
  if (j.contains("traj")) s.traj = trajectory_from_string(j["traj"]);
  s.exposure_amplitude = j.value("exposure_amplitude", s.exposure_amplitude);
  s.frame_count = j.value("frame_count", s.frame_count);
  s.image_size = j.value("image_size", s.image_size);
  s.focal_px = j.value("focal_px", s.focal_px);
  s.n_train = j.value("n_train", s.n_train);
  if (j.contains("train_indices"))
    s.train_indices = j["train_indices"].get<std::vector<int>>();
  s.n_dense = j.value("n_dense", s.n_dense);
  s.init_count = j.value("init_count", s.init_count);
  s.pose_noise_rot_deg = j.value("pose_noise_rot_deg", s.pose_noise_rot_deg);
  s.pose_noise_trans_frac =
      j.value("pose_noise_trans_frac", s.pose_noise_trans_frac);
  s.seed = j.value("seed", s.seed);
  return s;
}

}  // namespace gsblur
