#pragma once

// Synthetic benchmark pipeline: ground-truth scene + camera trajectory,
// dense-integration blur observations, sparse-view training splits with
// every-7th-frame holdout, dataset persistence, and evaluation.

#include <string>
#include <vector>

#include "gsblur/blur.hpp"
#include "gsblur/scene.hpp"
#include "gsblur/train.hpp"

namespace gsblur {

enum class TrajectoryFamily { kArc, kShake, kDolly };
TrajectoryFamily trajectory_from_string(const std::string& s);
std::string trajectory_to_string(TrajectoryFamily t);

struct BenchmarkSpec {
  SceneRecipe scene;  // ground truth
  TrajectoryFamily traj = TrajectoryFamily::kArc;
  // Exposure tangent as a fraction of the inter-frame trajectory motion;
  // 0 means sharp observations.
  double exposure_amplitude = 0.6;
  int frame_count = 30;
  int image_size = 64;
  double focal_px = 0;  // 0 => 1.2 * image_size
  int n_train = 3;      // K in {3, 6, 9}
  std::vector<int> train_indices;  // empty => defaults for n_train
  int n_dense = 200;    // observation-model integration samples
  int init_count = 0;   // initial-scene primitive count; 0 => scene.count
  double pose_noise_rot_deg = 1.0;      // training pose corruption
  double pose_noise_trans_frac = 0.005;  // fraction of scene extent
  std::uint64_t seed = 0;
};

// Full benchmark: the training Dataset plus ground truth for diagnostics.
struct Benchmark {
  BenchmarkSpec spec;
  Dataset dataset;
  GaussianScene gt_scene;
  std::vector<PoseSE3> mid;                  // per-frame gt midpoint
  std::vector<ExposureSegment> gt_segments;  // per-frame gt exposure
  std::vector<Image> sharp;    // gt midpoint renders, u8-quantized
  std::vector<Image> blurred;  // dense-integration observations, u8-quantized
};

// Default published 3-view selection is {5, 15, 25}; 6/9-view selections
// avoid the every-7th holdout frames.
std::vector<int> default_train_indices(int k, int frame_count);
std::vector<int> holdout_indices(int frame_count);  // 0, 7, 14, ...

// Camera-to-world pose with +z looking from eye toward target, +y down.
PoseSE3 look_at(const Vec3& eye, const Vec3& target);

Benchmark build_benchmark(const BenchmarkSpec& spec);

// Directory layout: images/blur_%04d.png, gt/sharp_%04d.png, cameras.json
// (intrinsics, per-frame poses, amplitude), split.json (train/test indices),
// plus scene/init snapshots so a reload reproduces the exact Dataset.
void write_benchmark(const std::string& dir, const Benchmark& b);
Benchmark read_benchmark(const std::string& dir);

std::string spec_hash(const BenchmarkSpec& spec);  // config hash for artifacts

struct EvalViewRow {
  int index = 0;  // frame id
  double psnr = 0, ssim = 0;
};

struct EvalReport {
  std::vector<EvalViewRow> views;
  double mean_psnr = 0, mean_ssim = 0;
  double hf_ratio_render = 0, hf_ratio_gt = 0;  // mean over test views
};

EvalReport evaluate_scene(const GaussianScene& scene, const Benchmark& b,
                          const RenderOptions& opts = {});

// Cumulative ablation stages: "baseline" (photometric only), "geo"
// (+exploration & geometric guidance), "deblur" (+perceptual prior),
// "depth"/"full" (+depth smoothness).
void apply_ablation_stage(TrainConfig& cfg, const std::string& stage);

}  // namespace gsblur
