#pragma once

// Joint optimization loop: loss composition, schedules, Adam parameter
// groups, warm-up, exploration rounds, and generated-view buffer consumption.

#include <string>
#include <vector>

#include "gsblur/blur.hpp"
#include "gsblur/camera.hpp"
#include "gsblur/explore.hpp"
#include "gsblur/image.hpp"
#include "gsblur/priors.hpp"
#include "gsblur/scene.hpp"

namespace gsblur {

struct TrainConfig {
  int total_iters = 7000;
  int warmup_iters = 1500;
  int gen_interval = 200;   // exploration cadence after warm-up
  int n_virtual = 10;       // virtual poses per blur synthesis

  double lambda_l1 = 0.8;
  double lambda_ssim = 0.2;
  double lambda_pr = 0.01;
  double lambda_geo = 0.01;
  double lambda_reg = 0.1;

  double pose_lr_start = 5e-3;
  double pose_lr_end = 5e-5;
  // Pose updates begin here (0 = immediately). Letting poses move while the
  // scene is still unstructured makes them wander; delaying to the end of
  // the warm-up keeps joint optimization stable.
  int pose_start_iter = 0;
  double lr_position = 1.6e-4;  // multiplied by scene extent
  double lr_sh = 2.5e-3;
  double lr_opacity = 5e-2;
  double lr_scale = 5e-3;
  double lr_rotation = 1e-3;

  double prune_opacity = 0.005;
  int prune_interval = 500;
  int eval_interval = 500;

  bool enable_pr = true;       // perceptual loss vs cached deblurred targets
  bool enable_explore = true;  // exploration + L_geo on generated views
  bool enable_reg = true;      // depth TV on generated-view renders
  bool optimize_gaussians = true;
  bool optimize_poses = true;

  ExplorationConfig explore;
  SampleSpacing spacing = SampleSpacing::kInclusive;
  InterpMode interp = InterpMode::kCoupled;
  RenderOptions render;
  std::uint64_t seed = 0;
};

struct Dataset {
  CameraIntrinsics intr;
  GaussianScene init_scene;  // optimization starting point
  std::vector<Image> blurry;
  std::vector<PoseSE3> init_mid;  // initial midpoint pose per frame
  // Ground truth for diagnostics; may be empty.
  std::vector<PoseSE3> gt_start, gt_end;
  std::vector<Image> test_sharp;
  std::vector<PoseSE3> test_poses;
  std::vector<int> train_indices, test_indices;  // frame ids in the source trajectory
};

// mean(|dx D| + |dy D|) over pixels (forward differences); the adjoint is
// the exact TV subgradient with 0 at ties.
struct DepthReg {
  double value = 0.0;
  ImageD adjoint;
};
DepthReg depth_reg_loss(const Image& depth);

struct LossComponents {
  double blurry = 0.0, pr = 0.0, geo = 0.0, reg = 0.0;
  bool buffer_empty = true;  // geo/reg forced to zero while empty
};
double total_loss(const LossComponents& c, const TrainConfig& cfg);

struct MetricsRow {
  int iter = 0;
  double l_blurry = 0, l_pr = 0, l_geo = 0, l_reg = 0;
  bool evaluated = false;
  double heldout_psnr = 0, heldout_ssim = 0;
};

struct TrainReport {
  std::vector<MetricsRow> rows;
  double final_psnr = 0.0, final_ssim = 0.0;
  int explored_rounds = 0;
  int accepted_views = 0;
  int pruned_total = 0;
  int skipped_steps = 0;  // non-finite gradients
};

struct TrainResult {
  GaussianScene scene;
  std::vector<ExposureSegment> segments;
  TrainReport report;
};

// provider may be null when neither lambda_pr nor exploration is enabled
// (the photometric-only baseline); otherwise deblur capability is required
// up front (target caching is fatal on failure).
TrainResult train(const Dataset& data, const TrainConfig& cfg,
                  PriorProvider* provider);

// Pinned column order:
// iter,L_blurry,L_pr,L_geo,L_reg,heldout_psnr,heldout_ssim
// (heldout columns empty on rows without an evaluation).
std::string metrics_csv(const std::vector<MetricsRow>& rows);
void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRow>& rows);

}  // namespace gsblur
