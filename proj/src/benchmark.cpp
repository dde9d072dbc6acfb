#include "gsblur/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "gsblur/config_json.hpp"
#include "gsblur/image_io.hpp"
#include "gsblur/json_conv.hpp"
#include "gsblur/metrics.hpp"
#include "gsblur/rng.hpp"
#include "gsblur/spectrum.hpp"

namespace gsblur {

namespace fs = std::filesystem;
using nlohmann::json;

TrajectoryFamily trajectory_from_string(const std::string& s) {
  if (s == "arc") return TrajectoryFamily::kArc;
  if (s == "shake") return TrajectoryFamily::kShake;
  if (s == "dolly") return TrajectoryFamily::kDolly;
  throw std::invalid_argument("unknown trajectory family: " + s);
}

std::string trajectory_to_string(TrajectoryFamily t) {
  switch (t) {
    case TrajectoryFamily::kArc: return "arc";
    case TrajectoryFamily::kShake: return "shake";
    case TrajectoryFamily::kDolly: return "dolly";
  }
  return "?";
}

std::vector<int> holdout_indices(int frame_count) {
  std::vector<int> out;
  for (int i = 0; i < frame_count; i += 7) out.push_back(i);
  return out;
}

std::vector<int> default_train_indices(int k, int frame_count) {
  std::vector<int> out;
  switch (k) {
    case 3: out = {5, 15, 25}; break;
    case 6: out = {3, 8, 13, 18, 23, 27}; break;
    case 9: out = {1, 4, 8, 11, 15, 18, 22, 25, 29}; break;
    default:
      throw std::invalid_argument("default_train_indices: k must be 3, 6 or 9");
  }
  for (int i : out)
    if (i >= frame_count)
      throw std::invalid_argument(
          "default_train_indices: frame count too small for selection");
  return out;
}

PoseSE3 look_at(const Vec3& eye, const Vec3& target) {
  const Vec3 fwd = (target - eye).normalized();
  Vec3 down(0, 1, 0);  // +y down in camera frame
  if (std::abs(down.dot(fwd)) > 0.999) down = Vec3(0, 0, 1);
  const Vec3 right = down.cross(fwd).normalized();
  const Vec3 y = fwd.cross(right);
  Mat3 r;
  r.col(0) = right;
  r.col(1) = y;
  r.col(2) = fwd;
  return PoseSE3(Rotation(r), eye);
}

namespace {

std::vector<PoseSE3> trajectory_poses(const BenchmarkSpec& spec,
                                      double distance) {
  std::vector<PoseSE3> mids;
  Rng rng(spec.seed ^ 0x7472616a5f726e67ULL);
  const int n = spec.frame_count;
  for (int k = 0; k < n; ++k) {
    const double t = n > 1 ? double(k) / (n - 1) : 0.5;
    switch (spec.traj) {
      case TrajectoryFamily::kArc: {
        const double phi = -0.35 + 0.7 * t;
        const Vec3 eye(distance * std::sin(phi), 0.25 * std::sin(2.0 * phi),
                       -distance * std::cos(phi));
        mids.push_back(look_at(eye, Vec3::Zero()));
        break;
      }
      case TrajectoryFamily::kDolly: {
        const Vec3 eye(0.15 * std::sin(4.0 * t), 0.0,
                       -(distance + 0.6 - 1.2 * t));
        mids.push_back(look_at(eye, Vec3::Zero()));
        break;
      }
      case TrajectoryFamily::kShake: {
        const Vec3 eye(0.04 * distance * rng.normal(),
                       0.04 * distance * rng.normal(),
                       -distance + 0.04 * distance * rng.normal());
        mids.push_back(look_at(eye, Vec3(0.02 * rng.normal(),
                                         0.02 * rng.normal(), 0.0)));
        break;
      }
    }
  }
  return mids;
}

}  // namespace

Benchmark build_benchmark(const BenchmarkSpec& spec) {
  if (spec.frame_count < 2)
    throw std::invalid_argument("build_benchmark: need >= 2 frames");
  Benchmark b;
  b.spec = spec;
  b.gt_scene = generate_scene(spec.scene);

  const double distance = 2.5;
  const int size = spec.image_size;
  const double focal = spec.focal_px > 0 ? spec.focal_px : 1.2 * size;
  b.dataset.intr = CameraIntrinsics::simple(size, size, focal);

  b.mid = trajectory_poses(spec, distance);

  // Exposure segment: the frame's midpoint extended by +-amplitude/2 of the
  // local inter-frame eye motion, deliberately without the look-at
  // re-aiming (an uncompensated pan), plus a partial rotational component.
  // Fully compensated orbital motion would leave the image nearly static.
  const int n = spec.frame_count;
  b.gt_segments.resize(std::size_t(n));
  for (int k = 0; k < n; ++k) {
    const int a = std::max(0, k - 1), c = std::min(n - 1, k + 1);
    const PoseSE3& mid = b.mid[std::size_t(k)];
    const TangentSE3 rel = se3_log(b.mid[std::size_t(a)].inverse() *
                                   b.mid[std::size_t(c)]);
    const Vec3 eye_step = b.mid[std::size_t(c)].translation -
                          b.mid[std::size_t(a)].translation;
    const double scale = spec.exposure_amplitude / double(c - a);
    TangentSE3 half;
    half.omega = 0.15 * scale * rel.omega;
    half.nu = mid.rotation.inverse() * (0.5 * scale * eye_step);
    ExposureSegment& seg = b.gt_segments[std::size_t(k)];
    seg.t_start = mid * se3_exp(TangentSE3(-half.omega, -half.nu));
    seg.t_end = mid * se3_exp(half);
    seg.n = spec.n_dense;
  }

  // Render observations: sharp at the midpoint, blur by dense integration.
  b.sharp.resize(std::size_t(n));
  b.blurred.resize(std::size_t(n));
  for (int k = 0; k < n; ++k) {
    b.sharp[std::size_t(k)] = quantize_u8(
        render(b.gt_scene, b.mid[std::size_t(k)], b.dataset.intr).color);
    if (spec.exposure_amplitude == 0.0) {
      b.blurred[std::size_t(k)] = b.sharp[std::size_t(k)];
    } else {
      b.blurred[std::size_t(k)] = quantize_u8(
          synthesize_blur(b.gt_scene, b.gt_segments[std::size_t(k)],
                          b.dataset.intr)
              .color);
    }
  }

  // Split: sparse training selection, every-7th holdout.
  b.dataset.train_indices = spec.train_indices.empty()
                                ? default_train_indices(spec.n_train, n)
                                : spec.train_indices;
  b.dataset.test_indices = holdout_indices(n);
  for (int i : b.dataset.train_indices) {
    if (i < 0 || i >= n)
      throw std::invalid_argument("build_benchmark: train index out of range");
    for (int t : b.dataset.test_indices)
      if (t == i)
        throw std::invalid_argument(
            "build_benchmark: train index collides with holdout frame");
  }

  // Training views with corrupted pose initialization.
  Rng rng(spec.seed ^ 0x696e69745f726e67ULL);
  const double extent = std::max(b.gt_scene.extent(), 1e-6);
  const double rot_mag = spec.pose_noise_rot_deg * kPi / 180.0;
  const double trans_mag = spec.pose_noise_trans_frac * extent;
  for (int i : b.dataset.train_indices) {
    b.dataset.blurry.push_back(b.blurred[std::size_t(i)]);
    Vec3 ax(rng.normal(), rng.normal(), rng.normal());
    if (ax.norm() < 1e-12) ax = Vec3(1, 0, 0);
    const TangentSE3 noise(
        ax.normalized() * rng.uniform(0.0, rot_mag),
        Vec3(rng.normal(), rng.normal(), rng.normal()).normalized() *
            rng.uniform(0.0, trans_mag));
    b.dataset.init_mid.push_back(se3_exp(noise) * b.mid[std::size_t(i)]);
    b.dataset.gt_start.push_back(b.gt_segments[std::size_t(i)].t_start);
    b.dataset.gt_end.push_back(b.gt_segments[std::size_t(i)].t_end);
  }
  for (int i : b.dataset.test_indices) {
    b.dataset.test_sharp.push_back(b.sharp[std::size_t(i)]);
    b.dataset.test_poses.push_back(b.mid[std::size_t(i)]);
  }

  // Initial scene: uniform primitives inside the padded ground-truth box,
  // neutral gray, modest opacity.
  {
    const Aabb box = b.gt_scene.bounding_box();
    const Vec3 pad = 0.1 * box.extent() + Vec3::Constant(1e-3);
    const Vec3 lo = box.min - pad, hi = box.max + pad;
    // Default to 2x the ground-truth count: with fixed-count optimization
    // (no densification) the overparameterized start fits markedly better.
    const int count =
        spec.init_count > 0 ? spec.init_count : 2 * spec.scene.count;
    Rng srng(spec.seed ^ 0x7363656e655f696eULL);
    GaussianScene init;
    init.sh_degree = spec.scene.sh_degree;
    const double s0 = 0.04 * extent;
    for (int i = 0; i < count; ++i) {
      Gaussian g;
      for (int d = 0; d < 3; ++d) g.mu[d] = srng.uniform(lo[d], hi[d]);
      g.log_scale = Vec3::Constant(std::log(s0 * srng.uniform(0.6, 1.4)));
      Vec3 ax(srng.normal(), srng.normal(), srng.normal());
      if (ax.norm() > 1e-9) g.rot = so3_exp(ax.normalized() * srng.uniform(0.0, kPi));
      g.opacity_logit = -1.0;  // sigmoid ~ 0.27
      for (int ch = 0; ch < 3; ++ch)
        g.sh(ch, 0) = (0.5 + srng.uniform(-0.1, 0.1)) / 0.28209479177387814;
      init.gaussians.push_back(g);
    }
    b.dataset.init_scene = std::move(init);
  }
  return b;
}

std::string spec_hash(const BenchmarkSpec& spec) {
  const std::string s = spec_to_json(spec).dump();
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(s.data(), s.size())));
  return buf;
}

void write_benchmark(const std::string& dir, const Benchmark& b) {
  fs::create_directories(fs::path(dir) / "images");
  fs::create_directories(fs::path(dir) / "gt");
  char name[64];
  for (std::size_t k = 0; k < b.blurred.size(); ++k) {
    std::snprintf(name, sizeof(name), "blur_%04d.png", int(k));
    write_png((fs::path(dir) / "images" / name).string(), b.blurred[k]);
    std::snprintf(name, sizeof(name), "sharp_%04d.png", int(k));
    write_png((fs::path(dir) / "gt" / name).string(), b.sharp[k]);
  }
  const std::string hash = spec_hash(b.spec);

  json cams;
  cams["config_hash"] = hash;
  cams["intrinsics"] = intrinsics_to_json(b.dataset.intr);
  cams["exposure_amplitude"] = b.spec.exposure_amplitude;
  json frames = json::array();
  for (std::size_t k = 0; k < b.mid.size(); ++k) {
    frames.push_back({{"mid", pose_to_json(b.mid[k])},
                      {"start", pose_to_json(b.gt_segments[k].t_start)},
                      {"end", pose_to_json(b.gt_segments[k].t_end)}});
  }
  cams["frames"] = std::move(frames);
  std::ofstream((fs::path(dir) / "cameras.json").string()) << cams.dump(2);

  json split;
  split["config_hash"] = hash;
  split["train"] = b.dataset.train_indices;
  split["test"] = b.dataset.test_indices;
  std::ofstream((fs::path(dir) / "split.json").string()) << split.dump(2);

  json spec = spec_to_json(b.spec);
  spec["config_hash"] = hash;
  std::ofstream((fs::path(dir) / "spec.json").string()) << spec.dump(2);

  save_scene((fs::path(dir) / "scene_gt.json").string(), b.gt_scene);
  save_scene((fs::path(dir) / "scene_init.json").string(),
             b.dataset.init_scene);

  json init_poses = json::array();
  for (const auto& p : b.dataset.init_mid) init_poses.push_back(pose_to_json(p));
  std::ofstream((fs::path(dir) / "poses_init.json").string())
      << json{{"config_hash", hash}, {"mid", init_poses}}.dump(2);
}

Benchmark read_benchmark(const std::string& dir) {
  auto load_json = [&](const std::string& name) {
    std::ifstream f((fs::path(dir) / name).string());
    if (!f) throw std::runtime_error("dataset: missing " + name);
    json j;
    f >> j;
    return j;
  };
  Benchmark b;
  b.spec = spec_from_json(load_json("spec.json"));
  const json cams = load_json("cameras.json");
  const json split = load_json("split.json");
  b.dataset.intr = intrinsics_from_json(cams.at("intrinsics"));
  for (const auto& f : cams.at("frames")) {
    b.mid.push_back(pose_from_json(f.at("mid")));
    ExposureSegment seg;
    seg.t_start = pose_from_json(f.at("start"));
    seg.t_end = pose_from_json(f.at("end"));
    seg.n = b.spec.n_dense;
    b.gt_segments.push_back(seg);
  }
  const int n = int(b.mid.size());
  char name[64];
  for (int k = 0; k < n; ++k) {
    std::snprintf(name, sizeof(name), "blur_%04d.png", k);
    b.blurred.push_back(read_png((fs::path(dir) / "images" / name).string()));
    std::snprintf(name, sizeof(name), "sharp_%04d.png", k);
    b.sharp.push_back(read_png((fs::path(dir) / "gt" / name).string()));
  }
  b.gt_scene = load_scene((fs::path(dir) / "scene_gt.json").string());
  b.dataset.init_scene =
      load_scene((fs::path(dir) / "scene_init.json").string());
  b.dataset.train_indices = split.at("train").get<std::vector<int>>();
  b.dataset.test_indices = split.at("test").get<std::vector<int>>();
  const json ip = load_json("poses_init.json");
  for (const auto& p : ip.at("mid"))
    b.dataset.init_mid.push_back(pose_from_json(p));
  for (std::size_t i = 0; i < b.dataset.train_indices.size(); ++i) {
    const int idx = b.dataset.train_indices[i];
    b.dataset.blurry.push_back(b.blurred[std::size_t(idx)]);
    b.dataset.gt_start.push_back(b.gt_segments[std::size_t(idx)].t_start);
    b.dataset.gt_end.push_back(b.gt_segments[std::size_t(idx)].t_end);
  }
  for (int idx : b.dataset.test_indices) {
    b.dataset.test_sharp.push_back(b.sharp[std::size_t(idx)]);
    b.dataset.test_poses.push_back(b.mid[std::size_t(idx)]);
  }
  return b;
}

EvalReport evaluate_scene(const GaussianScene& scene, const Benchmark& b,
                          const RenderOptions& opts) {
  EvalReport rep;
  double hf_r = 0, hf_g = 0;
  for (std::size_t t = 0; t < b.dataset.test_poses.size(); ++t) {
    // Quantize to match the stored ground truth so evaluating the exact
    // generating scene reports the quantization-limited ceiling.
    const Image r = quantize_u8(
        render(scene, b.dataset.test_poses[t], b.dataset.intr, opts).color);
    EvalViewRow row;
    row.index = b.dataset.test_indices[t];
    row.psnr = psnr(r, b.dataset.test_sharp[t]);
    row.ssim = ssim(r, b.dataset.test_sharp[t]).value;
    rep.mean_psnr += row.psnr;
    rep.mean_ssim += row.ssim;
    hf_r += radial_spectrum(r).hf_ratio;
    hf_g += radial_spectrum(b.dataset.test_sharp[t]).hf_ratio;
    rep.views.push_back(row);
  }
  const double inv = 1.0 / std::max<std::size_t>(1, rep.views.size());
  rep.mean_psnr *= inv;
  rep.mean_ssim *= inv;
  rep.hf_ratio_render = hf_r * inv;
  rep.hf_ratio_gt = hf_g * inv;
  return rep;
}

void apply_ablation_stage(TrainConfig& cfg, const std::string& stage) {
  if (stage == "baseline") {
    cfg.enable_pr = false;
    cfg.enable_explore = false;
    cfg.enable_reg = false;
  } else if (stage == "geo") {
    cfg.enable_pr = false;
    cfg.enable_explore = true;
    cfg.enable_reg = false;
  } else if (stage == "deblur") {
    cfg.enable_pr = true;
    cfg.enable_explore = true;
    cfg.enable_reg = false;
  } else if (stage == "depth" || stage == "full") {
    cfg.enable_pr = true;
    cfg.enable_explore = true;
    cfg.enable_reg = true;
  } else {
    throw std::invalid_argument("unknown ablation stage: " + stage);
  }
}

}  // namespace gsblur
