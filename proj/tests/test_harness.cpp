#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <gsblur/benchmark.hpp>
#include <gsblur/config_json.hpp>
#include <gsblur/metrics.hpp>
#include <gsblur/spectrum.hpp>
#include <json.hpp>

using namespace gsblur;
namespace fs = std::filesystem;

namespace {

BenchmarkSpec small_spec(double amplitude = 1.0) {
  BenchmarkSpec spec;
  spec.scene.seed = 7;
  spec.scene.count = 100;
  spec.image_size = 32;
  spec.frame_count = 30;
  spec.exposure_amplitude = amplitude;
  spec.n_dense = 40;
  spec.seed = 5;
  return spec;
}

}  // namespace

TEST_CASE("train index defaults and holdout rule") {
  CHECK(default_train_indices(3, 30) == std::vector<int>{5, 15, 25});
  CHECK(holdout_indices(30) == std::vector<int>{0, 7, 14, 21, 28});
  // 6/9-view defaults avoid every holdout frame.
  for (int k : {6, 9}) {
    const auto train = default_train_indices(k, 30);
    REQUIRE(int(train.size()) == k);
    const auto hold = holdout_indices(30);
    for (int i : train)
      CHECK(std::find(hold.begin(), hold.end(), i) == hold.end());
  }
}

TEST_CASE("look_at geometry") {
  const Vec3 eye(0.5, -0.2, -2.5);
  const Vec3 target(0, 0, 0);
  const PoseSE3 pose = look_at(eye, target);
  CHECK((pose.translation - eye).norm() < 1e-12);
  // +z axis of the camera frame points from eye toward the target.
  const Vec3 fwd = pose.rotation * Vec3(0, 0, 1);
  CHECK((fwd - (target - eye).normalized()).norm() < 1e-9);
  // Rotation is orthonormal by construction.
  const Mat3 r = pose.rotation.matrix();
  CHECK((r * r.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("zero exposure amplitude gives sharp observations") {
  BenchmarkSpec spec = small_spec(0.0);
  spec.n_dense = 1;
  const Benchmark b = build_benchmark(spec);
  REQUIRE(b.blurred.size() == 30);
  for (std::size_t i = 0; i < b.blurred.size(); ++i)
    CHECK(b.blurred[i].data == b.sharp[i].data);
  // Static segments.
  for (const auto& seg : b.gt_segments)
    CHECK(pose_distance(seg.t_start, seg.t_end) < 1e-12);
}

TEST_CASE("exposure midpoint is the sharp frame pose") {
  const Benchmark b = build_benchmark(small_spec(2.0));
  for (std::size_t k = 0; k < b.mid.size(); ++k) {
    const PoseSE3 mid =
        interpolate_pose(b.gt_segments[k].t_start, b.gt_segments[k].t_end, 0.5);
    CHECK(pose_distance(mid, b.mid[k]) < 1e-9);
  }
}

TEST_CASE("stronger exposure lowers high-frequency content") {
  double prev = 2.0;
  for (double amplitude : {0.0, 1.0, 2.0, 4.0}) {
    BenchmarkSpec spec = small_spec(amplitude);
    spec.n_dense = amplitude == 0.0 ? 1 : 40;
    const Benchmark b = build_benchmark(spec);
    double hf = 0;
    for (const auto& img : b.blurred) hf += radial_spectrum(img).hf_ratio;
    hf /= double(b.blurred.size());
    CHECK(hf < prev);
    prev = hf;
  }
}

TEST_CASE("benchmark dataset slices are consistent") {
  const Benchmark b = build_benchmark(small_spec());
  REQUIRE(b.dataset.train_indices.size() == 3);
  REQUIRE(b.dataset.blurry.size() == 3);
  REQUIRE(b.dataset.init_mid.size() == 3);
  REQUIRE(b.dataset.test_indices.size() == 5);
  REQUIRE(b.dataset.test_sharp.size() == 5);
  for (std::size_t i = 0; i < 3; ++i) {
    const int idx = b.dataset.train_indices[i];
    CHECK(b.dataset.blurry[i].data == b.blurred[std::size_t(idx)].data);
  }
  // Corrupted initial poses differ from ground truth but stay close.
  for (std::size_t i = 0; i < 3; ++i) {
    const int idx = b.dataset.train_indices[i];
    const double d = pose_distance(b.dataset.init_mid[i], b.mid[std::size_t(idx)]);
    CHECK(d > 0.0);
    CHECK(d < 0.2);
  }
  // The initial scene is a corrupted guess, not the ground truth.
  CHECK(b.dataset.init_scene.gaussians.size() >= b.gt_scene.gaussians.size());
}

TEST_CASE("benchmark write/read round trip") {
  const Benchmark b = build_benchmark(small_spec());
  const fs::path dir = fs::temp_directory_path() / "gsblur_test_bench";
  fs::remove_all(dir);
  write_benchmark(dir.string(), b);
  CHECK(fs::exists(dir / "images" / "blur_0005.png"));
  CHECK(fs::exists(dir / "gt" / "sharp_0000.png"));
  CHECK(fs::exists(dir / "cameras.json"));
  CHECK(fs::exists(dir / "split.json"));

  const Benchmark r = read_benchmark(dir.string());
  CHECK(spec_hash(r.spec) == spec_hash(b.spec));
  CHECK(r.dataset.train_indices == b.dataset.train_indices);
  CHECK(r.dataset.test_indices == b.dataset.test_indices);
  // Images survive the u8 PNG round trip exactly.
  for (std::size_t i = 0; i < b.dataset.blurry.size(); ++i)
    CHECK(r.dataset.blurry[i].data == b.dataset.blurry[i].data);
  for (std::size_t i = 0; i < b.dataset.test_sharp.size(); ++i)
    CHECK(r.dataset.test_sharp[i].data == b.dataset.test_sharp[i].data);
  // Poses and scenes reload exactly enough to reproduce the dataset.
  for (std::size_t i = 0; i < b.dataset.init_mid.size(); ++i)
    CHECK(pose_distance(r.dataset.init_mid[i], b.dataset.init_mid[i]) < 1e-12);
  CHECK(scene_to_json(r.gt_scene) == scene_to_json(b.gt_scene));
  // The corrupted init scene holds quaternion products whose norm is one
  // only to the last ulp; reloading renormalizes, so compare numerically.
  REQUIRE(r.dataset.init_scene.gaussians.size() ==
          b.dataset.init_scene.gaussians.size());
  for (std::size_t i = 0; i < b.dataset.init_scene.gaussians.size(); ++i) {
    const Gaussian& ga = b.dataset.init_scene.gaussians[i];
    const Gaussian& gb = r.dataset.init_scene.gaussians[i];
    CHECK((ga.mu - gb.mu).norm() < 1e-12);
    CHECK((ga.log_scale - gb.log_scale).norm() < 1e-12);
    CHECK(ga.rot.approx_equal(gb.rot, 1e-12));
    CHECK(ga.opacity_logit == gb.opacity_logit);
    CHECK((ga.sh - gb.sh).cwiseAbs().maxCoeff() == 0.0);
  }
  fs::remove_all(dir);
}

TEST_CASE("spec hash is stable and sensitive") {
  const BenchmarkSpec a = small_spec();
  BenchmarkSpec c = small_spec();
  CHECK(spec_hash(a) == spec_hash(c));
  c.exposure_amplitude += 0.1;
  CHECK(spec_hash(a) != spec_hash(c));
  BenchmarkSpec d = small_spec();
  d.seed += 1;
  CHECK(spec_hash(a) != spec_hash(d));
}

TEST_CASE("evaluating the generating scene hits the quantization ceiling") {
  const Benchmark b = build_benchmark(small_spec());
  const EvalReport rep = evaluate_scene(b.gt_scene, b);
  CHECK(rep.mean_psnr == doctest::Approx(kPsnrClamp));
  CHECK(rep.mean_ssim == doctest::Approx(1.0).epsilon(1e-9));
  REQUIRE(rep.views.size() == 5);
  for (const auto& v : rep.views) CHECK(v.psnr == doctest::Approx(kPsnrClamp));
  CHECK(rep.hf_ratio_render ==
        doctest::Approx(rep.hf_ratio_gt).epsilon(1e-9));
}

TEST_CASE("ablation stages toggle the expected terms") {
  TrainConfig cfg;
  apply_ablation_stage(cfg, "baseline");
  CHECK_FALSE(cfg.enable_pr);
  CHECK_FALSE(cfg.enable_explore);
  CHECK_FALSE(cfg.enable_reg);

  apply_ablation_stage(cfg, "geo");
  CHECK_FALSE(cfg.enable_pr);
  CHECK(cfg.enable_explore);
  CHECK_FALSE(cfg.enable_reg);

  apply_ablation_stage(cfg, "deblur");
  CHECK(cfg.enable_pr);
  CHECK(cfg.enable_explore);
  CHECK_FALSE(cfg.enable_reg);

  apply_ablation_stage(cfg, "full");
  CHECK(cfg.enable_pr);
  CHECK(cfg.enable_explore);
  CHECK(cfg.enable_reg);

  TrainConfig depth;
  apply_ablation_stage(depth, "depth");
  CHECK(depth.enable_reg);

  CHECK_THROWS_AS(apply_ablation_stage(cfg, "bogus"), std::invalid_argument);
}

TEST_CASE("config json round trips") {
  TrainConfig cfg;
  cfg.total_iters = 1234;
  cfg.lambda_geo = 0.3;
  cfg.pose_start_iter = 600;
  cfg.explore.s_min = -1.0;
  cfg.seed = 42;
  const TrainConfig back = train_config_from_json(train_config_to_json(cfg));
  CHECK(back.total_iters == 1234);
  CHECK(back.lambda_geo == 0.3);
  CHECK(back.pose_start_iter == 600);
  CHECK(back.explore.s_min == -1.0);
  CHECK(back.seed == 42);

  const BenchmarkSpec spec = small_spec();
  const BenchmarkSpec sback = spec_from_json(spec_to_json(spec));
  CHECK(spec_hash(sback) == spec_hash(spec));
}

namespace {

// Minimal structural validator for the subset of JSON Schema the bundled
// report schema uses (type / required / properties / items).
bool validates(const nlohmann::json& schema, const nlohmann::json& value) {
  if (schema.contains("type")) {
    const std::string t = schema["type"];
    if (t == "object" && !value.is_object()) return false;
    if (t == "array" && !value.is_array()) return false;
    if (t == "string" && !value.is_string()) return false;
    if (t == "number" && !value.is_number()) return false;
    if (t == "integer" && !value.is_number_integer()) return false;
  }
  if (schema.contains("required"))
    for (const auto& key : schema["required"])
      if (!value.contains(key.get<std::string>())) return false;
  if (schema.contains("properties") && value.is_object())
    for (auto it = schema["properties"].begin(); it != schema["properties"].end();
         ++it)
      if (value.contains(it.key()) && !validates(it.value(), value[it.key()]))
        return false;
  if (schema.contains("items") && value.is_array())
    for (const auto& item : value)
      if (!validates(schema["items"], item)) return false;
  return true;
}

}  // namespace

TEST_CASE("eval report validates against the bundled schema") {
  const Benchmark b = build_benchmark(small_spec());
  const EvalReport rep = evaluate_scene(b.gt_scene, b);
  nlohmann::json views = nlohmann::json::array();
  for (const auto& v : rep.views)
    views.push_back({{"index", v.index}, {"psnr", v.psnr}, {"ssim", v.ssim}});
  const nlohmann::json report = {
      {"dataset_config_hash", spec_hash(b.spec)},
      {"runs",
       {{{"run", "gt"},
         {"mean_psnr", rep.mean_psnr},
         {"mean_ssim", rep.mean_ssim},
         {"hf_ratio_render", rep.hf_ratio_render},
         {"hf_ratio_gt", rep.hf_ratio_gt},
         {"views", views}}}}};

  std::ifstream in(std::string(GSBLUR_SOURCE_DIR) +
                   "/schemas/eval_report.schema.json");
  REQUIRE(in.good());
  nlohmann::json schema;
  in >> schema;
  CHECK(validates(schema, report));
  // The validator itself rejects malformed reports.
  nlohmann::json broken = report;
  broken.erase("runs");
  CHECK_FALSE(validates(schema, broken));
}
