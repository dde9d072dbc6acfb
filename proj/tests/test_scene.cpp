#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <gsblur/camera.hpp>
#include <gsblur/rasterizer.hpp>
#include <gsblur/rng.hpp>
#include <gsblur/scene.hpp>
#include <gsblur/spectrum.hpp>

using namespace gsblur;

TEST_CASE("covariance closed forms") {
  // Identity rotation, unit scales -> identity.
  Gaussian g;
  CHECK((covariance(g) - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-14);

  // 90 degrees about z with scales (2,1,1): the long axis rotates onto y,
  // giving diag(1, 4, 1).
  g.rot = so3_exp(Vec3(0, 0, kPi / 2));
  g.log_scale = Vec3(std::log(2.0), 0, 0);
  const Mat3 c = covariance(g);
  Mat3 expected;
  expected << 1, 0, 0, 0, 4, 0, 0, 0, 1;
  CHECK((c - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("covariance eigenvalues are exp(2 log_scale)") {
  Rng rng(17);
  for (int i = 0; i < 20; ++i) {
    Gaussian g;
    g.log_scale =
        Vec3(rng.uniform(-2, 1), rng.uniform(-2, 1), rng.uniform(-2, 1));
    g.rot = so3_exp(Vec3(rng.normal(), rng.normal(), rng.normal()));
    Eigen::SelfAdjointEigenSolver<Mat3> es(covariance(g));
    Vec3 got = es.eigenvalues();
    Vec3 want = (2.0 * g.log_scale).array().exp();
    std::sort(want.data(), want.data() + 3);
    for (int k = 0; k < 3; ++k)
      CHECK(got[k] == doctest::Approx(want[k]).epsilon(1e-10));
  }
}

TEST_CASE("sh evaluation") {
  // Degree 0: constant c * Y00.
  Gaussian g;
  g.sh.setZero();
  g.sh(0, 0) = 2.0;
  const double y00 = 0.28209479177387814;
  Rng rng(4);
  for (int i = 0; i < 10; ++i) {
    Vec3 d(rng.normal(), rng.normal(), rng.normal());
    d.normalize();
    const Vec3 v = sh_eval(g, 0, d);
    CHECK(v[0] == doctest::Approx(2.0 * y00).epsilon(1e-14));
    CHECK(v[1] == doctest::Approx(0.0));
  }

  // Degree 1, only the z-linear band: antisymmetric under z negation.
  g.sh.setZero();
  g.sh(1, 2) = 1.0;  // Y1,0 ~ z
  const Vec3 d = Vec3(0.3, -0.2, 0.8).normalized();
  const Vec3 dm = Vec3(d.x(), d.y(), -d.z()).normalized();
  CHECK(sh_eval(g, 1, d)[1] == doctest::Approx(-sh_eval(g, 1, dm)[1]).epsilon(1e-13));

  // Random coefficients vs direct basis-polynomial evaluation.
  for (int i = 0; i < 20; ++i) {
    Gaussian h;
    for (int c = 0; c < 3; ++c)
      for (int k = 0; k < kShCoeffsMax; ++k) h.sh(c, k) = rng.normal();
    Vec3 dir(rng.normal(), rng.normal(), rng.normal());
    dir.normalize();
    const double y1 = 0.4886025119029199;  // sqrt(3/(4 pi))
    for (int c = 0; c < 3; ++c) {
      const double direct = h.sh(c, 0) * y00 - h.sh(c, 1) * y1 * dir.y() +
                            h.sh(c, 2) * y1 * dir.z() -
                            h.sh(c, 3) * y1 * dir.x();
      CHECK(sh_eval(h, 1, dir)[c] == doctest::Approx(direct).epsilon(1e-12));
    }
  }
}

TEST_CASE("sh basis jacobian matches finite differences") {
  const Vec3 d = Vec3(0.1, 0.7, -0.4).normalized();
  const auto jac = sh_basis_jacobian(1);
  const double h = 1e-7;
  for (int k = 0; k < 3; ++k) {
    Vec3 dp = d, dm = d;
    dp[k] += h;
    dm[k] -= h;
    const auto fd = (sh_basis(dp, 1) - sh_basis(dm, 1)) / (2.0 * h);
    for (int b = 0; b < kShCoeffsMax; ++b)
      CHECK(jac(b, k) == doctest::Approx(fd[b]).epsilon(1e-5));
  }
}

TEST_CASE("scene generation determinism and structure") {
  SceneRecipe one;
  one.seed = 1;
  one.count = 1;
  one.layout = SceneLayout::kBox;
  const GaussianScene s1 = generate_scene(one);
  REQUIRE(s1.gaussians.size() == 1);
  // A single box-layout primitive sits at the box center.
  CHECK(s1.gaussians[0].mu.norm() < 1e-12);

  SceneRecipe r;
  r.seed = 7;
  r.count = 500;
  r.layout = SceneLayout::kTexturedWall;
  const std::string a = scene_to_json(generate_scene(r));
  const std::string b = scene_to_json(generate_scene(r));
  CHECK(a == b);
}

TEST_CASE("textured wall renders with high-frequency content") {
  SceneRecipe r;
  r.seed = 7;
  r.count = 500;
  r.layout = SceneLayout::kTexturedWall;
  const GaussianScene scene = generate_scene(r);
  const CameraIntrinsics intr = CameraIntrinsics::simple(64, 64, 1.2 * 64);
  const PoseSE3 cam(Rotation(), Vec3(0, 0, -2.5));
  const Image img = render(scene, cam, intr).color;
  const SpectrumProfile sp = radial_spectrum(img);
  CHECK(sp.hf_ratio >= 0.2);
}

TEST_CASE("scene serialization round trip and errors") {
  SceneRecipe r;
  r.seed = 3;
  r.count = 25;
  const GaussianScene scene = generate_scene(r);
  const std::string text = scene_to_json(scene);
  const GaussianScene back = scene_from_json(text);
  CHECK(scene_to_json(back) == text);

  CHECK_THROWS_AS(scene_from_json("{\"gaussians\": 12}"), std::exception);
  CHECK_THROWS_AS(scene_from_json("not json"), std::exception);
  // Unsupported format version is reported explicitly.
  std::string bumped = text;
  const auto pos = bumped.find("\"version\":1");
  if (pos != std::string::npos) {
    bumped.replace(pos, 11, "\"version\":9");
    CHECK_THROWS_WITH_AS(scene_from_json(bumped),
                         doctest::Contains("version"), std::exception);
  }
}

TEST_CASE("bounding box") {
  GaussianScene s;
  Gaussian a, b;
  a.mu = Vec3(-1, 0, 2);
  b.mu = Vec3(3, -2, 5);
  s.gaussians = {a, b};
  const Aabb box = s.bounding_box();
  CHECK((box.min - Vec3(-1, -2, 2)).norm() < 1e-12);
  CHECK((box.max - Vec3(3, 0, 5)).norm() < 1e-12);
  CHECK(box.diagonal() == doctest::Approx(std::sqrt(16.0 + 4.0 + 9.0)));
}
