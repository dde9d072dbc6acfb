#include <doctest.h>

#include <atomic>
#include <gsblur/blur.hpp>
#include <gsblur/image_io.hpp>
#include <gsblur/metrics.hpp>
#include <gsblur/priors.hpp>
#include <gsblur/rng.hpp>
#include <gsblur/scene.hpp>
#include <gsblur/service.hpp>
#include <httplib.h>
#include <json.hpp>
#include <thread>
#include <vector>

using namespace gsblur;

namespace {

struct Fixture {
  GaussianScene scene;
  CameraIntrinsics intr = CameraIntrinsics::simple(32, 32, 40.0);
  PoseSE3 cam{Rotation(), Vec3(0, 0, -2.5)};

  Fixture() {
    SceneRecipe r;
    r.seed = 7;
    r.count = 80;
    r.layout = SceneLayout::kTexturedWall;
    scene = generate_scene(r);
  }
};

}  // namespace

TEST_CASE("ground-truth oracle deblurs to the sharp render") {
  Fixture f;
  GroundTruthOracle oracle(f.scene, f.intr);
  CHECK(oracle.capabilities().deblur);
  CHECK(oracle.capabilities().repair);
  CHECK_FALSE(oracle.capabilities().features);

  // Static-camera blur: the oracle's deblur output is exactly the sharp
  // render at the requested midpoint.
  ExposureSegment seg;
  seg.t_start = seg.t_end = f.cam;
  seg.n = 5;
  const Image blurry = synthesize_blur(f.scene, seg, f.intr).color;
  const Image fixed = oracle.deblur(blurry, f.cam);
  const Image sharp = render(f.scene, f.cam, f.intr).color;
  CHECK(fixed.data == sharp.data);
}

TEST_CASE("noisy oracle analytic PSNR") {
  Fixture f;
  GroundTruthOracle gt(f.scene, f.intr);
  // sigma = 0 behaves exactly like the clean oracle.
  NoisyOracle zero(f.scene, f.intr, 0.0, 5);
  CHECK(zero.deblur(Image(32, 32, 3), f.cam).data ==
        gt.deblur(Image(32, 32, 3), f.cam).data);

  // sigma = 0.05 -> 26.02 dB +- 0.3 against the clean output.
  NoisyOracle noisy(f.scene, f.intr, 0.05, 5);
  const Image clean = gt.deblur(Image(32, 32, 3), f.cam);
  const Image out = noisy.deblur(Image(32, 32, 3), f.cam);
  CHECK(std::abs(psnr(clean, out) - 26.0205999) < 0.3);

  // Pure function of the request: repeating the call is bit-identical.
  const Image again = noisy.deblur(Image(32, 32, 3), f.cam);
  CHECK(out.data == again.data);

  // Different poses draw different noise.
  const PoseSE3 cam2(Rotation(), Vec3(0.01, 0, -2.5));
  CHECK(noisy.deblur(Image(32, 32, 3), cam2).data != out.data);
}

TEST_CASE("oracle repair of a converged render scores high") {
  Fixture f;
  GroundTruthOracle oracle(f.scene, f.intr);
  RepairRequest req;
  req.rendered = render(f.scene, f.cam, f.intr).color;  // converged by construction
  req.reference = req.rendered;
  req.pose = f.cam;
  CHECK(req.t0 == 199);  // default noise timestep
  const Image fixed = oracle.repair(req);
  CHECK(psnr(req.rendered, fixed) > 35.0);
}

TEST_CASE("make_provider parses the provider spec") {
  Fixture f;
  auto oracle = make_provider("oracle", &f.scene, &f.intr);
  CHECK(oracle->identity() == "oracle");
  auto noisy = make_provider("noisy:0.05", &f.scene, &f.intr, 3);
  CHECK(noisy->identity().find("noisy") != std::string::npos);
  auto remote = make_provider("remote:http://127.0.0.1:9", nullptr, nullptr);
  CHECK(remote->identity().rfind("remote:", 0) == 0);
  CHECK_THROWS_AS(make_provider("bogus", &f.scene, &f.intr),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_provider("oracle", nullptr, nullptr),
                  std::invalid_argument);
}

TEST_CASE("remote provider transport failure is retryable error") {
  RemoteProvider remote("http://127.0.0.1:9", /*timeout_sec=*/1,
                        /*max_attempts=*/2);
  CHECK_THROWS_AS(remote.capabilities(), TransportError);
  CHECK_THROWS_AS(remote.deblur(Image(16, 16, 3), PoseSE3()), TransportError);
}

TEST_CASE("loopback service bit-exact with in-process oracle") {
  Fixture f;
  OracleService service(f.scene, f.intr);
  const int port = service.listen_background("127.0.0.1");
  REQUIRE(port > 0);
  RemoteProvider remote("http://127.0.0.1:" + std::to_string(port));
  GroundTruthOracle local(f.scene, f.intr);

  const Capabilities caps = remote.capabilities();
  CHECK(caps.deblur);
  CHECK(caps.repair);
  CHECK_FALSE(caps.features);

  Rng rng(99);
  for (int i = 0; i < 50; ++i) {
    // Random nearby pose; payload images are u8-quantized so the PNG round
    // trip is lossless and equality is exact.
    const PoseSE3 pose(so3_exp(Vec3(rng.normal(), rng.normal(), rng.normal()) * 0.02),
                       Vec3(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1),
                            -2.5 + rng.uniform(-0.2, 0.2)));
    Image payload(32, 32, 3);
    for (auto& v : payload.data) v = float(rng.uniform());
    payload = quantize_u8(payload);
    if (i % 2 == 0) {
      const Image a = remote.deblur(payload, pose);
      const Image b = quantize_u8(local.deblur(payload, pose));
      CHECK(a.data == b.data);
    } else {
      RepairRequest req;
      req.rendered = payload;
      req.reference = payload;
      req.pose = pose;
      const Image a = remote.repair(req);
      const Image b = quantize_u8(local.repair(req));
      CHECK(a.data == b.data);
    }
  }
  service.stop();
}

TEST_CASE("concurrent requests are independent and correct") {
  Fixture f;
  OracleService service(f.scene, f.intr);
  const int port = service.listen_background("127.0.0.1");
  REQUIRE(port > 0);
  GroundTruthOracle local(f.scene, f.intr);

  std::vector<PoseSE3> poses;
  std::vector<Image> expected;
  for (int i = 0; i < 16; ++i) {
    const PoseSE3 pose(Rotation(), Vec3(0.01 * i, 0, -2.5));
    poses.push_back(pose);
    expected.push_back(quantize_u8(local.deblur(Image(32, 32, 3), pose)));
  }

  std::atomic<int> ok{0};
  std::vector<std::thread> threads;
  for (int i = 0; i < 16; ++i) {
    threads.emplace_back([&, i] {
      try {
        RemoteProvider remote("http://127.0.0.1:" + std::to_string(port));
        const Image out =
            remote.deblur(quantize_u8(Image(32, 32, 3)), poses[std::size_t(i)]);
        if (out.data == expected[std::size_t(i)].data) ++ok;
      } catch (...) {
      }
    });
  }
  for (auto& t : threads) t.join();
  CHECK(ok.load() == 16);
  service.stop();
}

TEST_CASE("malformed requests yield 422 naming the field; unknown routes 404") {
  Fixture f;
  OracleService service(f.scene, f.intr);
  const int port = service.listen_background("127.0.0.1");
  REQUIRE(port > 0);
  httplib::Client cli("127.0.0.1", port);

  // Missing image field.
  auto res = cli.Post("/v1/deblur", "{\"pose\": null}", "application/json");
  REQUIRE(res);
  CHECK(res->status == 422);
  auto body = nlohmann::json::parse(res->body);
  CHECK(body["message"].get<std::string>().find("image") != std::string::npos);

  // Invalid base64 payload.
  res = cli.Post("/v1/deblur", "{\"image\": \"!!!\", \"pose\": {}}",
                 "application/json");
  REQUIRE(res);
  CHECK(res->status == 422);

  // Repair without a reference names the reference field.
  {
    const Image img = quantize_u8(Image(16, 16, 3));
    nlohmann::json req;
    req["image"] = base64_encode(encode_png(img));
    res = cli.Post("/v1/repair", req.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 422);
    body = nlohmann::json::parse(res->body);
    CHECK(body["message"].get<std::string>().find("reference") !=
          std::string::npos);
  }

  // Unknown route.
  res = cli.Get("/v1/nonexistent");
  REQUIRE(res);
  CHECK(res->status == 404);

  // Non-JSON body.
  res = cli.Post("/v1/deblur", "garbage", "application/json");
  REQUIRE(res);
  CHECK(res->status == 422);

  service.stop();
}

TEST_CASE("noisy oracle through the service matches in-process noisy oracle") {
  Fixture f;
  const double sigma = 0.05;
  OracleService service(f.scene, f.intr, sigma, /*seed=*/11);
  const int port = service.listen_background("127.0.0.1");
  REQUIRE(port > 0);
  RemoteProvider remote("http://127.0.0.1:" + std::to_string(port));
  NoisyOracle local(f.scene, f.intr, sigma, 11);
  const Image remote_out = remote.deblur(quantize_u8(Image(32, 32, 3)), f.cam);
  const Image local_out = quantize_u8(local.deblur(Image(32, 32, 3), f.cam));
  CHECK(remote_out.data == local_out.data);
  service.stop();
}
