#include "gsblur/priors.hpp"

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <thread>

#include "gsblur/image_io.hpp"
#include "gsblur/json_conv.hpp"
#include "gsblur/rng.hpp"

namespace gsblur {

using nlohmann::json;

GroundTruthOracle::GroundTruthOracle(GaussianScene scene, CameraIntrinsics intr,
                                     RenderOptions opts)
    : scene_(std::move(scene)), intr_(intr), opts_(opts) {}

Image GroundTruthOracle::deblur(const Image& blurry, const PoseSE3& pose) {
  (void)blurry;  // the oracle answers from the scene, not the observation
  return render(scene_, pose, intr_, opts_).color;
}

Image GroundTruthOracle::repair(const RepairRequest& req) {
  return render(scene_, req.pose, intr_, opts_).color;
}

NoisyOracle::NoisyOracle(GaussianScene scene, CameraIntrinsics intr,
                         double sigma, std::uint64_t seed, RenderOptions opts)
    : inner_(std::move(scene), intr, opts), sigma_(sigma), seed_(seed) {}

std::string NoisyOracle::identity() const {
  return "noisy:" + std::to_string(sigma_);
}

Image NoisyOracle::add_noise(Image img, const PoseSE3& pose, int t0) const {
  if (sigma_ <= 0.0) return img;
  // Seed from request content so identical requests get identical noise,
  // in-process or over the wire.
  const std::string key = pose_to_json(pose).dump() + "|" +
                          std::to_string(t0) + "|" + std::to_string(sigma_);
  Rng rng(fnv1a(key.data(), key.size(), 0xcbf29ce484222325ULL ^ seed_));
  for (auto& v : img.data) v = float(v + sigma_ * rng.normal());
  return img;
}

Image NoisyOracle::deblur(const Image& blurry, const PoseSE3& pose) {
  return add_noise(inner_.deblur(blurry, pose), pose, -1);
}

Image NoisyOracle::repair(const RepairRequest& req) {
  return add_noise(inner_.repair(req), req.pose, req.t0);
}

// ---------------------------------------------------------------------------
// Remote client
// ---------------------------------------------------------------------------

RemoteProvider::RemoteProvider(std::string base_url, int timeout_sec,
                               int max_attempts)
    : base_url_(std::move(base_url)),
      timeout_sec_(timeout_sec),
      max_attempts_(max_attempts) {
  std::string rest = base_url_;
  if (rest.rfind("http://", 0) == 0) rest = rest.substr(7);
  const auto slash = rest.find('/');
  if (slash != std::string::npos) rest = rest.substr(0, slash);
  const auto colon = rest.find(':');
  if (colon != std::string::npos) {
    host_ = rest.substr(0, colon);
    port_ = std::stoi(rest.substr(colon + 1));
  } else {
    host_ = rest;
  }
}

std::string RemoteProvider::post_image_request(const std::string& route,
                                               const std::string& body) {
  std::string last_err;
  for (int attempt = 0; attempt < max_attempts_; ++attempt) {
    if (attempt > 0)
      std::this_thread::sleep_for(std::chrono::milliseconds(100 << attempt));
    httplib::Client cli(host_, port_);
    cli.set_connection_timeout(timeout_sec_);
    cli.set_read_timeout(timeout_sec_);
    auto res = cli.Post(route, body, "application/json");
    if (!res) {
      last_err = "connection failure to " + host_ + ":" + std::to_string(port_);
      continue;
    }
    if (res->status == 200) return res->body;
    if (res->status >= 500 || res->status == 504) {
      last_err = route + " -> " + std::to_string(res->status);
      continue;  // retryable
    }
    // Client error: surface the service's message, no retry.
    std::string msg = route + " -> " + std::to_string(res->status);
    try {
      const json j = json::parse(res->body);
      msg += ": " + j.value("message", "");
    } catch (...) {
    }
    throw std::runtime_error("prior service error: " + msg);
  }
  throw TransportError("prior service unreachable after " +
                       std::to_string(max_attempts_) + " attempts: " + last_err);
}

Capabilities RemoteProvider::capabilities() const {
  httplib::Client cli(host_, port_);
  cli.set_connection_timeout(timeout_sec_);
  auto res = const_cast<httplib::Client&>(cli).Get("/v1/capabilities");
  if (!res || res->status != 200)
    throw TransportError("capabilities request failed");
  const json j = json::parse(res->body);
  return {j.value("deblur", false), j.value("repair", false),
          j.value("features", false)};
}

Image RemoteProvider::deblur(const Image& blurry, const PoseSE3& pose) {
  json body;
  body["image"] = base64_encode(encode_png(blurry));
  body["pose"] = pose_to_json(pose);
  const json resp = json::parse(post_image_request("/v1/deblur", body.dump()));
  return decode_png(base64_decode(resp.at("image").get<std::string>()));
}

Image RemoteProvider::repair(const RepairRequest& req) {
  json body;
  body["image"] = base64_encode(encode_png(req.rendered));
  body["reference"] = base64_encode(encode_png(req.reference));
  body["t0"] = req.t0;
  body["pose"] = pose_to_json(req.pose);
  const json resp = json::parse(post_image_request("/v1/repair", body.dump()));
  return decode_png(base64_decode(resp.at("image").get<std::string>()));
}

std::unique_ptr<PriorProvider> make_provider(const std::string& spec,
                                             const GaussianScene* gt_scene,
                                             const CameraIntrinsics* intr,
                                             std::uint64_t seed) {
  if (spec.rfind("remote:", 0) == 0)
    return std::make_unique<RemoteProvider>(spec.substr(7));
  if (!gt_scene || !intr)
    throw std::invalid_argument(
        "provider '" + spec + "' requires a ground-truth scene and intrinsics");
  if (spec == "oracle")
    return std::make_unique<GroundTruthOracle>(*gt_scene, *intr);
  if (spec.rfind("noisy:", 0) == 0)
    return std::make_unique<NoisyOracle>(*gt_scene, *intr,
                                         std::stod(spec.substr(6)), seed);
  throw std::invalid_argument("unknown provider spec: " + spec);
}

}  // namespace gsblur
