#pragma once

// The dual-prior boundary: a provider answers deblur(image) and
// repair(image, reference) requests. Oracles are pure functions of
// (scene, pose, seed); the remote client speaks the HTTP protocol of the
// serve-oracle command.

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>

#include "gsblur/camera.hpp"
#include "gsblur/image.hpp"
#include "gsblur/lie.hpp"
#include "gsblur/rasterizer.hpp"
#include "gsblur/scene.hpp"

namespace gsblur {

struct Capabilities {
  bool deblur = false;
  bool repair = false;
  bool features = false;
};

struct RepairRequest {
  Image rendered;
  Image reference;
  PoseSE3 pose;   // viewpoint the fixed image should correspond to
  int t0 = 199;   // noise timestep forwarded to diffusion-backed providers
};

class UnsupportedOperation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Retryable transport failure (connection refused, timeout, 5xx).
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PriorProvider {
 public:
  virtual ~PriorProvider() = default;
  virtual std::string identity() const = 0;
  virtual Capabilities capabilities() const = 0;
  // Sharp estimate of a blurry observation; `midpoint_pose` declares the
  // pose the estimate should correspond to (the segment's temporal midpoint).
  virtual Image deblur(const Image& blurry, const PoseSE3& midpoint_pose) = 0;
  virtual Image repair(const RepairRequest& req) = 0;
};

// Perfect prior: renders the ground-truth scene at the requested pose.
class GroundTruthOracle : public PriorProvider {
 public:
  GroundTruthOracle(GaussianScene scene, CameraIntrinsics intr,
                    RenderOptions opts = {});
  std::string identity() const override { return "oracle"; }
  Capabilities capabilities() const override { return {true, true, false}; }
  Image deblur(const Image& blurry, const PoseSE3& midpoint_pose) override;
  Image repair(const RepairRequest& req) override;

 private:
  GaussianScene scene_;
  CameraIntrinsics intr_;
  RenderOptions opts_;
};

// Oracle plus zero-mean Gaussian pixel noise (unclamped, so the analytic
// PSNR = -20*log10(sigma) relation holds on unit-range images). The noise
// seed is derived from the request's pose/t0, making responses a pure
// function of the request.
class NoisyOracle : public PriorProvider {
 public:
  NoisyOracle(GaussianScene scene, CameraIntrinsics intr, double sigma,
              std::uint64_t seed = 0, RenderOptions opts = {});
  std::string identity() const override;
  Capabilities capabilities() const override { return {true, true, false}; }
  Image deblur(const Image& blurry, const PoseSE3& midpoint_pose) override;
  Image repair(const RepairRequest& req) override;

 private:
  Image add_noise(Image img, const PoseSE3& pose, int t0) const;
  GroundTruthOracle inner_;
  double sigma_;
  std::uint64_t seed_;
};

// JSON-over-HTTP client for the prior service protocol, with bounded
// retries and exponential backoff on transient failures.
class RemoteProvider : public PriorProvider {
 public:
  explicit RemoteProvider(std::string base_url, int timeout_sec = 10,
                          int max_attempts = 3);
  std::string identity() const override { return "remote:" + base_url_; }
  Capabilities capabilities() const override;
  Image deblur(const Image& blurry, const PoseSE3& midpoint_pose) override;
  Image repair(const RepairRequest& req) override;

 private:
  std::string post_image_request(const std::string& route,
                                 const std::string& body);
  std::string base_url_;
  std::string host_;
  int port_ = 80;
  int timeout_sec_;
  int max_attempts_;
};

// --provider {oracle|noisy:SIGMA|remote:URL}; oracle flavors need the
// ground-truth scene and intrinsics.
std::unique_ptr<PriorProvider> make_provider(const std::string& spec,
                                             const GaussianScene* gt_scene,
                                             const CameraIntrinsics* intr,
                                             std::uint64_t seed = 0);

}  // namespace gsblur
