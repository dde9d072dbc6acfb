#pragma once

// Loopback prior service: implements the prior-service HTTP protocol with
// the in-process oracle, so the remote client is testable hermetically.
//
//   POST /v1/deblur  {image: b64-PNG, pose}            -> {image: b64-PNG}
//   POST /v1/repair  {image, reference, t0, pose}      -> {image}
//   GET  /v1/capabilities                              -> {deblur, repair, features}
//
// Errors: JSON {code, message}; 422 for malformed requests (message names
// the offending field), 404 for unknown routes.

#include <cstdint>
#include <memory>
#include <string>

#include "gsblur/camera.hpp"
#include "gsblur/scene.hpp"

namespace gsblur {

class OracleService {
 public:
  // sigma > 0 wraps the oracle in NoisyOracle(sigma, seed).
  OracleService(GaussianScene scene, CameraIntrinsics intr, double sigma = 0.0,
                std::uint64_t seed = 0);
  ~OracleService();

  // Blocks until stop(); returns false if the bind failed.
  bool listen(const std::string& host, int port);
  // Binds to an OS-chosen port and starts serving on a background thread.
  int listen_background(const std::string& host);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace gsblur
