#include "gsblur/service.hpp"

#include <httplib.h>
#include <json.hpp>

#include <thread>

#include "gsblur/image_io.hpp"
#include "gsblur/json_conv.hpp"
#include "gsblur/priors.hpp"

namespace gsblur {

using nlohmann::json;

namespace {

void error_response(httplib::Response& res, int status, const std::string& msg) {
  res.status = status;
  res.set_content(json{{"code", status}, {"message", msg}}.dump(),
                  "application/json");
}

// Parses a required field, throwing with the field path on failure.
Image parse_image_field(const json& body, const std::string& field) {
  if (!body.contains(field))
    throw std::invalid_argument(field + ": missing required field");
  if (!body[field].is_string())
    throw std::invalid_argument(field + ": expected base64 string");
  try {
    return decode_png(base64_decode(body[field].get<std::string>()));
  } catch (const std::exception& e) {
    throw std::invalid_argument(field + ": " + e.what());
  }
}

PoseSE3 parse_pose_field(const json& body) {
  if (!body.contains("pose"))
    throw std::invalid_argument("pose: missing required field");
  try {
    return pose_from_json(body["pose"]);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("pose: ") + e.what());
  }
}

}  // namespace

struct OracleService::Impl {
  std::unique_ptr<PriorProvider> provider;
  httplib::Server server;
  std::thread worker;

  Impl(GaussianScene scene, CameraIntrinsics intr, double sigma,
       std::uint64_t seed) {
    if (sigma > 0.0)
      provider = std::make_unique<NoisyOracle>(std::move(scene), intr, sigma, seed);
    else
      provider = std::make_unique<GroundTruthOracle>(std::move(scene), intr);

    server.Get("/v1/capabilities", [this](const httplib::Request&,
                                          httplib::Response& res) {
      const Capabilities c = provider->capabilities();
      res.set_content(json{{"deblur", c.deblur},
                           {"repair", c.repair},
                           {"features", c.features}}
                          .dump(),
                      "application/json");
    });

    server.Post("/v1/deblur", [this](const httplib::Request& req,
                                     httplib::Response& res) {
      handle(req, res, [this](const json& body) {
        const Image img = parse_image_field(body, "image");
        const PoseSE3 pose = parse_pose_field(body);
        return provider->deblur(img, pose);
      });
    });

    server.Post("/v1/repair", [this](const httplib::Request& req,
                                     httplib::Response& res) {
      handle(req, res, [this](const json& body) {
        RepairRequest rr;
        rr.rendered = parse_image_field(body, "image");
        rr.reference = parse_image_field(body, "reference");
        if (!body.contains("t0"))
          throw std::invalid_argument("t0: missing required field");
        if (!body["t0"].is_number_integer() || body["t0"].get<int>() < 0)
          throw std::invalid_argument("t0: expected non-negative integer");
        rr.t0 = body["t0"].get<int>();
        rr.pose = parse_pose_field(body);
        if (!rr.rendered.same_shape(rr.reference))
          throw std::invalid_argument("reference: dimensions differ from image");
        return provider->repair(rr);
      });
    });
  }

  template <typename Fn>
  void handle(const httplib::Request& req, httplib::Response& res, Fn&& fn) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::parse_error& e) {
      error_response(res, 422, std::string("body: invalid JSON: ") + e.what());
      return;
    }
    try {
      const Image out = fn(body);
      res.set_content(json{{"image", base64_encode(encode_png(out))}}.dump(),
                      "application/json");
    } catch (const std::invalid_argument& e) {
      error_response(res, 422, e.what());
    } catch (const std::exception& e) {
      error_response(res, 500, e.what());
    }
  }
};

OracleService::OracleService(GaussianScene scene, CameraIntrinsics intr,
                             double sigma, std::uint64_t seed)
    : impl_(std::make_unique<Impl>(std::move(scene), intr, sigma, seed)) {}

OracleService::~OracleService() { stop(); }

bool OracleService::listen(const std::string& host, int port) {
  return impl_->server.listen(host, port);
}

int OracleService::listen_background(const std::string& host) {
  const int port = impl_->server.bind_to_any_port(host);
  if (port < 0) return port;
  impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port;
}

void OracleService::stop() {
  impl_->server.stop();
  if (impl_->worker.joinable()) impl_->worker.join();
}

}  // namespace gsblur
