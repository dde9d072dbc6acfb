#pragma once

#include <stdexcept>

namespace gsblur {

struct CameraIntrinsics {
  double fx = 0, fy = 0;  // pixels
  double cx = 0, cy = 0;  // pixels
  int width = 0, height = 0;
  double near_clip = 0.01, far_clip = 100.0;  // scene units

  void validate() const {
    if (fx <= 0 || fy <= 0)
      throw std::invalid_argument("CameraIntrinsics: focal lengths must be > 0");
    if (!(0 < near_clip && near_clip < far_clip))
      throw std::invalid_argument("CameraIntrinsics: need 0 < near < far");
    if (width < 8 || height < 8)
      throw std::invalid_argument("CameraIntrinsics: image must be >= 8x8");
  }

  // Simple centered pinhole for synthetic scenes.
  static CameraIntrinsics simple(int w, int h, double focal_px,
                                 double near = 0.05, double far = 100.0) {
    CameraIntrinsics k;
    k.fx = k.fy = focal_px;
    k.cx = w * 0.5;
    k.cy = h * 0.5;
    k.width = w;
    k.height = h;
    k.near_clip = near;
    k.far_clip = far;
    k.validate();
    return k;
  }
};

}  // namespace gsblur
