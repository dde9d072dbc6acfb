#pragma once

#include <cassert>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace gsblur {

// Dense row-major H x W x C image. Values are nominally in [0,1] for color
// but the container itself is unconstrained (depth maps, adjoints, ...).
template <typename T>
struct ImageT {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<T> data;

  ImageT() = default;
  ImageT(int w, int h, int c, T fill = T(0))
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * h * c, fill) {}

  T& at(int x, int y, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  const T& at(int x, int y, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }

  bool same_shape(const ImageT& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }

  template <typename U>
  ImageT<U> cast() const {
    ImageT<U> out(width, height, channels);
    for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = U(data[i]);
    return out;
  }
};

using Image = ImageT<float>;
using ImageD = ImageT<double>;

inline void require_same_shape(const Image& a, const Image& b,
                               const char* what) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(what) + ": image dimension mismatch");
}

}  // namespace gsblur
