#pragma once

#include <string>
#include <vector>

#include "proxyad/image.hpp"
#include "proxyad/slic.hpp"

namespace proxyad {

enum class ProxyMode {
  si,
  edge,
  smooth_image,
  smooth_patches,
  edge_concat_smooth,
  edge_concat_patches,
};

ProxyMode proxy_mode_from_name(const std::string& name);
const char* proxy_mode_name(ProxyMode mode);
int proxy_channel_count(ProxyMode mode);

struct ProxyParams {
  int n_superpixels = 0;   // 0: area-scaled default
  double compactness = 10.0;
  int slic_iters = 10;
  double smooth_sigma = 2.0;  // Gaussian blur for the smooth-image proxy
  int patch_size = 0;         // 0: image side / 8
  // Canny settings for the edge proxy; thresholds are fractions of the
  // maximum gradient magnitude.
  double canny_sigma = 1.0;
  double canny_low = 0.1;
  double canny_high = 0.2;
};

// H x W x channels proxy tensor, planar layout (channel-major).
struct ProxyImage {
  int height = 0;
  int width = 0;
  int channels = 1;
  std::vector<double> data;

  ProxyImage() = default;
  ProxyImage(int h, int w, int c)
      : height(h), width(w), channels(c),
        data(static_cast<std::size_t>(h) * w * c, 0.0) {}

  double& at(int ch, int r, int c) {
    return data[(static_cast<std::size_t>(ch) * height + r) * width + c];
  }
  double at(int ch, int r, int c) const {
    return data[(static_cast<std::size_t>(ch) * height + r) * width + c];
  }
  GrayscaleImage channel(int ch) const;
};

ProxyImage proxy_from_image(const GrayscaleImage& image);

GrayscaleImage gaussian_blur(const GrayscaleImage& image, double sigma);
GrayscaleImage canny_edges(const GrayscaleImage& image, double sigma,
                           double low_fraction, double high_fraction);
GrayscaleImage smooth_patches(const GrayscaleImage& image, int patch_size);

ProxyImage make_proxy(const GrayscaleImage& image, ProxyMode mode,
                      const ProxyParams& params);

}  // namespace proxyad
