#include "proxyad/proxy.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>

namespace proxyad {

ProxyMode proxy_mode_from_name(const std::string& name) {
  if (name == "si") return ProxyMode::si;
  if (name == "edge") return ProxyMode::edge;
  if (name == "smooth_image") return ProxyMode::smooth_image;
  if (name == "smooth_patches") return ProxyMode::smooth_patches;
  if (name == "edge_concat_smooth") return ProxyMode::edge_concat_smooth;
  if (name == "edge_concat_patches") return ProxyMode::edge_concat_patches;
  throw ArgumentError("unknown proxy mode: " + name);
}

const char* proxy_mode_name(ProxyMode mode) {
  switch (mode) {
    case ProxyMode::si: return "si";
    case ProxyMode::edge: return "edge";
    case ProxyMode::smooth_image: return "smooth_image";
    case ProxyMode::smooth_patches: return "smooth_patches";
    case ProxyMode::edge_concat_smooth: return "edge_concat_smooth";
    case ProxyMode::edge_concat_patches: return "edge_concat_patches";
  }
  throw ArgumentError("unknown proxy mode");
}

int proxy_channel_count(ProxyMode mode) {
  return (mode == ProxyMode::edge_concat_smooth ||
          mode == ProxyMode::edge_concat_patches)
             ? 2
             : 1;
}

GrayscaleImage ProxyImage::channel(int ch) const {
  GrayscaleImage out(height, width);
  const std::size_t plane = static_cast<std::size_t>(height) * width;
  std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(ch) * plane, plane,
              out.pixels.begin());
  return out;
}

ProxyImage proxy_from_image(const GrayscaleImage& image) {
  ProxyImage out(image.height, image.width, 1);
  out.data = image.pixels;
  return out;
}

GrayscaleImage gaussian_blur(const GrayscaleImage& image, double sigma) {
  if (sigma <= 0.0) return image;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    total += kernel[i + radius];
  }
  for (double& k : kernel) k /= total;

  GrayscaleImage tmp(image.height, image.width);
  for (int r = 0; r < image.height; ++r) {
    for (int c = 0; c < image.width; ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        acc += kernel[i + radius] * image.at(r, std::clamp(c + i, 0, image.width - 1));
      }
      tmp.at(r, c) = acc;
    }
  }
  GrayscaleImage out(image.height, image.width);
  for (int r = 0; r < image.height; ++r) {
    for (int c = 0; c < image.width; ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        acc += kernel[i + radius] * tmp.at(std::clamp(r + i, 0, image.height - 1), c);
      }
      out.at(r, c) = acc;
    }
  }
  return out;
}

GrayscaleImage canny_edges(const GrayscaleImage& image, double sigma,
                           double low_fraction, double high_fraction) {
  const int h = image.height, w = image.width;
  const GrayscaleImage smooth = gaussian_blur(image, sigma);

  std::vector<double> gx(image.size(), 0.0), gy(image.size(), 0.0),
      mag(image.size(), 0.0);
  auto px = [&](int r, int c) {
    return smooth.at(std::clamp(r, 0, h - 1), std::clamp(c, 0, w - 1));
  };
  double max_mag = 0.0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double sx = px(r - 1, c + 1) + 2 * px(r, c + 1) + px(r + 1, c + 1) -
                        px(r - 1, c - 1) - 2 * px(r, c - 1) - px(r + 1, c - 1);
      const double sy = px(r + 1, c - 1) + 2 * px(r + 1, c) + px(r + 1, c + 1) -
                        px(r - 1, c - 1) - 2 * px(r - 1, c) - px(r - 1, c + 1);
      const std::size_t i = static_cast<std::size_t>(r) * w + c;
      gx[i] = sx;
      gy[i] = sy;
      mag[i] = std::hypot(sx, sy);
      max_mag = std::max(max_mag, mag[i]);
    }
  }

  GrayscaleImage edges(h, w);
  // The floor absorbs blur round-off on flat images.
  constexpr double kMagFloor = 1e-9;
  if (max_mag <= kMagFloor) return edges;

  const double high = std::max(high_fraction * max_mag, kMagFloor);
  const double low = std::max(low_fraction * max_mag, kMagFloor);

  // Non-maximum suppression along the quantized gradient direction.
  std::vector<std::uint8_t> state(image.size(), 0);  // 0 none, 1 weak, 2 strong
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * w + c;
      if (mag[i] < low) continue;
      const double angle = std::atan2(gy[i], gx[i]);
      // Quantize to 0, 45, 90, 135 degrees.
      const int dir = static_cast<int>(std::lround(angle / (std::numbers::pi / 4))) & 3;
      static const int offs[4][2] = {{0, 1}, {1, 1}, {1, 0}, {1, -1}};
      const int rr = offs[dir][0], cc = offs[dir][1];
      auto m = [&](int ar, int ac) {
        if (ar < 0 || ar >= h || ac < 0 || ac >= w) return 0.0;
        return mag[static_cast<std::size_t>(ar) * w + ac];
      };
      if (mag[i] >= m(r + rr, c + cc) && mag[i] >= m(r - rr, c - cc)) {
        state[i] = mag[i] >= high ? 2 : 1;
      }
    }
  }

  // Hysteresis: weak pixels survive when 8-connected to a strong one.
  std::deque<std::size_t> frontier;
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (state[i] == 2) frontier.push_back(i);
  }
  while (!frontier.empty()) {
    const std::size_t i = frontier.front();
    frontier.pop_front();
    edges.pixels[i] = 1.0;
    const int r = static_cast<int>(i) / w, c = static_cast<int>(i) % w;
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        const int nr = r + dr, nc = c + dc;
        if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
        const std::size_t ni = static_cast<std::size_t>(nr) * w + nc;
        if (state[ni] == 1 && edges.pixels[ni] == 0.0) {
          state[ni] = 2;
          frontier.push_back(ni);
        }
      }
    }
  }
  return edges;
}

GrayscaleImage smooth_patches(const GrayscaleImage& image, int patch_size) {
  if (patch_size < 1) throw ArgumentError("smooth_patches: patch_size must be >= 1");
  GrayscaleImage out(image.height, image.width);
  for (int r0 = 0; r0 < image.height; r0 += patch_size) {
    const int r1 = std::min(r0 + patch_size, image.height);
    for (int c0 = 0; c0 < image.width; c0 += patch_size) {
      const int c1 = std::min(c0 + patch_size, image.width);
      double sum = 0.0;
      for (int r = r0; r < r1; ++r)
        for (int c = c0; c < c1; ++c) sum += image.at(r, c);
      const double mean = sum / ((r1 - r0) * (c1 - c0));
      for (int r = r0; r < r1; ++r)
        for (int c = c0; c < c1; ++c) out.at(r, c) = mean;
    }
  }
  return out;
}

namespace {

void fill_channel(ProxyImage& proxy, int ch, const GrayscaleImage& src) {
  const std::size_t plane = static_cast<std::size_t>(proxy.height) * proxy.width;
  std::copy(src.pixels.begin(), src.pixels.end(),
            proxy.data.begin() + static_cast<std::ptrdiff_t>(ch) * plane);
}

}  // namespace

ProxyImage make_proxy(const GrayscaleImage& image, ProxyMode mode,
                      const ProxyParams& params) {
  const int n_sp = params.n_superpixels > 0
                       ? params.n_superpixels
                       : default_superpixel_count(image.height, image.width);
  const int patch = params.patch_size > 0
                        ? params.patch_size
                        : std::max(2, image.height / 8);

  ProxyImage proxy(image.height, image.width, proxy_channel_count(mode));
  switch (mode) {
    case ProxyMode::si: {
      const SuperpixelLabels labels =
          slic_segment(image, n_sp, params.compactness, params.slic_iters);
      fill_channel(proxy, 0, render_superpixel_image(image, labels).pixels);
      break;
    }
    case ProxyMode::edge:
      fill_channel(proxy, 0, canny_edges(image, params.canny_sigma,
                                         params.canny_low, params.canny_high));
      break;
    case ProxyMode::smooth_image:
      fill_channel(proxy, 0, gaussian_blur(image, params.smooth_sigma));
      break;
    case ProxyMode::smooth_patches:
      fill_channel(proxy, 0, smooth_patches(image, patch));
      break;
    case ProxyMode::edge_concat_smooth:
      fill_channel(proxy, 0, gaussian_blur(image, params.smooth_sigma));
      fill_channel(proxy, 1, canny_edges(image, params.canny_sigma,
                                         params.canny_low, params.canny_high));
      break;
    case ProxyMode::edge_concat_patches:
      fill_channel(proxy, 0, smooth_patches(image, patch));
      fill_channel(proxy, 1, canny_edges(image, params.canny_sigma,
                                         params.canny_low, params.canny_high));
      break;
  }
  return proxy;
}

}  // namespace proxyad
