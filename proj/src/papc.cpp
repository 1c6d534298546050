#include "proxyad/papc.hpp"

namespace proxyad {

PseudoProxy construct_pseudo_proxy(const ProxyImage& base_proxy,
                                   const GrayscaleImage& source_image, Rng& rng,
                                   const PapcParams& params) {
  const int h = base_proxy.height, w = base_proxy.width;
  if (source_image.height != h || source_image.width != w) {
    throw ArgumentError("papc: source image shape differs from proxy");
  }
  if (h < 16 || w < 16) {
    throw ArgumentError("papc: image smaller than 16px");
  }

  PseudoProxy out;
  out.patch_height = static_cast<int>(rng.uniform_int(h / 8, h / 2));
  out.patch_width = static_cast<int>(rng.uniform_int(w / 8, w / 2));
  out.top = static_cast<int>(rng.uniform_int(0, h - out.patch_height));
  out.left = static_cast<int>(rng.uniform_int(0, w - out.patch_width));

  out.proxy_prime = base_proxy;
  out.mask = BinaryMask(h, w);
  for (int r = out.top; r < out.top + out.patch_height; ++r) {
    for (int c = out.left; c < out.left + out.patch_width; ++c) {
      out.mask.at(r, c) = 1;
      out.proxy_prime.at(0, r, c) = source_image.at(r, c);
    }
  }

  if (base_proxy.channels == 2) {
    const GrayscaleImage source_edges = canny_edges(
        source_image, params.canny_sigma, params.canny_low, params.canny_high);
    for (int r = out.top; r < out.top + out.patch_height; ++r) {
      for (int c = out.left; c < out.left + out.patch_width; ++c) {
        out.proxy_prime.at(1, r, c) = source_edges.at(r, c);
      }
    }
  }
  return out;
}

}  // namespace proxyad
