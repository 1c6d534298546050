#pragma once

#include <string>

#include "proxyad/image.hpp"
#include "proxyad/proxy.hpp"

namespace proxyad {

// Pseudo-abnormal proxy: a rectangular image patch hard-pasted into a normal
// proxy, plus the binary paste mask.
struct PseudoProxy {
  ProxyImage proxy_prime;
  BinaryMask mask;
  std::string source_id;
  int top = 0, left = 0, patch_height = 0, patch_width = 0;
};

struct PapcParams {
  // Canny settings used to refresh the edge channel of 2-channel proxies.
  double canny_sigma = 1.0;
  double canny_low = 0.1;
  double canny_high = 0.2;
};

// Cuts a patch from `source_image` (same rectangle) and pastes it into
// `base_proxy`. Patch sides are uniform in [H/8, H/2] and [W/8, W/2]
// independently; the position is uniform among placements that fit. For
// 2-channel proxies, the edge channel inside the mask comes from the source
// image's edge map.
PseudoProxy construct_pseudo_proxy(const ProxyImage& base_proxy,
                                   const GrayscaleImage& source_image, Rng& rng,
                                   const PapcParams& params = {});

}  // namespace proxyad
