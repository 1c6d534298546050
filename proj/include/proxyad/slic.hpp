#pragma once

#include <vector>

#include "proxyad/image.hpp"

namespace proxyad {

struct SuperpixelLabels {
  int height = 0;
  int width = 0;
  int n_segments = 0;
  std::vector<int> labels;  // contiguous values in [0, n_segments)

  int at(int r, int c) const { return labels[static_cast<std::size_t>(r) * width + c]; }
};

struct SuperpixelImage {
  GrayscaleImage pixels;  // constant within each label region
  SuperpixelLabels source_labels;
};

// Localized k-means over (intensity, x, y). Intensity distance is scaled to
// the classic 0..255 range so the usual compactness values apply:
//   D^2 = (255 * d_int)^2 + (compactness / S)^2 * d_xy^2,  S = sqrt(H*W/n).
// Centers start on a regular grid, each nudged to the lowest-gradient pixel
// in its 3x3 neighborhood; pixels are searched within 2S x 2S windows; a
// post-pass enforces one 4-connected component per label (components smaller
// than S^2/4 merge into the adjacent segment). The resulting n_segments may
// differ from the request.
SuperpixelLabels slic_segment(const GrayscaleImage& image, int n_superpixels,
                              double compactness = 10.0, int iters = 10);

// Replaces every pixel with the mean intensity of its segment.
SuperpixelImage render_superpixel_image(const GrayscaleImage& image,
                                        const SuperpixelLabels& labels);

// Scale-preserving default: round(800 * H*W / 256^2), at least 1.
int default_superpixel_count(int height, int width);

}  // namespace proxyad
