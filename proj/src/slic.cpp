#include "proxyad/slic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace proxyad {

namespace {

struct Center {
  double intensity;  // 0..255 scale
  double row;
  double col;
};

double gradient_energy(const GrayscaleImage& image, int r, int c) {
  const int rm = std::max(r - 1, 0), rp = std::min(r + 1, image.height - 1);
  const int cm = std::max(c - 1, 0), cp = std::min(c + 1, image.width - 1);
  const double gx = image.at(r, cp) - image.at(r, cm);
  const double gy = image.at(rp, c) - image.at(rm, c);
  return gx * gx + gy * gy;
}

// Relabels every 4-connected component; components below min_size merge into
// their largest finalized adjacent component, which guarantees exactly one
// component per final label and contiguous label values.
void enforce_connectivity(std::vector<int>& labels, int height, int width,
                          int min_size) {
  const std::size_t total = labels.size();
  std::vector<int> out(total, -1);
  std::vector<int> label_size;
  std::vector<int> component;
  component.reserve(total);
  int next_label = 0;
  const int dr[4] = {-1, 1, 0, 0};
  const int dc[4] = {0, 0, -1, 1};

  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const std::size_t start = static_cast<std::size_t>(r) * width + c;
      if (out[start] >= 0) continue;

      component.clear();
      component.push_back(static_cast<int>(start));
      out[start] = next_label;
      std::vector<int> adjacent;  // finalized neighbor labels
      for (std::size_t head = 0; head < component.size(); ++head) {
        const int pr = component[head] / width;
        const int pc = component[head] % width;
        for (int k = 0; k < 4; ++k) {
          const int nr = pr + dr[k], nc = pc + dc[k];
          if (nr < 0 || nr >= height || nc < 0 || nc >= width) continue;
          const std::size_t ni = static_cast<std::size_t>(nr) * width + nc;
          if (out[ni] >= 0 && out[ni] != next_label) {
            adjacent.push_back(out[ni]);
          } else if (out[ni] < 0 && labels[ni] == labels[start]) {
            out[ni] = next_label;
            component.push_back(static_cast<int>(ni));
          }
        }
      }

      // The component containing (0,0) has no finalized neighbor and is kept.
      if (static_cast<int>(component.size()) < min_size && !adjacent.empty()) {
        int target = adjacent[0];
        for (int cand : adjacent) {
          if (label_size[cand] > label_size[target] ||
              (label_size[cand] == label_size[target] && cand < target)) {
            target = cand;
          }
        }
        for (int idx : component) out[idx] = target;
        label_size[target] += static_cast<int>(component.size());
      } else {
        label_size.push_back(static_cast<int>(component.size()));
        ++next_label;
      }
    }
  }
  labels = std::move(out);
}

}  // namespace

int default_superpixel_count(int height, int width) {
  const double n = 800.0 * height * width / (256.0 * 256.0);
  return std::max(1, static_cast<int>(std::lround(n)));
}

SuperpixelLabels slic_segment(const GrayscaleImage& image, int n_superpixels,
                              double compactness, int iters) {
  const int height = image.height, width = image.width;
  if (height < 1 || width < 1) throw ArgumentError("slic: empty image");
  if (n_superpixels < 1) throw ArgumentError("slic: n_superpixels must be >= 1");
  if (static_cast<long long>(n_superpixels) > static_cast<long long>(height) * width) {
    throw ArgumentError("slic: n_superpixels exceeds pixel count");
  }
  if (compactness <= 0.0) throw ArgumentError("slic: compactness must be > 0");
  if (iters < 1) throw ArgumentError("slic: iters must be >= 1");

  const double grid_step =
      std::sqrt(static_cast<double>(height) * width / n_superpixels);
  const int nx = std::max(
      1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_superpixels) *
                                              width / height))));
  const int ny = std::max(
      1, static_cast<int>(std::ceil(static_cast<double>(n_superpixels) / nx)));

  std::vector<Center> centers;
  centers.reserve(static_cast<std::size_t>(nx) * ny);
  for (int gy = 0; gy < ny; ++gy) {
    for (int gx = 0; gx < nx; ++gx) {
      int r = std::clamp(static_cast<int>((gy + 0.5) * height / ny), 0, height - 1);
      int c = std::clamp(static_cast<int>((gx + 0.5) * width / nx), 0, width - 1);
      if (grid_step >= 2.0) {
        // Nudge off edges: lowest gradient in the 3x3 neighborhood, center
        // pixel wins ties.
        double best = gradient_energy(image, r, c);
        int br = r, bc = c;
        for (int rr = std::max(r - 1, 0); rr <= std::min(r + 1, height - 1); ++rr) {
          for (int cc = std::max(c - 1, 0); cc <= std::min(c + 1, width - 1); ++cc) {
            const double g = gradient_energy(image, rr, cc);
            if (g < best) {
              best = g;
              br = rr;
              bc = cc;
            }
          }
        }
        r = br;
        c = bc;
      }
      centers.push_back({image.at(r, c) * 255.0, static_cast<double>(r),
                         static_cast<double>(c)});
    }
  }

  const double spatial_weight =
      (compactness / grid_step) * (compactness / grid_step);
  const int window = std::max(1, static_cast<int>(std::ceil(grid_step)));
  const std::size_t total = static_cast<std::size_t>(height) * width;
  std::vector<int> labels(total, -1);
  std::vector<double> best_dist(total);

  for (int iter = 0; iter < iters; ++iter) {
    std::fill(best_dist.begin(), best_dist.end(),
              std::numeric_limits<double>::infinity());
    std::fill(labels.begin(), labels.end(), -1);

    for (std::size_t k = 0; k < centers.size(); ++k) {
      const Center& ctr = centers[k];
      const int r0 = std::max(0, static_cast<int>(std::floor(ctr.row)) - window);
      const int r1 = std::min(height - 1, static_cast<int>(std::ceil(ctr.row)) + window);
      const int c0 = std::max(0, static_cast<int>(std::floor(ctr.col)) - window);
      const int c1 = std::min(width - 1, static_cast<int>(std::ceil(ctr.col)) + window);
      for (int r = r0; r <= r1; ++r) {
        for (int c = c0; c <= c1; ++c) {
          const double di = image.at(r, c) * 255.0 - ctr.intensity;
          const double dr = r - ctr.row, dc = c - ctr.col;
          const double d = di * di + spatial_weight * (dr * dr + dc * dc);
          const std::size_t idx = static_cast<std::size_t>(r) * width + c;
          if (d < best_dist[idx]) {
            best_dist[idx] = d;
            labels[idx] = static_cast<int>(k);
          }
        }
      }
    }

    // Pixels outside every search window fall back to the nearest center.
    for (std::size_t idx = 0; idx < total; ++idx) {
      if (labels[idx] >= 0) continue;
      const int r = static_cast<int>(idx) / width;
      const int c = static_cast<int>(idx) % width;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < centers.size(); ++k) {
        const double di = image.at(r, c) * 255.0 - centers[k].intensity;
        const double dr = r - centers[k].row, dc = c - centers[k].col;
        const double d = di * di + spatial_weight * (dr * dr + dc * dc);
        if (d < best) {
          best = d;
          labels[idx] = static_cast<int>(k);
        }
      }
    }

    std::vector<double> sum_i(centers.size(), 0.0), sum_r(centers.size(), 0.0),
        sum_c(centers.size(), 0.0);
    std::vector<int> count(centers.size(), 0);
    for (std::size_t idx = 0; idx < total; ++idx) {
      const int k = labels[idx];
      sum_i[k] += image.pixels[idx] * 255.0;
      sum_r[k] += static_cast<double>(idx / width);
      sum_c[k] += static_cast<double>(idx % width);
      ++count[k];
    }
    for (std::size_t k = 0; k < centers.size(); ++k) {
      if (count[k] == 0) continue;  // empty clusters keep their position
      centers[k].intensity = sum_i[k] / count[k];
      centers[k].row = sum_r[k] / count[k];
      centers[k].col = sum_c[k] / count[k];
    }
  }

  const int min_size =
      std::max(1, static_cast<int>(grid_step * grid_step / 4.0));
  enforce_connectivity(labels, height, width, min_size);

  SuperpixelLabels result;
  result.height = height;
  result.width = width;
  result.labels = std::move(labels);
  result.n_segments = *std::max_element(result.labels.begin(), result.labels.end()) + 1;
  return result;
}

SuperpixelImage render_superpixel_image(const GrayscaleImage& image,
                                        const SuperpixelLabels& labels) {
  if (image.height != labels.height || image.width != labels.width) {
    throw ArgumentError("render_superpixel_image: shape mismatch");
  }
  std::vector<double> sum(labels.n_segments, 0.0);
  std::vector<int> count(labels.n_segments, 0);
  std::vector<double> first(labels.n_segments, 0.0);
  std::vector<bool> constant(labels.n_segments, true);

  for (std::size_t idx = 0; idx < image.pixels.size(); ++idx) {
    const int k = labels.labels[idx];
    const double v = image.pixels[idx];
    if (count[k] == 0) {
      first[k] = v;
    } else if (v != first[k]) {
      constant[k] = false;
    }
    sum[k] += v;
    ++count[k];
  }

  std::vector<double> mean(labels.n_segments, 0.0);
  for (int k = 0; k < labels.n_segments; ++k) {
    // Constant regions reproduce their value bit-exactly, which makes
    // re-rendering an SI with the same labels the identity.
    mean[k] = constant[k] ? first[k] : sum[k] / count[k];
  }

  SuperpixelImage si;
  si.pixels = GrayscaleImage(image.height, image.width);
  for (std::size_t idx = 0; idx < image.pixels.size(); ++idx) {
    si.pixels.pixels[idx] = mean[labels.labels[idx]];
  }
  si.source_labels = labels;
  return si;
}

}  // namespace proxyad
