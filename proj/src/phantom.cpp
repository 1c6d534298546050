#include "proxyad/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace proxyad {

namespace {

constexpr std::uint64_t kRoleTrainNormal = 1;
constexpr std::uint64_t kRoleTestNormal = 2;
constexpr std::uint64_t kRoleTestAbnormal = 3;

// Small separable blur with edge clamping; softens band boundaries.
void blur_in_place(GrayscaleImage& image, double sigma) {
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
        const int cc = std::clamp(c + i, 0, image.width - 1);
        acc += kernel[i + radius] * image.at(r, cc);
      }
      tmp.at(r, c) = acc;
    }
  }
  for (int r = 0; r < image.height; ++r) {
    for (int c = 0; c < image.width; ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const int rr = std::clamp(r + i, 0, image.height - 1);
        acc += kernel[i + radius] * tmp.at(rr, c);
      }
      image.at(r, c) = acc;
    }
  }
}

std::string indexed_id(const char* prefix, int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%04d", prefix, index);
  return buf;
}

}  // namespace

void validate_phantom_spec(const PhantomSpec& spec) {
  if (spec.image_size < 16) throw ConfigError("phantom: image_size must be >= 16");
  if (spec.n_train_normal < 1 || spec.n_test_normal < 1 || spec.n_test_abnormal < 1) {
    throw ConfigError("phantom: sample counts must be >= 1");
  }
  if (spec.lesion_radius_min < 1.0 || spec.lesion_radius_max < spec.lesion_radius_min) {
    throw ConfigError("phantom: lesion radius range empty or below 1px");
  }
  if (spec.lesion_contrast_max < spec.lesion_contrast_min) {
    throw ConfigError("phantom: lesion contrast range empty");
  }
  if (spec.noise_sigma < 0.0) throw ConfigError("phantom: noise_sigma must be >= 0");
  if (2.0 * spec.lesion_radius_max + 4.0 > spec.image_size) {
    throw ConfigError("phantom: lesion does not fit inside the image");
  }
}

GrayscaleImage phantom_normal(const PhantomSpec& spec, std::uint64_t stream) {
  const int n = spec.image_size;
  Rng rng(stream);

  const int n_bands = static_cast<int>(4 + rng.uniform_int(0, 3));
  struct Boundary {
    double base, amplitude, freq, phase;
  };
  std::vector<Boundary> boundaries(n_bands - 1);
  for (int j = 0; j < n_bands - 1; ++j) {
    const double nominal = n * static_cast<double>(j + 1) / n_bands;
    boundaries[j].base = nominal + rng.uniform(-0.35, 0.35) * n / n_bands;
    boundaries[j].amplitude = rng.uniform(0.01, 0.06) * n;
    boundaries[j].freq = rng.uniform(0.5, 1.8);
    boundaries[j].phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  }

  std::vector<double> band_value(n_bands);
  for (int b = 0; b < n_bands; ++b) {
    double v = rng.uniform(0.12, 0.55);
    if (b > 0 && std::abs(v - band_value[b - 1]) < 0.08) {
      v = std::clamp(band_value[b - 1] + (v > band_value[b - 1] ? 0.08 : -0.08),
                     0.12, 0.55);
    }
    band_value[b] = v;
  }
  const double shift = rng.uniform(-0.05, 0.05) * n;

  GrayscaleImage image(n, n);
  for (int r = 0; r < n; ++r) {
    const double y = r + shift;
    for (int c = 0; c < n; ++c) {
      int band = 0;
      for (const Boundary& b : boundaries) {
        const double edge =
            b.base + b.amplitude *
                         std::sin(2.0 * std::numbers::pi * b.freq * c / n + b.phase);
        if (edge <= y) ++band;
      }
      image.at(r, c) = band_value[band];
    }
  }

  blur_in_place(image, 0.8);

  if (spec.noise_sigma > 0.0) {
    for (double& v : image.pixels) v += spec.noise_sigma * rng.normal();
  }
  for (double& v : image.pixels) v = std::clamp(v, 0.0, 1.0);
  return image;
}

PhantomPair phantom_abnormal(const PhantomSpec& spec, int index) {
  PhantomPair pair;
  pair.normal = phantom_normal(
      spec, Rng::derive(spec.seed, kRoleTestAbnormal, static_cast<std::uint64_t>(index), 0));

  Rng rng(Rng::derive(spec.seed, kRoleTestAbnormal, static_cast<std::uint64_t>(index), 1));
  const int n = spec.image_size;
  const double rx = rng.uniform(spec.lesion_radius_min, spec.lesion_radius_max);
  const double ry = rng.uniform(spec.lesion_radius_min, spec.lesion_radius_max);
  const double margin = 2.0;
  const double cx = rng.uniform(rx + margin, n - 1 - rx - margin);
  const double cy = rng.uniform(ry + margin, n - 1 - ry - margin);
  const double contrast = rng.uniform(spec.lesion_contrast_min, spec.lesion_contrast_max);

  pair.abnormal = pair.normal;
  pair.mask = BinaryMask(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const double dx = (c - cx) / rx;
      const double dy = (r - cy) / ry;
      if (dx * dx + dy * dy <= 1.0) {
        pair.mask.at(r, c) = 1;
        pair.abnormal.at(r, c) = std::clamp(pair.abnormal.at(r, c) + contrast, 0.0, 1.0);
      }
    }
  }
  return pair;
}

PhantomSet generate_phantoms(const PhantomSpec& spec) {
  validate_phantom_spec(spec);
  PhantomSet set;
  set.train.resize(spec.n_train_normal);
  set.test.resize(spec.n_test_normal + spec.n_test_abnormal);

  parallel_for(spec.n_train_normal, [&](int i) {
    LabeledSample& s = set.train[i];
    s.id = indexed_id("normal", i);
    s.label = Label::normal;
    s.image = phantom_normal(spec, Rng::derive(spec.seed, kRoleTrainNormal, i));
  });
  parallel_for(spec.n_test_normal, [&](int i) {
    LabeledSample& s = set.test[i];
    s.id = indexed_id("normal", i);
    s.label = Label::normal;
    s.image = phantom_normal(spec, Rng::derive(spec.seed, kRoleTestNormal, i));
  });
  parallel_for(spec.n_test_abnormal, [&](int i) {
    LabeledSample& s = set.test[spec.n_test_normal + i];
    s.id = indexed_id("abnormal", i);
    s.label = Label::abnormal;
    PhantomPair pair = phantom_abnormal(spec, i);
    s.image = std::move(pair.abnormal);
    s.lesion_mask = std::move(pair.mask);
  });
  return set;
}

}  // namespace proxyad
