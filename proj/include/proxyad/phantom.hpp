#pragma once

#include <cstdint>
#include <vector>

#include "proxyad/image.hpp"

namespace proxyad {

// Desk-scale synthetic dataset: layered smooth backgrounds standing in for
// real normal scans, plus elliptical lesions for the abnormal test split.
struct PhantomSpec {
  int image_size = 64;
  int n_train_normal = 300;
  int n_test_normal = 100;
  int n_test_abnormal = 100;
  double lesion_radius_min = 5.0;
  double lesion_radius_max = 11.0;
  double lesion_contrast_min = 0.25;
  double lesion_contrast_max = 0.45;
  double noise_sigma = 0.02;
  std::uint64_t seed = 1;
};

void validate_phantom_spec(const PhantomSpec& spec);

// One normal phantom from a derived stream: stacked horizontal bands with
// per-image offsets and curvature, lightly blurred, plus clipped Gaussian
// noise. Pure function of (spec, stream).
GrayscaleImage phantom_normal(const PhantomSpec& spec, std::uint64_t stream);

struct PhantomPair {
  GrayscaleImage normal;    // the lesion-free base
  GrayscaleImage abnormal;  // base + one elliptical lesion, clipped
  BinaryMask mask;          // exact lesion support
};

// Abnormal phantom for test index `index`; the lesion is added after the
// noise, so abnormal == normal outside the mask bit-exactly.
PhantomPair phantom_abnormal(const PhantomSpec& spec, int index);

struct PhantomSet {
  std::vector<LabeledSample> train;
  std::vector<LabeledSample> test;
};

PhantomSet generate_phantoms(const PhantomSpec& spec);

}  // namespace proxyad
