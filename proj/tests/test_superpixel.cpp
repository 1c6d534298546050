#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <vector>

#include "proxyad/common.hpp"
#include "proxyad/proxy.hpp"
#include "proxyad/slic.hpp"

using namespace proxyad;

namespace {

GrayscaleImage random_image(int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  GrayscaleImage img(h, w);
  for (double& v : img.pixels) v = rng.uniform();
  return img;
}

// Exhaustive-start Lloyd 2-means over (255*intensity, w*x, w*y) features;
// the lowest-cost run over all distinct pixel-pair inits approximates the
// global optimum on tiny inputs.
std::vector<int> brute_force_two_means(const GrayscaleImage& img, double compactness) {
  const int n = img.height * img.width;
  const double step = std::sqrt(n / 2.0);
  const double w_xy = compactness / step;

  std::vector<std::array<double, 3>> feats(n);
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      feats[r * img.width + c] = {img.at(r, c) * 255.0, w_xy * r, w_xy * c};
    }
  }
  auto dist2 = [](const std::array<double, 3>& a, const std::array<double, 3>& b) {
    double d = 0.0;
    for (int t = 0; t < 3; ++t) d += (a[t] - b[t]) * (a[t] - b[t]);
    return d;
  };

  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<int> best_assign(n, 0);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      std::array<double, 3> c0 = feats[i], c1 = feats[j];
      std::vector<int> assign(n, 0);
      for (int iter = 0; iter < 50; ++iter) {
        bool changed = false;
        for (int p = 0; p < n; ++p) {
          const int a = dist2(feats[p], c0) <= dist2(feats[p], c1) ? 0 : 1;
          if (a != assign[p]) {
            assign[p] = a;
            changed = true;
          }
        }
        std::array<double, 3> s0{}, s1{};
        int n0 = 0, n1 = 0;
        for (int p = 0; p < n; ++p) {
          auto& s = assign[p] == 0 ? s0 : s1;
          for (int t = 0; t < 3; ++t) s[t] += feats[p][t];
          (assign[p] == 0 ? n0 : n1)++;
        }
        if (n0 == 0 || n1 == 0) break;
        for (int t = 0; t < 3; ++t) {
          c0[t] = s0[t] / n0;
          c1[t] = s1[t] / n1;
        }
        if (!changed) break;
      }
      double cost = 0.0;
      for (int p = 0; p < n; ++p) cost += dist2(feats[p], assign[p] == 0 ? c0 : c1);
      if (cost < best_cost) {
        best_cost = cost;
        best_assign = assign;
      }
    }
  }
  return best_assign;
}

int count_components_of_label(const SuperpixelLabels& labels, int target) {
  std::vector<char> seen(labels.labels.size(), 0);
  int components = 0;
  for (int r = 0; r < labels.height; ++r) {
    for (int c = 0; c < labels.width; ++c) {
      const std::size_t start = static_cast<std::size_t>(r) * labels.width + c;
      if (labels.labels[start] != target || seen[start]) continue;
      ++components;
      std::vector<std::size_t> stack{start};
      seen[start] = 1;
      while (!stack.empty()) {
        const std::size_t idx = stack.back();
        stack.pop_back();
        const int pr = static_cast<int>(idx) / labels.width;
        const int pc = static_cast<int>(idx) % labels.width;
        const int dr[4] = {-1, 1, 0, 0}, dc[4] = {0, 0, -1, 1};
        for (int k = 0; k < 4; ++k) {
          const int nr = pr + dr[k], nc = pc + dc[k];
          if (nr < 0 || nr >= labels.height || nc < 0 || nc >= labels.width) continue;
          const std::size_t ni = static_cast<std::size_t>(nr) * labels.width + nc;
          if (!seen[ni] && labels.labels[ni] == target) {
            seen[ni] = 1;
            stack.push_back(ni);
          }
        }
      }
    }
  }
  return components;
}

}  // namespace

TEST_CASE("constant image: SI equals input exactly for any n") {
  GrayscaleImage img(16, 16, 0.37);
  for (int n : {1, 4, 50, 256}) {
    const SuperpixelLabels labels = slic_segment(img, n, 10.0, 5);
    const SuperpixelImage si = render_superpixel_image(img, labels);
    CHECK(si.pixels.pixels == img.pixels);
  }
}

TEST_CASE("half-black half-white image splits along the vertical boundary") {
  GrayscaleImage img(8, 8);
  for (int r = 0; r < 8; ++r) {
    for (int c = 4; c < 8; ++c) img.at(r, c) = 1.0;
  }
  const SuperpixelLabels labels = slic_segment(img, 2, 0.1, 10);
  REQUIRE(labels.n_segments == 2);
  const int left = labels.at(0, 0);
  const int right = labels.at(0, 7);
  CHECK(left != right);
  for (int r = 0; r < 8; ++r) {
    for (int c = 0; c < 8; ++c) {
      CHECK(labels.at(r, c) == (c < 4 ? left : right));
    }
  }

  // Independent oracle: exhaustive-start 2-means with the same scaling.
  const std::vector<int> oracle = brute_force_two_means(img, 0.1);
  for (int p = 1; p < 64; ++p) {
    CHECK((oracle[p] == oracle[0]) == (labels.labels[p] == labels.labels[0]));
  }
}

TEST_CASE("n_superpixels = H*W gives singleton segments and SI == input") {
  const GrayscaleImage img = random_image(8, 8, 42);
  const SuperpixelLabels labels = slic_segment(img, 64, 10.0, 3);
  CHECK(labels.n_segments == 64);
  std::set<int> distinct(labels.labels.begin(), labels.labels.end());
  CHECK(distinct.size() == 64);
  const SuperpixelImage si = render_superpixel_image(img, labels);
  CHECK(si.pixels.pixels == img.pixels);
}

TEST_CASE("slic argument errors") {
  const GrayscaleImage img = random_image(8, 8, 1);
  CHECK_THROWS_AS(slic_segment(img, 65, 10.0, 3), ArgumentError);
  CHECK_THROWS_AS(slic_segment(img, 0, 10.0, 3), ArgumentError);
  CHECK_THROWS_AS(slic_segment(img, 4, -1.0, 3), ArgumentError);
}

TEST_CASE("two-point segment mean and single-segment mean") {
  GrayscaleImage img(1, 2);
  img.at(0, 0) = 0.2;
  img.at(0, 1) = 0.4;
  SuperpixelLabels labels;
  labels.height = 1;
  labels.width = 2;
  labels.n_segments = 1;
  labels.labels = {0, 0};
  const SuperpixelImage si = render_superpixel_image(img, labels);
  CHECK(si.pixels.at(0, 0) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(si.pixels.at(0, 1) == doctest::Approx(0.3).epsilon(1e-12));

  const GrayscaleImage rnd = random_image(16, 16, 9);
  const SuperpixelLabels one = slic_segment(rnd, 1, 10.0, 3);
  CHECK(one.n_segments == 1);
  const double mean =
      std::accumulate(rnd.pixels.begin(), rnd.pixels.end(), 0.0) / rnd.pixels.size();
  const SuperpixelImage si_one = render_superpixel_image(rnd, one);
  for (double v : si_one.pixels.pixels) CHECK(v == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("per-segment means match a naive accumulation oracle") {
  const GrayscaleImage img = random_image(16, 16, 77);
  const SuperpixelLabels labels = slic_segment(img, 4, 10.0, 10);
  const SuperpixelImage si = render_superpixel_image(img, labels);

  std::vector<double> sum(labels.n_segments, 0.0);
  std::vector<int> count(labels.n_segments, 0);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    sum[labels.labels[i]] += img.pixels[i];
    ++count[labels.labels[i]];
  }
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const int k = labels.labels[i];
    CHECK(si.pixels.pixels[i] == doctest::Approx(sum[k] / count[k]).epsilon(1e-9));
  }
}

TEST_CASE("render with mismatched shapes is an argument error") {
  const GrayscaleImage img = random_image(8, 8, 3);
  SuperpixelLabels labels;
  labels.height = 4;
  labels.width = 4;
  labels.n_segments = 1;
  labels.labels.assign(16, 0);
  CHECK_THROWS_AS(render_superpixel_image(img, labels), ArgumentError);
}

TEST_CASE("SI idempotence is exact and per-segment sums are conserved") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    const GrayscaleImage img = random_image(32, 32, seed);
    const SuperpixelLabels labels = slic_segment(img, 16, 10.0, 10);
    const SuperpixelImage si = render_superpixel_image(img, labels);

    const SuperpixelImage again = render_superpixel_image(si.pixels, labels);
    CHECK(again.pixels.pixels == si.pixels.pixels);

    std::vector<double> src_sum(labels.n_segments, 0.0), si_sum(labels.n_segments, 0.0);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
      src_sum[labels.labels[i]] += img.pixels[i];
      si_sum[labels.labels[i]] += si.pixels.pixels[i];
    }
    for (int k = 0; k < labels.n_segments; ++k) {
      CHECK(std::abs(src_sum[k] - si_sum[k]) < 1e-6);
    }
  }
}

TEST_CASE("labels are contiguous and each label is one 4-connected component") {
  for (std::uint64_t seed : {5ULL, 6ULL}) {
    const GrayscaleImage img = random_image(48, 48, seed);
    const SuperpixelLabels labels = slic_segment(img, 30, 10.0, 10);
    const auto [lo, hi] = std::minmax_element(labels.labels.begin(), labels.labels.end());
    CHECK(*lo == 0);
    CHECK(*hi == labels.n_segments - 1);
    std::set<int> seen(labels.labels.begin(), labels.labels.end());
    CHECK(static_cast<int>(seen.size()) == labels.n_segments);
    for (int k = 0; k < labels.n_segments; ++k) {
      CHECK(count_components_of_label(labels, k) == 1);
    }
  }
}

TEST_CASE("slic is deterministic") {
  const GrayscaleImage img = random_image(32, 32, 123);
  const SuperpixelLabels a = slic_segment(img, 20, 10.0, 10);
  const SuperpixelLabels b = slic_segment(img, 20, 10.0, 10);
  CHECK(a.labels == b.labels);
  CHECK(a.n_segments == b.n_segments);
}

TEST_CASE("default superpixel count scales with area") {
  CHECK(default_superpixel_count(256, 256) == 800);
  CHECK(default_superpixel_count(64, 64) == 50);  // 800 / 16
  CHECK(default_superpixel_count(16, 16) >= 1);
}

TEST_CASE("proxy: smooth_patches with a full-size patch is the global mean") {
  const GrayscaleImage img = random_image(16, 16, 31);
  ProxyParams params;
  params.patch_size = 16;
  const ProxyImage proxy = make_proxy(img, ProxyMode::smooth_patches, params);
  const double mean =
      std::accumulate(img.pixels.begin(), img.pixels.end(), 0.0) / img.pixels.size();
  for (double v : proxy.data) CHECK(v == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("proxy: edge map of a constant image is all-zero") {
  GrayscaleImage img(16, 16, 0.5);
  const ProxyImage proxy = make_proxy(img, ProxyMode::edge, {});
  for (double v : proxy.data) CHECK(v == 0.0);
}

TEST_CASE("proxy: edge map is binary and marks a step edge") {
  GrayscaleImage img(32, 32);
  for (int r = 0; r < 32; ++r) {
    for (int c = 16; c < 32; ++c) img.at(r, c) = 1.0;
  }
  const ProxyImage proxy = make_proxy(img, ProxyMode::edge, {});
  double total = 0.0;
  for (double v : proxy.data) {
    CHECK((v == 0.0 || v == 1.0));
    total += v;
  }
  CHECK(total > 0.0);
  for (int r = 2; r < 30; ++r) {
    double row_hits = 0.0;
    for (int c = 13; c <= 18; ++c) row_hits += proxy.at(0, r, c);
    CHECK(row_hits > 0.0);
  }
}

TEST_CASE("proxy: si mode output is piecewise constant with segment-distinct values") {
  const GrayscaleImage img = random_image(32, 32, 8);
  ProxyParams params;
  params.n_superpixels = 12;
  const SuperpixelLabels labels =
      slic_segment(img, 12, params.compactness, params.slic_iters);
  const ProxyImage proxy = make_proxy(img, ProxyMode::si, params);

  std::vector<double> value(labels.n_segments,
                            std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const int k = labels.labels[i];
    if (std::isnan(value[k])) {
      value[k] = proxy.data[i];
    } else {
      CHECK(proxy.data[i] == value[k]);
    }
  }
  std::set<double> distinct(value.begin(), value.end());
  CHECK(static_cast<int>(distinct.size()) == labels.n_segments);
}

TEST_CASE("proxy: concat modes carry the edge map as channel 2") {
  const GrayscaleImage img = random_image(32, 32, 64);
  CHECK(proxy_channel_count(ProxyMode::edge_concat_smooth) == 2);
  CHECK(proxy_channel_count(ProxyMode::edge_concat_patches) == 2);
  CHECK(proxy_channel_count(ProxyMode::si) == 1);

  ProxyParams params;
  const ProxyImage combined = make_proxy(img, ProxyMode::edge_concat_smooth, params);
  const ProxyImage smooth = make_proxy(img, ProxyMode::smooth_image, params);
  const ProxyImage edge = make_proxy(img, ProxyMode::edge, params);
  REQUIRE(combined.channels == 2);
  CHECK(combined.channel(0).pixels == smooth.channel(0).pixels);
  CHECK(combined.channel(1).pixels == edge.channel(0).pixels);
}

TEST_CASE("unknown proxy mode name is an argument error") {
  CHECK_THROWS_AS(proxy_mode_from_name("glitter"), ArgumentError);
}
