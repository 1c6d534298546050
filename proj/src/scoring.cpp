#include "proxyad/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "proxyad/losses.hpp"

namespace proxyad {

double score_image_latent(const Encoder& enc_p, const Tensor& image,
                          const Tensor& reconstruction) {
  const Tensor z = encoder_forward(enc_p, image, nullptr);
  const Tensor z_hat = encoder_forward(enc_p, reconstruction, nullptr);
  double acc = 0.0;
  for (std::size_t i = 0; i < z.data.size(); ++i) {
    const double diff = z.data[i] - z_hat.data[i];
    acc += diff * diff;
  }
  return std::sqrt(acc);
}

GrayscaleImage score_pixel(const GrayscaleImage& image, const GrayscaleImage& recon) {
  if (image.height != recon.height || image.width != recon.width) {
    throw ArgumentError("score_pixel: shape mismatch");
  }
  GrayscaleImage out(image.height, image.width);
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    out.pixels[i] = std::abs(image.pixels[i] - recon.pixels[i]);
  }
  return out;
}

double score_si_error(const Tensor& p_hat, const Tensor& slic_proxy) {
  return mse(p_hat, slic_proxy);
}

double score_image_pixelspace(const Tensor& image, const Tensor& reconstruction) {
  if (!image.same_shape(reconstruction)) {
    throw ArgumentError("score_image_pixelspace: shape mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < image.data.size(); ++i) {
    const double diff = image.data[i] - reconstruction.data[i];
    acc += diff * diff;
  }
  return std::sqrt(acc);
}

double compute_auc(const std::vector<double>& scores, const std::vector<Label>& labels) {
  if (scores.size() != labels.size()) throw ArgumentError("auc: size mismatch");
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (Label l : labels) {
    if (l == Label::abnormal) ++n_pos;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw ArgumentError("auc: both classes must be present");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Average ranks across ties, then the Mann-Whitney statistic.
  std::vector<double> rank(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t t = i; t <= j; ++t) rank[order[t]] = avg_rank;
    i = j + 1;
  }

  double pos_rank_sum = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    if (labels[t] == Label::abnormal) pos_rank_sum += rank[t];
  }
  const double u = pos_rank_sum - static_cast<double>(n_pos) * (n_pos + 1) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

std::vector<double> min_max_normalize(const std::vector<double>& scores) {
  if (scores.empty()) return {};
  const auto [lo_it, hi_it] = std::minmax_element(scores.begin(), scores.end());
  const double lo = *lo_it, hi = *hi_it;
  std::vector<double> out(scores.size(), 0.0);
  if (hi > lo) {
    for (std::size_t i = 0; i < scores.size(); ++i) {
      out[i] = (scores[i] - lo) / (hi - lo);
    }
  }
  return out;
}

AccF1 compute_acc_f1(const std::vector<double>& scores, const std::vector<Label>& labels,
                     double threshold) {
  if (scores.size() != labels.size()) throw ArgumentError("acc/f1: size mismatch");
  if (threshold < 0.0 || threshold > 1.0) {
    throw ArgumentError("acc/f1: threshold must lie in [0,1]");
  }
  const std::vector<double> normalized = min_max_normalize(scores);
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    const bool predicted_abnormal = normalized[i] >= threshold;
    const bool is_abnormal = labels[i] == Label::abnormal;
    if (predicted_abnormal && is_abnormal) ++tp;
    else if (predicted_abnormal && !is_abnormal) ++fp;
    else if (!predicted_abnormal && is_abnormal) ++fn;
    else ++tn;
  }
  AccF1 out;
  out.acc = static_cast<double>(tp + tn) / static_cast<double>(normalized.size());
  const double precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
  const double recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
  out.f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  return out;
}

GapReport compute_gap(const std::vector<double>& scores, const std::vector<Label>& labels) {
  if (scores.size() != labels.size()) throw ArgumentError("gap: size mismatch");
  std::size_t n_pos = 0;
  for (Label l : labels) {
    if (l == Label::abnormal) ++n_pos;
  }
  if (n_pos == 0 || n_pos == scores.size()) {
    throw ArgumentError("gap: both classes must be present");
  }
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  if (*lo == *hi) {
    std::fprintf(stderr, "warning: all anomaly scores equal; gap is 0\n");
  }
  const std::vector<double> normalized = min_max_normalize(scores);
  GapReport out;
  std::size_t n_norm = 0;
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    if (labels[i] == Label::abnormal) {
      out.mean_abnormal += normalized[i];
    } else {
      out.mean_normal += normalized[i];
      ++n_norm;
    }
  }
  out.mean_abnormal /= static_cast<double>(n_pos);
  out.mean_normal /= static_cast<double>(n_norm);
  out.gap = out.mean_abnormal - out.mean_normal;
  return out;
}

}  // namespace proxyad
