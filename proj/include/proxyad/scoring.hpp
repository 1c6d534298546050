#pragma once

#include <optional>
#include <string>
#include <vector>

#include "proxyad/image.hpp"
#include "proxyad/nets.hpp"
#include "proxyad/proxy.hpp"

namespace proxyad {

struct AnomalyRecord {
  std::string id;
  Label label = Label::normal;
  double a_img = 0.0;             // latent-space image score
  double a_img_pixelspace = 0.0;  // Frobenius norm in image space
  double a_si_error = 0.0;        // prediction error against the SLIC proxy
  GrayscaleImage a_pix;           // |I - I_hat|
  std::optional<BinaryMask> lesion_mask;
};

struct GapReport {
  double mean_normal = 0.0;
  double mean_abnormal = 0.0;
  double gap = 0.0;  // mean_abnormal - mean_normal after min-max normalization
};

struct MetricsReport {
  double auc = 0.0;
  double acc = 0.0;
  double f1 = 0.0;
  GapReport gap;
  double threshold = 0.5;
  // Pixel-level metrics, present when masks are available.
  std::optional<double> pixel_auc_pooled;
  std::optional<double> pixel_auc_per_image_mean;
  std::optional<double> pixel_acc;
  std::optional<double> pixel_f1;
};

// Latent-space image score: Frobenius norm of Enc_p(I) - Enc_p(I_hat), with
// the raw (pre-memory) encoder output on both sides.
double score_image_latent(const Encoder& enc_p, const Tensor& image,
                          const Tensor& reconstruction);

// Pixel anomaly map |I - I_hat|.
GrayscaleImage score_pixel(const GrayscaleImage& image, const GrayscaleImage& recon);

// MSE between the predicted proxy and the SLIC-derived proxy of the input.
double score_si_error(const Tensor& p_hat, const Tensor& slic_proxy);

// Frobenius norm of I - I_hat (image-space scoring ablation).
double score_image_pixelspace(const Tensor& image, const Tensor& reconstruction);

// Rank-statistic AUC with ties contributing 1/2; abnormal is positive.
double compute_auc(const std::vector<double>& scores, const std::vector<Label>& labels);

// Confusion-matrix metrics at `threshold` applied to min-max-normalized
// scores; F1 is 0 when precision + recall is 0.
struct AccF1 {
  double acc = 0.0;
  double f1 = 0.0;
};
AccF1 compute_acc_f1(const std::vector<double>& scores, const std::vector<Label>& labels,
                     double threshold);

GapReport compute_gap(const std::vector<double>& scores, const std::vector<Label>& labels);

std::vector<double> min_max_normalize(const std::vector<double>& scores);

}  // namespace proxyad
