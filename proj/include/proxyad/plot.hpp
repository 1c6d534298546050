#pragma once

#include <string>
#include <vector>

#include "proxyad/image.hpp"

namespace proxyad {

// Static result plots rendered directly into PNG buffers. Numeric axis
// labels only; no text rendering beyond digits.

void plot_line_chart(const std::string& path, const std::vector<double>& xs,
                     const std::vector<double>& ys, int width = 640, int height = 480);

void plot_score_histograms(const std::string& path,
                           const std::vector<double>& normal_scores,
                           const std::vector<double>& abnormal_scores, int bins = 24,
                           int width = 640, int height = 480);

// Stitches rows of equally sized grayscale panels (one row per sample) with
// 1px separators.
void save_image_grid(const std::string& path,
                     const std::vector<std::vector<GrayscaleImage>>& rows);

}  // namespace proxyad
