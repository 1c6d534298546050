#pragma once

#include <optional>
#include <string>
#include <vector>

#include "proxyad/common.hpp"

namespace proxyad {

// H x W grayscale intensities in [0, 1], row-major.
struct GrayscaleImage {
  int height = 0;
  int width = 0;
  std::vector<double> pixels;

  GrayscaleImage() = default;
  GrayscaleImage(int h, int w, double fill = 0.0)
      : height(h), width(w), pixels(static_cast<std::size_t>(h) * w, fill) {}

  double& at(int r, int c) { return pixels[static_cast<std::size_t>(r) * width + c]; }
  double at(int r, int c) const { return pixels[static_cast<std::size_t>(r) * width + c]; }
  std::size_t size() const { return pixels.size(); }
};

struct BinaryMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> values;  // 0 or 1

  BinaryMask() = default;
  BinaryMask(int h, int w)
      : height(h), width(w), values(static_cast<std::size_t>(h) * w, 0) {}

  std::uint8_t& at(int r, int c) { return values[static_cast<std::size_t>(r) * width + c]; }
  std::uint8_t at(int r, int c) const { return values[static_cast<std::size_t>(r) * width + c]; }
  std::size_t count_positive() const;
};

enum class Label { normal, abnormal };

const char* label_name(Label label);

struct LabeledSample {
  std::string id;
  GrayscaleImage image;
  Label label = Label::normal;
  std::optional<BinaryMask> lesion_mask;
};

// Finite, within [0,1], and at least 16x16 (the ingestion contract).
void validate_dataset_image(const GrayscaleImage& image, const std::string& context);

// PNG ingestion. 8/16-bit grayscale is read natively; color inputs are
// converted to grayscale. Intensities are rescaled by v / (2^bits - 1).
GrayscaleImage read_png_gray(const std::string& path);

void write_png_gray8(const std::string& path, const GrayscaleImage& image);
void write_png_gray16(const std::string& path, const GrayscaleImage& image);

// Loads `root/{train|test}/{normal|abnormal}/*.png`, lexicographic by
// filename. `<id>_mask.png` siblings of abnormal images become lesion masks
// (binarized at 0.5).
std::vector<LabeledSample> load_dataset(const std::string& root_path,
                                        const std::string& split);

// Writes samples into the dataset layout under root/split.
void export_dataset(const std::string& root_path, const std::string& split,
                    const std::vector<LabeledSample>& samples);

}  // namespace proxyad
