#include "proxyad/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>

namespace proxyad {

namespace fs = std::filesystem;

std::size_t BinaryMask::count_positive() const {
  return static_cast<std::size_t>(
      std::count_if(values.begin(), values.end(), [](std::uint8_t v) { return v != 0; }));
}

const char* label_name(Label label) {
  return label == Label::normal ? "normal" : "abnormal";
}

void validate_dataset_image(const GrayscaleImage& image, const std::string& context) {
  if (image.height < 16 || image.width < 16) {
    throw DataError(context + ": image must be at least 16x16, got " +
                    std::to_string(image.height) + "x" + std::to_string(image.width));
  }
  if (image.pixels.size() != static_cast<std::size_t>(image.height) * image.width) {
    throw DataError(context + ": pixel buffer size mismatch");
  }
  for (double v : image.pixels) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw DataError(context + ": intensity outside [0,1]");
    }
  }
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_fail(png_structp, png_const_charp msg) {
  throw DataError(std::string("png: ") + msg);
}

void png_warn(png_structp, png_const_charp) {}

}  // namespace

GrayscaleImage read_png_gray(const std::string& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw DataError("cannot open image file: " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                           png_fail, png_warn);
  if (!png) throw DataError("png: allocation failure");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw DataError("png: allocation failure");
  }

  GrayscaleImage image;
  try {
    png_init_io(png, file.get());
    png_read_info(png, info);

    const png_uint_32 width = png_get_image_width(png, info);
    const png_uint_32 height = png_get_image_height(png, info);
    const int color_type = png_get_color_type(png, info);
    int bit_depth = png_get_bit_depth(png, info);

    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
      png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type & PNG_COLOR_MASK_COLOR)
      png_set_rgb_to_gray(png, 1, -1.0, -1.0);
    if (color_type & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS))
      png_set_strip_alpha(png);

    png_read_update_info(png, info);
    bit_depth = png_get_bit_depth(png, info);
    if (png_get_channels(png, info) != 1 || (bit_depth != 8 && bit_depth != 16)) {
      throw DataError("unsupported PNG layout in " + path);
    }

    image.height = static_cast<int>(height);
    image.width = static_cast<int>(width);
    image.pixels.resize(static_cast<std::size_t>(height) * width);

    const std::size_t row_bytes = png_get_rowbytes(png, info);
    std::vector<std::uint8_t> row(row_bytes);
    const double scale = bit_depth == 8 ? 255.0 : 65535.0;
    for (png_uint_32 r = 0; r < height; ++r) {
      png_read_row(png, row.data(), nullptr);
      for (png_uint_32 c = 0; c < width; ++c) {
        std::uint32_t v;
        if (bit_depth == 8) {
          v = row[c];
        } else {
          v = (static_cast<std::uint32_t>(row[2 * c]) << 8) | row[2 * c + 1];
        }
        image.pixels[static_cast<std::size_t>(r) * width + c] = v / scale;
      }
    }
    png_read_end(png, nullptr);
  } catch (const DataError&) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("corrupt or unreadable PNG: " + path);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

namespace {

void write_png_gray(const std::string& path, const GrayscaleImage& image, int bit_depth) {
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw DataError("cannot write image file: " + path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            png_fail, png_warn);
  if (!png) throw DataError("png: allocation failure");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw DataError("png: allocation failure");
  }

  try {
    png_init_io(png, file.get());
    png_set_IHDR(png, info, image.width, image.height, bit_depth,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    const double scale = bit_depth == 8 ? 255.0 : 65535.0;
    std::vector<std::uint8_t> row(static_cast<std::size_t>(image.width) * (bit_depth / 8));
    for (int r = 0; r < image.height; ++r) {
      for (int c = 0; c < image.width; ++c) {
        const double clamped = std::clamp(image.at(r, c), 0.0, 1.0);
        const auto v = static_cast<std::uint32_t>(std::lround(clamped * scale));
        if (bit_depth == 8) {
          row[c] = static_cast<std::uint8_t>(v);
        } else {
          row[2 * c] = static_cast<std::uint8_t>(v >> 8);
          row[2 * c + 1] = static_cast<std::uint8_t>(v & 0xFF);
        }
      }
      png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
  } catch (const DataError&) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
}

bool has_png_extension(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return ext == ".png";
}

bool is_mask_file(const fs::path& p) {
  const std::string stem = p.stem().string();
  return stem.size() > 5 && stem.ends_with("_mask");
}

std::vector<fs::path> list_pngs_sorted(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (!has_png_extension(entry.path()) || is_mask_file(entry.path())) continue;
    out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  return out;
}

BinaryMask binarize_mask(const GrayscaleImage& image) {
  BinaryMask mask(image.height, image.width);
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    mask.values[i] = image.pixels[i] >= 0.5 ? 1 : 0;
  }
  return mask;
}

}  // namespace

void write_png_gray8(const std::string& path, const GrayscaleImage& image) {
  write_png_gray(path, image, 8);
}

void write_png_gray16(const std::string& path, const GrayscaleImage& image) {
  write_png_gray(path, image, 16);
}

std::vector<LabeledSample> load_dataset(const std::string& root_path,
                                        const std::string& split) {
  if (split != "train" && split != "test") {
    throw ArgumentError("split must be 'train' or 'test', got '" + split + "'");
  }
  const fs::path split_dir = fs::path(root_path) / split;
  if (!fs::is_directory(split_dir)) {
    throw DataError("missing dataset directory: " + split_dir.string());
  }

  std::vector<LabeledSample> samples;
  for (const Label label : {Label::normal, Label::abnormal}) {
    const fs::path class_dir = split_dir / label_name(label);
    if (!fs::is_directory(class_dir)) continue;
    for (const fs::path& path : list_pngs_sorted(class_dir)) {
      LabeledSample sample;
      sample.id = std::string(label_name(label)) + "/" + path.stem().string();
      sample.label = label;
      sample.image = read_png_gray(path.string());
      validate_dataset_image(sample.image, path.string());
      if (label == Label::abnormal) {
        fs::path mask_path = path.parent_path() / (path.stem().string() + "_mask.png");
        if (fs::exists(mask_path)) {
          const GrayscaleImage raw = read_png_gray(mask_path.string());
          if (raw.height != sample.image.height || raw.width != sample.image.width) {
            throw DataError("mask shape mismatch for " + path.string());
          }
          sample.lesion_mask = binarize_mask(raw);
        }
      }
      samples.push_back(std::move(sample));
    }
  }

  if (split == "train") {
    const bool any_normal = std::any_of(samples.begin(), samples.end(),
        [](const LabeledSample& s) { return s.label == Label::normal; });
    if (!any_normal) throw DataError("no training images in " + split_dir.string());
  } else if (samples.empty()) {
    throw DataError("no test images in " + split_dir.string());
  }
  return samples;
}

void export_dataset(const std::string& root_path, const std::string& split,
                    const std::vector<LabeledSample>& samples) {
  for (const auto& sample : samples) {
    const fs::path class_dir =
        fs::path(root_path) / split / label_name(sample.label);
    fs::create_directories(class_dir);
    const std::string stem = sample.id.find('/') == std::string::npos
                                 ? sample.id
                                 : sample.id.substr(sample.id.find('/') + 1);
    write_png_gray16((class_dir / (stem + ".png")).string(), sample.image);
    if (sample.lesion_mask) {
      GrayscaleImage mask_img(sample.lesion_mask->height, sample.lesion_mask->width);
      for (std::size_t i = 0; i < mask_img.pixels.size(); ++i) {
        mask_img.pixels[i] = sample.lesion_mask->values[i] ? 1.0 : 0.0;
      }
      write_png_gray8((class_dir / (stem + "_mask.png")).string(), mask_img);
    }
  }
}

}  // namespace proxyad
