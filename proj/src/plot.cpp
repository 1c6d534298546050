#include "proxyad/plot.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>

namespace proxyad {

namespace {

struct Color {
  std::uint8_t r, g, b;
};

constexpr Color kBlack{0, 0, 0};
constexpr Color kGray{180, 180, 180};
constexpr Color kBlue{46, 88, 196};
constexpr Color kRed{204, 54, 38};

struct Canvas {
  int height, width;
  std::vector<std::uint8_t> rgb;

  Canvas(int h, int w) : height(h), width(w), rgb(static_cast<std::size_t>(h) * w * 3, 255) {}

  void set(int r, int c, Color color) {
    if (r < 0 || r >= height || c < 0 || c >= width) return;
    std::uint8_t* p = rgb.data() + (static_cast<std::size_t>(r) * width + c) * 3;
    p[0] = color.r;
    p[1] = color.g;
    p[2] = color.b;
  }

  void line(int r0, int c0, int r1, int c1, Color color) {
    const int dr = std::abs(r1 - r0), dc = std::abs(c1 - c0);
    const int sr = r0 < r1 ? 1 : -1, sc = c0 < c1 ? 1 : -1;
    int err = (dc > dr ? dc : -dr) / 2;
    while (true) {
      set(r0, c0, color);
      if (r0 == r1 && c0 == c1) break;
      const int e2 = err;
      if (e2 > -dc) {
        err -= dr;
        c0 += sc;
      }
      if (e2 < dr) {
        err += dc;
        r0 += sr;
      }
    }
  }

  void fill_rect(int r0, int c0, int r1, int c1, Color color) {
    for (int r = std::max(0, r0); r <= std::min(height - 1, r1); ++r) {
      for (int c = std::max(0, c0); c <= std::min(width - 1, c1); ++c) {
        set(r, c, color);
      }
    }
  }
};

// 3x5 digit glyphs for axis labels: 0-9, '.', '-', 'e'.
const char* glyph(char ch) {
  switch (ch) {
    case '0': return "111101101101111";
    case '1': return "010110010010111";
    case '2': return "111001111100111";
    case '3': return "111001111001111";
    case '4': return "101101111001001";
    case '5': return "111100111001111";
    case '6': return "111100111101111";
    case '7': return "111001010010010";
    case '8': return "111101111101111";
    case '9': return "111101111001111";
    case '.': return "000000000000010";
    case '-': return "000000111000000";
    case 'e': return "000111111100111";
    case '+': return "000010111010000";
    default: return "000000000000000";
  }
}

void draw_text(Canvas& canvas, int r, int c, const std::string& text, Color color) {
  for (char ch : text) {
    const char* g = glyph(ch);
    for (int gr = 0; gr < 5; ++gr) {
      for (int gc = 0; gc < 3; ++gc) {
        if (g[gr * 3 + gc] == '1') canvas.set(r + gr, c + gc, color);
      }
    }
    c += 4;
  }
}

std::string short_number(double v) {
  char buf[32];
  if (v == 0.0) return "0";
  if (std::abs(v) >= 0.01 && std::abs(v) < 10000.0) {
    std::snprintf(buf, sizeof(buf), "%.3g", v);
  } else {
    std::snprintf(buf, sizeof(buf), "%.1e", v);
  }
  return buf;
}

void write_canvas_png(const std::string& path, const Canvas& canvas) {
  std::FILE* file = std::fopen(path.c_str(), "wb");
  if (!file) throw DataError("cannot write plot: " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(file);
    throw DataError("plot PNG encode failed: " + path);
  }
  png_init_io(png, file);
  png_set_IHDR(png, info, canvas.width, canvas.height, 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int r = 0; r < canvas.height; ++r) {
    png_write_row(png, const_cast<png_bytep>(canvas.rgb.data() +
                                             static_cast<std::size_t>(r) * canvas.width * 3));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(file);
}

struct Axes {
  int top, left, bottom, right;
  double x_min, x_max, y_min, y_max;

  int col(double x) const {
    const double t = x_max > x_min ? (x - x_min) / (x_max - x_min) : 0.5;
    return left + static_cast<int>(t * (right - left));
  }
  int row(double y) const {
    const double t = y_max > y_min ? (y - y_min) / (y_max - y_min) : 0.5;
    return bottom - static_cast<int>(t * (bottom - top));
  }
};

void draw_axes(Canvas& canvas, const Axes& axes) {
  canvas.line(axes.top, axes.left, axes.bottom, axes.left, kBlack);
  canvas.line(axes.bottom, axes.left, axes.bottom, axes.right, kBlack);
  for (int i = 0; i <= 4; ++i) {
    const double ty = axes.y_min + (axes.y_max - axes.y_min) * i / 4.0;
    const int r = axes.row(ty);
    canvas.line(r, axes.left - 3, r, axes.left, kBlack);
    draw_text(canvas, r - 2, 4, short_number(ty), kBlack);
    const double tx = axes.x_min + (axes.x_max - axes.x_min) * i / 4.0;
    const int c = axes.col(tx);
    canvas.line(axes.bottom, c, axes.bottom + 3, c, kBlack);
    draw_text(canvas, axes.bottom + 6, c - 6, short_number(tx), kBlack);
  }
}

}  // namespace

void plot_line_chart(const std::string& path, const std::vector<double>& xs,
                     const std::vector<double>& ys, int width, int height) {
  if (xs.empty() || xs.size() != ys.size()) {
    throw ArgumentError("plot_line_chart: xs/ys must be non-empty and equal-sized");
  }
  Canvas canvas(height, width);
  Axes axes{20, 56, height - 28, width - 16, 0, 0, 0, 0};
  axes.x_min = *std::min_element(xs.begin(), xs.end());
  axes.x_max = *std::max_element(xs.begin(), xs.end());
  axes.y_min = *std::min_element(ys.begin(), ys.end());
  axes.y_max = *std::max_element(ys.begin(), ys.end());
  if (axes.y_max == axes.y_min) {
    axes.y_min -= 0.5;
    axes.y_max += 0.5;
  }
  if (axes.x_max == axes.x_min) {
    axes.x_min -= 0.5;
    axes.x_max += 0.5;
  }
  draw_axes(canvas, axes);
  for (std::size_t i = 1; i < xs.size(); ++i) {
    canvas.line(axes.row(ys[i - 1]), axes.col(xs[i - 1]), axes.row(ys[i]),
                axes.col(xs[i]), kBlue);
  }
  for (std::size_t i = 0; i < xs.size(); ++i) {
    canvas.fill_rect(axes.row(ys[i]) - 2, axes.col(xs[i]) - 2, axes.row(ys[i]) + 2,
                     axes.col(xs[i]) + 2, kBlue);
  }
  write_canvas_png(path, canvas);
}

void plot_score_histograms(const std::string& path,
                           const std::vector<double>& normal_scores,
                           const std::vector<double>& abnormal_scores, int bins,
                           int width, int height) {
  if (normal_scores.empty() && abnormal_scores.empty()) {
    throw ArgumentError("plot_score_histograms: no scores");
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : normal_scores) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (double v : abnormal_scores) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi == lo) hi = lo + 1.0;

  auto histogram = [&](const std::vector<double>& scores) {
    std::vector<int> counts(bins, 0);
    for (double v : scores) {
      int b = static_cast<int>((v - lo) / (hi - lo) * bins);
      b = std::clamp(b, 0, bins - 1);
      ++counts[b];
    }
    return counts;
  };
  const std::vector<int> h_normal = histogram(normal_scores);
  const std::vector<int> h_abnormal = histogram(abnormal_scores);
  const int peak =
      std::max(*std::max_element(h_normal.begin(), h_normal.end()),
               *std::max_element(h_abnormal.begin(), h_abnormal.end()));

  Canvas canvas(height, width);
  Axes axes{20, 56, height - 28, width - 16,
            lo, hi, 0.0, static_cast<double>(std::max(peak, 1))};
  draw_axes(canvas, axes);

  const double bar = static_cast<double>(axes.right - axes.left) / bins;
  for (int b = 0; b < bins; ++b) {
    const int c0 = axes.left + static_cast<int>(b * bar);
    const int c1 = axes.left + static_cast<int>((b + 1) * bar) - 1;
    const int mid = (c0 + c1) / 2;
    // Side-by-side half-width bars per bin: normal blue, abnormal red.
    if (h_normal[b] > 0) {
      canvas.fill_rect(axes.row(h_normal[b]), c0, axes.bottom - 1, mid, kBlue);
    }
    if (h_abnormal[b] > 0) {
      canvas.fill_rect(axes.row(h_abnormal[b]), mid + 1, axes.bottom - 1, c1, kRed);
    }
  }
  write_canvas_png(path, canvas);
}

void save_image_grid(const std::string& path,
                     const std::vector<std::vector<GrayscaleImage>>& rows) {
  if (rows.empty() || rows.front().empty()) {
    throw ArgumentError("save_image_grid: empty grid");
  }
  const int panel_h = rows.front().front().height;
  const int panel_w = rows.front().front().width;
  const int n_cols = static_cast<int>(rows.front().size());
  const int grid_h = static_cast<int>(rows.size()) * (panel_h + 1) - 1;
  const int grid_w = n_cols * (panel_w + 1) - 1;

  GrayscaleImage grid(grid_h, grid_w, 1.0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (static_cast<int>(rows[r].size()) != n_cols) {
      throw ArgumentError("save_image_grid: ragged rows");
    }
    for (int c = 0; c < n_cols; ++c) {
      const GrayscaleImage& panel = rows[r][c];
      if (panel.height != panel_h || panel.width != panel_w) {
        throw ArgumentError("save_image_grid: panel size mismatch");
      }
      const int r0 = static_cast<int>(r) * (panel_h + 1);
      const int c0 = c * (panel_w + 1);
      for (int pr = 0; pr < panel_h; ++pr) {
        for (int pc = 0; pc < panel_w; ++pc) {
          grid.at(r0 + pr, c0 + pc) = std::clamp(panel.at(pr, pc), 0.0, 1.0);
        }
      }
    }
  }
  write_png_gray8(path, grid);
}

}  // namespace proxyad
