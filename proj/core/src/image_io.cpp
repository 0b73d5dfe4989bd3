#include "epr/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

#include "epr/saliency.hpp"

namespace epr {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

void RgbImage::set(int r, int c, std::uint8_t red, std::uint8_t green, std::uint8_t blue) {
  if (r < 0 || c < 0 || r >= rows || c >= cols) return;
  const std::size_t o = (static_cast<std::size_t>(r) * cols + c) * 3;
  rgb[o] = red;
  rgb[o + 1] = green;
  rgb[o + 2] = blue;
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  if (image.rows < 1 || image.cols < 1) throw std::invalid_argument("cannot encode an empty image");
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw std::runtime_error("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, info ? &info : nullptr);
    throw std::runtime_error("libpng failed while writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.cols), static_cast<png_uint_32>(image.rows), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int r = 0; r < image.rows; ++r) {
    png_write_row(png, const_cast<png_bytep>(image.rgb.data() + static_cast<std::size_t>(r) * image.cols * 3));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

RgbImage read_png(const std::filesystem::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw std::runtime_error("cannot read PNG " + path.string() + ": " + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  RgbImage out(static_cast<int>(img.height), static_cast<int>(img.width));
  if (!png_image_finish_read(&img, nullptr, out.rgb.data(), 0, nullptr)) {
    png_image_free(&img);
    throw std::runtime_error("cannot decode PNG " + path.string() + ": " + img.message);
  }
  return out;
}

RgbImage tensor_to_rgb(const Tensor& image) {
  if (image.rank() != 3) throw std::invalid_argument("expected a (C, H, W) image");
  const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
  RgbImage out(h, w);
  for (int r = 0; r < h; ++r) {
    for (int col = 0; col < w; ++col) {
      const auto ch = [&](int k) { return to_byte(image.at(std::min(k, c - 1), r, col)); };
      out.set(r, col, ch(0), ch(1), ch(2));
    }
  }
  return out;
}

RgbImage heatmap_rgb(const Grid& grid) {
  const double lo = grid.min();
  const double span = grid.max() - lo;
  RgbImage out(grid.rows, grid.cols);
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      const double t = span > 0.0 ? (grid.at(r, c) - lo) / span : 0.0;
      // piecewise-linear blue -> cyan -> yellow -> red
      const double red = std::clamp(2.0 * t - 0.5, 0.0, 1.0);
      const double green = std::clamp(1.5 - std::abs(4.0 * t - 2.0), 0.0, 1.0);
      const double blue = std::clamp(1.5 - 2.0 * t, 0.0, 1.0);
      out.set(r, c, to_byte(red), to_byte(green), to_byte(blue));
    }
  }
  return out;
}

}  // namespace epr
