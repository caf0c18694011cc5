#include "sroc/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include <png.h>

#include "sroc/error.hpp"

namespace sroc {
namespace {

template <class T>
FloatMatrix resize_impl(const DenseMatrix<T>& src, ImageSize dst) {
  if (src.empty()) throw ShapeError("cannot resize an empty map");
  FloatMatrix out(dst.height, dst.width);
  const double sy = static_cast<double>(src.rows) / static_cast<double>(dst.height);
  const double sx = static_cast<double>(src.cols) / static_cast<double>(dst.width);
  for (std::size_t i = 0; i < dst.height; ++i) {
    const double fy = std::clamp((static_cast<double>(i) + 0.5) * sy - 0.5, 0.0, static_cast<double>(src.rows - 1));
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, src.rows - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t j = 0; j < dst.width; ++j) {
      const double fx =
          std::clamp((static_cast<double>(j) + 0.5) * sx - 0.5, 0.0, static_cast<double>(src.cols - 1));
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, src.cols - 1);
      const double wx = fx - static_cast<double>(x0);
      const double top = (1 - wx) * static_cast<double>(src(y0, x0)) + wx * static_cast<double>(src(y0, x1));
      const double bottom = (1 - wx) * static_cast<double>(src(y1, x0)) + wx * static_cast<double>(src(y1, x1));
      out(i, j) = static_cast<float>((1 - wy) * top + wy * bottom);
    }
  }
  return out;
}

// scipy-style 'reflect' indexing: d c b a | a b c d | d c b a
std::size_t reflect(std::ptrdiff_t k, std::size_t n) {
  const auto period = static_cast<std::ptrdiff_t>(2 * n);
  k %= period;
  if (k < 0) k += period;
  if (k >= static_cast<std::ptrdiff_t>(n)) k = period - 1 - k;
  return static_cast<std::size_t>(k);
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};

}  // namespace

std::size_t BinaryMask::foreground() const {
  return static_cast<std::size_t>(std::ranges::count_if(data, [](std::uint8_t v) { return v != 0; }));
}

FloatMatrix resize_bilinear(const FloatMatrix& src, ImageSize dst) { return resize_impl(src, dst); }
FloatMatrix resize_bilinear(const DoubleMatrix& src, ImageSize dst) { return resize_impl(src, dst); }

FloatMatrix gaussian_smooth(const FloatMatrix& src, double sigma) {
  if (sigma <= 0.0 || src.empty()) return src;
  const auto radius = static_cast<std::ptrdiff_t>(4.0 * sigma + 0.5);
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (std::ptrdiff_t t = -radius; t <= radius; ++t) {
    const double w = std::exp(-0.5 * static_cast<double>(t * t) / (sigma * sigma));
    kernel[static_cast<std::size_t>(t + radius)] = w;
    total += w;
  }
  for (double& w : kernel) w /= total;

  DoubleMatrix tmp(src.rows, src.cols);
  for (std::size_t i = 0; i < src.rows; ++i) {
    for (std::size_t j = 0; j < src.cols; ++j) {
      double acc = 0.0;
      for (std::ptrdiff_t t = -radius; t <= radius; ++t) {
        acc += kernel[static_cast<std::size_t>(t + radius)] *
               src(i, reflect(static_cast<std::ptrdiff_t>(j) + t, src.cols));
      }
      tmp(i, j) = acc;
    }
  }
  FloatMatrix out(src.rows, src.cols);
  for (std::size_t i = 0; i < src.rows; ++i) {
    for (std::size_t j = 0; j < src.cols; ++j) {
      double acc = 0.0;
      for (std::ptrdiff_t t = -radius; t <= radius; ++t) {
        acc += kernel[static_cast<std::size_t>(t + radius)] *
               tmp(reflect(static_cast<std::ptrdiff_t>(i) + t, src.rows), j);
      }
      out(i, j) = static_cast<float>(acc);
    }
  }
  return out;
}

BinaryMask read_mask_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw IoError("cannot read PNG " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    png_image_free(&image);
    throw IoError("cannot decode PNG " + path.string() + ": " + image.message);
  }
  BinaryMask mask(image.height, image.width);
  for (std::size_t k = 0; k < pixels.size(); ++k) mask.data[k] = pixels[k] != 0 ? 1 : 0;
  return mask;
}

void write_mask_png(const BinaryMask& mask, const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(mask.width);
  image.height = static_cast<png_uint_32>(mask.height);
  image.format = PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> pixels(mask.data.size());
  for (std::size_t k = 0; k < pixels.size(); ++k) pixels[k] = mask.data[k] ? 255 : 0;
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoError("cannot open " + path.string() + " for writing");
  if (!png_image_write_to_stdio(&image, file.get(), 0, pixels.data(), 0, nullptr)) {
    throw IoError("cannot encode PNG " + path.string() + ": " + image.message);
  }
}

}  // namespace sroc
