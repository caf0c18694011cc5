#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sroc/matrix.hpp"

namespace sroc {

struct ImageSize {
  std::size_t height = 0;
  std::size_t width = 0;
  bool operator==(const ImageSize&) const = default;
};

// Binary ground-truth mask; nonzero means anomalous.
struct BinaryMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> data;

  BinaryMask() = default;
  BinaryMask(std::size_t h, std::size_t w) : height(h), width(w), data(h * w, 0) {}
  std::uint8_t& at(std::size_t i, std::size_t j) { return data[i * width + j]; }
  std::uint8_t at(std::size_t i, std::size_t j) const { return data[i * width + j]; }
  std::size_t foreground() const;
};

// Bilinear resize with half-pixel centers and edge clamping.
FloatMatrix resize_bilinear(const FloatMatrix& src, ImageSize dst);
FloatMatrix resize_bilinear(const DoubleMatrix& src, ImageSize dst);

// Separable Gaussian blur, kernel truncated at 4 sigma, mirror-reflected borders.
// sigma <= 0 returns the input unchanged.
FloatMatrix gaussian_smooth(const FloatMatrix& src, double sigma);

// Reads an 8-bit PNG (any color type, reduced to gray); nonzero pixels are foreground.
BinaryMask read_mask_png(const std::filesystem::path& path);
void write_mask_png(const BinaryMask& mask, const std::filesystem::path& path);

}  // namespace sroc
