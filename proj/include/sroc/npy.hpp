#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace sroc {

// A little-endian float32 array in C order, as stored in an .npy file.
struct NpyArray {
  std::vector<std::size_t> shape;
  std::vector<float> data;

  std::size_t element_count() const;
};

// Parses NPY versions 1.0, 2.0 and 3.0 with dtype '<f4' and fortran_order False.
// Header problems raise ParseError carrying the byte offset of the fault.
NpyArray parse_npy(std::span<const unsigned char> bytes);
NpyArray read_npy(const std::filesystem::path& path);

// Serializes as NPY 1.0 (falling back to 2.0 only for headers over 64 KiB),
// header padded so the payload starts on a 64-byte boundary.
std::vector<unsigned char> encode_npy(std::span<const std::size_t> shape, std::span<const float> data);
void save_array_npy(std::span<const std::size_t> shape, std::span<const float> data,
                    const std::filesystem::path& path);
inline void save_array_npy(const NpyArray& array, const std::filesystem::path& path) {
  save_array_npy(array.shape, array.data, path);
}

}  // namespace sroc
