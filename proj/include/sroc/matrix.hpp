#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace sroc {

// Row-major dense matrix. Used for embedding banks, pooled vectors and score maps.
template <class T>
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> data;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c, T fill = T{}) : rows(r), cols(c), data(r * c, fill) {}

  T& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<T> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const T> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  bool empty() const { return data.empty(); }

  bool operator==(const DenseMatrix&) const = default;
};

using FloatMatrix = DenseMatrix<float>;
using DoubleMatrix = DenseMatrix<double>;

}  // namespace sroc
