#pragma once

#include <cstddef>
#include <vector>

namespace josc {

/// Dense row-major matrix of doubles, sized once and indexed (row, col).
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

  double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

  bool operator==(const Matrix&) const = default;
};

}  // namespace josc
