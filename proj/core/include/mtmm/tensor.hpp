#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "mtmm/errors.hpp"

namespace mtmm {

/// Dense row-major 2-D tensor of doubles.
///
/// `grad`, when non-empty, has exactly the same shape as `data` and holds
/// the accumulated adjoint from Graph::backward. Leaves opt in to gradient
/// tracking through `requires_grad`.
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;
  bool requires_grad = false;
  std::vector<double> grad;

  Tensor() = default;

  Tensor(int r, int c) : rows(r), cols(c) {
    if (r < 0 || c < 0) throw ShapeError("tensor dimensions must be non-negative");
    data.assign(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), 0.0);
  }

  static Tensor zeros(int r, int c) { return Tensor(r, c); }

  static Tensor full(int r, int c, double v) {
    Tensor t(r, c);
    for (double& x : t.data) x = v;
    return t;
  }

  static Tensor ones(int r, int c) { return full(r, c, 1.0); }

  /// 1xN row tensor from a list of values.
  static Tensor row(std::initializer_list<double> values) {
    Tensor t(1, static_cast<int>(values.size()));
    std::size_t i = 0;
    for (double v : values) t.data[i++] = v;
    return t;
  }

  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows_in) {
    const int r = static_cast<int>(rows_in.size());
    const int c = r > 0 ? static_cast<int>(rows_in.begin()->size()) : 0;
    Tensor t(r, c);
    int i = 0;
    for (const auto& row : rows_in) {
      if (static_cast<int>(row.size()) != c) throw ShapeError("ragged row list");
      int j = 0;
      for (double v : row) t.at(i, j++) = v;
      ++i;
    }
    return t;
  }

  double& at(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
  double at(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }

  std::size_t size() const { return data.size(); }

  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

  std::string shape_str() const {
    return std::to_string(rows) + "x" + std::to_string(cols);
  }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  /// Allocates a zeroed grad buffer if none exists yet.
  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }

  void zero_grad() { grad.assign(data.size(), 0.0); }
};

}  // namespace mtmm
