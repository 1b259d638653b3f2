#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "fcrl/errors.hpp"

namespace fcrl {

// Dense row-major double matrix. The only heavy op (matmul) is backed by BLAS.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols)
      : rows_(rows), cols_(cols),
        data_(static_cast<std::size_t>(rows) * cols, 0.0) {
    if (rows < 0 || cols < 0) throw InternalError("Matrix: negative shape");
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(int r, int c) {
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }
  double operator()(int r, int c) const {
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double* row(int r) { return data_.data() + static_cast<std::size_t>(r) * cols_; }
  const double* row(int r) const {
    return data_.data() + static_cast<std::size_t>(r) * cols_;
  }

  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

// c = a * b, a: m x k, b: k x n
Matrix matmul(const Matrix& a, const Matrix& b);
// c = a^T * b, a: k x m, b: k x n
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// c = a * b^T, a: m x k, b: n x k
Matrix matmul_nt(const Matrix& a, const Matrix& b);

bool all_finite(const Matrix& m);
bool all_finite(const std::vector<double>& v);

std::string shape_str(const Matrix& m);

}  // namespace fcrl
