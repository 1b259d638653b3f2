#include "fcrl/matrix.hpp"

#include <cblas.h>

namespace fcrl {

namespace {
void check_inner(int a, int b, const char* what) {
  if (a != b) {
    throw InternalError(std::string("matmul inner dimension mismatch in ") +
                        what + ": " + std::to_string(a) +
                        " vs " + std::to_string(b));
  }
}
}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  check_inner(a.cols(), b.rows(), "matmul");
  Matrix c(a.rows(), b.cols());
  if (a.rows() == 0 || b.cols() == 0 || a.cols() == 0) return c;
  cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, a.rows(), b.cols(),
              a.cols(), 1.0, a.data(), a.cols(), b.data(), b.cols(), 0.0,
              c.data(), c.cols());
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  check_inner(a.rows(), b.rows(), "matmul_tn");
  Matrix c(a.cols(), b.cols());
  if (c.rows() == 0 || c.cols() == 0 || a.rows() == 0) return c;
  cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, a.cols(), b.cols(),
              a.rows(), 1.0, a.data(), a.cols(), b.data(), b.cols(), 0.0,
              c.data(), c.cols());
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  check_inner(a.cols(), b.cols(), "matmul_nt");
  Matrix c(a.rows(), b.rows());
  if (c.rows() == 0 || c.cols() == 0 || a.cols() == 0) return c;
  cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, a.rows(), b.rows(),
              a.cols(), 1.0, a.data(), a.cols(), b.data(), b.cols(), 0.0,
              c.data(), c.cols());
  return c;
}

bool all_finite(const Matrix& m) { return all_finite(m.raw()); }

bool all_finite(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace fcrl
