#pragma once

#include <cstddef>
#include <vector>

namespace passnet {

using Vector = std::vector<double>;

// Dense row-major matrix. Everything in this project is small (network
// layers, 10-ish dimensional covariances), so no attempt at BLAS-style
// performance is made.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // row-major, rows*cols entries

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), values(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }

  static Matrix identity(std::size_t n);
};

Vector matvec(const Matrix& m, const Vector& v);

double dot(const Vector& a, const Vector& b);
double norm2(const Vector& v);
double norm2_squared(const Vector& v);
double frobenius_norm(const Matrix& m);
bool all_finite(const Vector& v);
bool all_finite(const Matrix& m);

// Eigenvalues sorted descending, eigenvectors as matching orthonormal columns.
struct EigenDecomposition {
  Vector eigenvalues;
  Matrix eigenvectors;
};

// Cyclic Jacobi rotations; input must be square and symmetric to 1e-10
// (relative to its Frobenius norm). Sweeps until the off-diagonal Frobenius
// norm drops below 1e-12 relative.
EigenDecomposition sym_eigen(const Matrix& m);

// True iff every eigenvalue of the symmetric part (m + m^T)/2 is < -1e-10.
bool is_negative_definite(const Matrix& m);

}  // namespace passnet
