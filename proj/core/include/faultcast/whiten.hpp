// PCA whitening: rotate onto covariance eigenvectors and rescale each
// component to unit variance, flooring tiny eigenvalues to zero.
#pragma once

#include <span>
#include <vector>

#include "faultcast/dataset.hpp"

namespace faultcast::learn {

constexpr double kEigenvalueFloor = 1e-8;

struct Whitener {
  std::vector<double> mean;  // d
  Matrix w;                  // d x d; row i = eigvec_i / sqrt(lambda_i), or zero when floored
  std::vector<double> eigenvalues;

  static Whitener identity(size_t d);

  size_t input_dims() const { return mean.size(); }
  std::vector<double> apply(std::span<const double> x) const;
  Matrix apply(const Matrix& x) const;
};

/// Jacobi eigendecomposition of the sample covariance (n-1 denominator).
/// Components are ordered by descending eigenvalue with a deterministic sign
/// convention; eigenvalues at or below kEigenvalueFloor map to a zero row.
/// Throws UsageError on fewer than 2 rows.
Whitener whiten_fit(const Matrix& x);

/// Symmetric eigendecomposition helper: returns eigenvalues (descending) and
/// eigenvectors as rows, sign-pinned so the largest-magnitude entry of each
/// vector is positive.
void jacobi_eigen_symmetric(const Matrix& a, std::vector<double>& eigenvalues,
                            Matrix& eigenvectors);

}  // namespace faultcast::learn
