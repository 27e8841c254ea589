#include "faultcast/whiten.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "faultcast/error.hpp"

namespace faultcast::learn {

Whitener Whitener::identity(size_t d) {
  Whitener w;
  w.mean.assign(d, 0.0);
  w.w = Matrix(d, d);
  for (size_t i = 0; i < d; ++i) w.w.at(i, i) = 1.0;
  w.eigenvalues.assign(d, 1.0);
  return w;
}

std::vector<double> Whitener::apply(std::span<const double> x) const {
  size_t d = mean.size();
  if (x.size() != d) throw UsageError("feature width mismatch");
  std::vector<double> out(w.rows, 0.0);
  for (size_t i = 0; i < w.rows; ++i) {
    double acc = 0.0;
    for (size_t j = 0; j < d; ++j) acc += w.at(i, j) * (x[j] - mean[j]);
    out[i] = acc;
  }
  return out;
}

Matrix Whitener::apply(const Matrix& x) const {
  Matrix out(x.rows, w.rows);
  for (size_t r = 0; r < x.rows; ++r) {
    auto v = apply(x.row(r));
    for (size_t c = 0; c < v.size(); ++c) out.at(r, c) = v[c];
  }
  return out;
}

void jacobi_eigen_symmetric(const Matrix& m, std::vector<double>& eigenvalues,
                            Matrix& eigenvectors) {
  size_t d = m.cols;
  Matrix a = m;
  Matrix v(d, d);
  for (size_t i = 0; i < d; ++i) v.at(i, i) = 1.0;

  // Cyclic Jacobi sweeps; each rotation zeroes one off-diagonal pair.
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (size_t p = 0; p < d; ++p)
      for (size_t q = p + 1; q < d; ++q) off += a.at(p, q) * a.at(p, q);
    if (off < 1e-30) break;
    for (size_t p = 0; p < d; ++p) {
      for (size_t q = p + 1; q < d; ++q) {
        double apq = a.at(p, q);
        if (apq == 0.0) continue;
        double app = a.at(p, p), aqq = a.at(q, q);
        double theta = (aqq - app) / (2.0 * apq);
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (size_t k = 0; k < d; ++k) {
          double akp = a.at(k, p), akq = a.at(k, q);
          a.at(k, p) = c * akp - s * akq;
          a.at(k, q) = s * akp + c * akq;
        }
        for (size_t k = 0; k < d; ++k) {
          double apk = a.at(p, k), aqk = a.at(q, k);
          a.at(p, k) = c * apk - s * aqk;
          a.at(q, k) = s * apk + c * aqk;
        }
        for (size_t k = 0; k < d; ++k) {
          double vkp = v.at(k, p), vkq = v.at(k, q);
          v.at(k, p) = c * vkp - s * vkq;
          v.at(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<size_t> order(d);
  std::iota(order.begin(), order.end(), size_t{0});
  std::vector<double> diag(d);
  for (size_t i = 0; i < d; ++i) diag[i] = a.at(i, i);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t x, size_t y) { return diag[x] > diag[y]; });

  eigenvalues.resize(d);
  eigenvectors = Matrix(d, d);
  for (size_t i = 0; i < d; ++i) {
    size_t src = order[i];
    eigenvalues[i] = diag[src];
    // column src of v is the eigenvector; store as row i, sign-pinned
    size_t pivot = 0;
    double best = -1.0;
    for (size_t k = 0; k < d; ++k) {
      double mag = std::fabs(v.at(k, src));
      if (mag > best) {
        best = mag;
        pivot = k;
      }
    }
    double sign = v.at(pivot, src) < 0.0 ? -1.0 : 1.0;
    for (size_t k = 0; k < d; ++k) eigenvectors.at(i, k) = sign * v.at(k, src);
  }
}

Whitener whiten_fit(const Matrix& x) {
  if (x.rows < 2) throw UsageError("whitening needs at least 2 rows");
  size_t n = x.rows, d = x.cols;

  Whitener out;
  out.mean.assign(d, 0.0);
  for (size_t r = 0; r < n; ++r)
    for (size_t c = 0; c < d; ++c) out.mean[c] += x.at(r, c);
  for (auto& m : out.mean) m /= static_cast<double>(n);

  Matrix cov(d, d);
  for (size_t r = 0; r < n; ++r)
    for (size_t i = 0; i < d; ++i) {
      double di = x.at(r, i) - out.mean[i];
      for (size_t j = i; j < d; ++j) cov.at(i, j) += di * (x.at(r, j) - out.mean[j]);
    }
  for (size_t i = 0; i < d; ++i)
    for (size_t j = i; j < d; ++j) {
      cov.at(i, j) /= static_cast<double>(n - 1);
      cov.at(j, i) = cov.at(i, j);
    }

  Matrix vectors;
  jacobi_eigen_symmetric(cov, out.eigenvalues, vectors);

  out.w = Matrix(d, d);
  for (size_t i = 0; i < d; ++i) {
    double lambda = out.eigenvalues[i];
    if (lambda <= kEigenvalueFloor) continue;  // floored component: zero row
    double scale = 1.0 / std::sqrt(lambda);
    for (size_t j = 0; j < d; ++j) out.w.at(i, j) = scale * vectors.at(i, j);
  }
  return out;
}

}  // namespace faultcast::learn
