// Copyright 2026 The starbell Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "starbell/error.hpp"

namespace starbell {

using Complex = std::complex<double>;

inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kTraceTol = 1e-12;
inline constexpr double kPsdSlack = 1e-10;

/// Dense square complex matrix, row-major. The single carrier for states,
/// effects, Kraus and unitary operators. Dimensions stay tiny (at most
/// 2^(2m) with m <= 4), so exact dense arithmetic is the right trade.
class ComplexMatrix {
 public:
  explicit ComplexMatrix(std::size_t dim)
      : dim_(dim), entries_(dim * dim, Complex{0.0, 0.0}) {
    if (dim == 0) throw NumericalError("matrix dimension must be positive");
  }

  static ComplexMatrix identity(std::size_t dim) {
    ComplexMatrix m(dim);
    for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t dim() const { return dim_; }

  Complex& operator()(std::size_t r, std::size_t c) {
    return entries_[r * dim_ + c];
  }
  const Complex& operator()(std::size_t r, std::size_t c) const {
    return entries_[r * dim_ + c];
  }

  const std::vector<Complex>& entries() const { return entries_; }

  ComplexMatrix& operator+=(const ComplexMatrix& o) {
    require_same_dim(o);
    for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i] += o.entries_[i];
    return *this;
  }
  ComplexMatrix& operator-=(const ComplexMatrix& o) {
    require_same_dim(o);
    for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i] -= o.entries_[i];
    return *this;
  }
  ComplexMatrix& operator*=(Complex s) {
    for (auto& e : entries_) e *= s;
    return *this;
  }

  friend ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) {
    a += b;
    return a;
  }
  friend ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) {
    a -= b;
    return a;
  }
  friend ComplexMatrix operator*(Complex s, ComplexMatrix a) {
    a *= s;
    return a;
  }

 private:
  void require_same_dim(const ComplexMatrix& o) const {
    if (dim_ != o.dim_)
      throw NumericalError("matrix dimension mismatch: " +
                           std::to_string(dim_) + " vs " +
                           std::to_string(o.dim_));
  }

  std::size_t dim_;
  std::vector<Complex> entries_;
};

inline ComplexMatrix pauli_x() {
  ComplexMatrix m(2);
  m(0, 1) = 1.0;
  m(1, 0) = 1.0;
  return m;
}

inline ComplexMatrix pauli_y() {
  ComplexMatrix m(2);
  m(0, 1) = Complex{0.0, -1.0};
  m(1, 0) = Complex{0.0, 1.0};
  return m;
}

inline ComplexMatrix pauli_z() {
  ComplexMatrix m(2);
  m(0, 0) = 1.0;
  m(1, 1) = -1.0;
  return m;
}

/// Kronecker product; left factor varies slowest.
inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  const std::size_t da = a.dim(), db = b.dim();
  ComplexMatrix out(da * db);
  for (std::size_t i = 0; i < da; ++i)
    for (std::size_t j = 0; j < da; ++j) {
      const Complex aij = a(i, j);
      if (aij == Complex{0.0, 0.0}) continue;
      for (std::size_t k = 0; k < db; ++k)
        for (std::size_t l = 0; l < db; ++l)
          out(i * db + k, j * db + l) = aij * b(k, l);
    }
  return out;
}

inline ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.dim() != b.dim())
    throw NumericalError("matmul dimension mismatch: " +
                         std::to_string(a.dim()) + " vs " +
                         std::to_string(b.dim()));
  const std::size_t d = a.dim();
  ComplexMatrix out(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t k = 0; k < d; ++k) {
      const Complex aik = a(i, k);
      if (aik == Complex{0.0, 0.0}) continue;
      for (std::size_t j = 0; j < d; ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

inline Complex trace(const ComplexMatrix& m) {
  Complex t{0.0, 0.0};
  for (std::size_t i = 0; i < m.dim(); ++i) t += m(i, i);
  return t;
}

/// Tr[a * b] without materializing the product.
inline Complex trace_of_product(const ComplexMatrix& a,
                                const ComplexMatrix& b) {
  if (a.dim() != b.dim())
    throw NumericalError("trace_of_product dimension mismatch");
  Complex t{0.0, 0.0};
  const std::size_t d = a.dim();
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) t += a(i, j) * b(j, i);
  return t;
}

inline ComplexMatrix dagger(const ComplexMatrix& m) {
  ComplexMatrix out(m.dim());
  for (std::size_t i = 0; i < m.dim(); ++i)
    for (std::size_t j = 0; j < m.dim(); ++j) out(i, j) = std::conj(m(j, i));
  return out;
}

inline double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.dim() != b.dim())
    throw NumericalError("max_abs_diff dimension mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.entries().size(); ++i)
    worst = std::max(worst, std::abs(a.entries()[i] - b.entries()[i]));
  return worst;
}

inline bool is_hermitian(const ComplexMatrix& m, double tol = kHermitianTol) {
  for (std::size_t i = 0; i < m.dim(); ++i)
    for (std::size_t j = i; j < m.dim(); ++j)
      if (std::abs(m(i, j) - std::conj(m(j, i))) > tol) return false;
  return true;
}

/// Smallest eigenvalue of a 2x2 Hermitian matrix, in closed form.
inline double min_eigenvalue_2x2(const ComplexMatrix& m) {
  if (m.dim() != 2) throw NumericalError("min_eigenvalue_2x2 needs dim 2");
  const double a = m(0, 0).real();
  const double c = m(1, 1).real();
  const double half_sum = 0.5 * (a + c);
  const double half_diff = 0.5 * (a - c);
  return half_sum - std::sqrt(half_diff * half_diff + std::norm(m(0, 1)));
}

/// True iff all eigenvalues of Hermitian `m` are >= -slack, decided by a
/// Cholesky factorization of m + slack*I (no general eigensolver needed).
inline bool is_psd_within(const ComplexMatrix& m, double slack = kPsdSlack) {
  const std::size_t d = m.dim();
  std::vector<Complex> a(m.entries());
  for (std::size_t i = 0; i < d; ++i) a[i * d + i] += slack;
  // In-place LL^H; fails on a non-positive pivot.
  for (std::size_t j = 0; j < d; ++j) {
    double pivot = a[j * d + j].real();
    for (std::size_t k = 0; k < j; ++k) pivot -= std::norm(a[j * d + k]);
    if (pivot < 0.0) return false;
    const double ljj = std::sqrt(pivot);
    a[j * d + j] = ljj;
    for (std::size_t i = j + 1; i < d; ++i) {
      Complex s = a[i * d + j];
      for (std::size_t k = 0; k < j; ++k)
        s -= a[i * d + k] * std::conj(a[j * d + k]);
      a[i * d + j] = (ljj > 0.0) ? s / ljj : Complex{0.0, 0.0};
      if (ljj == 0.0 && std::abs(s) > 1e-12) return false;
    }
  }
  return true;
}

/// Unique PSD square root of a 2x2 Hermitian PSD matrix, via the identity
/// sqrt(M) = (M + sqrt(det M) I) / sqrt(tr M + 2 sqrt(det M)).
/// Rejects non-Hermitian or negative-eigenvalue input instead of clipping:
/// a failure here signals an unphysical operator upstream.
inline ComplexMatrix psd_sqrt_2x2(const ComplexMatrix& m) {
  if (m.dim() != 2) throw NumericalError("psd_sqrt_2x2 needs dim 2");
  if (!is_hermitian(m))
    throw NumericalError("psd_sqrt_2x2: input is not Hermitian");
  if (min_eigenvalue_2x2(m) < -kPsdSlack)
    throw NumericalError("psd_sqrt_2x2: input has eigenvalue below -1e-10");
  const double tau = m(0, 0).real() + m(1, 1).real();
  const double det =
      m(0, 0).real() * m(1, 1).real() - std::norm(m(0, 1));
  const double sqrt_det = std::sqrt(std::max(det, 0.0));
  const double denom_sq = tau + 2.0 * sqrt_det;
  ComplexMatrix out(2);
  if (denom_sq <= 0.0) return out;  // m is (numerically) the zero matrix
  const double inv_denom = 1.0 / std::sqrt(denom_sq);
  out = m;
  out(0, 0) += sqrt_det;
  out(1, 1) += sqrt_det;
  out *= inv_denom;
  return out;
}

/// A state: Hermitian, unit-trace, PSD (within the stated tolerances).
/// Construction validates; violations throw rather than clip, so engine
/// bugs surface instead of decaying into slightly-unphysical states.
class DensityOperator {
 public:
  explicit DensityOperator(ComplexMatrix m) : matrix_(std::move(m)) {
    if (!is_hermitian(matrix_, kHermitianTol))
      throw NumericalError("density operator is not Hermitian");
    if (std::abs(trace(matrix_) - Complex{1.0, 0.0}) > kTraceTol)
      throw NumericalError("density operator trace differs from 1");
    if (!is_psd_within(matrix_, kPsdSlack))
      throw NumericalError("density operator has eigenvalue below -1e-10");
  }

  const ComplexMatrix& matrix() const { return matrix_; }
  std::size_t dim() const { return matrix_.dim(); }

 private:
  ComplexMatrix matrix_;
};

}  // namespace starbell
