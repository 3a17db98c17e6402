// Copyright 2026 The xmreid Authors.
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

// Dense symmetric linear algebra: Cholesky, cyclic-Jacobi eigendecomposition
// and the symmetric-definite generalized eigenproblem A v = lambda B v.
//
// All routines are free functions templated on the Eigen expression type and
// return plain dense matrices of the same scalar.

#ifndef XMREID_LINALG_H_
#define XMREID_LINALG_H_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "xmreid/error.h"

namespace xmreid {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = Mat<double>;
using Vector = Vec<double>;

template <typename Scalar>
struct EigenResult {
  Vec<Scalar> values;   // descending
  Mat<Scalar> vectors;  // column i pairs with values(i)
};

namespace linalg {

// Relative asymmetry accepted (and symmetrized away) by every routine.
inline constexpr double kSymmetryTolerance = 1e-9;
// Jacobi stops once the off-diagonal Frobenius norm is below this fraction
// of the input's Frobenius norm.
inline constexpr double kJacobiTolerance = 1e-12;
inline constexpr int kMaxSweeps = 100;
// Cholesky rejects pivots <= kPivotTolerance * trace(A) / n.
inline constexpr double kPivotTolerance = 1e-12;

template <typename Derived>
void check_finite(const Eigen::MatrixBase<Derived>& a, const char* what) {
  if (!a.allFinite()) {
    throw Error(Errc::kNonFiniteValue, std::string(what) + " has non-finite entries");
  }
}

}  // namespace linalg

// Returns (A + A^T) / 2 after verifying that A is square, finite and
// symmetric up to kSymmetryTolerance relative to its largest entry.
template <typename Derived>
Mat<typename Derived::Scalar> symmetrized(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  if (a.rows() != a.cols()) {
    throw Error(Errc::kNotSquare, "matrix is " + std::to_string(a.rows()) + "x" +
                                      std::to_string(a.cols()));
  }
  linalg::check_finite(a, "matrix");
  const Scalar scale = a.cwiseAbs().maxCoeff();
  const Scalar asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > Scalar(linalg::kSymmetryTolerance) * scale) {
    throw Error(Errc::kNotSymmetric,
                "max |A - A^T| = " + std::to_string(double(asym)));
  }
  return (a + a.transpose()) / Scalar(2);
}

// Lower-triangular L with L L^T = A.
template <typename Derived>
Mat<typename Derived::Scalar> cholesky(const Eigen::MatrixBase<Derived>& input) {
  using Scalar = typename Derived::Scalar;
  const Mat<Scalar> a = symmetrized(input);
  const Eigen::Index n = a.rows();
  const Scalar threshold = Scalar(linalg::kPivotTolerance) * a.trace() / Scalar(n);

  Mat<Scalar> l = Mat<Scalar>::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Scalar pivot =
        a(j, j) - l.row(j).head(j).squaredNorm();
    if (!(pivot > threshold) || !(pivot > Scalar(0))) {
      throw Error(Errc::kNotPositiveDefinite,
                  "pivot " + std::to_string(j) + " = " + std::to_string(double(pivot)));
    }
    const Scalar ljj = std::sqrt(pivot);
    l(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / ljj;
    }
  }
  return l;
}

namespace linalg {

// Makes the first clearly nonzero component of every column positive.
// "Clearly nonzero" means above 1e-10 of the column's largest magnitude, so
// rounding-level entries never decide the sign.
template <typename Scalar>
void canonicalize_signs(Mat<Scalar>& v) {
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    const Scalar cap = v.col(c).cwiseAbs().maxCoeff();
    if (cap == Scalar(0)) continue;
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
      if (std::abs(v(r, c)) > Scalar(1e-10) * cap) {
        if (v(r, c) < Scalar(0)) v.col(c) = -v.col(c);
        break;
      }
    }
  }
}

// Sorts eigenpairs by descending value; ties keep their diagonal order.
template <typename Scalar>
EigenResult<Scalar> sorted_pairs(const Vec<Scalar>& diag, const Mat<Scalar>& vectors) {
  std::vector<Eigen::Index> order(diag.size());
  std::iota(order.begin(), order.end(), Eigen::Index(0));
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return diag(x) > diag(y); });
  EigenResult<Scalar> out;
  out.values.resize(diag.size());
  out.vectors.resize(vectors.rows(), vectors.cols());
  for (std::size_t i = 0; i < order.size(); ++i) {
    out.values(i) = diag(order[i]);
    out.vectors.col(i) = vectors.col(order[i]);
  }
  return out;
}

// Cyclic Jacobi on an already symmetric matrix.
template <typename Scalar>
EigenResult<Scalar> jacobi_eigen(Mat<Scalar> a) {
  const Eigen::Index n = a.rows();
  Mat<Scalar> v = Mat<Scalar>::Identity(n, n);
  const Scalar target = Scalar(kJacobiTolerance) * a.norm();

  auto off_norm = [&]() {
    Scalar sum = 0;
    for (Eigen::Index q = 1; q < n; ++q) sum += a.col(q).head(q).squaredNorm();
    return std::sqrt(Scalar(2) * sum);
  };

  int sweep = 0;
  while (off_norm() > target) {
    if (sweep++ == kMaxSweeps) {
      throw Error(Errc::kNoConvergence,
                  "Jacobi did not converge in " + std::to_string(kMaxSweeps) + " sweeps");
    }
    for (Eigen::Index p = 0; p + 1 < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const Scalar apq = a(p, q);
        if (apq == Scalar(0)) continue;
        // Rotation angle that annihilates a(p, q); t = tan(angle) is the
        // smaller root of t^2 + 2 theta t - 1 = 0.
        const Scalar theta = (a(q, q) - a(p, p)) / (Scalar(2) * apq);
        Scalar t;
        if (std::abs(theta) > Scalar(1e150)) {
          t = Scalar(1) / (Scalar(2) * theta);
        } else {
          t = Scalar(1) / (std::abs(theta) + std::sqrt(theta * theta + Scalar(1)));
          if (theta < Scalar(0)) t = -t;
        }
        const Scalar c = Scalar(1) / std::sqrt(t * t + Scalar(1));
        const Scalar s = t * c;

        Vec<Scalar> col_p = a.col(p);
        a.col(p) = c * col_p - s * a.col(q);
        a.col(q) = s * col_p + c * a.col(q);
        Eigen::Matrix<Scalar, 1, Eigen::Dynamic> row_p = a.row(p);
        a.row(p) = c * row_p - s * a.row(q);
        a.row(q) = s * row_p + c * a.row(q);
        a(p, q) = Scalar(0);
        a(q, p) = Scalar(0);

        col_p = v.col(p);
        v.col(p) = c * col_p - s * v.col(q);
        v.col(q) = s * col_p + c * v.col(q);
      }
    }
  }
  EigenResult<Scalar> out = sorted_pairs<Scalar>(a.diagonal(), v);
  canonicalize_signs(out.vectors);
  return out;
}

}  // namespace linalg

// Eigendecomposition of a symmetric matrix: A V = V diag(values), V^T V = I,
// values descending.
template <typename Derived>
EigenResult<typename Derived::Scalar> eigh(const Eigen::MatrixBase<Derived>& a) {
  return linalg::jacobi_eigen(symmetrized(a));
}

// Generalized problem A v = lambda B v with B symmetric positive definite.
// Reduces through B = L L^T to the standard problem on L^-1 A L^-T; the
// returned vectors satisfy V^T B V = I.
template <typename DerivedA, typename DerivedB>
EigenResult<typename DerivedA::Scalar> gen_eigh(const Eigen::MatrixBase<DerivedA>& a,
                                                const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  const Mat<Scalar> as = symmetrized(a);
  const Mat<Scalar> l = cholesky(b);
  if (as.rows() != l.rows()) {
    throw Error(Errc::kNotSquare, "A and B differ in size");
  }
  const auto lower = l.template triangularView<Eigen::Lower>();
  const Mat<Scalar> left = lower.solve(as);                              // L^-1 A
  Mat<Scalar> c = lower.solve(left.transpose()).transpose();             // L^-1 A L^-T
  c = (c + c.transpose()) / Scalar(2);
  EigenResult<Scalar> reduced = linalg::jacobi_eigen(std::move(c));
  reduced.vectors =
      l.transpose().template triangularView<Eigen::Upper>().solve(reduced.vectors);
  linalg::canonicalize_signs(reduced.vectors);
  return reduced;
}

// f(S) = V diag(f(lambda)) V^T for a symmetric PSD matrix, with eigenvalues
// at or below rel_cutoff * lambda_max treated as zero (f applied only to the
// retained ones, discarded ones map to 0).
template <typename Derived, typename Fn>
Mat<typename Derived::Scalar> spectral_map(const Eigen::MatrixBase<Derived>& s,
                                           double rel_cutoff, Fn fn) {
  using Scalar = typename Derived::Scalar;
  const EigenResult<Scalar> e = eigh(s);
  const Scalar top = e.values.size() ? e.values(0) : Scalar(0);
  Vec<Scalar> mapped = Vec<Scalar>::Zero(e.values.size());
  if (top > Scalar(0)) {
    for (Eigen::Index i = 0; i < e.values.size(); ++i) {
      if (e.values(i) > Scalar(rel_cutoff) * top) mapped(i) = fn(e.values(i));
    }
  }
  Mat<Scalar> out = e.vectors * mapped.asDiagonal() * e.vectors.transpose();
  return (out + out.transpose()) / Scalar(2);
}

// Pseudo-inverse square root S^{-1/2}.
template <typename Derived>
Mat<typename Derived::Scalar> inverse_sqrt(const Eigen::MatrixBase<Derived>& s,
                                           double rel_cutoff = 1e-10) {
  using Scalar = typename Derived::Scalar;
  return spectral_map(s, rel_cutoff, [](Scalar x) { return Scalar(1) / std::sqrt(x); });
}

// Symmetric pseudo-inverse S^+.
template <typename Derived>
Mat<typename Derived::Scalar> pseudo_inverse(const Eigen::MatrixBase<Derived>& s,
                                             double rel_cutoff = 1e-10) {
  using Scalar = typename Derived::Scalar;
  return spectral_map(s, rel_cutoff, [](Scalar x) { return Scalar(1) / x; });
}

}  // namespace xmreid

#endif  // XMREID_LINALG_H_
