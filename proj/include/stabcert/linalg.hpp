#pragma once

// Dense kernels shared by the regularizer and stability code. Everything here
// is a pure function of its arguments.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "stabcert/error.hpp"

namespace stabcert {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace linalg {

/// Singular values <= kRankTol * sigma_max are treated as zero.
inline constexpr double kRankTol = 1e-9;

/// Orthonormal vectors stored as the columns of an ambient_dim x k matrix.
/// k may be zero (the zero subspace).
struct OrthonormalBasis {
  Eigen::Index ambient_dim = 0;
  Matrix vectors;

  OrthonormalBasis() = default;
  OrthonormalBasis(Eigen::Index ambient, Matrix cols)
      : ambient_dim(ambient), vectors(std::move(cols)) {}

  static OrthonormalBasis empty(Eigen::Index ambient) { return {ambient, Matrix(ambient, 0)}; }

  Eigen::Index dim() const { return vectors.cols(); }
  bool is_zero() const { return vectors.cols() == 0; }

  /// Orthogonal projection of v onto the span.
  Vector project(const Vector& v) const {
    if (is_zero()) return Vector::Zero(ambient_dim);
    return vectors * (vectors.transpose() * v);
  }
};

struct Svd {
  Matrix U;      // rows x rows, orthogonal
  Vector sigma;  // min(rows, cols) entries, nonincreasing
  Matrix V;      // cols x cols, orthogonal
};

inline bool all_finite(const Matrix& a) { return a.allFinite(); }

/// Full SVD, A = U diag(sigma) V^T.
inline Svd svd(const Matrix& a) {
  require(a.rows() >= 1 && a.cols() >= 1, ErrorCode::DimensionMismatch, "svd of an empty matrix");
  require(a.allFinite(), ErrorCode::NonFinite, "svd input has non-finite entries");
  Eigen::JacobiSVD<Matrix> solver(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  require(solver.info() == Eigen::Success, ErrorCode::FactorizationFailure,
          "Jacobi SVD did not converge");
  return {solver.matrixU(), solver.singularValues(), solver.matrixV()};
}

inline Vector singular_values(const Matrix& a) {
  if (a.size() == 0) return Vector();
  require(a.allFinite(), ErrorCode::NonFinite, "singular values of a non-finite matrix");
  return Eigen::JacobiSVD<Matrix>(a).singularValues();
}

inline double spectral_norm(const Matrix& a) {
  const Vector s = singular_values(a);
  return s.size() == 0 ? 0.0 : s(0);
}

/// Number of singular values above tol * sigma_max.
inline Eigen::Index numerical_rank(const Vector& sigma, double tol = kRankTol) {
  if (sigma.size() == 0 || sigma(0) <= 0.0) return 0;
  const double cutoff = tol * sigma(0);
  Eigen::Index r = 0;
  while (r < sigma.size() && sigma(r) > cutoff) ++r;
  return r;
}

/// Orthonormal basis of the numerical kernel of A.
inline OrthonormalBasis kernel_basis(const Matrix& a, double tol = kRankTol) {
  require(tol > 0.0, ErrorCode::InvalidArgument, "kernel_basis tolerance must be positive");
  const Svd f = svd(a);
  const Eigen::Index rank = numerical_rank(f.sigma, tol);
  const Eigen::Index n = a.cols();
  return {n, f.V.rightCols(n - rank)};
}

/// Modified Gram-Schmidt with column pivoting (largest residual first),
/// applied twice for orthogonality. Columns whose residual norm falls to
/// tol or below are dropped.
inline OrthonormalBasis orthonormalize(const Matrix& columns, double tol = 1e-10) {
  const Eigen::Index n = columns.rows();
  Matrix work = columns;
  std::vector<Vector> out;
  std::vector<bool> used(static_cast<size_t>(work.cols()), false);
  for (Eigen::Index step = 0; step < work.cols(); ++step) {
    Eigen::Index best = -1;
    double best_norm = tol;
    for (Eigen::Index j = 0; j < work.cols(); ++j) {
      if (used[static_cast<size_t>(j)]) continue;
      const double nj = work.col(j).norm();
      if (nj > best_norm) {
        best_norm = nj;
        best = j;
      }
    }
    if (best < 0) break;
    used[static_cast<size_t>(best)] = true;
    Vector q = work.col(best) / best_norm;
    for (const Vector& prev : out) q -= prev.dot(q) * prev;  // reorthogonalize
    const double qn = q.norm();
    if (qn <= 0.0) continue;
    q /= qn;
    for (Eigen::Index j = 0; j < work.cols(); ++j) {
      if (!used[static_cast<size_t>(j)]) work.col(j) -= q.dot(work.col(j)) * q;
    }
    out.push_back(std::move(q));
  }
  Matrix basis(n, static_cast<Eigen::Index>(out.size()));
  for (size_t i = 0; i < out.size(); ++i) basis.col(static_cast<Eigen::Index>(i)) = out[i];
  return {n, std::move(basis)};
}

inline OrthonormalBasis orthonormalize(std::span<const Vector> vectors, Eigen::Index ambient,
                                       double tol = 1e-10) {
  Matrix cols(ambient, static_cast<Eigen::Index>(vectors.size()));
  for (size_t i = 0; i < vectors.size(); ++i) {
    require(vectors[i].size() == ambient, ErrorCode::DimensionMismatch,
            "orthonormalize: vectors of different lengths");
    cols.col(static_cast<Eigen::Index>(i)) = vectors[i];
  }
  return orthonormalize(cols, tol);
}

struct RestrictedSingular {
  double value = std::numeric_limits<double>::infinity();
  /// Unit vector in span(B) attaining value (empty when B is the zero subspace).
  Vector direction;
};

/// sigma_min(A [B]) together with the minimizing direction B v.
inline RestrictedSingular restricted_min_singular_with_direction(const Matrix& a,
                                                                 const OrthonormalBasis& b) {
  require(b.ambient_dim == a.cols(), ErrorCode::DimensionMismatch,
          "restricted_min_singular: basis ambient dimension differs from operator columns");
  if (b.is_zero()) return {};
  const Matrix ab = a * b.vectors;
  const Svd f = svd(ab);
  const Eigen::Index k = b.dim();
  RestrictedSingular out;
  // More basis vectors than rows forces a kernel direction.
  out.value = ab.rows() < k ? 0.0 : f.sigma(k - 1);
  out.direction = b.vectors * f.V.col(k - 1);
  return out;
}

inline double restricted_min_singular(const Matrix& a, const OrthonormalBasis& b) {
  return restricted_min_singular_with_direction(a, b).value;
}

/// Nearest symmetric PSD matrix (Frobenius) to the symmetric part of S.
inline Matrix psd_project(const Matrix& s) {
  require(s.rows() == s.cols(), ErrorCode::DimensionMismatch, "psd_project needs a square matrix");
  if (s.size() == 0) return s;
  const Matrix sym = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  require(eig.info() == Eigen::Success, ErrorCode::FactorizationFailure,
          "symmetric eigendecomposition failed");
  const Vector clamped = eig.eigenvalues().cwiseMax(0.0);
  return eig.eigenvectors() * clamped.asDiagonal() * eig.eigenvectors().transpose();
}

/// max over columns of `from` of the distance to span(`onto`).
inline double projection_residual(const OrthonormalBasis& from, const OrthonormalBasis& onto) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < from.dim(); ++j) {
    const Vector v = from.vectors.col(j);
    worst = std::max(worst, (v - onto.project(v)).norm());
  }
  return worst;
}

/// Two subspaces agree when each basis projects onto the other with small residual.
inline double subspace_distance(const OrthonormalBasis& a, const OrthonormalBasis& b) {
  if (a.dim() != b.dim()) return std::numeric_limits<double>::infinity();
  return std::max(projection_residual(a, b), projection_residual(b, a));
}

/// Row-major flattening used for every matrix-valued variable.
inline Vector vectorize(const Matrix& m) {
  Vector v(m.size());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) v(i * m.cols() + j) = m(i, j);
  return v;
}

inline Matrix unvectorize(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  require(v.size() == rows * cols, ErrorCode::DimensionMismatch,
          "unvectorize: length does not match shape");
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = v(i * cols + j);
  return m;
}

}  // namespace linalg
}  // namespace stabcert
