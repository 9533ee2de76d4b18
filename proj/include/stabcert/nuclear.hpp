#pragma once

// Nuclear-norm analysis: prox, subgradient test, simultaneous ordered SVD of a
// primal-dual pair, and the tangent subspace U [S^p 0; 0 0] V^T.

#include <algorithm>
#include <cmath>
#include <string>

#include "stabcert/error.hpp"
#include "stabcert/groupnorm.hpp"
#include "stabcert/linalg.hpp"

namespace stabcert {

/// Joint factorization X = U [Σ 0; 0 0] V^T, Y = U [I_p 0; 0 Λ] V^T.
struct SimultaneousSVD {
  Matrix Ubar;     // n1 x n1
  Matrix Vbar;     // n2 x n2
  Vector sigma_x;  // r positive, nonincreasing
  Vector lambda_y; // min(n1, n2) - p entries in [0, 1)
  Eigen::Index r = 0;
  Eigen::Index p = 0;

  Eigen::Index rows() const { return Ubar.rows(); }
  Eigen::Index cols() const { return Vbar.rows(); }
  Eigen::Index min_dim() const { return std::min(rows(), cols()); }

  Matrix x_reconstruction() const {
    Matrix d = Matrix::Zero(rows(), cols());
    for (Eigen::Index i = 0; i < r; ++i) d(i, i) = sigma_x(i);
    return Ubar * d * Vbar.transpose();
  }

  Matrix y_reconstruction() const {
    Matrix d = Matrix::Zero(rows(), cols());
    for (Eigen::Index i = 0; i < p; ++i) d(i, i) = 1.0;
    for (Eigen::Index i = 0; i < lambda_y.size(); ++i) d(p + i, p + i) = lambda_y(i);
    return Ubar * d * Vbar.transpose();
  }
};

struct NuclearSubgradientCheck {
  bool holds = false;
  double spectral_excess = 0.0;  // max(σ_max(Y) - 1, 0)
  double fenchel_gap = 0.0;      // |‖X‖_* - <Y, X>|
};

inline double nuclear_norm(const Matrix& x) {
  if (x.size() == 0) return 0.0;
  return linalg::singular_values(x).sum();
}

/// Singular-value soft thresholding.
inline Matrix prox_nuclear(const Matrix& x, double t) {
  require(t > 0.0, ErrorCode::InvalidArgument, "prox_nuclear needs t > 0");
  const linalg::Svd f = linalg::svd(x);
  Matrix d = Matrix::Zero(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < f.sigma.size(); ++i) d(i, i) = std::max(f.sigma(i) - t, 0.0);
  return f.U * d * f.V.transpose();
}

inline NuclearSubgradientCheck is_subgradient_nuclear(const Matrix& x, const Matrix& y,
                                                      double tol = kActivityTol) {
  require(x.rows() == y.rows() && x.cols() == y.cols(), ErrorCode::DimensionMismatch,
          "is_subgradient_nuclear: X and Y shapes differ");
  NuclearSubgradientCheck c;
  const double xnuc = nuclear_norm(x);
  c.spectral_excess = std::max(linalg::spectral_norm(y) - 1.0, 0.0);
  c.fenchel_gap = std::abs(xnuc - (x.array() * y.array()).sum());
  c.holds = c.spectral_excess <= tol && c.fenchel_gap <= tol * (1.0 + xnuc);
  return c;
}

/// Number of singular values of Y that equal 1 up to tol.
inline Eigen::Index p_count(const Matrix& y, double tol = kActivityTol) {
  const Vector s = linalg::singular_values(y);
  return static_cast<Eigen::Index>((s.array() >= 1.0 - tol).count());
}

/// Largest singular value strictly below 1 - tol, or 0.
inline double subdominant_gamma_nuclear(const Matrix& y, double tol = kActivityTol) {
  const Vector s = linalg::singular_values(y);
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) < 1.0 - tol) return s(i);
  return 0.0;
}

/// Factors Z = X + Y. For Y ∈ ∂‖X‖_*, the singular values of Z are σ_i(X) + 1
/// on the rank block, 1 on the next p - r, and below 1 after that, so the
/// ordered singular vectors of Z diagonalize both matrices.
inline SimultaneousSVD simultaneous_svd(const Matrix& x, const Matrix& y, double tol = kActivityTol) {
  const NuclearSubgradientCheck check = is_subgradient_nuclear(x, y, tol);
  require(check.holds, ErrorCode::NotASubgradient,
          "simultaneous SVD needs Y in ∂‖X‖_* (spectral excess " +
              std::to_string(check.spectral_excess) + ", Fenchel gap " +
              std::to_string(check.fenchel_gap) + ")");
  const linalg::Svd z = linalg::svd(x + y);
  const Eigen::Index k = std::min(x.rows(), x.cols());

  SimultaneousSVD dec;
  dec.Ubar = z.U;
  dec.Vbar = z.V;
  const Vector sx = linalg::singular_values(x);
  const double rank_cut = tol * std::max(1.0, sx.size() > 0 ? sx(0) : 0.0);
  dec.r = static_cast<Eigen::Index>((sx.array() > rank_cut).count());
  dec.p = p_count(y, tol);
  require(dec.r <= dec.p, ErrorCode::JointDecompositionFailure,
          "rank(X) exceeds the number of unit singular values of Y");

  const Matrix xt = z.U.transpose() * x * z.V;
  const Matrix yt = z.U.transpose() * y * z.V;
  dec.sigma_x.resize(dec.r);
  for (Eigen::Index i = 0; i < dec.r; ++i) dec.sigma_x(i) = xt(i, i);
  dec.lambda_y.resize(k - dec.p);
  for (Eigen::Index i = dec.p; i < k; ++i) dec.lambda_y(i - dec.p) = std::clamp(yt(i, i), 0.0, 1.0);

  const double ex = (dec.x_reconstruction() - x).norm() / (1.0 + x.norm());
  const double ey = (dec.y_reconstruction() - y).norm() / (1.0 + y.norm());
  require(ex <= 1e-6 && ey <= 1e-6, ErrorCode::JointDecompositionFailure,
          "joint factorization does not reproduce (X, Y): residuals " + std::to_string(ex) + ", " +
              std::to_string(ey));
  return dec;
}

/// Orthonormal basis (row-major vectorized) of {U [S 0; 0 0] V^T : S ∈ S^p}.
inline linalg::OrthonormalBasis tangent_subspace_basis(const SimultaneousSVD& dec) {
  const Eigen::Index n1 = dec.rows(), n2 = dec.cols(), p = dec.p;
  const Eigen::Index dim = p * (p + 1) / 2;
  Matrix cols(n1 * n2, dim);
  Eigen::Index c = 0;
  for (Eigen::Index i = 0; i < p; ++i) {
    cols.col(c++) = linalg::vectorize(dec.Ubar.col(i) * dec.Vbar.col(i).transpose());
    for (Eigen::Index j = i + 1; j < p; ++j) {
      const Matrix m = (dec.Ubar.col(i) * dec.Vbar.col(j).transpose() +
                        dec.Ubar.col(j) * dec.Vbar.col(i).transpose()) /
                       std::sqrt(2.0);
      cols.col(c++) = linalg::vectorize(m);
    }
  }
  return {n1 * n2, std::move(cols)};
}

/// Frobenius distance from X to (∂‖·‖_*)^{-1}(Ȳ) = U [S^p_+ 0; 0 0] V^T.
inline double inverse_subdiff_distance_nuclear(const Matrix& x, const SimultaneousSVD& dec) {
  require(x.rows() == dec.rows() && x.cols() == dec.cols(), ErrorCode::DimensionMismatch,
          "inverse_subdiff_distance_nuclear: shape differs from the decomposition");
  const Matrix xt = dec.Ubar.transpose() * x * dec.Vbar;
  const Eigen::Index p = dec.p;
  const Matrix top = xt.topLeftCorner(p, p);
  const double inside = p > 0 ? (top - linalg::psd_project(top)).squaredNorm() : 0.0;
  const double outside = std::max(xt.squaredNorm() - top.squaredNorm(), 0.0);
  return std::sqrt(inside + outside);
}

struct RelativeApproximationMatrix {
  double lambda = 1.0;
  Matrix yhat;
  Matrix ytilde;
};

/// Convex split Y = λ Ŷ + (1 - λ) Ỹ with Ŷ having exactly p_ref unit singular
/// values. Ỹ's leading block uses (σ_i - λ)/(1 - λ), which is 1 wherever σ_i = 1.
inline RelativeApproximationMatrix relative_approx_nuclear(const Matrix& x, const Matrix& y,
                                                           Eigen::Index p_ref,
                                                           double tol = kActivityTol) {
  const SimultaneousSVD dec = simultaneous_svd(x, y, tol);
  const Eigen::Index q = dec.p;
  const Eigen::Index k = dec.min_dim();
  require(p_ref >= 0 && p_ref <= k, ErrorCode::InvalidArgument, "p_ref outside [0, min(n1, n2)]");
  if (q == p_ref) return {1.0, y, y};
  require(q < p_ref, ErrorCode::InfeasibleApproximation,
          "Y has more unit singular values than the reference count");

  const Matrix yt = dec.Ubar.transpose() * y * dec.Vbar;
  Vector s(k);
  for (Eigen::Index i = 0; i < k; ++i) s(i) = yt(i, i);
  const double lambda = s(p_ref - 1);
  require(lambda < 1.0 - tol, ErrorCode::InfeasibleApproximation,
          "σ_{p_ref}(Y) is already at 1");

  Matrix dhat = Matrix::Zero(x.rows(), x.cols());
  Matrix dtilde = Matrix::Zero(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < k; ++i) {
    if (i < p_ref) {
      dhat(i, i) = 1.0;
      dtilde(i, i) = (s(i) - lambda) / (1.0 - lambda);
    } else {
      dhat(i, i) = s(i);
      dtilde(i, i) = s(i);
    }
  }
  // Off-diagonal round-off of U^T Y V is carried so that the identity is exact.
  Matrix offdiag = yt;
  for (Eigen::Index i = 0; i < k; ++i) offdiag(i, i) = 0.0;
  RelativeApproximationMatrix out;
  out.lambda = lambda;
  out.yhat = dec.Ubar * (dhat + offdiag) * dec.Vbar.transpose();
  out.ytilde = dec.Ubar * (dtilde + offdiag) * dec.Vbar.transpose();
  return out;
}

}  // namespace stabcert
