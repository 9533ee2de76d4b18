#pragma once

// The l1/l2 (group Lasso) norm: value, prox, subdifferential geometry and the
// index-set bookkeeping behind the stability subspace.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "stabcert/error.hpp"
#include "stabcert/linalg.hpp"

namespace stabcert {

/// Default tolerance for "‖y_J‖ = 1" style activity tests.
inline constexpr double kActivityTol = 1e-7;

/// Blocks with ‖y_J‖ within this of 1 already count as unit blocks when
/// building a relative approximation; rescaling them would only move round-off.
inline constexpr double kUnitRoundoff = 1e-12;

/// A partition of {0, ..., n-1} into nonempty disjoint groups (0-based).
class GroupPartition {
 public:
  GroupPartition() = default;

  static GroupPartition from_groups(Eigen::Index n, std::vector<std::vector<Eigen::Index>> groups) {
    require(n >= 1, ErrorCode::DimensionMismatch, "group partition needs n >= 1");
    std::vector<int> seen(static_cast<size_t>(n), 0);
    for (const auto& g : groups) {
      require(!g.empty(), ErrorCode::EmptyGroup, "group partition contains an empty group");
      for (Eigen::Index i : g) {
        require(i >= 0 && i < n, ErrorCode::GroupIndexOutOfRange,
                "group index " + std::to_string(i) + " outside [0, " + std::to_string(n) + ")");
        require(seen[static_cast<size_t>(i)] == 0, ErrorCode::OverlappingGroups,
                "index " + std::to_string(i) + " appears in more than one group");
        seen[static_cast<size_t>(i)] = 1;
      }
    }
    require(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }),
            ErrorCode::IncompletePartition, "groups do not cover every coordinate");
    GroupPartition p;
    p.n_ = n;
    p.groups_ = std::move(groups);
    return p;
  }

  /// Same as from_groups but with 1-based indices, the file-format convention.
  static GroupPartition from_one_based(Eigen::Index n, const std::vector<std::vector<Eigen::Index>>& groups) {
    std::vector<std::vector<Eigen::Index>> zero = groups;
    for (auto& g : zero)
      for (auto& i : g) i -= 1;
    return from_groups(n, std::move(zero));
  }

  static GroupPartition singletons(Eigen::Index n) {
    std::vector<std::vector<Eigen::Index>> g(static_cast<size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) g[static_cast<size_t>(i)] = {i};
    return from_groups(n, std::move(g));
  }

  static GroupPartition single_group(Eigen::Index n) {
    std::vector<Eigen::Index> g(static_cast<size_t>(n));
    std::iota(g.begin(), g.end(), Eigen::Index{0});
    return from_groups(n, {std::move(g)});
  }

  Eigen::Index n() const { return n_; }
  size_t size() const { return groups_.size(); }
  const std::vector<Eigen::Index>& group(size_t j) const { return groups_[j]; }
  const std::vector<std::vector<Eigen::Index>>& groups() const { return groups_; }

  Vector block(const Vector& x, size_t j) const {
    const auto& g = groups_[j];
    Vector out(static_cast<Eigen::Index>(g.size()));
    for (size_t k = 0; k < g.size(); ++k) out(static_cast<Eigen::Index>(k)) = x(g[k]);
    return out;
  }

  void set_block(Vector& x, size_t j, const Vector& value) const {
    const auto& g = groups_[j];
    for (size_t k = 0; k < g.size(); ++k) x(g[k]) = value(static_cast<Eigen::Index>(k));
  }

  double block_norm(const Vector& x, size_t j) const {
    double s = 0.0;
    for (Eigen::Index i : groups_[j]) s += x(i) * x(i);
    return std::sqrt(s);
  }

  void check_dim(const Vector& x, const char* what) const {
    require(x.size() == n_, ErrorCode::DimensionMismatch,
            std::string(what) + ": vector length " + std::to_string(x.size()) +
                " differs from partition size " + std::to_string(n_));
  }

  friend bool operator==(const GroupPartition&, const GroupPartition&) = default;

 private:
  Eigen::Index n_ = 0;
  std::vector<std::vector<Eigen::Index>> groups_;
};

/// Index sets and subspace at a primal-dual pair. K, H, I hold group indices.
struct GroupAnalysis {
  std::vector<size_t> K;  // ‖y_J‖ = 1
  std::vector<size_t> H;  // ‖y_J‖ < 1
  std::vector<size_t> I;  // x_J != 0
  double gamma = 0.0;     // subdominant number, max over H of ‖y_J‖
  /// min_{J in K} ‖y_J‖ - max_{J in H} ‖y_J‖; how clear-cut the K/H split is.
  double classification_gap = 1.0;
  linalg::OrthonormalBasis v_basis;
};

struct RelativeApproximation {
  double lambda = 1.0;
  Vector yhat;
  Vector ytilde;
};

inline double group_norm(const Vector& x, const GroupPartition& p) {
  p.check_dim(x, "group_norm");
  double s = 0.0;
  for (size_t j = 0; j < p.size(); ++j) s += p.block_norm(x, j);
  return s;
}

/// Block soft-thresholding: argmin_u 0.5‖u - x‖² + t‖u‖_{1,2}.
inline Vector prox_group(const Vector& x, double t, const GroupPartition& p) {
  p.check_dim(x, "prox_group");
  require(t > 0.0, ErrorCode::InvalidArgument, "prox_group needs t > 0");
  Vector out = Vector::Zero(x.size());
  for (size_t j = 0; j < p.size(); ++j) {
    const double nj = p.block_norm(x, j);
    if (nj <= t) continue;
    const double scale = 1.0 - t / nj;
    for (Eigen::Index i : p.group(j)) out(i) = scale * x(i);
  }
  return out;
}

/// Distance-like residual of y from ∂‖x‖_{1,2}; zero iff y is a subgradient.
inline double subgrad_residual(const Vector& x, const Vector& y, const GroupPartition& p) {
  p.check_dim(x, "subgrad_residual");
  p.check_dim(y, "subgrad_residual");
  double s = 0.0;
  for (size_t j = 0; j < p.size(); ++j) {
    const double xn = p.block_norm(x, j);
    double d = 0.0;
    if (xn > 0.0) {
      d = (p.block(y, j) - p.block(x, j) / xn).norm();
    } else {
      d = std::max(p.block_norm(y, j) - 1.0, 0.0);
    }
    s += d * d;
  }
  return std::sqrt(s);
}

inline GroupAnalysis classify_groups(const Vector& x, const Vector& y, const GroupPartition& p,
                                     double tol = kActivityTol) {
  const double res = subgrad_residual(x, y, p);
  require(res <= tol, ErrorCode::NotASubgradient,
          "y is not a subgradient of the group norm at x (residual " + std::to_string(res) + ")");
  GroupAnalysis a;
  double min_k = 1.0;
  std::vector<Vector> dirs;
  for (size_t j = 0; j < p.size(); ++j) {
    const double yn = p.block_norm(y, j);
    if (yn >= 1.0 - tol) {
      a.K.push_back(j);
      min_k = std::min(min_k, yn);
      Vector e = Vector::Zero(p.n());
      p.set_block(e, j, p.block(y, j) / yn);
      dirs.push_back(std::move(e));
    } else {
      a.H.push_back(j);
      a.gamma = std::max(a.gamma, yn);
    }
    if (p.block_norm(x, j) > tol) a.I.push_back(j);
  }
  a.classification_gap = min_k - a.gamma;
  // Blocks have disjoint supports, so the normalized embeddings are already orthonormal.
  Matrix cols(p.n(), static_cast<Eigen::Index>(dirs.size()));
  for (size_t k = 0; k < dirs.size(); ++k) cols.col(static_cast<Eigen::Index>(k)) = dirs[k];
  a.v_basis = linalg::OrthonormalBasis(p.n(), std::move(cols));
  return a;
}

/// Euclidean distance from x to (∂‖·‖_{1,2})^{-1}(ybar): a product of rays
/// R_+ ybar_J over unit blocks and {0} elsewhere.
inline double inverse_subdiff_distance(const Vector& x, const Vector& ybar, const GroupPartition& p,
                                       double tol = kActivityTol) {
  p.check_dim(x, "inverse_subdiff_distance");
  p.check_dim(ybar, "inverse_subdiff_distance");
  double s = 0.0;
  for (size_t j = 0; j < p.size(); ++j) {
    const Vector xj = p.block(x, j);
    const double yn = p.block_norm(ybar, j);
    const double xx = xj.squaredNorm();
    if (yn >= 1.0 - tol) {
      const double along = std::max(xj.dot(p.block(ybar, j)) / yn, 0.0);
      s += std::max(xx - along * along, 0.0);
    } else {
      s += xx;
    }
  }
  return std::sqrt(s);
}

/// Pushes y onto {‖y_J‖ = 1 for J in Kref} by a convex split
/// y = lambda·yhat + (1 - lambda)·ytilde with both parts in ∂‖x‖_{1,2}.
inline RelativeApproximation relative_approx_group(const Vector& x, const Vector& y,
                                                   const GroupPartition& p,
                                                   const std::vector<size_t>& kref,
                                                   double tol = kActivityTol) {
  const double res = subgrad_residual(x, y, p);
  require(res <= tol, ErrorCode::NotASubgradient,
          "relative approximation needs y in ∂‖x‖ (residual " + std::to_string(res) + ")");
  std::vector<size_t> shortfall;
  double lambda = 1.0;
  for (size_t j : kref) {
    require(j < p.size(), ErrorCode::GroupIndexOutOfRange, "reference group index out of range");
    const double yn = p.block_norm(y, j);
    if (yn < 1.0 - kUnitRoundoff) {
      shortfall.push_back(j);
      lambda = std::min(lambda, yn);
    }
  }
  if (shortfall.empty()) return {1.0, y, y};
  require(lambda > 0.0, ErrorCode::InfeasibleApproximation,
          "a reference group has y_J = 0; it cannot be rescaled onto the unit sphere");
  RelativeApproximation out{lambda, y, y};
  for (size_t j : shortfall) {
    require(p.block_norm(x, j) <= tol, ErrorCode::InfeasibleApproximation,
            "x_J is nonzero on a group whose subgradient block is strictly inside the ball");
    const Vector yj = p.block(y, j);
    const double yn = yj.norm();
    p.set_block(out.yhat, j, yj / yn);
    p.set_block(out.ytilde, j, ((yn - lambda) / (1.0 - lambda)) * (yj / yn));
  }
  return out;
}

}  // namespace stabcert
