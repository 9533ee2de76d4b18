#pragma once

// Regularized least-squares instances  min (1/2μ)‖Φx - b‖² + g(x)
// with g either a group norm or the nuclear norm of a row-major reshaped x.

#include <concepts>
#include <string>
#include <variant>

#include "stabcert/error.hpp"
#include "stabcert/groupnorm.hpp"
#include "stabcert/linalg.hpp"
#include "stabcert/nuclear.hpp"

namespace stabcert {

/// Shape of the matrix variable of a nuclear-norm problem.
struct NuclearShape {
  Eigen::Index n1 = 0;
  Eigen::Index n2 = 0;

  Eigen::Index size() const { return n1 * n2; }
  friend bool operator==(const NuclearShape&, const NuclearShape&) = default;
};

using Regularizer = std::variant<GroupPartition, NuclearShape>;

template <class R>
concept ProximalRegularizer = requires(const R& r, const Vector& x, double t) {
  { r.value(x) } -> std::convertible_to<double>;
  { r.prox(x, t) } -> std::convertible_to<Vector>;
  { r.dim() } -> std::convertible_to<Eigen::Index>;
};

struct GroupLassoTerm {
  const GroupPartition& partition;

  double value(const Vector& x) const { return group_norm(x, partition); }
  Vector prox(const Vector& x, double t) const { return prox_group(x, t, partition); }
  Eigen::Index dim() const { return partition.n(); }
};

struct NuclearTerm {
  NuclearShape shape;

  double value(const Vector& x) const {
    return nuclear_norm(linalg::unvectorize(x, shape.n1, shape.n2));
  }
  Vector prox(const Vector& x, double t) const {
    return linalg::vectorize(prox_nuclear(linalg::unvectorize(x, shape.n1, shape.n2), t));
  }
  Eigen::Index dim() const { return shape.size(); }
};

static_assert(ProximalRegularizer<GroupLassoTerm>);
static_assert(ProximalRegularizer<NuclearTerm>);

/// Calls f with the GroupLassoTerm or NuclearTerm matching reg.
template <class F>
decltype(auto) visit_regularizer(const Regularizer& reg, F&& f) {
  return std::visit(
      [&](const auto& r) -> decltype(auto) {
        if constexpr (std::is_same_v<std::decay_t<decltype(r)>, GroupPartition>) {
          return f(GroupLassoTerm{r});
        } else {
          return f(NuclearTerm{r});
        }
      },
      reg);
}

inline Eigen::Index regularizer_dim(const Regularizer& reg) {
  return visit_regularizer(reg, [](const auto& term) { return term.dim(); });
}

inline double regularizer_value(const Regularizer& reg, const Vector& x) {
  return visit_regularizer(reg, [&](const auto& term) { return term.value(x); });
}

inline bool is_group(const Regularizer& reg) { return std::holds_alternative<GroupPartition>(reg); }
inline bool is_nuclear(const Regularizer& reg) { return std::holds_alternative<NuclearShape>(reg); }

struct ProblemSpec {
  Matrix phi;  // m x n
  Vector b;    // m
  double mu = 1.0;
  Regularizer reg;

  Eigen::Index m() const { return phi.rows(); }
  Eigen::Index n() const { return phi.cols(); }

  void validate() const {
    require(phi.rows() >= 1 && phi.cols() >= 1, ErrorCode::DimensionMismatch,
            "operator must have at least one row and one column");
    require(phi.allFinite() && b.allFinite(), ErrorCode::NonFinite,
            "operator and observation must be finite");
    require(std::isfinite(mu) && mu > 0.0, ErrorCode::MuNonpositive, "mu must be positive");
    require(b.size() == phi.rows(), ErrorCode::DimensionMismatch,
            "observation length " + std::to_string(b.size()) + " differs from operator rows " +
                std::to_string(phi.rows()));
    const Eigen::Index rn = regularizer_dim(reg);
    require(rn == phi.cols(), ErrorCode::DimensionMismatch,
            "regularizer dimension " + std::to_string(rn) + " differs from operator columns " +
                std::to_string(phi.cols()));
  }

  /// ∇f(x) = Φ^T(Φx - b)/μ
  Vector gradient(const Vector& x) const { return phi.transpose() * (phi * x - b) / mu; }

  /// The dual object y = -∇f(x).
  Vector dual(const Vector& x) const { return -gradient(x); }

  double data_fit(const Vector& x) const { return (phi * x - b).squaredNorm() / (2.0 * mu); }
};

/// (1/2μ)‖Φx - b‖² + g(x)
inline double objective(const ProblemSpec& p, const Vector& x) {
  require(x.size() == p.n(), ErrorCode::DimensionMismatch, "objective: x has the wrong length");
  return p.data_fit(x) + regularizer_value(p.reg, x);
}

}  // namespace stabcert
