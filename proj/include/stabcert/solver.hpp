#pragma once

// Accelerated proximal gradient (FISTA) for
//   min (1/2μ)‖Φx - b‖² + g(x) - <v, x>
// with a fixed step 1/L, L = σ_max(Φ)²/μ, and function-value restarts that
// keep the accepted iterates monotone.

#include <cmath>
#include <vector>

#include "stabcert/linalg.hpp"
#include "stabcert/problem.hpp"

namespace stabcert {

struct SolveOptions {
  double tol = 1e-10;
  long max_iter = 200000;
};

struct SolveResult {
  Vector x;
  long iterations = 0;
  double fixed_point_residual = 0.0;
  /// Value of the minimized (tilted) objective at x.
  double objective = 0.0;
  /// -(1/μ)Φ^T(Φx - b); excludes the tilt.
  Vector y;
  bool converged = false;
};

/// Step constant σ_max(Φ)²/μ; 1 when Φ = 0 so the prox step stays defined.
inline double lipschitz_constant(const ProblemSpec& p) {
  const double s = linalg::spectral_norm(p.phi);
  const double L = s * s / p.mu;
  return L > 0.0 ? L : 1.0;
}

namespace detail {

template <ProximalRegularizer R>
class ForwardBackward {
 public:
  ForwardBackward(const ProblemSpec& p, const R& reg, const Vector& tilt, double lipschitz)
      : p_(p), reg_(reg), tilt_(tilt), L_(lipschitz) {}

  Vector step(const Vector& z) const {
    return reg_.prox(z - (p_.gradient(z) - tilt_) / L_, 1.0 / L_);
  }

  double value(const Vector& x) const { return p_.data_fit(x) + reg_.value(x) - tilt_.dot(x); }

 private:
  const ProblemSpec& p_;
  const R& reg_;
  const Vector& tilt_;
  double L_;
};

template <ProximalRegularizer R>
SolveResult fista(const ProblemSpec& p, const R& reg, const Vector& tilt, const SolveOptions& opt,
                  const Vector& x0) {
  const double L = lipschitz_constant(p);
  const ForwardBackward<R> T(p, reg, tilt, L);

  Vector x = x0;
  double fx = T.value(x);
  Vector z = x;
  double t = 1.0;
  bool at_restart = true;

  SolveResult res;
  Vector tx = T.step(x);
  double residual = (x - tx).norm();
  long k = 0;
  while (residual > opt.tol && k < opt.max_iter) {
    ++k;
    Vector xn = at_restart ? tx : T.step(z);
    const double fn = T.value(xn);
    if (!at_restart && fn > fx) {
      // Momentum overshot; drop it and take a plain step from x next time.
      z = x;
      t = 1.0;
      at_restart = true;
      continue;
    }
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    z = xn + ((t - 1.0) / tn) * (xn - x);
    x = std::move(xn);
    fx = fn;
    t = tn;
    at_restart = false;
    tx = T.step(x);
    residual = (x - tx).norm();
  }

  // T(x) carries an exact subgradient certificate up to L·residual, so it is
  // reported instead of x. Its own residual is no larger (T is nonexpansive).
  if (residual <= opt.tol) {
    const double fxt = T.value(tx);
    if (fxt <= fx || k == 0) {
      x = tx;
      fx = fxt;
      residual = (x - T.step(x)).norm();
    }
  }
  res.x = std::move(x);
  res.iterations = k;
  res.fixed_point_residual = residual;
  res.objective = fx;
  res.y = p.dual(res.x);
  res.converged = residual <= opt.tol;
  return res;
}

}  // namespace detail

/// Fixed-point residual ‖x - prox_{g/L}(x - (∇f(x) - v)/L)‖ at a given point.
inline double fixed_point_residual(const ProblemSpec& p, const Vector& x, const Vector& tilt) {
  const double L = lipschitz_constant(p);
  return visit_regularizer(p.reg, [&](const auto& term) {
    const detail::ForwardBackward T(p, term, tilt, L);
    return (x - T.step(x)).norm();
  });
}

inline double fixed_point_residual(const ProblemSpec& p, const Vector& x) {
  return fixed_point_residual(p, x, Vector::Zero(p.n()));
}

inline double tilted_objective(const ProblemSpec& p, const Vector& x, const Vector& tilt) {
  return objective(p, x) - tilt.dot(x);
}

inline SolveResult prox_gradient_solve(const ProblemSpec& p, const Vector& tilt,
                                       const SolveOptions& opt, const Vector& x0) {
  p.validate();
  require(opt.tol > 0.0, ErrorCode::InvalidArgument, "solver tolerance must be positive");
  require(tilt.size() == p.n() && x0.size() == p.n(), ErrorCode::DimensionMismatch,
          "tilt and starting point must have length n");
  return visit_regularizer(p.reg,
                           [&](const auto& term) { return detail::fista(p, term, tilt, opt, x0); });
}

inline SolveResult prox_gradient_solve(const ProblemSpec& p, const SolveOptions& opt = {}) {
  return prox_gradient_solve(p, Vector::Zero(p.n()), opt, Vector::Zero(p.n()));
}

/// Independent solves from each start, returned in start order.
inline std::vector<SolveResult> multistart_solve(const ProblemSpec& p, const Vector& tilt,
                                                 const SolveOptions& opt,
                                                 const std::vector<Vector>& starts) {
  std::vector<SolveResult> out;
  out.reserve(starts.size());
  for (const Vector& x0 : starts) out.push_back(prox_gradient_solve(p, tilt, opt, x0));
  return out;
}

/// Largest pairwise distance between the returned minimizers.
inline double solution_spread(const std::vector<SolveResult>& results) {
  double spread = 0.0;
  for (size_t i = 0; i < results.size(); ++i)
    for (size_t j = i + 1; j < results.size(); ++j)
      spread = std::max(spread, (results[i].x - results[j].x).norm());
  return spread;
}

}  // namespace stabcert
