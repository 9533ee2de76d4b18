#pragma once

// Brute-force reference computations. They share no code with the library
// beyond Eigen, and deliberately take the slow route.

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracles {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// min_{s>=0} ‖v - s d‖ by ternary search over s (d a unit vector).
inline double ray_distance(const Vector& v, const Vector& d) {
  double lo = 0.0, hi = v.norm() + 1.0;
  const auto f = [&](double s) { return (v - s * d).squaredNorm(); };
  for (int it = 0; it < 200; ++it) {
    const double a = lo + (hi - lo) / 3.0, b = hi - (hi - lo) / 3.0;
    if (f(a) <= f(b)) hi = b; else lo = a;
  }
  return std::sqrt(f(0.5 * (lo + hi)));
}

/// Distance from x to the product of rays R_+ ybar_J (‖ybar_J‖ ≈ 1) and {0}
/// elsewhere; groups given as 0-based index lists.
inline double group_inverse_distance(const Vector& x, const Vector& ybar,
                                     const std::vector<std::vector<Eigen::Index>>& groups,
                                     double unit_tol = 1e-7) {
  double s = 0.0;
  for (const auto& g : groups) {
    Vector xj(static_cast<Eigen::Index>(g.size())), yj(static_cast<Eigen::Index>(g.size()));
    for (size_t k = 0; k < g.size(); ++k) {
      xj(static_cast<Eigen::Index>(k)) = x(g[k]);
      yj(static_cast<Eigen::Index>(k)) = ybar(g[k]);
    }
    if (yj.norm() >= 1.0 - unit_tol) {
      const double d = ray_distance(xj, yj / yj.norm());
      s += d * d;
    } else {
      s += xj.squaredNorm();
    }
  }
  return std::sqrt(s);
}

/// Distance from X to {U_p L L^T V_p^T}, with (U_p, V_p) the unit singular
/// block of Ybar from a plain SVD, by gradient descent on L with backtracking.
inline double nuclear_inverse_distance(const Matrix& x, const Matrix& ybar, double unit_tol = 1e-7,
                                       unsigned seed = 1) {
  Eigen::JacobiSVD<Matrix> svd(ybar, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector s = svd.singularValues();
  Eigen::Index p = 0;
  while (p < s.size() && s(p) >= 1.0 - unit_tol) ++p;
  if (p == 0) return x.norm();
  const Matrix up = svd.matrixU().leftCols(p), vp = svd.matrixV().leftCols(p);

  const auto objective = [&](const Matrix& l) {
    return (x - up * l * l.transpose() * vp.transpose()).squaredNorm();
  };
  const auto gradient = [&](const Matrix& l) {
    const Matrix r = up * l * l.transpose() * vp.transpose() - x;
    const Matrix g = up.transpose() * r * vp;
    return Matrix(2.0 * (g + g.transpose()) * l);
  };

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  double best = x.squaredNorm();
  for (int start = 0; start < 3; ++start) {
    Matrix l(p, p);
    for (Eigen::Index i = 0; i < p; ++i)
      for (Eigen::Index j = 0; j < p; ++j) l(i, j) = nd(rng);
    double f = objective(l);
    double step = 0.1;
    for (int it = 0; it < 20000; ++it) {
      const Matrix g = gradient(l);
      const double gg = g.squaredNorm();
      if (gg < 1e-30) break;
      step *= 2.0;
      Matrix trial = l - step * g;
      double ft = objective(trial);
      while (ft > f - 0.5 * step * gg && step > 1e-20) {
        step *= 0.5;
        trial = l - step * g;
        ft = objective(trial);
      }
      if (ft >= f) break;
      l = trial;
      f = ft;
    }
    best = std::min(best, f);
  }
  return std::sqrt(std::max(best, 0.0));
}

}  // namespace oracles
