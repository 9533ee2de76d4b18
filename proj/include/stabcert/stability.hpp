#pragma once

// Strong Sufficient Condition certificates (kernel of Φ against the stability
// subspace), quadratic-growth audits, second-order difference quotients and
// sampled Lipschitz / tilt probes of the solution map.
//
// The certificates are algebraic tests; the probes only sample, so they can
// falsify a verdict but never prove one.

#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "stabcert/groupnorm.hpp"
#include "stabcert/linalg.hpp"
#include "stabcert/nuclear.hpp"
#include "stabcert/problem.hpp"
#include "stabcert/solver.hpp"

namespace stabcert {

struct CertifyOptions {
  /// Maximum accepted fixed-point residual of the candidate solution.
  double kkt_tol = 1e-6;
  /// Tolerance for ‖y_J‖ = 1 and σ_i(Y) = 1.
  double activity_tol = kActivityTol;
  /// holds iff margin > margin_rel_tol · σ_max(Φ).
  double margin_rel_tol = 1e-8;
};

struct StabilityCertificate {
  bool holds = false;
  /// σ_min of Φ on the stability subspace; +inf when that subspace is {0}.
  double margin = std::numeric_limits<double>::infinity();
  double margin_tol = 0.0;
  Eigen::Index subspace_dim = 0;
  double gamma = 0.0;
  /// Gap between the smallest "unit" dual block/singular value and gamma.
  double classification_gap = 1.0;
  double kkt_residual = 0.0;
  /// Unit vector in Ker Φ ∩ subspace (numerically), present when holds is false.
  std::optional<Vector> witness;
  std::variant<GroupAnalysis, SimultaneousSVD> classification;
  linalg::OrthonormalBasis basis;
  /// The verdict also covers perturbations of Φ itself.
  bool covers_operator_perturbation = false;
  CertifyOptions tolerances;
};

namespace detail {

inline void finish_certificate(StabilityCertificate& c, const Matrix& phi,
                               const CertifyOptions& opt) {
  c.subspace_dim = c.basis.dim();
  c.margin_tol = opt.margin_rel_tol * linalg::spectral_norm(phi);
  const linalg::RestrictedSingular rs = linalg::restricted_min_singular_with_direction(phi, c.basis);
  c.margin = rs.value;
  c.holds = c.margin > c.margin_tol;
  if (!c.holds) c.witness = rs.direction;
  c.tolerances = opt;
}

inline double checked_kkt(const ProblemSpec& p, const Vector& x, const CertifyOptions& opt) {
  p.validate();
  require(x.size() == p.n(), ErrorCode::DimensionMismatch, "candidate solution has the wrong length");
  const double res = fixed_point_residual(p, x);
  require(res <= opt.kkt_tol, ErrorCode::NotASolution,
          "candidate is not a solution: fixed-point residual " + std::to_string(res));
  return res;
}

}  // namespace detail

/// Group Lasso: Ker Φ ∩ V = {0}, V = {w : w_J ∈ R y_J (J ∈ K), w_J = 0 (J ∈ H)}.
inline StabilityCertificate certify_group(const ProblemSpec& p, const Vector& x,
                                          const CertifyOptions& opt = {}) {
  require(is_group(p.reg), ErrorCode::InvalidArgument, "certify_group needs a group regularizer");
  StabilityCertificate c;
  c.kkt_residual = detail::checked_kkt(p, x, opt);
  const auto& part = std::get<GroupPartition>(p.reg);
  GroupAnalysis a = classify_groups(x, p.dual(x), part, opt.activity_tol);
  c.gamma = a.gamma;
  c.classification_gap = a.classification_gap;
  c.basis = a.v_basis;
  c.classification = std::move(a);
  detail::finish_certificate(c, p.phi, opt);
  return c;
}

/// Nuclear norm: Ker Φ ∩ U [S^p 0; 0 0] V^T = {0}.
inline StabilityCertificate certify_nuclear(const ProblemSpec& p, const Vector& x,
                                            const CertifyOptions& opt = {}) {
  require(is_nuclear(p.reg), ErrorCode::InvalidArgument, "certify_nuclear needs a nuclear regularizer");
  StabilityCertificate c;
  c.kkt_residual = detail::checked_kkt(p, x, opt);
  const auto shape = std::get<NuclearShape>(p.reg);
  const Matrix X = linalg::unvectorize(x, shape.n1, shape.n2);
  const Matrix Y = linalg::unvectorize(p.dual(x), shape.n1, shape.n2);
  SimultaneousSVD dec = simultaneous_svd(X, Y, opt.activity_tol);
  c.gamma = dec.lambda_y.size() > 0 ? dec.lambda_y.maxCoeff() : 0.0;
  c.classification_gap = 1.0 - c.gamma;
  c.basis = tangent_subspace_basis(dec);
  c.classification = std::move(dec);
  detail::finish_certificate(c, p.phi, opt);
  return c;
}

inline StabilityCertificate certify(const ProblemSpec& p, const Vector& x,
                                    const CertifyOptions& opt = {}) {
  return is_group(p.reg) ? certify_group(p, x, opt) : certify_nuclear(p, x, opt);
}

/// Same kernel test at the nominal Φ; the verdict extends to (Φ, b, μ) perturbations.
inline StabilityCertificate certify_phi_perturbed(const ProblemSpec& p, const Vector& x,
                                                  const CertifyOptions& opt = {}) {
  StabilityCertificate c = certify(p, x, opt);
  c.covers_operator_perturbation = true;
  return c;
}

/// General smooth f: tests λ_min(B^T ∇²f B) > 0 on the stability subspace B
/// built from y = -∇f(x). The margin reported is that smallest eigenvalue.
inline StabilityCertificate certify_with_hessian(const Matrix& hessian, const Vector& gradient,
                                                 const Regularizer& reg, const Vector& x,
                                                 const CertifyOptions& opt = {}) {
  const Eigen::Index n = regularizer_dim(reg);
  require(hessian.rows() == n && hessian.cols() == n && gradient.size() == n && x.size() == n,
          ErrorCode::DimensionMismatch, "Hessian, gradient and x must match the regularizer");
  StabilityCertificate c;
  const Vector y = -gradient;
  if (const auto* part = std::get_if<GroupPartition>(&reg)) {
    GroupAnalysis a = classify_groups(x, y, *part, opt.activity_tol);
    c.gamma = a.gamma;
    c.classification_gap = a.classification_gap;
    c.basis = a.v_basis;
    c.classification = std::move(a);
  } else {
    const auto shape = std::get<NuclearShape>(reg);
    SimultaneousSVD dec = simultaneous_svd(linalg::unvectorize(x, shape.n1, shape.n2),
                                           linalg::unvectorize(y, shape.n1, shape.n2),
                                           opt.activity_tol);
    c.gamma = dec.lambda_y.size() > 0 ? dec.lambda_y.maxCoeff() : 0.0;
    c.basis = tangent_subspace_basis(dec);
    c.classification = std::move(dec);
  }
  c.subspace_dim = c.basis.dim();
  const Matrix sym = 0.5 * (hessian + hessian.transpose());
  c.margin_tol = opt.margin_rel_tol * linalg::spectral_norm(sym);
  c.tolerances = opt;
  if (c.basis.is_zero()) {
    c.holds = true;
    return c;
  }
  const Matrix reduced = c.basis.vectors.transpose() * sym * c.basis.vectors;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(reduced);
  c.margin = eig.eigenvalues()(0);
  c.holds = c.margin > c.margin_tol;
  if (!c.holds) c.witness = c.basis.vectors * eig.eigenvectors().col(0);
  return c;
}

// ---------------------------------------------------------------------------
// Sampling helpers: every sample draws from its own engine seeded by
// (seed, index), so results do not depend on evaluation order.

inline std::mt19937_64 sample_engine(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

inline Vector gaussian_vector(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> nd;
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = nd(rng);
  return v;
}

/// Uniform draw from the ball of the given radius.
inline Vector uniform_ball(std::mt19937_64& rng, Eigen::Index n, double radius) {
  if (n == 0 || radius == 0.0) return Vector::Zero(n);
  Vector g = gaussian_vector(rng, n);
  while (g.norm() == 0.0) g = gaussian_vector(rng, n);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  const double r = radius * std::pow(ud(rng), 1.0 / static_cast<double>(n));
  return (r / g.norm()) * g;
}

// ---------------------------------------------------------------------------
// Quadratic growth audits.

struct QgSampler {
  size_t count = 1000;
  double radius = 1.0;
  std::uint64_t seed = 0;
};

/// Points with norm at or below this are skipped (the bound divides by ‖x‖).
inline constexpr double kQgNormFloor = 1e-12;
inline constexpr double kQgSlackFloor = -1e-9;

struct QgConstantReport {
  std::string name;
  double min_slack = std::numeric_limits<double>::infinity();
  Vector argmin;  // sample attaining min_slack (vectorized)
  /// Certifying constants must pass; the conjectured constant only flags candidates.
  bool certifying = true;
  bool passed() const { return min_slack >= kQgSlackFloor; }
};

struct QgAuditReport {
  std::string kind;  // "group" or "nuclear"
  size_t samples = 0;
  size_t excluded = 0;
  double gamma = 0.0;
  std::vector<QgConstantReport> constants;

  bool passed() const {
    for (const auto& c : constants)
      if (c.certifying && !c.passed()) return false;
    return true;
  }
  /// A violation of the conjectured nuclear constant; never a failure.
  bool conjecture_counterexample_candidate() const {
    for (const auto& c : constants)
      if (!c.certifying && !c.passed()) return true;
    return false;
  }
};

/// ‖x‖_{1,2} - ‖x̄‖_{1,2} - <ȳ, x - x̄> - (1-γ)/(2‖x‖)·dist(x, (∂‖·‖)^{-1}(ȳ))²
inline double qg_slack_group(const Vector& x, const Vector& xbar, const Vector& ybar,
                             const GroupPartition& p, double gamma, double tol = kActivityTol) {
  const double lhs = group_norm(x, p) - group_norm(xbar, p) - ybar.dot(x - xbar);
  const double d = inverse_subdiff_distance(x, ybar, p, tol);
  return lhs - (1.0 - gamma) / (2.0 * x.norm()) * d * d;
}

struct NuclearQgTerms {
  double lhs = 0.0;
  double dist = 0.0;
  double xnuc = 0.0;
};

inline NuclearQgTerms nuclear_qg_terms(const Matrix& x, const Matrix& xbar, const Matrix& ybar,
                                       const SimultaneousSVD& dec) {
  NuclearQgTerms t;
  t.xnuc = nuclear_norm(x);
  t.lhs = t.xnuc - nuclear_norm(xbar) - (ybar.array() * (x - xbar).array()).sum();
  t.dist = inverse_subdiff_distance_nuclear(x, dec);
  return t;
}

/// The three nuclear moduli, as multiples of 1/‖X‖_*.
inline double nuclear_modulus_gr1(double gamma) {
  return (1.0 - gamma * gamma) / (2.0 * (1.0 + (1.0 + gamma) * (1.0 + gamma)));
}
inline double nuclear_modulus_fifth(double gamma) { return (1.0 - gamma) / 5.0; }
inline double nuclear_modulus_conjecture(double gamma) { return (1.0 - gamma) / 2.0; }

inline QgAuditReport qg_audit_group(const Vector& xbar, const Vector& ybar, const GroupPartition& p,
                                    const QgSampler& sampler, double tol = kActivityTol) {
  const GroupAnalysis a = classify_groups(xbar, ybar, p, tol);
  QgAuditReport rep;
  rep.kind = "group";
  rep.gamma = a.gamma;
  QgConstantReport c;
  c.name = "(1-gamma)/(2|x|)";
  for (size_t i = 0; i < sampler.count; ++i) {
    auto rng = sample_engine(sampler.seed, i);
    const Vector x = xbar + uniform_ball(rng, p.n(), sampler.radius);
    if (x.norm() <= kQgNormFloor) {
      ++rep.excluded;
      continue;
    }
    ++rep.samples;
    const double s = qg_slack_group(x, xbar, ybar, p, a.gamma, tol);
    if (s < c.min_slack) {
      c.min_slack = s;
      c.argmin = x;
    }
  }
  rep.constants.push_back(std::move(c));
  return rep;
}

inline QgAuditReport qg_audit_nuclear(const Matrix& xbar, const Matrix& ybar,
                                      const QgSampler& sampler, bool audit_conjecture = false,
                                      double tol = kActivityTol) {
  const SimultaneousSVD dec = simultaneous_svd(xbar, ybar, tol);
  QgAuditReport rep;
  rep.kind = "nuclear";
  rep.gamma = dec.lambda_y.size() > 0 ? dec.lambda_y.maxCoeff() : 0.0;
  const double g = rep.gamma;
  rep.constants = {{"(1-gamma^2)/(2|X|_*(1+(1+gamma)^2))", std::numeric_limits<double>::infinity(), {}, true},
                   {"(1-gamma)/(5|X|_*)", std::numeric_limits<double>::infinity(), {}, true}};
  std::vector<double> moduli = {nuclear_modulus_gr1(g), nuclear_modulus_fifth(g)};
  if (audit_conjecture) {
    rep.constants.push_back(
        {"(1-gamma)/(2|X|_*) [conjecture]", std::numeric_limits<double>::infinity(), {}, false});
    moduli.push_back(nuclear_modulus_conjecture(g));
  }
  const Eigen::Index n = xbar.size();
  for (size_t i = 0; i < sampler.count; ++i) {
    auto rng = sample_engine(sampler.seed, i);
    const Vector dx = uniform_ball(rng, n, sampler.radius);
    const Matrix x = xbar + linalg::unvectorize(dx, xbar.rows(), xbar.cols());
    if (x.norm() <= kQgNormFloor) {
      ++rep.excluded;
      continue;
    }
    ++rep.samples;
    const NuclearQgTerms t = nuclear_qg_terms(x, xbar, ybar, dec);
    for (size_t k = 0; k < moduli.size(); ++k) {
      const double s = t.lhs - moduli[k] / t.xnuc * t.dist * t.dist;
      if (s < rep.constants[k].min_slack) {
        rep.constants[k].min_slack = s;
        rep.constants[k].argmin = linalg::vectorize(x);
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Second-order difference quotient of φ = f + g.

/// [φ(x + t w) - φ(x) - t<v, w>] / (t²/2). The data-fit difference is
/// expanded exactly to avoid cancellation.
inline double second_quotient_probe(const ProblemSpec& p, const Vector& x, const Vector& v,
                                    const Vector& w, double t) {
  require(t > 0.0, ErrorCode::InvalidArgument, "second_quotient_probe needs t > 0");
  require(x.size() == p.n() && v.size() == p.n() && w.size() == p.n(), ErrorCode::DimensionMismatch,
          "second_quotient_probe: vector lengths differ from n");
  const Vector phiw = p.phi * w;
  const double dfit = (t * phiw.dot(p.phi * x - p.b) + 0.5 * t * t * phiw.squaredNorm()) / p.mu;
  const double dreg = regularizer_value(p.reg, x + t * w) - regularizer_value(p.reg, x);
  return (dfit + dreg - t * v.dot(w)) / (0.5 * t * t);
}

// ---------------------------------------------------------------------------
// Sampled perturbation of the solution map.

struct PerturbationReport {
  size_t samples = 0;
  /// sup ‖S(p) - S(p')‖ / ‖p - p'‖ over sampled parameter pairs.
  double max_ratio = 0.0;
  /// Largest multistart spread seen at any sample.
  double multivaluedness_spread = 0.0;
  size_t non_converged = 0;
  std::uint64_t seed = 0;
};

struct ProbeOptions {
  SolveOptions solve;
  /// Solves per sample; extra starts are random points scaled like the baseline.
  size_t starts = 1;
};

struct ParameterPoint {
  Vector b;
  double mu = 1.0;
};

namespace detail {

inline std::vector<Vector> start_points(const Vector& first, size_t starts, double scale,
                                        std::uint64_t seed, std::uint64_t index) {
  std::vector<Vector> out{first};
  auto rng = sample_engine(seed ^ 0x9e3779b97f4a7c15ULL, index);
  for (size_t s = 1; s < starts; ++s) {
    out.push_back(scale * gaussian_vector(rng, first.size()) /
                  std::sqrt(static_cast<double>(first.size())));
  }
  return out;
}

}  // namespace detail

/// max pairwise ‖x_i - x_j‖ / ‖(b_i, μ_i) - (b_j, μ_j)‖ over the given solutions.
inline double max_parameter_ratio(const std::vector<ParameterPoint>& params,
                                  const std::vector<Vector>& solutions) {
  double best = 0.0;
  for (size_t i = 0; i < params.size(); ++i) {
    for (size_t j = i + 1; j < params.size(); ++j) {
      const double dmu = params[i].mu - params[j].mu;
      const double dp = std::sqrt((params[i].b - params[j].b).squaredNorm() + dmu * dmu);
      if (dp <= 0.0) continue;
      best = std::max(best, (solutions[i] - solutions[j]).norm() / dp);
    }
  }
  return best;
}

/// Solves at every listed parameter and reports the largest difference ratio.
inline PerturbationReport lipschitz_over_parameters(const ProblemSpec& p,
                                                    const std::vector<ParameterPoint>& params,
                                                    const ProbeOptions& opt = {},
                                                    std::uint64_t seed = 0) {
  PerturbationReport rep;
  rep.seed = seed;
  std::vector<Vector> sols;
  const double scale = 1.0 + prox_gradient_solve(p, opt.solve).x.norm();
  for (size_t i = 0; i < params.size(); ++i) {
    ProblemSpec q = p;
    q.b = params[i].b;
    q.mu = params[i].mu;
    const auto starts = detail::start_points(Vector::Zero(p.n()), opt.starts, scale, seed, i);
    const auto results = multistart_solve(q, Vector::Zero(p.n()), opt.solve, starts);
    for (const auto& r : results)
      if (!r.converged) ++rep.non_converged;
    rep.multivaluedness_spread = std::max(rep.multivaluedness_spread, solution_spread(results));
    sols.push_back(results.front().x);
  }
  rep.samples = params.size();
  rep.max_ratio = max_parameter_ratio(params, sols);
  return rep;
}

/// Draws n (b', μ') uniformly around (b, μ) (b' in a ball, μ' in an interval,
/// μ' kept >= μ/2) and estimates the Lipschitz modulus of the solution map.
/// b_coords restricts the b perturbation to the listed coordinates.
inline PerturbationReport empirical_lipschitz(const ProblemSpec& p, double radius_b,
                                              double radius_mu, size_t n, std::uint64_t seed,
                                              const ProbeOptions& opt = {},
                                              const std::vector<Eigen::Index>& b_coords = {}) {
  const SolveResult base = prox_gradient_solve(p, opt.solve);
  require(base.converged, ErrorCode::NotASolution, "baseline solve did not converge");
  std::vector<ParameterPoint> params{{p.b, p.mu}};
  for (size_t i = 0; i < n; ++i) {
    auto rng = sample_engine(seed, i);
    Vector b = p.b;
    if (b_coords.empty()) {
      b += uniform_ball(rng, p.m(), radius_b);
    } else {
      const Vector d = uniform_ball(rng, static_cast<Eigen::Index>(b_coords.size()), radius_b);
      for (size_t k = 0; k < b_coords.size(); ++k) b(b_coords[k]) += d(static_cast<Eigen::Index>(k));
    }
    std::uniform_real_distribution<double> ud(-1.0, 1.0);
    const double mu = std::max(p.mu + radius_mu * ud(rng), 0.5 * p.mu);
    params.push_back({std::move(b), mu});
  }
  PerturbationReport rep = lipschitz_over_parameters(p, params, opt, seed);
  rep.samples = n;
  return rep;
}

/// Tilted solutions M(v) = argmin φ - <v, ·> for n tilts with ‖v‖ <= radius_v;
/// reports max ‖M(v) - x‖/‖v‖ (0 when v = 0) and the worst multistart spread.
inline PerturbationReport tilt_probe(const ProblemSpec& p, const Vector& x, double radius_v,
                                     size_t n, std::uint64_t seed, const ProbeOptions& opt = {}) {
  p.validate();
  require(x.size() == p.n(), ErrorCode::DimensionMismatch, "tilt_probe: x has the wrong length");
  PerturbationReport rep;
  rep.seed = seed;
  rep.samples = n;
  const double scale = 1.0 + x.norm();
  for (size_t i = 0; i < n; ++i) {
    auto rng = sample_engine(seed, i);
    const Vector v = uniform_ball(rng, p.n(), radius_v);
    const auto starts = detail::start_points(x, opt.starts, scale, seed, i);
    const auto results = multistart_solve(p, v, opt.solve, starts);
    for (const auto& r : results)
      if (!r.converged) ++rep.non_converged;
    rep.multivaluedness_spread = std::max(rep.multivaluedness_spread, solution_spread(results));
    const double vn = v.norm();
    if (vn > 0.0) rep.max_ratio = std::max(rep.max_ratio, (results.front().x - x).norm() / vn);
  }
  return rep;
}

}  // namespace stabcert
