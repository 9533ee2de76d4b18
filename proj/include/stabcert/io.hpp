#pragma once

// Problem files and reports. Problems are JSON with 1-based group indices and
// row-major nested arrays; reports use a fixed key order and print every real
// with %.17g so identical runs give identical bytes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "stabcert/error.hpp"
#include "stabcert/problem.hpp"
#include "stabcert/solver.hpp"
#include "stabcert/stability.hpp"

namespace stabcert::io {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSchemaVersion = "1";
inline constexpr const char* kToolVersion = "1.0.0";

struct ProblemFile {
  ProblemSpec problem;
  SolveOptions solve;
  CertifyOptions certify;
};

// ---------------------------------------------------------------------------
// Emitter

namespace detail {

inline void emit(const Json& j, std::string& out, int indent, int depth) {
  const auto newline = [&](int d) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<size_t>(indent * d), ' ');
  };
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (const auto& [k, v] : j.items()) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += Json(k).dump();
        out += indent < 0 ? ":" : ": ";
        emit(v, out, indent, depth + 1);
      }
      newline(depth);
      out += '}';
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Arrays of scalars stay on one line; nested arrays break.
      const bool flat = std::none_of(j.begin(), j.end(),
                                     [](const Json& e) { return e.is_structured(); });
      out += '[';
      for (size_t i = 0; i < j.size(); ++i) {
        if (i > 0) out += flat && indent >= 0 ? ", " : ",";
        if (!flat) newline(depth + 1);
        emit(j[i], out, indent, depth + 1);
      }
      if (!flat) newline(depth);
      out += ']';
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) {
        out += "null";
        return;
      }
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out += buf;
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace detail

/// Deterministic text: keys in insertion order, reals as %.17g, ±inf and NaN as null.
inline std::string to_text(const Json& j, int indent = 2) {
  std::string out;
  detail::emit(j, out, indent, 0);
  if (indent >= 0) out += '\n';
  return out;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex_digest(std::string_view bytes) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(bytes)));
  return std::string("fnv1a64:") + buf;
}

inline Json to_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Json to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(to_json(Vector(m.row(i).transpose())));
  return rows;
}

// ---------------------------------------------------------------------------
// Problem files

namespace detail {

inline const Json& field(const Json& j, const char* key, const std::string& where) {
  require(j.is_object(), ErrorCode::MalformedJson, where + " must be an object");
  const auto it = j.find(key);
  require(it != j.end(), ErrorCode::MissingField, "missing field \"" + std::string(key) + "\" in " + where);
  return *it;
}

inline double real(const Json& j, const std::string& what) {
  require(j.is_number(), ErrorCode::MalformedJson, what + " must be a number");
  return j.get<double>();
}

inline Eigen::Index integer(const Json& j, const std::string& what) {
  require(j.is_number_integer(), ErrorCode::MalformedJson, what + " must be an integer");
  return static_cast<Eigen::Index>(j.get<long long>());
}

inline Vector vector_of(const Json& j, const std::string& what) {
  require(j.is_array(), ErrorCode::MalformedJson, what + " must be an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = real(j[i], what);
  return v;
}

inline Matrix matrix_of(const Json& j, const std::string& what) {
  require(j.is_array() && !j.empty(), ErrorCode::MalformedJson, what + " must be a nonempty array of rows");
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  require(j[0].is_array(), ErrorCode::MalformedJson, what + " rows must be arrays");
  const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Vector r = vector_of(j[static_cast<size_t>(i)], what);
    require(r.size() == cols, ErrorCode::DimensionMismatch,
            what + " row " + std::to_string(i + 1) + " has " + std::to_string(r.size()) +
                " entries, expected " + std::to_string(cols));
    m.row(i) = r.transpose();
  }
  return m;
}

}  // namespace detail

inline Json regularizer_to_json(const Regularizer& reg) {
  Json r;
  if (const auto* part = std::get_if<GroupPartition>(&reg)) {
    r["kind"] = "group";
    Json groups = Json::array();
    for (const auto& g : part->groups()) {
      Json one = Json::array();
      for (Eigen::Index i : g) one.push_back(i + 1);
      groups.push_back(std::move(one));
    }
    r["groups"] = std::move(groups);
  } else {
    const auto shape = std::get<NuclearShape>(reg);
    r["kind"] = "nuclear";
    r["shape"] = Json::array({shape.n1, shape.n2});
  }
  return r;
}

inline Json problem_to_json(const ProblemFile& f) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["phi"] = to_json(f.problem.phi);
  j["b"] = to_json(f.problem.b);
  j["mu"] = f.problem.mu;
  j["reg"] = regularizer_to_json(f.problem.reg);
  j["options"] = {{"solver_tol", f.solve.tol},
                  {"max_iter", f.solve.max_iter},
                  {"kkt_tol", f.certify.kkt_tol},
                  {"activity_tol", f.certify.activity_tol},
                  {"margin_rel_tol", f.certify.margin_rel_tol}};
  return j;
}

inline ProblemFile problem_from_json(const Json& j) {
  using detail::field;
  const Json& version = field(j, "schema_version", "problem");
  require(version.is_string(), ErrorCode::MalformedJson, "schema_version must be a string");
  require(version.get<std::string>() == kSchemaVersion, ErrorCode::UnknownSchemaVersion,
          "unsupported schema_version \"" + version.get<std::string>() + "\"");

  ProblemFile f;
  ProblemSpec& p = f.problem;
  p.phi = detail::matrix_of(field(j, "phi", "problem"), "phi");
  p.b = detail::vector_of(field(j, "b", "problem"), "b");
  p.mu = detail::real(field(j, "mu", "problem"), "mu");
  require(p.mu > 0.0, ErrorCode::MuNonpositive, "mu must be positive, got " + std::to_string(p.mu));

  const Json& reg = field(j, "reg", "problem");
  const Json& kind = field(reg, "kind", "reg");
  require(kind.is_string(), ErrorCode::MalformedJson, "reg.kind must be a string");
  if (kind == "group") {
    const Json& groups = field(reg, "groups", "reg");
    require(groups.is_array(), ErrorCode::MalformedJson, "reg.groups must be an array of arrays");
    std::vector<std::vector<Eigen::Index>> g;
    for (const Json& one : groups) {
      require(one.is_array(), ErrorCode::MalformedJson, "each group must be an array of indices");
      std::vector<Eigen::Index> idx;
      for (const Json& i : one) idx.push_back(detail::integer(i, "group index"));
      g.push_back(std::move(idx));
    }
    p.reg = GroupPartition::from_one_based(p.n(), g);
  } else if (kind == "nuclear") {
    const Json& shape = field(reg, "shape", "reg");
    require(shape.is_array() && shape.size() == 2, ErrorCode::MalformedJson,
            "reg.shape must be [n1, n2]");
    const Eigen::Index n1 = detail::integer(shape[0], "shape"), n2 = detail::integer(shape[1], "shape");
    require(n1 >= 1 && n2 >= 1, ErrorCode::DimensionMismatch, "reg.shape entries must be positive");
    p.reg = NuclearShape{n1, n2};
  } else {
    throw Error(ErrorCode::UnknownRegularizer, "unknown reg.kind \"" + kind.get<std::string>() + "\"");
  }

  if (const auto it = j.find("options"); it != j.end()) {
    const Json& o = *it;
    require(o.is_object(), ErrorCode::MalformedJson, "options must be an object");
    if (o.contains("solver_tol")) f.solve.tol = detail::real(o["solver_tol"], "options.solver_tol");
    if (o.contains("max_iter")) f.solve.max_iter = static_cast<long>(detail::integer(o["max_iter"], "options.max_iter"));
    if (o.contains("kkt_tol")) f.certify.kkt_tol = detail::real(o["kkt_tol"], "options.kkt_tol");
    if (o.contains("activity_tol")) f.certify.activity_tol = detail::real(o["activity_tol"], "options.activity_tol");
    if (o.contains("margin_rel_tol"))
      f.certify.margin_rel_tol = detail::real(o["margin_rel_tol"], "options.margin_rel_tol");
  }
  p.validate();
  return f;
}

inline ProblemFile parse_problem_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::MalformedJson, e.what());
  }
  return problem_from_json(j);
}

inline ProblemFile parse_problem(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_problem_text(ss.str());
}

inline std::string serialize_problem(const ProblemFile& f) { return to_text(problem_to_json(f)); }

// ---------------------------------------------------------------------------
// Report fragments

inline Json real_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json certificate_to_json(const StabilityCertificate& c) {
  Json j;
  j["holds"] = c.holds;
  j["margin"] = real_or_null(c.margin);
  j["subspace_dim"] = c.subspace_dim;
  j["gamma"] = c.gamma;
  j["kkt_residual"] = c.kkt_residual;
  j["witness"] = c.witness ? to_json(*c.witness) : Json(nullptr);
  j["margin_tol"] = c.margin_tol;
  j["classification_gap"] = c.classification_gap;
  j["covers_operator_perturbation"] = c.covers_operator_perturbation;
  j["evidence"] = "certified";
  if (const auto* a = std::get_if<GroupAnalysis>(&c.classification)) {
    const auto one_based = [](const std::vector<size_t>& s) {
      Json out = Json::array();
      for (size_t i : s) out.push_back(i + 1);
      return out;
    };
    j["classification"] = {{"kind", "group"}, {"K", one_based(a->K)}, {"H", one_based(a->H)},
                           {"I", one_based(a->I)}};
  } else {
    const auto& d = std::get<SimultaneousSVD>(c.classification);
    j["classification"] = {{"kind", "nuclear"}, {"r", d.r}, {"p", d.p},
                           {"sigma_x", to_json(d.sigma_x)}, {"lambda_y", to_json(d.lambda_y)}};
  }
  j["tolerances"] = {{"kkt_tol", c.tolerances.kkt_tol},
                     {"activity_tol", c.tolerances.activity_tol},
                     {"margin_rel_tol", c.tolerances.margin_rel_tol}};
  return j;
}

inline Json perturbation_to_json(const PerturbationReport& r) {
  return {{"samples", r.samples},
          {"max_ratio", r.max_ratio},
          {"multivaluedness_spread", r.multivaluedness_spread},
          {"non_converged", r.non_converged},
          {"seed", r.seed},
          {"evidence", "observed"}};
}

inline Json solve_to_json(const SolveResult& r) {
  return {{"x", to_json(r.x)},
          {"iterations", r.iterations},
          {"fixed_point_residual", r.fixed_point_residual},
          {"objective", r.objective},
          {"converged", r.converged}};
}

inline Json qg_to_json(const QgAuditReport& r) {
  Json constants = Json::array();
  for (const auto& c : r.constants) {
    constants.push_back({{"modulus", c.name},
                         {"min_slack", real_or_null(c.min_slack)},
                         {"argmin", c.argmin.size() ? to_json(c.argmin) : Json(nullptr)},
                         {"certifying", c.certifying},
                         {"passed", c.passed()}});
  }
  return {{"kind", r.kind},
          {"samples", r.samples},
          {"excluded", r.excluded},
          {"gamma", r.gamma},
          {"constants", std::move(constants)},
          {"passed", r.passed()},
          {"conjecture_counterexample_candidate", r.conjecture_counterexample_candidate()}};
}

}  // namespace stabcert::io
