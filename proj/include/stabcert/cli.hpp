#pragma once

// `stabcert <command> <problem.json> [--tol R] [--seed N] [--samples N] [--radius R] [--out report.json]`
//
// Exit status: 0 success, 2 negative verdict (certificate fails, audit fails,
// example mismatch), 1 error. Reports go to --out or to stdout.

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stabcert/io.hpp"
#include "stabcert/stability.hpp"

namespace stabcert::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNegative = 2;

struct Args {
  std::string command;
  std::string problem_path;
  std::optional<double> tol;
  std::uint64_t seed = 0;
  std::optional<size_t> samples;
  std::optional<double> radius;
  std::optional<size_t> starts;
  double b2 = -1.5;
  std::string out_path;
};

/// The instance min ½‖Φx - b‖² + ‖(x1, x2)‖ + |x3| with Φ = (1 1 0; 1 0 -1), b = (2, b2).
inline ProblemSpec example_non(double b2) {
  ProblemSpec p;
  p.phi = Matrix{{1.0, 1.0, 0.0}, {1.0, 0.0, -1.0}};
  p.b = Vector{{2.0, b2}};
  p.mu = 1.0;
  p.reg = GroupPartition::from_groups(3, {{0, 1}, {2}});
  return p;
}

namespace detail {

struct Outcome {
  io::Json body;
  int exit_code = kExitOk;
};

inline std::string flags_text(const Args& a) {
  io::Json j;
  j["command"] = a.command;
  j["tol"] = a.tol ? io::Json(*a.tol) : io::Json(nullptr);
  j["seed"] = a.seed;
  j["samples"] = a.samples ? io::Json(*a.samples) : io::Json(nullptr);
  j["radius"] = a.radius ? io::Json(*a.radius) : io::Json(nullptr);
  j["starts"] = a.starts ? io::Json(*a.starts) : io::Json(nullptr);
  if (a.command == "reproduce-example-non") j["b2"] = a.b2;
  return io::to_text(j, -1);
}

inline Outcome run_problem_command(const Args& a, const io::ProblemFile& f) {
  Outcome o;
  const ProblemSpec& p = f.problem;
  const SolveResult sol = prox_gradient_solve(p, f.solve);
  o.body["solve"] = io::solve_to_json(sol);

  if (a.command == "solve") {
    return o;
  }
  if (a.command == "certify") {
    const StabilityCertificate c = certify(p, sol.x, f.certify);
    o.body["certificate"] = io::certificate_to_json(c);
    o.exit_code = c.holds ? kExitOk : kExitNegative;
    return o;
  }
  if (a.command == "qg-audit") {
    QgSampler s;
    s.count = a.samples.value_or(1000);
    s.radius = a.radius.value_or(1.0);
    s.seed = a.seed;
    QgAuditReport rep;
    if (const auto* part = std::get_if<GroupPartition>(&p.reg)) {
      rep = qg_audit_group(sol.x, sol.y, *part, s, f.certify.activity_tol);
    } else {
      const auto shape = std::get<NuclearShape>(p.reg);
      rep = qg_audit_nuclear(linalg::unvectorize(sol.x, shape.n1, shape.n2),
                             linalg::unvectorize(sol.y, shape.n1, shape.n2), s, true,
                             f.certify.activity_tol);
    }
    o.body["qg_audit"] = io::qg_to_json(rep);
    o.exit_code = rep.passed() ? kExitOk : kExitNegative;
    return o;
  }
  ProbeOptions po;
  po.solve = f.solve;
  if (a.command == "perturb") {
    po.starts = a.starts.value_or(1);
    const double r = a.radius.value_or(0.1);
    o.body["perturbation"] =
        io::perturbation_to_json(empirical_lipschitz(p, r, r, a.samples.value_or(20), a.seed, po));
    return o;
  }
  if (a.command == "tilt-probe") {
    po.starts = a.starts.value_or(2);
    o.body["perturbation"] = io::perturbation_to_json(
        tilt_probe(p, sol.x, a.radius.value_or(1e-3), a.samples.value_or(50), a.seed, po));
    return o;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown command \"" + a.command + "\"");
}

inline Outcome run_example_non(const Args& a, const io::ProblemFile& f) {
  Outcome o;
  const SolveResult sol = prox_gradient_solve(f.problem, f.solve);
  const double predicted = std::max(-a.b2 - 1.0, 0.0);
  const double err = std::abs(sol.x(2) - predicted);
  o.body["solve"] = io::solve_to_json(sol);
  o.body["example_non"] = {{"b2", a.b2},
                           {"predicted_x3", predicted},
                           {"observed_x3", sol.x(2)},
                           {"abs_error", err},
                           {"match", err <= 1e-6}};
  const StabilityCertificate c = certify(f.problem, sol.x, f.certify);
  o.body["certificate"] = io::certificate_to_json(c);
  o.exit_code = err <= 1e-6 && c.holds ? kExitOk : kExitNegative;
  return o;
}

inline void emit_report(const Args& a, const io::Json& report, std::ostream& out) {
  const std::string text = io::to_text(report);
  if (a.out_path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(a.out_path);
  require(static_cast<bool>(f), ErrorCode::Io, "cannot write " + a.out_path);
  f << text;
}

}  // namespace detail

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> c = {"solve",     "certify",    "qg-audit",
                                             "perturb",   "tilt-probe", "reproduce-example-non"};
  return c;
}

/// Full command-line entry point; args excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Args a;
  CLI::App app{"Stability certificates for group-Lasso and nuclear-norm least squares", "stabcert"};
  app.add_option("command", a.command, "solve | certify | qg-audit | perturb | tilt-probe | reproduce-example-non")
      ->required()
      ->check(CLI::IsMember(commands()));
  app.add_option("problem", a.problem_path, "problem JSON file");
  app.add_option("--tol", a.tol, "solver stopping tolerance (overrides the file)");
  app.add_option("--seed", a.seed, "sampling seed");
  app.add_option("--samples", a.samples, "number of samples");
  app.add_option("--radius", a.radius, "sampling radius");
  app.add_option("--starts", a.starts, "solves per sample for multistart");
  app.add_option("--b2", a.b2, "second observation entry for reproduce-example-non");
  app.add_option("--out", a.out_path, "report path (default stdout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "stabcert: " << e.what() << "\n";
    return kExitError;
  }

  const auto start = std::chrono::steady_clock::now();
  io::Json report;
  report["tool"] = "stabcert";
  report["tool_version"] = io::kToolVersion;
  report["command"] = a.command;
  int code = kExitOk;
  try {
    io::ProblemFile f;
    if (a.command == "reproduce-example-non") {
      f.problem = example_non(a.b2);
    } else {
      require(!a.problem_path.empty(), ErrorCode::InvalidArgument,
              "command \"" + a.command + "\" needs a problem file");
      f = io::parse_problem(a.problem_path);
    }
    if (a.tol) {
      require(*a.tol > 0.0, ErrorCode::InvalidArgument, "--tol must be positive");
      f.solve.tol = *a.tol;
    }
    report["inputs_digest"] = io::hex_digest(io::serialize_problem(f) + detail::flags_text(a));
    report["certificate"] = nullptr;
    report["perturbation"] = nullptr;
    detail::Outcome o = a.command == "reproduce-example-non" ? detail::run_example_non(a, f)
                                                             : detail::run_problem_command(a, f);
    for (auto& [k, v] : o.body.items()) report[k] = v;
    code = o.exit_code;
  } catch (const Error& e) {
    report["error"] = {{"code", std::string(code_name(e.code()))}, {"message", e.what()}};
    err << "stabcert: " << e.what() << "\n";
    code = kExitError;
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report["timing"] = {{"wall_seconds", secs}};
  try {
    detail::emit_report(a, report, out);
  } catch (const Error& e) {
    err << "stabcert: " << e.what() << "\n";
    return kExitError;
  }
  return code;
}

}  // namespace stabcert::cli
