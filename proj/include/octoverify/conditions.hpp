#pragma once

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "octoverify/alloc.hpp"
#include "octoverify/barrier.hpp"
#include "octoverify/control.hpp"
#include "octoverify/expr.hpp"
#include "octoverify/model.hpp"

namespace octo {

// Solver variables in declaration order: state, disturbance, command, mu.
enum SolverVar : std::size_t {
  kVarVz = 0,
  kVarPhi,
  kVarTheta,
  kVarPsi,
  kVarOmega1,
  kVarOmega2,
  kVarOmega3,
  kVarDeltaZ,
  kVarDeltaR1,
  kVarDeltaR2,
  kVarDeltaR3,
  kVarVzD,
  kVarPhiD,
  kVarThetaD,
  kVarPsiD,
  kVarMu,
  kSolverVarCount
};

inline std::shared_ptr<const VarTable> solver_variables() {
  static const auto table = std::make_shared<const VarTable>(VarTable{
      "v_z", "phi", "theta", "psi", "Omega1", "Omega2", "Omega3", "delta_z", "delta_R1", "delta_R2",
      "delta_R3", "v_z_d", "phi_d", "theta_d", "psi_d", "mu"});
  return table;
}

// Symmetric half-widths of the search box.  Disturbance and command bounds
// are taken from the vehicle and barrier parameters.
struct SearchSpace {
  std::array<double, kStateDim> state_max{1.6, 0.30, 0.30, 0.12, 0.20, 0.20, 0.20};

  void validate() const {
    for (double x : state_max)
      if (!(x > 0.0)) throw ConfigError("search: all bounds must be positive");
  }

  friend bool operator==(const SearchSpace&, const SearchSpace&) = default;
};

inline Box search_box(const SearchSpace& space, const BarrierParams& bp, const OctorotorParams& p,
                      std::optional<double> mu_max = std::nullopt) {
  space.validate();
  std::vector<Interval> b(kSolverVarCount);
  auto sym = [](double r) { return Interval(-r, r); };
  for (int i = 0; i < kStateDim; ++i) b[i] = sym(space.state_max[i]);
  b[kVarDeltaZ] = sym(p.delta_r_max);
  b[kVarDeltaR1] = sym(p.delta_R12_max);
  b[kVarDeltaR2] = sym(p.delta_R12_max);
  b[kVarDeltaR3] = sym(p.delta_R3_max);
  b[kVarVzD] = sym(bp.D_vzd);
  b[kVarPhiD] = sym(bp.D_phid);
  b[kVarThetaD] = sym(bp.D_thetad);
  b[kVarPsiD] = sym(bp.D_psid);
  b[kVarMu] = Interval(1.0 - bp.epsilon, mu_max.value_or(bp.mu_max) + bp.epsilon);
  return Box(solver_variables(), std::move(b));
}

inline Expr var(SolverVar v) { return Expr::variable(v); }

inline std::array<Expr, kStateDim> state_vars() {
  return {var(kVarVz), var(kVarPhi), var(kVarTheta), var(kVarPsi), var(kVarOmega1), var(kVarOmega2),
          var(kVarOmega3)};
}

inline std::array<Expr, kCommandDim> command_vars() {
  return {var(kVarVzD), var(kVarPhiD), var(kVarThetaD), var(kVarPsiD)};
}

// h(s, c, mu) as an expression; each variable occurs once.
inline Expr barrier_expr(const AffineBarrier& b) {
  const auto s = state_vars();
  const auto c = command_vars();
  Expr num = 0.0;
  for (int i = 0; i < kStateDim; ++i)
    if (b.state_coeffs[i] != 0.0) num += Expr(b.state_coeffs[i]) * s[i];
  for (int i = 0; i < kCommandDim; ++i)
    if (b.command_coeffs[i] != 0.0) num += Expr(b.command_coeffs[i]) * c[i];
  return num / Expr(b.denominator) + var(kVarMu);
}

// u_d = K(s, s_d) with the hover feedforward mg / (cos phi cos theta).
inline std::array<Expr, 4> controller_expr(const Gains& k, const OctorotorParams& p) {
  const auto s = state_vars();
  const auto c = command_vars();
  return {
      Expr(p.m * p.g) / (cos(s[kPhi]) * cos(s[kTheta])) + Expr(k.K_dz) * (s[kVz] - c[kVzD]),
      -(Expr(k.K_p_phi) * (s[kPhi] - c[kPhiD])) - Expr(k.K_d_phi) * s[kOmega1],
      -(Expr(k.K_p_theta) * (s[kTheta] - c[kThetaD])) - Expr(k.K_d_theta) * s[kOmega2],
      -(Expr(k.K_p_psi) * (s[kPsi] - c[kPsiD])) - Expr(k.K_d_psi) * s[kOmega3],
  };
}

// Nonlinear inner-loop dynamics with the given (symbolic) input.
inline std::array<Expr, kStateDim> dynamics_expr(const std::array<Expr, 4>& u, const OctorotorParams& p) {
  const auto s = state_vars();
  const Expr sphi = sin(s[kPhi]), cphi = cos(s[kPhi]);
  const Expr cth = cos(s[kTheta]), tth = tan(s[kTheta]);
  const Expr coupled = sphi * s[kOmega2] + cphi * s[kOmega3];
  return {
      Expr(p.g) - u[0] / Expr(p.m) * cphi * cth + var(kVarDeltaZ) / Expr(p.m),
      s[kOmega1] + tth * coupled,
      cphi * s[kOmega2] - sphi * s[kOmega3],
      coupled / cth,
      (u[1] + s[kOmega2] * s[kOmega3] * Expr(p.J2 - p.J3) + var(kVarDeltaR1)) / Expr(p.J1),
      (u[2] + s[kOmega1] * s[kOmega3] * Expr(p.J3 - p.J1) + var(kVarDeltaR2)) / Expr(p.J2),
      (u[3] + s[kOmega1] * s[kOmega2] * Expr(p.J1 - p.J2) + var(kVarDeltaR3)) / Expr(p.J3),
  };
}

// d/dt h along the closed loop (u = u_d), commands held constant.
inline Expr barrier_dot_expr(const AffineBarrier& b, const Gains& k, const OctorotorParams& p) {
  const auto f = dynamics_expr(controller_expr(k, p), p);
  Expr out = 0.0;
  for (int i = 0; i < kStateDim; ++i)
    if (b.state_coeffs[i] != 0.0) out += Expr(b.state_coeffs[i] / b.denominator) * f[i];
  return out;
}

// f_tilde_j(s, c) for every rotor: offset_j + pinv_j . u_d(s, c).
inline std::array<Expr, kRotorCount> f_tilde_expr(const Allocator& alloc, const Gains& k,
                                                 const OctorotorParams& p) {
  const auto u = controller_expr(k, p);
  std::array<Expr, kRotorCount> out;
  for (int j = 0; j < kRotorCount; ++j) {
    Expr fj = alloc.offset()[j];
    for (int r = 0; r < 4; ++r)
      if (alloc.pinv()(j, r) != 0.0) fj += Expr(alloc.pinv()(j, r)) * u[r];
    out[j] = fj;
  }
  return out;
}

inline Formula support_conjunction(std::span<const AffineBarrier> comps, double eps) {
  std::vector<Formula> parts;
  parts.reserve(comps.size());
  for (const auto& b : comps) parts.push_back(Formula::greater(barrier_expr(b), -eps));
  return Formula::conjunction(std::move(parts));
}

// A state on the edge of the search box that still lies in (or near) the
// joint support.  UNSAT certifies that the support is inside the box.
inline Formula support_containment(std::span<const AffineBarrier> comps, const SearchSpace& space,
                                   const BarrierParams& bp) {
  const double eps = bp.epsilon;
  const auto s = state_vars();
  std::vector<Formula> edge;
  for (int i = 0; i < kStateDim; ++i) {
    edge.push_back(Formula::greater(s[i], space.state_max[i] - eps));
    edge.push_back(Formula::less(s[i], -space.state_max[i] + eps));
  }
  return Formula::conjunction({Formula::disjunction(std::move(edge)), support_conjunction(comps, eps)});
}

// A state in the joint support, on the boundary of the target component,
// whose derivative along the closed loop is not positive.
inline Formula invariance_violation(const AffineBarrier& target, std::span<const AffineBarrier> comps,
                                    const BarrierParams& bp, const Gains& gains,
                                    const OctorotorParams& params) {
  const double eps = bp.epsilon;
  std::vector<Formula> parts;
  for (const auto& b : comps) parts.push_back(Formula::greater(barrier_expr(b), -eps));
  parts.push_back(Formula::less(barrier_expr(target), eps));
  parts.push_back(Formula::less(barrier_dot_expr(target, gains, params), eps));
  return Formula::conjunction(std::move(parts));
}

// A state in the joint support where some working rotor's allocated thrust
// reaches (or nearly reaches) a limit.
inline Formula rotor_bound_violation(const FailureScenario& scenario, std::span<const AffineBarrier> comps,
                                     const BarrierParams& bp, const Gains& gains,
                                     const OctorotorParams& params) {
  const double eps = bp.epsilon;
  const Allocator alloc(scenario, params);
  const auto f = f_tilde_expr(alloc, gains, params);
  std::vector<Formula> limits;
  for (int j = 0; j < kRotorCount; ++j) {
    if (scenario.is_failed(j + 1)) continue;
    limits.push_back(Formula::greater(f[j] - Expr(params.f_max), -eps));
    limits.push_back(Formula::less(f[j] - Expr(params.f_min), eps));
  }
  return Formula::conjunction({support_conjunction(comps, eps), Formula::disjunction(std::move(limits))});
}

// One failure case of the rotor-bound check, with optional per-case settings.
struct FailureCase {
  FailureScenario scenario;
  std::optional<double> mu_max;
  std::optional<double> delta;

  friend bool operator==(const FailureCase&, const FailureCase&) = default;
};

struct SuiteConfig {
  OctorotorParams params;
  Gains gains;
  BarrierParams barrier;
  SearchSpace search;
  std::vector<FailureCase> failures;
};

enum class TaskKind { Support, Invariance, RotorBounds };

struct VerificationTask {
  std::string name;
  TaskKind kind;
  Formula formula;
  Box box;
  std::optional<double> delta;  // overrides the solver precision
  std::optional<FailureCase> failure;
};

inline std::string barrier_group(const AffineBarrier& b) {
  if (b.family == "vz") return "vz";
  if (b.family == "phi" || b.family == "Omega1") return "phi-Omega1";
  if (b.family == "theta" || b.family == "Omega2") return "theta-Omega2";
  if (b.family == "psi" || b.family == "Omega3") return "psi-Omega3";
  return b.family;
}

inline std::string rotor_task_name(const FailureScenario& s) {
  if (s.stuck.empty()) return "rotor-bounds/no-failures";
  return "rotor-bounds/W=" + s.rotor_list() + ";stuck=" + s.thrust_list();
}

// Support containment, one invariance task per component, the no-failure
// rotor-bound task, then one rotor-bound task per configured failure case.
inline std::vector<VerificationTask> condition_suite(const SuiteConfig& cfg,
                                                     std::optional<std::vector<AffineBarrier>> comps = std::nullopt) {
  cfg.params.validate();
  cfg.gains.validate();
  cfg.barrier.validate();
  cfg.search.validate();
  const auto barriers = comps ? *comps : octorotor_barriers(cfg.barrier, cfg.gains, cfg.params);
  if (barriers.empty()) throw std::invalid_argument("condition_suite: no barrier components to verify");

  std::vector<VerificationTask> tasks;
  const Box box = search_box(cfg.search, cfg.barrier, cfg.params);
  tasks.push_back({"support", TaskKind::Support, support_containment(barriers, cfg.search, cfg.barrier), box,
                   std::nullopt, std::nullopt});
  for (const auto& b : barriers) {
    tasks.push_back({"invariance/" + barrier_group(b) + "/" + b.id, TaskKind::Invariance,
                     invariance_violation(b, barriers, cfg.barrier, cfg.gains, cfg.params), box, std::nullopt,
                     std::nullopt});
  }
  std::vector<FailureCase> cases{FailureCase{}};
  cases.insert(cases.end(), cfg.failures.begin(), cfg.failures.end());
  for (const auto& fc : cases) {
    tasks.push_back({rotor_task_name(fc.scenario), TaskKind::RotorBounds,
                     rotor_bound_violation(fc.scenario, barriers, cfg.barrier, cfg.gains, cfg.params),
                     search_box(cfg.search, cfg.barrier, cfg.params, fc.mu_max), fc.delta, fc});
  }
  return tasks;
}

}  // namespace octo
