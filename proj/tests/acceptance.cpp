#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/LU>

#include "octoverify/config.hpp"
#include "octoverify/report.hpp"
#include "octoverify/smt2.hpp"
#include "random_expr.hpp"
#include "smt2_parser.hpp"

using namespace octo;

namespace {

struct Outcome {
  bool pass{true};
  std::vector<std::string> lines;

  void check(bool ok, const std::string& what) {
    lines.push_back(std::string(ok ? "ok    " : "FAIL  ") + what);
    pass = pass && ok;
  }
  void note(const std::string& what) { lines.push_back("      " + what); }
};

struct Criterion {
  int id;
  std::string title;
  std::function<Outcome()> run;
};

int g_jobs = 1;

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

InnerState state_of(const Point& p) {
  return {p[kVarVz], p[kVarPhi], p[kVarTheta], p[kVarPsi], p[kVarOmega1], p[kVarOmega2], p[kVarOmega3]};
}
Command command_of(const Point& p) { return {p[kVarVzD], p[kVarPhiD], p[kVarThetaD], p[kVarPsiD]}; }
Disturbance disturbance_of(const Point& p) {
  return {p[kVarDeltaZ], p[kVarDeltaR1], p[kVarDeltaR2], p[kVarDeltaR3]};
}

Point uniform_point(std::mt19937_64& rng, const Box& box) {
  Point p(box.size());
  for (std::size_t i = 0; i < box.size(); ++i)
    p[i] = std::uniform_real_distribution<double>(box[i].lo, box[i].hi)(rng);
  return p;
}

std::string verdict_text(const VerifyRow& r) {
  return r.verdict ? verdict_name(*r.verdict) : "undecided (" + r.note + ")";
}

std::string row_text(const VerifyRow& r) {
  return r.name + " @ delta=" + fmt("%g", r.delta) + ": " + verdict_text(r) + " in " + fmt("%.1f", r.seconds) +
         " s, " + std::to_string(r.boxes) + " boxes";
}

Report verify(RunConfig cfg, std::vector<std::string> filters, double max_seconds) {
  cfg.solver.max_boxes = 4'000'000'000ull;
  cfg.solver.max_seconds = max_seconds;
  VerifyOptions o;
  o.filters = std::move(filters);
  o.workers = g_jobs;
  return run_verify(cfg, o);
}

void expect_rows(Outcome& out, const Report& r, Verdict::Kind want, double limit_seconds) {
  for (const auto& row : r.verify) {
    const bool ok = row.verdict == want && row.seconds < limit_seconds;
    out.check(ok, row_text(row));
  }
}

// Quarter-turn closure of the three base rank-deficient failure sets.
std::set<std::set<int>> deficient_oracle() {
  const std::vector<std::set<int>> base{{1, 2, 3, 8}, {1, 2, 4, 7}, {1, 2, 5, 6}};
  std::set<std::set<int>> out;
  for (const auto& b : base) {
    for (int r = 0; r < 8; r += 2) {
      std::set<int> s;
      for (int j : b) s.insert((j - 1 + r) % 8 + 1);
      out.insert(s);
    }
  }
  return out;
}

Outcome lqr_gains_criterion() {
  Outcome out;
  const RunConfig cfg;
  const Gains k = lqr_gains(cfg.lqr, cfg.vehicle);
  const std::pair<const char*, std::pair<double, double>> rows[] = {
      {"K_dz", {k.K_dz, 6.32}}, {"K_p_phi", {k.K_p_phi, 0.5}}, {"K_d_phi", {k.K_d_phi, 0.364}}, {"K_d_psi", {k.K_d_psi, 0.371}}};
  for (const auto& [name, v] : rows)
    out.check(std::fabs(v.first - v.second) <= 5e-3,
              std::string(name) + " = " + fmt("%.6f", v.first) + " (reference " + fmt("%g", v.second) + ")");
  return out;
}

Outcome rank_criterion() {
  Outcome out;
  const auto L = mixing_matrix(OctorotorParams{});
  const auto oracle = deficient_oracle();
  out.check(oracle.size() == 10, "rotational closure has " + std::to_string(oracle.size()) + " sets");
  int total = 0, low_rank_small = 0, lu_mismatch = 0;
  std::set<std::set<int>> found;
  for (unsigned mask = 0; mask < 256; ++mask) {
    const int n = std::popcount(mask);
    if (n > 4) continue;
    ++total;
    std::set<int> w;
    for (int j = 0; j < 8; ++j)
      if (mask & (1u << j)) w.insert(j + 1);
    const auto m = masked_matrix(L, w);
    const bool full = is_rank_four(m);
    Eigen::FullPivLU<MixingMatrix> lu(m);
    lu.setThreshold(1e-10);
    if ((lu.rank() == 4) != full) ++lu_mismatch;
    if (!full && n <= 3) ++low_rank_small;
    if (!full && n == 4) found.insert(w);
  }
  out.check(total == 163, "enumerated " + std::to_string(total) + " failure sets");
  out.check(low_rank_small == 0, "rank-deficient sets with |W| <= 3: " + std::to_string(low_rank_small));
  out.check(found == oracle, "rank-deficient sets with |W| = 4: " + std::to_string(found.size()) + " (match closure: " +
                                 (found == oracle ? "yes" : "no") + ")");
  out.check(lu_mismatch == 0, "disagreements with full-pivot LU rank: " + std::to_string(lu_mismatch));
  return out;
}

// Evaluates the allocation at a solver witness and reports any working rotor
// whose unsaturated thrust leaves [f_min + eps, f_max - eps].
void confirm_allocation_violation(Outcome& out, const RunConfig& cfg, const FailureScenario& w, const Point& x) {
  const auto gains = cfg.resolved_gains();
  const auto u = block_k(state_of(x), command_of(x), gains, cfg.vehicle);
  const auto a = allocate(u, w, cfg.vehicle);
  const double eps = cfg.barrier.epsilon;
  std::string which;
  for (int j = 0; j < kRotorCount; ++j) {
    if (w.is_failed(j + 1)) continue;
    const double f = a.f_tilde[j];
    if (f > cfg.vehicle.f_max - eps || f < cfg.vehicle.f_min + eps)
      which += " f" + std::to_string(j + 1) + "=" + fmt("%.6f", f);
  }
  const bool in_support = membership(state_of(x), command_of(x), x[kVarMu],
                                     octorotor_barriers(cfg.barrier, gains, cfg.vehicle));
  out.check(!which.empty() && in_support,
            "direct allocation at witness (mu=" + fmt("%g", x[kVarMu]) + ", inside I(mu): " +
                (in_support ? "yes" : "no") + "):" + (which.empty() ? " no bound violation" : which) +
                " outside [" + fmt("%g", cfg.vehicle.f_min) + ", " + fmt("%g", cfg.vehicle.f_max) + "]");
}

Outcome table2_criterion() {
  Outcome out;
  RunConfig cfg;
  for (const char* w : {"1:0", "1:0,3:0", "1:0,4:0", "1:0,5:0", "1:0,6:0", "1:0,7:0", "1:0,8:0"})
    cfg.failures.push_back({parse_scenario(w), std::nullopt, 1e-2});
  expect_rows(out, verify(cfg, {"rotor-bounds/W="}, 600.0), Verdict::Kind::Unsat, 600.0);

  RunConfig sat;
  const auto w12 = parse_scenario("1:0,2:0");
  sat.failures.push_back({w12, std::nullopt, 1e-5});
  const auto r = verify(sat, {"rotor-bounds/W="}, 600.0);
  for (const auto& row : r.verify) {
    out.check(row.verdict == Verdict::Kind::Sat && row.witness.has_value(), row_text(row));
    if (row.witness) confirm_allocation_violation(out, sat, w12, *row.witness);
  }
  return out;
}

Outcome table3_criterion() {
  Outcome out;
  struct Case {
    const char* stuck;
    std::optional<double> mu_max;
    double delta;
    Verdict::Kind want;
  };
  const Case cases[] = {{"1:1.4715", 2.0, 1e-2, Verdict::Kind::Unsat},
                        {"1:1.4715,2:1.4715", 1.5, 1e-2, Verdict::Kind::Unsat},
                        {"1:0,2:1.962", std::nullopt, 1e-5, Verdict::Kind::Sat},
                        {"1:1.962,8:1.962", 1.1, 1e-2, Verdict::Kind::Unsat}};
  for (const auto& c : cases) {
    RunConfig cfg;
    const auto w = parse_scenario(c.stuck);
    cfg.failures.push_back({w, c.mu_max, c.delta});
    const auto r = verify(cfg, {"rotor-bounds/W="}, 1800.0);
    for (const auto& row : r.verify) {
      out.check(row.verdict == c.want && row.seconds < 1800.0,
                row_text(row) + (c.mu_max ? " (mu_max=" + fmt("%g", *c.mu_max) + ")" : ""));
      if (c.want == Verdict::Kind::Sat && row.witness) confirm_allocation_violation(out, cfg, w, *row.witness);
    }
  }
  return out;
}

Outcome table1_criterion() {
  Outcome out;
  const RunConfig cfg;
  const auto fast = verify(cfg, {"support", "invariance/vz/", "invariance/psi-Omega3/", "rotor-bounds/no-failures"},
                           1800.0);
  out.check(fast.verify.size() == 10, std::to_string(fast.verify.size()) + " fast rows selected");
  expect_rows(out, fast, Verdict::Kind::Unsat, 1800.0);

  RunConfig narrow;
  narrow.barrier.mu_max = 1.2;
  out.note("tilt rows restricted to mu in [1, 1.2]:");
  expect_rows(out, verify(narrow, {"invariance/phi-Omega1/", "invariance/theta-Omega2/"}, 1800.0),
              Verdict::Kind::Unsat, 1800.0);
  out.note("tilt rows over the full range mu in [1, " + fmt("%g", cfg.barrier.mu_max) + "]:");
  expect_rows(out, verify(cfg, {"invariance/phi-Omega1/", "invariance/theta-Omega2/"}, 1800.0),
              Verdict::Kind::Unsat, 1800.0);

  FalsifyOptions opt;
  opt.n_trials = 10000;
  opt.horizon = 5.0;
  opt.dt = cfg.sim.dt;
  opt.seed = cfg.sim.seed;
  opt.policy = {DisturbanceKind::Adversarial};
  opt.workers = g_jobs;
  const auto gains = cfg.resolved_gains();
  const auto t0 = std::chrono::steady_clock::now();
  const auto cx = falsify(octorotor_barriers(cfg.barrier, gains, cfg.vehicle), cfg.barrier, {}, opt, gains, cfg.vehicle);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.check(!cx, "falsify, 10000 adversarial trials over 5 s: " +
                     (cx ? "counterexample in trial " + std::to_string(cx->trial) + ": " + cx->reason
                         : std::string("no counterexample")) +
                     " (" + fmt("%.1f", secs) + " s)");
  return out;
}

Outcome soundness_criterion() {
  Outcome out;
  std::mt19937_64 rng(2024);

  // Interval enclosure of point values.
  {
    auto vars = std::make_shared<const VarTable>(VarTable{"a", "b", "c"});
    long checked = 0, violations = 0;
    for (int k = 0; k < 10000; ++k) {
      const Expr e = fixtures::random_expr(rng, 3, 4);
      const auto bounds = fixtures::random_box(rng, 3);
      const Interval range = eval_interval(e, bounds);
      for (int j = 0; j < 10; ++j) {
        double v;
        try {
          v = eval_point(e, fixtures::random_point(rng, bounds));
        } catch (const EvalError&) {
          continue;
        }
        if (!std::isfinite(v)) continue;
        ++checked;
        if (!range.contains(v)) ++violations;
      }
    }
    out.check(violations == 0 && checked > 50000, "enclosure: 10000 expression/box pairs, " +
                                                       std::to_string(checked) + " points, " +
                                                       std::to_string(violations) + " violations");
  }

  auto random_formula = [&](std::size_t nvars) {
    std::vector<Formula> atoms;
    const int n = std::uniform_int_distribution<int>(1, 3)(rng);
    for (int i = 0; i < n; ++i) {
      const Expr e = fixtures::random_expr(rng, nvars, 3);
      const double bound = std::uniform_real_distribution<double>(-2.0, 2.0)(rng);
      atoms.push_back(std::uniform_int_distribution<int>(0, 1)(rng) ? Formula::greater(e, bound)
                                                                     : Formula::less(e, bound));
    }
    if (std::uniform_int_distribution<int>(0, 3)(rng) == 0) return Formula::disjunction(std::move(atoms));
    return Formula::conjunction(std::move(atoms));
  };

  // Witness validation and refutation sampling on random formulas.
  {
    auto vars = std::make_shared<const VarTable>(VarTable{"a", "b"});
    int sat = 0, unsat = 0, bad_witness = 0, refuted_hits = 0;
    for (int k = 0; k < 200; ++k) {
      const Formula f = random_formula(2);
      const auto bounds = fixtures::random_box(rng, 2);
      SolverConfig sc;
      sc.max_boxes = 50000;
      SolveResult r;
      try {
        r = solve(f, Box(vars, bounds), sc);
      } catch (const BudgetExhausted&) {
        continue;
      }
      if (r.verdict.kind == Verdict::Kind::Sat) {
        ++sat;
        bool inside = true;
        for (std::size_t i = 0; i < bounds.size(); ++i) inside = inside && bounds[i].contains(r.verdict.witness[i]);
        if (!inside || !satisfies(f, r.verdict.witness)) ++bad_witness;
      } else if (r.verdict.kind == Verdict::Kind::Unsat) {
        ++unsat;
        for (int j = 0; j < 100000; ++j)
          if (satisfies(f, fixtures::random_point(rng, bounds))) {
            ++refuted_hits;
            break;
          }
      }
    }
    out.check(sat > 20 && bad_witness == 0,
              "Sat witnesses re-validated: " + std::to_string(sat - bad_witness) + "/" + std::to_string(sat));
    out.check(unsat > 20 && refuted_hits == 0, "random Unsat verdicts surviving 100000 samples each: " +
                                                   std::to_string(unsat - refuted_hits) + "/" + std::to_string(unsat));
  }

  // Sampling the decided verification conditions themselves.
  {
    RunConfig cfg;
    cfg.failures.push_back({parse_scenario("1:0,3:0"), std::nullopt, std::nullopt});
    const std::set<std::string> names{"support", "invariance/vz/vz,0,+", "invariance/psi-Omega3/Omega3,0,-",
                                      "rotor-bounds/no-failures", "rotor-bounds/W=1,3;stuck=0,0"};
    SolverConfig sc = cfg.solver;
    sc.max_seconds = 600.0;
    for (const auto& t : condition_suite(cfg.suite())) {
      if (!names.contains(t.name)) continue;
      const auto r = solve(t.formula, t.box, sc);
      int hits = 0;
      for (int j = 0; j < 100000; ++j) hits += satisfies(t.formula, uniform_point(rng, t.box));
      out.check(r.verdict.kind == Verdict::Kind::Unsat && hits == 0,
                t.name + ": " + verdict_name(r.verdict.kind) + ", 100000 samples, " + std::to_string(hits) +
                    " satisfying");
    }
  }

  // Verdict class across worker counts.
  {
    auto vars = std::make_shared<const VarTable>(VarTable{"a", "b", "c"});
    int compared = 0, differing = 0;
    for (int k = 0; k < 60; ++k) {
      const Formula f = random_formula(3);
      const Box box(vars, fixtures::random_box(rng, 3));
      std::optional<bool> first;
      bool exhausted = false;
      for (int w : {1, 4, 16}) {
        SolverConfig sc;
        sc.max_boxes = 50000;
        sc.workers = w;
        try {
          const bool refuted = solve(f, box, sc).verdict.kind == Verdict::Kind::Unsat;
          if (!first) first = refuted;
          differing += *first != refuted;
        } catch (const BudgetExhausted&) {
          exhausted = true;
        }
      }
      compared += !exhausted;
    }
    RunConfig cfg;
    for (const auto& t : condition_suite(cfg.suite())) {
      if (t.name != "invariance/vz/vz,0,-" && t.name != "rotor-bounds/no-failures") continue;
      std::optional<Verdict::Kind> first;
      for (int w : {1, 4, 16}) {
        SolverConfig sc = cfg.solver;
        sc.workers = w;
        const auto kind = solve(t.formula, t.box, sc).verdict.kind;
        if (!first) first = kind;
        differing += *first != kind;
      }
      ++compared;
    }
    out.check(differing == 0 && compared > 40, "worker counts 1/4/16: " + std::to_string(compared) +
                                                   " formulas, " + std::to_string(differing) + " verdict changes");
  }
  return out;
}

Outcome oracle_criterion() {
  Outcome out;
  const RunConfig cfg;
  const auto gains = cfg.resolved_gains();
  const auto& p = cfg.vehicle;
  const auto& bp = cfg.barrier;
  const auto comps = octorotor_barriers(bp, gains, p);
  std::mt19937_64 rng(99);

  {
    const Box box = search_box(cfg.search, bp, p);
    double worst = 0.0;
    for (const auto& b : comps) {
      const Expr e = barrier_dot_expr(b, gains, p);
      for (int k = 0; k < 1000; ++k) {
        const Point x = uniform_point(rng, box);
        const double num = barrier_dot(b, state_of(x), command_of(x), disturbance_of(x), gains, p);
        worst = std::max(worst, std::fabs(eval_point(e, x) - num));
      }
    }
    out.check(worst <= 1e-9, "symbolic vs numeric derivative, 20 components x 1000 points, max error " +
                                 fmt("%.2e", worst));
  }

  {
    auto in_s_alpha = [](double a, double w, double ad, double D, double DO, double p, double margin) {
      return std::fabs(a - ad) <= D && std::fabs(w) <= DO && std::fabs(a - ad + p * w) <= D - margin;
    };
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int mismatches = 0, inside = 0;
    for (int k = 0; k < 10000; ++k) {
      const Command c{u(rng), 0.15 * u(rng), 0.15 * u(rng), 0.0};
      const InnerState s{c.v_z_d + 0.3 * u(rng), c.phi_d + 0.06 * u(rng), c.theta_d + 0.06 * u(rng), 0.06 * u(rng),
                         0.1 * u(rng),           0.1 * u(rng),           0.1 * u(rng)};
      const bool direct = std::fabs(s.v_z - c.v_z_d) <= bp.D_vz && 
                          in_s_alpha(s.phi, s.Omega1, c.phi_d, bp.D_phi, bp.D_O1, bp.p_phi1, bp.delta_phi1) &&
                          in_s_alpha(s.theta, s.Omega2, c.theta_d, bp.D_theta, bp.D_O2, bp.p_theta1, bp.delta_theta1) &&
                          in_s_alpha(s.psi, s.Omega3, c.psi_d, bp.D_psi, bp.D_O3, bp.p_psi1, bp.delta_psi1);
      mismatches += membership(s, c, 1.0, comps) != direct;
      inside += direct;
    }
    out.check(mismatches == 0 && inside > 100, "I(1) vs inequality description, 10000 points, " +
                                                   std::to_string(inside) + " inside, " + std::to_string(mismatches) +
                                                   " mismatches");
  }

  {
    const AffineBarrier* up = nullptr;
    for (const auto& b : comps)
      if (b.id == "vz,0,+") up = &b;
    const double reach_phi = bp.D_phid + bp.mu_max * bp.D_phi;
    const double reach_theta = bp.D_thetad + bp.mu_max * bp.D_theta;
    const int n = 401;
    double lo = INFINITY;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        InnerState s;
        s.v_z = -bp.D_vz;
        s.phi = -reach_phi + 2 * reach_phi * i / (n - 1);
        s.theta = -reach_theta + 2 * reach_theta * j / (n - 1);
        lo = std::min(lo, barrier_dot(*up, s, {}, {-p.delta_r_max, 0, 0, 0}, gains, p));
      }
    }
    out.check(std::fabs(lo - 1.02) <= 0.05, "grid minimum of the vertical barrier derivative on its unit boundary: " +
                                                fmt("%.4f", lo));
  }
  return out;
}

double vz_after(double T, double dt, double v0, const Gains& k, const OctorotorParams& p) {
  const Allocator alloc({}, p);
  InnerState s;
  s.v_z = v0;
  const auto n = static_cast<int>(std::llround(T / dt));
  for (int i = 0; i < n; ++i) s = step(s, {}, alloc, {}, dt, k, p, ControlUpdate::PerStage).next;
  return s.v_z;
}

Outcome simulation_criterion() {
  Outcome out;
  const RunConfig cfg;
  const auto gains = cfg.resolved_gains();
  FalsifyOptions opt;
  opt.n_trials = 1000;
  opt.horizon = cfg.sim.horizon;
  opt.dt = cfg.sim.dt;
  opt.seed = cfg.sim.seed;
  opt.policy = cfg.sim.policy;
  opt.workers = g_jobs;
  opt.tolerance = 1e-6;
  const auto cx = falsify(octorotor_barriers(cfg.barrier, gains, cfg.vehicle), cfg.barrier, {}, opt, gains, cfg.vehicle);
  out.check(!cx, "1000 falsification trials: " + (cx ? "trial " + std::to_string(cx->trial) + ": " + cx->reason
                                                     : std::string("no escape, no level increase above 1")));

  const double lambda = gains.K_dz / cfg.vehicle.m, T = 1.0, v0 = 0.2;
  const double exact = v0 * std::exp(-lambda * T);
  const double e1 = std::fabs(vz_after(T, 1e-2, v0, gains, cfg.vehicle) - exact);
  const double e2 = std::fabs(vz_after(T, 5e-3, v0, gains, cfg.vehicle) - exact);
  const double e3 = std::fabs(vz_after(T, 2.5e-3, v0, gains, cfg.vehicle) - exact);
  const double o1 = std::log2(e1 / e2), o2 = std::log2(e2 / e3);
  out.check(std::fabs(o1 - 4.0) < 0.15 && std::fabs(o2 - 4.0) < 0.15,
            "observed RK4 order on the vertical channel (per-stage control update): " + fmt("%.3f", o1) + ", " + fmt("%.3f", o2));
  return out;
}

std::optional<std::string> find_on_path(const std::string& name) {
  const char* path = std::getenv("PATH");
  if (!path) return std::nullopt;
  std::stringstream ss(path);
  std::string dir;
  while (std::getline(ss, dir, ':')) {
    const auto candidate = std::filesystem::path(dir) / name;
    std::error_code ec;
    if (std::filesystem::is_regular_file(candidate, ec)) return candidate.string();
  }
  return std::nullopt;
}

Outcome smt2_criterion() {
  Outcome out;
  RunConfig cfg;
  cfg.failures.push_back({parse_scenario("1:0,2:0"), std::nullopt, 1e-5});
  const std::vector<std::string> names{"support", "invariance/vz/vz,0,+", "rotor-bounds/W=1,2;stuck=0,0"};
  std::map<std::string, std::string> first;
  for (const auto& t : condition_suite(cfg.suite()))
    if (std::find(names.begin(), names.end(), t.name) != names.end())
      first[t.name] = export_smt2(t.formula, t.box, t.delta.value_or(cfg.solver.delta));

  std::mt19937_64 rng(5);
  for (const auto& t : condition_suite(cfg.suite())) {
    if (!first.contains(t.name)) continue;
    const std::string again = export_smt2(t.formula, t.box, t.delta.value_or(cfg.solver.delta));
    out.check(again == first[t.name], t.name + ": byte-identical re-export (" + std::to_string(again.size()) +
                                          " bytes, fnv1a " + std::to_string(fnv1a(again)) + ")");
    try {
      const fixtures::Smt2Script sc(again);
      int disagreements = 0;
      for (int k = 0; k < 1000; ++k) {
        const Point x = uniform_point(rng, t.box);
        std::map<std::string, double> named;
        for (std::size_t i = 0; i < x.size(); ++i) named[t.box.vars().name(i)] = x[i];
        disagreements += sc.holds(named) != satisfies(t.formula, x);
      }
      out.check(sc.logic == "QF_NRA" && sc.check_sats == 1 && disagreements == 0,
                t.name + ": parses as QF_NRA, " + std::to_string(sc.asserts.size()) + " assertions, " +
                    std::to_string(disagreements) + " disagreements on 1000 points");
    } catch (const std::exception& e) {
      out.check(false, t.name + ": parse error: " + e.what());
    }
  }

  std::optional<std::string> external;
  for (const char* n : {"dreal", "dReal"})
    if (!external) external = find_on_path(n);
  if (!external) {
    out.note("external delta-SMT solver not found on PATH; cross-check skipped (non-blocking)");
  } else {
    const auto dir = std::filesystem::temp_directory_path() / "octoverify-acceptance-smt2";
    std::filesystem::create_directories(dir);
    for (const auto& [name, text] : first) {
      const auto file = dir / (detail::file_stem(name) + ".smt2");
      std::ofstream(file) << text;
      const std::string cmd = *external + " '" + file.string() + "' 2>&1";
      std::string result;
      if (FILE* pipe = popen(cmd.c_str(), "r")) {
        char buf[256];
        while (std::fgets(buf, sizeof buf, pipe)) result += buf;
        pclose(pipe);
      }
      out.note(name + ": external solver says " + (result.empty() ? "(nothing)" : result.substr(0, 60)));
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--jobs" && i + 1 < argc) {
      g_jobs = std::max(1, std::atoi(argv[++i]));
    } else if (a == "-h" || a == "--help") {
      std::cout << "usage: acceptance [--jobs N] [criterion ...]\n";
      return 0;
    } else {
      only.insert(std::atoi(a.c_str()));
    }
  }

  const std::vector<Criterion> criteria{
      {1, "LQR gain reproduction", lqr_gains_criterion},
      {2, "rank classification of failure sets", rank_criterion},
      {3, "complete-failure rotor bounds pattern", table2_criterion},
      {4, "stuck-rotor bounds subset", table3_criterion},
      {5, "fast verification rows and tilt substitutes", table1_criterion},
      {6, "solver soundness properties", soundness_criterion},
      {7, "barrier and derivative oracles", oracle_criterion},
      {8, "simulation concordance", simulation_criterion},
      {9, "SMT-LIB2 export", smt2_criterion},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.contains(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out.check(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (const auto& l : out.lines) std::cout << "    " << l << '\n';
    std::cout << (out.pass ? "PASS" : "FAIL") << "  " << c.id << "  " << c.title << "  (" << fmt("%.1f", secs)
              << " s)\n"
              << std::flush;
    failed += !out.pass;
  }
  return failed == 0 ? 0 : 1;
}
