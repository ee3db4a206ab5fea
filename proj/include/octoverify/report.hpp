#pragma once

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "octoverify/conditions.hpp"
#include "octoverify/config.hpp"
#include "octoverify/sim.hpp"
#include "octoverify/smt2.hpp"
#include "octoverify/solver.hpp"

namespace octo {

struct VerifyRow {
  std::string name;
  double delta{0.0};
  std::optional<Verdict::Kind> verdict;  // empty when the budget ran out
  std::string note;
  std::optional<Point> witness;
  std::optional<Box> box;
  double seconds{0.0};
  int workers{1};
  std::uint64_t boxes{0};
  bool bisection{false};  // supplementary mu_max search row
};

struct SimulationRow {
  std::string scenario;
  int trials{0};
  bool counterexample{false};
  std::string detail;
  std::string csv_path;
  double seconds{0.0};
};

struct Report {
  std::vector<VerifyRow> verify;
  std::vector<SimulationRow> simulate;
  std::vector<std::string> warnings;

  bool all_decided() const {
    return std::all_of(verify.begin(), verify.end(), [](const VerifyRow& r) { return r.bisection || r.verdict.has_value(); });
  }
};

namespace detail {

inline std::string format_number(double x, const char* fmt = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, x);
  return buf;
}

inline std::string point_text(const VarTable& vars, const Point& p) {
  std::string out;
  for (std::size_t i = 0; i < p.size(); ++i)
    out += (i ? " " : "") + vars.name(i) + "=" + format_number(p[i], "%.9g");
  return out;
}

inline std::string box_text(const Box& b) {
  std::string out;
  for (std::size_t i = 0; i < b.size(); ++i) {
    out += (i ? " " : "") + b.vars().name(i) + "=";
    if (b[i].width() == 0.0)
      out += format_number(b[i].lo, "%.9g");
    else
      out += "[" + format_number(b[i].lo, "%.9g") + "," + format_number(b[i].hi, "%.9g") + "]";
  }
  return out;
}

// File-system friendly form of a task name.
inline std::string file_stem(const std::string& name) {
  std::string out;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.' || c == '_')
      out += c;
    else if (c == '=' || c == ',')
      out += c == '=' ? '-' : '_';
    else
      out += '_';
  }
  return out;
}

}  // namespace detail

inline std::string render_text(const Report& r) {
  std::ostringstream os;
  if (!r.verify.empty()) {
    std::size_t w = 4;
    for (const auto& row : r.verify) w = std::max(w, row.name.size());
    char line[512];
    std::snprintf(line, sizeof line, "%-*s  %-9s  %-9s  %10s  %12s  %7s\n", static_cast<int>(w), "Step", "Precision",
                  "Verdict", "Time (s)", "Boxes", "Workers");
    os << line;
    for (const auto& row : r.verify) {
      std::snprintf(line, sizeof line, "%-*s  %-9s  %-9s  %10.2f  %12llu  %7d\n", static_cast<int>(w),
                    row.name.c_str(), detail::format_number(row.delta, "%g").c_str(),
                    row.verdict ? verdict_name(*row.verdict) : "-", row.seconds,
                    static_cast<unsigned long long>(row.boxes), row.workers);
      os << line;
      if (!row.note.empty()) os << "    note: " << row.note << '\n';
      if (row.witness) os << "    witness: " << detail::point_text(*solver_variables(), *row.witness) << '\n';
      if (row.box) os << "    box: " << detail::box_text(*row.box) << '\n';
    }
  }
  if (!r.simulate.empty()) {
    if (!r.verify.empty()) os << '\n';
    std::size_t w = 8;
    for (const auto& row : r.simulate) w = std::max(w, row.scenario.size());
    char line[512];
    std::snprintf(line, sizeof line, "%-*s  %7s  %-20s  %10s\n", static_cast<int>(w), "Scenario", "Trials", "Outcome",
                  "Time (s)");
    os << line;
    for (const auto& row : r.simulate) {
      std::snprintf(line, sizeof line, "%-*s  %7d  %-20s  %10.2f\n", static_cast<int>(w), row.scenario.c_str(),
                    row.trials, row.counterexample ? "counterexample-found" : "trials-exhausted", row.seconds);
      os << line;
      if (!row.detail.empty()) os << "    " << row.detail << '\n';
      if (!row.csv_path.empty()) os << "    trajectory: " << row.csv_path << '\n';
    }
  }
  for (const auto& wmsg : r.warnings) os << "warning: " << wmsg << '\n';
  return os.str();
}

inline nlohmann::json render_json(const Report& r) {
  using nlohmann::json;
  json j;
  j["verify"] = json::array();
  for (const auto& row : r.verify) {
    json e{{"name", row.name},
           {"precision", row.delta},
           {"verdict", row.verdict ? json(verdict_name(*row.verdict)) : json(nullptr)},
           {"seconds", row.seconds},
           {"boxes", row.boxes},
           {"workers", row.workers}};
    if (!row.note.empty()) e["note"] = row.note;
    const auto& names = solver_variables()->names();
    if (row.witness) {
      json w;
      for (std::size_t i = 0; i < row.witness->size(); ++i) w[names[i]] = (*row.witness)[i];
      e["witness"] = w;
    }
    if (row.box) {
      json b;
      for (std::size_t i = 0; i < row.box->size(); ++i) b[row.box->vars().name(i)] = {(*row.box)[i].lo, (*row.box)[i].hi};
      e["box"] = b;
    }
    j["verify"].push_back(e);
  }
  j["simulate"] = json::array();
  for (const auto& row : r.simulate) {
    json e{{"scenario", row.scenario},
           {"trials", row.trials},
           {"outcome", row.counterexample ? "counterexample-found" : "trials-exhausted"},
           {"seconds", row.seconds}};
    if (!row.detail.empty()) e["detail"] = row.detail;
    if (!row.csv_path.empty()) e["csv"] = row.csv_path;
    j["simulate"].push_back(e);
  }
  j["warnings"] = r.warnings;
  return j;
}

struct VerifyOptions {
  std::vector<std::string> filters;  // substrings; empty selects every task
  std::optional<double> delta;       // overrides every configured precision
  std::optional<int> workers;
  std::optional<std::filesystem::path> checkpoint_dir;
  std::optional<std::filesystem::path> smt2_dir;
  bool auto_bisect{false};
  double bisect_tol{0.05};
  std::function<void(const std::string&)> log;
};

inline bool task_selected(const std::string& name, const std::vector<std::string>& filters) {
  if (filters.empty()) return true;
  return std::any_of(filters.begin(), filters.end(),
                     [&](const std::string& f) { return name.find(f) != std::string::npos; });
}

inline std::vector<VerificationTask> selected_tasks(const RunConfig& cfg, const std::vector<std::string>& filters) {
  std::vector<VerificationTask> out;
  for (auto& t : condition_suite(cfg.suite()))
    if (task_selected(t.name, filters)) out.push_back(std::move(t));
  return out;
}

// Runs the selected verification tasks in suite order.
inline Report run_verify(const RunConfig& cfg, const VerifyOptions& opt) {
  Report report;
  const auto tasks = selected_tasks(cfg, opt.filters);
  if (tasks.empty()) {
    report.warnings.push_back("no task matches the filter");
    return report;
  }
  SolverConfig base = cfg.solver;
  if (opt.workers) base.workers = *opt.workers;

  for (const auto& task : tasks) {
    SolverConfig sc = base;
    if (task.delta) sc.delta = *task.delta;
    if (opt.delta) sc.delta = *opt.delta;
    if (opt.smt2_dir) {
      std::filesystem::create_directories(*opt.smt2_dir);
      std::ofstream(*opt.smt2_dir / (detail::file_stem(task.name) + ".smt2")) << export_smt2(task.formula, task.box, sc.delta);
    }
    if (opt.log) opt.log("solving " + task.name);
    VerifyRow row;
    row.name = task.name;
    row.delta = sc.delta;
    row.workers = sc.workers;
    Solver solver(task.formula, task.box, sc);
    if (opt.checkpoint_dir)
      solver.set_checkpoint({*opt.checkpoint_dir / (detail::file_stem(task.name) + ".ckpt")});
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const auto res = solver.run();
      row.verdict = res.verdict.kind;
      row.boxes = res.stats.boxes;
      if (res.verdict.kind == Verdict::Kind::Sat) row.witness = res.verdict.witness;
      if (res.verdict.box) row.box = res.verdict.box;
    } catch (const BudgetExhausted& e) {
      row.note = e.what();
      row.boxes = e.stats().boxes;
    }
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (opt.log) opt.log(task.name + ": " + (row.verdict ? verdict_name(*row.verdict) : "budget exhausted"));
    const bool bisect = opt.auto_bisect && task.kind == TaskKind::RotorBounds && task.failure &&
                        !(row.verdict && *row.verdict == Verdict::Kind::Unsat);
    report.verify.push_back(std::move(row));

    if (bisect) {
      const auto comps = octorotor_barriers(cfg.barrier, cfg.resolved_gains(), cfg.vehicle);
      const auto fc = *task.failure;
      const double hi = fc.mu_max.value_or(cfg.barrier.mu_max);
      auto builder = [&](double mu_max) {
        BarrierParams bp = cfg.barrier;
        bp.mu_max = mu_max;
        return std::vector<std::pair<Formula, Box>>{
            {rotor_bound_violation(fc.scenario, comps, bp, cfg.resolved_gains(), cfg.vehicle),
             search_box(cfg.search, bp, cfg.vehicle, mu_max)}};
      };
      VerifyRow brow;
      brow.name = task.name + ";bisect";
      brow.delta = sc.delta;
      brow.workers = sc.workers;
      brow.bisection = true;
      const auto t1 = std::chrono::steady_clock::now();
      try {
        const auto b = bisect_mu_max(builder, 1.0, hi, opt.bisect_tol, sc);
        brow.verdict = Verdict::Kind::Unsat;
        brow.note = "largest proven mu_max = " + detail::format_number(b.mu_max);
        for (const auto& w : b.warnings) report.warnings.push_back(task.name + ": " + w);
      } catch (const std::domain_error&) {
        brow.note = "no mu_max in [1, " + detail::format_number(hi) + "] could be proven";
      } catch (const BudgetExhausted& e) {
        brow.note = std::string("bisection: ") + e.what();
      }
      brow.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count();
      report.verify.push_back(std::move(brow));
    }
  }
  return report;
}

struct SimulateOptions {
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out_dir{"."};
  std::function<void(const std::string&)> log;
};

// Falsification per scenario: the no-failure case, then each configured one.
inline Report run_simulate(const RunConfig& cfg, const SimulateOptions& opt) {
  if (cfg.sim.trials <= 0) throw ConfigError("sim: trials must be positive");
  Report report;
  const Gains gains = cfg.resolved_gains();
  std::vector<FailureCase> cases{FailureCase{}};
  cases.insert(cases.end(), cfg.failures.begin(), cfg.failures.end());
  for (const auto& fc : cases) {
    BarrierParams bp = cfg.barrier;
    if (fc.mu_max) bp.mu_max = *fc.mu_max;
    const auto comps = octorotor_barriers(bp, gains, cfg.vehicle);
    FalsifyOptions fo;
    fo.n_trials = cfg.sim.trials;
    fo.horizon = cfg.sim.horizon;
    fo.dt = cfg.sim.dt;
    fo.seed = opt.seed.value_or(cfg.sim.seed);
    fo.policy = cfg.sim.policy;
    fo.control = cfg.sim.control;
    fo.workers = opt.workers.value_or(1);
    const std::string name = rotor_task_name(fc.scenario).substr(std::string("rotor-bounds/").size());
    if (opt.log) opt.log("simulating " + name);
    const auto t0 = std::chrono::steady_clock::now();
    SimulationRow row;
    row.scenario = name;
    row.trials = fo.n_trials;
    if (auto cx = falsify(comps, bp, fc.scenario, fo, gains, cfg.vehicle)) {
      row.counterexample = true;
      row.detail = "trial " + std::to_string(cx->trial) + ": " + cx->reason + " at t=" +
                   detail::format_number(static_cast<double>(cx->step) * fo.dt) +
                   " s (start mu-level " + detail::format_number(cx->mu0) + ")";
      std::filesystem::create_directories(opt.out_dir);
      const auto path = opt.out_dir / ("counterexample-" + detail::file_stem(name) + ".csv");
      std::ofstream os(path);
      write_csv(cx->trajectory, os);
      row.csv_path = path.string();
    }
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.simulate.push_back(std::move(row));
  }
  return report;
}

}  // namespace octo
