#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "octoverify/checkpoint.hpp"
#include "octoverify/expr.hpp"
#include "octoverify/interval.hpp"
#include "octoverify/lp.hpp"
#include "octoverify/smt2.hpp"
#include "octoverify/tape.hpp"

namespace octo {

enum class BranchRule { Smear, WidestNormalized };

struct SolverConfig {
  double delta{1e-2};
  std::uint64_t max_boxes{100'000'000};
  int workers{1};
  BranchRule branch_rule{BranchRule::Smear};
  bool mean_value{true};
  bool contract{true};
  double max_seconds{0.0};  // 0: no time limit
  std::uint64_t probes{20000};  // random exact polls of the root box before branching
  std::uint64_t probe_seed{1};
  bool repair{true};  // Newton repair of the midpoint in boxes narrower than delta
  bool linear_relax{true};  // LP refutation over first-order enclosures of the atoms

  void validate() const {
    if (!(delta > 0.0)) throw std::invalid_argument("solver: delta must be positive");
    if (max_boxes == 0) throw std::invalid_argument("solver: max_boxes must be positive");
    if (workers < 1) throw std::invalid_argument("solver: workers must be at least 1");
    if (!(max_seconds >= 0.0)) throw std::invalid_argument("solver: max_seconds must be non-negative");
  }

  friend bool operator==(const SolverConfig&, const SolverConfig&) = default;
};

struct Verdict {
  enum class Kind { Unsat, Sat, DeltaSat };
  Kind kind{Kind::Unsat};
  Point witness;           // Sat
  std::optional<Box> box;  // DeltaSat

  bool unsat() const { return kind == Kind::Unsat; }
};

inline const char* verdict_name(Verdict::Kind k) {
  switch (k) {
    case Verdict::Kind::Unsat:
      return "UNSAT";
    case Verdict::Kind::Sat:
      return "SAT";
    case Verdict::Kind::DeltaSat:
      return "DELTA-SAT";
  }
  return "?";
}

struct SolveStats {
  std::uint64_t boxes{0};
  std::uint64_t delta_boxes{0};
  std::size_t max_frontier{0};
  double seconds{0.0};
  int workers{1};
};

struct SolveResult {
  Verdict verdict;
  SolveStats stats;
};

// The work budget ran out before a verdict was reached.
class BudgetExhausted : public std::runtime_error {
 public:
  BudgetExhausted(const std::string& what, SolveStats stats, std::size_t frontier)
      : std::runtime_error(what), stats_(stats), frontier_(frontier) {}
  const SolveStats& stats() const { return stats_; }
  std::size_t frontier() const { return frontier_; }

 private:
  SolveStats stats_;
  std::size_t frontier_;
};

struct CheckpointOptions {
  std::filesystem::path path;
  std::uint64_t every{200'000};  // boxes between saves
  bool resume{true};
};

// Formula lowered onto a tape, with its boolean structure flattened.
class CompiledFormula {
 public:
  struct Atom {
    std::uint32_t root;
    Relation rel;
    double bound;
    std::vector<std::uint32_t> cone;
    std::vector<std::size_t> vars;
    bool nonlinear;
  };
  struct Node {
    Formula::Kind kind;
    int atom{-1};
    std::vector<int> children;
  };

  CompiledFormula(const Formula& f, std::size_t nvars) : formula_(f), nvars_(nvars) {
    build(f);
    tape_.seal();
    std::vector<char> used(nvars, 0);
    for (auto& a : atoms_) {
      a.cone = tape_.cone(a.root);
      a.nonlinear = false;
      for (auto i : a.cone) {
        const auto& in = tape_.code()[i];
        if (in.op == Op::Var) {
          if (in.var >= nvars) throw std::invalid_argument("formula refers to a variable outside the box");
          a.vars.push_back(in.var);
          used[in.var] = 1;
        }
        const bool const_a = arity(in.op) >= 1 && tape_.code()[in.a].op == Op::Const;
        const bool const_b = arity(in.op) == 2 && tape_.code()[in.b].op == Op::Const;
        if (in.op == Op::Sin || in.op == Op::Cos || in.op == Op::Tan || (in.op == Op::Mul && !const_a && !const_b) ||
            (in.op == Op::Div && !const_b))
          a.nonlinear = true;
      }
      std::sort(a.vars.begin(), a.vars.end());
    }
    for (std::size_t i = 0; i < nvars; ++i)
      if (used[i]) active_.push_back(i);
  }

  const Formula& formula() const { return formula_; }
  const Tape& tape() const { return tape_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  const std::vector<std::size_t>& active_vars() const { return active_; }
  std::size_t nvars() const { return nvars_; }

  Truth truth(const std::vector<Truth>& st, int node = 0) const {
    const Node& n = nodes_[node];
    if (n.kind == Formula::Kind::Atom) return st[n.atom];
    const bool conj = n.kind == Formula::Kind::And;
    Truth t = conj ? Truth::CertainlyTrue : Truth::CertainlyFalse;
    for (int c : n.children) {
      const Truth ct = truth(st, c);
      if (conj && ct == Truth::CertainlyFalse) return ct;
      if (!conj && ct == Truth::CertainlyTrue) return ct;
      if (ct == Truth::Unknown) t = Truth::Unknown;
    }
    return t;
  }

  // Undecided atoms that every satisfying point must meet: those reached
  // through conjunctions, or through a disjunction with one live branch.
  void required_atoms(const std::vector<Truth>& st, std::vector<int>& out, int node = 0) const {
    const Node& n = nodes_[node];
    switch (n.kind) {
      case Formula::Kind::Atom:
        if (st[n.atom] == Truth::Unknown) out.push_back(n.atom);
        return;
      case Formula::Kind::And:
        for (int c : n.children) required_atoms(st, out, c);
        return;
      case Formula::Kind::Or: {
        int live = -1;
        for (int c : n.children) {
          const Truth ct = truth(st, c);
          if (ct == Truth::CertainlyTrue) return;
          if (ct == Truth::CertainlyFalse) continue;
          if (live >= 0) return;
          live = c;
        }
        if (live >= 0) required_atoms(st, out, live);
        return;
      }
    }
  }

  // Tape-based point check; agrees with satisfies() on the source formula.
  bool holds_at(const Point& p, std::vector<double>& scratch) const {
    if (!tape_.forward_point(p, scratch)) return false;
    return holds_node(0, scratch);
  }

 private:
  int build(const Formula& f) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({f.kind()});
    if (f.kind() == Formula::Kind::Atom) {
      const auto& a = f.atom_data();
      nodes_[id].atom = static_cast<int>(atoms_.size());
      atoms_.push_back({tape_.add(a.expr), a.rel, a.bound, {}, {}, false});
      return id;
    }
    for (const auto& c : f.children()) {
      const int child = build(c);
      nodes_[id].children.push_back(child);
    }
    return id;
  }

  bool holds_node(int node, const std::vector<double>& v) const {
    const Node& n = nodes_[node];
    if (n.kind == Formula::Kind::Atom) {
      const auto& a = atoms_[n.atom];
      return atom_holds(a.rel, v[a.root], a.bound);
    }
    if (n.kind == Formula::Kind::And) {
      for (int c : n.children)
        if (!holds_node(c, v)) return false;
      return true;
    }
    for (int c : n.children)
      if (holds_node(c, v)) return true;
    return false;
  }

  Formula formula_;
  std::size_t nvars_;
  Tape tape_;
  std::vector<Atom> atoms_;
  std::vector<Node> nodes_;
  std::vector<std::size_t> active_;
};

namespace detail {

struct BoxItem {
  std::vector<Interval> box;
  std::vector<Truth> status;
  std::string path;
};

struct Scratch {
  std::vector<Interval> v, pv, adj, grad, point_box;
  std::vector<double> pt;
  std::vector<double> smear;
  std::vector<int> required;
  Point mid;
  // Per-atom linear enclosure e(c) + G (x - c), with e >= 0 wherever the atom holds.
  std::vector<std::uint64_t> lin_stamp;
  std::vector<Interval> lin_value;
  std::vector<std::vector<Interval>> lin_grad;
  std::uint64_t stamp{0};
  std::vector<int> lp_set;
};

// Processes one box: contract, evaluate, poll, then split or stop.
class BoxProcessor {
 public:
  enum class Outcome { Refuted, Sat, Delta, Split };

  BoxProcessor(const CompiledFormula& cf, const SolverConfig& cfg, std::vector<Interval> root)
      : cf_(cf), cfg_(cfg), root_(std::move(root)) {
    for (const auto& x : root_) root_widths_.push_back(std::max(x.width(), 1e-300));
  }

  Outcome run(BoxItem& item, Scratch& s, BoxItem& lower, BoxItem& upper) const {
    auto& box = item.box;
    const auto& atoms = cf_.atoms();
    const auto& tape = cf_.tape();

    if (cfg_.contract && !contract(item, s)) return Outcome::Refuted;

    tape.forward(box, s.v);
    s.grad.resize(cf_.nvars());
    s.smear.assign(cf_.nvars(), 0.0);
    const auto mid = midpoint(box);
    for (std::size_t a = 0; a < atoms.size(); ++a) {
      if (item.status[a] != Truth::Unknown) continue;
      const auto& at = atoms[a];
      Interval range = s.v[at.root];
      Truth t = atom_truth(at.rel, range, at.bound);
      bool have_grad = false;
      if (t == Truth::Unknown && cfg_.mean_value && at.nonlinear) {
        tape.gradient(at.cone, s.v, s.adj, s.grad);
        have_grad = true;
        const Interval mv = mean_value(at, box, mid, s);
        const Interval both = intersect(range, mv);
        if (!both.empty()) range = both;
        t = atom_truth(at.rel, range, at.bound);
      }
      item.status[a] = t;
      if (t == Truth::Unknown && cfg_.branch_rule == BranchRule::Smear) {
        if (!have_grad) tape.gradient(at.cone, s.v, s.adj, s.grad);
        add_smear(at, box, s);
      }
    }
    if (cf_.truth(item.status) == Truth::CertainlyFalse) return Outcome::Refuted;
    if (cfg_.linear_relax && !relax(item, s)) return Outcome::Refuted;

    s.mid = mid;
    if (cf_.holds_at(s.mid, s.pt) && satisfies(cf_.formula(), s.mid)) return Outcome::Sat;

    const int var = choose(box, s);
    if (var < 0) return repair(item, s) ? Outcome::Sat : Outcome::Delta;

    const Interval x = box[var];
    const double m = x.mid();
    lower.box = box;
    lower.box[var] = Interval(x.lo, m);
    lower.status = item.status;
    lower.path = item.path + '0';
    upper.box = std::move(box);
    upper.box[var] = Interval(m, x.hi);
    upper.status = std::move(item.status);
    upper.path = std::move(item.path) + '1';
    return Outcome::Split;
  }

  double active_width(const std::vector<Interval>& box) const {
    double w = 0.0;
    for (auto i : cf_.active_vars()) w = std::max(w, box[i].width());
    return w;
  }

 private:
  static Point midpoint(const std::vector<Interval>& box) {
    Point p(box.size());
    for (std::size_t i = 0; i < box.size(); ++i) p[i] = box[i].mid();
    return p;
  }

  // Gauss-Newton projection of s.mid onto undecided atoms, clamped to the
  // root box.  Reaches thin feasible sets (such as a 2 eps slab around a
  // barrier boundary) that midpoints never hit.  The required atoms are
  // targeted first, then each other undecided atom joined to them.
  bool repair(const BoxItem& item, Scratch& s) const {
    if (!cfg_.repair) return false;
    s.required.clear();
    cf_.required_atoms(item.status, s.required);
    std::vector<int> targets = s.required;
    if (!targets.empty() && project(targets, s)) return true;
    int tries = 0;
    for (std::size_t a = 0; a < item.status.size() && tries < kRepairTries; ++a) {
      if (item.status[a] != Truth::Unknown) continue;
      if (std::find(s.required.begin(), s.required.end(), static_cast<int>(a)) != s.required.end()) continue;
      ++tries;
      targets = s.required;
      targets.push_back(static_cast<int>(a));
      if (project(targets, s)) return true;
    }
    return false;
  }

  bool project(const std::vector<int>& targets, Scratch& s) const {
    const auto& atoms = cf_.atoms();
    const auto& act = cf_.active_vars();
    Point p = s.mid;
    std::vector<int> rows;
    std::vector<double> resid;
    for (int iter = 0; iter < 8; ++iter) {
      if (!cf_.tape().forward_point(p, s.pt)) return false;
      rows.clear();
      resid.clear();
      for (int a : targets) {
        const auto& at = atoms[a];
        const double value = s.pt[at.root];
        if (atom_holds(at.rel, value, at.bound)) continue;
        const double tau = 1e-12 * std::max(1.0, std::fabs(at.bound));
        rows.push_back(a);
        resid.push_back((at.rel == Relation::Greater ? at.bound + tau : at.bound - tau) - value);
      }
      if (rows.empty()) break;
      s.point_box.resize(p.size());
      for (std::size_t i = 0; i < p.size(); ++i) s.point_box[i] = Interval(p[i]);
      cf_.tape().forward(s.point_box, s.pv);
      Eigen::MatrixXd J(rows.size(), act.size());
      for (std::size_t r = 0; r < rows.size(); ++r) {
        cf_.tape().gradient(atoms[rows[r]].cone, s.pv, s.adj, s.grad);
        for (std::size_t c = 0; c < act.size(); ++c) J(r, c) = s.grad[act[c]].mid();
      }
      if (!J.allFinite()) return false;
      const Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(resid.data(), resid.size());
      const Eigen::MatrixXd JJt = J * J.transpose();
      const double lambda = 1e-14 * std::max(JJt.trace(), 1e-300);
      const Eigen::VectorXd step =
          J.transpose() * (JJt + lambda * Eigen::MatrixXd::Identity(rows.size(), rows.size())).ldlt().solve(r);
      if (!step.allFinite()) return false;
      for (std::size_t c = 0; c < act.size(); ++c) {
        const auto i = act[c];
        p[i] = std::clamp(p[i] + step[c], root_[i].lo, root_[i].hi);
      }
    }
    if (cf_.holds_at(p, s.pt) && satisfies(cf_.formula(), p)) {
      s.mid = std::move(p);
      return true;
    }
    return false;
  }

  static constexpr int kRepairTries = 32;

  // Linear relaxation.  Each atom is enclosed over the box by its mean-value
  // form; an LP over the midpoint linearizations proposes multipliers, and a
  // set of atoms is infeasible when the interval enclosure of the multiplier
  // combination is negative on the whole box.  The required atoms are tested
  // together, then joined with each other undecided atom; an atom that cannot
  // hold together with the required ones is marked false.  Returns false when
  // the box is refuted.
  bool relax(BoxItem& item, Scratch& s) const {
    const auto& box = item.box;
    ++s.stamp;
    s.lin_stamp.resize(cf_.atoms().size(), 0);
    s.lin_value.resize(cf_.atoms().size());
    s.lin_grad.resize(cf_.atoms().size());
    s.point_box.resize(box.size());
    for (std::size_t i = 0; i < box.size(); ++i) s.point_box[i] = Interval(box[i].mid());
    cf_.tape().forward(s.point_box, s.pv);

    std::size_t tested = 0;
    for (int round = 0; round < 3; ++round) {
      s.required.clear();
      cf_.required_atoms(item.status, s.required);
      if (!s.required.empty() && infeasible(s.required, -1, box, s)) return false;
      bool changed = false;
      for (std::size_t a = 0; a < item.status.size() && tested < kRelaxTries; ++a) {
        if (item.status[a] != Truth::Unknown) continue;
        if (std::find(s.required.begin(), s.required.end(), static_cast<int>(a)) != s.required.end()) continue;
        ++tested;
        if (infeasible(s.required, static_cast<int>(a), box, s)) {
          item.status[a] = Truth::CertainlyFalse;
          changed = true;
        }
      }
      if (!changed) return true;
      if (cf_.truth(item.status) == Truth::CertainlyFalse) return false;
    }
    return true;
  }

  bool linearize(int a, Scratch& s) const {
    if (s.lin_stamp[a] == s.stamp) return s.lin_value[a].lo <= s.lin_value[a].hi;
    s.lin_stamp[a] = s.stamp;
    const auto& at = cf_.atoms()[a];
    const auto& act = cf_.active_vars();
    const bool greater = at.rel == Relation::Greater;
    const Interval f = s.pv[at.root];
    Interval e = greater ? f - Interval(at.bound) : Interval(at.bound) - f;
    cf_.tape().gradient(at.cone, s.v, s.adj, s.grad);
    auto& g = s.lin_grad[a];
    g.resize(act.size());
    bool ok = std::isfinite(e.lo) && std::isfinite(e.hi);
    for (std::size_t c = 0; c < act.size() && ok; ++c) {
      g[c] = greater ? s.grad[act[c]] : -s.grad[act[c]];
      ok = std::isfinite(g[c].lo) && std::isfinite(g[c].hi);
    }
    if (!ok) e = Interval::empty_set();
    s.lin_value[a] = e;
    return ok;
  }

  // Atoms `set` (plus `extra` when >= 0) cannot all hold anywhere in the box.
  bool infeasible(const std::vector<int>& set, int extra, const std::vector<Interval>& box, Scratch& s) const {
    const auto& act = cf_.active_vars();
    s.lp_set.clear();
    for (int a : set)
      if (linearize(a, s)) s.lp_set.push_back(a);
    if (extra >= 0) {
      if (!linearize(extra, s)) return false;
      s.lp_set.push_back(extra);
    }
    const auto k = static_cast<Eigen::Index>(s.lp_set.size());
    const auto n = static_cast<Eigen::Index>(act.size());
    if (k == 0) return false;

    // In scaled coordinates y = (x - c) / r, |y| <= 1:  e_k <= u_k + a_k . y.
    // Dual of  min t  s.t.  A z + t >= u' (z = y + 1 in [0, 2]):
    //   max b'l - 2 sum(v)  s.t.  A' l - v <= 0,  sum(l) <= 1,  l, v >= 0.
    Eigen::MatrixXd A(k, n);
    Eigen::VectorXd u(k);
    for (Eigen::Index r = 0; r < k; ++r) {
      const int a = s.lp_set[r];
      double slack = s.lin_value[a].hi;
      for (Eigen::Index c = 0; c < n; ++c) {
        const double rad = box[act[c]].width() / 2.0;
        const Interval& g = s.lin_grad[a][c];
        A(r, c) = g.mid() * rad;
        slack += (g.hi - g.lo) / 2.0 * rad;
      }
      u[r] = slack;
    }
    if (!A.allFinite() || !u.allFinite()) return false;
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n + 1, k + n);
    D.topLeftCorner(n, k) = A.transpose();
    D.block(0, k, n, n) = -Eigen::MatrixXd::Identity(n, n);
    D.block(n, 0, 1, k).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
    rhs[n] = 1.0;
    Eigen::VectorXd obj(k + n);
    obj.head(k) = A.rowwise().sum() - u;
    obj.tail(n).setConstant(-2.0);
    const LpResult lp = simplex_max(D, rhs, obj);
    if (!(lp.value > 0.0)) return false;

    // Rigorous check: sum_k l_k e_k(x) < 0 on the whole box.
    Interval total(0.0);
    for (Eigen::Index r = 0; r < k; ++r)
      if (lp.x[r] > 0.0) total = total + Interval(lp.x[r]) * s.lin_value[s.lp_set[r]];
    for (Eigen::Index c = 0; c < n; ++c) {
      Interval g(0.0);
      for (Eigen::Index r = 0; r < k; ++r)
        if (lp.x[r] > 0.0) g = g + Interval(lp.x[r]) * s.lin_grad[s.lp_set[r]][c];
      const auto i = act[c];
      total = total + g * (box[i] - Interval(box[i].mid()));
    }
    return total.hi < 0.0;
  }

  static constexpr std::size_t kRelaxTries = 64;

  bool contract(BoxItem& item, Scratch& s) const {
    const auto& atoms = cf_.atoms();
    auto& box = item.box;
    for (int pass = 0; pass < 4; ++pass) {
      s.required.clear();
      cf_.required_atoms(item.status, s.required);
      if (s.required.empty()) return true;
      double before = 0.0;
      for (auto i : cf_.active_vars()) before += box[i].width() / root_widths_[i];
      cf_.tape().forward(box, s.v);
      for (int a : s.required) {
        const auto& at = atoms[a];
        const Interval target = at.rel == Relation::Greater
                                    ? Interval(at.bound, std::numeric_limits<double>::infinity())
                                    : Interval(-std::numeric_limits<double>::infinity(), at.bound);
        if (!cf_.tape().backward(at.cone, target, s.v, box)) return false;
      }
      double after = 0.0;
      for (auto i : cf_.active_vars()) after += box[i].width() / root_widths_[i];
      if (!(after < 0.9 * before)) break;
    }
    return true;
  }

  // f(c) + sum_i g_i (X_i - c_i), with f(c) enclosed by a point-box pass.
  Interval mean_value(const CompiledFormula::Atom& at, const std::vector<Interval>& box, const Point& mid,
                      Scratch& s) const {
    s.point_box.resize(box.size());
    for (auto i : at.vars) s.point_box[i] = Interval(mid[i]);
    cf_.tape().forward(s.point_box, s.pv, at.cone);
    Interval out = s.pv[at.root];
    for (auto i : at.vars) out = out + s.grad[i] * (box[i] - Interval(mid[i]));
    return out;
  }

  // Smear-sum-relative: each undecided atom contributes |g_i| w_i normalized
  // over its own variables.
  void add_smear(const CompiledFormula::Atom& at, const std::vector<Interval>& box, Scratch& s) const {
    double total = 0.0;
    int infinite = 0;
    for (auto i : at.vars) {
      const double v = s.grad[i].mag() * box[i].width();
      if (std::isinf(v)) ++infinite;
      total += std::isfinite(v) ? v : 0.0;
    }
    for (auto i : at.vars) {
      const double v = s.grad[i].mag() * box[i].width();
      if (infinite > 0)
        s.smear[i] += std::isinf(v) ? 1.0 / infinite : 0.0;
      else if (total > 0.0)
        s.smear[i] += v / total;
    }
  }

  // Variable to split, or -1 once every active width is below delta.
  // Only variables at least delta wide are candidates.
  int choose(const std::vector<Interval>& box, const Scratch& s) const {
    int best = -1;
    double best_score = -1.0;
    if (cfg_.branch_rule == BranchRule::Smear) {
      for (auto i : cf_.active_vars()) {
        if (!(box[i].width() >= cfg_.delta)) continue;
        if (s.smear[i] > best_score) {
          best_score = s.smear[i];
          best = static_cast<int>(i);
        }
      }
      if (best >= 0 && best_score > 0.0) return best;
    }
    best = -1;
    best_score = -1.0;
    for (auto i : cf_.active_vars()) {
      const double w = box[i].width();
      if (!(w >= cfg_.delta)) continue;
      const double score = w / root_widths_[i];
      if (score > best_score) {
        best_score = score;
        best = static_cast<int>(i);
      }
    }
    return best;
  }

  const CompiledFormula& cf_;
  const SolverConfig& cfg_;
  std::vector<Interval> root_;
  std::vector<double> root_widths_;
};

}  // namespace detail

// Interval branch-and-prune delta-decision procedure.
//
// Unsat means every box was refuted.  The midpoint of every unrefuted box is
// polled; a midpoint satisfying the formula exactly ends the search with Sat.
// A box whose active variables are all narrower than delta is recorded, and
// after full exploration the recorded box with the smallest branch path
// (depth-first, lower half first) is returned as DeltaSat.  Variables that do
// not occur in the formula are never split; they are reported at their
// midpoints.  Before branching, the root midpoint and then `probes` uniform
// random points of the root box (active variables only) are polled.
class Solver {
 public:
  Solver(Formula f, Box box, SolverConfig cfg) : formula_(std::move(f)), root_(std::move(box)), cfg_(cfg) {
    cfg_.validate();
    for (std::size_t i = 0; i < root_.size(); ++i)
      if (!std::isfinite(root_[i].lo) || !std::isfinite(root_[i].hi))
        throw std::invalid_argument("solve: box bounds must be finite");
  }

  void set_checkpoint(CheckpointOptions opts) { checkpoint_ = std::move(opts); }
  void set_progress(std::function<void(const SolveStats&, std::size_t frontier)> fn, std::uint64_t every) {
    progress_ = std::move(fn);
    progress_every_ = std::max<std::uint64_t>(every, 1);
  }

  std::uint64_t fingerprint() const { return fnv1a(export_smt2(formula_, root_, cfg_.delta)); }

  SolveResult run() {
    const auto t0 = std::chrono::steady_clock::now();
    const CompiledFormula cf(formula_, root_.size());
    const detail::BoxProcessor proc(cf, cfg_, root_.bounds());

    State st;
    st.delta_best.reset();
    const std::uint64_t fp = checkpoint_ ? fingerprint() : 0;
    bool resumed = false;
    if (checkpoint_ && checkpoint_->resume && std::filesystem::exists(checkpoint_->path)) {
      const Checkpoint c = load_checkpoint(checkpoint_->path);
      if (c.fingerprint != fp || c.variables != root_.vars().names())
        throw CheckpointError("checkpoint: " + checkpoint_->path.string() + " belongs to a different query");
      st.processed = c.boxes_processed;
      for (const auto& b : c.frontier) st.stack.push_back(item_from(b, cf));
      std::sort(st.stack.begin(), st.stack.end(),
                [](const auto& a, const auto& b) { return a.path > b.path; });
      for (const auto& b : c.delta_boxes) st.offer_delta(item_from(b, cf));
      st.delta_count = c.delta_boxes.size();
      resumed = true;
    }
    if (!resumed) {
      if (auto w = probe(cf)) {
        SolveResult r;
        r.stats = stats(st, t0);
        r.verdict.kind = Verdict::Kind::Sat;
        r.verdict.witness = std::move(*w);
        remove_checkpoint();
        return r;
      }
      st.stack.push_back({root_.bounds(), std::vector<Truth>(cf.atoms().size(), Truth::Unknown), ""});
    }
    st.inflight.resize(cfg_.workers);

    auto worker = [&](int id) {
      detail::Scratch scratch;
      detail::BoxItem item, lower, upper;
      while (true) {
        {
          std::unique_lock lk(st.m);
          st.cv.wait(lk, [&] { return st.stop || !st.stack.empty() || st.active == 0; });
          if (st.stop || st.stack.empty()) {
            st.cv.notify_all();
            return;
          }
          if (st.processed >= cfg_.max_boxes || out_of_time(t0)) {
            st.exhausted = true;
            st.stop = true;
            st.cv.notify_all();
            return;
          }
          item = std::move(st.stack.back());
          st.stack.pop_back();
          ++st.active;
          ++st.processed;
          if (checkpoint_) st.inflight[id] = item;
        }
        const auto outcome = proc.run(item, scratch, lower, upper);
        std::unique_lock lk(st.m);
        --st.active;
        st.inflight[id].reset();
        switch (outcome) {
          case detail::BoxProcessor::Outcome::Refuted:
            break;
          case detail::BoxProcessor::Outcome::Sat:
            if (!st.witness) st.witness = scratch.mid;
            st.stop = true;
            break;
          case detail::BoxProcessor::Outcome::Delta:
            ++st.delta_count;
            st.offer_delta(std::move(item));
            break;
          case detail::BoxProcessor::Outcome::Split:
            st.stack.push_back(std::move(upper));
            st.stack.push_back(std::move(lower));
            st.max_frontier = std::max(st.max_frontier, st.stack.size());
            break;
        }
        if (checkpoint_ && st.processed % checkpoint_->every == 0) save(st, fp);
        if (progress_ && st.processed % progress_every_ == 0) progress_(stats(st, t0), st.stack.size());
        st.cv.notify_all();
      }
    };

    if (cfg_.workers == 1) {
      worker(0);
    } else {
      std::vector<std::thread> threads;
      for (int i = 0; i < cfg_.workers; ++i) threads.emplace_back(worker, i);
      for (auto& t : threads) t.join();
    }

    SolveResult r;
    r.stats = stats(st, t0);
    if (st.witness) {
      r.verdict.kind = Verdict::Kind::Sat;
      r.verdict.witness = *st.witness;
      remove_checkpoint();
      return r;
    }
    if (st.exhausted) {
      if (checkpoint_) save(st, fp);
      throw BudgetExhausted("solver budget exhausted after " + std::to_string(st.processed) + " boxes with " +
                                std::to_string(st.stack.size()) + " pending",
                            r.stats, st.stack.size());
    }
    remove_checkpoint();
    if (st.delta_best) {
      r.verdict.kind = Verdict::Kind::DeltaSat;
      std::vector<Interval> b = st.delta_best->box;
      std::vector<char> active(b.size(), 0);
      for (auto i : cf.active_vars()) active[i] = 1;
      for (std::size_t i = 0; i < b.size(); ++i)
        if (!active[i]) b[i] = Interval(b[i].mid());
      r.verdict.box = Box(root_.var_table(), std::move(b));
      return r;
    }
    r.verdict.kind = Verdict::Kind::Unsat;
    return r;
  }

 private:
  struct State {
    std::mutex m;
    std::condition_variable cv;
    std::vector<detail::BoxItem> stack;
    std::vector<std::optional<detail::BoxItem>> inflight;
    std::optional<detail::BoxItem> delta_best;
    std::optional<Point> witness;
    std::uint64_t processed{0};
    std::uint64_t delta_count{0};
    std::size_t max_frontier{1};
    int active{0};
    bool stop{false};
    bool exhausted{false};

    void offer_delta(detail::BoxItem item) {
      if (!delta_best || item.path < delta_best->path) delta_best = std::move(item);
    }
  };

  std::optional<Point> probe(const CompiledFormula& cf) const {
    if (cfg_.probes == 0) return std::nullopt;
    Point p(root_.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = root_[i].mid();
    std::vector<double> scratch;
    std::mt19937_64 rng(cfg_.probe_seed);
    for (std::uint64_t k = 0; k < cfg_.probes; ++k) {
      if (k > 0)
        for (auto i : cf.active_vars())
          p[i] = std::clamp(std::uniform_real_distribution<double>(root_[i].lo, root_[i].hi)(rng), root_[i].lo,
                            root_[i].hi);
      if (cf.holds_at(p, scratch) && satisfies(formula_, p)) return p;
    }
    return std::nullopt;
  }

  bool out_of_time(std::chrono::steady_clock::time_point t0) const {
    if (cfg_.max_seconds <= 0.0) return false;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() > cfg_.max_seconds;
  }

  SolveStats stats(const State& st, std::chrono::steady_clock::time_point t0) const {
    SolveStats s;
    s.boxes = st.processed;
    s.delta_boxes = st.delta_count;
    s.max_frontier = st.max_frontier;
    s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    s.workers = cfg_.workers;
    return s;
  }

  static detail::BoxItem item_from(const CheckpointBox& b, const CompiledFormula& cf) {
    return {b.bounds, std::vector<Truth>(cf.atoms().size(), Truth::Unknown), b.path};
  }

  void save(const State& st, std::uint64_t fp) const {
    Checkpoint c;
    c.variables = root_.vars().names();
    c.fingerprint = fp;
    c.boxes_processed = st.processed;
    for (const auto& it : st.stack) c.frontier.push_back({it.path, it.box});
    for (const auto& it : st.inflight)
      if (it) c.frontier.push_back({it->path, it->box});
    if (st.delta_best) c.delta_boxes.push_back({st.delta_best->path, st.delta_best->box});
    save_checkpoint(c, checkpoint_->path);
  }

  void remove_checkpoint() const {
    if (checkpoint_) {
      std::error_code ec;
      std::filesystem::remove(checkpoint_->path, ec);
    }
  }

  Formula formula_;
  Box root_;
  SolverConfig cfg_;
  std::optional<CheckpointOptions> checkpoint_;
  std::function<void(const SolveStats&, std::size_t)> progress_;
  std::uint64_t progress_every_{1};
};

inline SolveResult solve(const Formula& f, const Box& box, const SolverConfig& cfg) {
  return Solver(f, box, cfg).run();
}

struct BisectResult {
  double mu_max{0.0};
  std::vector<std::pair<double, bool>> probes;  // (mu_max, all tasks Unsat)
  std::vector<std::string> warnings;
};

// Largest mu_max in [lo, hi], to within tol, for which every task built by
// `tasks` is Unsat.  Assumes verdicts are monotone in mu_max; contradicting
// probes are reported as warnings and the bracket is kept.
inline BisectResult bisect_mu_max(const std::function<std::vector<std::pair<Formula, Box>>(double)>& tasks,
                                  double lo, double hi, double tol, const SolverConfig& cfg) {
  if (!(lo <= hi)) throw std::invalid_argument("bisect_mu_max: lo must not exceed hi");
  if (!(tol > 0.0)) throw std::invalid_argument("bisect_mu_max: tol must be positive");
  BisectResult out;
  auto all_unsat = [&](double mu) {
    bool ok = true;
    for (const auto& [f, box] : tasks(mu)) {
      if (!solve(f, box, cfg).verdict.unsat()) {
        ok = false;
        break;
      }
    }
    for (const auto& [m, u] : out.probes) {
      if (m < mu && !u && ok)
        out.warnings.push_back("non-monotone: mu_max " + std::to_string(mu) + " proven but " + std::to_string(m) +
                               " was not");
      if (m > mu && u && !ok)
        out.warnings.push_back("non-monotone: mu_max " + std::to_string(m) + " proven but " + std::to_string(mu) +
                               " was not");
    }
    out.probes.emplace_back(mu, ok);
    return ok;
  };
  out.mu_max = lo;
  if (lo == hi) return out;
  if (!all_unsat(lo)) throw std::domain_error("bisect_mu_max: tasks are not Unsat at the lower bound");
  if (all_unsat(hi)) {
    out.mu_max = hi;
    return out;
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (all_unsat(mid))
      lo = mid;
    else
      hi = mid;
  }
  out.mu_max = lo;
  return out;
}

}  // namespace octo
