#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "octoverify/interval.hpp"

namespace octo {

class EvalError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Ordered list of variable names.  Expressions refer to variables by their
// position in a table; boxes and points are indexed the same way.
class VarTable {
 public:
  VarTable() = default;
  VarTable(std::initializer_list<std::string> names) {
    for (const auto& n : names) add(n);
  }

  std::size_t add(std::string name) {
    if (index_of(name)) throw std::invalid_argument("duplicate variable " + name);
    names_.push_back(std::move(name));
    return names_.size() - 1;
  }

  std::optional<std::size_t> index_of(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == name) return i;
    return std::nullopt;
  }

  std::size_t at(std::string_view name) const {
    auto i = index_of(name);
    if (!i) throw std::out_of_range("unknown variable " + std::string(name));
    return *i;
  }

  std::size_t size() const { return names_.size(); }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  const std::vector<std::string>& names() const { return names_; }

  friend bool operator==(const VarTable&, const VarTable&) = default;

 private:
  std::vector<std::string> names_;
};

using Point = std::vector<double>;

// Named variable -> interval, in table order.
class Box {
 public:
  Box() = default;
  Box(std::shared_ptr<const VarTable> vars, std::vector<Interval> bounds)
      : vars_(std::move(vars)), bounds_(std::move(bounds)) {
    if (!vars_ || bounds_.size() != vars_->size())
      throw std::invalid_argument("box does not match its variable table");
    for (const auto& b : bounds_)
      if (b.empty()) throw std::invalid_argument("box has an empty interval");
  }

  const VarTable& vars() const { return *vars_; }
  const std::shared_ptr<const VarTable>& var_table() const { return vars_; }
  std::size_t size() const { return bounds_.size(); }

  const Interval& operator[](std::size_t i) const { return bounds_[i]; }
  Interval& operator[](std::size_t i) { return bounds_[i]; }
  const Interval& operator[](std::string_view n) const { return bounds_[vars_->at(n)]; }
  Interval& operator[](std::string_view n) { return bounds_[vars_->at(n)]; }

  const std::vector<Interval>& bounds() const { return bounds_; }

  Point midpoint() const {
    Point p(bounds_.size());
    for (std::size_t i = 0; i < bounds_.size(); ++i) p[i] = bounds_[i].mid();
    return p;
  }

  double max_width() const {
    double w = 0.0;
    for (const auto& b : bounds_) w = std::max(w, b.width());
    return w;
  }

 private:
  std::shared_ptr<const VarTable> vars_;
  std::vector<Interval> bounds_;
};

enum class Op : unsigned char { Const, Var, Neg, Add, Sub, Mul, Div, Sin, Cos, Tan };

inline int arity(Op op) {
  switch (op) {
    case Op::Const:
    case Op::Var:
      return 0;
    case Op::Neg:
    case Op::Sin:
    case Op::Cos:
    case Op::Tan:
      return 1;
    default:
      return 2;
  }
}

// Immutable expression tree with shared subterms.
class Expr {
 public:
  struct Node {
    Op op;
    double value{0.0};       // Const
    std::size_t var{0};      // Var
    std::shared_ptr<const Node> a, b;
  };

  Expr() : Expr(0.0) {}
  Expr(double c)  // NOLINT: constants convert implicitly
      : node_(std::make_shared<Node>(Node{Op::Const, c, 0, nullptr, nullptr})) {}

  static Expr constant(double c) { return Expr(c); }
  static Expr variable(std::size_t index) {
    return Expr(std::make_shared<Node>(Node{Op::Var, 0.0, index, nullptr, nullptr}));
  }
  static Expr variable(const VarTable& t, std::string_view name) {
    return variable(t.at(name));
  }

  Op op() const { return node_->op; }
  double value() const { return node_->value; }
  std::size_t var() const { return node_->var; }
  Expr lhs() const { return Expr(node_->a); }
  Expr rhs() const { return Expr(node_->b); }
  const Node* id() const { return node_.get(); }

  bool is_constant() const { return node_->op == Op::Const; }
  bool is_constant(double c) const { return is_constant() && node_->value == c; }

  friend Expr operator-(const Expr& x) {
    if (x.is_constant()) return Expr(-x.value());
    return unary(Op::Neg, x);
  }
  friend Expr operator+(const Expr& x, const Expr& y) {
    if (x.is_constant(0.0)) return y;
    if (y.is_constant(0.0)) return x;
    return binary(Op::Add, x, y);
  }
  friend Expr operator-(const Expr& x, const Expr& y) {
    if (y.is_constant(0.0)) return x;
    return binary(Op::Sub, x, y);
  }
  friend Expr operator*(const Expr& x, const Expr& y) {
    if (x.is_constant(1.0)) return y;
    if (y.is_constant(1.0)) return x;
    return binary(Op::Mul, x, y);
  }
  friend Expr operator/(const Expr& x, const Expr& y) {
    if (y.is_constant(1.0)) return x;
    return binary(Op::Div, x, y);
  }
  friend Expr sin(const Expr& x) { return unary(Op::Sin, x); }
  friend Expr cos(const Expr& x) { return unary(Op::Cos, x); }
  friend Expr tan(const Expr& x) { return unary(Op::Tan, x); }

  Expr& operator+=(const Expr& y) { return *this = *this + y; }
  Expr& operator-=(const Expr& y) { return *this = *this - y; }

 private:
  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  static Expr unary(Op op, const Expr& x) {
    return Expr(std::make_shared<Node>(Node{op, 0.0, 0, x.node_, nullptr}));
  }
  static Expr binary(Op op, const Expr& x, const Expr& y) {
    return Expr(std::make_shared<Node>(Node{op, 0.0, 0, x.node_, y.node_}));
  }

  std::shared_ptr<const Node> node_;
};

// Threshold below which |cos x| is treated as a pole of tan.
inline constexpr double kTanPoleTolerance = 1e-12;

inline double eval_point(const Expr& e, const Point& p) {
  switch (e.op()) {
    case Op::Const:
      return e.value();
    case Op::Var:
      if (e.var() >= p.size()) throw EvalError("unbound variable");
      return p[e.var()];
    case Op::Neg:
      return -eval_point(e.lhs(), p);
    case Op::Add:
      return eval_point(e.lhs(), p) + eval_point(e.rhs(), p);
    case Op::Sub:
      return eval_point(e.lhs(), p) - eval_point(e.rhs(), p);
    case Op::Mul:
      return eval_point(e.lhs(), p) * eval_point(e.rhs(), p);
    case Op::Div: {
      const double den = eval_point(e.rhs(), p);
      if (den == 0.0) throw EvalError("division by zero");
      return eval_point(e.lhs(), p) / den;
    }
    case Op::Sin:
      return std::sin(eval_point(e.lhs(), p));
    case Op::Cos:
      return std::cos(eval_point(e.lhs(), p));
    case Op::Tan: {
      const double x = eval_point(e.lhs(), p);
      if (std::fabs(std::cos(x)) < kTanPoleTolerance) throw EvalError("tan at a pole");
      return std::tan(x);
    }
  }
  throw EvalError("bad expression node");
}

// Natural interval extension.  Encloses the true range over the box.
inline Interval eval_interval(const Expr& e, const std::vector<Interval>& box) {
  switch (e.op()) {
    case Op::Const:
      return Interval(e.value());
    case Op::Var:
      return box.at(e.var());
    case Op::Neg:
      return -eval_interval(e.lhs(), box);
    case Op::Add:
      return eval_interval(e.lhs(), box) + eval_interval(e.rhs(), box);
    case Op::Sub:
      return eval_interval(e.lhs(), box) - eval_interval(e.rhs(), box);
    case Op::Mul:
      return eval_interval(e.lhs(), box) * eval_interval(e.rhs(), box);
    case Op::Div:
      return eval_interval(e.lhs(), box) / eval_interval(e.rhs(), box);
    case Op::Sin:
      return sin(eval_interval(e.lhs(), box));
    case Op::Cos:
      return cos(eval_interval(e.lhs(), box));
    case Op::Tan:
      return tan(eval_interval(e.lhs(), box));
  }
  return Interval::entire();
}

inline Interval eval_interval(const Expr& e, const Box& box) {
  return eval_interval(e, box.bounds());
}

// Every variable index referenced by e, sorted and unique.
inline std::vector<std::size_t> variables_of(const Expr& e) {
  std::vector<std::size_t> out;
  std::vector<const Expr::Node*> seen;
  std::vector<Expr> stack{e};
  while (!stack.empty()) {
    Expr x = stack.back();
    stack.pop_back();
    if (std::find(seen.begin(), seen.end(), x.id()) != seen.end()) continue;
    seen.push_back(x.id());
    if (x.op() == Op::Var) out.push_back(x.var());
    if (arity(x.op()) >= 1) stack.push_back(x.lhs());
    if (arity(x.op()) == 2) stack.push_back(x.rhs());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

enum class Relation : unsigned char { Less, Greater };

enum class Truth : unsigned char { CertainlyFalse, Unknown, CertainlyTrue };

// Boolean combination of strict atoms `expr < bound` / `expr > bound`.
class Formula {
 public:
  enum class Kind : unsigned char { Atom, And, Or };

  struct AtomData {
    Expr expr;
    Relation rel;
    double bound;
  };

  static Formula atom(Expr e, Relation rel, double bound = 0.0) {
    Formula f(Kind::Atom);
    f.atom_ = std::make_shared<const AtomData>(AtomData{std::move(e), rel, bound});
    return f;
  }
  static Formula greater(Expr e, double bound) {
    return atom(std::move(e), Relation::Greater, bound);
  }
  static Formula less(Expr e, double bound) {
    return atom(std::move(e), Relation::Less, bound);
  }
  static Formula conjunction(std::vector<Formula> parts) {
    Formula f(Kind::And);
    f.children_ = std::move(parts);
    return f;
  }
  static Formula disjunction(std::vector<Formula> parts) {
    Formula f(Kind::Or);
    f.children_ = std::move(parts);
    return f;
  }

  Kind kind() const { return kind_; }
  const AtomData& atom_data() const { return *atom_; }
  const std::vector<Formula>& children() const { return children_; }

  // Visits every atom, left to right.
  template <typename F>
  void for_each_atom(F&& fn) const {
    if (kind_ == Kind::Atom) {
      fn(*atom_);
      return;
    }
    for (const auto& c : children_) c.for_each_atom(fn);
  }

  std::size_t atom_count() const {
    std::size_t n = 0;
    for_each_atom([&](const AtomData&) { ++n; });
    return n;
  }

 private:
  explicit Formula(Kind k) : kind_(k) {}
  Kind kind_;
  std::shared_ptr<const AtomData> atom_;
  std::vector<Formula> children_;
};

inline bool atom_holds(Relation rel, double value, double bound) {
  return rel == Relation::Greater ? value > bound : value < bound;
}

inline Truth atom_truth(Relation rel, const Interval& range, double bound) {
  if (range.empty()) return Truth::CertainlyFalse;
  if (rel == Relation::Greater) {
    if (range.lo > bound) return Truth::CertainlyTrue;
    if (range.hi <= bound) return Truth::CertainlyFalse;
  } else {
    if (range.hi < bound) return Truth::CertainlyTrue;
    if (range.lo >= bound) return Truth::CertainlyFalse;
  }
  return Truth::Unknown;
}

// Exact evaluation; errors from the expressions propagate.
inline bool eval_point(const Formula& f, const Point& p) {
  switch (f.kind()) {
    case Formula::Kind::Atom: {
      const auto& a = f.atom_data();
      return atom_holds(a.rel, eval_point(a.expr, p), a.bound);
    }
    case Formula::Kind::And:
      for (const auto& c : f.children())
        if (!eval_point(c, p)) return false;
      return true;
    case Formula::Kind::Or:
      for (const auto& c : f.children())
        if (eval_point(c, p)) return true;
      return false;
  }
  return false;
}

// Like eval_point, but a point where some expression is undefined counts
// as not satisfying the formula.
inline bool satisfies(const Formula& f, const Point& p) {
  try {
    return eval_point(f, p);
  } catch (const EvalError&) {
    return false;
  }
}

inline Truth eval_formula(const Formula& f, const std::vector<Interval>& box) {
  switch (f.kind()) {
    case Formula::Kind::Atom: {
      const auto& a = f.atom_data();
      return atom_truth(a.rel, eval_interval(a.expr, box), a.bound);
    }
    case Formula::Kind::And: {
      Truth t = Truth::CertainlyTrue;
      for (const auto& c : f.children()) {
        Truth ct = eval_formula(c, box);
        if (ct == Truth::CertainlyFalse) return ct;
        if (ct == Truth::Unknown) t = Truth::Unknown;
      }
      return t;
    }
    case Formula::Kind::Or: {
      Truth t = Truth::CertainlyFalse;
      for (const auto& c : f.children()) {
        Truth ct = eval_formula(c, box);
        if (ct == Truth::CertainlyTrue) return ct;
        if (ct == Truth::Unknown) t = Truth::Unknown;
      }
      return t;
    }
  }
  return Truth::Unknown;
}

inline Truth eval_formula(const Formula& f, const Box& box) {
  return eval_formula(f, box.bounds());
}

}  // namespace octo
