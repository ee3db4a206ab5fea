#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "octoverify/expr.hpp"
#include "octoverify/interval.hpp"

namespace octo {

// Straight-line program for a set of expressions.  Identical subterms are
// merged, so a node is evaluated once per pass however often it is shared.
// Operands always precede their users.
class Tape {
 public:
  struct Instr {
    Op op;
    std::uint32_t a{0};
    std::uint32_t b{0};
    double value{0.0};
    std::uint32_t var{0};
  };

  std::uint32_t add(const Expr& e) {
    if (auto it = by_node_.find(e.id()); it != by_node_.end()) return it->second;
    Instr in{e.op()};
    const int n = arity(e.op());
    if (e.op() == Op::Const) in.value = e.value();
    if (e.op() == Op::Var) in.var = static_cast<std::uint32_t>(e.var());
    if (n >= 1) in.a = add(e.lhs());
    if (n == 2) in.b = add(e.rhs());
    const auto key = std::make_tuple(static_cast<int>(in.op), in.a, in.b, std::bit_cast<std::uint64_t>(in.value),
                                     in.var);
    auto [it, inserted] = by_shape_.emplace(key, static_cast<std::uint32_t>(code_.size()));
    if (inserted) code_.push_back(in);
    by_node_.emplace(e.id(), it->second);
    return it->second;
  }

  // Drops the node-address memo once the source expressions may go away.
  void seal() { by_node_.clear(); }

  const std::vector<Instr>& code() const { return code_; }
  std::size_t size() const { return code_.size(); }

  // Indices of every node reachable from root, ascending.
  std::vector<std::uint32_t> cone(std::uint32_t root) const {
    std::vector<char> mark(code_.size(), 0);
    mark[root] = 1;
    for (std::size_t i = root + 1; i-- > 0;) {
      if (!mark[i]) continue;
      const int n = arity(code_[i].op);
      if (n >= 1) mark[code_[i].a] = 1;
      if (n == 2) mark[code_[i].b] = 1;
    }
    std::vector<std::uint32_t> out;
    for (std::uint32_t i = 0; i <= root; ++i)
      if (mark[i]) out.push_back(i);
    return out;
  }

  static Interval apply(const Instr& in, const std::vector<Interval>& v, const std::vector<Interval>& box) {
    switch (in.op) {
      case Op::Const:
        return Interval(in.value);
      case Op::Var:
        return box[in.var];
      case Op::Neg:
        return -v[in.a];
      case Op::Add:
        return v[in.a] + v[in.b];
      case Op::Sub:
        return v[in.a] - v[in.b];
      case Op::Mul:
        return v[in.a] * v[in.b];
      case Op::Div:
        return v[in.a] / v[in.b];
      case Op::Sin:
        return sin(v[in.a]);
      case Op::Cos:
        return cos(v[in.a]);
      case Op::Tan:
        return tan(v[in.a]);
    }
    return Interval::entire();
  }

  void forward(const std::vector<Interval>& box, std::vector<Interval>& v) const {
    v.resize(code_.size());
    for (std::size_t i = 0; i < code_.size(); ++i) v[i] = apply(code_[i], v, box);
  }

  void forward(const std::vector<Interval>& box, std::vector<Interval>& v,
               const std::vector<std::uint32_t>& cone) const {
    v.resize(code_.size());
    for (auto i : cone) v[i] = apply(code_[i], v, box);
  }

  // Point evaluation in the same operation order as eval_point.  Returns
  // false where eval_point would throw.
  bool forward_point(const Point& p, std::vector<double>& v) const {
    v.resize(code_.size());
    for (std::size_t i = 0; i < code_.size(); ++i) {
      const auto& in = code_[i];
      switch (in.op) {
        case Op::Const:
          v[i] = in.value;
          break;
        case Op::Var:
          v[i] = p[in.var];
          break;
        case Op::Neg:
          v[i] = -v[in.a];
          break;
        case Op::Add:
          v[i] = v[in.a] + v[in.b];
          break;
        case Op::Sub:
          v[i] = v[in.a] - v[in.b];
          break;
        case Op::Mul:
          v[i] = v[in.a] * v[in.b];
          break;
        case Op::Div:
          if (v[in.b] == 0.0) return false;
          v[i] = v[in.a] / v[in.b];
          break;
        case Op::Sin:
          v[i] = std::sin(v[in.a]);
          break;
        case Op::Cos:
          v[i] = std::cos(v[in.a]);
          break;
        case Op::Tan:
          if (std::fabs(std::cos(v[in.a])) < kTanPoleTolerance) return false;
          v[i] = std::tan(v[in.a]);
          break;
      }
    }
    return true;
  }

  // HC4 backward sweep over a cone after a forward pass, with the root
  // restricted to `target`.  Narrows `box`; false means no point of the box
  // meets the constraint.  Trigonometric nodes are not inverted.
  bool backward(const std::vector<std::uint32_t>& cone, Interval target, std::vector<Interval>& v,
                std::vector<Interval>& box) const {
    auto narrow = [](Interval& x, const Interval& y) {
      x = intersect(x, y);
      return !x.empty();
    };
    if (!narrow(v[cone.back()], target)) return false;
    for (auto it = cone.rbegin(); it != cone.rend(); ++it) {
      const auto& in = code_[*it];
      const Interval z = v[*it];
      switch (in.op) {
        case Op::Const:
          if (!z.contains(in.value)) return false;
          break;
        case Op::Var:
          if (!narrow(box[in.var], z)) return false;
          break;
        case Op::Neg:
          if (!narrow(v[in.a], -z)) return false;
          break;
        case Op::Add:
          if (!narrow(v[in.a], z - v[in.b]) || !narrow(v[in.b], z - v[in.a])) return false;
          break;
        case Op::Sub:
          if (!narrow(v[in.a], z + v[in.b]) || !narrow(v[in.b], v[in.a] - z)) return false;
          break;
        case Op::Mul:
          if (!narrow(v[in.a], z / v[in.b]) || !narrow(v[in.b], z / v[in.a])) return false;
          break;
        case Op::Div:
          if (!narrow(v[in.a], z * v[in.b]) || !narrow(v[in.b], v[in.a] / z)) return false;
          break;
        case Op::Sin:
        case Op::Cos:
        case Op::Tan:
          break;
      }
    }
    return true;
  }

  // Reverse-mode interval gradient of the cone's root with respect to every
  // variable, using node enclosures from a forward pass over the same box.
  void gradient(const std::vector<std::uint32_t>& cone, const std::vector<Interval>& v,
                std::vector<Interval>& adj, std::vector<Interval>& grad) const {
    adj.resize(code_.size());
    for (auto i : cone) adj[i] = Interval(0.0);
    std::fill(grad.begin(), grad.end(), Interval(0.0));
    adj[cone.back()] = Interval(1.0);
    auto acc = [](Interval& x, const Interval& y) { x = x == Interval(0.0) ? y : x + y; };
    for (auto it = cone.rbegin(); it != cone.rend(); ++it) {
      const auto& in = code_[*it];
      const Interval g = adj[*it];
      if (g == Interval(0.0)) continue;
      switch (in.op) {
        case Op::Const:
          break;
        case Op::Var:
          acc(grad[in.var], g);
          break;
        case Op::Neg:
          acc(adj[in.a], -g);
          break;
        case Op::Add:
          acc(adj[in.a], g);
          acc(adj[in.b], g);
          break;
        case Op::Sub:
          acc(adj[in.a], g);
          acc(adj[in.b], -g);
          break;
        case Op::Mul:
          acc(adj[in.a], g * v[in.b]);
          acc(adj[in.b], g * v[in.a]);
          break;
        case Op::Div:
          acc(adj[in.a], g / v[in.b]);
          acc(adj[in.b], -(g * v[*it]) / v[in.b]);
          break;
        case Op::Sin:
          acc(adj[in.a], g * cos(v[in.a]));
          break;
        case Op::Cos:
          acc(adj[in.a], -(g * sin(v[in.a])));
          break;
        case Op::Tan: {
          const Interval t = v[*it];
          const Interval t2 = t.contains_zero() ? Interval(0.0, t.mag()) * Interval(0.0, t.mag()) : t * t;
          acc(adj[in.a], g * (Interval(1.0) + t2));
          break;
        }
      }
    }
  }

 private:
  std::vector<Instr> code_;
  std::unordered_map<const Expr::Node*, std::uint32_t> by_node_;
  std::map<std::tuple<int, std::uint32_t, std::uint32_t, std::uint64_t, std::uint32_t>, std::uint32_t> by_shape_;
};

}  // namespace octo
