#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "octoverify/expr.hpp"

namespace octo {

// Plain decimal with 17 significant digits and no exponent; negative values
// use the SMT-LIB unary minus.
inline std::string smt2_number(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("smt2_number: value is not finite");
  if (x == 0.0) return "0.0";
  if (x < 0.0) return "(- " + smt2_number(-x) + ")";
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.16e", x);
  const std::string_view s(buf);
  const auto e = s.find('e');
  std::string digits;
  for (char ch : s.substr(0, e))
    if (ch != '.') digits += ch;
  while (digits.size() > 1 && digits.back() == '0') digits.pop_back();
  const int point = std::atoi(buf + e + 1) + 1;
  const int n = static_cast<int>(digits.size());
  if (point <= 0) return "0." + std::string(-point, '0') + digits;
  if (point >= n) return digits + std::string(point - n, '0') + ".0";
  return digits.substr(0, point) + "." + digits.substr(point);
}

inline std::string smt2_symbol(std::string_view name) {
  auto simple = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || std::string_view("~!@$%^&*_-+=<>.?/").find(c) !=
                                                               std::string_view::npos;
  };
  const bool ok = !name.empty() && !std::isdigit(static_cast<unsigned char>(name.front())) &&
                  std::all_of(name.begin(), name.end(), simple);
  return ok ? std::string(name) : "|" + std::string(name) + "|";
}

namespace detail {

inline void write_expr(std::ostream& os, const Expr& e, const VarTable& vars) {
  auto bin = [&](const char* op) {
    os << '(' << op << ' ';
    write_expr(os, e.lhs(), vars);
    os << ' ';
    write_expr(os, e.rhs(), vars);
    os << ')';
  };
  auto un = [&](const char* op) {
    os << '(' << op << ' ';
    write_expr(os, e.lhs(), vars);
    os << ')';
  };
  switch (e.op()) {
    case Op::Const:
      os << smt2_number(e.value());
      return;
    case Op::Var:
      os << smt2_symbol(vars.name(e.var()));
      return;
    case Op::Neg:
      return un("-");
    case Op::Add:
      return bin("+");
    case Op::Sub:
      return bin("-");
    case Op::Mul:
      return bin("*");
    case Op::Div:
      return bin("/");
    case Op::Sin:
      return un("sin");
    case Op::Cos:
      return un("cos");
    case Op::Tan:
      return un("tan");
  }
}

inline void write_formula(std::ostream& os, const Formula& f, const VarTable& vars) {
  switch (f.kind()) {
    case Formula::Kind::Atom: {
      const auto& a = f.atom_data();
      os << (a.rel == Relation::Greater ? "(> " : "(< ");
      write_expr(os, a.expr, vars);
      os << ' ' << smt2_number(a.bound) << ')';
      return;
    }
    case Formula::Kind::And:
    case Formula::Kind::Or: {
      const bool conj = f.kind() == Formula::Kind::And;
      if (f.children().empty()) {
        os << (conj ? "true" : "false");
        return;
      }
      os << (conj ? "(and" : "(or");
      for (const auto& c : f.children()) {
        os << "\n  ";
        write_formula(os, c, vars);
      }
      os << ')';
      return;
    }
  }
}

}  // namespace detail

// Self-contained QF_NRA script asserting the box bounds and the formula.
// Variables are declared in name order; output depends only on the inputs.
inline std::string export_smt2(const Formula& f, const Box& box, double delta) {
  const VarTable& vars = box.vars();
  std::vector<std::size_t> order(vars.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return vars.name(a) < vars.name(b); });

  std::ostringstream os;
  os << "(set-logic QF_NRA)\n";
  os << "(set-info :precision " << smt2_number(delta) << ")\n";
  for (auto i : order) os << "(declare-fun " << smt2_symbol(vars.name(i)) << " () Real)\n";
  for (auto i : order) {
    const auto name = smt2_symbol(vars.name(i));
    if (std::isfinite(box[i].lo)) os << "(assert (<= " << smt2_number(box[i].lo) << ' ' << name << "))\n";
    if (std::isfinite(box[i].hi)) os << "(assert (<= " << name << ' ' << smt2_number(box[i].hi) << "))\n";
  }
  os << "(assert ";
  detail::write_formula(os, f, vars);
  os << ")\n(check-sat)\n(exit)\n";
  return os.str();
}

// 64-bit FNV-1a, used to tie checkpoint files to the exact query.
inline std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace octo
