#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "octoverify/errors.hpp"
#include "octoverify/model.hpp"

namespace octo {

inline constexpr int kRotorCount = 8;

// Rotors stuck at known thrusts, keyed by 1-based rotor index.
struct FailureScenario {
  std::map<int, double> stuck;

  std::set<int> failed() const {
    std::set<int> w;
    for (const auto& [j, v] : stuck) w.insert(j);
    return w;
  }
  bool is_failed(int rotor) const { return stuck.contains(rotor); }

  void validate(const OctorotorParams& p) const {
    for (const auto& [j, v] : stuck) {
      if (j < 1 || j > kRotorCount)
        throw ConfigError("failure: rotor index " + std::to_string(j) + " outside 1..8");
      if (!(v >= p.f_min && v <= p.f_max))
        throw ConfigError("failure: stuck thrust of rotor " + std::to_string(j) +
                          " outside [f_min, f_max]");
    }
  }

  // "1,2" and "0,1.4715" style fragments used in task names.
  std::string rotor_list() const {
    std::string out;
    for (const auto& [j, v] : stuck) out += (out.empty() ? "" : ",") + std::to_string(j);
    return out;
  }
  std::string thrust_list() const {
    std::string out;
    char buf[32];
    for (const auto& [j, v] : stuck) {
      std::snprintf(buf, sizeof buf, "%.6g", v);
      out += (out.empty() ? "" : ",") + std::string(buf);
    }
    return out;
  }

  friend bool operator==(const FailureScenario&, const FailureScenario&) = default;
};

// Parses comma-separated `index:thrust` pairs, e.g. "1:0,8:1.4715".
inline FailureScenario parse_scenario(std::string_view text) {
  FailureScenario s;
  auto trim = [](std::string_view v) {
    while (!v.empty() && v.front() == ' ') v.remove_prefix(1);
    while (!v.empty() && v.back() == ' ') v.remove_suffix(1);
    return v;
  };
  while (!text.empty()) {
    const auto comma = text.find(',');
    const std::string_view item = trim(text.substr(0, comma));
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string_view::npos)
      throw ConfigError("failure: expected index:thrust, got '" + std::string(item) + "'");
    int index = 0;
    const auto idx = trim(item.substr(0, colon));
    if (std::from_chars(idx.data(), idx.data() + idx.size(), index).ec != std::errc{})
      throw ConfigError("failure: bad rotor index '" + std::string(idx) + "'");
    const std::string value(trim(item.substr(colon + 1)));
    std::size_t used = 0;
    double thrust = 0.0;
    try {
      thrust = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != value.size())
      throw ConfigError("failure: bad thrust '" + value + "'");
    if (!s.stuck.emplace(index, thrust).second)
      throw ConfigError("failure: rotor " + std::to_string(index) + " listed twice");
  }
  return s;
}

// Copy of Lambda with the columns of failed rotors zeroed.
inline MixingMatrix masked_matrix(const MixingMatrix& lambda, const std::set<int>& failed) {
  MixingMatrix out = lambda;
  for (int j : failed) {
    if (j < 1 || j > kRotorCount) throw std::out_of_range("masked_matrix: rotor index out of range");
    out.col(j - 1).setZero();
  }
  return out;
}

// Rank test on the 4x4 Gram matrix: smallest eigenvalue above 1e-9 ||Lambda_W||_F^2.
inline bool is_rank_four(const MixingMatrix& lambda_w) {
  const Eigen::Matrix4d gram = lambda_w * lambda_w.transpose();
  const double tol = 1e-9 * lambda_w.squaredNorm();
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(gram, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() > tol;
}

// Right inverse Lambda_W^T (Lambda_W Lambda_W^T)^-1 via a pivoted 4x4 solve.
inline AllocationMatrix pseudo_inverse(const MixingMatrix& lambda_w) {
  if (!is_rank_four(lambda_w)) throw RankError("pseudo_inverse: masked mixing matrix is not of rank 4");
  const Eigen::Matrix4d gram = lambda_w * lambda_w.transpose();
  const Eigen::Matrix<double, 4, 8> x = gram.partialPivLu().solve(lambda_w);
  return x.transpose();
}

inline double mid_value(double a, double b, double c) {
  return std::max(std::min(a, b), std::min(std::max(a, b), c));
}

struct AllocationResult {
  RotorThrusts f_tilde;
  RotorThrusts f_all;
  ControlInput u_achieved;
  bool exact{false};
};

// Pseudo-inverse allocator for a fixed failure scenario; the pseudo-inverse is
// computed once and reused.
class Allocator {
 public:
  Allocator(const FailureScenario& scenario, const OctorotorParams& params)
      : scenario_(scenario), params_(params), lambda_(mixing_matrix(params)) {
    scenario_.validate(params_);
    pinv_ = pseudo_inverse(masked_matrix(lambda_, scenario_.failed()));
    f_bar_.setZero();
    for (const auto& [j, v] : scenario_.stuck) f_bar_[j - 1] = v;
    offset_ = f_bar_ - pinv_ * (lambda_ * f_bar_);
  }

  const AllocationMatrix& pinv() const { return pinv_; }
  const MixingMatrix& lambda() const { return lambda_; }
  // f_tilde = offset + pinv * u_d
  const RotorThrusts& offset() const { return offset_; }
  const FailureScenario& scenario() const { return scenario_; }

  AllocationResult operator()(const ControlInput& u_d) const {
    AllocationResult r;
    r.f_tilde = f_bar_ + pinv_ * (u_d.as_vector() - lambda_ * f_bar_);
    r.exact = true;
    for (int j = 0; j < kRotorCount; ++j) {
      if (scenario_.is_failed(j + 1)) {
        r.f_tilde[j] = f_bar_[j];
        r.f_all[j] = f_bar_[j];
        continue;
      }
      const double fj = r.f_tilde[j];
      if (!(fj >= params_.f_min && fj <= params_.f_max)) r.exact = false;
      r.f_all[j] = mid_value(params_.f_min, fj, params_.f_max);
    }
    // Within bounds the allocation realizes u_d exactly; skip the rounding of Lambda * f.
    r.u_achieved = r.exact ? u_d : ControlInput::from_vector(lambda_ * r.f_all);
    return r;
  }

 private:
  FailureScenario scenario_;
  OctorotorParams params_;
  MixingMatrix lambda_;
  AllocationMatrix pinv_;
  RotorThrusts f_bar_;
  RotorThrusts offset_;
};

inline AllocationResult allocate(const ControlInput& u_d, const FailureScenario& scenario,
                                 const OctorotorParams& params) {
  return Allocator(scenario, params)(u_d);
}

}  // namespace octo
