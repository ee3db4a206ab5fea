#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "octoverify/control.hpp"
#include "octoverify/errors.hpp"
#include "octoverify/model.hpp"

namespace octo {

// Commanded channels, paired with the first four state components.
enum CommandIndex : int { kVzD = 0, kPhiD, kThetaD, kPsiD };
inline constexpr int kCommandDim = 4;

inline std::array<double, kCommandDim> command_array(const Command& c) {
  return {c.v_z_d, c.phi_d, c.theta_d, c.psi_d};
}

struct BarrierParams {
  double D_vz{0.25};
  double D_vzd{1.0};
  double D_phi{0.05};
  double D_phid{0.15};
  double D_theta{0.05};
  double D_thetad{0.15};
  double D_psi{0.05};
  double D_psid{1e-8};
  double D_O1{0.09};
  double D_O2{0.09};
  double D_O3{0.09};
  double p_phi1{0.7};
  double p_theta1{0.7};
  double p_psi1{0.7};
  double delta_phi1{0.017};
  double delta_theta1{0.017};
  double delta_psi1{0.017};
  double mu_max{2.0};
  double epsilon{1e-8};

  void validate() const {
    auto require = [](bool ok, const std::string& what) {
      if (!ok) throw ConfigError("barrier: " + what);
    };
    for (double D : {D_vz, D_vzd, D_phi, D_phid, D_theta, D_thetad, D_psi, D_psid, D_O1, D_O2, D_O3})
      require(D > 0.0, "all half-widths D_* must be positive");
    require(p_phi1 >= 0.0 && p_theta1 >= 0.0 && p_psi1 >= 0.0, "p_* must be non-negative");
    require(delta_phi1 >= 0.0 && delta_phi1 < D_phi, "0 <= delta_phi1 < D_phi");
    require(delta_theta1 >= 0.0 && delta_theta1 < D_theta, "0 <= delta_theta1 < D_theta");
    require(delta_psi1 >= 0.0 && delta_psi1 < D_psi, "0 <= delta_psi1 < D_psi");
    require(mu_max >= 1.0, "mu_max >= 1");
    require(epsilon > 0.0, "epsilon > 0");
  }

  friend bool operator==(const BarrierParams&, const BarrierParams&) = default;
};

// One barrier component in expanded affine form:
//   h(s, cmd, mu) = (state_coeffs . s + command_coeffs . cmd) / denominator + mu.
struct AffineBarrier {
  std::string id;      // e.g. "phi,1,+"
  std::string family;  // "vz", "phi", "Omega1", ...
  std::array<double, kStateDim> state_coeffs{};
  std::array<double, kCommandDim> command_coeffs{};
  double denominator{1.0};
  int depth{0};

  // The single command channel this component depends on, if any.
  std::optional<std::pair<int, double>> command() const {
    std::optional<std::pair<int, double>> out;
    for (int i = 0; i < kCommandDim; ++i) {
      if (command_coeffs[i] == 0.0) continue;
      if (out) throw std::logic_error("barrier " + id + " depends on several commands");
      out = std::pair{i, command_coeffs[i]};
    }
    return out;
  }

  // Normalized numerator (state_coeffs . s + command_coeffs . cmd) / denominator.
  double normalized(const InnerState& s, const Command& cmd) const {
    const auto x = s.as_array();
    const auto c = command_array(cmd);
    double num = 0.0;
    for (int i = 0; i < kStateDim; ++i) num += state_coeffs[i] * x[i];
    for (int i = 0; i < kCommandDim; ++i) num += command_coeffs[i] * c[i];
    return num / denominator;
  }
};

// Exponential barrier sequence of depth p_list.size() for P (x - x_d) + D >= 0.
inline std::vector<AffineBarrier> build_sequence(const std::string& family, const std::string& sign,
                                                 const Eigen::Matrix<double, 1, kStateDim>& P,
                                                 double D, std::span<const double> p_list,
                                                 std::span<const double> delta_list,
                                                 const Eigen::Matrix<double, kStateDim, kStateDim>& A) {
  if (p_list.size() != delta_list.size())
    throw std::invalid_argument("build_sequence: p and delta lists differ in length");
  double margin = 0.0;
  for (double d : delta_list) margin += d;
  if (!(margin < D)) throw ConfigError("build_sequence: sum of shrink margins must stay below D");

  std::vector<AffineBarrier> out;
  Eigen::Matrix<double, 1, kStateDim> row = P;
  double denominator = D;
  const auto I = Eigen::Matrix<double, kStateDim, kStateDim>::Identity();
  for (std::size_t j = 0; j <= p_list.size(); ++j) {
    if (j > 0) {
      row = row * (I + p_list[j - 1] * A);
      denominator -= delta_list[j - 1];
    }
    AffineBarrier b;
    b.family = family;
    b.depth = static_cast<int>(j);
    b.id = family + "," + std::to_string(j) + "," + sign;
    b.denominator = denominator;
    for (int i = 0; i < kStateDim; ++i) b.state_coeffs[i] = row(i);
    // x_d = (v_z_d, phi_d, theta_d, psi_d, 0, 0, 0)
    for (int i = 0; i < kCommandDim; ++i) b.command_coeffs[i] = row(i) == 0.0 ? 0.0 : -row(i);
    out.push_back(std::move(b));
  }
  return out;
}

// All twenty signed components: v_z (2), then per attitude axis the depth-0 and
// depth-1 angle components and the rate bound (6 each).
inline std::vector<AffineBarrier> octorotor_barriers(const BarrierParams& bp, const Gains& gains,
                                                     const OctorotorParams& params) {
  bp.validate();
  const auto A = closed_loop_linear_a(params, gains).full();
  std::vector<AffineBarrier> out;
  // Components come out ordered by depth, "+" before "-" at each depth.
  auto add = [&](const std::string& family, int index, double D, std::span<const double> p,
                 std::span<const double> delta) {
    std::array<std::vector<AffineBarrier>, 2> signed_seq;
    for (int k = 0; k < 2; ++k) {
      Eigen::Matrix<double, 1, kStateDim> P = Eigen::Matrix<double, 1, kStateDim>::Zero();
      P(index) = k == 0 ? 1.0 : -1.0;
      signed_seq[k] = build_sequence(family, k == 0 ? "+" : "-", P, D, p, delta, A);
    }
    for (std::size_t j = 0; j < signed_seq[0].size(); ++j) {
      out.push_back(signed_seq[0][j]);
      out.push_back(signed_seq[1][j]);
    }
  };
  auto add_axis = [&](const std::string& angle, int angle_index, double D, double p, double delta,
                      const std::string& rate, int rate_index, double D_rate) {
    const double ps[] = {p};
    const double ds[] = {delta};
    add(angle, angle_index, D, ps, ds);
    add(rate, rate_index, D_rate, {}, {});
  };
  add("vz", kVz, bp.D_vz, {}, {});
  add_axis("phi", kPhi, bp.D_phi, bp.p_phi1, bp.delta_phi1, "Omega1", kOmega1, bp.D_O1);
  add_axis("theta", kTheta, bp.D_theta, bp.p_theta1, bp.delta_theta1, "Omega2", kOmega2, bp.D_O2);
  add_axis("psi", kPsi, bp.D_psi, bp.p_psi1, bp.delta_psi1, "Omega3", kOmega3, bp.D_O3);
  return out;
}

inline double eval_barrier(const AffineBarrier& b, const InnerState& s, const Command& cmd, double mu) {
  return b.normalized(s, cmd) + mu;
}

inline bool membership(const InnerState& s, const Command& cmd, double mu,
                       std::span<const AffineBarrier> comps) {
  return std::all_of(comps.begin(), comps.end(),
                     [&](const AffineBarrier& b) { return eval_barrier(b, s, cmd, mu) >= 0.0; });
}

// Least mu >= 0 with s in I(mu).
inline double mu_level(const InnerState& s, const Command& cmd, std::span<const AffineBarrier> comps) {
  double level = 0.0;
  for (const auto& b : comps) level = std::max(level, -b.normalized(s, cmd));
  return level;
}

// Time derivative of b along the closed loop with u = u_d; commands are constant.
inline double barrier_dot(const AffineBarrier& b, const InnerState& s, const Command& cmd,
                          const Disturbance& dist, const Gains& gains, const OctorotorParams& params) {
  const auto xdot = inner_dynamics(s, block_k(s, cmd, gains, params), dist, params);
  double out = 0.0;
  for (int i = 0; i < kStateDim; ++i)
    if (b.state_coeffs[i] != 0.0) out += b.state_coeffs[i] / b.denominator * xdot[i];
  return out;
}

}  // namespace octo
