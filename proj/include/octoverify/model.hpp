#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "octoverify/errors.hpp"
#include "octoverify/gains.hpp"

namespace octo {

// Inner-loop state order used by every vector, matrix and box in the library.
enum StateIndex : int { kVz = 0, kPhi, kTheta, kPsi, kOmega1, kOmega2, kOmega3 };
inline constexpr int kStateDim = 7;

using StateVector = std::array<double, kStateDim>;
using MixingMatrix = Eigen::Matrix<double, 4, 8>;
using AllocationMatrix = Eigen::Matrix<double, 8, 4>;

struct OctorotorParams {
  double m{1.2};
  double g{9.81};
  double J1{7.5e-3};
  double J2{7.5e-3};
  double J3{1.3e-2};
  double d{0.4};
  double c{0.075 / 3.13};
  double gamma{std::numbers::pi / 8.0};
  double f_min{0.0};
  double f_max{0.5 * 1.2 * 9.81};
  double delta_r_max{0.1 * 1.2 * 9.81};
  double delta_R12_max{0.6 * 7.5e-3};
  double delta_R3_max{0.6 * 1.3e-2};

  double hover_thrust() const { return m * g; }

  void validate() const {
    auto require = [](bool ok, const char* what) {
      if (!ok) throw ConfigError(std::string("vehicle: ") + what);
    };
    require(m > 0.0, "m > 0");
    require(g > 0.0, "g > 0");
    require(J1 > 0.0 && J2 > 0.0 && J3 > 0.0, "J1, J2, J3 > 0");
    require(d > 0.0, "d > 0");
    require(c > 0.0, "c > 0");
    require(f_min >= 0.0, "f_min >= 0");
    require(f_min < f_max, "f_min < f_max");
    require(delta_r_max >= 0.0, "delta_r_max >= 0");
    require(delta_R12_max >= 0.0, "delta_R12_max >= 0");
    require(delta_R3_max >= 0.0, "delta_R3_max >= 0");
  }

  friend bool operator==(const OctorotorParams&, const OctorotorParams&) = default;
};

struct InnerState {
  double v_z{0.0};
  double phi{0.0};
  double theta{0.0};
  double psi{0.0};
  double Omega1{0.0};
  double Omega2{0.0};
  double Omega3{0.0};

  StateVector as_array() const { return {v_z, phi, theta, psi, Omega1, Omega2, Omega3}; }
  static InnerState from_array(const StateVector& x) {
    return {x[0], x[1], x[2], x[3], x[4], x[5], x[6]};
  }

  friend bool operator==(const InnerState&, const InnerState&) = default;
};

struct ControlInput {
  double F{0.0};
  double tau1{0.0};
  double tau2{0.0};
  double tau3{0.0};

  Eigen::Vector4d as_vector() const { return {F, tau1, tau2, tau3}; }
  static ControlInput from_vector(const Eigen::Vector4d& u) { return {u[0], u[1], u[2], u[3]}; }
};

using RotorThrusts = Eigen::Matrix<double, 8, 1>;

// Horizontal force disturbances do not enter the inner loop and are omitted.
struct Disturbance {
  double delta_z{0.0};
  double delta_R1{0.0};
  double delta_R2{0.0};
  double delta_R3{0.0};

  bool admissible(const OctorotorParams& p) const {
    return std::fabs(delta_z) <= p.delta_r_max && std::fabs(delta_R1) <= p.delta_R12_max &&
           std::fabs(delta_R2) <= p.delta_R12_max && std::fabs(delta_R3) <= p.delta_R3_max;
  }

  friend bool operator==(const Disturbance&, const Disturbance&) = default;
};

// u = Lambda * f_all for the regular-octagon layout.
inline MixingMatrix mixing_matrix(const OctorotorParams& p) {
  const double ds = p.d * std::sin(p.gamma);
  const double dc = p.d * std::cos(p.gamma);
  const double c = p.c;
  MixingMatrix L;
  // clang-format off
  L << 1,   1,   1,   1,   1,   1,   1,   1,
       ds, -ds, -dc, -dc, -ds,  ds,  dc,  dc,
       dc,  dc,  ds, -ds, -dc, -dc, -ds,  ds,
       c,   c,  -c,  -c,   c,   c,  -c,  -c;
  // clang-format on
  return L;
}

inline StateVector inner_dynamics(const InnerState& s, const ControlInput& u,
                                  const Disturbance& dist, const OctorotorParams& p) {
  if (!(std::fabs(s.theta) < std::numbers::pi / 2.0))
    throw DomainError("inner_dynamics: |theta| must be below pi/2");
  const double sphi = std::sin(s.phi), cphi = std::cos(s.phi);
  const double cth = std::cos(s.theta), tth = std::tan(s.theta);
  const double body_yaw_pitch = sphi * s.Omega2 + cphi * s.Omega3;
  return {
      p.g - (u.F / p.m) * cphi * cth + dist.delta_z / p.m,
      s.Omega1 + tth * body_yaw_pitch,
      cphi * s.Omega2 - sphi * s.Omega3,
      body_yaw_pitch / cth,
      (u.tau1 + s.Omega2 * s.Omega3 * (p.J2 - p.J3) + dist.delta_R1) / p.J1,
      (u.tau2 + s.Omega1 * s.Omega3 * (p.J3 - p.J1) + dist.delta_R2) / p.J2,
      (u.tau3 + s.Omega1 * s.Omega2 * (p.J1 - p.J2) + dist.delta_R3) / p.J3,
  };
}

// Closed-loop linearization at s = 0 with the PD controller substituted.
// Decouples into (v_z), (phi, Omega1), (theta, Omega2), (psi, Omega3).
struct LinearBlocks {
  double vz{0.0};
  Eigen::Matrix2d phi;
  Eigen::Matrix2d theta;
  Eigen::Matrix2d psi;

  // The same blocks scattered into the 7x7 state-order matrix.
  Eigen::Matrix<double, kStateDim, kStateDim> full() const {
    Eigen::Matrix<double, kStateDim, kStateDim> A = Eigen::Matrix<double, kStateDim, kStateDim>::Zero();
    A(kVz, kVz) = vz;
    const std::array<std::pair<int, const Eigen::Matrix2d*>, 3> pairs{
        {{kPhi, &phi}, {kTheta, &theta}, {kPsi, &psi}}};
    for (const auto& [angle, block] : pairs) {
      const int rate = angle + 3;
      A(angle, angle) = (*block)(0, 0);
      A(angle, rate) = (*block)(0, 1);
      A(rate, angle) = (*block)(1, 0);
      A(rate, rate) = (*block)(1, 1);
    }
    return A;
  }
};

inline LinearBlocks closed_loop_linear_a(const OctorotorParams& p, const Gains& k) {
  auto pd = [](double kp, double kd, double J) {
    Eigen::Matrix2d b;
    b << 0.0, 1.0, -kp / J, -kd / J;
    return b;
  };
  return {-k.K_dz / p.m, pd(k.K_p_phi, k.K_d_phi, p.J1), pd(k.K_p_theta, k.K_d_theta, p.J2),
          pd(k.K_p_psi, k.K_d_psi, p.J3)};
}

}  // namespace octo
