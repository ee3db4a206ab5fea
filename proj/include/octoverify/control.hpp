#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "octoverify/errors.hpp"
#include "octoverify/gains.hpp"
#include "octoverify/model.hpp"

namespace octo {

// Commanded (v_z, phi, theta, psi); the commanded rates are zero.
struct Command {
  double v_z_d{0.0};
  double phi_d{0.0};
  double theta_d{0.0};
  double psi_d{0.0};

  friend bool operator==(const Command&, const Command&) = default;
};

// Diagonal state weights of the quadratic cost; the input weight is identity.
struct LqrWeights {
  double q_vz{40.0};
  double q_phi{0.25};
  double q_theta{0.25};
  double q_psi{0.25};
  double q_O1{0.125};
  double q_O2{0.125};
  double q_O3{0.125};

  void validate() const {
    if (!(q_vz > 0 && q_phi > 0 && q_theta > 0 && q_psi > 0 && q_O1 > 0 && q_O2 > 0 && q_O3 > 0))
      throw ConfigError("lqr: all weights must be strictly positive");
  }

  friend bool operator==(const LqrWeights&, const LqrWeights&) = default;
};

// Commanded thrust/torques: hover feedforward plus PD feedback.
inline ControlInput block_k(const InnerState& s, const Command& cmd, const Gains& k,
                            const OctorotorParams& p) {
  const double tilt = std::cos(s.phi) * std::cos(s.theta);
  if (!(tilt > 0.0)) throw DomainError("block_k: cos(phi)cos(theta) must be positive");
  return {
      p.m * p.g / tilt + k.K_dz * (s.v_z - cmd.v_z_d),
      -k.K_p_phi * (s.phi - cmd.phi_d) - k.K_d_phi * s.Omega1,
      -k.K_p_theta * (s.theta - cmd.theta_d) - k.K_d_theta * s.Omega2,
      -k.K_p_psi * (s.psi - cmd.psi_d) - k.K_d_psi * s.Omega3,
  };
}

// Riccati solution of one (angle, rate) double-integrator block
//   A = [[0, 1], [0, 0]],  B = [0; 1/J],  R = 1,  Q = diag(q_angle, q_rate).
struct AngleLqr {
  Eigen::Matrix2d P;
  double K_p;
  double K_d;
};

inline AngleLqr angle_lqr(double q_angle, double q_rate, double J) {
  const double b = 1.0 / J;
  const double p12 = std::sqrt(q_angle) / b;
  const double p22 = std::sqrt(2.0 * p12 + q_rate) / b;
  const double p11 = b * b * p12 * p22;
  AngleLqr out;
  out.P << p11, p12, p12, p22;
  out.K_p = b * p12;
  out.K_d = b * p22;
  return out;
}

// A^T P + P A - P B B^T P + Q for the block above.
inline Eigen::Matrix2d angle_riccati_residual(const Eigen::Matrix2d& P, double q_angle,
                                              double q_rate, double J) {
  Eigen::Matrix2d A;
  A << 0.0, 1.0, 0.0, 0.0;
  const Eigen::Vector2d B(0.0, 1.0 / J);
  Eigen::Matrix2d Q = Eigen::Vector2d(q_angle, q_rate).asDiagonal();
  return A.transpose() * P + P * A - P * B * B.transpose() * P + Q;
}

// Vertical channel: v_z' = -dF/m, so P = m sqrt(q) and K_dz = sqrt(q).
inline Gains lqr_gains(const LqrWeights& w, const OctorotorParams& p) {
  w.validate();
  const auto roll = angle_lqr(w.q_phi, w.q_O1, p.J1);
  const auto pitch = angle_lqr(w.q_theta, w.q_O2, p.J2);
  const auto yaw = angle_lqr(w.q_psi, w.q_O3, p.J3);
  return {std::sqrt(w.q_vz), roll.K_p, roll.K_d, pitch.K_p, pitch.K_d, yaw.K_p, yaw.K_d};
}

inline double round_significant(double x, int digits) {
  if (x == 0.0 || !std::isfinite(x)) return x;
  const double scale = std::pow(10.0, digits - 1 - static_cast<int>(std::floor(std::log10(std::fabs(x)))));
  return std::round(x * scale) / scale;
}

// Three-significant-figure gains, as usually tabulated.
inline Gains rounded_gains(const Gains& k, int digits = 3) {
  return {round_significant(k.K_dz, digits),      round_significant(k.K_p_phi, digits),
          round_significant(k.K_d_phi, digits),   round_significant(k.K_p_theta, digits),
          round_significant(k.K_d_theta, digits), round_significant(k.K_p_psi, digits),
          round_significant(k.K_d_psi, digits)};
}

}  // namespace octo
