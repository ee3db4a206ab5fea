#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "octoverify/control.hpp"
#include "octoverify/model.hpp"

using namespace octo;

TEST(Model, MixingMatrixFirstColumn) {
  const OctorotorParams p;
  const auto L = mixing_matrix(p);
  const double d = 0.4, c = 0.075 / 3.13;
  EXPECT_NEAR(L(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(L(1, 0), d * std::sin(std::numbers::pi / 8), 1e-15);
  EXPECT_NEAR(L(2, 0), d * std::cos(std::numbers::pi / 8), 1e-15);
  EXPECT_NEAR(L(3, 0), c, 1e-15);
  EXPECT_NEAR(L(1, 0), 0.1530734, 1e-7);
  EXPECT_NEAR(L(2, 0), 0.3695518, 1e-7);
  EXPECT_NEAR(L(3, 0), 0.0239617, 1e-7);
}

TEST(Model, MixingMatrixRowSums) {
  const OctorotorParams p;
  const auto L = mixing_matrix(p);
  const Eigen::Matrix<double, 8, 1> ones = Eigen::Matrix<double, 8, 1>::Ones();
  const Eigen::Vector4d u = L * ones;
  EXPECT_DOUBLE_EQ(u[0], 8.0);
  EXPECT_NEAR(u[1], 0.0, 1e-14);
  EXPECT_NEAR(u[2], 0.0, 1e-14);
  EXPECT_NEAR(u[3], 0.0, 1e-14);
  Eigen::Matrix<double, 8, 1> f;
  f << 1, 1, 0, 0, 1, 1, 0, 0;
  EXPECT_NEAR((L * f)[3], 4.0 * p.c, 1e-15);
}

TEST(Model, MixingMatrixRotorsAreEvenlySpaced) {
  const OctorotorParams p;
  const auto L = mixing_matrix(p);
  for (int j = 0; j < 8; ++j) EXPECT_NEAR(std::hypot(L(1, j), L(2, j)), p.d, 1e-14);
  // Neighbouring rotor arms are 45 degrees apart.
  for (int j = 0; j < 8; ++j) {
    const int k = (j + 1) % 8;
    const double dot = L(1, j) * L(1, k) + L(2, j) * L(2, k);
    EXPECT_NEAR(dot / (p.d * p.d), std::cos(std::numbers::pi / 4), 1e-12);
  }
}

TEST(Model, HoverIsAnEquilibrium) {
  const OctorotorParams p;
  const auto x = inner_dynamics({}, {p.m * p.g, 0, 0, 0}, {}, p);
  for (double v : x) EXPECT_NEAR(v, 0.0, 1e-14);
}

TEST(Model, VerticalDisturbanceAtBound) {
  const OctorotorParams p;
  const auto x = inner_dynamics({}, {p.m * p.g, 0, 0, 0}, {-0.1 * p.m * p.g, 0, 0, 0}, p);
  EXPECT_NEAR(x[kVz], -0.981, 1e-12);
}

TEST(Model, GyroscopicCoupling) {
  const OctorotorParams p;
  InnerState s;
  s.Omega2 = s.Omega3 = 1.0;
  const auto x = inner_dynamics(s, {}, {}, p);
  EXPECT_NEAR(x[kOmega1], (0.0075 - 0.013) / 0.0075, 1e-12);
  EXPECT_NEAR(x[kOmega1], -0.7333, 1e-4);
}

TEST(Model, EulerKinematics) {
  const OctorotorParams p;
  InnerState s;
  s.phi = 0.2;
  s.theta = -0.1;
  s.Omega1 = 0.3;
  s.Omega2 = 0.5;
  s.Omega3 = -0.4;
  const auto x = inner_dynamics(s, {}, {}, p);
  const double sp = std::sin(0.2), cp = std::cos(0.2), tt = std::tan(-0.1), ct = std::cos(-0.1);
  EXPECT_NEAR(x[kPhi], 0.3 + tt * (sp * 0.5 + cp * -0.4), 1e-15);
  EXPECT_NEAR(x[kTheta], cp * 0.5 - sp * -0.4, 1e-15);
  EXPECT_NEAR(x[kPsi], (sp * 0.5 + cp * -0.4) / ct, 1e-15);
}

TEST(Model, PitchAtRightAngleRejected) {
  InnerState s;
  s.theta = std::numbers::pi / 2;
  EXPECT_THROW(inner_dynamics(s, {}, {}, OctorotorParams{}), DomainError);
}

TEST(Model, ClosedLoopVerticalBlock) {
  const Gains k{6.32, 0.5, 0.364, 0.5, 0.364, 0.5, 0.371};
  const auto A = closed_loop_linear_a(OctorotorParams{}, k);
  EXPECT_NEAR(A.vz, -6.32 / 1.2, 1e-12);
  EXPECT_NEAR(A.vz, -5.2667, 1e-4);
  EXPECT_DOUBLE_EQ(A.phi(0, 1), 1.0);
  EXPECT_NEAR(A.phi(1, 0), -0.5 / 0.0075, 1e-12);
  EXPECT_NEAR(A.psi(1, 1), -0.371 / 0.013, 1e-12);
  const auto F = A.full();
  EXPECT_DOUBLE_EQ(F(kPhi, kOmega1), 1.0);
  EXPECT_DOUBLE_EQ(F(kPhi, kTheta), 0.0);
}

TEST(Model, LinearizationMatchesFiniteDifferences) {
  const OctorotorParams p;
  const Gains k{6.32, 0.5, 0.364, 0.5, 0.364, 0.5, 0.371};
  const auto A = closed_loop_linear_a(p, k).full();
  const double h = 1e-6;
  for (int j = 0; j < kStateDim; ++j) {
    StateVector up{}, dn{};
    up[j] = h;
    dn[j] = -h;
    const auto su = InnerState::from_array(up), sd = InnerState::from_array(dn);
    const auto fu = inner_dynamics(su, block_k(su, {}, k, p), {}, p);
    const auto fd = inner_dynamics(sd, block_k(sd, {}, k, p), {}, p);
    for (int i = 0; i < kStateDim; ++i) EXPECT_NEAR((fu[i] - fd[i]) / (2 * h), A(i, j), 1e-5) << i << "," << j;
  }
}

TEST(Model, ParameterValidation) {
  OctorotorParams p;
  p.f_max = p.f_min;
  EXPECT_THROW(p.validate(), ConfigError);
  OctorotorParams q;
  q.m = 0;
  EXPECT_THROW(q.validate(), ConfigError);
  EXPECT_NO_THROW(OctorotorParams{}.validate());
}

TEST(Model, DisturbanceAdmissibility) {
  const OctorotorParams p;
  EXPECT_TRUE((Disturbance{p.delta_r_max, 0, 0, p.delta_R3_max}).admissible(p));
  EXPECT_FALSE((Disturbance{0, 1.01 * p.delta_R12_max, 0, 0}).admissible(p));
}
