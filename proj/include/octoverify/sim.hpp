#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "octoverify/alloc.hpp"
#include "octoverify/barrier.hpp"
#include "octoverify/control.hpp"
#include "octoverify/model.hpp"

namespace octo {

enum class DisturbanceKind { Zero, Constant, RandomPiecewise, Adversarial };

struct DisturbancePolicy {
  DisturbanceKind kind{DisturbanceKind::Adversarial};
  Disturbance constant{};  // Constant; clipped to the admissible bounds
  double hold{0.1};        // RandomPiecewise: seconds between draws
  std::uint64_t seed{0};

  friend bool operator==(const DisturbancePolicy&, const DisturbancePolicy&) = default;
};

inline Disturbance clip(const Disturbance& d, const OctorotorParams& p) {
  auto c = [](double v, double b) { return std::clamp(v, -b, b); };
  return {c(d.delta_z, p.delta_r_max), c(d.delta_R1, p.delta_R12_max), c(d.delta_R2, p.delta_R12_max),
          c(d.delta_R3, p.delta_R3_max)};
}

// Worst-case proxy: each channel is pushed to the bound that drives the
// tightest component it influences toward its boundary.
inline Disturbance adversarial_disturbance(const InnerState& s, const Command& cmd,
                                           std::span<const AffineBarrier> comps, const OctorotorParams& p) {
  struct Channel {
    int state;
    double bound;
    double scale;
  };
  const std::array<Channel, 4> channels{{{kVz, p.delta_r_max, 1.0 / p.m},
                                         {kOmega1, p.delta_R12_max, 1.0 / p.J1},
                                         {kOmega2, p.delta_R12_max, 1.0 / p.J2},
                                         {kOmega3, p.delta_R3_max, 1.0 / p.J3}}};
  std::array<double, 4> out{};
  for (std::size_t k = 0; k < channels.size(); ++k) {
    const auto& ch = channels[k];
    double tightest = std::numeric_limits<double>::infinity();
    double slope = 0.0;
    for (const auto& b : comps) {
      const double coeff = b.state_coeffs[ch.state];
      if (coeff == 0.0) continue;
      const double value = b.normalized(s, cmd);
      if (value < tightest) {
        tightest = value;
        slope = coeff / b.denominator * ch.scale;
      }
    }
    out[k] = slope > 0.0 ? -ch.bound : (slope < 0.0 ? ch.bound : 0.0);
  }
  return {out[0], out[1], out[2], out[3]};
}

// Stateful source of disturbance samples for one trajectory.
class DisturbanceSource {
 public:
  DisturbanceSource(DisturbancePolicy policy, const OctorotorParams& params)
      : policy_(policy), params_(params), rng_(policy.seed) {}

  Disturbance operator()(double t, const InnerState& s, const Command& cmd, std::span<const AffineBarrier> comps) {
    switch (policy_.kind) {
      case DisturbanceKind::Zero:
        return {};
      case DisturbanceKind::Constant:
        return clip(policy_.constant, params_);
      case DisturbanceKind::RandomPiecewise:
        if (!current_ || t >= next_draw_) {
          auto u = [&](double b) { return std::uniform_real_distribution<double>(-b, b)(rng_); };
          current_ = Disturbance{u(params_.delta_r_max), u(params_.delta_R12_max), u(params_.delta_R12_max),
                                 u(params_.delta_R3_max)};
          next_draw_ = t + policy_.hold;
        }
        return *current_;
      case DisturbanceKind::Adversarial:
        return adversarial_disturbance(s, cmd, comps, params_);
    }
    return {};
  }

 private:
  DisturbancePolicy policy_;
  OctorotorParams params_;
  std::mt19937_64 rng_;
  std::optional<Disturbance> current_;
  double next_draw_{0.0};
};

inline InnerState add_scaled(const InnerState& s, const StateVector& k, double h) {
  auto x = s.as_array();
  for (int i = 0; i < kStateDim; ++i) x[i] += h * k[i];
  return InnerState::from_array(x);
}

// One classical RK4 step with the achieved input and the disturbance held
// over the step.
inline InnerState rk4_step(const InnerState& s, const ControlInput& u, const Disturbance& dist, double dt,
                           const OctorotorParams& p) {
  if (!(dt > 0.0)) throw std::invalid_argument("rk4_step: dt must be positive");
  const auto k1 = inner_dynamics(s, u, dist, p);
  const auto k2 = inner_dynamics(add_scaled(s, k1, dt / 2), u, dist, p);
  const auto k3 = inner_dynamics(add_scaled(s, k2, dt / 2), u, dist, p);
  const auto k4 = inner_dynamics(add_scaled(s, k3, dt), u, dist, p);
  auto x = s.as_array();
  for (int i = 0; i < kStateDim; ++i) x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return InnerState::from_array(x);
}

struct StepResult {
  InnerState next;
  AllocationResult alloc;
};

// ZeroOrderHold evaluates controller and allocation once per step.
// PerStage re-evaluates them at every RK4 stage, integrating the continuous
// closed loop.
enum class ControlUpdate { ZeroOrderHold, PerStage };

// Controller, allocation with clamping, then one RK4 step.
inline StepResult step(const InnerState& s, const Command& cmd, const Allocator& alloc, const Disturbance& dist,
                       double dt, const Gains& gains, const OctorotorParams& params,
                       ControlUpdate mode = ControlUpdate::ZeroOrderHold) {
  StepResult r;
  r.alloc = alloc(block_k(s, cmd, gains, params));
  if (mode == ControlUpdate::ZeroOrderHold) {
    r.next = rk4_step(s, r.alloc.u_achieved, dist, dt, params);
    return r;
  }
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  auto f = [&](const InnerState& x) {
    return inner_dynamics(x, alloc(block_k(x, cmd, gains, params)).u_achieved, dist, params);
  };
  const auto k1 = inner_dynamics(s, r.alloc.u_achieved, dist, params);
  const auto k2 = f(add_scaled(s, k1, dt / 2));
  const auto k3 = f(add_scaled(s, k2, dt / 2));
  const auto k4 = f(add_scaled(s, k3, dt));
  auto x = s.as_array();
  for (int i = 0; i < kStateDim; ++i) x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  r.next = InnerState::from_array(x);
  return r;
}

struct TrajectorySample {
  double t{0.0};
  InnerState s;
  ControlInput u;
  RotorThrusts f;
  Disturbance dist;
  double mu{0.0};
};

struct Trajectory {
  double dt{1e-3};
  Command cmd;
  std::vector<TrajectorySample> samples;
};

inline Trajectory simulate(const InnerState& s0, const Command& cmd, const FailureScenario& scenario,
                           const DisturbancePolicy& policy, double dt, double horizon, const Gains& gains,
                           const OctorotorParams& params, std::span<const AffineBarrier> comps,
                           ControlUpdate mode = ControlUpdate::ZeroOrderHold) {
  if (!(dt > 0.0) || !(horizon > 0.0)) throw std::invalid_argument("simulate: dt and horizon must be positive");
  const Allocator alloc(scenario, params);
  DisturbanceSource source(policy, params);
  Trajectory tr;
  tr.dt = dt;
  tr.cmd = cmd;
  const auto n = static_cast<std::size_t>(std::llround(horizon / dt));
  InnerState s = s0;
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) * dt;
    const Disturbance d = source(t, s, cmd, comps);
    const auto r = step(s, cmd, alloc, d, dt, gains, params, mode);
    tr.samples.push_back({t, s, r.alloc.u_achieved, r.alloc.f_all, d, mu_level(s, cmd, comps)});
    if (k < n) s = r.next;
  }
  return tr;
}

inline std::vector<double> mu_trace(const Trajectory& tr, std::span<const AffineBarrier> comps) {
  std::vector<double> out;
  out.reserve(tr.samples.size());
  for (const auto& x : tr.samples) out.push_back(mu_level(x.s, tr.cmd, comps));
  return out;
}

inline void write_csv(const Trajectory& tr, std::ostream& os) {
  os << "t,v_z,phi,theta,psi,O1,O2,O3,F,tau1,tau2,tau3,f1,f2,f3,f4,f5,f6,f7,f8,dz,dR1,dR2,dR3,mu\n";
  os.precision(17);
  for (const auto& x : tr.samples) {
    os << x.t;
    for (double v : x.s.as_array()) os << ',' << v;
    os << ',' << x.u.F << ',' << x.u.tau1 << ',' << x.u.tau2 << ',' << x.u.tau3;
    for (int j = 0; j < kRotorCount; ++j) os << ',' << x.f[j];
    os << ',' << x.dist.delta_z << ',' << x.dist.delta_R1 << ',' << x.dist.delta_R2 << ',' << x.dist.delta_R3;
    os << ',' << x.mu << '\n';
  }
}

struct FalsifyOptions {
  int n_trials{1000};
  double horizon{5.0};
  double dt{1e-3};
  std::uint64_t seed{1};
  DisturbancePolicy policy{};
  int workers{1};
  double tolerance{1e-6};
  ControlUpdate control{ControlUpdate::ZeroOrderHold};

  void validate() const {
    if (n_trials <= 0) throw std::invalid_argument("falsify: n_trials must be positive");
    if (!(horizon > 0.0)) throw std::invalid_argument("falsify: horizon must be positive");
    if (!(dt > 0.0)) throw std::invalid_argument("falsify: dt must be positive");
    if (workers < 1) throw std::invalid_argument("falsify: workers must be at least 1");
  }
};

struct Counterexample {
  int trial{0};
  std::string reason;
  InnerState s0;
  Command cmd;
  double mu0{0.0};
  std::size_t step{0};
  Trajectory trajectory;
};

namespace detail {

// Uniform sample of I(mu) by rejection from its bounding box around the command.
inline InnerState sample_in_set(const Command& cmd, double mu, const BarrierParams& bp,
                                std::span<const AffineBarrier> comps, std::mt19937_64& rng) {
  const StateVector centre{cmd.v_z_d, cmd.phi_d, cmd.theta_d, cmd.psi_d, 0.0, 0.0, 0.0};
  const StateVector half{bp.D_vz, bp.D_phi, bp.D_theta, bp.D_psi, bp.D_O1, bp.D_O2, bp.D_O3};
  for (int attempt = 0; attempt < 100000; ++attempt) {
    StateVector x;
    for (int i = 0; i < kStateDim; ++i)
      x[i] = centre[i] + std::uniform_real_distribution<double>(-mu * half[i], mu * half[i])(rng);
    const auto s = InnerState::from_array(x);
    if (membership(s, cmd, mu, comps)) return s;
  }
  throw std::runtime_error("falsify: could not sample the candidate set");
}

}  // namespace detail

// Searches for a trajectory that leaves I(mu_max), or whose mu-level rises
// by more than the tolerance above max(1, lowest level seen so far).
// Trials are independent and seeded by (seed, trial); the counterexample
// with the lowest trial index is returned.
inline std::optional<Counterexample> falsify(std::span<const AffineBarrier> comps, const BarrierParams& bp,
                                             const FailureScenario& scenario, const FalsifyOptions& opt,
                                             const Gains& gains, const OctorotorParams& params) {
  opt.validate();
  const Allocator alloc(scenario, params);

  auto trial = [&](int index) -> std::optional<Counterexample> {
    std::seed_seq seq{static_cast<std::uint64_t>(opt.seed), static_cast<std::uint64_t>(index)};
    std::mt19937_64 rng(seq);
    auto u = [&](double b) { return std::uniform_real_distribution<double>(-b, b)(rng); };
    Command cmd{u(bp.D_vzd), u(bp.D_phid), u(bp.D_thetad), u(bp.D_psid)};
    const double mu0 = std::uniform_real_distribution<double>(1.0, bp.mu_max)(rng);
    InnerState s = detail::sample_in_set(cmd, mu0, bp, comps, rng);
    if (index % 2 == 1) {
      // Boundary draw: stretch the deviation so the mu-level is exactly mu0.
      const double level = mu_level(s, cmd, comps);
      if (level > 0.0) {
        const StateVector centre{cmd.v_z_d, cmd.phi_d, cmd.theta_d, cmd.psi_d, 0.0, 0.0, 0.0};
        auto x = s.as_array();
        for (int i = 0; i < kStateDim; ++i) x[i] = centre[i] + (x[i] - centre[i]) * (mu0 / level);
        s = InnerState::from_array(x);
      }
    }
    DisturbancePolicy policy = opt.policy;
    policy.seed = rng();
    DisturbanceSource source(policy, params);

    const InnerState s0 = s;
    const auto n = static_cast<std::size_t>(std::llround(opt.horizon / opt.dt));
    double lowest = mu_level(s, cmd, comps);
    std::string reason;
    std::size_t k = 0;
    for (; k < n; ++k) {
      const Disturbance d = source(static_cast<double>(k) * opt.dt, s, cmd, comps);
      s = step(s, cmd, alloc, d, opt.dt, gains, params, opt.control).next;
      const double level = mu_level(s, cmd, comps);
      if (level > bp.mu_max + opt.tolerance) {
        reason = "left I(mu_max)";
        break;
      }
      if (level >= 1.0 && level > std::max(1.0, lowest) + opt.tolerance) {
        reason = "mu-level increased";
        break;
      }
      lowest = std::min(lowest, level);
    }
    if (reason.empty()) return std::nullopt;
    Counterexample cx;
    cx.trial = index;
    cx.reason = reason;
    cx.s0 = s0;
    cx.cmd = cmd;
    cx.mu0 = mu0;
    cx.step = k + 1;
    cx.trajectory = simulate(s0, cmd, scenario, DisturbancePolicy{policy}, opt.dt,
                             static_cast<double>(k + 1) * opt.dt, gains, params, comps, opt.control);
    return cx;
  };

  std::vector<std::optional<Counterexample>> found(opt.workers);
  auto run = [&](int w) {
    for (int i = w; i < opt.n_trials; i += opt.workers) {
      if (found[w] && found[w]->trial < i) return;
      if (auto cx = trial(i)) {
        found[w] = std::move(cx);
        return;
      }
    }
  };
  if (opt.workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < opt.workers; ++w) threads.emplace_back(run, w);
    for (auto& t : threads) t.join();
  }
  std::optional<Counterexample> best;
  for (auto& f : found)
    if (f && (!best || f->trial < best->trial)) best = std::move(f);
  return best;
}

}  // namespace octo
