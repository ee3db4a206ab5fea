#pragma once

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <set>
#include <string>
#include <type_traits>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "octoverify/alloc.hpp"
#include "octoverify/barrier.hpp"
#include "octoverify/conditions.hpp"
#include "octoverify/control.hpp"
#include "octoverify/errors.hpp"
#include "octoverify/model.hpp"
#include "octoverify/sim.hpp"
#include "octoverify/solver.hpp"

namespace octo {

struct SimSettings {
  int trials{1000};
  double horizon{5.0};
  double dt{1e-3};
  DisturbancePolicy policy{};
  std::uint64_t seed{1};
  ControlUpdate control{ControlUpdate::ZeroOrderHold};

  friend bool operator==(const SimSettings&, const SimSettings&) = default;
};

struct RunConfig {
  OctorotorParams vehicle;
  LqrWeights lqr;
  bool round_gains{false};
  std::optional<Gains> gains;  // explicit gains take precedence over lqr
  BarrierParams barrier;
  SearchSpace search;
  std::vector<FailureCase> failures;
  SolverConfig solver;
  SimSettings sim;

  Gains resolved_gains() const {
    if (gains) return *gains;
    const Gains k = lqr_gains(lqr, vehicle);
    return round_gains ? rounded_gains(k) : k;
  }

  SuiteConfig suite() const { return {vehicle, resolved_gains(), barrier, search, failures}; }

  void validate() const {
    vehicle.validate();
    lqr.validate();
    if (gains) gains->validate();
    barrier.validate();
    search.validate();
    solver.validate();
    for (const auto& f : failures) {
      f.scenario.validate(vehicle);
      if (!is_rank_four(masked_matrix(mixing_matrix(vehicle), f.scenario.failed())))
        throw ConfigError("failures: rotor set {" + f.scenario.rotor_list() + "} leaves the mixing matrix rank-deficient");
      if (f.mu_max && !(*f.mu_max >= 1.0)) throw ConfigError("failures: mu_max must be at least 1");
      if (f.delta && !(*f.delta > 0.0)) throw ConfigError("failures: delta must be positive");
    }
    if (sim.trials <= 0) throw ConfigError("sim: trials must be positive");
    if (!(sim.horizon > 0.0)) throw ConfigError("sim: horizon must be positive");
    if (!(sim.dt > 0.0)) throw ConfigError("sim: dt must be positive");
    if (!(sim.policy.hold > 0.0)) throw ConfigError("sim: hold must be positive");
  }

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

namespace detail {

using nlohmann::json;

// Reads members of one JSON object, rejecting keys that are never read.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  template <typename T>
  void read(std::string_view key, T& out) {
    known_.insert(std::string(key));
    auto it = j_.find(std::string(key));
    if (it == j_.end()) return;
    if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>)
      if (!it->is_number_unsigned()) throw ConfigError(path_ + "." + std::string(key) + ": expected a non-negative integer");
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError(path_ + "." + std::string(key) + ": wrong type");
    }
  }

  bool has(std::string_view key) const { return j_.contains(std::string(key)); }

  const json* child(std::string_view key) {
    known_.insert(std::string(key));
    auto it = j_.find(std::string(key));
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!known_.contains(it.key())) throw ConfigError(path_ + ": unknown key '" + it.key() + "'");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> known_;
};

inline const char* branch_rule_name(BranchRule r) { return r == BranchRule::Smear ? "smear" : "widest"; }

inline BranchRule parse_branch_rule(const std::string& s) {
  if (s == "smear") return BranchRule::Smear;
  if (s == "widest") return BranchRule::WidestNormalized;
  throw ConfigError("solver.branch_rule: expected 'smear' or 'widest', got '" + s + "'");
}

inline const char* disturbance_name(DisturbanceKind k) {
  switch (k) {
    case DisturbanceKind::Zero:
      return "zero";
    case DisturbanceKind::Constant:
      return "constant";
    case DisturbanceKind::RandomPiecewise:
      return "random";
    case DisturbanceKind::Adversarial:
      return "adversarial";
  }
  return "?";
}

inline DisturbanceKind parse_disturbance(const std::string& s) {
  if (s == "zero") return DisturbanceKind::Zero;
  if (s == "constant") return DisturbanceKind::Constant;
  if (s == "random") return DisturbanceKind::RandomPiecewise;
  if (s == "adversarial") return DisturbanceKind::Adversarial;
  throw ConfigError("sim.disturbance: expected zero, constant, random or adversarial, got '" + s + "'");
}

inline FailureCase parse_failure(const json& j, const std::string& path) {
  FailureCase fc;
  if (j.is_string()) {
    fc.scenario = parse_scenario(j.get<std::string>());
    return fc;
  }
  Section s(j, path);
  if (const json* stuck = s.child("stuck")) {
    if (stuck->is_string()) {
      fc.scenario = parse_scenario(stuck->get<std::string>());
    } else if (stuck->is_object()) {
      for (auto it = stuck->begin(); it != stuck->end(); ++it) {
        int index = 0;
        try {
          std::size_t used = 0;
          index = std::stoi(it.key(), &used);
          if (used != it.key().size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
          throw ConfigError(path + ".stuck: bad rotor index '" + it.key() + "'");
        }
        if (!it->is_number()) throw ConfigError(path + ".stuck." + it.key() + ": expected a number");
        fc.scenario.stuck[index] = it->get<double>();
      }
    } else {
      throw ConfigError(path + ".stuck: expected an object or an index:thrust string");
    }
  } else {
    throw ConfigError(path + ": missing 'stuck'");
  }
  double v = 0.0;
  if (s.has("mu_max")) {
    s.read("mu_max", v);
    fc.mu_max = v;
  }
  if (s.has("delta")) {
    s.read("delta", v);
    fc.delta = v;
  }
  s.finish();
  return fc;
}

}  // namespace detail

// Parses a JSON run configuration.  Omitted sections and keys keep their
// defaults; unknown keys are errors.
inline RunConfig parse_config(std::string_view text) {
  using nlohmann::json;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  RunConfig c;
  detail::Section top(root, "config");

  if (const json* j = top.child("vehicle")) {
    detail::Section s(*j, "vehicle");
    auto& v = c.vehicle;
    s.read("m", v.m);
    s.read("g", v.g);
    s.read("J1", v.J1);
    s.read("J2", v.J2);
    s.read("J3", v.J3);
    s.read("d", v.d);
    s.read("c", v.c);
    s.read("gamma", v.gamma);
    s.read("f_min", v.f_min);
    s.read("f_max", v.f_max);
    s.read("delta_r_max", v.delta_r_max);
    s.read("delta_R12_max", v.delta_R12_max);
    s.read("delta_R3_max", v.delta_R3_max);
    s.finish();
  }
  if (const json* j = top.child("lqr")) {
    detail::Section s(*j, "lqr");
    auto& w = c.lqr;
    s.read("q_vz", w.q_vz);
    s.read("q_phi", w.q_phi);
    s.read("q_theta", w.q_theta);
    s.read("q_psi", w.q_psi);
    s.read("q_O1", w.q_O1);
    s.read("q_O2", w.q_O2);
    s.read("q_O3", w.q_O3);
    s.read("round_gains", c.round_gains);
    s.finish();
  }
  if (const json* j = top.child("gains")) {
    detail::Section s(*j, "gains");
    Gains k{};
    for (const char* key : {"K_dz", "K_p_phi", "K_d_phi", "K_p_theta", "K_d_theta", "K_p_psi", "K_d_psi"})
      if (!s.has(key)) throw ConfigError(std::string("gains: missing '") + key + "'");
    s.read("K_dz", k.K_dz);
    s.read("K_p_phi", k.K_p_phi);
    s.read("K_d_phi", k.K_d_phi);
    s.read("K_p_theta", k.K_p_theta);
    s.read("K_d_theta", k.K_d_theta);
    s.read("K_p_psi", k.K_p_psi);
    s.read("K_d_psi", k.K_d_psi);
    s.finish();
    c.gains = k;
  }
  if (const json* j = top.child("barrier")) {
    detail::Section s(*j, "barrier");
    auto& b = c.barrier;
    s.read("D_vz", b.D_vz);
    s.read("D_vzd", b.D_vzd);
    s.read("D_phi", b.D_phi);
    s.read("D_phid", b.D_phid);
    s.read("D_theta", b.D_theta);
    s.read("D_thetad", b.D_thetad);
    s.read("D_psi", b.D_psi);
    s.read("D_O1", b.D_O1);
    s.read("D_O2", b.D_O2);
    s.read("D_O3", b.D_O3);
    s.read("p_phi1", b.p_phi1);
    s.read("p_theta1", b.p_theta1);
    s.read("p_psi1", b.p_psi1);
    s.read("delta_phi1", b.delta_phi1);
    s.read("delta_theta1", b.delta_theta1);
    s.read("delta_psi1", b.delta_psi1);
    s.read("mu_max", b.mu_max);
    s.read("epsilon", b.epsilon);
    b.D_psid = b.epsilon;
    s.read("D_psid", b.D_psid);
    s.finish();
  }
  if (const json* j = top.child("search")) {
    detail::Section s(*j, "search");
    auto& x = c.search.state_max;
    s.read("v_z", x[kVz]);
    s.read("phi", x[kPhi]);
    s.read("theta", x[kTheta]);
    s.read("psi", x[kPsi]);
    s.read("Omega1", x[kOmega1]);
    s.read("Omega2", x[kOmega2]);
    s.read("Omega3", x[kOmega3]);
    s.finish();
  }
  if (const json* j = top.child("failures")) {
    if (!j->is_array()) throw ConfigError("failures: expected an array");
    for (std::size_t i = 0; i < j->size(); ++i)
      c.failures.push_back(detail::parse_failure((*j)[i], "failures[" + std::to_string(i) + "]"));
  }
  if (const json* j = top.child("solver")) {
    detail::Section s(*j, "solver");
    auto& v = c.solver;
    s.read("delta", v.delta);
    s.read("max_boxes", v.max_boxes);
    s.read("workers", v.workers);
    std::string rule = detail::branch_rule_name(v.branch_rule);
    s.read("branch_rule", rule);
    v.branch_rule = detail::parse_branch_rule(rule);
    s.read("mean_value", v.mean_value);
    s.read("contract", v.contract);
    s.read("max_seconds", v.max_seconds);
    s.read("probes", v.probes);
    s.read("probe_seed", v.probe_seed);
    s.read("repair", v.repair);
    s.read("linear_relax", v.linear_relax);
    s.finish();
  }
  if (const json* j = top.child("sim")) {
    detail::Section s(*j, "sim");
    auto& v = c.sim;
    s.read("trials", v.trials);
    s.read("horizon", v.horizon);
    s.read("dt", v.dt);
    s.read("seed", v.seed);
    std::string kind = detail::disturbance_name(v.policy.kind);
    s.read("disturbance", kind);
    v.policy.kind = detail::parse_disturbance(kind);
    s.read("hold", v.policy.hold);
    std::string control = v.control == ControlUpdate::ZeroOrderHold ? "hold" : "per-stage";
    s.read("control_update", control);
    if (control == "hold")
      v.control = ControlUpdate::ZeroOrderHold;
    else if (control == "per-stage")
      v.control = ControlUpdate::PerStage;
    else
      throw ConfigError("sim.control_update: expected \"hold\" or \"per-stage\", got \"" + control + "\"");
    if (const json* d = s.child("constant")) {
      detail::Section ds(*d, "sim.constant");
      ds.read("delta_z", v.policy.constant.delta_z);
      ds.read("delta_R1", v.policy.constant.delta_R1);
      ds.read("delta_R2", v.policy.constant.delta_R2);
      ds.read("delta_R3", v.policy.constant.delta_R3);
      ds.finish();
    }
    s.finish();
  }
  top.finish();
  c.validate();
  return c;
}

// Inverse of parse_config: every field is written explicitly.
inline nlohmann::json render_config(const RunConfig& c) {
  using nlohmann::json;
  json j;
  const auto& v = c.vehicle;
  j["vehicle"] = {{"m", v.m},
                  {"g", v.g},
                  {"J1", v.J1},
                  {"J2", v.J2},
                  {"J3", v.J3},
                  {"d", v.d},
                  {"c", v.c},
                  {"gamma", v.gamma},
                  {"f_min", v.f_min},
                  {"f_max", v.f_max},
                  {"delta_r_max", v.delta_r_max},
                  {"delta_R12_max", v.delta_R12_max},
                  {"delta_R3_max", v.delta_R3_max}};
  const auto& w = c.lqr;
  j["lqr"] = {{"q_vz", w.q_vz}, {"q_phi", w.q_phi}, {"q_theta", w.q_theta}, {"q_psi", w.q_psi},
              {"q_O1", w.q_O1}, {"q_O2", w.q_O2},   {"q_O3", w.q_O3},       {"round_gains", c.round_gains}};
  if (c.gains) {
    const auto& k = *c.gains;
    j["gains"] = {{"K_dz", k.K_dz},           {"K_p_phi", k.K_p_phi}, {"K_d_phi", k.K_d_phi},
                  {"K_p_theta", k.K_p_theta}, {"K_d_theta", k.K_d_theta}, {"K_p_psi", k.K_p_psi},
                  {"K_d_psi", k.K_d_psi}};
  }
  const auto& b = c.barrier;
  j["barrier"] = {{"D_vz", b.D_vz},
                  {"D_vzd", b.D_vzd},
                  {"D_phi", b.D_phi},
                  {"D_phid", b.D_phid},
                  {"D_theta", b.D_theta},
                  {"D_thetad", b.D_thetad},
                  {"D_psi", b.D_psi},
                  {"D_psid", b.D_psid},
                  {"D_O1", b.D_O1},
                  {"D_O2", b.D_O2},
                  {"D_O3", b.D_O3},
                  {"p_phi1", b.p_phi1},
                  {"p_theta1", b.p_theta1},
                  {"p_psi1", b.p_psi1},
                  {"delta_phi1", b.delta_phi1},
                  {"delta_theta1", b.delta_theta1},
                  {"delta_psi1", b.delta_psi1},
                  {"mu_max", b.mu_max},
                  {"epsilon", b.epsilon}};
  const auto& x = c.search.state_max;
  j["search"] = {{"v_z", x[kVz]},         {"phi", x[kPhi]},         {"theta", x[kTheta]}, {"psi", x[kPsi]},
                 {"Omega1", x[kOmega1]}, {"Omega2", x[kOmega2]}, {"Omega3", x[kOmega3]}};
  j["failures"] = json::array();
  for (const auto& f : c.failures) {
    json e;
    e["stuck"] = json::object();
    for (const auto& [idx, thrust] : f.scenario.stuck) e["stuck"][std::to_string(idx)] = thrust;
    if (f.mu_max) e["mu_max"] = *f.mu_max;
    if (f.delta) e["delta"] = *f.delta;
    j["failures"].push_back(e);
  }
  const auto& s = c.solver;
  j["solver"] = {{"delta", s.delta},
                 {"max_boxes", s.max_boxes},
                 {"workers", s.workers},
                 {"branch_rule", detail::branch_rule_name(s.branch_rule)},
                 {"mean_value", s.mean_value},
                 {"contract", s.contract},
                 {"max_seconds", s.max_seconds},
                 {"probes", s.probes},
                 {"probe_seed", s.probe_seed},
                 {"repair", s.repair},
                 {"linear_relax", s.linear_relax}};
  const auto& m = c.sim;
  j["sim"] = {{"trials", m.trials},
              {"horizon", m.horizon},
              {"dt", m.dt},
              {"seed", m.seed},
              {"disturbance", detail::disturbance_name(m.policy.kind)},
              {"hold", m.policy.hold},
              {"control_update", m.control == ControlUpdate::ZeroOrderHold ? "hold" : "per-stage"},
              {"constant",
               {{"delta_z", m.policy.constant.delta_z},
                {"delta_R1", m.policy.constant.delta_R1},
                {"delta_R2", m.policy.constant.delta_R2},
                {"delta_R3", m.policy.constant.delta_R3}}}};
  return j;
}

}  // namespace octo
