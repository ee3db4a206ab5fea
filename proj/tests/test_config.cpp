#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "octoverify/config.hpp"
#include "octoverify/report.hpp"

using namespace octo;

TEST(Config, EmptyDocumentGivesDefaults) {
  const RunConfig c = parse_config("{}");
  EXPECT_EQ(c, RunConfig{});
  EXPECT_EQ(c.vehicle.m, 1.2);
  EXPECT_EQ(c.barrier.mu_max, 2.0);
  EXPECT_EQ(c.barrier.D_psid, c.barrier.epsilon);
  EXPECT_TRUE(c.failures.empty());
  const auto k = c.resolved_gains();
  EXPECT_NEAR(k.K_dz, 6.32, 5e-3);
}

TEST(Config, FailureScenarioObjectForm) {
  const RunConfig c = parse_config(R"({"failures":[{"stuck":{"1":0.0,"2":0.0}}]})");
  ASSERT_EQ(c.failures.size(), 1u);
  EXPECT_EQ(c.failures[0].scenario.stuck, (std::map<int, double>{{1, 0.0}, {2, 0.0}}));
  EXPECT_FALSE(c.failures[0].mu_max.has_value());
}

TEST(Config, FailureScenarioStringFormAndOverrides) {
  const RunConfig c = parse_config(R"({"failures":["1:0,8:1.4715", {"stuck":"1:1.4715,2:1.4715","mu_max":1.5,"delta":1e-3}]})");
  ASSERT_EQ(c.failures.size(), 2u);
  EXPECT_EQ(c.failures[0].scenario.stuck.at(8), 1.4715);
  EXPECT_EQ(c.failures[1].mu_max, 1.5);
  EXPECT_EQ(c.failures[1].delta, 1e-3);
}

TEST(Config, ShrinkMarginBeyondHalfWidthIsRejected) {
  EXPECT_THROW(parse_config(R"({"barrier":{"delta_phi1":0.06}})"), ConfigError);
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse_config("{"), ConfigError);
  EXPECT_THROW(parse_config(R"({"vehicel":{}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"vehicle":{"mass":1}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"vehicle":{"m":"heavy"}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"failures":[{"stuck":{"1":0,"2":0,"5":0,"6":0}}]})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"failures":[{"stuck":{"9":0}}]})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"failures":[{"stuck":{"1":0},"mu_max":0.5}]})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"failures":{}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"solver":{"branch_rule":"random"}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"solver":{"delta":0}})"), std::invalid_argument);
  EXPECT_THROW(parse_config(R"({"sim":{"trials":0}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"sim":{"disturbance":"gusty"}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"sim":{"control_update":"sometimes"}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"solver":{"probes":-1}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"gains":{"K_dz":6.32}})"), ConfigError);
}

TEST(Config, ErrorsNameTheOffendingKey) {
  try {
    parse_config(R"({"barrier":{"D_vz":0.25,"Dvz":1}})");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("Dvz"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("barrier"), std::string::npos);
  }
}

TEST(Config, ExplicitGainsTakePrecedence) {
  const RunConfig c = parse_config(
      R"({"gains":{"K_dz":6.32,"K_p_phi":0.5,"K_d_phi":0.364,"K_p_theta":0.5,"K_d_theta":0.364,"K_p_psi":0.5,"K_d_psi":0.371}})");
  EXPECT_EQ(c.resolved_gains(), (Gains{6.32, 0.5, 0.364, 0.5, 0.364, 0.5, 0.371}));
  const RunConfig r = parse_config(R"({"lqr":{"round_gains":true}})");
  EXPECT_EQ(r.resolved_gains(), (Gains{6.32, 0.5, 0.364, 0.5, 0.364, 0.5, 0.371}));
}

TEST(Config, RenderParsesBackToTheSameConfig) {
  const RunConfig c = parse_config(R"({
    "vehicle": {"m": 1.3, "delta_r_max": 1.0},
    "barrier": {"mu_max": 1.5},
    "search": {"v_z": 2.0},
    "failures": [{"stuck": {"1": 0, "3": 0.5}, "mu_max": 1.2}],
    "solver": {"delta": 0.005, "workers": 2, "branch_rule": "widest", "mean_value": false, "linear_relax": false},
    "sim": {"trials": 10, "disturbance": "constant", "constant": {"delta_z": 0.3}, "control_update": "per-stage"}
  })");
  EXPECT_EQ(parse_config(render_config(c).dump()), c);
  EXPECT_EQ(c.solver.branch_rule, BranchRule::WidestNormalized);
  EXPECT_EQ(c.sim.policy.kind, DisturbanceKind::Constant);
  EXPECT_EQ(c.sim.control, ControlUpdate::PerStage);
}

TEST(Report, FilterSelectsRotorBoundsOnly) {
  VerifyOptions o;
  o.filters = {"rotor-bounds"};
  const auto r = run_verify(parse_config("{}"), o);
  ASSERT_EQ(r.verify.size(), 1u);
  EXPECT_EQ(r.verify[0].name, "rotor-bounds/no-failures");
  ASSERT_TRUE(r.verify[0].verdict.has_value());
  EXPECT_EQ(*r.verify[0].verdict, Verdict::Kind::Unsat);
  EXPECT_EQ(r.verify[0].delta, 1e-2);
  EXPECT_TRUE(r.all_decided());
}

TEST(Report, FilterMatchingNothingWarns) {
  VerifyOptions o;
  o.filters = {"no-such-task"};
  const auto r = run_verify(parse_config("{}"), o);
  EXPECT_TRUE(r.verify.empty());
  EXPECT_FALSE(r.warnings.empty());
}

TEST(Report, TaskSelectionBySubstring) {
  EXPECT_TRUE(task_selected("invariance/vz/vz,0,+", {}));
  EXPECT_TRUE(task_selected("invariance/vz/vz,0,+", {"psi", "vz"}));
  EXPECT_FALSE(task_selected("invariance/vz/vz,0,+", {"psi"}));
  EXPECT_EQ(selected_tasks(parse_config("{}"), {"psi-Omega3"}).size(), 6u);
}

TEST(Report, BudgetExhaustionLeavesTheRowUndecided) {
  RunConfig c = parse_config(R"({"solver":{"max_boxes":3}})");
  VerifyOptions o;
  o.filters = {"invariance/vz/vz,0,+"};
  const auto r = run_verify(c, o);
  ASSERT_EQ(r.verify.size(), 1u);
  EXPECT_FALSE(r.verify[0].verdict.has_value());
  EXPECT_FALSE(r.verify[0].note.empty());
  EXPECT_FALSE(r.all_decided());
}

TEST(Report, RenderingContainsRows) {
  VerifyOptions o;
  o.filters = {"support"};
  const auto r = run_verify(parse_config("{}"), o);
  const std::string text = render_text(r);
  EXPECT_NE(text.find("support"), std::string::npos);
  EXPECT_NE(text.find("UNSAT"), std::string::npos);
  const auto j = render_json(r);
  EXPECT_EQ(j["verify"][0]["name"], "support");
  EXPECT_EQ(j["verify"][0]["verdict"], "UNSAT");
}

TEST(Report, Smt2ExportDirectory) {
  const auto dir = std::filesystem::temp_directory_path() / "octoverify-test-smt2";
  std::filesystem::remove_all(dir);
  VerifyOptions o;
  o.filters = {"support"};
  o.smt2_dir = dir;
  run_verify(parse_config("{}"), o);
  EXPECT_TRUE(std::filesystem::exists(dir / "support.smt2"));
  std::filesystem::remove_all(dir);
}

TEST(Report, SimulateNominalFindsNoCounterexample) {
  const RunConfig c = parse_config(R"({"sim":{"trials":20,"horizon":1.0}})");
  const auto r = run_simulate(c, {});
  ASSERT_EQ(r.simulate.size(), 1u);
  EXPECT_FALSE(r.simulate[0].counterexample);
  EXPECT_EQ(r.simulate[0].trials, 20);
}

TEST(Report, SimulateInflatedDisturbanceWritesTrajectory) {
  const auto dir = std::filesystem::temp_directory_path() / "octoverify-test-sim";
  std::filesystem::remove_all(dir);
  const RunConfig c = parse_config(R"({"vehicle":{"delta_r_max":11.772},"sim":{"trials":20,"horizon":1.0}})");
  SimulateOptions o;
  o.out_dir = dir;
  const auto r = run_simulate(c, o);
  ASSERT_EQ(r.simulate.size(), 1u);
  EXPECT_TRUE(r.simulate[0].counterexample);
  ASSERT_FALSE(r.simulate[0].csv_path.empty());
  EXPECT_TRUE(std::filesystem::exists(r.simulate[0].csv_path));
  std::filesystem::remove_all(dir);
}

TEST(Report, SimulateRejectsZeroTrials) {
  RunConfig c;
  c.sim.trials = 0;
  EXPECT_THROW(run_simulate(c, {}), ConfigError);
}
