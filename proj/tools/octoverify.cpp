#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "octoverify/config.hpp"
#include "octoverify/report.hpp"
#include "octoverify/smt2.hpp"

namespace {

struct GlobalOptions {
  std::string config_path;
  std::optional<double> delta;
  std::optional<int> jobs;
  std::vector<std::string> filters;
  std::optional<std::string> checkpoint;
  std::optional<std::uint64_t> seed;
  bool quiet{false};
};

octo::RunConfig load_config(const GlobalOptions& g) {
  if (g.config_path.empty()) return octo::parse_config("{}");
  std::ifstream is(g.config_path);
  if (!is) throw octo::ConfigError("cannot open config file " + g.config_path);
  std::stringstream ss;
  ss << is.rdbuf();
  return octo::parse_config(ss.str());
}

octo::VerifyOptions verify_options(const GlobalOptions& g, bool auto_bisect, const std::string& smt2_dir) {
  octo::VerifyOptions o;
  o.filters = g.filters;
  o.delta = g.delta;
  o.workers = g.jobs;
  if (g.checkpoint) o.checkpoint_dir = *g.checkpoint;
  if (!smt2_dir.empty()) o.smt2_dir = smt2_dir;
  o.auto_bisect = auto_bisect;
  if (!g.quiet) o.log = [](const std::string& s) { std::cerr << s << '\n'; };
  return o;
}

octo::SimulateOptions simulate_options(const GlobalOptions& g, const std::string& out_dir) {
  octo::SimulateOptions o;
  o.workers = g.jobs;
  o.seed = g.seed;
  o.out_dir = out_dir;
  if (!g.quiet) o.log = [](const std::string& s) { std::cerr << s << '\n'; };
  return o;
}

void emit(const octo::Report& r, const std::string& json_path) {
  std::cout << octo::render_text(r);
  if (!json_path.empty()) std::ofstream(json_path) << octo::render_json(r).dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Barrier-function invariance and rotor-allocation verification for an octorotor inner loop"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--config", g.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--delta", g.delta, "Solver precision for every task")->check(CLI::PositiveNumber);
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::Range(1, 1024));
  app.add_option("--filter", g.filters, "Run only tasks whose name contains this text")->delimiter(',');
  app.add_option("--checkpoint", g.checkpoint, "Directory for resumable solver checkpoints");
  app.add_option("--seed", g.seed, "Seed for simulation trials");
  app.add_flag("--quiet", g.quiet, "No progress output");

  std::string json_path, smt2_dir, out_dir = ".", smt2_out = "smt2";
  bool auto_bisect = false;

  auto* verify = app.add_subcommand("verify", "Solve the verification tasks");
  verify->add_flag("--auto-bisect", auto_bisect, "Search the largest provable mu_max for failing rotor-bound tasks");
  verify->add_option("--json", json_path, "Also write the report as JSON");
  verify->add_option("--smt2-dir", smt2_dir, "Also export each task as SMT-LIB2");

  auto* simulate = app.add_subcommand("simulate", "Run falsification trials per failure scenario");
  simulate->add_option("--out", out_dir, "Directory for counterexample trajectories");
  simulate->add_option("--json", json_path, "Also write the report as JSON");

  auto* exporter = app.add_subcommand("export-smt2", "Write each task as an SMT-LIB2 script");
  exporter->add_option("--out", smt2_out, "Output directory");

  auto* report = app.add_subcommand("report", "Verify and simulate, then print the combined report");
  report->add_flag("--auto-bisect", auto_bisect, "Search the largest provable mu_max for failing rotor-bound tasks");
  report->add_option("--out", out_dir, "Directory for counterexample trajectories");
  report->add_option("--json", json_path, "Also write the report as JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    const octo::RunConfig cfg = load_config(g);
    if (verify->parsed()) {
      const auto r = octo::run_verify(cfg, verify_options(g, auto_bisect, smt2_dir));
      emit(r, json_path);
      return r.all_decided() ? 0 : 1;
    }
    if (simulate->parsed()) {
      emit(octo::run_simulate(cfg, simulate_options(g, out_dir)), json_path);
      return 0;
    }
    if (exporter->parsed()) {
      const auto tasks = octo::selected_tasks(cfg, g.filters);
      if (tasks.empty()) std::cerr << "warning: no task matches the filter\n";
      std::filesystem::create_directories(smt2_out);
      for (const auto& t : tasks) {
        double delta = g.delta.value_or(t.delta.value_or(cfg.solver.delta));
        const auto path = std::filesystem::path(smt2_out) / (octo::detail::file_stem(t.name) + ".smt2");
        std::ofstream(path) << octo::export_smt2(t.formula, t.box, delta);
        std::cout << path.string() << '\n';
      }
      return 0;
    }
    if (report->parsed()) {
      auto r = octo::run_verify(cfg, verify_options(g, auto_bisect, ""));
      auto s = octo::run_simulate(cfg, simulate_options(g, out_dir));
      r.simulate = std::move(s.simulate);
      r.warnings.insert(r.warnings.end(), s.warnings.begin(), s.warnings.end());
      emit(r, json_path);
      return r.all_decided() ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
