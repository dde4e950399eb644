// triform — case-file-driven front end for the flow solver.
//
//   triform run <case.json> [--out DIR]
//   triform convergence <case.json> --levels N --mode space|time [--out DIR]
//   triform validate <case.json>
//
// Exit codes: 0 success, 1 configuration/validation error,
// 2 solver non-convergence (partial outputs are still written).

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "triform/case.hpp"
#include "triform/errors.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitSolver = 2;

std::filesystem::path default_out(const std::filesystem::path& case_path) {
  return case_path.stem().string() + "_out";
}

int cmd_validate(const std::filesystem::path& case_path) {
  const triform::ValidationReport report = triform::validate_case(case_path);
  for (const std::string& e : report.errors)
    std::cout << "error: " << e << '\n';
  for (const std::string& w : report.warnings)
    std::cout << "warning: " << w << '\n';
  if (report.ok) {
    std::cout << "OK\n";
    return kExitOk;
  }
  return kExitConfig;
}

int cmd_run(const std::filesystem::path& case_path,
            std::filesystem::path out_dir) {
  triform::CaseConfig config;
  try {
    config = triform::load_case(case_path);
  } catch (const triform::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  config.solver.n_threads = triform::assembly_threads_from_env();
  if (out_dir.empty()) out_dir = default_out(case_path);

  try {
    const triform::RunArtifacts art = triform::run_case(config, out_dir);
    std::cout << art.summary.dump(2) << '\n';
    if (!art.completed) {
      std::cerr << "error: " << art.failure << '\n'
                << "partial outputs written to " << out_dir.string() << '\n';
      return kExitSolver;
    }
    return kExitOk;
  } catch (const triform::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const triform::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSolver;
  }
}

int cmd_convergence(const std::filesystem::path& case_path, int levels,
                    const std::string& mode, std::filesystem::path out_dir) {
  triform::CaseConfig config;
  try {
    config = triform::load_case(case_path);
  } catch (const triform::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  config.solver.n_threads = triform::assembly_threads_from_env();
  if (out_dir.empty()) out_dir = default_out(case_path);

  triform::ConvergenceReport report;
  try {
    report = triform::convergence_study(config, levels, mode, out_dir);
  } catch (const triform::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const triform::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSolver;
  }

  std::printf("# %-5s %-12s %-12s %-9s %-14s %-14s %-14s\n", "lvl",
              mode == "space" ? "h" : "dt", "dt", "dofs", "l2_velocity",
              "l2_pressure", "centerline");
  for (const triform::ConvergenceRow& r : report.rows)
    std::printf("  %-5d %-12.5g %-12.5g %-9lld %-14.6e %-14.6e %-14.6e\n",
                r.level, mode == "space" ? r.h : r.dt, r.dt,
                static_cast<long long>(r.dofs), r.l2_velocity, r.l2_pressure,
                r.centerline);
  std::printf("monotone: velocity=%s pressure=%s centerline=%s\n",
              report.monotone_velocity ? "yes" : "NO",
              report.monotone_pressure ? "yes" : "NO",
              report.monotone_centerline ? "yes" : "NO");
  if (!report.monotone_velocity || !report.monotone_centerline)
    std::cout << "warning: error sequence is not monotone\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"triform — incompressible flow solver driven by case files"};
  app.require_subcommand(1);

  std::string case_file;
  std::string out;

  CLI::App* run = app.add_subcommand("run", "time-march a case");
  run->add_option("case", case_file, "case file (JSON)")->required();
  run->add_option("--out", out, "output directory");

  std::string v_case;
  CLI::App* validate =
      app.add_subcommand("validate", "check a case file without solving");
  validate->add_option("case", v_case, "case file (JSON)")->required();

  std::string c_case, c_out, mode = "space";
  int levels = 3;
  CLI::App* conv =
      app.add_subcommand("convergence", "refinement study against the oracle");
  conv->add_option("case", c_case, "case file (JSON)")->required();
  conv->add_option("--levels", levels, "number of refinement levels")
      ->check(CLI::PositiveNumber);
  conv->add_option("--mode", mode, "space | time")
      ->check(CLI::IsMember({"space", "time"}));
  conv->add_option("--out", c_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return cmd_run(case_file, out);
  if (validate->parsed()) return cmd_validate(v_case);
  return cmd_convergence(c_case, levels, mode, c_out);
}
