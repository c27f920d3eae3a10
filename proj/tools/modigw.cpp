// modigw command-line driver: run scenarios, rebuild reports, print diagnostics.
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "modigw/harness.hpp"

namespace {

// Relative output directories are resolved against MODIGW_OUTPUT_ROOT when set.
std::filesystem::path resolve_out(const std::string& out) {
  std::filesystem::path p(out);
  if (p.is_relative()) {
    if (const char* root = std::getenv("MODIGW_OUTPUT_ROOT"); root && *root) {
      p = std::filesystem::path(root) / p;
    }
  }
  return p;
}

std::vector<std::string> collect_overrides(const std::vector<std::string>& overrides,
                                           const std::string& seeds) {
  std::vector<std::string> all = overrides;
  if (!seeds.empty()) {
    std::string list = "[";
    std::stringstream in(seeds);
    std::string item;
    bool first = true;
    while (std::getline(in, item, ',')) {
      if (item.empty()) continue;
      if (item.find_first_not_of("0123456789") != std::string::npos) {
        throw modigw::InvalidArgument("--seeds: '" + item + "' is not a non-negative integer");
      }
      list += (first ? "" : ",") + item;
      first = false;
    }
    all.push_back("run.seeds=" + list + "]");
  }
  return all;
}

int cmd_run(const std::string& scenario_path, const std::string& out, const std::string& seeds,
            const std::vector<std::string>& overrides, std::size_t threads) {
  const auto scenario = modigw::load_scenario(scenario_path, collect_overrides(overrides, seeds));
  const auto dir = resolve_out(out);
  std::cerr << "running '" << scenario.name << "' (" << modigw::to_string(scenario.algorithm.kind)
            << ", T=" << scenario.run.horizon << ", " << scenario.seeds.size() << " seeds) -> "
            << dir.string() << '\n';
  const auto results = modigw::run_scenario(scenario, dir, threads);
  std::cout << modigw::write_report(dir, results, scenario.run.horizon);
  for (const auto& r : results) {
    if (!r.error.empty()) return 3;
  }
  return 0;
}

int cmd_report(const std::string& dir) {
  const std::string summary = modigw::report_directory(resolve_out(dir));
  std::cout << summary;
  return summary.find("FAILED") == std::string::npos ? 0 : 3;
}

int cmd_diagnose(const std::string& scenario_path, const std::vector<std::string>& overrides) {
  const auto s = modigw::load_scenario(scenario_path, overrides);
  const auto d = modigw::diagnose(s.env, s.classes, s.run.rate(), s.run.c0, s.run.delta,
                                  s.run.tau1);
  std::cout << std::setprecision(6);
  std::cout << "class  d     b(uniform)   B lower      B upper      kappa        m*\n";
  for (std::size_t i = 0; i < s.classes.size(); ++i) {
    std::cout << std::left << std::setw(7) << i + 1 << std::setw(6) << s.classes[i].dim()
              << std::setw(13) << d.b_uniform[i] << std::setw(13) << d.b_lower[i]
              << std::setw(13) << d.b_upper[i] << std::setw(13)
              << (std::to_string(d.kappa_lower[i]) + (d.kappa_exact[i] ? "" : " (lb)"));
    if (d.m_star[i] == modigw::kUnbounded) {
      std::cout << "inf";
    } else {
      std::cout << d.m_star[i];
    }
    std::cout << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model selection for contextual bandits with inverse gap weighting"};
  app.require_subcommand(1);

  std::string scenario_path, out, seeds, report_dir;
  std::vector<std::string> overrides;
  std::size_t threads = 0;

  auto* run = app.add_subcommand("run", "run a scenario for every seed and write logs");
  run->add_option("scenario", scenario_path, "scenario JSON file")->required();
  run->add_option("--out", out, "output directory (relative paths use $MODIGW_OUTPUT_ROOT)")
      ->required();
  run->add_option("--seeds", seeds, "comma-separated seeds, replaces run.seeds");
  run->add_option("--override", overrides, "dotted key=value, may be repeated");
  run->add_option("--threads", threads, "worker threads (0 = hardware concurrency)");

  auto* report = app.add_subcommand("report", "rebuild CSV summaries from a run directory");
  report->add_option("dir", report_dir, "directory written by run")->required();

  auto* diag = app.add_subcommand("diagnose", "print misspecification levels and safe epochs");
  diag->add_option("scenario", scenario_path, "scenario JSON file")->required();
  diag->add_option("--override", overrides, "dotted key=value, may be repeated");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(scenario_path, out, seeds, overrides, threads);
    if (*report) return cmd_report(report_dir);
    if (*diag) return cmd_diagnose(scenario_path, overrides);
  } catch (const modigw::InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
