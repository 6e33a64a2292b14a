#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include <blocksolve/errors.hpp>

#include "blocksolve/app/checks.hpp"
#include "blocksolve/app/config.hpp"
#include "blocksolve/app/fixtures.hpp"
#include "blocksolve/app/plotdata.hpp"
#include "blocksolve/app/runner.hpp"

namespace app = blocksolve::app;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;

int cmd_run(const std::string& path, std::size_t threads) {
  const app::RunConfig cfg = app::load_run_config(path);
  const auto dir = std::filesystem::absolute(path).parent_path().string();
  const app::RunResult r = app::run_experiment(cfg, dir, threads);
  std::cout << "config " << r.config_hash << '\n';
  for (const auto& t : r.traces) std::cout << "trace " << t << '\n';
  std::cout << "summary " << r.summary_path << '\n';
  std::cout << "bounds " << (r.bounds_satisfied ? "satisfied" : "VIOLATED") << '\n';
  return r.bounds_satisfied ? kOk : kFailed;
}

int cmd_check(const std::string& suite, const std::string& fixtures, std::size_t threads) {
  app::CheckOptions o;
  o.fixture_dir = fixtures;
  o.threads = threads;
  std::size_t failed = 0, total = 0;
  app::run_suite(suite, o, [&](const app::CheckResult& r) {
    std::cout << app::format_result(r) << std::endl;
    ++total;
    if (!r.passed) ++failed;
  });
  std::cout << (total - failed) << "/" << total << " passed\n";
  return failed == 0 ? kOk : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Randomized block-coordinate optimistic gradient solvers and federated simulations"};
  cli.require_subcommand(1);

  std::string config_path;
  std::size_t threads = 0;
  auto* run = cli.add_subcommand("run", "Run an experiment described by a JSON config");
  run->add_option("config", config_path, "Config file")->required();
  run->add_option("--threads", threads, "Parallel seeds (default: BLOCKSOLVE_THREADS or all cores)");

  std::string suite, fixture_dir;
  auto* check = cli.add_subcommand("check", "Run a check suite: lemmas, solvers, federated or all");
  check->add_option("suite", suite, "Suite name")->required();
  check->add_option("--fixtures", fixture_dir, "Directory holding lemmas.json");
  check->add_option("--threads", threads, "Parallel seeds");

  std::string run_dir, plot_out;
  auto* plot = cli.add_subcommand("export-plotdata", "Aggregate a run directory into plotdata.csv");
  plot->add_option("dir", run_dir, "Run output directory")->required();
  plot->add_option("-o,--output", plot_out, "Output path (default DIR/plotdata.csv)");

  std::string fixture_out;
  auto* fix = cli.add_subcommand("write-fixtures", "Regenerate lemmas.json from the reference computations");
  fix->add_option("dir", fixture_out, "Target directory")->required();

  CLI11_PARSE(cli, argc, argv);

  try {
    if (*run) return cmd_run(config_path, threads);
    if (*check) return cmd_check(suite, fixture_dir, threads);
    if (*plot) {
      std::cout << app::export_plotdata(run_dir, plot_out) << '\n';
      return kOk;
    }
    if (*fix) {
      std::cout << app::write_fixtures(fixture_out) << '\n';
      return kOk;
    }
  } catch (const app::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const blocksolve::InfeasibleParameters& e) {
    std::cerr << "infeasible parameters: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailed;
  }
  return kUsage;
}
