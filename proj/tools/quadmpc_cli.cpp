// Command-line front end: run scenarios, compare metrics reports, sample
// reference paths. Exit codes: 0 success, 1 validation error, 2 simulation
// abort.

#include <CLI11.hpp>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "quadmpc/scenario_io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitSimAbort = 2;

struct RunJob {
  std::filesystem::path scenario_file;
  int exit_code = kExitOk;
};

int run_one(const std::filesystem::path& file, const std::filesystem::path& out_dir,
            const std::vector<std::string>& overrides, bool timing_csv, std::mutex& io_mutex) {
  quadmpc::Scenario scenario;
  try {
    scenario = quadmpc::load_scenario(file, overrides);
  } catch (const std::exception& e) {
    std::scoped_lock lock(io_mutex);
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }

  quadmpc::RunOutcome outcome;
  try {
    outcome = quadmpc::run_scenario_to_dir(scenario, out_dir, timing_csv);
  } catch (const std::exception& e) {
    std::scoped_lock lock(io_mutex);
    std::cerr << "error: " << scenario.name << ": " << e.what() << "\n";
    return kExitValidation;
  }

  std::scoped_lock lock(io_mutex);
  if (outcome.log.aborted) {
    std::cerr << "error: " << scenario.name << ": simulation aborted: "
              << outcome.log.abort_reason << "\n"
              << "partial trajectory preserved at " << outcome.artifacts.trajectory_csv.string()
              << "\n";
    return kExitSimAbort;
  }
  std::cout << scenario.name << ": wrote\n"
            << "  " << outcome.artifacts.trajectory_csv.string() << "\n"
            << "  " << outcome.artifacts.metrics_report.string() << "\n"
            << "  " << outcome.artifacts.scenario_echo.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Receding-horizon quadrotor trajectory tracking with obstacle avoidance"};
  app.require_subcommand(1);

  // run
  std::vector<std::string> scenario_files;
  std::string output_dir = "out";
  std::vector<std::string> overrides;
  int jobs = 1;
  bool timing_csv = false;
  CLI::App* run = app.add_subcommand("run", "Run closed-loop scenario simulations");
  run->add_option("scenarios", scenario_files, "Scenario file(s), JSON")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("-o,--output-dir", output_dir, "Directory for the run artifacts");
  run->add_option("--set", overrides, "Override a scenario field, dotted key=value (repeatable)")
      ->type_size(1)
      ->allow_extra_args(false);
  run->add_option("--jobs", jobs, "Run scenario files concurrently")->check(CLI::PositiveNumber);
  run->add_flag("--timing-csv", timing_csv,
                "Write measured per-step solver wall time into the solve_time CSV column "
                "(default writes 0 so identical runs produce byte-identical CSVs)");

  // compare
  std::string metrics_a, metrics_b;
  CLI::App* compare = app.add_subcommand("compare", "Compare two metrics reports");
  compare->add_option("baseline", metrics_a, "Baseline metrics report")->required();
  compare->add_option("other", metrics_b, "Metrics report to compare against the baseline")
      ->required();

  // path
  std::string path_scenario;
  int samples = 101;
  CLI::App* path_cmd = app.add_subcommand("path", "Print the sampled reference path as CSV");
  path_cmd->add_option("scenario", path_scenario, "Scenario file, JSON")->required();
  path_cmd->add_option("--samples", samples, "Number of samples");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    std::mutex io_mutex;
    std::vector<RunJob> queue;
    for (const std::string& f : scenario_files) queue.push_back({f, kExitOk});

    const int workers = std::min<int>(jobs, static_cast<int>(queue.size()));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= queue.size()) break;
        queue[i].exit_code =
            run_one(queue[i].scenario_file, output_dir, overrides, timing_csv, io_mutex);
      }
    };
    if (workers <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
      for (std::thread& t : pool) t.join();
    }

    int exit_code = kExitOk;
    for (const RunJob& job : queue) {
      if (job.exit_code == kExitSimAbort) return kExitSimAbort;
      if (job.exit_code != kExitOk) exit_code = job.exit_code;
    }
    return exit_code;
  }

  if (compare->parsed()) {
    try {
      const quadmpc::Metrics a = quadmpc::load_metrics(metrics_a);
      const quadmpc::Metrics b = quadmpc::load_metrics(metrics_b);
      std::cout << quadmpc::comparison_report(
          a, b, std::filesystem::path(metrics_a).stem().string(),
          std::filesystem::path(metrics_b).stem().string());
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitValidation;
    }
    return kExitOk;
  }

  if (path_cmd->parsed()) {
    try {
      const quadmpc::Scenario scenario = quadmpc::load_scenario(path_scenario);
      std::cout << quadmpc::path_csv(scenario, samples);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitValidation;
    }
    return kExitOk;
  }

  return kExitOk;
}
