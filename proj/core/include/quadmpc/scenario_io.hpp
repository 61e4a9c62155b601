#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "quadmpc/sim.hpp"

namespace quadmpc {

/// Parses and validates a scenario document (JSON syntax). Unknown keys are
/// rejected; every field except name and waypoints has a default. overrides
/// are dotted key=value assignments applied before validation, e.g.
/// "ocp.horizon=10". source_name only labels error messages.
Scenario parse_scenario_text(const std::string& text, const std::string& source_name,
                             const std::vector<std::string>& overrides = {});

Scenario load_scenario(const std::filesystem::path& file,
                       const std::vector<std::string>& overrides = {});

/// Fully resolved scenario document (all defaults materialized); re-parsing
/// it yields an identical scenario.
std::string resolved_scenario_json(const Scenario& s);

/// Per-step trajectory table. Columns: t, the 10 state entries, the 4 input
/// entries, the 10 reference entries, deviation, iterations, solve_time,
/// kkt_residual, then one margin column per obstacle. Numbers are printed
/// with 9 significant digits. solve_time is written as 0 unless
/// include_timing is set, keeping the default artifact byte-reproducible.
std::string trajectory_csv(const SimLog& log, const Scenario& s, bool include_timing = false);

/// Metrics report document (JSON syntax) with every metrics field.
std::string metrics_json(const Metrics& m, const std::string& scenario_name);

Metrics parse_metrics_text(const std::string& text, const std::string& source_name);
Metrics load_metrics(const std::filesystem::path& file);

/// Human-readable comparison of two metrics reports, including the
/// percentage navigation-time increase of b over a.
std::string comparison_report(const Metrics& a, const Metrics& b, const std::string& name_a,
                              const std::string& name_b);

/// Reference curve samples as CSV rows t,x,y,z. Rejects samples < 2.
std::string path_csv(const Scenario& s, int samples);

/// Writes content to file via a temporary in the same directory plus rename.
void write_file_atomic(const std::filesystem::path& file, const std::string& content);

struct RunArtifacts {
  std::filesystem::path trajectory_csv;
  std::filesystem::path metrics_report;
  std::filesystem::path scenario_echo;
};

/// Runs a scenario and writes the three artifacts into output_dir. On an
/// aborted simulation the partial trajectory CSV and the scenario echo are
/// still written, the metrics report is skipped, and the log's abort flag is
/// reported back to the caller through the returned SimLog.
struct RunOutcome {
  RunArtifacts artifacts;
  SimLog log;
  Metrics metrics;
};
RunOutcome run_scenario_to_dir(const Scenario& s, const std::filesystem::path& output_dir,
                               bool include_timing = false);

}  // namespace quadmpc
