#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "actsafe/config.hpp"

namespace actsafe {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kMetricsHeader =
    "seed,episode,phase,J_r,J_c,cumulative_cost,zero_shot_J_r,zero_shot_J_c,wall_ms";

// Exit codes shared by the CLI: 0 success, 1 runtime failure, 2 usage or
// config error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Runs the configured experiment (seeds in parallel workers) and writes
// metrics.csv, trajectories.jsonl, config.resolved and run.meta into the
// output directory. Partial artifacts are kept on runtime failure.
int run_command(const std::string& config_path, const std::string& out_override, int jobs_override,
                std::ostream& out, std::ostream& err);

// Aggregates every run found under dir into summary.csv: per mode, the
// median/SE of the final cumulative cost and of the normalized zero-shot
// reward (normalized against the best mode present).
int report_command(const std::string& dir, std::ostream& out, std::ostream& err);

// Runs a named verification suite; one JSON object per check on stdout.
// Suites: gp-oracle, calibration, lemmas, planner-props, all.
int check_command(const std::string& suite, std::uint64_t seed, std::ostream& out,
                  std::ostream& err);

struct ModeSummary {
  std::string mode;
  int seeds = 0;
  double cumulative_cost_median = 0.0;
  double cumulative_cost_se = 0.0;
  double zero_shot_reward_mean = 0.0;
  double zero_shot_reward_se = 0.0;
  double normalized_reward_median = 0.0;
  double normalized_reward_se = 0.0;
  int violating_episodes = 0;  // learning episodes with J_c > d
};

// Report internals, exposed for tests.
std::vector<ModeSummary> summarize_runs(const std::string& dir);
double normalized_performance(double value, double best);

// One pass/fail line in a check report.
struct CheckLine {
  std::string name;
  double estimate = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  bool gates = true;  // negative controls report but never gate
};

std::vector<CheckLine> run_suite(const std::string& suite, std::uint64_t seed);

// Individual suites; the acceptance tests reuse them at larger sizes.
std::vector<CheckLine> gp_oracle_suite(int datasets, std::uint64_t seed);
std::vector<CheckLine> calibration_suite(std::uint64_t seed);
std::vector<CheckLine> lemmas_suite(std::uint64_t seed, int pairs = 20);
std::vector<CheckLine> planner_props_suite(std::uint64_t seed, int instances = 50);

}  // namespace actsafe
