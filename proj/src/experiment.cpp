#include "actsafe/experiment.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "actsafe/agent.hpp"
#include "actsafe/util.hpp"

namespace actsafe {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

struct SeedOutcome {
  std::uint64_t seed = 0;
  RunResult result;
};

void write_metrics(const fs::path& path, const std::vector<SeedOutcome>& outcomes) {
  std::ofstream out(path);
  out << kMetricsHeader << "\n";
  for (const auto& outcome : outcomes) {
    for (const auto& rec : outcome.result.records) {
      out << outcome.seed << ',' << rec.episode << ',' << to_string(rec.phase) << ','
          << format_shortest(rec.episode_reward) << ',' << format_shortest(rec.episode_cost)
          << ',' << format_shortest(rec.cumulative_cost) << ','
          << format_shortest(outcome.result.zero_shot.mean_reward) << ','
          << format_shortest(outcome.result.zero_shot.mean_cost) << ','
          << static_cast<long long>(rec.wall_ms) << "\n";
    }
  }
}

void write_trajectories(const fs::path& path, const std::vector<SeedOutcome>& outcomes) {
  std::ofstream out(path);
  for (const auto& outcome : outcomes) {
    for (const auto& rec : outcome.result.records) {
      json line;
      line["seed"] = outcome.seed;
      line["episode"] = rec.episode;
      json states = json::array();
      for (int t = 0; t < rec.trajectory.states.cols(); ++t) {
        json col = json::array();
        for (int d = 0; d < rec.trajectory.states.rows(); ++d)
          col.push_back(rec.trajectory.states(d, t));
        states.push_back(std::move(col));
      }
      line["states"] = std::move(states);
      json actions = json::array();
      for (int t = 0; t < rec.trajectory.actions.cols(); ++t)
        actions.push_back(rec.trajectory.actions(0, t));
      line["actions"] = std::move(actions);
      json costs = json::array();
      for (int t = 0; t < rec.trajectory.costs.size(); ++t)
        costs.push_back(rec.trajectory.costs[t]);
      line["costs"] = std::move(costs);
      out << line.dump() << "\n";
    }
  }
}

}  // namespace

int run_command(const std::string& config_path, const std::string& out_override, int jobs_override,
                std::ostream& out, std::ostream& err) {
  ExperimentConfig config;
  try {
    config = load_config(config_path);
  } catch (const ConfigError& e) {
    err << e.what() << "\n";
    return kExitUsage;
  }
  if (!out_override.empty()) config.out_dir = out_override;
  if (jobs_override > 0) config.jobs = jobs_override;

  ResolvedExperiment experiment;
  try {
    experiment = resolve_experiment(config);
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  }

  const std::string started = timestamp_utc();
  fs::path dir(experiment.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    err << "cannot create output directory '" << dir.string() << "': " << ec.message() << "\n";
    return kExitRuntime;
  }

  out << "run: env=" << experiment.env_name << " mode=" << experiment.mode_name
      << " seeds=" << experiment.seeds.size() << " episodes="
      << experiment.agent.total_episodes << " jobs=" << experiment.jobs << "\n";

  std::vector<SeedOutcome> outcomes(experiment.seeds.size());
  for (std::size_t base = 0; base < experiment.seeds.size();
       base += static_cast<std::size_t>(experiment.jobs)) {
    const std::size_t stop =
        std::min(base + static_cast<std::size_t>(experiment.jobs), experiment.seeds.size());
    std::vector<std::future<RunResult>> futures;
    for (std::size_t i = base; i < stop; ++i) {
      const std::uint64_t seed = experiment.seeds[i];
      futures.push_back(std::async(std::launch::async, [&, seed]() {
        return run_agent(experiment.spec, experiment.agent, seed);
      }));
    }
    for (std::size_t i = base; i < stop; ++i) {
      outcomes[i].seed = experiment.seeds[i];
      outcomes[i].result = futures[i - base].get();
      out << "  seed " << outcomes[i].seed << ": "
          << (outcomes[i].result.error ? "FAILED" : "done") << "\n";
    }
  }

  std::sort(outcomes.begin(), outcomes.end(),
            [](const SeedOutcome& a, const SeedOutcome& b) { return a.seed < b.seed; });

  write_metrics(dir / "metrics.csv", outcomes);
  write_trajectories(dir / "trajectories.jsonl", outcomes);
  {
    std::ofstream echo(dir / "config.resolved");
    echo << serialize_config(experiment.echo);
  }
  {
    json meta;
    meta["version"] = kVersion;
    meta["env"] = experiment.env_name;
    meta["mode"] = experiment.mode_name;
    meta["seeds"] = experiment.seeds;
    meta["episodes"] = experiment.agent.total_episodes;
    meta["eval_episodes"] = experiment.agent.eval_episodes;
    meta["started"] = started;
    meta["finished"] = timestamp_utc();
    json errors = json::object();
    for (const auto& outcome : outcomes)
      if (outcome.result.error)
        errors[std::to_string(outcome.seed)] = *outcome.result.error;
    meta["errors"] = std::move(errors);
    std::ofstream metaout(dir / "run.meta");
    metaout << meta.dump(2) << "\n";
  }

  bool failed = false;
  for (const auto& outcome : outcomes) {
    if (outcome.result.error) {
      err << "seed " << outcome.seed << " failed: " << *outcome.result.error << "\n";
      failed = true;
    }
  }
  out << "artifacts written to " << dir.string() << "\n";
  return failed ? kExitRuntime : kExitOk;
}

namespace {

struct RunArtifacts {
  std::string mode;
  double cost_threshold = 0.0;
  // per seed
  std::map<std::uint64_t, double> final_cumulative_cost;
  std::map<std::uint64_t, double> zero_shot_reward;
  int violating_episodes = 0;
};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

RunArtifacts read_run(const fs::path& metrics_path) {
  RunArtifacts run;
  const fs::path config_path = metrics_path.parent_path() / "config.resolved";
  if (!fs::exists(config_path))
    throw std::runtime_error("missing artifact: " + config_path.string());
  const ExperimentConfig config = load_config(config_path.string());
  run.mode = config.mode;
  run.cost_threshold = config.env_cost_threshold;

  std::ifstream in(metrics_path);
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader)
    throw std::runtime_error("bad metrics header in " + metrics_path.string());
  std::map<std::uint64_t, int> last_episode;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 9) throw std::runtime_error("bad metrics row in " + metrics_path.string());
    const std::uint64_t seed = std::stoull(f[0]);
    const int episode = std::stoi(f[1]);
    const double j_c = std::stod(f[4]);
    const double cumulative = std::stod(f[5]);
    const double zero_shot = std::stod(f[6]);
    if (f[2] != "warmup" && j_c > run.cost_threshold) ++run.violating_episodes;
    auto it = last_episode.find(seed);
    if (it == last_episode.end() || episode >= it->second) {
      last_episode[seed] = episode;
      run.final_cumulative_cost[seed] = cumulative;
      run.zero_shot_reward[seed] = zero_shot;
    }
  }
  return run;
}

}  // namespace

double normalized_performance(double value, double best) {
  if (best < 0.0) return best / value;
  if (best > 0.0) return value / best;
  return value == 0.0 ? 1.0 : 0.0;
}

std::vector<ModeSummary> summarize_runs(const std::string& dir) {
  std::vector<fs::path> metric_files;
  for (const auto& entry : fs::recursive_directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().filename() == "metrics.csv")
      metric_files.push_back(entry.path());
  std::sort(metric_files.begin(), metric_files.end());
  if (metric_files.empty()) throw std::runtime_error("no metrics.csv found under " + dir);

  std::map<std::string, std::vector<RunArtifacts>> by_mode;
  for (const auto& path : metric_files) {
    RunArtifacts run = read_run(path);
    by_mode[run.mode].push_back(std::move(run));
  }

  // best mean zero-shot reward across modes, the normalization reference
  double best = -std::numeric_limits<double>::infinity();
  std::map<std::string, std::vector<double>> rewards_by_mode;
  for (const auto& [mode, runs] : by_mode) {
    std::vector<double> rewards;
    for (const auto& run : runs)
      for (const auto& [seed, value] : run.zero_shot_reward) rewards.push_back(value);
    rewards_by_mode[mode] = rewards;
    best = std::max(best, mean(rewards));
  }

  std::vector<ModeSummary> summaries;
  for (const auto& [mode, runs] : by_mode) {
    ModeSummary s;
    s.mode = mode;
    std::vector<double> final_costs;
    for (const auto& run : runs) {
      for (const auto& [seed, value] : run.final_cumulative_cost) final_costs.push_back(value);
      s.violating_episodes += run.violating_episodes;
    }
    const auto& rewards = rewards_by_mode[mode];
    std::vector<double> normalized(rewards.size());
    std::transform(rewards.begin(), rewards.end(), normalized.begin(),
                   [&](double r) { return normalized_performance(r, best); });
    s.seeds = static_cast<int>(final_costs.size());
    s.cumulative_cost_median = median(final_costs);
    s.cumulative_cost_se = standard_error(final_costs);
    s.zero_shot_reward_mean = mean(rewards);
    s.zero_shot_reward_se = standard_error(rewards);
    s.normalized_reward_median = median(normalized);
    s.normalized_reward_se = standard_error(normalized);
    summaries.push_back(std::move(s));
  }
  return summaries;
}

int report_command(const std::string& dir, std::ostream& out, std::ostream& err) {
  std::vector<ModeSummary> summaries;
  try {
    summaries = summarize_runs(dir);
  } catch (const std::exception& e) {
    err << e.what() << "\n";
    return kExitRuntime;
  }

  const std::string header =
      "mode,seeds,cumulative_cost_median,cumulative_cost_se,zero_shot_J_r_mean,"
      "zero_shot_J_r_se,normalized_J_r_median,normalized_J_r_se,violating_episodes";
  std::ofstream csv(fs::path(dir) / "summary.csv");
  csv << header << "\n";
  out << header << "\n";
  for (const auto& s : summaries) {
    std::ostringstream row;
    row << s.mode << ',' << s.seeds << ',' << format_shortest(s.cumulative_cost_median) << ','
        << format_shortest(s.cumulative_cost_se) << ','
        << format_shortest(s.zero_shot_reward_mean) << ','
        << format_shortest(s.zero_shot_reward_se) << ','
        << format_shortest(s.normalized_reward_median) << ','
        << format_shortest(s.normalized_reward_se) << ',' << s.violating_episodes;
    csv << row.str() << "\n";
    out << row.str() << "\n";
  }
  return kExitOk;
}

int check_command(const std::string& suite, std::uint64_t seed, std::ostream& out,
                  std::ostream& err) {
  std::vector<CheckLine> lines;
  try {
    lines = run_suite(suite, seed);
  } catch (const std::invalid_argument& e) {
    err << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "check failed to run: " << e.what() << "\n";
    return kExitRuntime;
  }

  bool all_pass = true;
  for (const auto& line : lines) {
    json obj;
    obj["name"] = line.name;
    obj["estimate"] = line.estimate;
    obj["tolerance"] = line.tolerance;
    obj["pass"] = line.pass;
    if (!line.gates) obj["gates"] = false;
    out << obj.dump() << "\n";
    if (line.gates && !line.pass) all_pass = false;
  }
  return all_pass ? kExitOk : kExitRuntime;
}

}  // namespace actsafe
