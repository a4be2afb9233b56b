#ifndef ISACSIM_HARNESS_HPP
#define ISACSIM_HARNESS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "isacsim/agent.hpp"
#include "isacsim/baselines.hpp"
#include "isacsim/env.hpp"
#include "isacsim/scenario.hpp"

namespace isacsim {

// Campaign layer of an experiment: how many episodes, which seeds, which
// policies, which sweep, where the outputs go. Seeds are always explicit.
struct CampaignConfig {
  int episodes = 300;
  int eval_episodes = 50;
  std::vector<uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<std::string> policies{"agent", "random", "greedy"};
  std::string axis = "snr";
  std::vector<double> values;
  std::string out_dir = "runs";
  // Checkpoint path prefix; per-seed files are <checkpoint>_seed<N>.bin/.json.
  // Empty means: evaluate the untrained (freshly initialized) agent.
  std::string checkpoint;
  bool write_traces = false;
  int64_t exhaustive_budget = 4096;

  void validate() const;
};

void to_json(nlohmann::json& j, const CampaignConfig& c);
void from_json(const nlohmann::json& j, CampaignConfig& c);

struct ExperimentConfig {
  ScenarioConfig scenario;
  AgentConfig agent;
  CampaignConfig campaign;

  void validate() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

ExperimentConfig load_experiment_config(const std::string& path);
void save_experiment_config(const ExperimentConfig& config, const std::string& path);

// One logged subframe of a rollout.
struct TraceRow {
  int t = 0;
  int user_index = -1;      // -1 when the whole precoder was replaced
  int codeword_index = -1;
  double reward = 0.0;
  double cost = 0.0;
  double se = 0.0;
  double crlb = 0.0;
  double lambda = 0.0;
  int violations = 0;
};

struct EpisodeRollout {
  EpisodeStats stats;
  std::vector<TraceRow> rows;     // filled only when requested
  std::vector<double> crlbs;      // per subframe, +inf allowed
  std::vector<double> ses;        // per subframe
};

// Non-owning policy handle for rollouts; `bundle` is required for kAgent.
struct PolicyRef {
  PolicyKind kind = PolicyKind::kRandom;
  AgentBundle* bundle = nullptr;
  int64_t exhaustive_budget = 4096;
};

// One greedy (no exploration, no learning) episode under the given policy.
EpisodeRollout rollout_episode(Environment& env, const PolicyRef& policy,
                               Rng& policy_rng, int episode_index, bool with_rows);

struct SeedResult {
  uint64_t seed = 0;
  TrainingLog train_log;
  std::vector<EpisodeStats> eval_stats;
  std::string checkpoint_base;
};

// Sweep results: one row per axis value, one CRLB and one SE column per
// policy. CRLB cells average the finite per-subframe values; SE cells average
// all per-subframe values.
struct SweepTable {
  std::string axis;
  std::vector<std::string> policies;
  std::vector<double> values;
  std::vector<std::vector<double>> crlb;  // [value][policy]
  std::vector<std::vector<double>> se;    // [value][policy]
};

struct RunRecord {
  ExperimentConfig config;
  std::vector<SeedResult> seeds;
  std::vector<SweepTable> sweeps;
};

// Trains per seed, saves checkpoints, runs the no-exploration evaluation
// phase, and writes config.json, per-seed train/eval CSV logs, optional
// per-episode trace CSVs and summary.json into campaign.out_dir.
RunRecord run_training(const ExperimentConfig& config);

// Evaluates one policy over the campaign seeds without training. Agent
// checkpoints load from campaign.checkpoint when set; an empty prefix
// evaluates the untrained agent. Writes eval CSV logs into out_dir.
RunRecord run_eval(const ExperimentConfig& config, PolicyKind kind);

// Evaluates campaign.policies at each axis value over the campaign seeds.
// axis "snr" reinterprets values as SNR in dB (adjusting P_t); axis "users"
// reinterprets values as integral user counts. Writes sweep_<axis>.csv.
SweepTable run_sweep(const ExperimentConfig& config, const std::string& axis,
                     const std::vector<double>& values);

// Plot-ready CSVs into <out_dir>: learning_curves.csv (reward/cost per
// episode with the episode budget), crlb_vs_snr.csv and se_vs_users.csv from
// matching sweeps. Files without data still get their header row.
void export_plotdata(const RunRecord& record, const std::string& out_dir);

// Rebuilds a RunRecord from a run directory written by run_training and
// run_sweep (config.json, train_log_seed*.csv, sweep_*.csv).
RunRecord load_run_record(const std::string& dir);

// Shortest round-trippable decimal form, '.' decimal point.
std::string format_g17(double v);

// Linear-interpolation quantile of unsorted data, q in [0,1].
double quantile(std::vector<double> values, double q);

}  // namespace isacsim

#endif  // ISACSIM_HARNESS_HPP
