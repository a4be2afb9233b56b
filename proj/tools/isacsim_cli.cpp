// Command-line front end; talks to the simulator exclusively through the C
// API so it doubles as a smoke test of the shared library surface.
#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "isacsim/isacsim.h"

namespace {

struct ConfigDeleter {
  void operator()(isacsim_config* c) const { isacsim_config_destroy(c); }
};
using ConfigHandle = std::unique_ptr<isacsim_config, ConfigDeleter>;

int fail(const char* when) {
  std::fprintf(stderr, "isacsim: %s: %s\n", when, isacsim_last_error());
  return 1;
}

std::string json_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out += c; break;
    }
  }
  out += "\"";
  return out;
}

template <typename T>
std::string json_array(const std::vector<T>& values) {
  std::string out = "[";
  for (size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ",";
    out += std::to_string(values[i]);
  }
  out += "]";
  return out;
}

std::string json_array(const std::vector<double>& values) {
  std::string out = "[";
  char buf[64];
  for (size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ",";
    std::snprintf(buf, sizeof(buf), "%.17g", values[i]);
    out += buf;
  }
  out += "]";
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ISAC precoding simulator"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  std::string config_path;
  std::string out_dir;
  std::string policy = "agent";
  std::string axis;
  std::vector<double> values;
  std::vector<uint64_t> seeds;
  int64_t seed = -1;
  int64_t episodes = -1;
  int64_t eval_episodes = -1;
  std::string checkpoint;
  bool write_traces = false;

  app.add_option("--config", config_path, "Experiment config JSON file");
  app.add_option("--out", out_dir, "Output directory (run directory for export)");
  app.add_option("--seed", seed, "Single seed, shorthand for --seeds N");
  app.add_option("--seeds", seeds, "Explicit seed list")->delimiter(',');
  app.add_option("--episodes", episodes, "Training episodes per seed");
  app.add_option("--eval-episodes", eval_episodes, "Evaluation episodes per seed");
  app.add_option("--checkpoint", checkpoint, "Checkpoint path prefix for agent eval");
  app.add_flag("--traces", write_traces, "Write per-episode trace CSVs");

  CLI::App* cmd_train = app.add_subcommand("train", "Train the agent and evaluate it");
  CLI::App* cmd_eval = app.add_subcommand("eval", "Evaluate one policy");
  cmd_eval->add_option("--policy", policy, "agent|random|greedy|exhaustive");
  CLI::App* cmd_sweep = app.add_subcommand("sweep", "Metric sweep over snr or users");
  cmd_sweep->add_option("--axis", axis, "snr|users");
  cmd_sweep->add_option("--policy", policy, "Restrict the sweep to one policy");
  cmd_sweep->add_option("--values", values, "Axis values")->delimiter(',');
  CLI::App* cmd_export =
      app.add_subcommand("export", "Rebuild plot CSVs from a run directory into <out>/plot");

  CLI11_PARSE(app, argc, argv);

  if (cmd_export->parsed()) {
    if (out_dir.empty()) {
      std::fprintf(stderr, "isacsim: export needs --out RUN_DIR\n");
      return 1;
    }
    if (isacsim_export_plotdata(out_dir.c_str(), (out_dir + "/plot").c_str()) !=
        ISACSIM_OK) {
      return fail("export");
    }
    std::printf("plot data written to %s/plot\n", out_dir.c_str());
    return 0;
  }

  ConfigHandle config(config_path.empty() ? isacsim_config_default()
                                          : isacsim_config_load(config_path.c_str()));
  if (!config) return fail("loading config");

  auto set = [&](const char* path, const std::string& value) -> bool {
    if (isacsim_config_set(config.get(), path, value.c_str()) != ISACSIM_OK) {
      std::fprintf(stderr, "isacsim: setting %s: %s\n", path, isacsim_last_error());
      return false;
    }
    return true;
  };

  if (seed >= 0 && !seeds.empty()) {
    std::fprintf(stderr, "isacsim: use either --seed or --seeds, not both\n");
    return 1;
  }
  if (seed >= 0) seeds = {static_cast<uint64_t>(seed)};
  if (!seeds.empty() && !set("campaign.seeds", json_array(seeds))) return 1;
  if (!out_dir.empty() && !set("campaign.out_dir", json_quote(out_dir))) return 1;
  if (episodes >= 0 && !set("campaign.episodes", std::to_string(episodes))) return 1;
  if (eval_episodes >= 0 &&
      !set("campaign.eval_episodes", std::to_string(eval_episodes))) {
    return 1;
  }
  if (!checkpoint.empty() && !set("campaign.checkpoint", json_quote(checkpoint))) return 1;
  if (write_traces && !set("campaign.write_traces", "true")) return 1;

  if (cmd_train->parsed()) {
    if (isacsim_run_training(config.get()) != ISACSIM_OK) return fail("train");
    std::printf("training complete\n");
    return 0;
  }
  if (cmd_eval->parsed()) {
    if (isacsim_run_eval(config.get(), policy.c_str()) != ISACSIM_OK) return fail("eval");
    std::printf("evaluation complete (%s)\n", policy.c_str());
    return 0;
  }
  if (cmd_sweep->parsed()) {
    if (cmd_sweep->count("--policy") > 0 &&
        !set("campaign.policies", "[" + json_quote(policy) + "]")) {
      return 1;
    }
    const char* axis_arg = axis.empty() ? nullptr : axis.c_str();
    const double* vals = values.empty() ? nullptr : values.data();
    if (isacsim_run_sweep(config.get(), axis_arg, vals,
                          static_cast<int64_t>(values.size())) != ISACSIM_OK) {
      return fail("sweep");
    }
    std::printf("sweep complete\n");
    return 0;
  }
  return 1;
}
