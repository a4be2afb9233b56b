#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "isacsim/env.hpp"
#include "isacsim/harness.hpp"
#include "isacsim/rng.hpp"

using namespace isacsim;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny_experiment(const std::string& out_dir) {
  ExperimentConfig cfg;
  cfg.scenario.n_t = 4;
  cfg.scenario.n_r = 4;
  cfg.scenario.m_subcarriers = 2;
  cfg.scenario.l_cp = 4;
  cfg.scenario.l_symbols = 2;
  cfg.scenario.t_subframes = 2;
  cfg.scenario.num_users = 2;
  cfg.scenario.u_max = 4;
  cfg.scenario.n_b = 4;
  cfg.scenario.g_t = 4;
  cfg.scenario.n_d = 2;
  cfg.scenario.p_u = 2;
  cfg.scenario.n_x = 4;
  cfg.scenario.n_y = 4;
  cfg.scenario.reward_scale_samples = 2;

  cfg.agent.conv_filters = {2};
  cfg.agent.hidden = {8};
  cfg.agent.batch_size = 4;
  cfg.agent.replay_capacity = 64;
  cfg.agent.knn_k = 4;

  cfg.campaign.episodes = 2;
  cfg.campaign.eval_episodes = 1;
  cfg.campaign.seeds = {1, 2};
  cfg.campaign.policies = {"random", "greedy"};
  cfg.campaign.axis = "snr";
  cfg.campaign.values = {10.0};
  cfg.campaign.out_dir = out_dir;
  cfg.validate();
  return cfg;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const char* name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
  std::string sub(const char* leaf) const { return (path / leaf).string(); }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::vector<std::string> read_lines(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::istringstream in(line);
  std::string cell;
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  return cells;
}

}  // namespace

TEST_CASE("format_g17 round trips through strtod") {
  for (double v : {0.1, 1.0 / 3.0, 1e300, -2.5e-308, 0.0, 123456789.123456789,
                   -0.9999999999999999}) {
    const std::string s = format_g17(v);
    CHECK(s.find(',') == std::string::npos);
    char* end = nullptr;
    const double back = std::strtod(s.c_str(), &end);
    CHECK(*end == '\0');
    CHECK(back == v);
  }
  CHECK(format_g17(1.0) == "1");
}

TEST_CASE("quantile interpolates linearly") {
  std::vector<double> v = {3.0, 1.0, 2.0};
  CHECK(quantile(v, 0.0) == 1.0);
  CHECK(quantile(v, 0.5) == 2.0);
  CHECK(quantile(v, 1.0) == 3.0);
  CHECK(quantile(v, 0.25) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(quantile({42.0}, 0.7) == 42.0);
  CHECK_THROWS_AS(quantile({}, 0.5), std::invalid_argument);
}

TEST_CASE("experiment config json round trip is strict") {
  TempDir dir("isacsim_harness_cfg");
  ExperimentConfig cfg = tiny_experiment(dir.str());
  cfg.campaign.checkpoint = "ck/prefix";
  cfg.campaign.write_traces = true;
  cfg.campaign.exhaustive_budget = 99;

  nlohmann::json j = cfg;
  const ExperimentConfig back = j.get<ExperimentConfig>();
  CHECK(back.scenario.n_t == cfg.scenario.n_t);
  CHECK(back.agent.batch_size == cfg.agent.batch_size);
  CHECK(back.campaign.seeds == cfg.campaign.seeds);
  CHECK(back.campaign.policies == cfg.campaign.policies);
  CHECK(back.campaign.checkpoint == "ck/prefix");
  CHECK(back.campaign.write_traces == true);
  CHECK(back.campaign.exhaustive_budget == 99);

  nlohmann::json top_bad = {{"scenario", nlohmann::json::object()},
                            {"campaignn", nlohmann::json::object()}};
  CHECK_THROWS_AS(top_bad.get<ExperimentConfig>(), std::invalid_argument);

  nlohmann::json camp_bad = {{"campaign", {{"episode", 3}}}};
  CHECK_THROWS_AS(camp_bad.get<ExperimentConfig>(), std::invalid_argument);

  SUBCASE("file round trip") {
    const std::string path = dir.sub("config.json");
    save_experiment_config(cfg, path);
    const ExperimentConfig loaded = load_experiment_config(path);
    CHECK(loaded.campaign.seeds == cfg.campaign.seeds);
    CHECK(loaded.scenario.p_t == cfg.scenario.p_t);
    CHECK_THROWS(load_experiment_config(dir.sub("missing.json")));
  }

  SUBCASE("campaign validation") {
    CampaignConfig bad = cfg.campaign;
    bad.seeds.clear();
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg.campaign;
    bad.axis = "power";
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg.campaign;
    bad.policies = {"oracle"};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg.campaign;
    bad.episodes = -1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  }
}

TEST_CASE("rollout episodes aggregate their own rows") {
  TempDir dir("isacsim_harness_rollout");
  const ExperimentConfig cfg = tiny_experiment(dir.str());
  Environment env(cfg.scenario, 9);
  Rng policy_rng(77);

  PolicyRef random_ref{PolicyKind::kRandom, nullptr, 4096};
  const EpisodeRollout ro = rollout_episode(env, random_ref, policy_rng, 4, true);
  REQUIRE(static_cast<int>(ro.rows.size()) == cfg.scenario.t_subframes);
  REQUIRE(ro.crlbs.size() == ro.rows.size());
  REQUIRE(ro.ses.size() == ro.rows.size());
  CHECK(ro.stats.episode == 4);

  double reward = 0.0, cost = 0.0, w = 1.0;
  for (size_t t = 0; t < ro.rows.size(); ++t) {
    const TraceRow& row = ro.rows[t];
    CHECK(row.t == static_cast<int>(t));
    CHECK(row.se == ro.ses[t]);
    CHECK(row.crlb == ro.crlbs[t]);
    CHECK(row.violations >= 0);
    CHECK(row.user_index >= 0);
    CHECK(row.user_index < cfg.scenario.num_users);
    reward += w * row.reward;
    cost += w * row.cost;
    w *= cfg.scenario.discount;
  }
  CHECK(ro.stats.cum_reward == doctest::Approx(reward).epsilon(1e-15));
  CHECK(ro.stats.cum_cost == doctest::Approx(cost).epsilon(1e-15));
  CHECK(ro.stats.gamma_c ==
        doctest::Approx(episode_budget(cfg.scenario).gamma_c).epsilon(1e-15));

  SUBCASE("exhaustive policy rollouts replace the whole precoder") {
    const EpisodeRollout ex = rollout_episode(
        env, PolicyRef{PolicyKind::kExhaustive, nullptr, 4096}, policy_rng, 0, true);
    REQUIRE(!ex.rows.empty());
    CHECK(ex.rows[0].user_index == -1);
    CHECK(ex.rows[0].codeword_index == -1);
  }

  SUBCASE("agent rollouts need a bundle") {
    CHECK_THROWS_AS(rollout_episode(env, PolicyRef{PolicyKind::kAgent, nullptr, 0},
                                    policy_rng, 0, false),
                    std::invalid_argument);
  }
}

TEST_CASE("run_training writes the documented file set") {
  TempDir dir("isacsim_harness_train");
  ExperimentConfig cfg = tiny_experiment(dir.sub("run"));
  cfg.campaign.write_traces = true;

  const RunRecord rec = run_training(cfg);
  REQUIRE(rec.seeds.size() == 2);
  CHECK(rec.seeds[0].train_log.episodes.size() == 2);
  CHECK(rec.seeds[0].eval_stats.size() == 1);

  const std::string out = cfg.campaign.out_dir;
  for (const char* name :
       {"config.json", "train_log_seed1.csv", "train_log_seed2.csv",
        "eval_log_seed1.csv", "eval_log_seed2.csv", "summary.json",
        "checkpoint_seed1.bin", "checkpoint_seed1.json", "checkpoint_seed2.bin",
        "checkpoint_seed2.json", "trace_seed1_ep0.csv"}) {
    CAPTURE(name);
    CHECK(fs::exists(out + "/" + std::string(name)));
  }

  const std::vector<std::string> train_lines = read_lines(out + "/train_log_seed1.csv");
  REQUIRE(train_lines.size() == 3);
  CHECK(train_lines[0] ==
        "episode,cum_reward,cum_cost,gamma_c,lambda,mean_loss_r,mean_loss_c");

  const std::vector<std::string> trace_lines = read_lines(out + "/trace_seed1_ep0.csv");
  REQUIRE(trace_lines.size() == static_cast<size_t>(cfg.scenario.t_subframes) + 1);
  CHECK(trace_lines[0] == "t,user_idx,code_idx,reward,cost,se,crlb,lambda,violations");

  SUBCASE("zero episodes still writes headers") {
    TempDir dir2("isacsim_harness_train0");
    ExperimentConfig none = tiny_experiment(dir2.sub("run"));
    none.campaign.episodes = 0;
    none.campaign.eval_episodes = 0;
    none.campaign.seeds = {1};
    const RunRecord empty = run_training(none);
    CHECK(empty.seeds[0].train_log.episodes.empty());
    const auto lines = read_lines(none.campaign.out_dir + "/train_log_seed1.csv");
    REQUIRE(lines.size() == 1);
    CHECK(lines[0] ==
          "episode,cum_reward,cum_cost,gamma_c,lambda,mean_loss_r,mean_loss_c");
  }
}

TEST_CASE("run_training is reproducible byte for byte") {
  TempDir dir("isacsim_harness_det");
  ExperimentConfig cfg = tiny_experiment(dir.sub("run"));
  cfg.campaign.seeds = {1};

  run_training(cfg);
  const std::string train1 = read_file(dir.sub("run") + "/train_log_seed1.csv");
  const std::string eval1 = read_file(dir.sub("run") + "/eval_log_seed1.csv");
  const std::string ck1 = read_file(dir.sub("run") + "/checkpoint_seed1.bin");

  fs::remove_all(dir.sub("run"));
  run_training(cfg);
  CHECK(read_file(dir.sub("run") + "/train_log_seed1.csv") == train1);
  CHECK(read_file(dir.sub("run") + "/eval_log_seed1.csv") == eval1);
  CHECK(read_file(dir.sub("run") + "/checkpoint_seed1.bin") == ck1);
}

TEST_CASE("run_eval evaluates a fixed policy across seeds") {
  TempDir dir("isacsim_harness_eval");
  ExperimentConfig cfg = tiny_experiment(dir.sub("run"));
  cfg.campaign.eval_episodes = 2;

  const RunRecord rec = run_eval(cfg, PolicyKind::kGreedy);
  REQUIRE(rec.seeds.size() == 2);
  for (const SeedResult& res : rec.seeds) {
    CHECK(res.train_log.episodes.empty());
    REQUIRE(res.eval_stats.size() == 2);
    for (const EpisodeStats& e : res.eval_stats) {
      CHECK(std::isfinite(e.cum_cost));
      CHECK(e.gamma_c ==
            doctest::Approx(episode_budget(cfg.scenario).gamma_c).epsilon(1e-15));
    }
  }
  CHECK(fs::exists(dir.sub("run") + "/eval_log_greedy_seed1.csv"));
  CHECK(fs::exists(dir.sub("run") + "/eval_log_greedy_seed2.csv"));
}

TEST_CASE("snr sweep scales the random-policy crlb by the power ratio") {
  TempDir dir("isacsim_harness_sweep");
  ExperimentConfig cfg = tiny_experiment(dir.sub("run"));
  cfg.campaign.policies = {"random"};
  cfg.campaign.seeds = {1};

  const SweepTable table = run_sweep(cfg, "snr", {0.0, 10.0, 20.0});
  REQUIRE(table.values.size() == 3);
  REQUIRE(table.crlb.size() == 3);
  REQUIRE(table.crlb[0].size() == 1);

  // The random policy's choices and the channel scenes do not depend on the
  // transmit power, so the estimation bound scales exactly inversely with it.
  CHECK(table.crlb[0][0] / table.crlb[1][0] == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(table.crlb[1][0] / table.crlb[2][0] == doctest::Approx(10.0).epsilon(1e-9));
  for (int i = 0; i < 3; ++i) CHECK(table.se[static_cast<size_t>(i)][0] > 0.0);

  const auto lines = read_lines(dir.sub("run") + "/sweep_snr.csv");
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] == "value,crlb_random,se_random");

  SUBCASE("axis validation") {
    CHECK_THROWS_AS(run_sweep(cfg, "power", {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(run_sweep(cfg, "snr", {}), std::invalid_argument);
    CHECK_THROWS_AS(run_sweep(cfg, "users", {1.5}), std::invalid_argument);
  }

  SUBCASE("users axis runs on integral values") {
    const SweepTable users = run_sweep(cfg, "users", {1.0, 2.0});
    REQUIRE(users.values.size() == 2);
    CHECK(users.se[0][0] > 0.0);
    CHECK(fs::exists(dir.sub("run") + "/sweep_users.csv"));
  }
}

TEST_CASE("plot export and run-record reload agree byte for byte") {
  TempDir dir("isacsim_harness_plot");
  ExperimentConfig cfg = tiny_experiment(dir.sub("run"));
  cfg.campaign.seeds = {1};
  cfg.campaign.policies = {"random"};

  RunRecord rec = run_training(cfg);
  rec.sweeps.push_back(run_sweep(cfg, "snr", {0.0, 10.0}));
  rec.sweeps.push_back(run_sweep(cfg, "users", {1.0, 2.0}));

  export_plotdata(rec, dir.sub("plot1"));
  const auto curves = read_lines(dir.sub("plot1") + "/learning_curves.csv");
  REQUIRE(curves.size() == 3);  // header + 2 episodes x 1 seed
  CHECK(curves[0] == "episode,seed,cum_reward,cum_cost,gamma_c,lambda");
  const auto cells = split_csv(curves[1]);
  REQUIRE(cells.size() == 6);
  CHECK(std::strtod(cells[4].c_str(), nullptr) ==
        doctest::Approx(episode_budget(cfg.scenario).gamma_c).epsilon(1e-15));

  const auto crlb_csv = read_lines(dir.sub("plot1") + "/crlb_vs_snr.csv");
  REQUIRE(crlb_csv.size() == 3);
  CHECK(crlb_csv[0] == "value,crlb_random");
  const auto se_csv = read_lines(dir.sub("plot1") + "/se_vs_users.csv");
  REQUIRE(se_csv.size() == 3);
  CHECK(se_csv[0] == "value,se_random");

  const RunRecord loaded = load_run_record(cfg.campaign.out_dir);
  export_plotdata(loaded, dir.sub("plot2"));
  for (const char* name : {"learning_curves.csv", "crlb_vs_snr.csv", "se_vs_users.csv"}) {
    CAPTURE(name);
    CHECK(read_file(dir.sub("plot1") + "/" + std::string(name)) ==
          read_file(dir.sub("plot2") + "/" + std::string(name)));
  }

  SUBCASE("records without sweeps export headers only") {
    RunRecord bare = rec;
    bare.sweeps.clear();
    export_plotdata(bare, dir.sub("plot3"));
    CHECK(read_lines(dir.sub("plot3") + "/crlb_vs_snr.csv").size() == 1);
    CHECK(read_lines(dir.sub("plot3") + "/se_vs_users.csv").size() == 1);
  }
}
