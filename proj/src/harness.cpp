#include "isacsim/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace isacsim {

namespace {

// Base label of per-policy RNG substreams; offset by the policy kind so the
// random baseline keeps its stream when other policies run alongside.
constexpr uint64_t kPolicyStream = 0x705f9fb3ULL;

constexpr std::initializer_list<const char*> kCampaignKeys = {
    "episodes",   "eval_episodes", "seeds",      "policies",
    "axis",       "values",        "out_dir",    "checkpoint",
    "write_traces", "exhaustive_budget"};

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  return f;
}

void write_train_log(const std::string& path, const TrainingLog& log) {
  std::ofstream f = open_out(path);
  f << "episode,cum_reward,cum_cost,gamma_c,lambda,mean_loss_r,mean_loss_c\n";
  for (const EpisodeStats& e : log.episodes) {
    f << e.episode << ',' << format_g17(e.cum_reward) << ',' << format_g17(e.cum_cost)
      << ',' << format_g17(e.gamma_c) << ',' << format_g17(e.lambda) << ','
      << format_g17(e.mean_loss_r) << ',' << format_g17(e.mean_loss_c) << '\n';
  }
}

void write_eval_log(const std::string& path, const std::vector<EpisodeStats>& stats) {
  std::ofstream f = open_out(path);
  f << "episode,cum_reward,cum_cost,gamma_c,lambda\n";
  for (const EpisodeStats& e : stats) {
    f << e.episode << ',' << format_g17(e.cum_reward) << ',' << format_g17(e.cum_cost)
      << ',' << format_g17(e.gamma_c) << ',' << format_g17(e.lambda) << '\n';
  }
}

void write_trace(const std::string& path, const std::vector<TraceRow>& rows) {
  std::ofstream f = open_out(path);
  f << "t,user_idx,code_idx,reward,cost,se,crlb,lambda,violations\n";
  for (const TraceRow& r : rows) {
    f << r.t << ',' << r.user_index << ',' << r.codeword_index << ','
      << format_g17(r.reward) << ',' << format_g17(r.cost) << ',' << format_g17(r.se)
      << ',' << format_g17(r.crlb) << ',' << format_g17(r.lambda) << ','
      << r.violations << '\n';
  }
}

nlohmann::json eval_summary(const std::vector<EpisodeStats>& stats) {
  nlohmann::json j;
  j["episodes"] = stats.size();
  if (stats.empty()) return j;
  std::vector<double> rewards, costs;
  int satisfied = 0;
  for (const EpisodeStats& e : stats) {
    rewards.push_back(e.cum_reward);
    costs.push_back(e.cum_cost);
    if (e.constraint_ok()) ++satisfied;
  }
  j["mean_reward"] = mean_of(rewards);
  j["median_reward"] = quantile(rewards, 0.5);
  j["iqr_reward"] = quantile(rewards, 0.75) - quantile(rewards, 0.25);
  j["mean_cost"] = mean_of(costs);
  j["median_cost"] = quantile(costs, 0.5);
  j["iqr_cost"] = quantile(costs, 0.75) - quantile(costs, 0.25);
  j["constraint_satisfaction"] = static_cast<double>(satisfied) / stats.size();
  return j;
}

void write_summary(const RunRecord& record, const std::string& path) {
  nlohmann::json j;
  j["seeds"] = nlohmann::json::array();
  std::vector<EpisodeStats> pooled;
  for (const SeedResult& res : record.seeds) {
    nlohmann::json entry;
    entry["seed"] = res.seed;
    entry["eval"] = eval_summary(res.eval_stats);
    j["seeds"].push_back(entry);
    pooled.insert(pooled.end(), res.eval_stats.begin(), res.eval_stats.end());
  }
  j["pooled"] = eval_summary(pooled);
  open_out(path) << j.dump(2) << "\n";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s) { return std::strtod(s.c_str(), nullptr); }

std::vector<std::vector<std::string>> read_csv(const std::string& path,
                                               std::vector<std::string>* header) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::string line;
  std::vector<std::vector<std::string>> rows;
  bool first = true;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (first) {
      if (header) *header = cells;
      first = false;
    } else {
      rows.push_back(std::move(cells));
    }
  }
  return rows;
}

std::string checkpoint_base_for(const std::string& prefix, uint64_t seed) {
  return prefix + "_seed" + std::to_string(seed);
}

// Fresh bundle for evaluation; loads the per-seed checkpoint when a prefix is
// configured, otherwise evaluates the untrained agent.
std::unique_ptr<AgentBundle> make_eval_bundle(const ExperimentConfig& config,
                                              const ScenarioConfig& scenario,
                                              uint64_t seed) {
  auto bundle = std::make_unique<AgentBundle>(scenario, config.agent, seed);
  if (!config.campaign.checkpoint.empty()) {
    bundle->load_checkpoint(checkpoint_base_for(config.campaign.checkpoint, seed));
  }
  return bundle;
}

}  // namespace

std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile: q outside [0,1]");
  std::sort(values.begin(), values.end());
  const double h = q * (static_cast<double>(values.size()) - 1.0);
  const size_t lo = static_cast<size_t>(h);
  const size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

void CampaignConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("campaign: ") + what);
  };
  require(episodes >= 0, "episodes must be >= 0");
  require(eval_episodes >= 0, "eval_episodes must be >= 0");
  require(!seeds.empty(), "seeds must be a non-empty explicit list");
  require(!out_dir.empty(), "out_dir must be set");
  require(axis == "snr" || axis == "users", "axis must be snr or users");
  require(exhaustive_budget >= 1, "exhaustive_budget must be >= 1");
  for (const std::string& p : policies) policy_kind_from_string(p);
}

void to_json(nlohmann::json& j, const CampaignConfig& c) {
  j = nlohmann::json{{"episodes", c.episodes},
                     {"eval_episodes", c.eval_episodes},
                     {"seeds", c.seeds},
                     {"policies", c.policies},
                     {"axis", c.axis},
                     {"values", c.values},
                     {"out_dir", c.out_dir},
                     {"checkpoint", c.checkpoint},
                     {"write_traces", c.write_traces},
                     {"exhaustive_budget", c.exhaustive_budget}};
}

void from_json(const nlohmann::json& j, CampaignConfig& c) {
  detail::check_keys(j, kCampaignKeys, "campaign");
  detail::get_if(j, "episodes", c.episodes);
  detail::get_if(j, "eval_episodes", c.eval_episodes);
  detail::get_if(j, "seeds", c.seeds);
  detail::get_if(j, "policies", c.policies);
  detail::get_if(j, "axis", c.axis);
  detail::get_if(j, "values", c.values);
  detail::get_if(j, "out_dir", c.out_dir);
  detail::get_if(j, "checkpoint", c.checkpoint);
  detail::get_if(j, "write_traces", c.write_traces);
  detail::get_if(j, "exhaustive_budget", c.exhaustive_budget);
}

void ExperimentConfig::validate() const {
  scenario.validate();
  agent.validate();
  campaign.validate();
}

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = nlohmann::json{{"scenario", c.scenario}, {"agent", c.agent}, {"campaign", c.campaign}};
}

void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  detail::check_keys(j, {"scenario", "agent", "campaign"}, "experiment");
  if (j.contains("scenario")) j.at("scenario").get_to(c.scenario);
  if (j.contains("agent")) j.at("agent").get_to(c.agent);
  if (j.contains("campaign")) j.at("campaign").get_to(c.campaign);
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read config " + path);
  nlohmann::json j = nlohmann::json::parse(f);
  return j.get<ExperimentConfig>();
}

void save_experiment_config(const ExperimentConfig& config, const std::string& path) {
  nlohmann::json j = config;
  open_out(path) << j.dump(2) << "\n";
}

EpisodeRollout rollout_episode(Environment& env, const PolicyRef& policy,
                               Rng& policy_rng, int episode_index, bool with_rows) {
  if (policy.kind == PolicyKind::kAgent && policy.bundle == nullptr) {
    throw std::invalid_argument("rollout_episode: agent policy without a bundle");
  }
  const ScenarioConfig& cfg = env.config();
  const double lambda =
      policy.kind == PolicyKind::kAgent ? policy.bundle->lambda() : 0.0;

  EpisodeRollout out;
  out.stats.episode = episode_index;
  out.stats.gamma_c = episode_budget(cfg).gamma_c;
  out.stats.lambda = lambda;

  EnvState s = env.reset();
  double w = 1.0;
  while (!env.done()) {
    const int t = env.subframe();
    StepOutcome outcome;
    int user_index = -1;
    int codeword_index = -1;
    switch (policy.kind) {
      case PolicyKind::kRandom: {
        const ActionCode a = random_policy(cfg.num_users, cfg, policy_rng);
        user_index = a.user_index;
        codeword_index = a.codeword_index;
        outcome = env.step(a);
        break;
      }
      case PolicyKind::kGreedy: {
        const ActionCode a = greedy_policy(env, cfg);
        user_index = a.user_index;
        codeword_index = a.codeword_index;
        outcome = env.step(a);
        break;
      }
      case PolicyKind::kExhaustive: {
        const Precoder p = exhaustive_policy(env, cfg, policy.exhaustive_budget);
        outcome = env.step_with_precoder(p);
        break;
      }
      case PolicyKind::kAgent: {
        auto [raw, a] = policy.bundle->select_action(s, cfg.num_users, false);
        user_index = a.user_index;
        codeword_index = a.codeword_index;
        outcome = env.step(a);
        break;
      }
    }

    out.stats.cum_reward += w * outcome.reward;
    out.stats.cum_cost += w * outcome.cost;
    w *= cfg.discount;
    out.crlbs.push_back(outcome.info.crlb);
    out.ses.push_back(outcome.info.se);
    if (with_rows) {
      TraceRow row;
      row.t = t;
      row.user_index = user_index;
      row.codeword_index = codeword_index;
      row.reward = outcome.reward;
      row.cost = outcome.cost;
      row.se = outcome.info.se;
      row.crlb = outcome.info.crlb;
      row.lambda = lambda;
      row.violations = outcome.info.constraints.violations;
      out.rows.push_back(row);
    }
    s = outcome.next_state;
  }
  return out;
}

RunRecord run_training(const ExperimentConfig& config) {
  config.validate();
  const CampaignConfig& camp = config.campaign;
  fs::create_directories(camp.out_dir);
  save_experiment_config(config, camp.out_dir + "/config.json");

  RunRecord record;
  record.config = config;
  for (uint64_t seed : camp.seeds) {
    SeedResult res;
    res.seed = seed;

    Environment env(config.scenario, seed);
    AgentBundle bundle(config.scenario, config.agent, seed);
    res.train_log = train(env, bundle, camp.episodes);

    res.checkpoint_base = checkpoint_base_for(camp.out_dir + "/checkpoint", seed);
    bundle.save_checkpoint(res.checkpoint_base);

    PolicyRef pol{PolicyKind::kAgent, &bundle, camp.exhaustive_budget};
    Rng policy_rng = Rng(seed).fork(kPolicyStream);
    for (int e = 0; e < camp.eval_episodes; ++e) {
      EpisodeRollout ro = rollout_episode(env, pol, policy_rng, e, camp.write_traces);
      res.eval_stats.push_back(ro.stats);
      if (camp.write_traces) {
        write_trace(camp.out_dir + "/trace_seed" + std::to_string(seed) + "_ep" +
                        std::to_string(e) + ".csv",
                    ro.rows);
      }
    }

    write_train_log(camp.out_dir + "/train_log_seed" + std::to_string(seed) + ".csv",
                    res.train_log);
    write_eval_log(camp.out_dir + "/eval_log_seed" + std::to_string(seed) + ".csv",
                   res.eval_stats);
    record.seeds.push_back(std::move(res));
  }
  write_summary(record, camp.out_dir + "/summary.json");
  return record;
}

RunRecord run_eval(const ExperimentConfig& config, PolicyKind kind) {
  config.validate();
  const CampaignConfig& camp = config.campaign;
  fs::create_directories(camp.out_dir);
  const std::string tag = to_string(kind);
  save_experiment_config(config, camp.out_dir + "/config_eval_" + tag + ".json");

  RunRecord record;
  record.config = config;
  for (uint64_t seed : camp.seeds) {
    SeedResult res;
    res.seed = seed;

    Environment env(config.scenario, seed);
    std::unique_ptr<AgentBundle> bundle;
    if (kind == PolicyKind::kAgent) {
      bundle = make_eval_bundle(config, config.scenario, seed);
      res.checkpoint_base = camp.checkpoint.empty()
                                ? std::string()
                                : checkpoint_base_for(camp.checkpoint, seed);
    }
    PolicyRef pol{kind, bundle.get(), camp.exhaustive_budget};
    Rng policy_rng = Rng(seed).fork(kPolicyStream + static_cast<uint64_t>(kind));

    for (int e = 0; e < camp.eval_episodes; ++e) {
      EpisodeRollout ro = rollout_episode(env, pol, policy_rng, e, camp.write_traces);
      res.eval_stats.push_back(ro.stats);
      if (camp.write_traces) {
        write_trace(camp.out_dir + "/trace_" + tag + "_seed" + std::to_string(seed) +
                        "_ep" + std::to_string(e) + ".csv",
                    ro.rows);
      }
    }
    write_eval_log(camp.out_dir + "/eval_log_" + tag + "_seed" + std::to_string(seed) +
                       ".csv",
                   res.eval_stats);
    record.seeds.push_back(std::move(res));
  }
  write_summary(record, camp.out_dir + "/summary_" + tag + ".json");
  return record;
}

SweepTable run_sweep(const ExperimentConfig& config, const std::string& axis,
                     const std::vector<double>& values) {
  config.validate();
  if (axis != "snr" && axis != "users") {
    throw std::invalid_argument("run_sweep: axis must be snr or users");
  }
  if (values.empty()) throw std::invalid_argument("run_sweep: no axis values");
  const CampaignConfig& camp = config.campaign;

  SweepTable table;
  table.axis = axis;
  table.policies = camp.policies;
  table.values = values;

  for (double v : values) {
    ScenarioConfig sc = config.scenario;
    if (axis == "snr") {
      sc.set_snr_db(v);
    } else {
      const double rounded = std::llround(v);
      if (std::fabs(v - rounded) > 1e-9) {
        throw std::invalid_argument("run_sweep: users axis needs integral values");
      }
      sc.num_users = static_cast<int>(rounded);
    }
    sc.validate();

    std::vector<double> row_crlb, row_se;
    for (const std::string& name : camp.policies) {
      const PolicyKind kind = policy_kind_from_string(name);
      std::vector<double> crlbs, ses;
      for (uint64_t seed : camp.seeds) {
        Environment env(sc, seed);
        std::unique_ptr<AgentBundle> bundle;
        if (kind == PolicyKind::kAgent) bundle = make_eval_bundle(config, sc, seed);
        PolicyRef pol{kind, bundle.get(), camp.exhaustive_budget};
        Rng policy_rng = Rng(seed).fork(kPolicyStream + static_cast<uint64_t>(kind));
        for (int e = 0; e < camp.eval_episodes; ++e) {
          EpisodeRollout ro = rollout_episode(env, pol, policy_rng, e, false);
          crlbs.insert(crlbs.end(), ro.crlbs.begin(), ro.crlbs.end());
          ses.insert(ses.end(), ro.ses.begin(), ro.ses.end());
        }
      }
      row_crlb.push_back(crlbs.empty() ? std::numeric_limits<double>::infinity()
                                       : averaged_crlb(crlbs));
      row_se.push_back(mean_of(ses));
    }
    table.crlb.push_back(std::move(row_crlb));
    table.se.push_back(std::move(row_se));
  }

  fs::create_directories(camp.out_dir);
  std::ofstream f = open_out(camp.out_dir + "/sweep_" + axis + ".csv");
  f << "value";
  for (const std::string& p : table.policies) f << ",crlb_" << p << ",se_" << p;
  f << "\n";
  for (size_t i = 0; i < table.values.size(); ++i) {
    f << format_g17(table.values[i]);
    for (size_t pi = 0; pi < table.policies.size(); ++pi) {
      f << ',' << format_g17(table.crlb[i][pi]) << ',' << format_g17(table.se[i][pi]);
    }
    f << "\n";
  }
  return table;
}

void export_plotdata(const RunRecord& record, const std::string& out_dir) {
  fs::create_directories(out_dir);

  {
    std::ofstream f = open_out(out_dir + "/learning_curves.csv");
    f << "episode,seed,cum_reward,cum_cost,gamma_c,lambda\n";
    for (const SeedResult& res : record.seeds) {
      for (const EpisodeStats& e : res.train_log.episodes) {
        f << e.episode << ',' << res.seed << ',' << format_g17(e.cum_reward) << ','
          << format_g17(e.cum_cost) << ',' << format_g17(e.gamma_c) << ','
          << format_g17(e.lambda) << '\n';
      }
    }
  }

  auto sweep_for = [&](const std::string& axis) -> const SweepTable* {
    for (const SweepTable& t : record.sweeps) {
      if (t.axis == axis) return &t;
    }
    return nullptr;
  };

  {
    const SweepTable* t = sweep_for("snr");
    const std::vector<std::string>& pols =
        t ? t->policies : record.config.campaign.policies;
    std::ofstream f = open_out(out_dir + "/crlb_vs_snr.csv");
    f << "value";
    for (const std::string& p : pols) f << ",crlb_" << p;
    f << "\n";
    if (t) {
      for (size_t i = 0; i < t->values.size(); ++i) {
        f << format_g17(t->values[i]);
        for (size_t pi = 0; pi < t->policies.size(); ++pi) {
          f << ',' << format_g17(t->crlb[i][pi]);
        }
        f << "\n";
      }
    }
  }

  {
    const SweepTable* t = sweep_for("users");
    const std::vector<std::string>& pols =
        t ? t->policies : record.config.campaign.policies;
    std::ofstream f = open_out(out_dir + "/se_vs_users.csv");
    f << "value";
    for (const std::string& p : pols) f << ",se_" << p;
    f << "\n";
    if (t) {
      for (size_t i = 0; i < t->values.size(); ++i) {
        f << format_g17(t->values[i]);
        for (size_t pi = 0; pi < t->policies.size(); ++pi) {
          f << ',' << format_g17(t->se[i][pi]);
        }
        f << "\n";
      }
    }
  }
}

RunRecord load_run_record(const std::string& dir) {
  RunRecord record;
  record.config = load_experiment_config(dir + "/config.json");

  for (uint64_t seed : record.config.campaign.seeds) {
    SeedResult res;
    res.seed = seed;
    const std::string train_path = dir + "/train_log_seed" + std::to_string(seed) + ".csv";
    bool have_any = false;
    if (fs::exists(train_path)) {
      have_any = true;
      for (const auto& row : read_csv(train_path, nullptr)) {
        if (row.size() < 7) throw std::runtime_error("malformed row in " + train_path);
        EpisodeStats e;
        e.episode = static_cast<int>(parse_double(row[0]));
        e.cum_reward = parse_double(row[1]);
        e.cum_cost = parse_double(row[2]);
        e.gamma_c = parse_double(row[3]);
        e.lambda = parse_double(row[4]);
        e.mean_loss_r = parse_double(row[5]);
        e.mean_loss_c = parse_double(row[6]);
        res.train_log.episodes.push_back(e);
      }
    }
    const std::string eval_path = dir + "/eval_log_seed" + std::to_string(seed) + ".csv";
    if (fs::exists(eval_path)) {
      have_any = true;
      for (const auto& row : read_csv(eval_path, nullptr)) {
        if (row.size() < 5) throw std::runtime_error("malformed row in " + eval_path);
        EpisodeStats e;
        e.episode = static_cast<int>(parse_double(row[0]));
        e.cum_reward = parse_double(row[1]);
        e.cum_cost = parse_double(row[2]);
        e.gamma_c = parse_double(row[3]);
        e.lambda = parse_double(row[4]);
        res.eval_stats.push_back(e);
      }
    }
    if (have_any) record.seeds.push_back(std::move(res));
  }

  for (const std::string axis : {"snr", "users"}) {
    const std::string path = dir + "/sweep_" + axis + ".csv";
    if (!fs::exists(path)) continue;
    std::vector<std::string> header;
    const auto rows = read_csv(path, &header);
    SweepTable table;
    table.axis = axis;
    if (header.empty() || header[0] != "value" || header.size() % 2 == 0) {
      throw std::runtime_error("malformed sweep header in " + path);
    }
    for (size_t i = 1; i + 1 < header.size(); i += 2) {
      const std::string& h = header[i];
      if (h.rfind("crlb_", 0) != 0 || header[i + 1] != "se_" + h.substr(5)) {
        throw std::runtime_error("unexpected sweep column " + h + " in " + path);
      }
      table.policies.push_back(h.substr(5));
    }
    for (const auto& row : rows) {
      if (row.size() != 1 + 2 * table.policies.size()) {
        throw std::runtime_error("malformed row in " + path);
      }
      table.values.push_back(parse_double(row[0]));
      std::vector<double> crlb_row, se_row;
      for (size_t pi = 0; pi < table.policies.size(); ++pi) {
        crlb_row.push_back(parse_double(row[1 + 2 * pi]));
        se_row.push_back(parse_double(row[2 + 2 * pi]));
      }
      table.crlb.push_back(std::move(crlb_row));
      table.se.push_back(std::move(se_row));
    }
    record.sweeps.push_back(std::move(table));
  }
  return record;
}

}  // namespace isacsim
