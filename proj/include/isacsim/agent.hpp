#ifndef ISACSIM_AGENT_HPP
#define ISACSIM_AGENT_HPP

#include <array>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "isacsim/env.hpp"
#include "isacsim/neural.hpp"
#include "isacsim/rng.hpp"
#include "isacsim/scenario.hpp"

namespace isacsim {

// Learner hyperparameters. The CMDP discount lives in ScenarioConfig because
// it defines the constrained objective, not just the learner.
struct AgentConfig {
  double actor_lr = 0.05;
  double reward_critic_lr = 0.05;
  double cost_critic_lr = 0.10;
  double dual_lr = 0.01;   // kappa_lambda
  double soft_tau = 0.01;  // target-network tracking rate
  int batch_size = 64;
  int replay_capacity = 100000;
  int knn_k = 8;  // Wolpertinger candidate count
  double ou_mu = 0.0;
  double ou_theta = 0.5;
  double ou_sigma = 0.3;
  std::vector<int> conv_filters{8, 8};
  std::vector<int> hidden{128, 128};

  void validate() const;
};

void to_json(nlohmann::json& j, const AgentConfig& c);
void from_json(const nlohmann::json& j, AgentConfig& c);

// One stored step. State tensors are shared, not copied: the beamspace
// tensor is frozen per episode and consecutive states overlap in two of
// their three spectrum slots, so per-transition deep copies would multiply
// memory for no information.
struct Transition {
  std::shared_ptr<const Tensor> sh;
  std::array<SpectrumPtr, 3> sp;
  std::vector<double> action;  // executed binary code, length N_A
  double reward = 0.0;
  double cost = 0.0;
  bool terminal = false;
  std::shared_ptr<const Tensor> sh_next;
  std::array<SpectrumPtr, 3> sp_next;
};

// FIFO ring with uniform batch sampling (without replacement in a batch).
class ReplayBuffer {
 public:
  explicit ReplayBuffer(size_t capacity);

  void push(Transition t);
  size_t size() const { return store_.size(); }
  size_t capacity() const { return capacity_; }
  const Transition& at(size_t i) const { return store_[i]; }

  std::vector<const Transition*> sample(int n, Rng& rng) const;

 private:
  size_t capacity_;
  size_t write_ = 0;
  std::vector<Transition> store_;
};

// Ornstein-Uhlenbeck exploration process, one coordinate per action bit.
class OUNoise {
 public:
  OUNoise(int dim, double mu, double theta, double sigma);

  void reset();
  const std::vector<double>& sample(Rng& rng);
  const std::vector<double>& value() const { return x_; }

 private:
  double mu_, theta_, sigma_;
  std::vector<double> x_;
};

// Projected dual ascent variable of the Lagrangian.
struct DualVariable {
  double lambda = 0.0;
  double step = 0.01;

  // violation = mean predicted cost minus the budget.
  double update(double violation) {
    lambda = std::max(lambda + step * violation, 0.0);
    return lambda;
  }
};

struct EpisodeStats {
  int episode = 0;
  double cum_reward = 0.0;  // discounted
  double cum_cost = 0.0;    // discounted
  double gamma_c = 0.0;
  double lambda = 0.0;
  double mean_loss_r = 0.0;
  double mean_loss_c = 0.0;

  bool constraint_ok() const { return cum_cost <= gamma_c; }
};

struct TrainingLog {
  std::vector<EpisodeStats> episodes;
};

// Actor, two critics, their target copies and the training state, glued to
// one scenario's tensor shapes.
class AgentBundle {
 public:
  AgentBundle(const ScenarioConfig& scenario, const AgentConfig& agent, uint64_t seed);

  // Wolpertinger selection: actor proposal, optional OU exploration, KNN
  // over feasible binary codes, then the Lagrangian-refined argmax over the
  // K candidates through the online critics.
  std::pair<std::vector<double>, ActionCode> select_action(const EnvState& state,
                                                           int num_users, bool explore);

  // The K feasible binary codes nearest to a_tilde (Euclidean), ties broken
  // by lexicographic code order. Feasible means user field < num_users and
  // codeword field < N_B.
  static std::vector<std::vector<double>> knn_binary(const std::vector<double>& a_tilde,
                                                     int k, int num_users,
                                                     const ScenarioConfig& cfg);

  // Target values y (reward) and z (cost) per transition; terminal
  // transitions do not bootstrap.
  std::pair<std::vector<double>, std::vector<double>> compute_targets(
      const std::vector<const Transition*>& batch);

  // One Adam step per critic against its targets; returns pre-step losses.
  std::pair<double, double> update_critics(const std::vector<const Transition*>& batch,
                                           const std::vector<double>& y,
                                           const std::vector<double>& z);

  // One Adam ascent step on mean[Q_R(s, mu(s)) - lambda Q_C(s, mu(s))];
  // returns the actor gradient norm. Critic parameters are not modified.
  double update_actor(const std::vector<const Transition*>& batch);

  // Projected dual step on mean[Q_C(s, mu(s))] - Gamma_c; returns new lambda.
  double update_dual(const std::vector<const Transition*>& batch);

  void soft_update_targets();
  void reset_noise() { noise_.reset(); }

  double lambda() const { return dual_.lambda; }
  DualVariable& dual() { return dual_; }
  ReplayBuffer& replay() { return replay_; }
  const EpisodeBudget& budget() const { return budget_; }
  const AgentConfig& agent_config() const { return agent_cfg_; }
  const ScenarioConfig& scenario_config() const { return scenario_; }

  StateActionNet& actor() { return *actor_; }
  StateActionNet& reward_critic() { return *critic_r_; }
  StateActionNet& cost_critic() { return *critic_c_; }
  StateActionNet& target_actor() { return *target_actor_; }
  StateActionNet& target_reward_critic() { return *target_critic_r_; }
  StateActionNet& target_cost_critic() { return *target_critic_c_; }
  Rng& sample_rng() { return sample_rng_; }

  // Flat little-endian parameter dump (<base>.bin) plus a JSON manifest
  // (<base>.json) carrying architecture strings and lambda. Loading verifies
  // the architecture before touching any parameters.
  void save_checkpoint(const std::string& base_path) const;
  void load_checkpoint(const std::string& base_path);

  // Batch tensor assembly, exposed for tests.
  Tensor batch_sh(const std::vector<const Transition*>& batch, bool next) const;
  Tensor batch_sp(const std::vector<const Transition*>& batch, bool next) const;
  Tensor batch_action(const std::vector<const Transition*>& batch) const;
  Tensor state_sh(const EnvState& state) const;
  Tensor state_sp(const EnvState& state) const;

 private:
  ScenarioConfig scenario_;
  AgentConfig agent_cfg_;
  EpisodeBudget budget_;

  std::unique_ptr<StateActionNet> actor_;
  std::unique_ptr<StateActionNet> critic_r_;
  std::unique_ptr<StateActionNet> critic_c_;
  std::unique_ptr<StateActionNet> target_actor_;
  std::unique_ptr<StateActionNet> target_critic_r_;
  std::unique_ptr<StateActionNet> target_critic_c_;

  AdamState adam_actor_;
  AdamState adam_critic_r_;
  AdamState adam_critic_c_;

  OUNoise noise_;
  DualVariable dual_;
  ReplayBuffer replay_;
  Rng noise_rng_;
  Rng sample_rng_;
};

// Algorithm: per episode, roll the environment with exploratory Wolpertinger
// actions, store transitions, and once the buffer holds a batch run the
// target/critic/actor/dual updates plus target tracking after every step.
TrainingLog train(Environment& env, AgentBundle& bundle, int episodes);

// Deterministic greedy-policy rollout (no exploration, no learning).
EpisodeStats evaluate_episode(Environment& env, AgentBundle& bundle, int episode_index);

}  // namespace isacsim

#endif  // ISACSIM_AGENT_HPP
