#include "isacsim/agent.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace isacsim {

namespace {

bool host_little_endian() {
  const uint16_t probe = 1;
  return *reinterpret_cast<const uint8_t*>(&probe) == 1;
}

NetSpec make_spec(const ScenarioConfig& sc, const AgentConfig& ac, bool critic) {
  NetSpec spec;
  spec.sh_c = sc.n_d;
  spec.sh_h = sc.u_max;
  spec.sh_w = sc.g_t;
  spec.sp_c = 3;
  spec.sp_h = sc.n_x;
  spec.sp_w = sc.n_y;
  spec.conv_filters = ac.conv_filters;
  spec.hidden = ac.hidden;
  spec.action_dim = critic ? sc.action_dim() : 0;
  spec.out_dim = critic ? 1 : sc.action_dim();
  spec.sigmoid_head = !critic;
  return spec;
}

// Shape-level compatibility between an environment and a bundle; training
// across different state/action geometries is a hard error.
void check_shapes(const ScenarioConfig& a, const ScenarioConfig& b) {
  const bool ok = a.n_d == b.n_d && a.u_max == b.u_max && a.g_t == b.g_t &&
                  a.n_x == b.n_x && a.n_y == b.n_y && a.num_users == b.num_users &&
                  a.n_b == b.n_b && a.action_dim() == b.action_dim();
  if (!ok) {
    throw std::invalid_argument("train: environment and bundle shapes are incompatible");
  }
}

}  // namespace

void AgentConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("AgentConfig: ") + what);
  };
  require(actor_lr > 0.0, "actor_lr must be positive");
  require(reward_critic_lr > 0.0, "reward_critic_lr must be positive");
  require(cost_critic_lr > 0.0, "cost_critic_lr must be positive");
  require(dual_lr >= 0.0, "dual_lr must be >= 0");
  require(soft_tau >= 0.0 && soft_tau <= 1.0, "soft_tau must lie in [0,1]");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(replay_capacity >= batch_size, "replay_capacity must hold a batch");
  require(knn_k >= 1, "knn_k must be >= 1");
  require(ou_theta >= 0.0, "ou_theta must be >= 0");
  require(ou_sigma >= 0.0, "ou_sigma must be >= 0");
}

namespace {
constexpr std::initializer_list<const char*> kAgentKeys = {
    "actor_lr", "reward_critic_lr", "cost_critic_lr", "dual_lr", "soft_tau",
    "batch_size", "replay_capacity", "knn_k", "ou_mu", "ou_theta", "ou_sigma",
    "conv_filters", "hidden"};
}  // namespace

void to_json(nlohmann::json& j, const AgentConfig& c) {
  j = nlohmann::json{{"actor_lr", c.actor_lr},
                     {"reward_critic_lr", c.reward_critic_lr},
                     {"cost_critic_lr", c.cost_critic_lr},
                     {"dual_lr", c.dual_lr},
                     {"soft_tau", c.soft_tau},
                     {"batch_size", c.batch_size},
                     {"replay_capacity", c.replay_capacity},
                     {"knn_k", c.knn_k},
                     {"ou_mu", c.ou_mu},
                     {"ou_theta", c.ou_theta},
                     {"ou_sigma", c.ou_sigma},
                     {"conv_filters", c.conv_filters},
                     {"hidden", c.hidden}};
}

void from_json(const nlohmann::json& j, AgentConfig& c) {
  detail::check_keys(j, kAgentKeys, "agent");
  detail::get_if(j, "actor_lr", c.actor_lr);
  detail::get_if(j, "reward_critic_lr", c.reward_critic_lr);
  detail::get_if(j, "cost_critic_lr", c.cost_critic_lr);
  detail::get_if(j, "dual_lr", c.dual_lr);
  detail::get_if(j, "soft_tau", c.soft_tau);
  detail::get_if(j, "batch_size", c.batch_size);
  detail::get_if(j, "replay_capacity", c.replay_capacity);
  detail::get_if(j, "knn_k", c.knn_k);
  detail::get_if(j, "ou_mu", c.ou_mu);
  detail::get_if(j, "ou_theta", c.ou_theta);
  detail::get_if(j, "ou_sigma", c.ou_sigma);
  detail::get_if(j, "conv_filters", c.conv_filters);
  detail::get_if(j, "hidden", c.hidden);
}

ReplayBuffer::ReplayBuffer(size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("ReplayBuffer: zero capacity");
  store_.reserve(std::min<size_t>(capacity_, 4096));
}

void ReplayBuffer::push(Transition t) {
  if (store_.size() < capacity_) {
    store_.push_back(std::move(t));
  } else {
    store_[write_] = std::move(t);
  }
  write_ = (write_ + 1) % capacity_;
}

std::vector<const Transition*> ReplayBuffer::sample(int n, Rng& rng) const {
  if (n <= 0) throw std::invalid_argument("ReplayBuffer: batch size must be positive");
  if (static_cast<size_t>(n) > store_.size()) {
    throw std::invalid_argument("ReplayBuffer: not enough transitions stored");
  }
  std::vector<uint32_t> picked;
  picked.reserve(static_cast<size_t>(n));
  while (picked.size() < static_cast<size_t>(n)) {
    const uint32_t idx = rng.uniform_int(static_cast<uint32_t>(store_.size()));
    if (std::find(picked.begin(), picked.end(), idx) == picked.end()) {
      picked.push_back(idx);
    }
  }
  std::vector<const Transition*> out;
  out.reserve(picked.size());
  for (uint32_t idx : picked) out.push_back(&store_[idx]);
  return out;
}

OUNoise::OUNoise(int dim, double mu, double theta, double sigma)
    : mu_(mu), theta_(theta), sigma_(sigma), x_(static_cast<size_t>(dim), mu) {
  if (dim <= 0) throw std::invalid_argument("OUNoise: dimension must be positive");
}

void OUNoise::reset() { std::fill(x_.begin(), x_.end(), mu_); }

const std::vector<double>& OUNoise::sample(Rng& rng) {
  for (double& xi : x_) {
    xi += theta_ * (mu_ - xi) + sigma_ * rng.normal();
  }
  return x_;
}

AgentBundle::AgentBundle(const ScenarioConfig& scenario, const AgentConfig& agent,
                         uint64_t seed)
    : scenario_(scenario),
      agent_cfg_(agent),
      budget_(episode_budget(scenario)),
      actor_(nullptr),
      critic_r_(nullptr),
      critic_c_(nullptr),
      target_actor_(nullptr),
      target_critic_r_(nullptr),
      target_critic_c_(nullptr),
      adam_actor_{ParamSet{}, AdamConfig{}},
      adam_critic_r_{ParamSet{}, AdamConfig{}},
      adam_critic_c_{ParamSet{}, AdamConfig{}},
      noise_(1, agent.ou_mu, agent.ou_theta, agent.ou_sigma),
      replay_(static_cast<size_t>(agent.replay_capacity)),
      noise_rng_(0),
      sample_rng_(0) {
  scenario_.validate();
  agent_cfg_.validate();

  Rng root(seed);
  actor_ = std::make_unique<StateActionNet>(make_spec(scenario_, agent_cfg_, false),
                                            root.fork(1));
  critic_r_ = std::make_unique<StateActionNet>(make_spec(scenario_, agent_cfg_, true),
                                               root.fork(2));
  critic_c_ = std::make_unique<StateActionNet>(make_spec(scenario_, agent_cfg_, true),
                                               root.fork(3));
  target_actor_ = std::make_unique<StateActionNet>(*actor_);
  target_critic_r_ = std::make_unique<StateActionNet>(*critic_r_);
  target_critic_c_ = std::make_unique<StateActionNet>(*critic_c_);

  adam_actor_ = AdamState(actor_->params(), AdamConfig{agent_cfg_.actor_lr, 0.9, 0.999, 1e-8});
  adam_critic_r_ =
      AdamState(critic_r_->params(), AdamConfig{agent_cfg_.reward_critic_lr, 0.9, 0.999, 1e-8});
  adam_critic_c_ =
      AdamState(critic_c_->params(), AdamConfig{agent_cfg_.cost_critic_lr, 0.9, 0.999, 1e-8});

  noise_ = OUNoise(scenario_.action_dim(), agent_cfg_.ou_mu, agent_cfg_.ou_theta,
                   agent_cfg_.ou_sigma);
  dual_.step = agent_cfg_.dual_lr;
  noise_rng_ = root.fork(4);
  sample_rng_ = root.fork(5);
}

Tensor AgentBundle::state_sh(const EnvState& state) const {
  Tensor t({1, scenario_.n_d, scenario_.u_max, scenario_.g_t});
  if (!state.s_h || state.s_h->size() != t.size()) {
    throw std::invalid_argument("AgentBundle: state s_h missing or mis-sized");
  }
  std::copy(state.s_h->data(), state.s_h->data() + t.size(), t.data());
  return t;
}

Tensor AgentBundle::state_sp(const EnvState& state) const {
  Tensor stacked = state.s_p_tensor(scenario_.n_x, scenario_.n_y);
  Tensor t({1, 3, scenario_.n_x, scenario_.n_y});
  std::copy(stacked.data(), stacked.data() + stacked.size(), t.data());
  return t;
}

namespace {

void copy_sh_into(const std::shared_ptr<const Tensor>& sh, double* dst, int64_t n) {
  if (!sh || sh->size() != n) {
    throw std::invalid_argument("AgentBundle: transition s_h missing or mis-sized");
  }
  std::copy(sh->data(), sh->data() + n, dst);
}

void copy_sp_into(const std::array<SpectrumPtr, 3>& sp, double* dst, int cells) {
  for (int slot = 0; slot < 3; ++slot) {
    const Spectrum& p = *sp[static_cast<size_t>(slot)];
    if (static_cast<int>(p.size()) != cells) {
      throw std::invalid_argument("AgentBundle: transition spectrum mis-sized");
    }
    double* out = dst + static_cast<int64_t>(slot) * cells;
    for (int i = 0; i < cells; ++i) out[i] = static_cast<double>(p[static_cast<size_t>(i)]);
  }
}

}  // namespace

Tensor AgentBundle::batch_sh(const std::vector<const Transition*>& batch, bool next) const {
  const int n = static_cast<int>(batch.size());
  Tensor t({n, scenario_.n_d, scenario_.u_max, scenario_.g_t});
  const int64_t stride = static_cast<int64_t>(scenario_.n_d) * scenario_.u_max * scenario_.g_t;
  for (int i = 0; i < n; ++i) {
    const Transition& tr = *batch[static_cast<size_t>(i)];
    copy_sh_into(next ? tr.sh_next : tr.sh, t.data() + i * stride, stride);
  }
  return t;
}

Tensor AgentBundle::batch_sp(const std::vector<const Transition*>& batch, bool next) const {
  const int n = static_cast<int>(batch.size());
  const int cells = scenario_.n_x * scenario_.n_y;
  Tensor t({n, 3, scenario_.n_x, scenario_.n_y});
  for (int i = 0; i < n; ++i) {
    const Transition& tr = *batch[static_cast<size_t>(i)];
    copy_sp_into(next ? tr.sp_next : tr.sp, t.data() + static_cast<int64_t>(i) * 3 * cells,
                 cells);
  }
  return t;
}

Tensor AgentBundle::batch_action(const std::vector<const Transition*>& batch) const {
  const int n = static_cast<int>(batch.size());
  const int dim = scenario_.action_dim();
  Tensor t({n, dim});
  for (int i = 0; i < n; ++i) {
    const Transition& tr = *batch[static_cast<size_t>(i)];
    if (static_cast<int>(tr.action.size()) != dim) {
      throw std::invalid_argument("AgentBundle: stored action has wrong length");
    }
    std::copy(tr.action.begin(), tr.action.end(),
              t.data() + static_cast<int64_t>(i) * dim);
  }
  return t;
}

std::vector<std::vector<double>> AgentBundle::knn_binary(
    const std::vector<double>& a_tilde, int k, int num_users, const ScenarioConfig& cfg) {
  if (k <= 0) throw std::invalid_argument("knn_binary: k must be positive");
  if (num_users < 1 || num_users > cfg.u_max) {
    throw std::invalid_argument("knn_binary: num_users outside [1, u_max]");
  }
  if (static_cast<int>(a_tilde.size()) != cfg.action_dim()) {
    throw std::invalid_argument("knn_binary: query length mismatch");
  }

  struct Scored {
    double dist2;
    std::vector<double> code;
  };
  // Enumeration order is lexicographic over (user, codeword), which is also
  // lexicographic over the binary vectors; stable sort keeps that order for
  // ties.
  std::vector<Scored> all;
  all.reserve(static_cast<size_t>(num_users) * cfg.n_b);
  for (int u = 0; u < num_users; ++u) {
    for (int b = 0; b < cfg.n_b; ++b) {
      std::vector<double> code = encode_action(u, b, cfg);
      double d2 = 0.0;
      for (size_t i = 0; i < code.size(); ++i) {
        const double diff = a_tilde[i] - code[i];
        d2 += diff * diff;
      }
      all.push_back({d2, std::move(code)});
    }
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const Scored& a, const Scored& b) { return a.dist2 < b.dist2; });

  const size_t take = std::min(static_cast<size_t>(k), all.size());
  std::vector<std::vector<double>> out;
  out.reserve(take);
  for (size_t i = 0; i < take; ++i) out.push_back(std::move(all[i].code));
  return out;
}

std::pair<std::vector<double>, ActionCode> AgentBundle::select_action(
    const EnvState& state, int num_users, bool explore) {
  const int dim = scenario_.action_dim();
  Tensor sh = state_sh(state);
  Tensor sp = state_sp(state);
  Tensor proto = actor_->forward(sh, sp, nullptr);  // [1, N_A]

  std::vector<double> a_tilde(proto.data(), proto.data() + dim);
  if (explore) {
    const std::vector<double>& n = noise_.sample(noise_rng_);
    for (int i = 0; i < dim; ++i) a_tilde[static_cast<size_t>(i)] += n[static_cast<size_t>(i)];
  }

  std::vector<std::vector<double>> candidates =
      knn_binary(a_tilde, agent_cfg_.knn_k, num_users, scenario_);
  const int k = static_cast<int>(candidates.size());

  // Critic refinement over the K candidates with the state replicated.
  Tensor sh_k({k, scenario_.n_d, scenario_.u_max, scenario_.g_t});
  Tensor sp_k({k, 3, scenario_.n_x, scenario_.n_y});
  Tensor act_k({k, dim});
  const int64_t sh_stride = sh.size();
  const int64_t sp_stride = sp.size();
  for (int i = 0; i < k; ++i) {
    std::copy(sh.data(), sh.data() + sh_stride, sh_k.data() + i * sh_stride);
    std::copy(sp.data(), sp.data() + sp_stride, sp_k.data() + i * sp_stride);
    std::copy(candidates[static_cast<size_t>(i)].begin(),
              candidates[static_cast<size_t>(i)].end(),
              act_k.data() + static_cast<int64_t>(i) * dim);
  }
  const Tensor q_r = critic_r_->forward(sh_k, sp_k, &act_k);
  const Tensor q_c = critic_c_->forward(sh_k, sp_k, &act_k);

  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < k; ++i) {
    const double score =
        q_r[i] - dual_.lambda * (q_c[i] - budget_.gamma_c);
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }

  std::vector<double> chosen = candidates[static_cast<size_t>(best)];
  ActionCode decoded = decode_action(chosen, num_users, scenario_);
  return {std::move(chosen), std::move(decoded)};
}

std::pair<std::vector<double>, std::vector<double>> AgentBundle::compute_targets(
    const std::vector<const Transition*>& batch) {
  if (batch.empty()) throw std::invalid_argument("compute_targets: empty batch");
  const int n = static_cast<int>(batch.size());

  Tensor sh = batch_sh(batch, true);
  Tensor sp = batch_sp(batch, true);
  Tensor a_next = target_actor_->forward(sh, sp, nullptr);
  Tensor qr = target_critic_r_->forward(sh, sp, &a_next);
  Tensor qc = target_critic_c_->forward(sh, sp, &a_next);

  std::vector<double> y(static_cast<size_t>(n));
  std::vector<double> z(static_cast<size_t>(n));
  const double gamma = scenario_.discount;
  for (int i = 0; i < n; ++i) {
    const Transition& tr = *batch[static_cast<size_t>(i)];
    const double boot = tr.terminal ? 0.0 : 1.0;
    y[static_cast<size_t>(i)] = tr.reward + boot * gamma * qr[i];
    z[static_cast<size_t>(i)] = tr.cost + boot * gamma * qc[i];
  }
  return {std::move(y), std::move(z)};
}

std::pair<double, double> AgentBundle::update_critics(
    const std::vector<const Transition*>& batch, const std::vector<double>& y,
    const std::vector<double>& z) {
  const int n = static_cast<int>(batch.size());
  if (n == 0) throw std::invalid_argument("update_critics: empty batch");
  if (y.size() != static_cast<size_t>(n) || z.size() != static_cast<size_t>(n)) {
    throw std::invalid_argument("update_critics: target size mismatch");
  }

  Tensor sh = batch_sh(batch, false);
  Tensor sp = batch_sp(batch, false);
  Tensor act = batch_action(batch);

  auto one = [&](StateActionNet& net, AdamState& adam,
                 const std::vector<double>& target) -> double {
    const Tensor q = net.forward(sh, sp, &act);
    double loss = 0.0;
    Tensor up({n, 1});
    for (int i = 0; i < n; ++i) {
      const double resid = q[i] - target[static_cast<size_t>(i)];
      loss += resid * resid;
      up[i] = 2.0 * resid / n;
    }
    loss /= n;
    ParamSet grads = net.backward(up);
    adam.step(net.params(), grads);
    return loss;
  };

  const double loss_r = one(*critic_r_, adam_critic_r_, y);
  const double loss_c = one(*critic_c_, adam_critic_c_, z);
  return {loss_r, loss_c};
}

double AgentBundle::update_actor(const std::vector<const Transition*>& batch) {
  const int n = static_cast<int>(batch.size());
  if (n == 0) throw std::invalid_argument("update_actor: empty batch");

  Tensor sh = batch_sh(batch, false);
  Tensor sp = batch_sp(batch, false);
  Tensor a = actor_->forward(sh, sp, nullptr);

  Tensor up({n, 1});
  up.fill(1.0 / n);

  Tensor da_r, da_c;
  critic_r_->forward(sh, sp, &a);
  critic_r_->backward(up, &da_r);
  critic_c_->forward(sh, sp, &a);
  critic_c_->backward(up, &da_c);

  // Ascend J = mean[Q_R - lambda Q_C]: feed -dJ/da through the actor and let
  // Adam descend.
  Tensor up_a({n, scenario_.action_dim()});
  for (int64_t i = 0; i < up_a.size(); ++i) {
    up_a[i] = -(da_r[i] - dual_.lambda * da_c[i]);
  }
  ParamSet grads = actor_->backward(up_a);

  double norm2 = 0.0;
  for (size_t i = 0; i < grads.count(); ++i) {
    const Tensor& g = grads.item(i).value;
    for (int64_t j = 0; j < g.size(); ++j) norm2 += g[j] * g[j];
  }
  adam_actor_.step(actor_->params(), grads);
  return std::sqrt(norm2);
}

double AgentBundle::update_dual(const std::vector<const Transition*>& batch) {
  const int n = static_cast<int>(batch.size());
  if (n == 0) throw std::invalid_argument("update_dual: empty batch");

  Tensor sh = batch_sh(batch, false);
  Tensor sp = batch_sp(batch, false);
  Tensor a = actor_->forward(sh, sp, nullptr);
  const Tensor qc = critic_c_->forward(sh, sp, &a);

  double mean_qc = 0.0;
  for (int i = 0; i < n; ++i) mean_qc += qc[i];
  mean_qc /= n;
  return dual_.update(mean_qc - budget_.gamma_c);
}

void AgentBundle::soft_update_targets() {
  soft_update(target_actor_->params(), actor_->params(), agent_cfg_.soft_tau);
  soft_update(target_critic_r_->params(), critic_r_->params(), agent_cfg_.soft_tau);
  soft_update(target_critic_c_->params(), critic_c_->params(), agent_cfg_.soft_tau);
}

void AgentBundle::save_checkpoint(const std::string& base_path) const {
  if (!host_little_endian()) {
    throw std::runtime_error("save_checkpoint: only little-endian hosts supported");
  }
  const StateActionNet* nets[6] = {actor_.get(),         critic_r_.get(),
                                   critic_c_.get(),      target_actor_.get(),
                                   target_critic_r_.get(), target_critic_c_.get()};
  const char* names[6] = {"actor",        "reward_critic",        "cost_critic",
                          "target_actor", "target_reward_critic", "target_cost_critic"};

  std::vector<double> flat;
  nlohmann::json manifest;
  manifest["format_version"] = 1;
  manifest["byte_order"] = "little";
  manifest["lambda"] = dual_.lambda;
  manifest["nets"] = nlohmann::json::array();
  for (int i = 0; i < 6; ++i) {
    nets[i]->params().append_flat(flat);
    manifest["nets"].push_back({{"name", names[i]},
                                {"arch", nets[i]->spec().describe()},
                                {"params", nets[i]->params().total_size()}});
  }

  std::ofstream bin(base_path + ".bin", std::ios::binary);
  if (!bin) throw std::runtime_error("save_checkpoint: cannot open " + base_path + ".bin");
  bin.write(reinterpret_cast<const char*>(flat.data()),
            static_cast<std::streamsize>(flat.size() * sizeof(double)));
  if (!bin) throw std::runtime_error("save_checkpoint: short write");
  bin.close();

  std::ofstream mf(base_path + ".json");
  if (!mf) throw std::runtime_error("save_checkpoint: cannot open " + base_path + ".json");
  mf << manifest.dump(2) << "\n";
}

void AgentBundle::load_checkpoint(const std::string& base_path) {
  if (!host_little_endian()) {
    throw std::runtime_error("load_checkpoint: only little-endian hosts supported");
  }
  std::ifstream mf(base_path + ".json");
  if (!mf) throw std::runtime_error("load_checkpoint: missing " + base_path + ".json");
  nlohmann::json manifest = nlohmann::json::parse(mf);

  StateActionNet* nets[6] = {actor_.get(),         critic_r_.get(),
                             critic_c_.get(),      target_actor_.get(),
                             target_critic_r_.get(), target_critic_c_.get()};
  if (!manifest.contains("nets") || manifest["nets"].size() != 6) {
    throw std::runtime_error("load_checkpoint: manifest must list six networks");
  }
  int64_t total = 0;
  for (int i = 0; i < 6; ++i) {
    const auto& entry = manifest["nets"][static_cast<size_t>(i)];
    if (entry.at("arch").get<std::string>() != nets[i]->spec().describe() ||
        entry.at("params").get<int64_t>() != nets[i]->params().total_size()) {
      throw std::runtime_error("load_checkpoint: architecture mismatch");
    }
    total += nets[i]->params().total_size();
  }

  std::ifstream bin(base_path + ".bin", std::ios::binary);
  if (!bin) throw std::runtime_error("load_checkpoint: missing " + base_path + ".bin");
  std::vector<double> flat(static_cast<size_t>(total));
  bin.read(reinterpret_cast<char*>(flat.data()),
           static_cast<std::streamsize>(flat.size() * sizeof(double)));
  if (bin.gcount() != static_cast<std::streamsize>(flat.size() * sizeof(double))) {
    throw std::runtime_error("load_checkpoint: parameter file truncated");
  }
  char extra;
  if (bin.read(&extra, 1)) {
    throw std::runtime_error("load_checkpoint: parameter file has trailing bytes");
  }

  size_t off = 0;
  for (int i = 0; i < 6; ++i) {
    off += nets[i]->params().read_flat(flat.data() + off, flat.size() - off);
  }
  dual_.lambda = manifest.at("lambda").get<double>();
}

TrainingLog train(Environment& env, AgentBundle& bundle, int episodes) {
  if (episodes < 0) throw std::invalid_argument("train: negative episode count");
  check_shapes(env.config(), bundle.scenario_config());

  TrainingLog log;
  const double gamma = bundle.scenario_config().discount;
  const int batch_size = bundle.agent_config().batch_size;

  for (int ep = 0; ep < episodes; ++ep) {
    EnvState s = env.reset();
    bundle.reset_noise();

    EpisodeStats stats;
    stats.episode = ep;
    stats.gamma_c = bundle.budget().gamma_c;
    double w = 1.0;
    double loss_r_sum = 0.0, loss_c_sum = 0.0;
    int updates = 0;

    while (!env.done()) {
      auto [a_raw, code] = bundle.select_action(s, env.config().num_users, true);
      StepOutcome out = env.step(code);

      Transition tr;
      tr.sh = s.s_h;
      tr.sp = s.s_p;
      tr.action = a_raw;
      tr.reward = out.reward;
      tr.cost = out.cost;
      tr.terminal = out.done;
      tr.sh_next = out.next_state.s_h;
      tr.sp_next = out.next_state.s_p;
      bundle.replay().push(std::move(tr));

      stats.cum_reward += w * out.reward;
      stats.cum_cost += w * out.cost;
      w *= gamma;

      if (bundle.replay().size() >= static_cast<size_t>(batch_size)) {
        const auto batch = bundle.replay().sample(batch_size, bundle.sample_rng());
        const auto [y, z] = bundle.compute_targets(batch);
        const auto [lr, lc] = bundle.update_critics(batch, y, z);
        bundle.update_actor(batch);
        bundle.update_dual(batch);
        bundle.soft_update_targets();
        loss_r_sum += lr;
        loss_c_sum += lc;
        ++updates;
      }
      s = out.next_state;
    }

    stats.lambda = bundle.lambda();
    stats.mean_loss_r = updates > 0 ? loss_r_sum / updates : 0.0;
    stats.mean_loss_c = updates > 0 ? loss_c_sum / updates : 0.0;
    log.episodes.push_back(stats);
  }
  return log;
}

EpisodeStats evaluate_episode(Environment& env, AgentBundle& bundle, int episode_index) {
  EnvState s = env.reset();
  EpisodeStats stats;
  stats.episode = episode_index;
  stats.gamma_c = bundle.budget().gamma_c;
  stats.lambda = bundle.lambda();
  double w = 1.0;
  const double gamma = bundle.scenario_config().discount;
  while (!env.done()) {
    auto [a_raw, code] = bundle.select_action(s, env.config().num_users, false);
    StepOutcome out = env.step(code);
    stats.cum_reward += w * out.reward;
    stats.cum_cost += w * out.cost;
    w *= gamma;
    s = out.next_state;
  }
  return stats;
}

}  // namespace isacsim
