#include "isacsim/env.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>

#include "isacsim/steering.hpp"

namespace isacsim {

Tensor EnvState::s_p_tensor(int n_x, int n_y) const {
  Tensor t({3, n_x, n_y});
  for (int slot = 0; slot < 3; ++slot) {
    const Spectrum& p = *s_p[static_cast<size_t>(slot)];
    if (static_cast<int>(p.size()) != n_x * n_y) {
      throw std::invalid_argument("s_p_tensor: spectrum size mismatch");
    }
    double* out = t.data() + static_cast<int64_t>(slot) * n_x * n_y;
    for (size_t i = 0; i < p.size(); ++i) out[i] = static_cast<double>(p[i]);
  }
  return t;
}

EpisodeBudget episode_budget(const ScenarioConfig& cfg) {
  EpisodeBudget b;
  b.gamma = cfg.discount;
  b.eta_c = cfg.eta_c();
  double geo = 0.0;
  double w = 1.0;
  for (int t = 0; t < cfg.t_subframes; ++t) {
    geo += w;
    w *= cfg.discount;
  }
  b.gamma_c = -b.eta_c * geo;
  return b;
}

ActionCode decode_action(const std::vector<double>& raw, int num_users,
                         const ScenarioConfig& cfg) {
  if (static_cast<int>(raw.size()) != cfg.action_dim()) {
    throw std::invalid_argument("decode_action: raw action has wrong length");
  }
  if (num_users < 1) throw std::invalid_argument("decode_action: num_users < 1");

  ActionCode a;
  a.raw = raw;
  int user = 0;
  for (int i = 0; i < cfg.user_bits(); ++i) {
    user = (user << 1) | (raw[static_cast<size_t>(i)] >= 0.5 ? 1 : 0);
  }
  int code = 0;
  for (int i = cfg.user_bits(); i < cfg.action_dim(); ++i) {
    code = (code << 1) | (raw[static_cast<size_t>(i)] >= 0.5 ? 1 : 0);
  }
  a.user_index = user % num_users;
  a.codeword_index = code % cfg.n_b;
  return a;
}

std::vector<double> encode_action(int user_index, int codeword_index,
                                  const ScenarioConfig& cfg) {
  if (user_index < 0 || user_index >= (1 << cfg.user_bits())) {
    throw std::out_of_range("encode_action: user index does not fit the field");
  }
  if (codeword_index < 0 || codeword_index >= (1 << cfg.code_bits())) {
    throw std::out_of_range("encode_action: codeword index does not fit the field");
  }
  std::vector<double> raw(static_cast<size_t>(cfg.action_dim()), 0.0);
  for (int i = 0; i < cfg.user_bits(); ++i) {
    const int bit = (user_index >> (cfg.user_bits() - 1 - i)) & 1;
    raw[static_cast<size_t>(i)] = static_cast<double>(bit);
  }
  for (int i = 0; i < cfg.code_bits(); ++i) {
    const int bit = (codeword_index >> (cfg.code_bits() - 1 - i)) & 1;
    raw[static_cast<size_t>(cfg.user_bits() + i)] = static_cast<double>(bit);
  }
  return raw;
}

std::pair<int, int> spectrum_cell(double theta, double range, const ScenarioConfig& cfg) {
  const double dx = (cfg.theta_max - cfg.theta_min) / cfg.n_x;
  const double dy = (cfg.d_max - cfg.d_min) / cfg.n_y;
  int ix = static_cast<int>(std::floor((theta - cfg.theta_min) / dx));
  int iy = static_cast<int>(std::floor((range - cfg.d_min) / dy));
  ix = std::min(std::max(ix, 0), cfg.n_x - 1);
  iy = std::min(std::max(iy, 0), cfg.n_y - 1);
  return {ix, iy};
}

Spectrum build_position_spectrum(const std::vector<std::pair<double, double>>& users_polar,
                                 const std::vector<std::pair<double, double>>& targets_polar,
                                 const ScenarioConfig& cfg) {
  Spectrum p(static_cast<size_t>(cfg.n_x) * cfg.n_y, kSpectrumEmpty);
  int clamped = 0;
  auto in_range = [&cfg](double theta, double range) {
    return theta >= cfg.theta_min && theta < cfg.theta_max && range >= cfg.d_min &&
           range < cfg.d_max;
  };
  for (const auto& [theta, range] : users_polar) {
    if (!in_range(theta, range)) ++clamped;
    const auto [ix, iy] = spectrum_cell(theta, range, cfg);
    p[static_cast<size_t>(ix) * cfg.n_y + iy] = kSpectrumUser;
  }
  // Targets are painted last so a shared cell keeps the target code.
  for (const auto& [theta, range] : targets_polar) {
    if (!in_range(theta, range)) ++clamped;
    const auto [ix, iy] = spectrum_cell(theta, range, cfg);
    p[static_cast<size_t>(ix) * cfg.n_y + iy] = kSpectrumTarget;
  }
  if (clamped > 0) {
    std::cerr << "build_position_spectrum: clamped " << clamped
              << " out-of-range position(s)\n";
  }
  return p;
}

Tensor build_channel_state(const std::vector<ComplexMatrix>& tap_estimates,
                           const ComplexMatrix& dictionary, int u_max,
                           const ScenarioConfig& cfg) {
  if (static_cast<int>(tap_estimates.size()) != cfg.n_d) {
    throw std::invalid_argument("build_channel_state: expected N_d tap estimates");
  }
  const int g_t = static_cast<int>(dictionary.cols());
  Tensor s_h({cfg.n_d, u_max, g_t});
  for (int d = 0; d < cfg.n_d; ++d) {
    const ComplexMatrix& h = tap_estimates[static_cast<size_t>(d)];
    if (h.cols() != dictionary.rows()) {
      throw std::invalid_argument("build_channel_state: tap estimate must be U x N_t");
    }
    if (static_cast<int>(h.rows()) > u_max) {
      throw std::invalid_argument("build_channel_state: more users than u_max");
    }
    const ComplexMatrix beamspace = h * dictionary;  // U x G_t
    for (int u = 0; u < beamspace.rows(); ++u) {
      for (int g = 0; g < g_t; ++g) {
        s_h.data()[(static_cast<int64_t>(d) * u_max + u) * g_t + g] =
            std::abs(beamspace(u, g));
      }
    }
  }
  return s_h;
}

Environment::Environment(const ScenarioConfig& cfg, uint64_t seed)
    : cfg_(cfg), seed_(seed) {
  cfg_.validate();
  codebook_ = dft_codebook(cfg_.n_t, cfg_.n_b);
  dictionary_ = angular_dictionary(cfg_.n_t, cfg_.g_t);
}

std::vector<std::vector<PathParams>> Environment::current_paths() const {
  std::vector<std::vector<PathParams>> paths(static_cast<size_t>(cfg_.num_users));
  for (int u = 0; u < cfg_.num_users; ++u) {
    auto& user_paths = paths[static_cast<size_t>(u)];
    user_paths.resize(static_cast<size_t>(cfg_.p_u));
    for (int p = 0; p < cfg_.p_u; ++p) {
      // Path 0 is the terminal itself (line of sight, no excess delay);
      // the rest are single-bounce scatterers with frozen excess delays.
      const KinematicEntity& e = (p == 0)
                                     ? users_[static_cast<size_t>(u)]
                                     : scatterers_[static_cast<size_t>(u)][static_cast<size_t>(p - 1)];
      PathParams& pp = user_paths[static_cast<size_t>(p)];
      pp.beta = beta_[static_cast<size_t>(u)][static_cast<size_t>(p)];
      pp.delay_s = e.range_m / kSpeedOfLight +
                   (p == 0 ? 0.0 : excess_delay_[static_cast<size_t>(u)][static_cast<size_t>(p - 1)]);
      pp.aod_rad = e.angle_rad;
      pp.speed_mps = e.speed_mps;
      pp.doppler_per_symbol = doppler_per_symbol(e.speed_mps, e.angle_rad, cfg_);
    }
  }
  return paths;
}

Spectrum Environment::current_spectrum(Rng& flip_rng) const {
  std::vector<std::pair<double, double>> users_polar;
  users_polar.reserve(users_.size());
  for (const KinematicEntity& e : users_) users_polar.emplace_back(e.angle_rad, e.range_m);
  Spectrum p = build_position_spectrum(
      users_polar, {{target_.kin.angle_rad, target_.kin.range_m}}, cfg_);
  if (cfg_.spectrum_flip_prob > 0.0) {
    // Imperfect detector: each cell may be misread as empty or as a spurious
    // user echo.
    for (auto& cell : p) {
      if (flip_rng.uniform() < cfg_.spectrum_flip_prob) {
        cell = (cell == kSpectrumEmpty) ? kSpectrumUser : kSpectrumEmpty;
      }
    }
  }
  return p;
}

EnvState Environment::reset() {
  // Each reset opens the next frame: a fresh scene drawn from substreams of
  // (seed, episode index), independent of the actions taken so far.
  Rng root = Rng(seed_).fork(episode_);
  ++episode_;

  users_.clear();
  scatterers_.clear();
  excess_delay_.clear();
  beta_.clear();

  Rng user_rng = root.fork(kStreamUsers);
  for (int u = 0; u < cfg_.num_users; ++u) users_.push_back(sample_entity(cfg_, user_rng));

  Rng scatter_rng = root.fork(kStreamScatterers);
  scatterers_.resize(static_cast<size_t>(cfg_.num_users));
  for (auto& list : scatterers_) {
    for (int p = 1; p < cfg_.p_u; ++p) list.push_back(sample_entity(cfg_, scatter_rng));
  }

  Rng excess_rng = root.fork(kStreamExcess);
  const double excess_max =
      (cfg_.n_d - 1) * cfg_.sample_period() - cfg_.d_max / kSpeedOfLight;
  excess_delay_.resize(static_cast<size_t>(cfg_.num_users));
  for (auto& list : excess_delay_) {
    for (int p = 1; p < cfg_.p_u; ++p) list.push_back(excess_rng.uniform(0.0, excess_max));
  }

  Rng beta_rng = root.fork(kStreamBeta);
  beta_.resize(static_cast<size_t>(cfg_.num_users));
  for (auto& list : beta_) {
    for (int p = 0; p < cfg_.p_u; ++p) {
      list.push_back(beta_rng.cnormal(cfg_.sigma_beta * cfg_.sigma_beta));
    }
  }

  Rng target_rng = root.fork(kStreamTarget);
  target_.kin = sample_entity(cfg_, target_rng);

  alpha_rng_ = root.fork(kStreamAlpha);
  target_.alpha = sample_alpha(target_.kin.range_m, cfg_, alpha_rng_);

  realization_.reset();
  blocks_.clear();

  // Frame-start CSI snapshot, optionally corrupted entry-wise.
  ChannelRealization snapshot(cfg_, current_paths());
  std::vector<ComplexMatrix> taps(static_cast<size_t>(cfg_.n_d));
  Rng csi_rng = root.fork(kStreamCsi);
  for (int d = 0; d < cfg_.n_d; ++d) {
    ComplexMatrix h = snapshot.tap_response(d, 0).transpose();  // U x N_t
    if (cfg_.csi_error_std > 0.0) {
      const double var = cfg_.csi_error_std * cfg_.csi_error_std;
      for (Eigen::Index j = 0; j < h.cols(); ++j) {
        for (Eigen::Index i = 0; i < h.rows(); ++i) h(i, j) += csi_rng.cnormal(var);
      }
    }
    taps[static_cast<size_t>(d)] = std::move(h);
  }
  auto s_h = std::make_shared<Tensor>(
      build_channel_state(taps, dictionary_, cfg_.u_max, cfg_));

  spectrum_rng_ = root.fork(kStreamSpectrum);
  auto p0 = std::make_shared<Spectrum>(current_spectrum(spectrum_rng_));

  state_.s_h = std::move(s_h);
  state_.s_p = {p0, p0, p0};

  // Reward scale: mean CRLB of random codeword precoders against the initial
  // target, so normalized rewards start around -1.
  Rng rho_rng = root.fork(kStreamRho);
  rho_ = 1.0;
  if (cfg_.normalize_reward) {
    double acc = 0.0;
    int finite = 0;
    for (int i = 0; i < cfg_.reward_scale_samples; ++i) {
      const Precoder f = Precoder::random(cfg_.num_users, codebook_, rho_rng);
      const double v = crlb_angle(f.f, target_, cfg_);
      if (std::isfinite(v)) {
        acc += v;
        ++finite;
      }
    }
    if (finite > 0 && acc > 0.0) rho_ = acc / finite;
  }

  Rng init_rng = root.fork(kStreamInitF);
  precoder_ = Precoder::random(cfg_.num_users, codebook_, init_rng);

  t_ = 0;
  done_ = false;
  started_ = true;
  return state_;
}

const ChannelRealization& Environment::oracle_channel() const {
  if (!started_) throw std::logic_error("Environment: reset() must run first");
  if (!realization_) {
    realization_ = std::make_unique<ChannelRealization>(cfg_, current_paths());
  }
  return *realization_;
}

const std::vector<std::vector<ComplexMatrix>>& Environment::oracle_subframe_blocks() const {
  if (blocks_.empty()) {
    const ChannelRealization& ch = oracle_channel();
    blocks_.reserve(static_cast<size_t>(cfg_.l_symbols));
    for (int l = 0; l < cfg_.l_symbols; ++l) blocks_.push_back(ch.freq_blocks(l));
  }
  return blocks_;
}

StepOutcome Environment::simulate_subframe() {
  StepOutcome out;

  const auto& per_symbol_blocks = oracle_subframe_blocks();
  out.info.sinr.reserve(per_symbol_blocks.size());
  for (const auto& blocks : per_symbol_blocks) {
    out.info.sinr.push_back(sinr_table(blocks, precoder_.f, cfg_));
  }
  out.info.se = spectral_efficiency(out.info.sinr, cfg_);

  const FisherGeometry geom = fisher_geometry(precoder_.f, target_.kin.angle_rad, cfg_);
  out.info.fisher.resize(cfg_.m_subcarriers);
  double info_sum = 0.0;
  for (int m = 0; m < cfg_.m_subcarriers; ++m) {
    out.info.fisher[m] = fisher_subcarrier(geom, target_.alpha[m], cfg_);
    info_sum += out.info.fisher[m];
  }
  out.info.fisher_degenerate = geom.degenerate || !(info_sum > 0.0);
  out.info.crlb = out.info.fisher_degenerate ? std::numeric_limits<double>::infinity()
                                             : 1.0 / info_sum;
  out.info.constraints = check_constraints(out.info.sinr, precoder_, cfg_);

  out.reward = -(out.info.crlb / rho_);
  out.cost = -out.info.se;

  // Observation for the next subframe: the spectrum of the positions just
  // sensed, then the scene advances by one subframe interval.
  auto p_now = std::make_shared<Spectrum>(current_spectrum(spectrum_rng_));
  EnvState next = state_;
  next.s_p = {state_.s_p[1], state_.s_p[2], std::move(p_now)};

  const double dt = cfg_.subframe_duration();
  for (KinematicEntity& e : users_) evolve_entity(e, dt, cfg_);
  for (auto& list : scatterers_) {
    for (KinematicEntity& e : list) evolve_entity(e, dt, cfg_);
  }
  evolve_entity(target_.kin, dt, cfg_);
  target_.alpha = sample_alpha(target_.kin.range_m, cfg_, alpha_rng_);
  realization_.reset();
  blocks_.clear();

  state_ = std::move(next);
  ++t_;
  done_ = (t_ >= cfg_.t_subframes);
  out.done = done_;
  out.next_state = state_;
  return out;
}

StepOutcome Environment::step(const ActionCode& action) {
  if (!started_) throw std::logic_error("Environment: reset() must run first");
  if (done_) throw std::logic_error("Environment: step() after the episode ended");
  if (action.user_index < 0 || action.user_index >= cfg_.num_users) {
    throw std::out_of_range("Environment: action user index");
  }
  precoder_.set_column(action.user_index, action.codeword_index, codebook_);
  return simulate_subframe();
}

StepOutcome Environment::step_with_precoder(const Precoder& precoder) {
  if (!started_) throw std::logic_error("Environment: reset() must run first");
  if (done_) throw std::logic_error("Environment: step() after the episode ended");
  if (precoder.f.rows() != cfg_.n_t || precoder.f.cols() != cfg_.num_users) {
    throw std::invalid_argument("Environment: precoder shape mismatch");
  }
  if (!precoder.constant_modulus()) {
    throw std::invalid_argument("Environment: precoder violates constant modulus");
  }
  precoder_ = precoder;
  return simulate_subframe();
}

}  // namespace isacsim
