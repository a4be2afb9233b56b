#include "isacsim/channel.hpp"

#include <cmath>
#include <stdexcept>

#include "isacsim/pulse.hpp"
#include "isacsim/steering.hpp"

namespace isacsim {

double doppler_per_symbol(double speed_mps, double aod_rad, const ScenarioConfig& cfg) {
  return 2.0 * kPi * cfg.f_c * speed_mps * cfg.symbol_period() * std::sin(aod_rad) /
         kSpeedOfLight;
}

std::vector<PathParams> sample_paths(const ScenarioConfig& cfg, Rng& rng) {
  std::vector<PathParams> paths(static_cast<size_t>(cfg.p_u));
  const double tap_window = (cfg.n_d - 1) * cfg.sample_period();
  for (auto& p : paths) {
    p.beta = rng.cnormal(cfg.sigma_beta * cfg.sigma_beta);
    p.delay_s = rng.uniform(0.0, tap_window);
    p.aod_rad = rng.uniform(cfg.theta_min, cfg.theta_max);
    p.speed_mps = rng.uniform(cfg.v_min, cfg.v_max);
    p.doppler_per_symbol = doppler_per_symbol(p.speed_mps, p.aod_rad, cfg);
  }
  return paths;
}

double KinematicEntity::x() const { return range_m * std::cos(angle_rad); }
double KinematicEntity::y() const { return range_m * std::sin(angle_rad); }

KinematicEntity sample_entity(const ScenarioConfig& cfg, Rng& rng) {
  KinematicEntity e;
  e.angle_rad = rng.uniform(cfg.theta_min, cfg.theta_max);
  e.range_m = rng.uniform(cfg.d_min, cfg.d_max);
  e.speed_mps = rng.uniform(cfg.v_min, cfg.v_max);
  e.heading_rad = rng.uniform(0.0, kPi);
  return e;
}

namespace {

bool full_circle(const ScenarioConfig& cfg) {
  return cfg.theta_max - cfg.theta_min >= 2.0 * kPi - 1e-9;
}

}  // namespace

void evolve_entity(KinematicEntity& e, double dt, const ScenarioConfig& cfg) {
  double px = e.x();
  double py = e.y();
  double vx = e.speed_mps * std::cos(e.heading_rad);
  double vy = e.speed_mps * std::sin(e.heading_rad);
  px += vx * dt;
  py += vy * dt;

  double r = std::hypot(px, py);
  // Reflect the radial velocity component when the range band is violated,
  // then clamp back into [d_min, d_max).
  if (r >= cfg.d_max || r < cfg.d_min) {
    if (r > 0.0) {
      const double nx = px / r;
      const double ny = py / r;
      const double vn = vx * nx + vy * ny;
      vx -= 2.0 * vn * nx;
      vy -= 2.0 * vn * ny;
    } else {
      vx = -vx;
      vy = -vy;
    }
    const double margin = 1e-9 * (cfg.d_max - cfg.d_min);
    r = std::min(std::max(r, cfg.d_min), cfg.d_max - margin);
  }

  double ang = std::atan2(py, px);  // [-pi, pi]
  if (full_circle(cfg)) {
    if (ang >= cfg.theta_max) ang -= 2.0 * kPi;
    if (ang < cfg.theta_min) ang += 2.0 * kPi;
  } else if (ang >= cfg.theta_max || ang < cfg.theta_min) {
    // Mirror the velocity across the violated boundary ray and pull the
    // angle back inside.
    const double bound = (ang >= cfg.theta_max) ? cfg.theta_max : cfg.theta_min;
    const double speed = std::hypot(vx, vy);
    const double vang = std::atan2(vy, vx);
    const double reflected = 2.0 * bound - vang;
    vx = speed * std::cos(reflected);
    vy = speed * std::sin(reflected);
    const double margin = 1e-9 * (cfg.theta_max - cfg.theta_min);
    ang = std::min(std::max(ang, cfg.theta_min), cfg.theta_max - margin);
  }

  e.angle_rad = ang;
  e.range_m = r;
  e.speed_mps = std::hypot(vx, vy);
  e.heading_rad = std::atan2(vy, vx);
}

ChannelRealization::ChannelRealization(const ScenarioConfig& cfg,
                                       std::vector<std::vector<PathParams>> paths_per_user)
    : cfg_(cfg), paths_(std::move(paths_per_user)) {
  if (paths_.empty()) {
    throw std::invalid_argument("ChannelRealization: at least one user required");
  }
  const RaisedCosinePulse pulse{cfg_.rolloff, cfg_.pulse_halfwidth};
  const double t_samp = cfg_.sample_period();
  const double scale = std::sqrt(static_cast<double>(cfg_.n_t));
  const int spsym = cfg_.samples_per_symbol();

  cache_.resize(paths_.size());
  for (size_t u = 0; u < paths_.size(); ++u) {
    if (paths_[u].empty()) {
      throw std::invalid_argument("ChannelRealization: user without paths");
    }
    const double path_scale = scale / std::sqrt(static_cast<double>(paths_[u].size()));
    cache_[u].reserve(paths_[u].size());
    for (const PathParams& p : paths_[u]) {
      PathCache pc;
      pc.tap_gain.resize(static_cast<size_t>(cfg_.n_d));
      for (int d = 0; d < cfg_.n_d; ++d) {
        pc.tap_gain[static_cast<size_t>(d)] = pulse(d - p.delay_s / t_samp);
      }
      pc.steer = (path_scale * p.beta) * steering_vector(p.aod_rad, cfg_.n_t);
      pc.phase_per_sample = p.doppler_per_symbol / spsym;
      cache_[u].push_back(std::move(pc));
    }
  }
}

ComplexMatrix ChannelRealization::tap_response(int d, int64_t sample) const {
  if (d < 0 || d >= cfg_.n_d) throw std::out_of_range("tap_response: tap index");
  ComplexMatrix h = ComplexMatrix::Zero(cfg_.n_t, num_users());
  for (int u = 0; u < num_users(); ++u) {
    for (const PathCache& pc : cache_[static_cast<size_t>(u)]) {
      const double g = pc.tap_gain[static_cast<size_t>(d)];
      if (g == 0.0) continue;
      const double phi = pc.phase_per_sample * static_cast<double>(sample);
      h.col(u) += (g * cplx(std::cos(phi), std::sin(phi))) * pc.steer;
    }
  }
  return h;
}

std::vector<ComplexMatrix> ChannelRealization::freq_blocks(int symbol) const {
  const int m_sc = cfg_.m_subcarriers;
  const int spsym = cfg_.samples_per_symbol();
  const int u = num_users();

  std::vector<ComplexMatrix> blocks(static_cast<size_t>(m_sc) * m_sc,
                                    ComplexMatrix::Zero(u, cfg_.n_t));
  std::vector<ComplexMatrix> taps(static_cast<size_t>(cfg_.n_d));

  for (int n = 0; n < m_sc; ++n) {
    const int64_t t_n =
        static_cast<int64_t>(symbol) * spsym + cfg_.l_cp + n;
    for (int d = 0; d < cfg_.n_d; ++d) taps[static_cast<size_t>(d)] = tap_response(d, t_n);

    for (int k = 0; k < m_sc; ++k) {
      ComplexMatrix g_k = ComplexMatrix::Zero(cfg_.n_t, u);
      for (int d = 0; d < cfg_.n_d; ++d) {
        const double ph = -2.0 * kPi * k * d / m_sc;
        g_k += cplx(std::cos(ph), std::sin(ph)) * taps[static_cast<size_t>(d)];
      }
      const ComplexMatrix g_k_t = g_k.transpose();
      for (int m = 0; m < m_sc; ++m) {
        const double ph = 2.0 * kPi * n * (k - m) / m_sc;
        blocks[static_cast<size_t>(m) * m_sc + k] +=
            (cplx(std::cos(ph), std::sin(ph)) / static_cast<double>(m_sc)) * g_k_t;
      }
    }
  }
  return blocks;
}

double ChannelRealization::block_energy(const std::vector<ComplexMatrix>& blocks) {
  double e = 0.0;
  for (const auto& b : blocks) e += b.squaredNorm();
  return e;
}

}  // namespace isacsim
