#include "isacsim/scenario.hpp"

#include <stdexcept>

namespace isacsim {

int ScenarioConfig::ceil_log2(int x) {
  if (x <= 0) throw std::invalid_argument("ceil_log2: argument must be positive");
  int bits = 0;
  while ((1 << bits) < x) ++bits;
  return bits;
}

void ScenarioConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("ScenarioConfig: ") + what);
  };
  require(n_t >= 1, "n_t must be >= 1");
  require(n_r >= 1, "n_r must be >= 1");
  require(m_subcarriers >= 1, "m_subcarriers must be >= 1");
  require(l_cp >= 0, "l_cp must be >= 0");
  require(l_symbols >= 1, "l_symbols must be >= 1");
  require(t_subframes >= 1, "t_subframes must be >= 1");
  require(f_c > 0.0, "f_c must be positive");
  require(delta_f > 0.0, "delta_f must be positive");
  require(num_users >= 1, "num_users must be >= 1");
  require(u_max >= num_users, "u_max must be >= num_users");
  require(n_b >= 1, "n_b must be >= 1");
  require(g_t >= 1, "g_t must be >= 1");
  require(n_d >= 1, "n_d must be >= 1");
  require(p_u >= 1, "p_u must be >= 1");
  require(l_cp >= n_d - 1, "l_cp must cover the delay spread (l_cp >= n_d-1)");
  require(sigma_beta > 0.0, "sigma_beta must be positive");
  require(rolloff >= 0.0 && rolloff <= 1.0, "rolloff must lie in [0,1]");
  require(pulse_halfwidth > 0.0, "pulse_halfwidth must be positive");
  require(p_t > 0.0, "p_t must be positive");
  require(sigma_c2 > 0.0, "sigma_c2 must be positive");
  require(sigma_z2 > 0.0, "sigma_z2 must be positive");
  require(sigma_rcs > 0.0, "sigma_rcs must be positive");
  require(theta_max > theta_min, "sensing angles must satisfy theta_max > theta_min");
  require(theta_min >= -kPi - 1e-12 && theta_max <= kPi + 1e-12,
          "sensing angles must lie within [-pi, pi]");
  require(d_min >= 0.0, "d_min must be >= 0");
  require(d_max > d_min, "d_max must be > d_min");
  require(v_min >= 0.0, "v_min must be >= 0");
  require(v_max >= v_min, "v_max must be >= v_min");
  require(n_x >= 1, "n_x must be >= 1");
  require(n_y >= 1, "n_y must be >= 1");
  require(alpha_range_floor > 0.0, "alpha_range_floor must be positive");
  require(sinr_threshold > 0.0, "sinr_threshold must be positive");
  require(discount > 0.0 && discount <= 1.0, "discount must lie in (0,1]");
  require(csi_error_std >= 0.0, "csi_error_std must be >= 0");
  require(spectrum_flip_prob >= 0.0 && spectrum_flip_prob <= 1.0,
          "spectrum_flip_prob must lie in [0,1]");
  require(reward_scale_samples >= 1, "reward_scale_samples must be >= 1");
  // Excess scatterer delays need headroom beyond the longest line-of-sight
  // delay, otherwise the tap window cannot host P_u distinct paths.
  require((n_d - 1) * sample_period() > d_max / kSpeedOfLight,
          "tap window too short for the sensing range");
}

namespace detail {

void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                const char* where) {
  if (!j.is_object()) {
    throw std::invalid_argument(std::string(where) + ": expected a JSON object");
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* key : allowed) {
      if (it.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw std::invalid_argument(std::string(where) + ": unknown key '" + it.key() + "'");
    }
  }
}

}  // namespace detail

namespace {

constexpr std::initializer_list<const char*> kScenarioKeys = {
    "n_t", "n_r", "m_subcarriers", "l_cp", "l_symbols", "t_subframes",
    "f_c", "delta_f", "num_users", "u_max", "n_b", "g_t",
    "n_d", "p_u", "sigma_beta", "rolloff", "pulse_halfwidth",
    "p_t", "sigma_c2", "sigma_z2", "sigma_rcs",
    "theta_min", "theta_max", "d_min", "d_max", "v_min", "v_max",
    "n_x", "n_y", "alpha_range_floor", "sinr_threshold", "discount",
    "csi_error_std", "spectrum_flip_prob", "normalize_reward",
    "reward_scale_samples"};

}  // namespace

void to_json(nlohmann::json& j, const ScenarioConfig& c) {
  j = nlohmann::json{
      {"n_t", c.n_t},
      {"n_r", c.n_r},
      {"m_subcarriers", c.m_subcarriers},
      {"l_cp", c.l_cp},
      {"l_symbols", c.l_symbols},
      {"t_subframes", c.t_subframes},
      {"f_c", c.f_c},
      {"delta_f", c.delta_f},
      {"num_users", c.num_users},
      {"u_max", c.u_max},
      {"n_b", c.n_b},
      {"g_t", c.g_t},
      {"n_d", c.n_d},
      {"p_u", c.p_u},
      {"sigma_beta", c.sigma_beta},
      {"rolloff", c.rolloff},
      {"pulse_halfwidth", c.pulse_halfwidth},
      {"p_t", c.p_t},
      {"sigma_c2", c.sigma_c2},
      {"sigma_z2", c.sigma_z2},
      {"sigma_rcs", c.sigma_rcs},
      {"theta_min", c.theta_min},
      {"theta_max", c.theta_max},
      {"d_min", c.d_min},
      {"d_max", c.d_max},
      {"v_min", c.v_min},
      {"v_max", c.v_max},
      {"n_x", c.n_x},
      {"n_y", c.n_y},
      {"alpha_range_floor", c.alpha_range_floor},
      {"sinr_threshold", c.sinr_threshold},
      {"discount", c.discount},
      {"csi_error_std", c.csi_error_std},
      {"spectrum_flip_prob", c.spectrum_flip_prob},
      {"normalize_reward", c.normalize_reward},
      {"reward_scale_samples", c.reward_scale_samples}};
}

void from_json(const nlohmann::json& j, ScenarioConfig& c) {
  detail::check_keys(j, kScenarioKeys, "scenario");
  detail::get_if(j, "n_t", c.n_t);
  detail::get_if(j, "n_r", c.n_r);
  detail::get_if(j, "m_subcarriers", c.m_subcarriers);
  detail::get_if(j, "l_cp", c.l_cp);
  detail::get_if(j, "l_symbols", c.l_symbols);
  detail::get_if(j, "t_subframes", c.t_subframes);
  detail::get_if(j, "f_c", c.f_c);
  detail::get_if(j, "delta_f", c.delta_f);
  detail::get_if(j, "num_users", c.num_users);
  detail::get_if(j, "u_max", c.u_max);
  detail::get_if(j, "n_b", c.n_b);
  detail::get_if(j, "g_t", c.g_t);
  detail::get_if(j, "n_d", c.n_d);
  detail::get_if(j, "p_u", c.p_u);
  detail::get_if(j, "sigma_beta", c.sigma_beta);
  detail::get_if(j, "rolloff", c.rolloff);
  detail::get_if(j, "pulse_halfwidth", c.pulse_halfwidth);
  detail::get_if(j, "p_t", c.p_t);
  detail::get_if(j, "sigma_c2", c.sigma_c2);
  detail::get_if(j, "sigma_z2", c.sigma_z2);
  detail::get_if(j, "sigma_rcs", c.sigma_rcs);
  detail::get_if(j, "theta_min", c.theta_min);
  detail::get_if(j, "theta_max", c.theta_max);
  detail::get_if(j, "d_min", c.d_min);
  detail::get_if(j, "d_max", c.d_max);
  detail::get_if(j, "v_min", c.v_min);
  detail::get_if(j, "v_max", c.v_max);
  detail::get_if(j, "n_x", c.n_x);
  detail::get_if(j, "n_y", c.n_y);
  detail::get_if(j, "alpha_range_floor", c.alpha_range_floor);
  detail::get_if(j, "sinr_threshold", c.sinr_threshold);
  detail::get_if(j, "discount", c.discount);
  detail::get_if(j, "csi_error_std", c.csi_error_std);
  detail::get_if(j, "spectrum_flip_prob", c.spectrum_flip_prob);
  detail::get_if(j, "normalize_reward", c.normalize_reward);
  detail::get_if(j, "reward_scale_samples", c.reward_scale_samples);
}

}  // namespace isacsim
