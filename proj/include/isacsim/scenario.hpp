#ifndef ISACSIM_SCENARIO_HPP
#define ISACSIM_SCENARIO_HPP

#include <cmath>
#include <string>

#include <json.hpp>

#include "isacsim/types.hpp"

namespace isacsim {

// Static description of one simulated deployment: array geometry, OFDM
// numerology, channel statistics, sensing scene and constraint levels.
// Everything an Environment needs besides the seed lives here.
struct ScenarioConfig {
  // Arrays and OFDM numerology.
  int n_t = 32;            // transmit antennas
  int n_r = 32;            // receive antennas
  int m_subcarriers = 32;  // subcarriers per symbol
  int l_cp = 8;            // cyclic prefix length in samples
  int l_symbols = 32;      // OFDM symbols per subframe
  int t_subframes = 100;   // subframes per frame (one episode)
  double f_c = 28e9;       // carrier frequency, Hz
  double delta_f = 30e3;   // subcarrier spacing, Hz

  // Users, codebook, beamspace dictionary.
  int num_users = 4;
  int u_max = 16;  // user capacity of the action encoding and state layout
  int n_b = 32;    // DFT codebook size
  int g_t = 64;    // angular dictionary size

  // Time-domain channel.
  int n_d = 8;  // channel taps
  int p_u = 4;  // resolvable paths per user
  double sigma_beta = 1.0;
  double rolloff = 0.4;
  double pulse_halfwidth = 4.0;  // raised-cosine support in sample periods

  // Power and noise.
  double p_t = 1e-3;       // transmit power, W (10 dB SNR at -10 dBm noise)
  double sigma_c2 = 1e-4;  // downlink noise variance
  double sigma_z2 = 1e-4;  // echo receiver noise variance

  // Sensing scene.
  double sigma_rcs = 10.0;
  double theta_min = -kPi;
  double theta_max = kPi;
  double d_min = 0.0;
  double d_max = 50.0;
  double v_min = 10.0;
  double v_max = 30.0;
  int n_x = 64;  // angle grid cells of the position spectrum
  int n_y = 50;  // range grid cells of the position spectrum
  double alpha_range_floor = 1.0;  // range floor (m) in the reflection gain law

  // Constraint level (linear SINR threshold) and CMDP discount.
  double sinr_threshold = 2.0;
  double discount = 0.6;

  // Environment observation model.
  double csi_error_std = 0.0;      // per-entry std of the tap estimate error
  double spectrum_flip_prob = 0.0; // probability a spectrum cell is misdetected
  bool normalize_reward = true;
  int reward_scale_samples = 32;   // random precoders used to set the scale

  // Derived quantities.
  double symbol_period() const { return 1.0 / delta_f; }
  double sample_period() const { return 1.0 / (m_subcarriers * delta_f); }
  int samples_per_symbol() const { return m_subcarriers + l_cp; }
  double subframe_duration() const {
    return l_symbols * samples_per_symbol() * sample_period();
  }
  double snr_db() const { return 10.0 * std::log10(p_t / sigma_c2); }
  void set_snr_db(double snr) { p_t = sigma_c2 * std::pow(10.0, snr / 10.0); }

  // Per-subframe spectral efficiency threshold.
  double eta_c() const {
    return num_users * std::log2(1.0 + sinr_threshold) / (symbol_period() * delta_f);
  }

  int user_bits() const { return ceil_log2(u_max); }
  int code_bits() const { return ceil_log2(n_b); }
  int action_dim() const { return user_bits() + code_bits(); }

  // Throws std::invalid_argument on the first violated requirement.
  void validate() const;

  static int ceil_log2(int x);
};

void to_json(nlohmann::json& j, const ScenarioConfig& c);
void from_json(const nlohmann::json& j, ScenarioConfig& c);

namespace detail {
// Rejects keys outside the serialized field set, so config typos fail loudly
// instead of silently keeping a default.
void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                const char* where);

template <typename T>
void get_if(const nlohmann::json& j, const char* key, T& value) {
  if (j.contains(key)) j.at(key).get_to(value);
}
}  // namespace detail

}  // namespace isacsim

#endif  // ISACSIM_SCENARIO_HPP
