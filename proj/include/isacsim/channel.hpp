#ifndef ISACSIM_CHANNEL_HPP
#define ISACSIM_CHANNEL_HPP

#include <cstdint>
#include <vector>

#include "isacsim/rng.hpp"
#include "isacsim/scenario.hpp"
#include "isacsim/types.hpp"

namespace isacsim {

// One propagation path: complex gain, absolute delay, departure angle and the
// Doppler phase increment per OFDM symbol derived from the path speed.
struct PathParams {
  cplx beta;
  double delay_s = 0.0;
  double aod_rad = 0.0;
  double speed_mps = 0.0;
  double doppler_per_symbol = 0.0;
};

// Phase advanced per OFDM symbol by a path moving at `speed` with departure
// angle `aod`: 2*pi*f_c*speed*T_sym*sin(aod)/c.
double doppler_per_symbol(double speed_mps, double aod_rad, const ScenarioConfig& cfg);

// Independent path set for one user: beta ~ CN(0, sigma_beta^2), delay
// uniform over the tap window, AoD uniform over the sensing angles, speed
// uniform over [v_min, v_max]. Draw order per path is beta, delay, aod, speed.
std::vector<PathParams> sample_paths(const ScenarioConfig& cfg, Rng& rng);

// Point scatterer or user terminal in the polar scene.
struct KinematicEntity {
  double angle_rad = 0.0;
  double range_m = 0.0;
  double speed_mps = 0.0;
  double heading_rad = 0.0;

  double x() const;
  double y() const;
};

// Uniform draws over the sensing scene. Draw order: angle, range, speed,
// heading; heading is uniform over [0, pi).
KinematicEntity sample_entity(const ScenarioConfig& cfg, Rng& rng);

// Advances the entity by dt seconds at constant velocity, reflecting the
// radial velocity component at the range boundaries so the entity stays
// inside [d_min, d_max). Angles wrap when the scene spans the full circle and
// reflect otherwise.
void evolve_entity(KinematicEntity& e, double dt, const ScenarioConfig& cfg);

// Frozen multipath snapshot for one subframe. Within the subframe only the
// Doppler phases evolve; gains, delays and angles are fixed.
class ChannelRealization {
 public:
  ChannelRealization(const ScenarioConfig& cfg,
                     std::vector<std::vector<PathParams>> paths_per_user);

  int num_users() const { return static_cast<int>(paths_.size()); }

  // N_t x U matrix of tap d evaluated at an absolute sample index. Sample
  // indices count cyclic-prefix samples; the Doppler phase of a path advances
  // by doppler_per_symbol/(M+L_cp) per sample.
  ComplexMatrix tap_response(int d, int64_t sample) const;

  // Frequency-domain coupling blocks of one OFDM symbol. Entry m*M+k is the
  // U x N_t response from input subcarrier k to output subcarrier m. The
  // diagonal blocks (k == m) carry the useful signal; off-diagonal blocks are
  // the inter-carrier leakage created by intra-symbol channel variation.
  std::vector<ComplexMatrix> freq_blocks(int symbol) const;

  // Sum of squared block norms of one symbol; equals the sample-domain tap
  // energy when N_d <= M, which the energy-conservation tests rely on.
  static double block_energy(const std::vector<ComplexMatrix>& blocks);

  const std::vector<std::vector<PathParams>>& paths() const { return paths_; }
  const ScenarioConfig& config() const { return cfg_; }

 private:
  ScenarioConfig cfg_;
  std::vector<std::vector<PathParams>> paths_;
  // Per path, per tap pulse gains and the scaled steering vector with the
  // path gain folded in; both are loop invariants of the hot paths.
  struct PathCache {
    std::vector<double> tap_gain;
    ComplexVector steer;
    double phase_per_sample = 0.0;
  };
  std::vector<std::vector<PathCache>> cache_;
};

}  // namespace isacsim

#endif  // ISACSIM_CHANNEL_HPP
