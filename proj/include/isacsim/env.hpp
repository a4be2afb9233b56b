#ifndef ISACSIM_ENV_HPP
#define ISACSIM_ENV_HPP

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "isacsim/channel.hpp"
#include "isacsim/metrics.hpp"
#include "isacsim/rng.hpp"
#include "isacsim/scenario.hpp"
#include "isacsim/tensor.hpp"

namespace isacsim {

// Occupancy codes of the position spectrum.
inline constexpr uint8_t kSpectrumEmpty = 0;
inline constexpr uint8_t kSpectrumUser = 1;
inline constexpr uint8_t kSpectrumTarget = 2;

using Spectrum = std::vector<uint8_t>;  // row-major N_x x N_y
using SpectrumPtr = std::shared_ptr<const Spectrum>;

// Observation handed to policies. The beamspace tensor is frozen for a whole
// frame and therefore shared; spectra are shared slot-wise because adjacent
// states overlap in two of their three slots.
struct EnvState {
  std::shared_ptr<const Tensor> s_h;  // N_d x U_max x G_t magnitudes
  std::array<SpectrumPtr, 3> s_p;     // oldest -> newest

  // Dense copies in network input layout.
  Tensor s_p_tensor(int n_x, int n_y) const;
};

struct ActionCode {
  std::vector<double> raw;  // [0,1]^{N_A}
  int user_index = 0;
  int codeword_index = 0;
};

struct StepOutcome {
  EnvState next_state;
  double reward = 0.0;
  double cost = 0.0;
  bool done = false;
  MetricsReport info;
};

struct EpisodeBudget {
  double gamma = 0.6;
  double eta_c = 0.0;
  double gamma_c = 0.0;
};

// eta_c per subframe and the discounted budget over the T-subframe episode:
// gamma_c = -eta_c * sum_{t=0}^{T-1} gamma^t.
EpisodeBudget episode_budget(const ScenarioConfig& cfg);

// Rounds raw coordinates to bits, splits them big-endian into user and
// codeword fields, and reduces both modulo their valid ranges.
ActionCode decode_action(const std::vector<double>& raw, int num_users,
                         const ScenarioConfig& cfg);

// Exact binary encoding of (user_index, codeword_index); inverse of
// decode_action on its feasible range.
std::vector<double> encode_action(int user_index, int codeword_index,
                                  const ScenarioConfig& cfg);

// Grid cell of a polar position; positions outside the sensing range clamp to
// the border cells.
std::pair<int, int> spectrum_cell(double theta, double range, const ScenarioConfig& cfg);

// Spectrum from explicit user and target positions (angle, range pairs).
// Target cells win collisions.
Spectrum build_position_spectrum(const std::vector<std::pair<double, double>>& users_polar,
                                 const std::vector<std::pair<double, double>>& targets_polar,
                                 const ScenarioConfig& cfg);

// Beamspace magnitude tensor from per-tap channel estimates (U x N_t each):
// slot [d][u][g] = |(H_d D_t)(u, g)|, rows for absent users left zero.
Tensor build_channel_state(const std::vector<ComplexMatrix>& tap_estimates,
                           const ComplexMatrix& dictionary, int u_max,
                           const ScenarioConfig& cfg);

// The constrained MDP: one instance simulates one frame (episode) at a time.
// All randomness comes from labeled substreams of the seed, and the draw
// sequence per reset/step does not depend on the actions taken, so every
// policy sees the same environment trajectory for a given seed.
class Environment {
 public:
  Environment(const ScenarioConfig& cfg, uint64_t seed);

  EnvState reset();

  // Applies the decoded action to one precoder column, simulates the current
  // subframe, evolves the scene, and returns the transition.
  StepOutcome step(const ActionCode& action);

  // Same transition but with the entire precoder supplied by the caller;
  // used by search baselines that bypass the codeword action space.
  StepOutcome step_with_precoder(const Precoder& precoder);

  const EnvState& state() const { return state_; }
  int subframe() const { return t_; }
  bool done() const { return done_; }
  bool started() const { return started_; }
  const ScenarioConfig& config() const { return cfg_; }
  const Precoder& precoder() const { return precoder_; }
  const ComplexMatrix& codebook() const { return codebook_; }
  const ComplexMatrix& dictionary() const { return dictionary_; }
  double reward_scale() const { return rho_; }

  // Perfect-prior accessors for benchmark policies and tests. They expose
  // the upcoming subframe exactly as step() will simulate it and never
  // advance the environment.
  const TargetState& oracle_target() const { return target_; }
  const ChannelRealization& oracle_channel() const;
  const std::vector<std::vector<ComplexMatrix>>& oracle_subframe_blocks() const;

 private:
  enum StreamLabel : uint64_t {
    kStreamUsers = 1,
    kStreamScatterers = 2,
    kStreamExcess = 3,
    kStreamBeta = 4,
    kStreamTarget = 5,
    kStreamAlpha = 6,
    kStreamCsi = 7,
    kStreamSpectrum = 8,
    kStreamRho = 9,
    kStreamInitF = 10,
  };

  std::vector<std::vector<PathParams>> current_paths() const;
  Spectrum current_spectrum(Rng& flip_rng) const;
  StepOutcome simulate_subframe();

  ScenarioConfig cfg_;
  uint64_t seed_ = 0;
  uint64_t episode_ = 0;
  ComplexMatrix codebook_;
  ComplexMatrix dictionary_;

  // Episode state.
  std::vector<KinematicEntity> users_;
  std::vector<std::vector<KinematicEntity>> scatterers_;  // per user, P_u-1
  std::vector<std::vector<double>> excess_delay_;
  std::vector<std::vector<cplx>> beta_;
  TargetState target_;
  Precoder precoder_;
  EnvState state_;
  Rng alpha_rng_{0};
  Rng spectrum_rng_{0};
  double rho_ = 1.0;
  int t_ = 0;
  bool done_ = true;
  bool started_ = false;

  // Lazy caches of the current subframe, invalidated by scene evolution.
  mutable std::unique_ptr<ChannelRealization> realization_;
  mutable std::vector<std::vector<ComplexMatrix>> blocks_;
};

}  // namespace isacsim

#endif  // ISACSIM_ENV_HPP
