#ifndef ISACSIM_METRICS_HPP
#define ISACSIM_METRICS_HPP

#include <limits>
#include <vector>

#include "isacsim/channel.hpp"
#include "isacsim/rng.hpp"
#include "isacsim/scenario.hpp"
#include "isacsim/types.hpp"

namespace isacsim {

// Analog precoder: one constant-modulus codeword column per user.
struct Precoder {
  ComplexMatrix f;            // N_t x U
  std::vector<int> codeword;  // codebook column per user, -1 when free-form

  static Precoder from_codewords(const std::vector<int>& codes,
                                 const ComplexMatrix& codebook);
  // Independent uniform codeword draw per user.
  static Precoder random(int num_users, const ComplexMatrix& codebook, Rng& rng);

  void set_column(int user, int code, const ComplexMatrix& codebook);
  bool constant_modulus(double tol = 1e-9) const;
  int num_users() const { return static_cast<int>(f.cols()); }
};

// Sensed point target: kinematic state plus per-subcarrier reflection
// coefficients (round-trip gain, RCS and random phase folded together).
struct TargetState {
  KinematicEntity kin;
  ComplexVector alpha;
};

// Reflection amplitude law, in dB: 5log10(rcs) - 10log10(f_GHz)
// - 20log10(range) + 110. The range is floored by cfg.alpha_range_floor to
// keep the gain finite near the array.
double alpha_amplitude(double f_m_hz, double range_m, const ScenarioConfig& cfg);

// Per-subcarrier reflection coefficients with independent uniform phases.
ComplexVector sample_alpha(double range_m, const ScenarioConfig& cfg, Rng& rng);

// Subcarrier center frequencies, Hz, centered on f_c.
RealVector subcarrier_frequencies(const ScenarioConfig& cfg);

// Per-user-per-subcarrier SINR (U x M) of one OFDM symbol, from the symbol's
// frequency coupling blocks and the precoder. Interference terms follow the
// coupled-subcarrier model: ICI from all users on other subcarriers, IUI from
// other users on the same subcarrier.
RealMatrix sinr_table(const std::vector<ComplexMatrix>& blocks, const ComplexMatrix& f,
                      const ScenarioConfig& cfg);

// Subframe spectral efficiency in bit/s/Hz: sum of log2(1+sinr) over users,
// subcarriers and symbols, normalized by L*T_s*M*delta_f.
double spectral_efficiency(const std::vector<RealMatrix>& sinr_per_symbol,
                           const ScenarioConfig& cfg);

// Angle Fisher information pieces that do not depend on the subcarrier.
// t_aa = Tr(A^H A R_x), t_dd = Tr(Adot^H Adot R_x), t_da = Tr(Adot^H A R_x),
// with A = a_r(theta) a_t^H(theta) and R_x = P_t/(N_t U M) F F^H.
struct FisherGeometry {
  double t_aa = 0.0;
  double t_dd = 0.0;
  cplx t_da{0.0, 0.0};
  bool degenerate = false;  // t_aa vanished; no energy hits the target
};

FisherGeometry fisher_geometry(const ComplexMatrix& f, double theta,
                               const ScenarioConfig& cfg);

// Angle Fisher information contributed by one subcarrier.
double fisher_subcarrier(const FisherGeometry& geom, cplx alpha_m,
                         const ScenarioConfig& cfg);

// CRLB of the target angle: inverse of the summed per-subcarrier Fisher
// information. Returns +inf (and sets degenerate when given) if no subcarrier
// carries information about the angle.
double crlb_angle(const ComplexMatrix& f, const TargetState& target,
                  const ScenarioConfig& cfg, bool* degenerate = nullptr);

// Arithmetic mean of CRLB samples; an infinite sample makes the mean
// infinite. Throws on an empty span.
double averaged_crlb(const std::vector<double>& values);

// Echo samples of `num_symbols` OFDM symbols: column m of entry l is
// G_m x_m^(l) + z with QPSK payloads and CN(0, sigma_z^2) receiver noise.
std::vector<ComplexMatrix> simulate_echo(const ComplexMatrix& f, const TargetState& target,
                                         const ScenarioConfig& cfg, int num_symbols,
                                         Rng& rng);

// Constraint audit of one subframe.
struct ConstraintReport {
  int entries = 0;         // SINR entries checked
  int violations = 0;      // entries below the threshold
  double min_sinr = std::numeric_limits<double>::infinity();
  bool constant_modulus = true;

  bool ok() const { return violations == 0 && constant_modulus; }
};

ConstraintReport check_constraints(const std::vector<RealMatrix>& sinr_per_symbol,
                                   const Precoder& precoder, const ScenarioConfig& cfg);

// Everything the environment reports about one subframe.
struct MetricsReport {
  std::vector<RealMatrix> sinr;  // L tables, U x M
  double se = 0.0;
  RealVector fisher;             // per-subcarrier angle information
  double crlb = std::numeric_limits<double>::infinity();
  bool fisher_degenerate = false;
  ConstraintReport constraints;
};

}  // namespace isacsim

#endif  // ISACSIM_METRICS_HPP
