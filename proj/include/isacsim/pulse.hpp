#ifndef ISACSIM_PULSE_HPP
#define ISACSIM_PULSE_HPP

#include <cmath>
#include <stdexcept>

namespace isacsim {

inline double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = 3.141592653589793238462643383279502884 * x;
  return std::sin(px) / px;
}

// Raised-cosine impulse response evaluated at x sample periods. The direct
// formula is 0/0 at |x| = 1/(2*rolloff); within a small band around that
// point the analytic limit (pi/4)*sinc(x) is used instead.
inline double raised_cosine(double x, double rolloff) {
  if (rolloff < 0.0 || rolloff > 1.0) {
    throw std::invalid_argument("raised_cosine: rolloff must lie in [0,1]");
  }
  constexpr double kPi = 3.141592653589793238462643383279502884;
  if (rolloff == 0.0) return sinc(x);
  const double q = 2.0 * rolloff * x;
  const double den = 1.0 - q * q;
  if (std::abs(den) < 1e-9) return (kPi / 4.0) * sinc(x);
  return sinc(x) * std::cos(kPi * rolloff * x) / den;
}

// Truncated raised-cosine pulse used as the band-limited tap interpolator.
struct RaisedCosinePulse {
  double rolloff = 0.4;
  double halfwidth = 4.0;  // support is |x| <= halfwidth sample periods

  double operator()(double x) const {
    if (std::abs(x) > halfwidth) return 0.0;
    return raised_cosine(x, rolloff);
  }
};

}  // namespace isacsim

#endif  // ISACSIM_PULSE_HPP
