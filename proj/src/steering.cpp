#include "isacsim/steering.hpp"

#include <cmath>
#include <stdexcept>

namespace isacsim {

ComplexVector steering_vector(double theta, int n) {
  if (n <= 0) throw std::invalid_argument("steering_vector: n must be positive");
  const double s = std::sin(theta);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  ComplexVector a(n);
  for (int i = 0; i < n; ++i) {
    const double phase = -kPi * i * s;
    a[i] = scale * cplx(std::cos(phase), std::sin(phase));
  }
  return a;
}

ComplexVector steering_derivative(double theta, int n) {
  if (n <= 0) throw std::invalid_argument("steering_derivative: n must be positive");
  const double c = std::cos(theta);
  ComplexVector a = steering_vector(theta, n);
  for (int i = 0; i < n; ++i) a[i] *= cplx(0.0, -kPi * i * c);
  return a;
}

ComplexMatrix dft_codebook(int n_t, int n_b) {
  if (n_t <= 0 || n_b <= 0) {
    throw std::invalid_argument("dft_codebook: dimensions must be positive");
  }
  ComplexMatrix cb(n_t, n_b);
  for (int b = 0; b < n_b; ++b) {
    const double s = -1.0 + 2.0 * b / n_b;  // spatial frequency grid over [-1,1)
    for (int i = 0; i < n_t; ++i) {
      const double phase = -kPi * i * s;
      cb(i, b) = cplx(std::cos(phase), std::sin(phase));
    }
  }
  return cb;
}

RealVector dictionary_angles(int g_t) {
  if (g_t <= 0) throw std::invalid_argument("dictionary_angles: g_t must be positive");
  RealVector angles(g_t);
  for (int g = 0; g < g_t; ++g) angles[g] = std::asin(-1.0 + 2.0 * g / g_t);
  return angles;
}

ComplexMatrix angular_dictionary(int n_t, int g_t) {
  if (n_t <= 0 || g_t <= 0) {
    throw std::invalid_argument("angular_dictionary: dimensions must be positive");
  }
  ComplexMatrix dict(n_t, g_t);
  const RealVector angles = dictionary_angles(g_t);
  for (int g = 0; g < g_t; ++g) dict.col(g) = steering_vector(angles[g], n_t).conjugate();
  return dict;
}

}  // namespace isacsim
