#ifndef ISACSIM_TYPES_HPP
#define ISACSIM_TYPES_HPP

#include <complex>

#include <Eigen/Dense>

namespace isacsim {

using cplx = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

inline constexpr double kSpeedOfLight = 3.0e8;  // m/s, propagation constant
inline constexpr double kPi = 3.141592653589793238462643383279502884;

inline constexpr cplx kImag{0.0, 1.0};

}  // namespace isacsim

#endif  // ISACSIM_TYPES_HPP
