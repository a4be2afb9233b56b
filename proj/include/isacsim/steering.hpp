#ifndef ISACSIM_STEERING_HPP
#define ISACSIM_STEERING_HPP

#include "isacsim/types.hpp"

namespace isacsim {

// Unit-norm ULA steering vector at half-wavelength spacing,
// a[i] = exp(-j*pi*i*sin(theta)) / sqrt(n), i = 0..n-1.
ComplexVector steering_vector(double theta, int n);

// Elementwise derivative of steering_vector with respect to theta.
ComplexVector steering_derivative(double theta, int n);

// DFT codebook, one codeword per column. Entries are unit modulus and the
// spatial frequencies cover [-1,1) on an even grid, so columns are pairwise
// orthogonal whenever n_b divides evenly into the DFT structure.
ComplexMatrix dft_codebook(int n_t, int n_b);

// Angular dictionary whose columns are conjugated unit-norm steering vectors
// on a g_t-point sin(theta) grid over [-1,1). Row vectors of a channel matrix
// projected through this dictionary concentrate on the column matching the
// departure angle.
ComplexMatrix angular_dictionary(int n_t, int g_t);

// Grid angles (radians) matching angular_dictionary columns.
RealVector dictionary_angles(int g_t);

}  // namespace isacsim

#endif  // ISACSIM_STEERING_HPP
