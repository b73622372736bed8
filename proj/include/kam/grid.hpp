#pragma once

#include <vector>

#include <Eigen/Core>

#include "kam/fourier_series.hpp"

namespace kam {

/// Equispaced tensor grid on the torus with `side` nodes per axis; node
/// (i_0, ..., i_{n-1}) sits at theta_j = 2 pi i_j / side and has linear index
/// sum_j i_j side^j.
struct Grid {
  int dim = 1;
  int side = 1;

  Index size() const;
  /// dim x size() matrix of node coordinates.
  Eigen::MatrixXd nodes() const;
};

/// Smallest 2,3,5-smooth side >= 2 (2N + 1): the oversampled grid used for
/// re-expansion after compositions.
int oversampled_side(int order);

/// In-place n-dimensional DFT. Forward: X_k = sum_j x_j e^{-2 pi i jk/M};
/// inverse (unscaled): x_j = sum_k X_k e^{+2 pi i jk/M}.
void fft_nd(Eigen::VectorXcd& data, int dim, int side, bool inverse);

/// Samples of f at the grid nodes. Rejects grids with side < 2N+1.
Eigen::VectorXcd to_grid(const FourierSeries& f, int side);

/// Fourier coefficients of grid samples, truncated to `order`. Rejects
/// side < 2 order + 1. When `real` is set the result is symmetrized.
FourierSeries from_grid(const Eigen::VectorXcd& values, int dim, int side,
                        int order, bool real = true);

/// Result of re-expanding grid samples of a function that is not known to be
/// band-limited.
struct Reexpansion {
  FourierSeries series;
  double tail_energy = 0.0;   ///< sum of |c_k|^2 over grid modes outside the box
  double total_energy = 0.0;  ///< sum of |c_k|^2 over all grid modes
};

/// from_grid plus tail accounting and removal of transform round-off:
/// coefficients below kChopRelative * max|values| are zeroed.
Reexpansion reexpand(const Eigen::VectorXcd& values, int dim, int side,
                     int order, bool real = true);

inline constexpr double kChopRelative = 1e-14;
/// Largest admissible tail_energy / reference energy after a re-expansion.
inline constexpr double kTailTolerance = 1e-10;

}  // namespace kam
