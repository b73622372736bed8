#include "kam/grid.hpp"

#include <cmath>
#include <numbers>

#include <unsupported/Eigen/FFT>

namespace kam {

Index Grid::size() const {
  Index n = 1;
  for (int j = 0; j < dim; ++j) n *= side;
  return n;
}

Eigen::MatrixXd Grid::nodes() const {
  Eigen::MatrixXd out(dim, size());
  for (Index i = 0; i < out.cols(); ++i) {
    Index rest = i;
    for (int j = 0; j < dim; ++j) {
      out(j, i) = 2.0 * std::numbers::pi * static_cast<double>(rest % side) / side;
      rest /= side;
    }
  }
  return out;
}

int oversampled_side(int order) {
  for (int m = 2 * (2 * order + 1);; ++m) {
    int r = m;
    for (int p : {2, 3, 5}) {
      while (r % p == 0) r /= p;
    }
    if (r == 1) return m;
  }
}

void fft_nd(Eigen::VectorXcd& data, int dim, int side, bool inverse) {
  thread_local Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::Unscaled);
  std::vector<Complex> line(static_cast<std::size_t>(side));
  std::vector<Complex> result(static_cast<std::size_t>(side));
  const Index total = data.size();
  Index stride = 1;
  for (int axis = 0; axis < dim; ++axis) {
    const Index block = stride * side;
    for (Index outer = 0; outer < total; outer += block) {
      for (Index inner = 0; inner < stride; ++inner) {
        const Index base = outer + inner;
        for (int t = 0; t < side; ++t) line[static_cast<std::size_t>(t)] = data[base + t * stride];
        if (inverse) {
          fft.inv(result, line);
        } else {
          fft.fwd(result, line);
        }
        for (int t = 0; t < side; ++t) data[base + t * stride] = result[static_cast<std::size_t>(t)];
      }
    }
    stride = block;
  }
}

namespace {

// Linear grid index of the box mode i (mode components taken mod side).
Index grid_index(const Box& box, Index i, int side) {
  Index g = 0;
  Index stride = 1;
  for (int j = 0; j < box.dim(); ++j) {
    const int k = box.mode(i, j);
    g += static_cast<Index>(k >= 0 ? k : k + side) * stride;
    stride *= side;
  }
  return g;
}

}  // namespace

Eigen::VectorXcd to_grid(const FourierSeries& f, int side) {
  require(side >= 2 * f.order() + 1, ErrorCode::Undersampled, "to_grid",
          "grid too coarse for the truncation order");
  Grid grid{f.dim(), side};
  Eigen::VectorXcd values = Eigen::VectorXcd::Zero(grid.size());
  for (Index i = 0; i < f.coeffs().size(); ++i) {
    if (f[i] != 0.0) values[grid_index(f.box(), i, side)] += f[i];
  }
  fft_nd(values, f.dim(), side, true);
  return values;
}

FourierSeries from_grid(const Eigen::VectorXcd& values, int dim, int side,
                        int order, bool real) {
  require(side >= 2 * order + 1, ErrorCode::Undersampled, "from_grid",
          "grid too coarse for the truncation order");
  Grid grid{dim, side};
  require(values.size() == grid.size(), ErrorCode::DimensionMismatch,
          "from_grid", "sample count does not match the grid");
  Eigen::VectorXcd spectrum = values;
  fft_nd(spectrum, dim, side, false);
  spectrum /= static_cast<double>(grid.size());
  FourierSeries f(dim, order, real);
  for (Index i = 0; i < f.coeffs().size(); ++i) {
    f[i] = spectrum[grid_index(f.box(), i, side)];
  }
  if (real) f.symmetrize();
  return f;
}

Reexpansion reexpand(const Eigen::VectorXcd& values, int dim, int side,
                     int order, bool real) {
  require(side >= 2 * order + 1, ErrorCode::Undersampled, "reexpand",
          "grid too coarse for the truncation order");
  Grid grid{dim, side};
  require(values.size() == grid.size(), ErrorCode::DimensionMismatch,
          "reexpand", "sample count does not match the grid");
  Eigen::VectorXcd spectrum = values;
  fft_nd(spectrum, dim, side, false);
  spectrum /= static_cast<double>(grid.size());

  Reexpansion out{FourierSeries(dim, order, real), 0.0, spectrum.squaredNorm()};
  FourierSeries& f = out.series;
  double inside = 0.0;
  for (Index i = 0; i < f.coeffs().size(); ++i) {
    f[i] = spectrum[grid_index(f.box(), i, side)];
    inside += std::norm(f[i]);
  }
  out.tail_energy = std::max(0.0, out.total_energy - inside);
  if (real) f.symmetrize();
  chop(f, kChopRelative * values.cwiseAbs().maxCoeff());
  return out;
}

}  // namespace kam
