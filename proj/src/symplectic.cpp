#include "kam/symplectic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "kam/grid.hpp"

namespace kam {

// ---------------------------------------------------------------------------
// Value types

TorusMap TorusMap::identity(int dim, int order) {
  TorusMap m;
  m.v.assign(static_cast<std::size_t>(dim), FourierSeries(dim, order));
  return m;
}

int TorusMap::order() const {
  int n = 0;
  for (const FourierSeries& f : v) n = std::max(n, f.order());
  return n;
}

double TorusMap::norm(double s) const {
  double n = 0.0;
  for (const FourierSeries& f : v) n = std::max(n, majorant_norm(f, s));
  return n;
}

double TorusMap::origin_defect() const {
  double d = 0.0;
  for (const FourierSeries& f : v) d = std::max(d, std::abs(f.coeffs().sum()));
  return d;
}

std::vector<FourierSeries> TorusMap::derivative() const {
  std::vector<FourierSeries> d;
  for (int i = 0; i < dim(); ++i) {
    for (int j = 0; j < dim(); ++j) d.push_back(partial_derivative(v[static_cast<std::size_t>(i)], j));
  }
  return d;
}

TorusMap TorusMap::with_order(int order) const {
  TorusMap m;
  for (const FourierSeries& f : v) m.v.push_back(f.with_order(order));
  return m;
}

ExactOneForm ExactOneForm::zero(int dim, int order) {
  return {FourierSeries(dim, order)};
}

double ExactOneForm::curl_defect() const {
  double d = 0.0;
  const int n = potential.dim();
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      d = std::max(d, majorant_norm(partial_derivative(component(j), i) -
                                        partial_derivative(component(i), j),
                                    0.0));
    }
  }
  return d;
}

FiberedSymplectomorphism FiberedSymplectomorphism::identity(int dim, int order) {
  return {TorusMap::identity(dim, order), ExactOneForm::zero(dim, order)};
}

int FiberedSymplectomorphism::order() const {
  return std::max(phi.order(), rho.potential.order());
}

// ---------------------------------------------------------------------------
// Grid helpers

namespace {

std::vector<const FourierSeries*> pointers(const std::vector<FourierSeries>& list) {
  std::vector<const FourierSeries*> out;
  for (const FourierSeries& f : list) out.push_back(&f);
  return out;
}

// Samples of real series at the nodes of a grid, one column per series.
Eigen::MatrixXd grid_values(const std::vector<FourierSeries>& list, int side) {
  const int dim = list.front().dim();
  const Grid grid{dim, side};
  Eigen::MatrixXd out(grid.size(), static_cast<Index>(list.size()));
  for (std::size_t s = 0; s < list.size(); ++s) {
    out.col(static_cast<Index>(s)) = to_grid(list[s], side).real();
  }
  return out;
}

// Mean square of the largest column; equals its total Fourier energy.
double energy(const Eigen::MatrixXd& values) {
  double e = 0.0;
  for (Index c = 0; c < values.cols(); ++c) {
    e = std::max(e, values.col(c).squaredNorm() / static_cast<double>(values.rows()));
  }
  return e;
}

// Re-expands grid samples (one column per function) and enforces the tail
// tolerance relative to the most energetic column or to `floor`, the energy
// of the inputs, whichever is larger.
std::vector<FourierSeries> reexpand_columns(const Eigen::MatrixXd& values,
                                            int dim, int side, int order,
                                            const char* stage,
                                            double* tail_ratio,
                                            double floor) {
  std::vector<Reexpansion> parts;
  double reference = floor;
  for (Index c = 0; c < values.cols(); ++c) {
    parts.push_back(reexpand(values.col(c).cast<Complex>(), dim, side, order, true));
    reference = std::max(reference, parts.back().total_energy);
  }
  double ratio = 0.0;
  if (reference > 0.0) {
    for (const Reexpansion& r : parts) ratio = std::max(ratio, r.tail_energy / reference);
  }
  if (tail_ratio) *tail_ratio = ratio;
  if (ratio > kTailTolerance) {
    std::ostringstream msg;
    msg << "re-expansion tail ratio " << ratio << " exceeds " << kTailTolerance
        << "; increase the truncation order";
    throw Error(ErrorCode::Aliasing, stage, msg.str());
  }
  std::vector<FourierSeries> out;
  for (Reexpansion& r : parts) out.push_back(std::move(r.series));
  return out;
}

// Values of K(angles_p, L_p r + c_p) as polynomials in r, one row per node
// and one column per monomial. `linear` stores L_p in columns n*p .. n*p+n-1.
Eigen::MatrixXd substitute(const ActionJet& h, const Eigen::MatrixXd& angles,
                           const Eigen::MatrixXd& linear,
                           const Eigen::MatrixXd& shift) {
  const int n = h.dim();
  const MonomialSet& mono = h.monomials();
  const Index count = mono.size();
  const Index nodes = angles.cols();

  std::vector<const FourierSeries*> active;
  std::vector<Index> active_index;
  for (Index i = 0; i < count; ++i) {
    if (!h[i].is_zero()) {
      active.push_back(&h[i]);
      active_index.push_back(i);
    }
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(nodes, count);
  if (active.empty()) return out;
  const Eigen::MatrixXd values = evaluate_real(active, angles);

  auto poly_mul = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(count);
    for (Index i = 0; i < count; ++i) {
      if (a[i] == 0.0) continue;
      for (Index j = 0; j < count; ++j) {
        if (b[j] == 0.0) continue;
        const Index k = mono.sum(i, j);
        if (k >= 0) c[k] += a[i] * b[j];
      }
    }
    return c;
  };

  const int d = h.degree();
  std::vector<std::vector<Eigen::VectorXd>> powers(
      static_cast<std::size_t>(n), std::vector<Eigen::VectorXd>(static_cast<std::size_t>(d + 1)));
  for (Index p = 0; p < nodes; ++p) {
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd form = Eigen::VectorXd::Zero(count);
      form[0] = shift(i, p);
      for (int j = 0; j < n && d >= 1; ++j) form[mono.unit(j)] = linear(i, n * p + j);
      auto& pw = powers[static_cast<std::size_t>(i)];
      pw[0] = Eigen::VectorXd::Unit(count, 0);
      for (int e = 1; e <= d; ++e) {
        pw[static_cast<std::size_t>(e)] = poly_mul(pw[static_cast<std::size_t>(e - 1)], form);
      }
    }
    Eigen::VectorXd total = Eigen::VectorXd::Zero(count);
    for (std::size_t a = 0; a < active.size(); ++a) {
      const auto m = mono.exponent(active_index[a]);
      Eigen::VectorXd term = powers[0][static_cast<std::size_t>(m[0])];
      for (int i = 1; i < n; ++i) {
        if (m[i] > 0) term = poly_mul(term, powers[static_cast<std::size_t>(i)][static_cast<std::size_t>(m[i])]);
      }
      total += values(p, static_cast<Index>(a)) * term;
    }
    out.row(p) = total.transpose();
  }
  return out;
}

ActionJet assemble_jet(const Eigen::MatrixXd& values, int dim, int degree,
                       int side, int order, const char* stage,
                       double* tail_ratio, double floor) {
  auto parts = reexpand_columns(values, dim, side, order, stage, tail_ratio, floor);
  ActionJet out(dim, degree, order);
  for (Index i = 0; i < out.size(); ++i) out[i] = std::move(parts[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace

double energy(const ActionJet& h) {
  double e = 0.0;
  for (Index i = 0; i < h.size(); ++i) e = std::max(e, h[i].coeffs().squaredNorm());
  return e;
}

bool is_identity(const FiberedSymplectomorphism& g) {
  for (const FourierSeries& f : g.phi.v) {
    if (!f.is_zero()) return false;
  }
  return g.rho.potential.is_zero();
}

// ---------------------------------------------------------------------------
// Pointwise maps

Eigen::MatrixXd apply_torus_map(const TorusMap& phi, const Eigen::MatrixXd& points) {
  const Eigen::MatrixXd v = evaluate_real(pointers(phi.v), points);
  return points + v.transpose();
}

void apply(const FiberedSymplectomorphism& g, const Eigen::MatrixXd& theta,
           const Eigen::MatrixXd& r, Eigen::MatrixXd& theta_out,
           Eigen::MatrixXd& r_out) {
  const int n = g.dim();
  std::vector<FourierSeries> list = g.phi.v;
  for (const FourierSeries& f : g.phi.derivative()) list.push_back(f);
  for (int j = 0; j < n; ++j) list.push_back(g.rho.component(j));
  const Eigen::MatrixXd values = evaluate_real(pointers(list), theta);
  theta_out = theta + values.leftCols(n).transpose();
  r_out.resize(n, theta.cols());
  for (Index p = 0; p < theta.cols(); ++p) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) a(i, j) += values(p, n + n * i + j);
    }
    const Eigen::VectorXd rhs = r.col(p) + values.row(p).segment(n + n * n, n).transpose();
    r_out.col(p) = a.transpose().partialPivLu().solve(rhs);
  }
}

PointInversion invert_points(const TorusMap& phi, const Eigen::MatrixXd& targets,
                             double tol, int max_iter) {
  PointInversion out;
  out.points = targets;
  const auto list = pointers(phi.v);
  double last = std::numeric_limits<double>::infinity();
  int growth = 0;
  for (int it = 1; it <= max_iter; ++it) {
    const Eigen::MatrixXd v = evaluate_real(list, out.points).transpose();
    const Eigen::MatrixXd next = targets - v;
    out.residual = (out.points + v - targets).cwiseAbs().maxCoeff();
    out.iterations = it;
    out.points = next;
    if (out.residual <= tol) {
      const Eigen::MatrixXd check = evaluate_real(list, out.points).transpose();
      out.residual = (out.points + check - targets).cwiseAbs().maxCoeff();
      return out;
    }
    growth = out.residual > last ? growth + 1 : 0;
    require(growth < 3, ErrorCode::NonConvergence, "invert_torus_map",
            "fixed-point iteration is not contracting");
    last = out.residual;
  }
  throw Error(ErrorCode::NonConvergence, "invert_torus_map",
              "fixed-point iteration did not reach the tolerance");
}

TorusMap invert_torus_map(const TorusMap& phi, double s, double sigma,
                          double tol, InversionReport* report) {
  const int n = phi.dim();
  const int order = phi.order();
  InversionReport r;
  r.v_norm_mid = phi.norm(s + sigma);
  r.v_norm_far = phi.norm(s + 2 * sigma);
  if (!(r.v_norm_far < sigma)) {
    std::ostringstream msg;
    msg << "|v|_{s+2 sigma} = " << r.v_norm_far << " is not below sigma = " << sigma;
    throw Error(ErrorCode::Certificate, "invert_torus_map", msg.str());
  }
  const int side = oversampled_side(order);
  const Eigen::MatrixXd nodes = Grid{n, side}.nodes();
  const PointInversion inv = invert_points(phi, nodes, std::min(tol, 1e-14) , 1000);
  r.iterations = inv.iterations;
  const Eigen::MatrixXd u = (inv.points - nodes).transpose();
  TorusMap psi;
  psi.v = reexpand_columns(u, n, side, order, "invert_torus_map", &r.tail_ratio,
                           energy(grid_values(phi.v, side)));

  // Residual of the re-expanded inverse on the same grid.
  const Eigen::MatrixXd psi_nodes = nodes + grid_values(psi.v, side).transpose();
  r.residual = (apply_torus_map(phi, psi_nodes) - nodes).cwiseAbs().maxCoeff();

  r.displacement = psi.norm(s);
  const auto d = psi.derivative();
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < n; ++j) row += majorant_norm(d[static_cast<std::size_t>(n * i + j)], s);
    r.derivative = std::max(r.derivative, row);
  }
  r.derivative_bound = 2.0 * r.v_norm_far / sigma;
  r.derivative_proviso = r.derivative_bound <= 1.0;
  r.displacement_ok = r.displacement <= r.v_norm_mid;
  r.derivative_ok = r.derivative <= r.derivative_bound;
  if (report) *report = r;
  require(r.residual <= tol, ErrorCode::NonConvergence, "invert_torus_map",
          "inverse residual above tolerance; increase the truncation order");
  return psi;
}

std::vector<FourierSeries> compose_with_inverse(const std::vector<FourierSeries>& f,
                                                const TorusMap& phi, int order) {
  const int n = phi.dim();
  const int side = oversampled_side(order);
  const Eigen::MatrixXd nodes = Grid{n, side}.nodes();
  const PointInversion inv = invert_points(phi, nodes);
  const Eigen::MatrixXd values = evaluate_real(pointers(f), inv.points);
  return reexpand_columns(values, n, side, order, "compose_with_inverse", nullptr,
                          energy(values));
}

TorusMap compose_torus_maps(const TorusMap& phi2, const TorusMap& phi1) {
  const int n = phi1.dim();
  require(phi2.dim() == n, ErrorCode::DimensionMismatch, "compose_torus_maps",
          "maps of different dimensions");
  const int order = std::max(phi1.order(), phi2.order());
  const int side = oversampled_side(order);
  const Eigen::MatrixXd nodes = Grid{n, side}.nodes();
  const Eigen::MatrixXd v1 = grid_values(phi1.v, side);
  const Eigen::MatrixXd moved = nodes + v1.transpose();
  const Eigen::MatrixXd v2 = evaluate_real(pointers(phi2.v), moved);
  TorusMap out;
  out.v = reexpand_columns(v1 + v2, n, side, order, "compose_torus_maps", nullptr,
                           std::max(energy(v1), energy(v2)));
  return out;
}

FiberedSymplectomorphism group_compose(const FiberedSymplectomorphism& g2,
                                       const FiberedSymplectomorphism& g1,
                                       double* removed_mean) {
  const int n = g1.dim();
  require(g2.dim() == n, ErrorCode::DimensionMismatch, "group_compose",
          "maps of different dimensions");
  const int order = std::max(g1.order(), g2.order());
  const int side = oversampled_side(order);
  const Eigen::MatrixXd nodes = Grid{n, side}.nodes();
  const TorusMap phi1 = g1.phi.with_order(order);
  const Eigen::MatrixXd v1 = grid_values(phi1.v, side);
  const Eigen::MatrixXd moved = nodes + v1.transpose();

  std::vector<FourierSeries> outer = g2.phi.v;
  outer.push_back(g2.rho.potential);
  const Eigen::MatrixXd values = evaluate_real(pointers(outer), moved);

  Eigen::MatrixXd columns(values.rows(), n + 1);
  columns.leftCols(n) = v1 + values.leftCols(n);
  columns.col(n) = to_grid(g1.rho.potential.with_order(order), side).real() + values.col(n);
  auto parts = reexpand_columns(columns, n, side, order, "group_compose", nullptr,
                                std::max(energy(v1), energy(values)));

  FiberedSymplectomorphism out;
  out.phi.v.assign(parts.begin(), parts.begin() + n);
  FourierSeries s = parts[static_cast<std::size_t>(n)];
  const double mean = s.average().real();
  s[s.box().center()] = 0.0;
  if (removed_mean) *removed_mean = mean;
  out.rho.potential = std::move(s);
  return out;
}

// ---------------------------------------------------------------------------
// Jets

ActionJet pullback_jet(const ActionJet& h, const FiberedSymplectomorphism& g,
                       double* tail_ratio) {
  const int n = h.dim();
  require(g.dim() == n, ErrorCode::DimensionMismatch, "pullback_jet",
          "jet and map of different dimensions");
  const int order = std::max(h.order(), g.order());
  if (is_identity(g)) {
    if (tail_ratio) *tail_ratio = 0.0;
    return h.with_order(order);
  }
  const int side = oversampled_side(order);
  const Eigen::MatrixXd nodes = Grid{n, side}.nodes();

  std::vector<FourierSeries> list = g.phi.with_order(order).v;
  for (const FourierSeries& f : g.phi.with_order(order).derivative()) list.push_back(f);
  for (int j = 0; j < n; ++j) list.push_back(g.rho.component(j).with_order(order));
  const Eigen::MatrixXd values = grid_values(list, side);

  const Index count = nodes.cols();
  Eigen::MatrixXd angles = nodes + values.leftCols(n).transpose();
  Eigen::MatrixXd linear(n, n * count);
  Eigen::MatrixXd shift(n, count);
  for (Index p = 0; p < count; ++p) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) a(i, j) += values(p, n + n * i + j);
    }
    const auto lu = a.transpose().partialPivLu();
    require(std::abs(lu.determinant()) > 1e-12, ErrorCode::SingularJacobian,
            "pullback_jet", "singular Jacobian at a grid node");
    const Eigen::MatrixXd b = lu.inverse();
    linear.middleCols(n * p, n) = b;
    shift.col(p) = b * values.row(p).segment(n + n * n, n).transpose();
  }
  const Eigen::MatrixXd sub = substitute(h, angles, linear, shift);
  return assemble_jet(sub, n, h.degree(), side, order, "pullback_jet", tail_ratio,
                      energy(h));
}

ActionJet pullback_by_inverse(const ActionJet& h,
                              const FiberedSymplectomorphism& g,
                              double* tail_ratio, double reference_energy) {
  const int n = h.dim();
  require(g.dim() == n, ErrorCode::DimensionMismatch, "pullback_by_inverse",
          "jet and map of different dimensions");
  const int order = std::max(h.order(), g.order());
  if (is_identity(g)) {
    if (tail_ratio) *tail_ratio = 0.0;
    return h.with_order(order);
  }
  const int side = oversampled_side(order);
  const Eigen::MatrixXd nodes = Grid{n, side}.nodes();
  const Index count = nodes.cols();

  const PointInversion inv = invert_points(g.phi, nodes);
  std::vector<FourierSeries> list = g.phi.derivative();
  for (int j = 0; j < n; ++j) list.push_back(g.rho.component(j));
  const Eigen::MatrixXd values = evaluate_real(pointers(list), inv.points);

  Eigen::MatrixXd linear(n, n * count);
  Eigen::MatrixXd shift(n, count);
  for (Index p = 0; p < count; ++p) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) a(i, j) += values(p, n * i + j);
    }
    linear.middleCols(n * p, n) = a.transpose();
    shift.col(p) = -values.row(p).segment(n * n, n).transpose();
  }
  const Eigen::MatrixXd sub = substitute(h, inv.points, linear, shift);
  return assemble_jet(sub, n, h.degree(), side, order, "pullback_by_inverse",
                      tail_ratio, std::max(energy(h), reference_energy));
}

double pulled_norm(const ActionJet& h, const FiberedSymplectomorphism& g,
                   double s) {
  return jet_norm(pullback_by_inverse(h, g), s);
}

ActionJet lie_transform(const ActionJet& h, const ActionJet& w, int degree) {
  check_same_shape(h, w, "lie_transform");
  for (Index i = 0; i < w.size(); ++i) {
    require(w.monomials().degree_of(i) >= 2 || w[i].is_zero(),
            ErrorCode::InvalidArgument, "lie_transform",
            "generator must be O(r^2)");
  }
  const int order = std::max(h.order(), w.order());
  ActionJet wd = w.with_degree(degree).with_order(order);
  ActionJet term = h.with_degree(degree).with_order(order);
  ActionJet sum = term;
  // Each bracket with W raises the lowest r-degree by at least one.
  for (int j = 1; j <= degree + 1; ++j) {
    term = poisson_bracket(wd, term, order);
    term *= 1.0 / j;
    if (term.is_zero()) break;
    sum += term;
  }
  return sum;
}

double min_jacobian_determinant(const TorusMap& phi) {
  const int n = phi.dim();
  const int side = oversampled_side(phi.order());
  const Eigen::MatrixXd values = grid_values(phi.derivative(), side);
  double best = std::numeric_limits<double>::infinity();
  for (Index p = 0; p < values.rows(); ++p) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) a(i, j) += values(p, n * i + j);
    }
    best = std::min(best, a.determinant());
  }
  return best;
}

}  // namespace kam
