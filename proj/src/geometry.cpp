#include "fsplate/geometry.hpp"

#include <cmath>

#include "fsplate/fourier.hpp"

namespace fsplate::geom {

TorusGrid::TorusGrid(int dim_, double L1_, int n_modes_, double L2_)
    : dim(dim_), L1(L1_), L2(L2_), n_modes(n_modes_) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("TorusGrid: dim must be 2 or 3");
  if (L1 <= 0 || (dim == 3 && L2 <= 0)) throw std::invalid_argument("TorusGrid: periods must be positive");
  if (n_modes < 4 || n_modes % 2 != 0) throw std::invalid_argument("TorusGrid: n_modes must be even and >= 4");
}

Eigen::VectorXd TorusGrid::nodes1() const { return fourier::nodes(n_modes, L1); }

PlateProfile::PlateProfile(const TorusGrid& g, Eigen::VectorXd v, bool mean_zero_flag)
    : grid(g), values(std::move(v)), mean_zero(mean_zero_flag) {
  if (values.size() != g.node_count())
    throw std::invalid_argument("PlateProfile: value count does not match grid");
  if (mean_zero && std::abs(mean()) > 1e-12 * std::max(1e-300, max_abs()))
    throw std::invalid_argument("PlateProfile: mean_zero flag set but mean is not zero");
}

double PlateProfile::mean() const { return values.size() ? values.mean() : 0.0; }

bool PlateProfile::admissible(double floor) const {
  return (1.0 + values.array()).minCoeff() > floor;
}

void PlateProfile::require_admissible(const char* what) const {
  if (!admissible())
    throw std::invalid_argument(std::string(what) + ": profile violates 1+eta > 0");
}

PlateProfile PlateProfile::zero(const TorusGrid& g) {
  return PlateProfile(g, Eigen::VectorXd::Zero(g.node_count()), true);
}

PlateProfile PlateProfile::derivative(int dir, int order) const {
  const int n = grid.n_modes;
  Eigen::VectorXd out(values.size());
  if (grid.dim == 2) {
    out = fourier::derivative(values, grid.L1, order);
  } else {
    if (dir == 0) {
      Eigen::MatrixXd D = fourier::diff_matrix(n, grid.L1, order);
      Eigen::Map<const Eigen::MatrixXd> V(values.data(), n, n);  // (i2, i1) col-major
      Eigen::MatrixXd R = (D * V.transpose()).transpose();       // derivative in i1
      out = Eigen::Map<Eigen::VectorXd>(R.data(), n * n);
    } else {
      Eigen::MatrixXd D = fourier::diff_matrix(n, grid.L2, order);
      Eigen::Map<const Eigen::MatrixXd> V(values.data(), n, n);
      Eigen::MatrixXd R = D * V;
      out = Eigen::Map<Eigen::VectorXd>(R.data(), n * n);
    }
  }
  bool mz = order >= 1 ? true : mean_zero;
  PlateProfile p;
  p.grid = grid;
  p.values = std::move(out);
  p.mean_zero = mz;
  return p;
}

namespace {

// Trig interpolation in one direction via coefficients.
double eval1d(const Eigen::VectorXd& vals, double L, double s, int deriv) {
  const int n = static_cast<int>(vals.size());
  Eigen::VectorXd c = fourier::analysis(n) * vals;
  double out = (deriv == 0) ? c[0] : 0.0;
  for (int k = 1; k < n / 2; ++k) {
    double kb = 2.0 * M_PI * k / L;
    double a = c[2 * k - 1], b = c[2 * k];
    double ph = kb * s;
    if (deriv == 0)
      out += a * std::cos(ph) + b * std::sin(ph);
    else
      out += kb * (-a * std::sin(ph) + b * std::cos(ph));
  }
  if (deriv == 0) out += c[n - 1] * std::cos(M_PI * n * s / L);
  return out;
}

}  // namespace

double PlateProfile::eval(const Eigen::VectorXd& s) const {
  const int n = grid.n_modes;
  if (grid.dim == 2) return eval1d(values, grid.L1, s[0], 0);
  // Interpolate along direction 1 at each i2 row, then along direction 2.
  Eigen::VectorXd row(n);
  Eigen::Map<const Eigen::MatrixXd> V(values.data(), n, n);  // (i2, i1)
  for (int i2 = 0; i2 < n; ++i2) row[i2] = eval1d(V.row(i2).transpose(), grid.L1, s[0], 0);
  return eval1d(row, grid.L2, s[1], 0);
}

double PlateProfile::eval_deriv(const Eigen::VectorXd& s, int dir) const {
  const int n = grid.n_modes;
  if (grid.dim == 2) return eval1d(values, grid.L1, s[0], 1);
  Eigen::Map<const Eigen::MatrixXd> V(values.data(), n, n);
  Eigen::VectorXd row(n);
  if (dir == 0) {
    for (int i2 = 0; i2 < n; ++i2) row[i2] = eval1d(V.row(i2).transpose(), grid.L1, s[0], 1);
    return eval1d(row, grid.L2, s[1], 0);
  }
  for (int i2 = 0; i2 < n; ++i2) row[i2] = eval1d(V.row(i2).transpose(), grid.L1, s[0], 0);
  return eval1d(row, grid.L2, s[1], 1);
}

ReferenceDomain::ReferenceDomain(const TorusGrid& g, int n_vertical_, PlateProfile etaS_)
    : grid(g), n_vertical(n_vertical_), etaS(std::move(etaS_)) {
  etaS.require_admissible("ReferenceDomain");
  if (n_vertical < 4) throw std::invalid_argument("ReferenceDomain: n_vertical too small");
}

Eigen::VectorXd domain_map(const PlateProfile& eta1, const PlateProfile& eta2,
                           const Eigen::VectorXd& y) {
  eta1.require_admissible("domain_map");
  eta2.require_admissible("domain_map");
  const int d = eta1.grid.dim;
  Eigen::VectorXd s = y.head(d - 1);
  double e1 = eta1.eval(s), e2 = eta2.eval(s);
  if (1.0 + e1 <= kAdmissibilityFloor || 1.0 + e2 <= kAdmissibilityFloor)
    throw std::invalid_argument("domain_map: profile violates 1+eta > 0 at the point");
  Eigen::VectorXd x = y;
  x[d - 1] = y[d - 1] * (1.0 + e2) / (1.0 + e1);
  return x;
}

MapJacobian map_jacobian(const PlateProfile& eta1, const PlateProfile& eta2,
                         const Eigen::VectorXd& y) {
  eta1.require_admissible("map_jacobian");
  eta2.require_admissible("map_jacobian");
  const int d = eta1.grid.dim;
  Eigen::VectorXd s = y.head(d - 1);
  double e1 = eta1.eval(s), e2 = eta2.eval(s);
  double rho = (1.0 + e2) / (1.0 + e1);
  MapJacobian J;
  J.grad = Eigen::MatrixXd::Identity(d, d);
  for (int j = 0; j < d - 1; ++j) {
    double d1 = eta1.eval_deriv(s, j), d2 = eta2.eval_deriv(s, j);
    // d/ds_j [(1+eta2)/(1+eta1)]
    double drho = (d2 * (1.0 + e1) - (1.0 + e2) * d1) / ((1.0 + e1) * (1.0 + e1));
    J.grad(d - 1, j) = y[d - 1] * drho;
  }
  J.grad(d - 1, d - 1) = rho;
  J.det = rho;
  return J;
}

Eigen::MatrixXd cofactor(const Eigen::MatrixXd& M) {
  const int n = static_cast<int>(M.rows());
  if (M.cols() != n || (n != 2 && n != 3))
    throw std::invalid_argument("cofactor: matrix must be 2x2 or 3x3");
  Eigen::MatrixXd C(n, n);
  if (n == 2) {
    C << M(1, 1), -M(1, 0), -M(0, 1), M(0, 0);
  } else {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        int i1 = (i + 1) % 3, i2 = (i + 2) % 3;
        int j1 = (j + 1) % 3, j2 = (j + 2) % 3;
        C(i, j) = M(i1, j1) * M(i2, j2) - M(i1, j2) * M(i2, j1);
      }
  }
  return C;
}

BoundaryFrame boundary_frame(const PlateProfile& eta) {
  eta.require_admissible("boundary_frame");
  const TorusGrid& g = eta.grid;
  const int d = g.dim;
  const int m = g.node_count();
  BoundaryFrame f;
  f.normal_top.resize(m, d);
  f.unnormalized_top.resize(m, d);
  f.tau1_top.resize(m, d);
  if (d == 3) f.tau2_top.resize(m, d);
  f.norm_N.resize(m);
  PlateProfile d1 = eta.derivative(0);
  PlateProfile d2 = d == 3 ? eta.derivative(1) : PlateProfile();
  for (int i = 0; i < m; ++i) {
    Eigen::VectorXd N(d), t1 = Eigen::VectorXd::Zero(d);
    if (d == 2) {
      N << -d1.values[i], 1.0;
      t1 << 1.0, d1.values[i];
    } else {
      N << -d1.values[i], -d2.values[i], 1.0;
      t1 << 1.0, 0.0, d1.values[i];
      Eigen::VectorXd t2(3);
      t2 << 0.0, 1.0, d2.values[i];
      f.tau2_top.row(i) = t2.transpose();
    }
    double nn = N.norm();
    f.unnormalized_top.row(i) = N.transpose();
    f.normal_top.row(i) = (N / nn).transpose();
    f.tau1_top.row(i) = t1.transpose();
    f.norm_N[i] = nn;
  }
  return f;
}

Eigen::VectorXd piola_point(const PlateProfile& eta_src, const PlateProfile& eta_dst,
                            const Eigen::VectorXd& y, const Eigen::VectorXd& U_at_Xy) {
  MapJacobian J = map_jacobian(eta_dst, eta_src, y);  // X: Omega(eta_dst) -> Omega(eta_src)
  return cofactor(J.grad).transpose() * U_at_Xy;
}

double traction_force_density(const Eigen::MatrixXd& gradU, double p, double nu,
                              const Eigen::VectorXd& N_unnormalized) {
  const int d = static_cast<int>(gradU.rows());
  Eigen::MatrixXd D = 0.5 * (gradU + gradU.transpose());
  Eigen::MatrixXd T = -p * Eigen::MatrixXd::Identity(d, d) + 2.0 * nu * D;
  // -|N| (T n . e_z) with n = N/|N|: the norms cancel against N.
  Eigen::VectorXd TN = T * N_unnormalized;
  return -TN[d - 1];
}

}  // namespace fsplate::geom
