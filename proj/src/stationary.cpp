#include "fsplate/stationary.hpp"

#include <cmath>

#include "fsplate/fourier.hpp"

namespace fsplate::ops {

namespace {

struct SteadyWorkspace {
  const ChannelGrid* grid;
  double nu, alpha;
  std::function<Eigen::Vector2d(double, double)> fS;
  std::function<double(double)> hS;
  double beta1, beta2;
  PlateProfile flat;       // reference profile 0
  Eigen::VectorXd hS_vals; // mean-zero projected forcing on omega
  Eigen::VectorXd kpow4;   // plate symbol per retained coefficient slot

  int ns() const { return grid->ns(); }
  int nz() const { return grid->nz(); }
  int n_unknowns() const { return 3 * ns() * nz() + ns() - 2; }
  int n_rows() const {
    return 2 * ns() * (nz() - 2) + ns() * nz() + 4 * ns() + (ns() - 2) + 2;
  }

  void unpack(const Eigen::VectorXd& q, FluidField& u, Field& p,
              PlateProfile& eta) const {
    const int N = ns() * nz();
    // flattening is s-major: q[i*nz + j]
    u.ux = Eigen::Map<const Field>(q.data(), nz(), ns()).transpose();
    u.uz = Eigen::Map<const Field>(q.data() + N, nz(), ns()).transpose();
    p = Eigen::Map<const Field>(q.data() + 2 * N, nz(), ns()).transpose();
    eta.grid = grid->torus;
    eta.values = plate_coeffs_to_values(*grid, q.segment(3 * N, ns() - 2));
    eta.mean_zero = true;
  }

  Eigen::VectorXd residual(const Eigen::VectorXd& q) const {
    FluidField u;
    Field p;
    PlateProfile eta;
    unpack(q, u, p, eta);
    if (!eta.admissible())
      return Eigen::VectorXd::Constant(n_rows(), 1e6);

    DomainOps flat_ops(*grid, flat);
    PlateProfile zero_t = PlateProfile::zero(grid->torus);
    MapData md = build_map(*grid, flat, eta, zero_t);
    VelocityDerivs v = velocity_derivs(flat_ops, u, true);
    FluidField mom = steady_residual(md, flat_ops, u, p, nu);
    if (fS) {
      for (int i = 0; i < ns(); ++i)
        for (int j = 0; j < nz(); ++j) {
          double det = 1.0 + eta.values[i];
          Eigen::Vector2d f = fS(grid->s[i], grid->z[j] * det);
          mom.ux(i, j) -= det * f[0];
          mom.uz(i, j) -= det * f[1];
        }
    }

    Eigen::VectorXd r(n_rows());
    int at = 0;
    for (int i = 0; i < ns(); ++i)
      for (int j = 1; j < nz() - 1; ++j) r[at++] = mom.ux(i, j);
    for (int i = 0; i < ns(); ++i)
      for (int j = 1; j < nz() - 1; ++j) r[at++] = mom.uz(i, j);

    Field div = flat_ops.dx(u.ux) + flat_ops.dz(u.uz);
    for (int i = 0; i < ns(); ++i)
      for (int j = 0; j < nz(); ++j) r[at++] = div(i, j);

    // impermeability through the map: u . N_flat = 0 at both walls
    for (int i = 0; i < ns(); ++i) r[at++] = u.uz(i, nz() - 1);
    for (int i = 0; i < ns(); ++i) r[at++] = u.uz(i, 0);

    // transformed Navier friction rows: W . tau~(X) = 0
    BoundaryOps b = boundary_ops(md, v, zero_t, nu, beta1, beta2);
    Eigen::VectorXd eta_s = eta.derivative(0).values;
    for (int i = 0; i < ns(); ++i)
      r[at++] = b.W_top(i, 0) + b.W_top(i, 1) * eta_s[i];
    for (int i = 0; i < ns(); ++i) r[at++] = b.W_bot(i, 0);

    // plate: alpha biLaplacian eta = M(p - 2 nu dz u_z)|top + H + M hS
    Eigen::VectorXd force(ns());
    Field uz_z = flat_ops.dz(u.uz);
    for (int i = 0; i < ns(); ++i)
      force[i] = p(i, nz() - 1) - 2.0 * nu * uz_z(i, nz() - 1);
    force.array() -= force.mean();
    force += plate_force_H(md, v, nu);
    force += hS_vals;
    Eigen::VectorXd fc = plate_values_to_coeffs(*grid, force);
    Eigen::VectorXd ec = q.segment(3 * ns() * nz(), ns() - 2);
    for (int k = 0; k < ns() - 2; ++k) r[at++] = alpha * kpow4[k] * ec[k] - fc[k];

    r[at++] = p.mean();  // pressure gauge
    double pnyq = 0.0;   // sawtooth pressure mode carries no discrete gradient
    for (int i = 0; i < ns(); ++i)
      for (int j = 0; j < nz(); ++j) pnyq += (i % 2 == 0 ? 1.0 : -1.0) * p(i, j);
    r[at++] = pnyq / (ns() * nz());
    return r;
  }
};

}  // namespace

StationaryState steady_state_solve(const ChannelGrid& grid, double nu, double alpha,
                                   double delta, double beta1, double beta2,
                                   std::function<Eigen::Vector2d(double, double)> fS,
                                   std::function<double(double)> hS,
                                   const SteadySolveOptions& opts,
                                   SteadySolveReport* report) {
  if (!fS && !hS) {
    StationaryState st = StationaryState::zero(grid, nu, alpha, delta, beta1, beta2);
    if (report) {
      report->converged = true;
      report->residual = 0.0;
    }
    return st;
  }

  SteadyWorkspace w;
  w.grid = &grid;
  w.nu = nu;
  w.alpha = alpha;
  w.beta1 = beta1;
  w.beta2 = beta2;
  w.fS = fS;
  w.hS = hS;
  w.flat = PlateProfile::zero(grid.torus);
  w.hS_vals = Eigen::VectorXd::Zero(grid.ns());
  if (hS) {
    for (int i = 0; i < grid.ns(); ++i) w.hS_vals[i] = hS(grid.s[i]);
    w.hS_vals.array() -= w.hS_vals.mean();
  }
  Eigen::VectorXd kb = fourier::slot_wavenumbers(grid.ns(), grid.torus.L1);
  w.kpow4 = kb.segment(1, grid.ns() - 2).array().pow(4).matrix();

  Eigen::VectorXd q = Eigen::VectorXd::Zero(w.n_unknowns());
  Eigen::VectorXd r = w.residual(q);
  double rn = r.norm();
  SteadySolveReport rep;
  rep.history.push_back(rn);

  for (int it = 0; it < opts.max_iter && rn > opts.tol; ++it) {
    Eigen::MatrixXd J(w.n_rows(), w.n_unknowns());
    for (int k = 0; k < w.n_unknowns(); ++k) {
      double eps = opts.fd_eps * std::max(1.0, std::abs(q[k]));
      Eigen::VectorXd qp = q;
      qp[k] += eps;
      J.col(k) = (w.residual(qp) - r) / eps;
    }
    Eigen::VectorXd step = J.colPivHouseholderQr().solve(-r);
    double lambda = 1.0;
    for (int ls = 0; ls < 12; ++ls) {
      Eigen::VectorXd qn = q + lambda * step;
      Eigen::VectorXd rnew = w.residual(qn);
      if (rnew.norm() < rn) {
        q = qn;
        r = rnew;
        rn = rnew.norm();
        break;
      }
      lambda *= 0.5;
    }
    rep.history.push_back(rn);
    rep.iterations = it + 1;
  }
  rep.converged = rn <= opts.tol;
  rep.residual = rn;
  if (report) *report = rep;
  if (!rep.converged)
    throw std::runtime_error("steady_state_solve: Newton did not reach tolerance (residual " +
                             std::to_string(rn) + ")");

  FluidField uhat;
  Field phat;
  PlateProfile etaS;
  w.unpack(q, uhat, phat, etaS);

  StationaryState st;
  st.grid = grid;
  st.etaS = etaS;
  st.wS = geom::piola_transform(grid, uhat, w.flat, etaS);
  st.pS = phat;  // nodal values coincide along the stretch map
  st.nu = nu;
  st.alpha = alpha;
  st.delta = delta;
  st.beta1 = beta1;
  st.beta2 = beta2;
  st.fS = fS;
  st.hS = hS;
  st.residual_norm = rn;
  return st;
}

}  // namespace fsplate::ops
