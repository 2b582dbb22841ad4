#include "fsplate/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unsupported/Eigen/MatrixFunctions>

#include "fsplate/fourier.hpp"

namespace fsplate::sim {

void DelayBuffer::push(double t, const Eigen::VectorXd& z, const Eigen::VectorXd& v) {
  if (!times.empty() && t <= times.back())
    throw std::invalid_argument("DelayBuffer: times must be strictly increasing");
  times.push_back(t);
  states.push_back(z);
  controls.push_back(v);
}

namespace {

Eigen::VectorXd interp(const std::vector<double>& ts,
                       const std::vector<Eigen::VectorXd>& vals, double t, int order) {
  if (ts.empty()) throw std::runtime_error("DelayBuffer: empty");
  if (t <= ts.front() + 1e-14) return vals.front();
  if (t >= ts.back() - 1e-14) return vals.back();
  auto it = std::upper_bound(ts.begin(), ts.end(), t);
  int k = static_cast<int>(it - ts.begin()) - 1;  // ts[k] <= t < ts[k+1]
  if (std::abs(ts[k] - t) < 1e-12) return vals[k];
  double h = ts[k + 1] - ts[k];
  double x = (t - ts[k]) / h;
  if (order <= 1 || k == 0 || k + 2 >= static_cast<int>(ts.size()))
    return (1.0 - x) * vals[k] + x * vals[k + 1];
  // Catmull-Rom on uniform samples
  const Eigen::VectorXd &p0 = vals[k - 1], &p1 = vals[k], &p2 = vals[k + 1],
                        &p3 = vals[k + 2];
  double x2 = x * x, x3 = x2 * x;
  return 0.5 * ((2.0 * p1) + (-p0 + p2) * x + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * x2 +
                (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * x3);
}

}  // namespace

Eigen::VectorXd DelayBuffer::state_at(double t) const {
  return interp(times, states, t, interp_order);
}
Eigen::VectorXd DelayBuffer::control_at(double t) const {
  return interp(times, controls, t, interp_order);
}

namespace {

// Shared machinery of the delayed-feedback evaluation.
struct ControlRuntime {
  const FeedbackLaw* law = nullptr;
  double dt = 0.0;
  int d = 0;
  bool aligned = false;
  std::vector<Eigen::MatrixXd> EnegB;  // exp(-A k dt) B, k = 0..d
  Eigen::MatrixXd S;                   // endpoint solve
  std::vector<Eigen::VectorXd> zu, v;  // per-step histories

  void init(const FeedbackLaw* l, double dt_) {
    law = l;
    dt = dt_;
    if (!law || !law->active()) return;
    double dd = law->t0 / dt;
    d = static_cast<int>(std::lround(dd));
    aligned = std::abs(dd - d) < 1e-9 && d >= 1;
    const int ng = law->N_gamma;
    Eigen::MatrixXd Estep = (-dt * law->A_u).exp();
    Eigen::MatrixXd acc = Eigen::MatrixXd::Identity(ng, ng);
    int kmax = aligned ? d : static_cast<int>(std::ceil(dd)) + 1;
    EnegB.resize(kmax + 1);
    for (int k = 0; k <= kmax; ++k) {
      EnegB[k] = acc * law->B_u;
      acc = Estep * acc;
    }
    const int na = static_cast<int>(law->F.rows());
    S = Eigen::MatrixXd::Identity(na, na);
    if (d >= 1)
      S = (Eigen::MatrixXd::Identity(na, na) - 0.5 * dt * law->F * EnegB[std::min(d, kmax)])
              .inverse();
  }

  int n_act() const { return law && law->active() ? static_cast<int>(law->F.rows()) : 0; }

  // control at step n (time n dt); histories must hold steps 0..n-1.
  Eigen::VectorXd eval(int n, const DelayBuffer& buf) {
    if (!law || !law->active()) return Eigen::VectorXd();
    double t = n * dt;
    if (t < law->t0 - 1e-14) return Eigen::VectorXd::Zero(n_act());
    if (aligned) {
      Eigen::VectorXd rhs = zu[n - d];
      for (int j = std::max(n - d, d); j <= n - 1; ++j) {
        double w = (j == n - d) ? 0.5 * dt : dt;
        rhs += w * EnegB[j - (n - d)] * v[j];
      }
      return S * (law->F * rhs);
    }
    // generic path: interpolated history quadrature over s in [t - t0, t],
    // exponent A (t - s_q - t0) = -A q h at nodes s_q = t - t0 + q h
    Eigen::VectorXd zud = law->project(buf.state_at(t - law->t0));
    Eigen::VectorXd acc = zud;
    int P = std::max(4, static_cast<int>(std::ceil(law->t0 / dt)));
    double h = law->t0 / P;
    Eigen::MatrixXd Eh = (-h * law->A_u).exp();
    std::vector<Eigen::MatrixXd> Efac(P + 1);
    Efac[0] = Eigen::MatrixXd::Identity(law->N_gamma, law->N_gamma);
    for (int q = 1; q <= P; ++q) Efac[q] = Efac[q - 1] * Eh;
    for (int q = 0; q < P; ++q) {  // exclude the unknown endpoint
      double w = (q == 0) ? 0.5 * h : h;
      double sq = t - law->t0 + q * h;
      Eigen::VectorXd vq = sq < law->t0 - 1e-14
                               ? Eigen::VectorXd::Zero(n_act())
                               : buf.control_at(std::min(sq, buf.times.back()));
      acc += w * (Efac[q] * law->B_u) * vq;
    }
    Eigen::MatrixXd Send = (Eigen::MatrixXd::Identity(n_act(), n_act()) -
                            0.5 * h * law->F * Efac[P] * law->B_u)
                               .inverse();
    return Send * (law->F * acc);
  }
};

void record(Trajectory& tr, const DiscreteSystem& sys, const FeedbackLaw* law,
            const IntegrateOptions& opts, double t, const Eigen::VectorXd& z,
            const Eigen::VectorXd& vc, double eres) {
  tr.t.push_back(t);
  tr.norm_H.push_back(z.norm());
  tr.norm_fluid.push_back(sys.norm_fluid(z));
  tr.norm_xi1.push_back(sys.norm_xi1(z));
  tr.norm_xi2.push_back(sys.norm_xi2(z));
  tr.norm_v.push_back(law && law->active() && vc.size() ? law->control_norm(vc) : 0.0);
  tr.energy_residual.push_back(eres);
  if (opts.store_states) tr.states.push_back(z);
  tr.controls.push_back(vc);
  if (law && law->active()) tr.zu.push_back(law->project(z));
}

double dissipation(const DiscreteSystem& sys, const Eigen::VectorXd& z) {
  return z.dot(sys.Q_visc_red * z) + z.dot(sys.Q_fric_red * z) +
         z.dot(sys.Q_grad2_red * z);
}

}  // namespace

Trajectory integrate_linear(const DiscreteSystem& sys, const FeedbackLaw* law,
                            const Eigen::VectorXd& z0, const IntegrateOptions& opts) {
  const int n = sys.dim();
  const double dt = opts.dt;
  if (law && law->active() && dt > law->t0 / 4.0 + 1e-12)
    throw std::invalid_argument("integrate_linear: dt must satisfy dt <= t0/4 with delay active");
  const int steps = static_cast<int>(std::round(opts.T / dt));

  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  Eigen::PartialPivLU<Eigen::MatrixXd> lhs((I - 0.5 * dt * sys.A_red).eval());
  Eigen::MatrixXd rhs_mat = I + 0.5 * dt * sys.A_red;

  ControlRuntime ctrl;
  ctrl.init(law, dt);
  DelayBuffer buf;
  buf.interp_order = opts.interp_order;

  Trajectory tr;
  Eigen::VectorXd z = z0;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(ctrl.n_act());
  if (law && law->active()) {
    ctrl.zu.push_back(law->project(z));
    ctrl.v.push_back(v);
  }
  buf.push(0.0, z, v);
  record(tr, sys, law, opts, 0.0, z, v, 0.0);

  Eigen::VectorXd f_prev =
      opts.forcing ? opts.forcing(0.0) : Eigen::VectorXd::Zero(n);
  double eres_acc = 0.0;
  int kick_step = opts.kick_time >= 0 ? static_cast<int>(std::round(opts.kick_time / dt)) : -1;

  for (int s = 1; s <= steps; ++s) {
    double t1 = s * dt;
    Eigen::VectorXd v1 = ctrl.eval(s, buf);
    Eigen::VectorXd f1 = opts.forcing ? opts.forcing(t1) : Eigen::VectorXd::Zero(n);
    Eigen::VectorXd rhs = rhs_mat * z;
    if (ctrl.n_act() > 0)
      rhs += dt * (sys.B_red * (0.5 * (v + v1)));
    rhs += dt * 0.5 * (f_prev + f1);
    Eigen::VectorXd z1 = lhs.solve(rhs);

    double d0 = dissipation(sys, z), d1 = dissipation(sys, z1);
    eres_acc += std::abs(0.5 * z1.dot(z1) - 0.5 * z.dot(z) + 0.5 * dt * (d0 + d1) -
                         dt * 0.5 * ((sys.B_red.cols() && ctrl.n_act()
                                          ? (sys.B_red * (0.5 * (v + v1))).dot(z + z1)
                                          : 0.0) +
                                     0.5 * (f_prev + f1).dot(z + z1)));

    z = z1;
    v = v1;
    f_prev = f1;
    if (s == kick_step && opts.kick.size() == n) z += opts.kick;
    if (law && law->active()) {
      ctrl.zu.push_back(law->project(z));
      ctrl.v.push_back(v);
    }
    buf.push(t1, z, v);
    record(tr, sys, law, opts, t1, z, v, eres_acc);
    if (!z.allFinite()) {
      tr.aborted = true;
      tr.abort_reason = "non-finite state (dt too large?)";
      break;
    }
  }
  return tr;
}

Trajectory integrate_linear_kernel(const DiscreteSystem& sys, const FeedbackLaw& law,
                                   const control::DelayKernel& kernel,
                                   const Eigen::VectorXd& z0,
                                   const IntegrateOptions& opts) {
  const int n = sys.dim();
  const double dt = opts.dt;
  if (std::abs(kernel.dt - dt) > 1e-12)
    throw std::invalid_argument("integrate_linear_kernel: kernel grid mismatch");
  const int steps = std::min(static_cast<int>(std::round(opts.T / dt)), kernel.steps);

  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  Eigen::PartialPivLU<Eigen::MatrixXd> lhs((I - 0.5 * dt * sys.A_red).eval());
  Eigen::MatrixXd rhs_mat = I + 0.5 * dt * sys.A_red;

  std::vector<Eigen::VectorXd> zu_hist;
  Trajectory tr;
  Eigen::VectorXd z = z0;
  const int na = law.active() ? static_cast<int>(law.F.rows()) : 0;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(na);
  zu_hist.push_back(law.project(z));
  record(tr, sys, &law, opts, 0.0, z, v, 0.0);

  for (int s = 1; s <= steps; ++s) {
    Eigen::VectorXd v1 = Eigen::VectorXd::Zero(na);
    if (law.active() && s >= kernel.d && s * dt >= law.t0 - 1e-14) {
      v1 = law.F * zu_hist[s - kernel.d];
      for (int m = 0; m <= s - kernel.d; ++m) v1 += kernel.G[s][m] * zu_hist[m];
    }
    Eigen::VectorXd rhs = rhs_mat * z;
    if (na) rhs += dt * (sys.B_red * (0.5 * (v + v1)));
    Eigen::VectorXd z1 = lhs.solve(rhs);
    z = z1;
    v = v1;
    zu_hist.push_back(law.project(z));
    record(tr, sys, &law, opts, s * dt, z, v, 0.0);
  }
  return tr;
}

Trajectory integrate_nonlinear(const DiscreteSystem& sys, const FeedbackLaw* law,
                               const Eigen::VectorXd& z0, const IntegrateOptions& opts) {
  const int n = sys.dim();
  const double dt = opts.dt;
  if (law && law->active() && dt > law->t0 / 4.0 + 1e-12)
    throw std::invalid_argument("integrate_nonlinear: dt must satisfy dt <= t0/4 with delay active");
  const int steps = static_cast<int>(std::round(opts.T / dt));
  const auto& st = sys.stationary;
  geom::DomainOps ref_ops(sys.grid, st.etaS);
  std::shared_ptr<Eigen::ColPivHouseholderQR<Eigen::MatrixXd>> pqr_local;
  if (!sys.grad_qr)
    pqr_local = std::make_shared<Eigen::ColPivHouseholderQR<Eigen::MatrixXd>>(
        disc::pressure_recovery_operator(sys));
  const auto& pqr = sys.grad_qr ? *sys.grad_qr : *pqr_local;
  const int ns = sys.layout.ns, nz = sys.layout.nz;
  const int Q = ns * nz;

  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  Eigen::PartialPivLU<Eigen::MatrixXd> lhs((I - 0.5 * dt * sys.A_red).eval());
  Eigen::MatrixXd rhs_mat = I + 0.5 * dt * sys.A_red;

  ControlRuntime ctrl;
  ctrl.init(law, dt);
  DelayBuffer buf;
  buf.interp_order = opts.interp_order;

  ops::VelocityDerivs vS = ops::velocity_derivs(ref_ops, st.wS, false);

  auto profile_of = [&](const Eigen::VectorXd& vals) {
    geom::PlateProfile p;
    p.grid = sys.grid.torus;
    p.values = vals;
    p.mean_zero = true;
    return p;
  };

  auto remainder_forcing = [&](const Eigen::VectorXd& z_mid, const Eigen::VectorXd& z_dot,
                               bool* admissible) -> Eigen::VectorXd {
    Eigen::VectorXd full = sys.lift(z_mid);
    Eigen::VectorXd full_t = sys.lift(z_dot);
    geom::FluidField u = sys.fluid_part(full);
    geom::FluidField u_t = sys.fluid_part(full_t);
    geom::PlateProfile xi = profile_of(sys.xi1_part(full));
    geom::PlateProfile xi_t = profile_of(sys.xi2_part(full));
    if (!xi.admissible()) {
      *admissible = false;
      return Eigen::VectorXd::Zero(n);
    }
    *admissible = true;

    // strong pressure recovery: grad p = nu lap u - Oseen + div L1 - L2 - u_t
    ops::VelocityDerivs vu = ops::velocity_derivs(ref_ops, u, true);
    Eigen::VectorXd xc = ops::plate_values_to_coeffs(sys.grid, xi.values);
    Eigen::VectorXd xtc = ops::plate_values_to_coeffs(sys.grid, xi_t.values);
    ops::MatrixField L1x = sys.lin.eval_L1(sys.grid, xc);
    geom::FluidField divL1 = ops::divergence(ref_ops, L1x);
    geom::FluidField l21 = sys.lin.eval_L21(sys.grid, xc);
    geom::FluidField l22 = sys.lin.eval_L22(sys.grid, xtc);
    Eigen::VectorXd grad_stack(2 * Q);
    for (int i = 0; i < ns; ++i)
      for (int j = 0; j < nz; ++j) {
        int q = i * nz + j;
        double oseen_x = st.wS.ux(i, j) * vu.du[0][0](i, j) +
                         st.wS.uz(i, j) * vu.du[0][1](i, j) +
                         u.ux(i, j) * vS.du[0][0](i, j) + u.uz(i, j) * vS.du[0][1](i, j);
        double oseen_z = st.wS.ux(i, j) * vu.du[1][0](i, j) +
                         st.wS.uz(i, j) * vu.du[1][1](i, j) +
                         u.ux(i, j) * vS.du[1][0](i, j) + u.uz(i, j) * vS.du[1][1](i, j);
        grad_stack[q] = st.nu * (vu.d2u[0][0][0](i, j) + vu.d2u[0][1][1](i, j)) -
                        oseen_x + divL1.ux(i, j) - l21.ux(i, j) - l22.ux(i, j) -
                        u_t.ux(i, j);
        grad_stack[Q + q] = st.nu * (vu.d2u[1][0][0](i, j) + vu.d2u[1][1][1](i, j)) -
                            oseen_z + divL1.uz(i, j) - l21.uz(i, j) - l22.uz(i, j) -
                            u_t.uz(i, j);
      }
    disc::scale_gradient_rhs(sys, grad_stack);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(2 * Q + 2);
    rhs.head(2 * Q) = grad_stack;
    Eigen::VectorXd pv = pqr.solve(rhs);
    geom::Field p(ns, nz);
    for (int i = 0; i < ns; ++i)
      for (int j = 0; j < nz; ++j) p(i, j) = pv[i * nz + j];

    ops::NonlinearResidual R =
        ops::nonlinear_remainder(st, sys.lin, u, p, xi, xi_t, &u_t);
    return sys.pair_forcing(R.interior, R.bdy_top, R.bdy_bot, R.plate);
  };

  Trajectory tr;
  Eigen::VectorXd z = z0;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(ctrl.n_act());
  if (law && law->active()) {
    ctrl.zu.push_back(law->project(z));
    ctrl.v.push_back(v);
  }
  buf.push(0.0, z, v);
  record(tr, sys, law, opts, 0.0, z, v, 0.0);

  for (int s = 1; s <= steps; ++s) {
    double t1 = s * dt;
    Eigen::VectorXd v1 = ctrl.eval(s, buf);
    Eigen::VectorXd base = rhs_mat * z;
    if (ctrl.n_act() > 0) base += dt * (sys.B_red * (0.5 * (v + v1)));
    if (opts.forcing) base += dt * 0.5 * (opts.forcing((s - 1) * dt) + opts.forcing(t1));

    Eigen::VectorXd z1 = z;  // Picard initial guess: frozen state
    double prev_delta = std::numeric_limits<double>::infinity();
    int growth = 0;
    bool done = false;
    for (int it = 0; it < opts.picard_max; ++it) {
      bool adm = true;
      Eigen::VectorXd z_mid = 0.5 * (z + z1);
      Eigen::VectorXd z_dot = (z1 - z) / dt;
      Eigen::VectorXd f_nl = remainder_forcing(z_mid, z_dot, &adm);
      if (!adm) {
        tr.aborted = true;
        tr.abort_reason = "profile inadmissible (1+eta below threshold)";
        return tr;
      }
      Eigen::VectorXd z_new = lhs.solve(base + dt * f_nl);
      double delta = (z_new - z1).norm();
      z1 = z_new;
      tr.picard_worst = std::max(tr.picard_worst, it + 1);
      if (delta <= opts.picard_tol * std::max(1.0, z1.norm())) {
        done = true;
        break;
      }
      if (delta > prev_delta) {
        if (++growth >= 5) {
          tr.aborted = true;
          tr.abort_reason = "Picard iteration not contracting (reduce R or dt)";
          return tr;
        }
      } else {
        growth = 0;
      }
      prev_delta = delta;
    }
    if (!done) {
      tr.aborted = true;
      tr.abort_reason = "Picard iteration exceeded max iterations";
      return tr;
    }

    z = z1;
    v = v1;
    if (law && law->active()) {
      ctrl.zu.push_back(law->project(z));
      ctrl.v.push_back(v);
    }
    buf.push(t1, z, v);
    record(tr, sys, law, opts, t1, z, v, 0.0);
    if (!z.allFinite()) {
      tr.aborted = true;
      tr.abort_reason = "non-finite state";
      break;
    }
  }
  return tr;
}

DecayFit decay_fit(const std::vector<double>& t, const std::vector<double>& norms,
                   double t_start) {
  DecayFit out;
  std::vector<double> xs, ys;
  for (size_t k = 0; k < t.size(); ++k) {
    if (t[k] < t_start) continue;
    if (!(norms[k] > 1e-300)) break;  // truncate at underflow
    xs.push_back(t[k]);
    ys.push_back(std::log(norms[k]));
  }
  out.n_used = static_cast<int>(xs.size());
  if (out.n_used < 3) return out;
  double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t k = 0; k < xs.size(); ++k) {
    sx += xs[k];
    sy += ys[k];
    sxx += xs[k] * xs[k];
    sxy += xs[k] * ys[k];
  }
  double denom = n * sxx - sx * sx;
  double slope = (n * sxy - sx * sy) / denom;
  double intercept = (sy - slope * sx) / n;
  double ss = 0.0;
  for (size_t k = 0; k < xs.size(); ++k) {
    double r = ys[k] - (intercept + slope * xs[k]);
    ss += r * r;
  }
  double se = std::sqrt(ss / std::max(1.0, n - 2.0) * n / denom);
  out.rate = -slope;
  out.band = 1.96 * se;
  return out;
}

double smallness_norm(const DiscreteSystem& sys, const Eigen::VectorXd& z) {
  Eigen::VectorXd full = sys.lift(z);
  geom::FluidField u = sys.fluid_part(full);
  geom::DomainOps ops(sys.grid, sys.stationary.etaS);
  geom::Field ux_x = ops.dx(u.ux), ux_z = ops.dz(u.ux);
  geom::Field uz_x = ops.dx(u.uz), uz_z = ops.dz(u.uz);
  double h1 = ops.integrate(u.ux.cwiseProduct(u.ux)) + ops.integrate(u.uz.cwiseProduct(u.uz)) +
              ops.integrate(ux_x.cwiseProduct(ux_x)) + ops.integrate(ux_z.cwiseProduct(ux_z)) +
              ops.integrate(uz_x.cwiseProduct(uz_x)) + ops.integrate(uz_z.cwiseProduct(uz_z));
  Eigen::VectorXd x1 = sys.xi1_part(full), x2 = sys.xi2_part(full);
  Eigen::VectorXd c1 = fourier::analysis(sys.layout.ns) * x1;
  Eigen::VectorXd c2 = fourier::analysis(sys.layout.ns) * x2;
  Eigen::VectorXd kb = fourier::slot_wavenumbers(sys.layout.ns, sys.grid.torus.L1);
  double h3 = 0.0, h1w = 0.0;
  const double L = sys.grid.torus.L1;
  for (int s = 0; s < sys.layout.ns; ++s) {
    double pars = (s == 0) ? L : 0.5 * L;
    double k2 = kb[s] * kb[s];
    h3 += pars * c1[s] * c1[s] * std::pow(1.0 + k2, 3);
    h1w += pars * c2[s] * c2[s] * (1.0 + k2);
  }
  return std::sqrt(h1) + std::sqrt(h3) + std::sqrt(h1w);
}

}  // namespace fsplate::sim
