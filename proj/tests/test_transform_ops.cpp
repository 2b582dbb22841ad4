#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fsplate/transform_ops.hpp"

using namespace fsplate;
using geom::ChannelGrid;
using geom::Field;
using geom::FluidField;
using geom::PlateProfile;
using geom::TorusGrid;

namespace {

PlateProfile sine(const TorusGrid& g, double amp, int k, double phase = 0.0) {
  Eigen::VectorXd s = g.nodes1();
  Eigen::VectorXd v(g.node_count());
  for (int i = 0; i < g.node_count(); ++i)
    v[i] = amp * std::sin(2.0 * M_PI * k * s[i] / g.L1 + phase);
  PlateProfile p;
  p.grid = g;
  p.values = v;
  p.mean_zero = true;
  return p;
}

// Analytic manufactured solution on Omega(eta): divergence free, periodic.
struct Manufactured {
  // divergence-free: U = (sin(ax) cos(bh), -(a/b) cos(ax) sin(bh))
  double a = 2.0 * M_PI, b = 1.1;
  double Ux(double x, double h) const { return std::sin(a * x) * std::cos(b * h); }
  double Uz(double x, double h) const { return -(a / b) * std::cos(a * x) * std::sin(b * h); }
  double P(double x, double h) const { return std::cos(a * x) * (h - 0.4); }
  // -div T(U, P) + (U.grad) U, components
  Eigen::Vector2d residual(double x, double h, double nu) const {
    double sx = std::sin(a * x), cx = std::cos(a * x);
    double sh = std::sin(b * h), ch = std::cos(b * h);
    double ux = sx * ch, uz = -(a / b) * cx * sh;
    double ux_x = a * cx * ch, ux_h = -b * sx * sh;
    double uz_x = (a * a / b) * sx * sh, uz_h = -a * cx * ch;
    double lap_ux = -(a * a + b * b) * sx * ch;
    double lap_uz = (a * a + b * b) * (a / b) * cx * sh;
    double px = -a * sx * (h - 0.4);
    double ph = cx;
    return {px - nu * lap_ux + ux * ux_x + uz * ux_h,
            ph - nu * lap_uz + ux * uz_x + uz * uz_h};
  }
};

FluidField random_smooth(const ChannelGrid& grid, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  double a1 = U(rng), a2 = U(rng), b1 = U(rng), b2 = U(rng);
  FluidField f;
  f.ux.resize(grid.ns(), grid.nz());
  f.uz.resize(grid.ns(), grid.nz());
  const double L = grid.torus.L1;
  for (int i = 0; i < grid.ns(); ++i)
    for (int j = 0; j < grid.nz(); ++j) {
      double x = grid.s[i], z = grid.z[j];
      f.ux(i, j) = a1 * std::sin(2 * M_PI * x / L) * (z * z - 0.5 * z) +
                   b1 * std::cos(2 * M_PI * x / L) + 0.3 * z;
      f.uz(i, j) = a2 * std::cos(4 * M_PI * x / L) * (z - 0.7) * z +
                   b2 * std::sin(2 * M_PI * x / L) - 0.1;
    }
  return f;
}

}  // namespace

TEST_CASE("stress tensor oracles") {
  TorusGrid g(2, 1.0, 8);
  ChannelGrid grid(g, 10);
  PlateProfile e0 = PlateProfile::zero(g);
  geom::DomainOps ops(grid, e0);
  const double nu = 0.25;

  FluidField zero;
  zero.ux = Field::Zero(8, 10);
  zero.uz = Field::Zero(8, 10);
  ops::StressField t = ops::stress_tensor(ops, zero, Field::Constant(8, 10, 1.0), nu);
  CHECK(t.xx(2, 3) == doctest::Approx(-1.0));
  CHECK(t.zz(2, 3) == doctest::Approx(-1.0));
  CHECK(std::abs(t.xz(2, 3)) < 1e-14);

  FluidField shear;
  shear.ux.resize(8, 10);
  shear.uz = Field::Zero(8, 10);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 10; ++j) shear.ux(i, j) = grid.z[j];
  ops::StressField ts = ops::stress_tensor(ops, shear, Field::Zero(8, 10), nu);
  CHECK(ts.xz(4, 5) == doctest::Approx(nu).epsilon(1e-12));
  CHECK(std::abs(ts.xx(4, 5)) < 1e-12);
}

TEST_CASE("map factors match the closed-form rational identities") {
  TorusGrid g(2, 1.0, 24);
  ChannelGrid grid(g, 12);
  PlateProfile etaS = sine(g, 0.08, 1);
  PlateProfile xi = sine(g, 0.05, 2, 0.4);
  PlateProfile xit = sine(g, 0.03, 1, 1.1);
  ops::MapData md = ops::build_map(grid, etaS, xi, xit);

  Eigen::VectorXd etaS_d = etaS.derivative(0).values;
  Eigen::VectorXd xi_d = xi.derivative(0).values;
  for (int i = 0; i < grid.ns(); ++i) {
    double eS = etaS.values[i], x = xi.values[i], e = eS + x;
    // dY_z/dx_z (X) - 1, three-term expansion
    double lhs = 1.0 / md.rho[i] - 1.0;
    double rhs = -x / (1.0 + eS) + x * x / std::pow(1.0 + eS, 2) -
                 x * x * x / (std::pow(1.0 + eS, 2) * (1.0 + e));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-11));
    for (int j : {3, 8}) {
      double y2 = md.y2(i, j);
      double lhs2 = -y2 * md.rho_s[i] / md.rho[i];
      double rhs2 = -y2 * xi_d[i] / (1.0 + eS) +
                    y2 * etaS_d[i] * x / ((1.0 + e) * (1.0 + eS)) +
                    y2 * xi_d[i] * x / ((1.0 + e) * (1.0 + eS));
      CHECK(lhs2 == doctest::Approx(rhs2).epsilon(1e-11));
    }
    // time derivative of the inverse map
    double xt = xit.values[i];
    CHECK(-md.rho_t[i] / md.rho[i] == doctest::Approx(-xt / (1.0 + e)).epsilon(1e-11));
  }
}

TEST_CASE("time-derivative factors agree with finite differences in t") {
  TorusGrid g(2, 1.0, 16);
  ChannelGrid grid(g, 10);
  PlateProfile etaS = sine(g, 0.06, 1);
  PlateProfile xi = sine(g, 0.05, 2);
  PlateProfile xit = sine(g, 0.8, 1, 0.2);
  ops::MapData md = ops::build_map(grid, etaS, xi, xit);
  const double eps = 1e-6;
  PlateProfile xip = xi, xim = xi;
  xip.values += eps * xit.values;
  xim.values -= eps * xit.values;
  PlateProfile zf = PlateProfile::zero(g);
  ops::MapData mdp = ops::build_map(grid, etaS, xip, zf);
  ops::MapData mdm = ops::build_map(grid, etaS, xim, zf);
  for (int i = 0; i < grid.ns(); ++i) {
    double fd_rho_t = (mdp.rho[i] - mdm.rho[i]) / (2 * eps);
    CHECK(md.rho_t[i] == doctest::Approx(fd_rho_t).epsilon(1e-7));
    double fd_rho_ts = (mdp.rho_s[i] - mdm.rho_s[i]) / (2 * eps);
    CHECK(md.rho_ts[i] == doctest::Approx(fd_rho_ts).epsilon(1e-6));
  }
}

TEST_CASE("manufactured solution: transformed steady residual") {
  Manufactured mf;
  const double nu = 0.18;
  double prev = -1.0;
  for (int n : {16, 32}) {
    TorusGrid g(2, 1.0, n);
    ChannelGrid grid(g, n == 16 ? 18 : 30);
    PlateProfile etaS = sine(g, 0.05, 1);
    PlateProfile xi = sine(g, 0.04, 2, 0.6);
    PlateProfile eta_tot;
    eta_tot.grid = g;
    eta_tot.values = etaS.values + xi.values;
    eta_tot.mean_zero = true;

    // sample (U, P) on Omega(eta) through the node correspondence and pull back
    FluidField U;
    U.ux.resize(grid.ns(), grid.nz());
    U.uz.resize(grid.ns(), grid.nz());
    Field P(grid.ns(), grid.nz());
    for (int i = 0; i < grid.ns(); ++i)
      for (int j = 0; j < grid.nz(); ++j) {
        double x = grid.s[i], h = grid.z[j] * (1.0 + eta_tot.values[i]);
        U.ux(i, j) = mf.Ux(x, h);
        U.uz(i, j) = mf.Uz(x, h);
        P(i, j) = mf.P(x, h);
      }
    FluidField ut = geom::piola_transform(grid, U, eta_tot, etaS);
    // pressure pulls back by composition: same nodal values
    geom::DomainOps ref_ops(grid, etaS);
    ops::MapData md = ops::build_map(grid, etaS, xi, PlateProfile::zero(g));
    FluidField R = ops::steady_residual(md, ref_ops, ut, P, nu);
    double worst = 0.0;
    for (int i = 0; i < grid.ns(); ++i)
      for (int j = 0; j < grid.nz(); ++j) {
        double det = (1.0 + eta_tot.values[i]) / (1.0 + etaS.values[i]);
        double x = grid.s[i], h = grid.z[j] * (1.0 + eta_tot.values[i]);
        Eigen::Vector2d expect = det * mf.residual(x, h, nu);
        worst = std::max(worst, std::abs(R.ux(i, j) - expect[0]));
        worst = std::max(worst, std::abs(R.uz(i, j) - expect[1]));
      }
    if (n == 32) {
      CHECK(worst < 1e-6);
      CHECK(prev / std::max(worst, 1e-18) > 50.0);  // spectral-type decay
    }
    prev = worst;
  }
}

TEST_CASE("op_N at xi = 0 is the plain convection") {
  TorusGrid g(2, 1.0, 16);
  ChannelGrid grid(g, 14);
  PlateProfile zero = PlateProfile::zero(g);
  geom::DomainOps ops_(grid, zero);
  ops::MapData md = ops::build_map(grid, zero, zero, zero);
  FluidField u = random_smooth(grid, 5);
  ops::VelocityDerivs v = ops::velocity_derivs(ops_, u, false);
  FluidField N = ops::op_N(md, v);
  for (int i = 0; i < grid.ns(); ++i)
    for (int j = 0; j < grid.nz(); ++j) {
      double cx = u.ux(i, j) * v.du[0][0](i, j) + u.uz(i, j) * v.du[0][1](i, j);
      double cz = u.ux(i, j) * v.du[1][0](i, j) + u.uz(i, j) * v.du[1][1](i, j);
      CHECK(N.ux(i, j) == doctest::Approx(-cx).epsilon(1e-11));
      CHECK(N.uz(i, j) == doctest::Approx(-cz).epsilon(1e-11));
    }
}

TEST_CASE("plate force H: flat limit, mean, linear scaling, E-trace identity") {
  TorusGrid g(2, 1.0, 16);
  ChannelGrid grid(g, 16);
  PlateProfile etaS = sine(g, 0.06, 1);
  PlateProfile zero = PlateProfile::zero(g);
  geom::DomainOps ref_ops(grid, etaS);
  const double nu = 0.1;

  // divergence-free stationary-like field on Omega(etaS)
  FluidField U;
  U.ux.resize(16, 16);
  U.uz.resize(16, 16);
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j) {
      double x = grid.s[i], h = grid.z[j] * (1.0 + etaS.values[i]);
      U.ux(i, j) = std::sin(2 * M_PI * x) * std::cos(h);
      U.uz(i, j) = -2 * M_PI * std::cos(2 * M_PI * x) * std::sin(h);
    }
  ops::VelocityDerivs v = ops::velocity_derivs(ref_ops, U, false);

  ops::MapData md0 = ops::build_map(grid, etaS, zero, zero);
  CHECK(ops::plate_force_H(md0, v, nu).cwiseAbs().maxCoeff() < 1e-12);

  PlateProfile dir = sine(g, 1.0, 2, 0.3);
  std::vector<double> hs = {1e-1, 1e-2, 1e-3};
  std::vector<double> norms;
  for (double h : hs) {
    PlateProfile xi;
    xi.grid = g;
    xi.values = h * dir.values;
    xi.mean_zero = true;
    ops::MapData md = ops::build_map(grid, etaS, xi, zero);
    Eigen::VectorXd H = ops::plate_force_H(md, v, nu);
    CHECK(std::abs(H.mean()) < 1e-12 * std::max(1.0, H.cwiseAbs().maxCoeff()));
    norms.push_back(H.norm());

    // H(w, eta) = -T*(E(w) n) for divergence-free w
    ops::MatrixField E = ops::op_E(md, v, nu);
    const int jt = grid.nz() - 1;
    Eigen::VectorXd etaS_d = etaS.derivative(0).values;
    Eigen::VectorXd en_x(16), en_z(16);
    for (int i = 0; i < 16; ++i) {
      double Nx = -etaS_d[i], Nz = 1.0;
      double nl = std::hypot(Nx, Nz);
      en_x[i] = (E.m[0][0](i, jt) * Nx + E.m[0][1](i, jt) * Nz) / nl;
      en_z[i] = (E.m[1][0](i, jt) * Nx + E.m[1][1](i, jt) * Nz) / nl;
    }
    Eigen::VectorXd rhs = -ops::Tstar_top(md, en_x, en_z);
    double rel = (H - rhs).norm() / std::max(1e-14, H.norm());
    CHECK(rel < 1e-8);
  }
  double slope01 = std::log10(norms[0] / norms[1]);
  double slope12 = std::log10(norms[1] / norms[2]);
  CHECK(slope01 == doctest::Approx(1.0).epsilon(0.1));
  CHECK(slope12 == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("boundary operators: flat limit, tangency, linear scaling") {
  TorusGrid g(2, 1.0, 16);
  ChannelGrid grid(g, 16);
  PlateProfile etaS = sine(g, 0.05, 1);
  PlateProfile zero = PlateProfile::zero(g);
  geom::DomainOps ref_ops(grid, etaS);
  FluidField u = random_smooth(grid, 17);
  ops::VelocityDerivs v = ops::velocity_derivs(ref_ops, u, false);
  const double nu = 0.1, b1 = 0.1, b2 = 0.2;

  ops::MapData md0 = ops::build_map(grid, etaS, zero, zero);
  ops::BoundaryOps bo0 = ops::boundary_ops(md0, v, zero, nu, b1, b2);
  CHECK(bo0.V_top.cwiseAbs().maxCoeff() < 1e-11);
  CHECK(bo0.V_bot.cwiseAbs().maxCoeff() < 1e-11);

  PlateProfile dir = sine(g, 1.0, 1, 0.9);
  std::vector<double> norms;
  Eigen::VectorXd etaS_d = etaS.derivative(0).values;
  for (double h : {1e-1, 1e-2, 1e-3}) {
    PlateProfile xi;
    xi.grid = g;
    xi.values = h * dir.values;
    xi.mean_zero = true;
    ops::MapData md = ops::build_map(grid, etaS, xi, zero);
    ops::BoundaryOps bo = ops::boundary_ops(md, v, zero, nu, b1, b2);
    for (int i = 0; i < 16; ++i) {
      // G is tangential: G . N_ref = 0
      double gn = bo.G_top(i, 0) * (-etaS_d[i]) + bo.G_top(i, 1) * 1.0;
      CHECK(std::abs(gn) < 1e-12 * std::max(1.0, bo.G_top.row(i).norm()));
      CHECK(std::abs(bo.G_bot(i, 1)) < 1e-14);
      // and G . tau = V
      double gt = bo.G_top(i, 0) * 1.0 + bo.G_top(i, 1) * etaS_d[i];
      CHECK(gt == doctest::Approx(bo.V_top[i]).epsilon(1e-10));
    }
    norms.push_back(std::sqrt(bo.V_top.squaredNorm() + bo.V_bot.squaredNorm()));
  }
  CHECK(std::log10(norms[0] / norms[1]) == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("gateaux linearization: linearity, degenerate state, disagreement flag") {
  TorusGrid g(2, 1.0, 12);
  ChannelGrid grid(g, 12);
  // degenerate stationary state: all linear blocks vanish
  ops::StationaryState st0 =
      ops::StationaryState::zero(grid, 0.1, 1.0, 0.5, 0.1, 0.1);
  ops::LinearizedBlocks lb0 = ops::linearize(st0);
  CHECK(lb0.converged);
  for (int d = 0; d < ops::plate_coeff_dim(grid); ++d) {
    CHECK(lb0.L1[d].m[0][0].cwiseAbs().maxCoeff() < 1e-10);
    CHECK(lb0.L21[d].ux.cwiseAbs().maxCoeff() < 1e-10);
    CHECK(lb0.L22[d].ux.cwiseAbs().maxCoeff() < 1e-10);
    CHECK(lb0.L3_top[d].cwiseAbs().maxCoeff() < 1e-10);
  }

  // nontrivial synthetic state: linearity of the evaluated blocks
  ops::StationaryState st = st0;
  st.wS.ux.resize(12, 12);
  st.wS.uz.resize(12, 12);
  st.pS.resize(12, 12);
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 12; ++j) {
      double x = grid.s[i], z = grid.z[j];
      st.wS.ux(i, j) = std::sin(2 * M_PI * x) * (2 * z * (1 - z) * (1 - z) -
                                                 2 * z * z * (1 - z));
      st.wS.uz(i, j) = -2 * M_PI * std::cos(2 * M_PI * x) * z * z * (1 - z) * (1 - z);
      st.pS(i, j) = 0.3 * std::cos(2 * M_PI * x) * z;
    }
  ops::LinearizedBlocks lb = ops::linearize(st);
  CHECK(lb.converged);
  const int nd = ops::plate_coeff_dim(grid);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(nd);
  c[1] = 1.0;
  c[4] = -0.7;
  ops::MatrixField one = lb.eval_L1(grid, c);
  ops::MatrixField three = lb.eval_L1(grid, (3.0 * c).eval());
  double rel = 0.0, scale = 0.0;
  for (int r = 0; r < 2; ++r)
    for (int q = 0; q < 2; ++q) {
      rel += (three.m[r][q] - 3.0 * one.m[r][q]).squaredNorm();
      scale += one.m[r][q].squaredNorm();
    }
  CHECK(std::sqrt(rel) <= 1e-8 * std::max(1.0, 3.0 * std::sqrt(scale)));
}

TEST_CASE("nonlinear remainder vanishes at the origin and interior identity holds") {
  TorusGrid g(2, 1.0, 16);
  ChannelGrid grid(g, 14);
  ops::StationaryState st = ops::StationaryState::zero(grid, 0.1, 1.0, 0.5, 0.1, 0.1);
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 14; ++j) {
      double x = grid.s[i], z = grid.z[j];
      st.wS.ux(i, j) = 0.5 * std::sin(2 * M_PI * x) * (2 * z * (1 - z) * (1 - z) -
                                                       2 * z * z * (1 - z));
      st.wS.uz(i, j) = -M_PI * std::cos(2 * M_PI * x) * z * z * (1 - z) * (1 - z);
      st.pS(i, j) = 0.2 * std::cos(2 * M_PI * x) * (z - 0.5);
    }
  ops::LinearizedBlocks lin = ops::linearize(st);
  PlateProfile zero = PlateProfile::zero(g);
  FluidField zf;
  zf.ux = Field::Zero(16, 14);
  zf.uz = Field::Zero(16, 14);
  ops::NonlinearResidual R0 =
      ops::nonlinear_remainder(st, lin, zf, Field::Zero(16, 14), zero, zero);
  CHECK(R0.interior.ux.cwiseAbs().maxCoeff() < 1e-9);
  CHECK(R0.bdy_top.cwiseAbs().maxCoeff() < 1e-9);
  CHECK(R0.plate.cwiseAbs().maxCoeff() < 1e-9);

  // F(u,p,xi) = div L1 xi + L2(xi, xi_t) + (F + div NE + NF)
  PlateProfile xi = sine(g, 0.01, 1);
  PlateProfile xit = sine(g, 0.01, 2, 0.5);
  FluidField u = random_smooth(grid, 23);
  u.ux *= 0.01;
  u.uz *= 0.01;
  Field p = Field::Zero(16, 14);
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 14; ++j)
      p(i, j) = 0.01 * std::sin(2 * M_PI * grid.s[i]) * grid.z[j];
  FluidField ut = random_smooth(grid, 29);
  ut.ux *= 0.01;
  ut.uz *= 0.01;

  geom::DomainOps ref_ops(grid, st.etaS);
  ops::MapData md = ops::build_map(grid, st.etaS, xi, xit);
  FluidField F = ops::interior_F(st, md, u, p, ut);
  ops::NonlinearResidual R = ops::nonlinear_remainder(st, lin, u, p, xi, xit, &ut);
  Eigen::VectorXd xc = ops::plate_values_to_coeffs(grid, xi.values);
  Eigen::VectorXd xtc = ops::plate_values_to_coeffs(grid, xit.values);
  FluidField divL1 = ops::divergence(ref_ops, lin.eval_L1(grid, xc));
  FluidField l21 = lin.eval_L21(grid, xc);
  FluidField l22 = lin.eval_L22(grid, xtc);
  Field rx = F.ux - divL1.ux - l21.ux - l22.ux - R.interior.ux;
  Field rz = F.uz - divL1.uz - l21.uz - l22.uz - R.interior.uz;
  double scale = std::sqrt(F.ux.squaredNorm() + F.uz.squaredNorm());
  CHECK(std::sqrt(rx.squaredNorm() + rz.squaredNorm()) < 1e-7 * std::max(1.0, scale));
}
