#include "fsplate/discretization.hpp"

#include <cmath>

#include "fsplate/fourier.hpp"

namespace fsplate::disc {

namespace {

Eigen::MatrixXd fourier_pairing(const ChannelGrid& grid,
                                const std::function<double(double)>& sym) {
  const int ns = grid.ns();
  const double L = grid.torus.L1;
  Eigen::MatrixXd A = fourier::analysis(ns);
  Eigen::VectorXd kb = fourier::slot_wavenumbers(ns, L);
  Eigen::VectorXd d(ns);
  d[0] = L * sym(kb[0]);
  for (int s = 1; s < ns - 1; ++s) d[s] = 0.5 * L * sym(kb[s]);
  d[ns - 1] = 0.5 * L * sym(kb[ns - 1]);
  return A.transpose() * d.asDiagonal() * A;
}

Eigen::MatrixXd fourier_symbol(const ChannelGrid& grid,
                               const std::function<double(double)>& sym) {
  return fourier::symbol_matrix(grid.ns(), grid.torus.L1, sym);
}

}  // namespace

PlateOperators assemble_plate_ops(double alpha, double delta, const ChannelGrid& grid) {
  PlateOperators p;
  p.A1 = fourier_symbol(grid, [&](double k) { return alpha * std::pow(k, 4); });
  p.A2 = fourier_symbol(grid, [&](double k) { return delta * k * k; });
  p.A1_half = fourier_symbol(grid, [&](double k) { return std::sqrt(alpha) * k * k; });
  p.A1_quarter =
      fourier_symbol(grid, [&](double k) { return std::pow(alpha, 0.25) * k; });
  p.A1_threequarter =
      fourier_symbol(grid, [&](double k) { return std::pow(alpha, 0.75) * std::pow(k, 3); });
  p.pair_mass = fourier_pairing(grid, [](double) { return 1.0; });
  p.pair_A1 = fourier_pairing(grid, [&](double k) { return alpha * std::pow(k, 4); });
  p.pair_A2 = fourier_pairing(grid, [&](double k) { return delta * k * k; });
  return p;
}

namespace {

// Remove the sawtooth component, which the state space cannot carry.
void drop_nyquist(Eigen::VectorXd& v) {
  const int n = static_cast<int>(v.size());
  double c = 0.0;
  for (int i = 0; i < n; ++i) c += (i % 2 == 0 ? 1.0 : -1.0) * v[i];
  c /= n;
  for (int i = 0; i < n; ++i) v[i] -= c * (i % 2 == 0 ? 1.0 : -1.0);
}

}  // namespace

ControlShape make_control_shape(const ChannelGrid& grid, const std::string& kind) {
  ControlShape sh;
  sh.kind = kind;
  const int ns = grid.ns();
  sh.m = Eigen::VectorXd::Zero(ns);
  if (kind == "zero") return sh;
  if (kind != "cos4") throw std::invalid_argument("control shape must be cos4 or zero");
  const double L = grid.torus.L1;
  for (int i = 0; i < ns; ++i) {
    double d = grid.s[i] - 0.5 * L;
    if (std::abs(d) < L / 6.0) {
      double c = std::cos(3.0 * M_PI * d / L);
      sh.m[i] = c * c * c * c;
    }
  }
  drop_nyquist(sh.m);
  double total = (grid.ws.array() * sh.m.array()).sum();
  sh.m /= total;  // discrete unit integral
  return sh;
}

Eigen::MatrixXd apply_localizer(const ChannelGrid& grid, const ControlShape& shape,
                                const Eigen::MatrixXd& v) {
  const int ns = grid.ns();
  Eigen::MatrixXd mv(ns, 2);
  for (int i = 0; i < ns; ++i) mv.row(i) = shape.m[i] * v.row(i);
  // n = -e_z on Gamma_0
  double flux = 0.0;
  for (int i = 0; i < ns; ++i) flux += grid.ws[i] * (-mv(i, 1));
  for (int i = 0; i < ns; ++i) mv(i, 1) -= flux * shape.m[i] * (-1.0);
  return mv;
}

namespace {

struct Blocks {
  // shared assembly ingredients
  StateLayout lay;
  Eigen::MatrixXd Dx, Dz;
  Eigen::VectorXd wq;
  Eigen::VectorXd wtop, wbot;
  Eigen::VectorXd etaS_s;
  Eigen::MatrixXd Tvc;  // plate values -> retained coefficients (nd x ns)
};

Blocks make_blocks(const ChannelGrid& grid, const StationaryState& st) {
  Blocks b;
  const int ns = grid.ns(), nz = grid.nz();
  b.lay.ns = ns;
  b.lay.nz = nz;
  const int Q = ns * nz;
  geom::DomainOps ops(grid, st.etaS);
  Eigen::VectorXd one_plus = (1.0 + st.etaS.values.array()).matrix();
  b.etaS_s = st.etaS.derivative(0).values;

  b.Dx = Eigen::MatrixXd::Zero(Q, Q);
  b.Dz = Eigen::MatrixXd::Zero(Q, Q);
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < nz; ++j) {
      int row = i * nz + j;
      for (int l = 0; l < nz; ++l) {
        b.Dz(row, i * nz + l) = grid.Dz(j, l) / one_plus[i];
        b.Dx(row, i * nz + l) -=
            grid.z[j] * b.etaS_s[i] / one_plus[i] * grid.Dz(j, l);
      }
      for (int k = 0; k < ns; ++k) b.Dx(row, k * nz + j) += grid.Ds(i, k);
    }

  b.wq.resize(Q);
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < nz; ++j) b.wq[i * nz + j] = grid.ws[i] * grid.wz[j] * one_plus[i];
  b.wtop.resize(ns);
  b.wbot = grid.ws;
  for (int i = 0; i < ns; ++i) b.wtop[i] = grid.ws[i] * std::hypot(b.etaS_s[i], 1.0);

  Eigen::MatrixXd ana = fourier::analysis(ns);
  b.Tvc = ana.middleRows(1, ns - 2);
  return b;
}

// Tangential frame helpers at a top node.
struct TopFrame {
  double n[2], tau[2], tau2;
};
TopFrame top_frame(const Blocks& b, int i) {
  TopFrame f;
  double Nx = -b.etaS_s[i], Nz = 1.0;
  double nl = std::hypot(Nx, Nz);
  f.n[0] = Nx / nl;
  f.n[1] = Nz / nl;
  f.tau[0] = 1.0;
  f.tau[1] = b.etaS_s[i];
  f.tau2 = 1.0 + b.etaS_s[i] * b.etaS_s[i];
  return f;
}

// Assemble -2 nu int D(w):D(phi) (and the positive dissipation form).
void add_viscous(const Blocks& b, double nu, Eigen::MatrixXd& A, Eigen::MatrixXd* Q_visc) {
  const int Q = b.lay.ns * b.lay.nz;
  Eigen::MatrixXd W = b.wq.asDiagonal();
  Eigen::MatrixXd E11 = b.Dx, E22 = b.Dz;
  Eigen::MatrixXd form_xx = E11.transpose() * W * E11 + 0.5 * b.Dz.transpose() * W * b.Dz;
  Eigen::MatrixXd form_zz = E22.transpose() * W * E22 + 0.5 * b.Dx.transpose() * W * b.Dx;
  Eigen::MatrixXd form_xz = 0.5 * b.Dz.transpose() * W * b.Dx;  // test x, trial z
  A.block(0, 0, Q, Q) -= 2.0 * nu * form_xx;
  A.block(Q, Q, Q, Q) -= 2.0 * nu * form_zz;
  A.block(0, Q, Q, Q) -= 2.0 * nu * form_xz;
  A.block(Q, 0, Q, Q) -= 2.0 * nu * form_xz.transpose();
  if (Q_visc) {
    Eigen::MatrixXd& V = *Q_visc;
    V.setZero(2 * Q, 2 * Q);
    V.block(0, 0, Q, Q) = 2.0 * nu * form_xx;
    V.block(Q, Q, Q, Q) = 2.0 * nu * form_zz;
    V.block(0, Q, Q, Q) = 2.0 * nu * form_xz;
    V.block(Q, 0, Q, Q) = 2.0 * nu * form_xz.transpose();
  }
}

}  // namespace

Basis build_basis(const ChannelGrid& grid, const StationaryState& st,
                  const PlateOperators& plate, const Eigen::MatrixXd& M_full,
                  double rank_tol) {
  Blocks b = make_blocks(grid, st);
  const int ns = grid.ns(), nz = grid.nz();
  const int Q = ns * nz;
  const int N = b.lay.total();
  const int nrows = Q + 2 * ns + 4 + 2 * nz;
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(nrows, N);
  // divergence rows
  C.block(0, 0, Q, Q) = b.Dx;
  C.block(0, Q, Q, Q) = b.Dz;
  int at = Q;
  // top: (w - T xi2) . n = 0
  for (int i = 0; i < ns; ++i) {
    TopFrame f = top_frame(b, i);
    C(at, b.lay.ux(i, nz - 1)) = f.n[0];
    C(at, b.lay.uz(i, nz - 1)) = f.n[1];
    C(at, b.lay.xi2(i)) = -f.n[1];
    ++at;
  }
  // bottom: w . n = 0
  for (int i = 0; i < ns; ++i) C(at++, b.lay.uz(i, 0)) = 1.0;
  // plate mean and Nyquist rows
  for (int i = 0; i < ns; ++i) {
    C(at, b.lay.xi1(i)) = 1.0;
    C(at + 1, b.lay.xi2(i)) = 1.0;
    C(at + 2, b.lay.xi1(i)) = (i % 2 == 0 ? 1.0 : -1.0);
    C(at + 3, b.lay.xi2(i)) = (i % 2 == 0 ? 1.0 : -1.0);
  }
  at += 4;
  // fluid Nyquist rows: the sawtooth horizontal mode is annihilated by the
  // odd-order spectral derivative, which would duplicate every k=0 vertical
  // mode as an uncontrollable twin; it is removed like the plate Nyquist.
  for (int j = 0; j < nz; ++j) {
    for (int i = 0; i < ns; ++i) {
      double sgn = (i % 2 == 0 ? 1.0 : -1.0);
      C(at, b.lay.ux(i, j)) = sgn;
      C(at + 1, b.lay.uz(i, j)) = sgn;
    }
    at += 2;
  }

  Basis out;
  out.layout = b.lay;
  out.row_scale.resize(nrows);
  for (int r = 0; r < nrows; ++r) {
    double s = C.row(r).norm();
    out.row_scale[r] = s > 0 ? s : 1.0;
    C.row(r) /= out.row_scale[r];
  }
  out.C = C;

  // Nullspace by rank-revealing QR of C^T; structural redundancies sit many
  // orders below the genuine constraints after row normalization.
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(C.transpose());
  qr.setThreshold(rank_tol);
  int rank = static_cast<int>(qr.rank());
  out.rank = rank;
  Eigen::MatrixXd Qfull = qr.householderQ();
  Eigen::MatrixXd Z = Qfull.rightCols(N - rank);

  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(C);
  cod.setThreshold(rank_tol);

  Eigen::MatrixXd G = Z.transpose() * M_full * Z;
  Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("build_basis: Gram matrix not positive definite");
  // V = Z L^{-T} so that V^T M V = I
  const int m = N - rank;
  Eigen::MatrixXd Linv = llt.matrixL().solve(Eigen::MatrixXd::Identity(m, m));
  out.V = Z * Linv.transpose();
  // The triangular solve amplifies the nullspace error by the Gram condition
  // number; sweep the constraint residual out and re-orthonormalize once
  // (Newton polish on the near-identity Gram).
  out.V -= cod.solve(C * out.V);
  Eigen::MatrixXd G1 = out.V.transpose() * M_full * out.V;
  Eigen::LLT<Eigen::MatrixXd> polish(G1);
  if (polish.info() != Eigen::Success)
    throw std::runtime_error("build_basis: orthonormalization polish failed");
  out.V = out.V * polish.matrixL().solve(Eigen::MatrixXd::Identity(m, m)).transpose();
  out.V -= cod.solve(C * out.V);
  out.max_constraint_residual = (C * out.V).cwiseAbs().maxCoeff();
  (void)plate;
  return out;
}

namespace {

void add_plate_and_mass(const Blocks& b, const PlateOperators& plate,
                        Eigen::MatrixXd& M_full) {
  const int Q = b.lay.ns * b.lay.nz;
  const int ns = b.lay.ns;
  for (int q = 0; q < 2 * Q; ++q) M_full(q, q) = b.wq[q % Q];
  M_full.block(b.lay.xi1(0), b.lay.xi1(0), ns, ns) = plate.pair_A1;
  M_full.block(b.lay.xi2(0), b.lay.xi2(0), ns, ns) = plate.pair_mass;
}

// Oseen advection matrix on one scalar component.
Eigen::MatrixXd advection_matrix(const Blocks& b, const StationaryState& st) {
  const int Q = b.lay.ns * b.lay.nz;
  Eigen::VectorXd wx(Q), wz(Q);
  for (int i = 0; i < b.lay.ns; ++i)
    for (int j = 0; j < b.lay.nz; ++j) {
      wx[i * b.lay.nz + j] = st.wS.ux(i, j);
      wz[i * b.lay.nz + j] = st.wS.uz(i, j);
    }
  return wx.asDiagonal() * b.Dx + wz.asDiagonal() * b.Dz;
}

void gradient_of_wS(const Blocks& b, const StationaryState& st, const ChannelGrid& grid,
                    Eigen::VectorXd dw[2][2]) {
  geom::DomainOps ops(grid, st.etaS);
  ops::VelocityDerivs v = ops::velocity_derivs(ops, st.wS, false);
  for (int i = 0; i < 2; ++i)
    for (int c = 0; c < 2; ++c) {
      dw[i][c].resize(b.lay.ns * b.lay.nz);
      for (int a = 0; a < b.lay.ns; ++a)
        for (int j = 0; j < b.lay.nz; ++j)
          dw[i][c][a * b.lay.nz + j] = v.du[i][c](a, j);
    }
}

// L-block dual matrices in plate-coefficient space; rows = full test space.
struct LDuals {
  Eigen::MatrixXd from_xi1;  // N x nd
  Eigen::MatrixXd from_xi2;  // N x nd
};

LDuals build_l_duals(const Blocks& b, const ChannelGrid& grid,
                     const LinearizedBlocks& lin) {
  const int nd = static_cast<int>(lin.L1.size());
  const int Q = b.lay.ns * b.lay.nz;
  const int N = b.lay.total();
  const int ns = b.lay.ns, nz = b.lay.nz;
  LDuals ld;
  ld.from_xi1 = Eigen::MatrixXd::Zero(N, nd);
  ld.from_xi2 = Eigen::MatrixXd::Zero(N, nd);
  for (int d = 0; d < nd; ++d) {
    // -int L1(xi1) : grad phi
    Eigen::VectorXd dual = Eigen::VectorXd::Zero(N);
    for (int c = 0; c < 2; ++c) {
      Eigen::VectorXd f0(Q), f1(Q);
      for (int i = 0; i < ns; ++i)
        for (int j = 0; j < nz; ++j) {
          f0[i * nz + j] = b.wq[i * nz + j] * lin.L1[d].m[c][0](i, j);
          f1[i * nz + j] = b.wq[i * nz + j] * lin.L1[d].m[c][1](i, j);
        }
      dual.segment(c * Q, Q) -= b.Dx.transpose() * f0 + b.Dz.transpose() * f1;
    }
    // -int L21(xi1) . phi
    for (int i = 0; i < ns; ++i)
      for (int j = 0; j < nz; ++j) {
        dual[b.lay.ux(i, j)] -= b.wq[i * nz + j] * lin.L21[d].ux(i, j);
        dual[b.lay.uz(i, j)] -= b.wq[i * nz + j] * lin.L21[d].uz(i, j);
      }
    // -oint L3(xi1) tangential pairing
    for (int i = 0; i < ns; ++i) {
      TopFrame f = top_frame(b, i);
      double c = b.wtop[i] * lin.L3_top[d][i] / f.tau2;
      dual[b.lay.ux(i, nz - 1)] -= c * f.tau[0];
      dual[b.lay.uz(i, nz - 1)] -= c * f.tau[1];
      dual[b.lay.xi2(i)] += c * f.tau[1];
      dual[b.lay.ux(i, 0)] -= b.wbot[i] * lin.L3_bot[d][i];
    }
    ld.from_xi1.col(d) = dual;

    Eigen::VectorXd dual2 = Eigen::VectorXd::Zero(N);
    for (int i = 0; i < ns; ++i)
      for (int j = 0; j < nz; ++j) {
        dual2[b.lay.ux(i, j)] -= b.wq[i * nz + j] * lin.L22[d].ux(i, j);
        dual2[b.lay.uz(i, j)] -= b.wq[i * nz + j] * lin.L22[d].uz(i, j);
      }
    ld.from_xi2.col(d) = dual2;
  }
  (void)grid;
  return ld;
}

void add_robin(const Blocks& b, double beta1, double beta2, Eigen::MatrixXd& A,
               Eigen::MatrixXd* Q_fric) {
  const int ns = b.lay.ns, nz = b.lay.nz;
  const int N = b.lay.total();
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(N, N);
  for (int i = 0; i < ns; ++i) {
    TopFrame f = top_frame(b, i);
    // tangential projector
    double P[2][2];
    double tx = f.tau[0] / std::sqrt(f.tau2), tz = f.tau[1] / std::sqrt(f.tau2);
    P[0][0] = tx * tx;
    P[0][1] = tx * tz;
    P[1][0] = tz * tx;
    P[1][1] = tz * tz;
    int dof[3] = {b.lay.ux(i, nz - 1), b.lay.uz(i, nz - 1), b.lay.xi2(i)};
    double map[3][2] = {{1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}};  // dof -> (vx, vz)
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) {
        double s = 0.0;
        for (int a = 0; a < 2; ++a)
          for (int q = 0; q < 2; ++q) s += map[r][a] * P[a][q] * map[c][q];
        F(dof[r], dof[c]) += beta2 * b.wtop[i] * s;
      }
    F(b.lay.ux(i, 0), b.lay.ux(i, 0)) += beta1 * b.wbot[i];
  }
  A -= F;
  if (Q_fric) *Q_fric = F;
}

Eigen::MatrixXd assemble_direct(const Blocks& b, const ChannelGrid& grid,
                                const StationaryState& st, const PlateOperators& plate,
                                const LDuals& ld, Eigen::MatrixXd* Q_visc,
                                Eigen::MatrixXd* Q_fric) {
  const int Q = b.lay.ns * b.lay.nz;
  const int ns = b.lay.ns;
  const int N = b.lay.total();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N, N);
  add_viscous(b, st.nu, A, Q_visc);

  Eigen::MatrixXd ADV = advection_matrix(b, st);
  Eigen::MatrixXd W = b.wq.asDiagonal();
  Eigen::MatrixXd skew = 0.5 * (W * ADV - ADV.transpose() * W);
  A.block(0, 0, Q, Q) -= skew;
  A.block(Q, Q, Q, Q) -= skew;
  Eigen::VectorXd dw[2][2];
  gradient_of_wS(b, st, grid, dw);
  for (int i = 0; i < 2; ++i)
    for (int c = 0; c < 2; ++c)
      A.block(i * Q, c * Q, Q, Q) -=
          (b.wq.array() * dw[i][c].array()).matrix().asDiagonal().toDenseMatrix();

  add_robin(b, st.beta1, st.beta2, A, Q_fric);

  // L blocks act on the nodal plate dofs through the coefficient map
  A.block(0, b.lay.xi1(0), N, ns) += ld.from_xi1 * b.Tvc;
  A.block(0, b.lay.xi2(0), N, ns) += ld.from_xi2 * b.Tvc;

  A.block(b.lay.xi1(0), b.lay.xi2(0), ns, ns) += plate.pair_A1;
  A.block(b.lay.xi2(0), b.lay.xi1(0), ns, ns) -= plate.pair_A1;
  A.block(b.lay.xi2(0), b.lay.xi2(0), ns, ns) -= plate.pair_A2;
  return A;
}

Eigen::MatrixXd assemble_adjoint(const Blocks& b, const ChannelGrid& grid,
                                 const StationaryState& st, const PlateOperators& plate,
                                 const LDuals& ld) {
  const int Q = b.lay.ns * b.lay.nz;
  const int ns = b.lay.ns;
  const int N = b.lay.total();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N, N);
  add_viscous(b, st.nu, A, nullptr);

  Eigen::MatrixXd ADV = advection_matrix(b, st);
  Eigen::MatrixXd W = b.wq.asDiagonal();
  Eigen::MatrixXd skew = 0.5 * (W * ADV - ADV.transpose() * W);
  A.block(0, 0, Q, Q) += skew;
  A.block(Q, Q, Q, Q) += skew;
  Eigen::VectorXd dw[2][2];
  gradient_of_wS(b, st, grid, dw);
  // -(grad wS)^* phi tested by psi: rows = psi component c, cols = phi component i
  for (int i = 0; i < 2; ++i)
    for (int c = 0; c < 2; ++c)
      A.block(c * Q, i * Q, Q, Q) -=
          (b.wq.array() * dw[i][c].array()).matrix().asDiagonal().toDenseMatrix();

  add_robin(b, st.beta1, st.beta2, A, nullptr);

  // L pairings land in the xi1 test rows / fluid-and-xi2 test rows transposed
  A.block(b.lay.xi1(0), 0, ns, N) += b.Tvc.transpose() * ld.from_xi1.transpose();
  A.block(b.lay.xi2(0), 0, ns, N) += b.Tvc.transpose() * ld.from_xi2.transpose();

  A.block(b.lay.xi1(0), b.lay.xi2(0), ns, ns) -= plate.pair_A1;
  A.block(b.lay.xi2(0), b.lay.xi1(0), ns, ns) += plate.pair_A1;
  A.block(b.lay.xi2(0), b.lay.xi2(0), ns, ns) -= plate.pair_A2;
  return A;
}

}  // namespace

FluidField DiscreteSystem::fluid_part(const Eigen::VectorXd& full) const {
  const int ns = layout.ns, nz = layout.nz;
  FluidField f;
  f.ux.resize(ns, nz);
  f.uz.resize(ns, nz);
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < nz; ++j) {
      f.ux(i, j) = full[layout.ux(i, j)];
      f.uz(i, j) = full[layout.uz(i, j)];
    }
  return f;
}

Eigen::VectorXd DiscreteSystem::xi1_part(const Eigen::VectorXd& full) const {
  return full.segment(layout.xi1(0), layout.ns);
}

Eigen::VectorXd DiscreteSystem::xi2_part(const Eigen::VectorXd& full) const {
  return full.segment(layout.xi2(0), layout.ns);
}

Eigen::VectorXd DiscreteSystem::pair_forcing(const FluidField& f,
                                             const Eigen::VectorXd& g_top,
                                             const Eigen::VectorXd& g_bot,
                                             const Eigen::VectorXd& h) const {
  const int ns = layout.ns, nz = layout.nz;
  Eigen::VectorXd dual = Eigen::VectorXd::Zero(layout.total());
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < nz; ++j) {
      dual[layout.ux(i, j)] += wq[i * nz + j] * f.ux(i, j);
      dual[layout.uz(i, j)] += wq[i * nz + j] * f.uz(i, j);
    }
  Eigen::VectorXd etaS_s = stationary.etaS.derivative(0).values;
  for (int i = 0; i < ns; ++i) {
    double tau2 = 1.0 + etaS_s[i] * etaS_s[i];
    double c = wtop[i] * g_top[i] / tau2;
    dual[layout.ux(i, nz - 1)] += c;
    dual[layout.uz(i, nz - 1)] += c * etaS_s[i];
    dual[layout.xi2(i)] -= c * etaS_s[i];
    dual[layout.ux(i, 0)] += wbot[i] * g_bot[i];
  }
  dual.segment(layout.xi2(0), ns) += plate.pair_mass * h;
  return basis.V.transpose() * dual;
}

double DiscreteSystem::norm_fluid(const Eigen::VectorXd& reduced) const {
  Eigen::VectorXd full = lift(reduced);
  double s = 0.0;
  for (int q = 0; q < layout.fluid(); ++q)
    s += wq[q % (layout.ns * layout.nz)] * full[q] * full[q];
  return std::sqrt(s);
}

double DiscreteSystem::norm_xi1(const Eigen::VectorXd& reduced) const {
  Eigen::VectorXd x = xi1_part(lift(reduced));
  return std::sqrt(std::max(0.0, x.dot(plate.pair_A1 * x)));
}

double DiscreteSystem::norm_xi2(const Eigen::VectorXd& reduced) const {
  Eigen::VectorXd x = xi2_part(lift(reduced));
  return std::sqrt(std::max(0.0, x.dot(plate.pair_mass * x)));
}

DiscreteSystem assemble_AS(const StationaryState& st, double lambda0_override) {
  DiscreteSystem sys;
  sys.grid = st.grid;
  sys.stationary = st;
  sys.params.nu = st.nu;
  sys.params.alpha = st.alpha;
  sys.params.delta = st.delta;
  sys.params.beta1 = st.beta1;
  sys.params.beta2 = st.beta2;
  double w_sup = st.wS_sup_norm();
  sys.params.lambda0 = lambda0_override > 0
                           ? lambda0_override
                           : 10.0 * std::pow(std::max({1.0, st.nu, w_sup}), 2);

  sys.plate = assemble_plate_ops(st.alpha, st.delta, st.grid);
  sys.lin = ops::linearize(st);

  Blocks b = make_blocks(st.grid, st);
  sys.layout = b.lay;
  sys.Dx = b.Dx;
  sys.Dz = b.Dz;
  sys.wq = b.wq;
  sys.wtop = b.wtop;
  sys.wbot = b.wbot;

  const int N = b.lay.total();
  sys.M_full = Eigen::MatrixXd::Zero(N, N);
  add_plate_and_mass(b, sys.plate, sys.M_full);

  LDuals ld = build_l_duals(b, st.grid, sys.lin);
  Eigen::MatrixXd Qv, Qf;
  sys.A_full = assemble_direct(b, st.grid, st, sys.plate, ld, &Qv, &Qf);
  sys.A_adj_full = assemble_adjoint(b, st.grid, st, sys.plate, ld);

  sys.basis = build_basis(st.grid, st, sys.plate, sys.M_full);
  sys.A_red = sys.basis.V.transpose() * sys.A_full * sys.basis.V;
  sys.A_adj_red = sys.basis.V.transpose() * sys.A_adj_full * sys.basis.V;

  const int Q2 = 2 * b.lay.ns * b.lay.nz;
  sys.Q_visc_red = sys.basis.V.topRows(Q2).transpose() * Qv * sys.basis.V.topRows(Q2);
  sys.Q_fric_red = sys.basis.V.transpose() * Qf * sys.basis.V;
  Eigen::MatrixXd G2 = Eigen::MatrixXd::Zero(N, N);
  G2.block(b.lay.xi2(0), b.lay.xi2(0), b.lay.ns, b.lay.ns) = sys.plate.pair_A2;
  sys.Q_grad2_red = sys.basis.V.transpose() * G2 * sys.basis.V;

  sys.grad_qr = std::make_shared<Eigen::ColPivHouseholderQR<Eigen::MatrixXd>>(
      pressure_recovery_operator(sys));
  return sys;
}

LiftResult control_column(const DiscreteSystem& sys, const Eigen::MatrixXd& v_bdy) {
  const StateLayout& lay = sys.layout;
  const int ns = lay.ns;
  const int nrows = static_cast<int>(sys.basis.C.rows());
  // the state space carries no sawtooth trace: dealias the boundary data
  Eigen::VectorXd data_n = v_bdy.col(1), data_t = v_bdy.col(0);
  drop_nyquist(data_n);
  drop_nyquist(data_t);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(nrows);
  // bottom-trace rows sit after the divergence and top rows
  const int Q = ns * lay.nz;
  for (int i = 0; i < ns; ++i) {
    int row = Q + ns + i;
    g[row] = data_n[i] / sys.basis.row_scale[row];  // w_z(bottom) = (Mv)_z
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(sys.basis.C);
  cod.setThreshold(1e-10);
  Eigen::VectorXd W_g = cod.solve(g);

  Eigen::VectorXd bdy = Eigen::VectorXd::Zero(lay.total());
  for (int i = 0; i < ns; ++i)
    bdy[lay.ux(i, 0)] = sys.wbot[i] * sys.params.beta1 * data_t[i];

  Eigen::VectorXd rhs = sys.basis.V.transpose() *
                            (sys.A_full * W_g - sys.params.lambda0 * (sys.M_full * W_g)) +
                        sys.basis.V.transpose() * bdy;
  Eigen::MatrixXd R = sys.params.lambda0 *
                          Eigen::MatrixXd::Identity(sys.dim(), sys.dim()) -
                      sys.A_red;
  Eigen::VectorXd Z = R.partialPivLu().solve(rhs);

  LiftResult out;
  out.W_full = W_g + sys.basis.V * Z;
  out.reduced = sys.basis.V.transpose() * (sys.M_full * out.W_full);
  out.column = R * out.reduced;
  return out;
}

void assemble_control(DiscreteSystem& sys, const ControlShape& shape,
                      const std::vector<Eigen::MatrixXd>& actuator_fields) {
  sys.shape = shape;
  sys.actuators = actuator_fields;
  const int na = static_cast<int>(actuator_fields.size());
  sys.B_red.resize(sys.dim(), na);
  for (int k = 0; k < na; ++k) {
    Eigen::MatrixXd mv = apply_localizer(sys.grid, shape, actuator_fields[k]);
    sys.B_red.col(k) = control_column(sys, mv).column;
  }
}

Eigen::MatrixXcd Bstar_trace(const DiscreteSystem& sys, const Eigen::VectorXcd& eps,
                             std::complex<double> lambda) {
  const StateLayout& lay = sys.layout;
  const int ns = lay.ns, nz = lay.nz;
  const int Q = ns * nz;
  Eigen::VectorXcd full = sys.basis.V * eps;
  Eigen::VectorXcd phi = full.head(2 * Q);

  // strong adjoint momentum: grad r = nu lap phi + (wS.grad) phi - (grad wS)^T phi - lambda phi
  Eigen::MatrixXd Lap = sys.Dx * sys.Dx + sys.Dz * sys.Dz;
  Eigen::VectorXd wsx(Q), wsz(Q);
  geom::DomainOps ops(sys.grid, sys.stationary.etaS);
  ops::VelocityDerivs vS = ops::velocity_derivs(ops, sys.stationary.wS, false);
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < nz; ++j) {
      wsx[i * nz + j] = sys.stationary.wS.ux(i, j);
      wsz[i * nz + j] = sys.stationary.wS.uz(i, j);
    }
  auto adjoint_G = [&](const Eigen::VectorXcd& ph, int comp) -> Eigen::VectorXcd {
    Eigen::VectorXcd p_c = ph.segment(comp * Q, Q);
    Eigen::VectorXcd g = sys.params.nu * (Lap * p_c);
    g += wsx.asDiagonal() * (sys.Dx * p_c) + wsz.asDiagonal() * (sys.Dz * p_c);
    for (int c = 0; c < 2; ++c) {
      Eigen::VectorXd dws(Q);
      for (int i = 0; i < ns; ++i)
        for (int j = 0; j < nz; ++j) dws[i * nz + j] = vS.du[c][comp](i, j);
      g -= dws.asDiagonal() * ph.segment(c * Q, Q);
    }
    g -= lambda * p_c;
    return g;
  };
  Eigen::VectorXcd Gx = adjoint_G(phi, 0), Gz = adjoint_G(phi, 1);

  // least-squares gradient fit with a mean gauge
  std::shared_ptr<Eigen::ColPivHouseholderQR<Eigen::MatrixXd>> qr_local;
  if (!sys.grad_qr)
    qr_local = std::make_shared<Eigen::ColPivHouseholderQR<Eigen::MatrixXd>>(
        pressure_recovery_operator(sys));
  const auto& qr = sys.grad_qr ? *sys.grad_qr : *qr_local;
  Eigen::VectorXcd rhs(2 * Q + 2);
  rhs << Gx, Gz, std::complex<double>(0.0, 0.0), std::complex<double>(0.0, 0.0);
  Eigen::VectorXd rhs_re = rhs.real(), rhs_im = rhs.imag();
  Eigen::VectorXd head_re = rhs_re.head(2 * Q), head_im = rhs_im.head(2 * Q);
  scale_gradient_rhs(sys, head_re);
  scale_gradient_rhs(sys, head_im);
  rhs_re.head(2 * Q) = head_re;
  rhs_im.head(2 * Q) = head_im;
  Eigen::VectorXd r_re = qr.solve(rhs_re), r_im = qr.solve(rhs_im);
  Eigen::VectorXcd r = r_re.cast<std::complex<double>>() +
                       std::complex<double>(0, 1) * r_im.cast<std::complex<double>>();

  // normal traction at Gamma_0 with n = -e_z; the effective discrete control
  // map is (dealias o localize), so its adjoint dealiases the raw trace first
  Eigen::VectorXcd phiz = phi.tail(Q);
  Eigen::VectorXcd dzphiz = sys.Dz * phiz;
  Eigen::MatrixXcd t(ns, 2);
  for (int i = 0; i < ns; ++i) {
    int q0 = i * nz + 0;
    t(i, 0) = 0.0;
    t(i, 1) = r[q0] - 2.0 * sys.params.nu * dzphiz[q0];
  }
  {
    Eigen::VectorXd re = t.col(1).real(), im = t.col(1).imag();
    drop_nyquist(re);
    drop_nyquist(im);
    t.col(1) = re + std::complex<double>(0, 1) * im;
  }
  // localizer with the normalizing constant (pressure-gauge free); the sign
  // of the normal branch is pinned by duality against the discrete lifting
  std::complex<double> flux(0.0, 0.0);
  for (int i = 0; i < ns; ++i) flux += sys.grid.ws[i] * (-t(i, 1)) * sys.shape.m[i];
  Eigen::MatrixXcd out(ns, 2);
  for (int i = 0; i < ns; ++i) {
    std::complex<double> tn = -t(i, 1);  // (T n) . n with n = -e_z
    std::complex<double> corrected = tn - flux;
    out(i, 1) = sys.shape.m[i] * corrected;  // normal part, along -n
    // tangential traction through the slip condition the eigenvector obeys:
    // [2 nu D(phi) n]_tau = -beta1 phi_tau on the bottom wall
    out(i, 0) = sys.params.beta1 > 0
                    ? sys.params.beta1 * sys.shape.m[i] * phi[i * nz + 0]
                    : std::complex<double>(0.0, 0.0);
  }
  return out;
}

double Bstar_norm(const DiscreteSystem& sys, const Eigen::MatrixXcd& bstar) {
  double s = 0.0;
  for (int i = 0; i < sys.layout.ns; ++i)
    s += sys.grid.ws[i] * (std::norm(bstar(i, 0)) + std::norm(bstar(i, 1)));
  return std::sqrt(s);
}

Eigen::MatrixXd pressure_recovery_operator(const DiscreteSystem& sys) {
  // Least-squares gradient inversion from interior rows only: at the wall
  // collocation rows the weak solution satisfies boundary conditions, not the
  // strong momentum identity. Gauges: the mean and the s-Nyquist x constant-z
  // direction (annihilated by the odd-order spectral derivative).
  const int Q = sys.layout.ns * sys.layout.nz;
  const int nz = sys.layout.nz;
  Eigen::MatrixXd Astack = Eigen::MatrixXd::Zero(2 * Q + 2, Q);
  Astack.topRows(Q) = sys.Dx;
  Astack.middleRows(Q, Q) = sys.Dz;
  // down-weight rather than drop: the wall rows still pin the per-mode
  // antiderivative directions, with negligible leverage on the fit
  for (int i = 0; i < sys.layout.ns; ++i)
    for (int j : {0, nz - 1}) {
      Astack.row(i * nz + j) *= 1e-3;
      Astack.row(Q + i * nz + j) *= 1e-3;
    }
  Astack.row(2 * Q) = Eigen::RowVectorXd::Constant(Q, 1.0);
  for (int i = 0; i < sys.layout.ns; ++i)
    for (int j = 0; j < nz; ++j)
      Astack(2 * Q + 1, i * nz + j) = (i % 2 == 0 ? 1.0 : -1.0);
  return Astack;
}

void scale_gradient_rhs(const DiscreteSystem& sys, Eigen::VectorXd& grad_stack) {
  const int Q = sys.layout.ns * sys.layout.nz;
  const int nz = sys.layout.nz;
  for (int i = 0; i < sys.layout.ns; ++i)
    for (int j : {0, nz - 1}) {
      grad_stack[i * nz + j] *= 1e-3;
      grad_stack[Q + i * nz + j] *= 1e-3;
    }
}

Field recover_pressure(const DiscreteSystem& sys, const Eigen::MatrixXd& stack,
                       const Eigen::VectorXd& grad_stack) {
  Eigen::VectorXd scaled = grad_stack;
  scale_gradient_rhs(sys, scaled);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(stack.rows());
  rhs.head(scaled.size()) = scaled;
  Eigen::VectorXd p = stack.colPivHouseholderQr().solve(rhs);
  Field out(sys.layout.ns, sys.layout.nz);
  for (int i = 0; i < sys.layout.ns; ++i)
    for (int j = 0; j < sys.layout.nz; ++j) out(i, j) = p[i * sys.layout.nz + j];
  return out;
}

Eigen::MatrixXd plate_only_matrix(const ChannelGrid& grid, double alpha, double delta) {
  const int nd = grid.ns() - 2;
  Eigen::VectorXd kb = fourier::slot_wavenumbers(grid.ns(), grid.torus.L1);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * nd, 2 * nd);
  for (int k = 0; k < nd; ++k) {
    double kk = kb[k + 1];
    double s = std::sqrt(alpha) * kk * kk;
    A(k, nd + k) = s;
    A(nd + k, k) = -s;
    A(nd + k, nd + k) = -delta * kk * kk;
  }
  return A;
}

}  // namespace fsplate::disc
