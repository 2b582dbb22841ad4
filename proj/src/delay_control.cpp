#include "fsplate/delay_control.hpp"

#include <limits>
#include <random>
#include <unsupported/Eigen/MatrixFunctions>

namespace fsplate::control {

Eigen::MatrixXd artstein_reduce(const Eigen::MatrixXd& A_u, const Eigen::MatrixXd& B_u,
                                double t0) {
  if (A_u.rows() == 0) return B_u;
  Eigen::MatrixXd E = (-t0 * A_u).exp();
  return E * B_u;
}

Eigen::MatrixXd controllability_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  const int n = static_cast<int>(A.rows());
  const int m = static_cast<int>(B.cols());
  Eigen::MatrixXd K(n, n * m);
  Eigen::MatrixXd P = B;
  for (int k = 0; k < n; ++k) {
    K.middleCols(k * m, m) = P;
    P = A * P;
  }
  return K;
}

int controllability_rank(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double tol) {
  Eigen::MatrixXd K = controllability_matrix(A, B);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(K);
  int r = 0;
  double smax = svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
  for (int k = 0; k < svd.singularValues().size(); ++k)
    if (svd.singularValues()[k] > tol * std::max(1.0, smax)) ++r;
  return r;
}

PlaceResult place_poles(const Eigen::MatrixXd& A_u, const Eigen::MatrixXd& B_tilde,
                        double gamma, double margin, unsigned seed,
                        double validate_tol) {
  PlaceResult out;
  const int n = static_cast<int>(A_u.rows());
  const int m = static_cast<int>(B_tilde.cols());
  if (n == 0) {
    out.F.resize(m, 0);
    out.ok = true;
    out.achieved_max_re = -std::numeric_limits<double>::infinity();
    return out;
  }

  Eigen::EigenSolver<Eigen::MatrixXd> es(A_u);
  double target_re = -(gamma + margin);
  bool already = true;
  std::vector<std::complex<double>> targets;
  for (int k = 0; k < n; ++k) {
    std::complex<double> l = es.eigenvalues()[k];
    already = already && (l.real() <= target_re + 1e-12);
    targets.emplace_back(target_re, l.imag());
  }
  // spread coinciding targets slightly deeper: a defective closed loop would
  // both split under the eigensolve and carry a t e^{lambda t} transient
  {
    std::vector<std::complex<double>> original = targets;
    for (size_t i = 0; i < targets.size(); ++i) {
      int dup = 0;
      for (size_t j = 0; j < i; ++j)
        if (std::abs(original[j].imag() - original[i].imag()) < 1e-9 &&
            std::abs(original[j].real() - original[i].real()) < 1e-9)
          ++dup;
      targets[i] -= std::complex<double>(0.01 * dup * (gamma + margin), 0.0);
    }
  }
  if (already) {
    out.F = Eigen::MatrixXd::Zero(m, n);
    out.ok = true;
    out.achieved_max_re = es.eigenvalues().real().maxCoeff();
    for (int k = 0; k < n; ++k) out.closed_loop.push_back(es.eigenvalues()[k]);
    return out;
  }

  if (controllability_rank(A_u, B_tilde) < n) {
    out.ok = false;
    return out;
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  auto validate = [&](const Eigen::MatrixXd& F, PlaceResult& res) {
    Eigen::EigenSolver<Eigen::MatrixXd> cl(A_u + B_tilde * F);
    double worst = 0.0;
    for (int k = 0; k < n; ++k) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& t : targets) best = std::min(best, std::abs(cl.eigenvalues()[k] - t));
      worst = std::max(worst, best);
    }
    if (worst <= validate_tol * std::max(1.0, gamma + margin)) {
      res.F = F;
      res.ok = true;
      res.achieved_max_re = cl.eigenvalues().real().maxCoeff();
      res.closed_loop.clear();
      for (int k = 0; k < n; ++k) res.closed_loop.push_back(cl.eigenvalues()[k]);
      return true;
    }
    return false;
  };

  // Single effective input (including rank-one multi-column B): Ackermann on
  // the collapsed column; handles repeated targets through a Jordan block.
  Eigen::JacobiSVD<Eigen::MatrixXd> bsvd(B_tilde, Eigen::ComputeFullV);
  int rankB = 0;
  for (int k = 0; k < bsvd.singularValues().size(); ++k)
    if (bsvd.singularValues()[k] > 1e-10 * bsvd.singularValues()[0]) ++rankB;
  if (rankB == 1) {
    Eigen::VectorXd q = bsvd.matrixV().col(0);
    Eigen::VectorXd bcol = B_tilde * q;
    if (controllability_rank(A_u, bcol) < n) {
      out.ok = false;
      return out;
    }
    Eigen::MatrixXd K = controllability_matrix(A_u, bcol);
    Eigen::VectorXd en = Eigen::VectorXd::Zero(n);
    en[n - 1] = 1.0;
    Eigen::VectorXd x = K.transpose().colPivHouseholderQr().solve(en);
    Eigen::MatrixXd P = Eigen::MatrixXd::Identity(n, n);
    std::vector<bool> used(targets.size(), false);
    for (size_t i = 0; i < targets.size(); ++i) {
      if (used[i]) continue;
      if (std::abs(targets[i].imag()) < 1e-14) {
        P = P * (A_u - targets[i].real() * Eigen::MatrixXd::Identity(n, n));
      } else {
        for (size_t j = i + 1; j < targets.size(); ++j)
          if (!used[j] && std::abs(targets[j] - std::conj(targets[i])) < 1e-10) {
            used[j] = true;
            break;
          }
        P = P * (A_u * A_u - 2.0 * targets[i].real() * A_u +
                 std::norm(targets[i]) * Eigen::MatrixXd::Identity(n, n));
      }
      used[i] = true;
    }
    Eigen::RowVectorXd f = -(x.transpose() * P);
    if (validate(q * f, out)) return out;
    out.ok = false;
    return out;
  }

  // Eigenstructure assignment: for each target mu pick an input direction w
  // and the closed-loop eigenvector v = (mu I - A)^{-1} B~ w; then F solves
  // F V = W. Repeated targets need independent input directions, which is
  // why the input matrix is kept multi-column.
  Eigen::MatrixXcd Acplx = A_u.cast<std::complex<double>>();
  Eigen::MatrixXcd Bcplx = B_tilde.cast<std::complex<double>>();
  for (int attempt = 0; attempt < 40; ++attempt) {
    Eigen::MatrixXd V(n, n), W(m, n);
    int at = 0;
    for (int k = 0; k < n && at < n; ++k) {
      const auto& mu = targets[k];
      if (mu.imag() < 0) continue;  // conjugate handled with its partner
      Eigen::VectorXcd w(m);
      if (attempt == 0) {
        w.setZero();
        w[at % m] = 1.0;
        if (std::abs(mu.imag()) > 0 && m > 1) w[(at + 1) % m] = {0.0, 1.0};
      } else {
        for (int i = 0; i < m; ++i) w[i] = {gauss(rng), std::abs(mu.imag()) > 0 ? gauss(rng) : 0.0};
      }
      Eigen::MatrixXcd shifted = mu * Eigen::MatrixXcd::Identity(n, n) - Acplx;
      Eigen::VectorXcd v = shifted.partialPivLu().solve(Bcplx * w);
      if (std::abs(mu.imag()) > 0) {
        V.col(at) = v.real();
        V.col(at + 1) = v.imag();
        W.col(at) = w.real();
        W.col(at + 1) = w.imag();
        at += 2;
      } else {
        V.col(at) = v.real();
        W.col(at) = w.real();
        at += 1;
      }
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(V.transpose());
    Eigen::MatrixXd F = qr.solve(W.transpose()).transpose();  // F V = W
    if (validate(F, out)) return out;
    ++out.retries;
  }
  out.ok = false;
  return out;
}

FeedbackLaw synthesize(disc::DiscreteSystem& sys, double gamma, double t0,
                       double margin_factor, double hautus_tol) {
  spectral::HautusReport hr = spectral::hautus_test(sys, gamma, hautus_tol);
  if (!hr.pass)
    throw std::runtime_error("synthesize: criterion failed (stabilizability test)");

  spectral::UnstableBlock blk =
      spectral::unstable_mode_count(sys.A_red, sys.A_adj_red, gamma);

  FeedbackLaw law;
  law.N_gamma = blk.N_gamma;
  law.gamma = gamma;
  law.t0 = t0;
  law.margin = margin_factor * gamma;
  law.open_loop = blk.eigenvalues;
  if (blk.N_gamma == 0) return law;

  law.right_basis = blk.right_basis;
  law.left_basis = blk.left_basis;
  law.A_u = blk.A_u;

  // actuator directions from the adjoint traction traces of the retained modes
  spectral::Spectrum sp = spectral::compute_spectrum(sys.A_red, &sys.A_adj_red);
  std::vector<Eigen::MatrixXd> dirs;
  for (const auto& p : sp.adjoint) {
    if (p.lambda.real() <= -gamma || p.lambda.imag() < 0) continue;
    Eigen::MatrixXcd bs = disc::Bstar_trace(sys, p.right, p.lambda);
    Eigen::MatrixXd re = bs.real(), im = bs.imag();
    double nr = disc::Bstar_norm(sys, re.cast<std::complex<double>>());
    if (nr > 0) dirs.push_back(re / nr);
    if (std::abs(p.lambda.imag()) > 1e-12) {
      double ni = disc::Bstar_norm(sys, im.cast<std::complex<double>>());
      if (ni > 1e-12) dirs.push_back(im / ni);
    }
  }
  if (dirs.empty())
    throw std::runtime_error("synthesize: criterion failed (no usable actuator directions)");
  disc::assemble_control(sys, sys.shape, dirs);
  law.directions = dirs;

  law.dir_gram.resize(dirs.size(), dirs.size());
  for (size_t a = 0; a < dirs.size(); ++a)
    for (size_t b = 0; b < dirs.size(); ++b) {
      double s = 0.0;
      for (int i = 0; i < sys.layout.ns; ++i)
        s += sys.grid.ws[i] * (dirs[a](i, 0) * dirs[b](i, 0) + dirs[a](i, 1) * dirs[b](i, 1));
      law.dir_gram(a, b) = s;
    }

  law.B_u = blk.left_basis.transpose() * sys.B_red;
  law.B_tilde = artstein_reduce(law.A_u, law.B_u, t0);
  law.exp_mAt0 = (-t0 * law.A_u).exp();

  PlaceResult pr = place_poles(law.A_u, law.B_tilde, gamma, law.margin);
  if (!pr.ok)
    throw std::runtime_error("synthesize: criterion failed (pole placement / controllability)");
  law.F = pr.F;
  law.closed_loop = pr.closed_loop;
  return law;
}

DelayKernel export_kernel(const FeedbackLaw& law, double dt, int steps) {
  DelayKernel k;
  k.dt = dt;
  k.t0 = law.t0;
  k.steps = steps;
  double dd = law.t0 / dt;
  k.d = static_cast<int>(std::lround(dd));
  if (std::abs(dd - k.d) > 1e-9)
    throw std::invalid_argument("export_kernel: t0 must be a multiple of dt");
  if (!law.active()) {
    k.G.assign(steps + 1, {});
    return k;
  }
  const int n_act = static_cast<int>(law.F.rows());
  const int ng = law.N_gamma;
  const int d = k.d;

  std::vector<Eigen::MatrixXd> EnegB(d + 1);
  Eigen::MatrixXd Estep = (-dt * law.A_u).exp();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Identity(ng, ng);
  for (int j = 0; j <= d; ++j) {
    EnegB[j] = acc * law.B_u;
    acc = Estep * acc;
  }

  Eigen::MatrixXd S = Eigen::MatrixXd::Identity(n_act, n_act);
  if (d > 0)
    S = (Eigen::MatrixXd::Identity(n_act, n_act) - 0.5 * dt * law.F * EnegB[d])
            .inverse();

  // H[n][m]: v_n = sum_m H[n][m] z_m, m <= n-d
  std::vector<std::vector<Eigen::MatrixXd>> H(steps + 1);
  k.G.assign(steps + 1, {});
  for (int n = d; n <= steps; ++n) {
    H[n].assign(n - d + 1, Eigen::MatrixXd::Zero(n_act, ng));
    if (d == 0) {
      H[n][n] = law.F;
    } else {
      for (int m = 0; m <= n - d; ++m) {
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(ng, ng);
        if (m == n - d) T += Eigen::MatrixXd::Identity(ng, ng);
        for (int j = std::max(n - d, d); j <= n - 1; ++j) {
          if (m > j - d) continue;
          double w = (j == n - d) ? 0.5 * dt : dt;
          T += w * EnegB[j - (n - d)] * H[j][m];
        }
        H[n][m] = S * law.F * T;
      }
    }
    k.G[n].assign(n - d + 1, Eigen::MatrixXd::Zero(n_act, ng));
    for (int m = 0; m <= n - d; ++m) k.G[n][m] = H[n][m];
    k.G[n][n - d] -= law.F;
  }
  return k;
}

Eigen::MatrixXd kernel_sample(const DelayKernel& k, int n, int m) {
  double w = k.dt;
  if (m == 0 || m == n - k.d) w = 0.5 * k.dt;
  if (n - k.d == 0) return k.G[n][m];  // point mass, no meaningful density
  return k.G[n][m] / w;
}

}  // namespace fsplate::control
