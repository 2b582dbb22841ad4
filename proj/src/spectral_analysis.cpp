#include "fsplate/spectral_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fsplate::spectral {

namespace {

bool lambda_before(const std::complex<double>& a, const std::complex<double>& b) {
  if (a.real() != b.real()) return a.real() > b.real();
  return a.imag() > b.imag();
}

std::vector<EigenPair> solve_all(const Eigen::MatrixXd& A, double* max_res) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(A);
  const int n = static_cast<int>(A.rows());
  std::vector<EigenPair> out(n);
  for (int k = 0; k < n; ++k) {
    EigenPair p;
    p.lambda = es.eigenvalues()[k];
    p.right = es.eigenvectors().col(k);
    p.right /= p.right.norm();
    p.residual = (A * p.right - p.lambda * p.right).norm();
    out[k] = std::move(p);
  }
  std::sort(out.begin(), out.end(),
            [](const EigenPair& a, const EigenPair& b) { return lambda_before(a.lambda, b.lambda); });
  if (max_res)
    for (const auto& p : out) *max_res = std::max(*max_res, p.residual);
  return out;
}

}  // namespace

Spectrum compute_spectrum(const Eigen::MatrixXd& A, const Eigen::MatrixXd* A_adj) {
  Spectrum sp;
  sp.pairs = solve_all(A, &sp.max_residual);
  if (A_adj) sp.adjoint = solve_all(*A_adj, &sp.max_residual);
  return sp;
}

HautusReport hautus_test(const disc::DiscreteSystem& sys, double sigma, double tol_rel) {
  Spectrum sp = compute_spectrum(sys.A_red, &sys.A_adj_red);
  HautusReport rep;
  rep.sigma = sigma;
  rep.tol_rel = tol_rel;
  rep.min_margin = std::numeric_limits<double>::infinity();
  for (const auto& p : sp.adjoint) {
    if (p.lambda.real() < -sigma) continue;
    Eigen::MatrixXcd bs = disc::Bstar_trace(sys, p.right, p.lambda);
    HautusRow row;
    row.lambda = p.lambda;
    row.bstar_norm = disc::Bstar_norm(sys, bs);
    row.pass = row.bstar_norm >= tol_rel;
    rep.rows.push_back(row);
    rep.min_margin = std::min(rep.min_margin, row.bstar_norm);
  }
  if (rep.rows.empty()) rep.min_margin = 0.0;
  rep.pass = true;
  for (const auto& r : rep.rows) rep.pass = rep.pass && r.pass;
  return rep;
}

HautusReport hautus_test_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                double sigma, double tol_rel) {
  Eigen::MatrixXd At = A.transpose();
  Spectrum sp = compute_spectrum(At);
  HautusReport rep;
  rep.sigma = sigma;
  rep.tol_rel = tol_rel;
  rep.min_margin = std::numeric_limits<double>::infinity();
  for (const auto& p : sp.pairs) {
    if (p.lambda.real() < -sigma) continue;
    HautusRow row;
    row.lambda = p.lambda;
    row.bstar_norm = (B.transpose() * p.right).norm();
    row.pass = row.bstar_norm >= tol_rel;
    rep.rows.push_back(row);
    rep.min_margin = std::min(rep.min_margin, row.bstar_norm);
  }
  if (rep.rows.empty()) rep.min_margin = 0.0;
  rep.pass = true;
  for (const auto& r : rep.rows) rep.pass = rep.pass && r.pass;
  return rep;
}

UnstableBlock unstable_mode_count(const Eigen::MatrixXd& A, const Eigen::MatrixXd& A_adj,
                                  double gamma, double margin_tol) {
  Spectrum sp = compute_spectrum(A, &A_adj);
  UnstableBlock blk;
  blk.min_gap = std::numeric_limits<double>::infinity();
  for (const auto& p : sp.pairs)
    blk.min_gap = std::min(blk.min_gap, std::abs(p.lambda.real() + gamma));
  if (blk.min_gap < margin_tol)
    throw std::runtime_error("unstable_mode_count: eigenvalue within tolerance of the -gamma line");

  std::vector<Eigen::VectorXcd> rights;
  std::vector<std::complex<double>> lams;
  for (const auto& p : sp.pairs) {
    if (p.lambda.real() <= -gamma) continue;
    if (p.lambda.imag() < 0) continue;  // conjugate handled with its partner
    lams.push_back(p.lambda);
    rights.push_back(p.right);
  }
  std::vector<bool> adj_used(sp.adjoint.size(), false);

  // real column count
  int n = 0;
  for (const auto& l : lams) n += (std::abs(l.imag()) > 0 ? 2 : 1);
  blk.N_gamma = n;
  const int dim = static_cast<int>(A.rows());
  blk.right_basis.resize(dim, n);
  Eigen::MatrixXd left0(dim, n);
  int at = 0;
  for (size_t q = 0; q < lams.size(); ++q) {
    const auto& lam = lams[q];
    blk.eigenvalues.push_back(lam);
    // matching adjoint eigenvector: eigenvalue closest to conj(lambda);
    // repeated eigenvalues (cos/sin pairs) must take distinct columns
    const EigenPair* best = nullptr;
    int best_idx = -1;
    double bd = std::numeric_limits<double>::infinity();
    for (size_t ai = 0; ai < sp.adjoint.size(); ++ai) {
      if (adj_used[ai]) continue;
      double d = std::abs(sp.adjoint[ai].lambda - std::conj(lam));
      if (d < bd) {
        bd = d;
        best = &sp.adjoint[ai];
        best_idx = static_cast<int>(ai);
      }
    }
    adj_used[best_idx] = true;
    if (std::abs(lam.imag()) > 0) {
      blk.eigenvalues.push_back(std::conj(lam));
      blk.right_basis.col(at) = rights[q].real();
      blk.right_basis.col(at + 1) = rights[q].imag();
      left0.col(at) = best->right.real();
      left0.col(at + 1) = best->right.imag();
      at += 2;
    } else {
      Eigen::VectorXcd r = rights[q];
      // rotate a real eigenvector out of an arbitrary complex phase
      int imax;
      r.cwiseAbs().maxCoeff(&imax);
      r /= r[imax] / std::abs(r[imax]);
      blk.right_basis.col(at) = r.real();
      Eigen::VectorXcd l = best->right;
      l.cwiseAbs().maxCoeff(&imax);
      l /= l[imax] / std::abs(l[imax]);
      left0.col(at) = l.real();
      at += 1;
    }
  }

  if (n > 0) {
    Eigen::MatrixXd S = left0.transpose() * blk.right_basis;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(S);
    blk.pairing_condition =
        svd.singularValues()[0] / svd.singularValues()[svd.singularValues().size() - 1];
    if (blk.pairing_condition > 1e8)
      throw std::runtime_error("unstable_mode_count: bi-orthogonalization ill conditioned (defective cluster?)");
    blk.left_basis = left0 * S.inverse().transpose();
    blk.A_u = blk.left_basis.transpose() * A * blk.right_basis;
  } else {
    blk.right_basis.resize(dim, 0);
    blk.left_basis.resize(dim, 0);
    blk.A_u.resize(0, 0);
  }
  return blk;
}

Eigen::MatrixXd spectral_projection(const UnstableBlock& blk, int dim) {
  if (blk.N_gamma == 0) return Eigen::MatrixXd::Zero(dim, dim);
  return blk.right_basis * blk.left_basis.transpose();
}

}  // namespace fsplate::spectral
