#pragma once

#include <complex>
#include <vector>

#include "fsplate/discretization.hpp"

// Eigenstructure of the reduced generator and its adjoint, the numerical
// stabilizability test, and unstable-block extraction for a decay target.
namespace fsplate::spectral {

struct EigenPair {
  std::complex<double> lambda;
  Eigen::VectorXcd right;  // unit norm in the energy coordinates
  double residual = 0.0;
};

struct Spectrum {
  std::vector<EigenPair> pairs;      // sorted by Re desc, Im desc
  std::vector<EigenPair> adjoint;    // eigenpairs of the adjoint matrix
  bool certified = true;             // dense solve: full coverage
  double shift = 0.0;
  double max_residual = 0.0;
};

Spectrum compute_spectrum(const Eigen::MatrixXd& A, const Eigen::MatrixXd* A_adj = nullptr);

struct HautusRow {
  std::complex<double> lambda;
  double bstar_norm = 0.0;
  bool pass = false;
};

struct HautusReport {
  double sigma = 0.0;
  double tol_rel = 1e-6;
  std::vector<HautusRow> rows;
  double min_margin = 0.0;
  bool pass = false;
  bool certified = true;
};

HautusReport hautus_test(const disc::DiscreteSystem& sys, double sigma,
                         double tol_rel = 1e-6);
// Toy variant on plain (A, B) matrices: ||B^T eps|| per adjoint eigenvector.
HautusReport hautus_test_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                double sigma, double tol_rel = 1e-6);

struct UnstableBlock {
  int N_gamma = 0;
  std::vector<std::complex<double>> eigenvalues;
  Eigen::MatrixXd right_basis;  // dim x N_gamma
  Eigen::MatrixXd left_basis;   // dim x N_gamma with left^T right = I
  Eigen::MatrixXd A_u;          // left^T A right
  double min_gap = 0.0;         // distance of the spectrum to the -gamma line
  double pairing_condition = 0.0;
};

// Counts Re lambda > -gamma and builds real bi-orthogonal bases. Refuses
// (throws) when an eigenvalue sits within margin_tol of the line.
UnstableBlock unstable_mode_count(const Eigen::MatrixXd& A, const Eigen::MatrixXd& A_adj,
                                  double gamma, double margin_tol = 1e-6);

// Spectral projection P = right left^T and commutation diagnostics.
Eigen::MatrixXd spectral_projection(const UnstableBlock& blk, int dim);

}  // namespace fsplate::spectral
