#pragma once

#include "fsplate/spectral_analysis.hpp"

// Synthesis of the delayed finite-dimensional boundary feedback: project onto
// the modes right of the decay line, compensate the input delay exactly, and
// place the closed-loop poles.
namespace fsplate::control {

struct ReducedSystem {
  Eigen::MatrixXd A_u, B_u;
  double t0 = 0.0;
  double gamma = 0.0;
};

// Delay-free input matrix exp(-A_u t0) B_u of the transformed variable
// zeta(t) = z(t) + int_{t-t0}^t exp(A_u (t-s-t0)) B_u v(s) ds.
Eigen::MatrixXd artstein_reduce(const Eigen::MatrixXd& A_u, const Eigen::MatrixXd& B_u,
                                double t0);

Eigen::MatrixXd controllability_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);
int controllability_rank(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                         double tol = 1e-9);

struct PlaceResult {
  Eigen::MatrixXd F;  // n_act x n gain
  bool ok = false;
  double achieved_max_re = 0.0;
  int retries = 0;
  std::vector<std::complex<double>> closed_loop;
};

// Moves every eigenvalue to real part -(gamma+margin), keeping imaginary
// parts; multi-input systems are reduced to a random single input column
// with retries, validated by an eigensolve.
PlaceResult place_poles(const Eigen::MatrixXd& A_u, const Eigen::MatrixXd& B_tilde,
                        double gamma, double margin, unsigned seed = 12345,
                        double validate_tol = 1e-6);

struct FeedbackLaw {
  int N_gamma = 0;
  double gamma = 0.0, t0 = 0.0, margin = 0.0;
  Eigen::MatrixXd A_u, B_u, B_tilde, F;
  Eigen::MatrixXd exp_mAt0;                 // exp(-A_u t0)
  Eigen::MatrixXd right_basis, left_basis;  // reduced-coordinate bases
  std::vector<Eigen::MatrixXd> directions;  // actuator fields on Gamma_0 (ns x 2)
  Eigen::MatrixXd dir_gram;                 // L^2(Gamma_0) Gram of directions
  std::vector<std::complex<double>> open_loop, closed_loop;

  bool active() const { return N_gamma > 0; }
  Eigen::VectorXd project(const Eigen::VectorXd& z) const {
    return N_gamma ? Eigen::VectorXd(left_basis.transpose() * z) : Eigen::VectorXd();
  }
  double control_norm(const Eigen::VectorXd& v_coeff) const {
    if (!N_gamma || v_coeff.size() == 0) return 0.0;
    return std::sqrt(std::max(0.0, v_coeff.dot(dir_gram * v_coeff)));
  }
};

// Full synthesis: Hautus gate, unstable block, actuator directions from the
// adjoint traction traces, B assembly, Artstein reduction, pole placement.
FeedbackLaw synthesize(disc::DiscreteSystem& sys, double gamma, double t0,
                       double margin_factor = 0.2, double hautus_tol = 1e-6);

// Discrete history kernel: exact unrolling of the control recursion on a
// uniform grid with t0 = d dt. v_n = F z(t_{n-d}) + sum_m G[n][m] z(t_m).
struct DelayKernel {
  double dt = 0.0, t0 = 0.0;
  int d = 0;
  int steps = 0;
  // G[n] has n-d+1 entries (m = 0..n-d), each n_act x N_gamma
  std::vector<std::vector<Eigen::MatrixXd>> G;
};

DelayKernel export_kernel(const FeedbackLaw& law, double dt, int steps);

// Kernel samples K(tau, s) where the history term is int_0^tau K(tau,s) z(s) ds.
Eigen::MatrixXd kernel_sample(const DelayKernel& k, int n, int m);

}  // namespace fsplate::control
