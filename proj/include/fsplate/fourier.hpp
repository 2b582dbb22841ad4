#pragma once

#include <Eigen/Dense>
#include <functional>

// Trigonometric collocation on a uniform periodic grid of n points (n even)
// over a period L. Real coefficient layout, size n:
//   [a0, a1, b1, a2, b2, ..., a_{n/2-1}, b_{n/2-1}, a_{n/2}]
// for f(s) = a0 + sum_k a_k cos(2 pi k s / L) + b_k sin(2 pi k s / L)
//          + a_{n/2} cos(pi n s / L).
namespace fsplate::fourier {

Eigen::VectorXd nodes(int n, double L);

// values -> coefficients (exact DFT)
Eigen::MatrixXd analysis(int n);
// coefficients -> values
Eigen::MatrixXd synthesis(int n);

// Differentiation matrix of given order acting on nodal values.
// Odd orders annihilate the Nyquist mode.
Eigen::MatrixXd diff_matrix(int n, double L, int order);

// Nodal matrix of the Fourier multiplier g(|2 pi k / L|).
// The k=0 slot uses g(0); the Nyquist slot uses g(pi n / L).
Eigen::MatrixXd symbol_matrix(int n, double L,
                              const std::function<double(double)>& g);

// Wavenumber magnitude 2 pi k / L per coefficient slot.
Eigen::VectorXd slot_wavenumbers(int n, double L);

// Quadrature weight of the nodal L^2(0,L) inner product (uniform: L/n).
inline double node_weight(int n, double L) { return L / n; }

// Spectral derivative of nodal data (columns untouched).
Eigen::VectorXd derivative(const Eigen::VectorXd& values, double L, int order);

}  // namespace fsplate::fourier
