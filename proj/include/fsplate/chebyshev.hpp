#pragma once

#include <Eigen/Dense>

// Chebyshev-Gauss-Lobatto collocation on [0,1], nodes in ascending order.
namespace fsplate::cheb {

Eigen::VectorXd nodes01(int n);

// First-derivative collocation matrix on nodes01(n).
Eigen::MatrixXd diff_matrix01(int n);

// Clenshaw-Curtis quadrature weights for nodes01(n): sum_j w_j f(z_j)
// integrates the degree-(n-1) interpolant of f over [0,1] exactly.
Eigen::VectorXd cc_weights01(int n);

}  // namespace fsplate::cheb
