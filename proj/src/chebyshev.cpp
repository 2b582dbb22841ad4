#include "fsplate/chebyshev.hpp"

#include <cassert>
#include <cmath>

namespace fsplate::cheb {

Eigen::VectorXd nodes01(int n) {
  assert(n >= 2);
  int m = n - 1;
  Eigen::VectorXd z(n);
  for (int j = 0; j <= m; ++j) z[j] = 0.5 * (1.0 - std::cos(M_PI * j / m));
  return z;
}

Eigen::MatrixXd diff_matrix01(int n) {
  // Standard CGL differentiation matrix on x = cos(j pi / m), mapped to
  // z = (1-x)/2 (ascending) with dz = -dx/2.
  int m = n - 1;
  Eigen::VectorXd x(n);
  for (int j = 0; j <= m; ++j) x[j] = std::cos(M_PI * j / m);
  Eigen::VectorXd c(n);
  for (int j = 0; j <= m; ++j) c[j] = (j == 0 || j == m) ? 2.0 : 1.0;
  Eigen::MatrixXd D(n, n);
  for (int i = 0; i <= m; ++i) {
    double rowsum = 0.0;
    for (int j = 0; j <= m; ++j) {
      if (i != j) {
        double sij = ((i + j) % 2 == 0) ? 1.0 : -1.0;
        D(i, j) = (c[i] / c[j]) * sij / (x[i] - x[j]);
        rowsum += D(i, j);
      }
    }
    D(i, i) = -rowsum;  // negative-sum trick
  }
  // z_j = (1 - x_j)/2 is already ascending; d/dz = -2 d/dx.
  return -2.0 * D;
}

Eigen::VectorXd cc_weights01(int n) {
  // Integrate the interpolant via its Chebyshev series:
  // int_{-1}^{1} T_k dx = 2/(1-k^2) for even k, else 0.
  int m = n - 1;
  Eigen::MatrixXd A(n, n);  // values at CGL nodes -> Chebyshev coefficients
  for (int k = 0; k <= m; ++k) {
    for (int j = 0; j <= m; ++j) {
      double f = 2.0 / m;
      if (j == 0 || j == m) f *= 0.5;
      if (k == 0 || k == m) f *= 0.5;
      A(k, j) = f * std::cos(M_PI * k * j / m);
    }
  }
  Eigen::VectorXd it(n);
  for (int k = 0; k <= m; ++k)
    it[k] = (k % 2 == 0) ? 2.0 / (1.0 - double(k) * k) : 0.0;
  Eigen::VectorXd w = A.transpose() * it;
  // Node order matches nodes01; scale the measure to [0,1].
  return 0.5 * w;
}

}  // namespace fsplate::cheb
