#include "fsplate/fourier.hpp"

#include <cassert>
#include <cmath>

namespace fsplate::fourier {

Eigen::VectorXd nodes(int n, double L) {
  Eigen::VectorXd s(n);
  for (int i = 0; i < n; ++i) s[i] = L * i / n;
  return s;
}

Eigen::MatrixXd analysis(int n) {
  assert(n >= 4 && n % 2 == 0);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    A(0, i) = 1.0 / n;
    for (int k = 1; k < n / 2; ++k) {
      double ph = 2.0 * M_PI * k * i / n;
      A(2 * k - 1, i) = 2.0 * std::cos(ph) / n;
      A(2 * k, i) = 2.0 * std::sin(ph) / n;
    }
    A(n - 1, i) = (i % 2 == 0 ? 1.0 : -1.0) / n;
  }
  return A;
}

Eigen::MatrixXd synthesis(int n) {
  assert(n >= 4 && n % 2 == 0);
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    S(i, 0) = 1.0;
    for (int k = 1; k < n / 2; ++k) {
      double ph = 2.0 * M_PI * k * i / n;
      S(i, 2 * k - 1) = std::cos(ph);
      S(i, 2 * k) = std::sin(ph);
    }
    S(i, n - 1) = (i % 2 == 0 ? 1.0 : -1.0);
  }
  return S;
}

Eigen::VectorXd slot_wavenumbers(int n, double L) {
  Eigen::VectorXd w(n);
  w[0] = 0.0;
  for (int k = 1; k < n / 2; ++k) {
    w[2 * k - 1] = 2.0 * M_PI * k / L;
    w[2 * k] = 2.0 * M_PI * k / L;
  }
  w[n - 1] = M_PI * n / L;
  return w;
}

Eigen::MatrixXd diff_matrix(int n, double L, int order) {
  assert(order >= 1);
  Eigen::MatrixXd A = analysis(n);
  Eigen::MatrixXd S = synthesis(n);
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, n);
  // d/ds maps (a_k, b_k) -> (kb b_k, -kb a_k); apply `order` times.
  if (order % 2 == 0) {
    int half = order / 2;
    double sign = (half % 2 == 0) ? 1.0 : -1.0;
    Eigen::VectorXd w = slot_wavenumbers(n, L);
    for (int s = 0; s < n; ++s) C(s, s) = sign * std::pow(w[s], order);
  } else {
    Eigen::VectorXd w = slot_wavenumbers(n, L);
    int half = (order - 1) / 2;
    double sign = (half % 2 == 0) ? 1.0 : -1.0;
    for (int k = 1; k < n / 2; ++k) {
      double m = sign * std::pow(w[2 * k - 1], order);
      C(2 * k - 1, 2 * k) = m;
      C(2 * k, 2 * k - 1) = -m;
    }
    // k = 0 and Nyquist slots stay zero.
  }
  return S * C * A;
}

Eigen::MatrixXd symbol_matrix(int n, double L,
                              const std::function<double(double)>& g) {
  Eigen::MatrixXd A = analysis(n);
  Eigen::MatrixXd S = synthesis(n);
  Eigen::VectorXd w = slot_wavenumbers(n, L);
  Eigen::VectorXd d(n);
  for (int s = 0; s < n; ++s) d[s] = g(w[s]);
  return S * d.asDiagonal() * A;
}

Eigen::VectorXd derivative(const Eigen::VectorXd& values, double L, int order) {
  return diff_matrix(static_cast<int>(values.size()), L, order) * values;
}

}  // namespace fsplate::fourier
