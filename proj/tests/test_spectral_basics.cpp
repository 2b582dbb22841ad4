#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fsplate/chebyshev.hpp"
#include "fsplate/fourier.hpp"

using namespace fsplate;

TEST_CASE("fourier analysis/synthesis round trip") {
  const int n = 16;
  Eigen::MatrixXd A = fourier::analysis(n);
  Eigen::MatrixXd S = fourier::synthesis(n);
  CHECK(((S * A) - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("fourier differentiation is exact on resolved modes") {
  const int n = 16;
  const double L = 2.3;
  Eigen::VectorXd s = fourier::nodes(n, L);
  Eigen::VectorXd f(n), df(n), d2f(n);
  for (int i = 0; i < n; ++i) {
    double k = 2.0 * M_PI * 3 / L;
    f[i] = std::sin(k * s[i]) + 0.5 * std::cos(2.0 * k / 3.0 * s[i]);
    df[i] = k * std::cos(k * s[i]) - 0.5 * (2.0 * k / 3.0) * std::sin(2.0 * k / 3.0 * s[i]);
    d2f[i] = -k * k * std::sin(k * s[i]) -
             0.5 * std::pow(2.0 * k / 3.0, 2) * std::cos(2.0 * k / 3.0 * s[i]);
  }
  CHECK((fourier::derivative(f, L, 1) - df).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((fourier::derivative(f, L, 2) - d2f).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("chebyshev nodes, derivative and quadrature") {
  const int n = 20;
  Eigen::VectorXd z = cheb::nodes01(n);
  CHECK(z[0] == doctest::Approx(0.0));
  CHECK(z[n - 1] == doctest::Approx(1.0));
  Eigen::MatrixXd D = cheb::diff_matrix01(n);
  Eigen::VectorXd f(n), df(n);
  for (int j = 0; j < n; ++j) {
    f[j] = std::exp(1.3 * z[j]);
    df[j] = 1.3 * std::exp(1.3 * z[j]);
  }
  CHECK((D * f - df).cwiseAbs().maxCoeff() < 1e-9);
  Eigen::VectorXd w = cheb::cc_weights01(n);
  double integral = w.dot(f);
  CHECK(integral == doctest::Approx((std::exp(1.3) - 1.0) / 1.3).epsilon(1e-12));
  // degree exactness on a polynomial
  Eigen::VectorXd p(n);
  for (int j = 0; j < n; ++j) p[j] = std::pow(z[j], 7) - 2.0 * z[j] * z[j];
  CHECK(w.dot(p) == doctest::Approx(1.0 / 8.0 - 2.0 / 3.0).epsilon(1e-13));
}

TEST_CASE("fourier symbol matrix applies multipliers per mode") {
  const int n = 8;
  const double L = 1.0;
  Eigen::MatrixXd Sym =
      fourier::symbol_matrix(n, L, [](double k) { return k * k * k * k; });
  Eigen::VectorXd s = fourier::nodes(n, L);
  Eigen::VectorXd f(n);
  for (int i = 0; i < n; ++i) f[i] = std::cos(2.0 * M_PI * s[i] / L);
  Eigen::VectorXd g = Sym * f;
  double expect = std::pow(2.0 * M_PI / L, 4);
  CHECK((g - expect * f).cwiseAbs().maxCoeff() < 1e-9);  // Nyquist-amplified roundoff
  // the quartic symbol at k=1, L=1 is (2 pi)^4
  CHECK(expect == doctest::Approx(1558.5454565440993).epsilon(1e-12));
}
