#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fsplate/fourier.hpp"
#include "fsplate/spectral_analysis.hpp"

using namespace fsplate;
using geom::ChannelGrid;
using geom::TorusGrid;

namespace {

disc::DiscreteSystem rest_system(int ns = 8, int nz = 10) {
  ChannelGrid grid(TorusGrid(2, 1.0, ns), nz);
  ops::StationaryState st = ops::StationaryState::zero(grid, 0.1, 1.0, 0.5, 0.1, 0.1);
  disc::DiscreteSystem sys = disc::assemble_AS(st);
  sys.shape = disc::make_control_shape(grid, "cos4");
  return sys;
}

}  // namespace

TEST_CASE("plate-only eigenvalues solve the per-mode quadratic") {
  ChannelGrid grid(TorusGrid(2, 1.0, 16), 8);
  const double alpha = 1.0, delta = 0.5;
  Eigen::MatrixXd A = disc::plate_only_matrix(grid, alpha, delta);
  spectral::Spectrum sp = spectral::compute_spectrum(A);
  Eigen::VectorXd kb = fourier::slot_wavenumbers(16, 1.0);
  for (const auto& p : sp.pairs) {
    // lambda^2 + delta k^2 lambda + alpha k^4 = 0 for some retained k
    double best = 1e300;
    for (int s = 1; s <= 14; ++s) {
      double k2 = kb[s] * kb[s];
      std::complex<double> val =
          p.lambda * p.lambda + delta * k2 * p.lambda + alpha * k2 * k2;
      best = std::min(best, std::abs(val) / std::max(1.0, k2 * k2));
    }
    CHECK(best < 1e-8);
  }
}

TEST_CASE("spectrum is conjugate symmetric with small residuals") {
  disc::DiscreteSystem sys = rest_system();
  spectral::Spectrum sp = spectral::compute_spectrum(sys.A_red, &sys.A_adj_red);
  CHECK(sp.max_residual < 1e-8);
  for (const auto& p : sp.pairs) {
    if (std::abs(p.lambda.imag()) < 1e-12) continue;
    double best = 1e300;
    for (const auto& q : sp.pairs) best = std::min(best, std::abs(q.lambda - std::conj(p.lambda)));
    CHECK(best < 1e-8 * std::max(1.0, std::abs(p.lambda)));
  }
}

TEST_CASE("toy stabilizability test") {
  Eigen::MatrixXd A(1, 1), B1(1, 1), B0(1, 1);
  A << 1.0;
  B1 << 1.0;
  B0 << 0.0;
  spectral::HautusReport pass = spectral::hautus_test_matrix(A, B1, 2.0);
  CHECK(pass.pass);
  CHECK(pass.rows.size() == 1);
  spectral::HautusReport fail = spectral::hautus_test_matrix(A, B0, 2.0);
  CHECK_FALSE(fail.pass);
  CHECK(fail.min_margin == doctest::Approx(0.0));
}

TEST_CASE("unstable block: count, bi-orthogonality, projection") {
  disc::DiscreteSystem sys = rest_system(12, 14);
  spectral::Spectrum sp = spectral::compute_spectrum(sys.A_red);
  double gamma = 2.0;
  // brute-force recount
  int count = 0;
  for (const auto& p : sp.pairs)
    if (p.lambda.real() > -gamma) ++count;

  spectral::UnstableBlock blk =
      spectral::unstable_mode_count(sys.A_red, sys.A_adj_red, gamma);
  CHECK(blk.N_gamma == count);
  int reals_in_strip = 0;
  for (const auto& p : sp.pairs)
    if (p.lambda.real() > -gamma && std::abs(p.lambda.imag()) < 1e-10) ++reals_in_strip;
  if (reals_in_strip == 0) CHECK(blk.N_gamma % 2 == 0);

  if (blk.N_gamma > 0) {
    Eigen::MatrixXd I = blk.left_basis.transpose() * blk.right_basis;
    CHECK((I - Eigen::MatrixXd::Identity(blk.N_gamma, blk.N_gamma)).cwiseAbs().maxCoeff() <
          1e-8);
    Eigen::MatrixXd P = spectral::spectral_projection(blk, sys.dim());
    CHECK((P * P - P).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((P * sys.A_red - sys.A_red * P).cwiseAbs().maxCoeff() < 1e-6);
    // A_u reproduces the retained eigenvalues
    spectral::Spectrum su = spectral::compute_spectrum(blk.A_u);
    for (const auto& l : blk.eigenvalues) {
      double best = 1e300;
      for (const auto& q : su.pairs) best = std::min(best, std::abs(q.lambda - l));
      CHECK(best < 1e-8 * std::max(1.0, std::abs(l)));
    }
  }

  // gamma smaller than the spectral gap of a stable system: nothing retained
  double abscissa = sp.pairs.front().lambda.real();
  spectral::UnstableBlock none =
      spectral::unstable_mode_count(sys.A_red, sys.A_adj_red, -abscissa / 2.0);
  CHECK(none.N_gamma == 0);

  // refusal when the line hits the spectrum
  CHECK_THROWS(spectral::unstable_mode_count(sys.A_red, sys.A_adj_red, -abscissa));
}

TEST_CASE("full-system stabilizability margins") {
  disc::DiscreteSystem sys = rest_system(12, 14);
  spectral::HautusReport rep = spectral::hautus_test(sys, 2.0, 1e-6);
  CHECK(rep.rows.size() >= 1);
  CHECK(rep.pass);
  CHECK(rep.min_margin >= 1e-6);
}
