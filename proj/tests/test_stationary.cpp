#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fsplate/stationary.hpp"

using namespace fsplate;
using geom::ChannelGrid;
using geom::TorusGrid;

TEST_CASE("zero forcing returns the zero state") {
  ChannelGrid grid(TorusGrid(2, 1.0, 8), 10);
  ops::SteadySolveReport rep;
  ops::StationaryState st =
      ops::steady_state_solve(grid, 0.1, 1.0, 0.5, 0.1, 0.1, nullptr, nullptr, {}, &rep);
  CHECK(rep.converged);
  CHECK(st.wS.ux.cwiseAbs().maxCoeff() == 0.0);
  CHECK(st.etaS.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("small forcing: converged free-boundary state with small residual") {
  ChannelGrid grid(TorusGrid(2, 1.0, 8), 10);
  const double L = 1.0;
  // z-dependent horizontal force: not a gradient, so the flow must move
  auto fS = [L](double x, double h) {
    return Eigen::Vector2d(0.02 * std::sin(2 * M_PI * x / L) * (1.0 + 0.5 * h), 0.0);
  };
  auto hS = [L](double s) { return 0.01 * std::cos(2 * M_PI * s / L); };
  ops::SteadySolveOptions opts;
  opts.tol = 1e-10;
  ops::SteadySolveReport rep;
  ops::StationaryState st =
      ops::steady_state_solve(grid, 0.1, 1.0, 0.5, 0.1, 0.1, fS, hS, opts, &rep);
  CHECK(rep.converged);
  CHECK(rep.residual <= 1e-10);
  CHECK(st.etaS.values.cwiseAbs().maxCoeff() > 1e-6);   // plate actually deforms
  CHECK(st.wS.ux.cwiseAbs().maxCoeff() > 1e-5);         // flow actually moves
  CHECK(st.etaS.admissible());

  // recovered velocity is divergence free on Omega(etaS)
  geom::DomainOps ops_(grid, st.etaS);
  CHECK(ops_.divergence_norm(st.wS) < 1e-8);
  // impermeability: velocity through the moving wall vanishes
  Eigen::VectorXd etaS_d = st.etaS.derivative(0).values;
  for (int i = 0; i < grid.ns(); ++i) {
    double un = -etaS_d[i] * st.wS.ux(i, grid.nz() - 1) + st.wS.uz(i, grid.nz() - 1);
    CHECK(std::abs(un) < 1e-9);
    CHECK(std::abs(st.wS.uz(i, 0)) < 1e-9);
  }

  // progress is Newton-like: fast tail contraction once close
  REQUIRE(rep.history.size() >= 3);
  double last = rep.history[rep.history.size() - 1];
  double prev = rep.history[rep.history.size() - 2];
  CHECK(last < 1e-4 * prev);
}
