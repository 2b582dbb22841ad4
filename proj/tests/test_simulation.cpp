#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fsplate/simulation.hpp"
#include "fsplate/verify.hpp"

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

TEST_CASE("decay_fit oracles") {
  std::vector<double> t, n1, n2, n3;
  for (int k = 0; k <= 1200; ++k) {
    double tk = 0.05 * k;
    t.push_back(tk);
    n1.push_back(std::exp(-2.0 * tk));
    n2.push_back(std::exp(-tk) * (2.0 + std::sin(5.0 * tk)));
    n3.push_back(3.7);
  }
  sim::DecayFit f1 = sim::decay_fit(t, n1, 0.0);
  CHECK(f1.rate == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(f1.band < 1e-6);
  sim::DecayFit f2 = sim::decay_fit(t, n2, 2.0);
  CHECK(f2.rate == doctest::Approx(1.0).epsilon(0.05));
  sim::DecayFit f3 = sim::decay_fit(t, n3, 0.0);
  CHECK(std::abs(f3.rate) < 1e-12);
}

TEST_CASE("delay buffer interpolation") {
  sim::DelayBuffer buf;
  for (int k = 0; k <= 40; ++k) {
    double tk = 0.1 * k;
    Eigen::VectorXd z(1), v(1);
    z << std::sin(tk);
    v << std::cos(tk);
    buf.push(tk, z, v);
  }
  CHECK(buf.span() == doctest::Approx(4.0));
  // cubic interpolation of a smooth signal
  CHECK(buf.state_at(1.234)[0] == doctest::Approx(std::sin(1.234)).epsilon(1e-4));
  buf.interp_order = 1;
  CHECK(buf.state_at(1.234)[0] == doctest::Approx(std::sin(1.234)).epsilon(1e-2));
  CHECK_THROWS(buf.push(3.9, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)));
}

TEST_CASE("zero data stays zero; mean of the plate velocity is conserved") {
  disc::DiscreteSystem sys = rest_system();
  sim::IntegrateOptions opts;
  opts.T = 1.0;
  opts.dt = 0.02;
  sim::Trajectory tr =
      sim::integrate_linear(sys, nullptr, Eigen::VectorXd::Zero(sys.dim()), opts);
  CHECK(tr.norm_H.back() == 0.0);

  Eigen::VectorXd z0 = verify::random_state(sys, 77);
  sim::Trajectory tr2 = sim::integrate_linear(sys, nullptr, z0, opts);
  double worst_mean = 0.0;
  for (const auto& z : tr2.states) {
    Eigen::VectorXd xi2 = sys.xi2_part(sys.lift(z));
    worst_mean = std::max(worst_mean, std::abs(xi2.mean()));
  }
  CHECK(worst_mean < 1e-10);
}

TEST_CASE("uncontrolled decay matches the spectral abscissa within 5 percent") {
  disc::DiscreteSystem sys = rest_system();
  spectral::Spectrum sp = spectral::compute_spectrum(sys.A_red);
  double abscissa = -sp.pairs.front().lambda.real();
  Eigen::VectorXd z0 = verify::random_state(sys, 31);
  sim::IntegrateOptions opts;
  opts.T = 40.0;
  opts.dt = 0.02;
  opts.store_states = false;
  sim::Trajectory tr = sim::integrate_linear(sys, nullptr, z0, opts);
  sim::DecayFit fit = sim::decay_fit(tr.t, tr.norm_H, 20.0);
  CHECK(fit.rate == doctest::Approx(abscissa).epsilon(0.05));
}

TEST_CASE("energy balance residual converges at second order") {
  disc::DiscreteSystem sys = rest_system();
  Eigen::VectorXd z0 = verify::random_state(sys, 55);
  auto run = [&](double dt) {
    sim::IntegrateOptions opts;
    opts.T = 2.0;
    opts.dt = dt;
    opts.store_states = false;
    return sim::integrate_linear(sys, nullptr, z0, opts).energy_residual.back();
  };
  double e1 = run(0.02), e2 = run(0.01);
  CHECK(std::log2(e1 / e2) >= 1.9);
}

TEST_CASE("step-halving convergence of trajectories") {
  disc::DiscreteSystem sys = rest_system();
  Eigen::VectorXd z0 = verify::random_state(sys, 99);
  auto final_state = [&](double dt) {
    sim::IntegrateOptions opts;
    opts.T = 1.0;
    opts.dt = dt;
    return sim::integrate_linear(sys, nullptr, z0, opts).states.back();
  };
  Eigen::VectorXd a = final_state(0.04), b = final_state(0.02), c = final_state(0.01);
  double e1 = (a - c).norm(), e2 = (b - c).norm();
  CHECK(e1 / e2 >= 3.4);  // ~2^2 with Richardson pollution from the reference
}

TEST_CASE("boundary forcing then free decay at the open-loop rate") {
  disc::DiscreteSystem sys = rest_system();
  spectral::Spectrum sp = spectral::compute_spectrum(sys.A_red);
  double abscissa = -sp.pairs.front().lambda.real();
  // compactly supported tangential pulse on the bottom wall, off after t = 1
  Eigen::VectorXd g_bot(sys.layout.ns);
  for (int i = 0; i < sys.layout.ns; ++i)
    g_bot[i] = std::exp(-40.0 * std::pow(sys.grid.s[i] - 0.5, 2));
  geom::FluidField fzero;
  fzero.ux = geom::Field::Zero(sys.layout.ns, sys.layout.nz);
  fzero.uz = geom::Field::Zero(sys.layout.ns, sys.layout.nz);
  Eigen::VectorXd zero_t = Eigen::VectorXd::Zero(sys.layout.ns);
  Eigen::VectorXd dual = sys.pair_forcing(fzero, zero_t, g_bot, zero_t);
  sim::IntegrateOptions opts;
  opts.T = 30.0;
  opts.dt = 0.02;
  opts.store_states = false;
  opts.forcing = [&](double t) {
    return t <= 1.0 ? Eigen::VectorXd(dual) : Eigen::VectorXd(Eigen::VectorXd::Zero(sys.dim()));
  };
  sim::Trajectory tr = sim::integrate_linear(sys, nullptr, Eigen::VectorXd::Zero(sys.dim()), opts);
  CHECK(tr.norm_H[static_cast<int>(1.0 / opts.dt)] > 0.0);
  sim::DecayFit fit = sim::decay_fit(tr.t, tr.norm_H, 15.0);
  CHECK(fit.rate == doctest::Approx(abscissa).epsilon(0.1));
}

TEST_CASE("causality: state perturbations reach the control only after the delay") {
  disc::DiscreteSystem sys = rest_system(8, 12);
  double gamma = verify::pick_gamma(sys, 2.0);
  control::FeedbackLaw law = control::synthesize(sys, gamma, 0.1);
  REQUIRE(law.active());
  Eigen::VectorXd z0 = verify::random_state(sys, 41);
  sim::IntegrateOptions opts;
  opts.T = 3.0;
  opts.dt = law.t0 / 16.0;
  sim::Trajectory base = sim::integrate_linear(sys, &law, z0, opts);

  sim::IntegrateOptions kicked = opts;
  kicked.kick_time = 1.5;
  kicked.kick = 0.5 * verify::random_state(sys, 42);
  sim::Trajectory tr = sim::integrate_linear(sys, &law, z0, kicked);

  double before = 0.0, after = 0.0;
  for (size_t k = 0; k < base.t.size(); ++k) {
    double dv = (tr.controls[k] - base.controls[k]).norm();
    // the perturbation excites the input only once it is t0 old
    if (base.t[k] <= 1.5 + law.t0 + 1e-12)
      before = std::max(before, dv);
    else
      after = std::max(after, dv);
  }
  CHECK(before < 1e-13);
  CHECK(after > 1e-6);
}

TEST_CASE("nonlinear: zero data, quadratic smallness, abort on large data") {
  disc::DiscreteSystem sys = rest_system();
  sim::IntegrateOptions opts;
  opts.T = 0.6;
  opts.dt = 0.02;
  sim::Trajectory tz =
      sim::integrate_nonlinear(sys, nullptr, Eigen::VectorXd::Zero(sys.dim()), opts);
  CHECK_FALSE(tz.aborted);
  CHECK(tz.norm_H.back() == 0.0);

  Eigen::VectorXd dir = verify::random_state(sys, 13);
  dir /= sim::smallness_norm(sys, dir);
  auto gap = [&](double R) {
    sim::Trajectory nl = sim::integrate_nonlinear(sys, nullptr, (R * dir).eval(), opts);
    REQUIRE_FALSE(nl.aborted);
    sim::Trajectory li = sim::integrate_linear(sys, nullptr, (R * dir).eval(), opts);
    double g = 0.0;
    for (size_t k = 0; k < nl.states.size(); ++k)
      g = std::max(g, (nl.states[k] - li.states[k]).norm());
    return g;
  };
  double g1 = gap(1e-3), g2 = gap(5e-4);
  CHECK(std::log2(g1 / g2) >= 1.9);

  // scale until the lid displacement leaves the admissible range
  Eigen::VectorXd xi1 = sys.xi1_part(sys.lift(dir));
  double scale = 2.0 / std::max(1e-12, xi1.cwiseAbs().maxCoeff());
  sim::Trajectory big = sim::integrate_nonlinear(sys, nullptr, (scale * dir).eval(), opts);
  CHECK(big.aborted);
  CHECK_FALSE(big.abort_reason.empty());
}
