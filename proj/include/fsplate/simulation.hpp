#pragma once

#include <deque>
#include <functional>
#include <string>

#include "fsplate/delay_control.hpp"

// Time integration of the open- and closed-loop dynamics: trapezoidal in the
// generator, explicit in the delayed control and the quadratic remainder.
namespace fsplate::sim {

using control::FeedbackLaw;
using disc::DiscreteSystem;

// Time-indexed history of (state, control) with interpolation.
struct DelayBuffer {
  int interp_order = 3;  // 3 = cubic, 1 = linear
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> controls;

  void push(double t, const Eigen::VectorXd& z, const Eigen::VectorXd& v);
  Eigen::VectorXd state_at(double t) const;
  Eigen::VectorXd control_at(double t) const;
  double span() const { return times.empty() ? 0.0 : times.back() - times.front(); }
};

struct Trajectory {
  std::vector<double> t;
  std::vector<double> norm_H, norm_fluid, norm_xi1, norm_xi2, norm_v;
  std::vector<double> energy_residual;  // accumulated physical-balance defect
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> controls;  // actuator coordinates
  std::vector<Eigen::VectorXd> zu;        // unstable-block coordinates
  int picard_worst = 0;
  bool aborted = false;
  std::string abort_reason;

  double final_time() const { return t.empty() ? 0.0 : t.back(); }
};

struct IntegrateOptions {
  double T = 10.0;
  double dt = 0.01;
  int interp_order = 3;
  bool store_states = true;
  double picard_tol = 1e-9;
  int picard_max = 25;
  // optional state impulse for causality experiments
  double kick_time = -1.0;
  Eigen::VectorXd kick;
  // external forcing as a reduced dual vector of t
  std::function<Eigen::VectorXd(double)> forcing;
};

Trajectory integrate_linear(const DiscreteSystem& sys, const FeedbackLaw* law,
                            const Eigen::VectorXd& z0, const IntegrateOptions& opts);

// Twin driver: control evaluated through the exported history kernel.
Trajectory integrate_linear_kernel(const DiscreteSystem& sys, const FeedbackLaw& law,
                                   const control::DelayKernel& kernel,
                                   const Eigen::VectorXd& z0,
                                   const IntegrateOptions& opts);

Trajectory integrate_nonlinear(const DiscreteSystem& sys, const FeedbackLaw* law,
                               const Eigen::VectorXd& z0, const IntegrateOptions& opts);

struct DecayFit {
  double rate = 0.0;   // fitted decay exponent (positive = decaying)
  double band = 0.0;   // 1.96 sigma confidence half width
  int n_used = 0;
};
DecayFit decay_fit(const std::vector<double>& t, const std::vector<double>& norms,
                   double t_start);

// Theorem-style smallness norm of an initial state: H1(Omega) of the fluid
// part plus H3(omega) and H1(omega) of the plate parts.
double smallness_norm(const DiscreteSystem& sys, const Eigen::VectorXd& z);

}  // namespace fsplate::sim
