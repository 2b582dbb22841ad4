#pragma once

#include "fsplate/transform_ops.hpp"

// Newton (Gauss-Newton least-squares) solve of the coupled stationary system:
// fluid, free plate shape and pressure, written on the flat channel through
// the vertical-stretch map with reference profile zero.
namespace fsplate::ops {

struct SteadySolveOptions {
  int max_iter = 30;
  double tol = 1e-10;
  double fd_eps = 1e-7;
};

struct SteadySolveReport {
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
  std::vector<double> history;  // residual norm per iteration
};

StationaryState steady_state_solve(
    const ChannelGrid& grid, double nu, double alpha, double delta, double beta1,
    double beta2, std::function<Eigen::Vector2d(double, double)> fS,
    std::function<double(double)> hS, const SteadySolveOptions& opts = {},
    SteadySolveReport* report = nullptr);

}  // namespace fsplate::ops
