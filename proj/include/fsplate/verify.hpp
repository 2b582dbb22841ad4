#pragma once

#include "fsplate/config.hpp"
#include "fsplate/io.hpp"
#include "fsplate/simulation.hpp"
#include "fsplate/stationary.hpp"

// The invariant battery: one named check per acceptance property, each with
// its measured value and pinned threshold.
namespace fsplate::verify {

struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0.0;      // measured quantity
  double threshold = 0.0;  // pinned bound it is compared against
  std::string relation;    // "<=" or ">="
};

struct Battery {
  std::vector<CheckResult> results;
  bool all_pass() const {
    for (const auto& r : results)
      if (!r.pass) return false;
    return true;
  }
};

// Runs every acceptance property at the configuration's scale. Deterministic
// given cfg.seed. The heavy closed-loop checks reuse one assembled system.
Battery run_all(const cfg::RunConfig& cfg);

std::string battery_csv(const Battery& b);
std::string battery_text(const Battery& b);

// Shared helpers reused by tests.
disc::DiscreteSystem default_system(const cfg::RunConfig& cfg);
Eigen::VectorXd random_state(const disc::DiscreteSystem& sys, unsigned long seed);
double pick_gamma(const disc::DiscreteSystem& sys, double requested);

}  // namespace fsplate::verify
