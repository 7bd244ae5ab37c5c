#pragma once

#include <functional>
#include <string>
#include <vector>

#include "aerobat/sim.hpp"

namespace aerobat {

using VecX = Eigen::VectorXd;

struct OptimizationResult {
  VecX best;
  double best_cost = 0.0;
  std::vector<double> trace;        // cost per evaluation, penalties included
  std::vector<bool> feasible;       // per evaluation
  int evals = 0;
  std::string termination;          // "tol" or "max_evals"
  std::uint64_t seed = 0;
};

struct NelderMeadSettings {
  int max_evals = 400;
  double tol = 1e-7;         // simplex diameter
  double initial_step = 0.05;  // fraction of the box width per coordinate
  std::uint64_t seed = 0;
};

/// Box-projected Nelder-Mead. Objectives may throw or return non-finite
/// values; such evaluations receive a penalty of 1e6 times the median
/// feasible cost seen so far and never become the returned best point.
OptimizationResult nelder_mead(
    const std::function<double(const VecX&)>& objective, const VecX& x0,
    const VecX& lower, const VecX& upper, const NelderMeadSettings& settings);

/// Time-integrated squared angular momentum and body speed.
double gait_cost(const Trajectory& traj, double w1, double w2);
/// gait_cost plus the integrated squared pitch error.
double pitch_cost(const Trajectory& traj, double w1, double w2, double w3,
                  double theta_y_ref);

/// Open-loop gait search over [l_ref (4), theta_y0]; starts from the
/// nominal lengths and the configured pitch reference.
OptimizationResult optimize_gait(const RobotParams& params);

/// Pitch-gain search over K_c from the zero-gain anchor, simulating in
/// pitch-stabilized mode around the configured zero-path reference.
OptimizationResult optimize_pitch_gains(const RobotParams& params);

std::string result_to_json(const OptimizationResult& result,
                           const RobotParams& params,
                           const std::vector<std::string>& names);

}  // namespace aerobat
