#pragma once

#include <string>
#include <vector>

#include "aerobat/aero.hpp"
#include "aerobat/body.hpp"
#include "aerobat/coupling.hpp"
#include "aerobat/linkage.hpp"

namespace aerobat {

/// Thrown when a step fails; the message carries the simulation time.
struct SimError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class SimMode { OpenLoop, PitchStabilized };

/// Full simulator state: massless linkage, massed bodies, controller
/// memory and time.
struct SystemState {
  LinkageState link;
  BodyState body;
  Vec4 l_ref = Vec4::Zero();  // current FDC reference
  double t = 0.0;
};

double crank_controller(double theta1_dot, double omega_ref, double k_d1);
Vec4 fdc_controller(const Vec4& l, const Vec4& l_dot, const Vec4& l_ref,
                    const Vec4& k_p2, const Vec4& k_d2);

/// Saturated pitch outer loop: l_ref = sat(l_ref_zp + K_c (ref - theta_y)).
Vec4 pitch_outer_loop(double theta_y, const ControlParams& ctrl,
                      const Vec4& l_min, const Vec4& l_max);

/// Whole-system angular momentum about the instantaneous CoM. Default sign
/// follows the optimization metric's printed form; SimParams can flip the
/// orbital term to the conventional sign.
Vec3 angular_momentum(const BodyState& state, const MassedParams& mp,
                      bool conventional_sign = false);

struct TrajectorySample {
  double t;
  Vec3 x_b, v_b;
  Mat3 r_b;
  Vec3 omega_b;
  Vec4 joints;       // [th_sL, th_eL, th_sR, th_eR]
  Vec4 joint_rates;
  double theta1, theta1_dot;
  Vec4 fdc;
  Vec4 l_ref;
  Vec3 pi;
  double theta_y;
  double lift, thrust;
  double c_norm;     // constraint drift, infinity norm
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  bool complete = true;       // false when a step aborted
  std::string abort_reason;
};

/// One RK4 step with controllers evaluated per stage, followed by linkage
/// projection and rotation re-orthonormalization.
void step(SystemState& state, const RobotParams& params, SimMode mode);

/// Initial condition: body at rest with the given pitch, wing joints at
/// their torsional rest angles, crank spun up at omega_ref, linkage
/// assembled at theta1 = 0 with FDCs at l_ref.
SystemState initial_state(const RobotParams& params, SimMode mode,
                          double theta_y0);

/// Integrates t in [0, t_end] recording every sim.decimation-th step.
/// Step failures preserve the partial trajectory.
Trajectory simulate(const RobotParams& params, SimMode mode, double theta_y0,
                    double t_end);
Trajectory simulate(const RobotParams& params, SystemState state,
                    SimMode mode, double t_end);

/// Stroboscopic periodicity defect: norm of the state difference one flap
/// period apart (body velocity, joint angles, omega_B), minimized over the
/// final five periods. Throws SimError when the trajectory is too short.
double limit_cycle_metric(const Trajectory& traj, double flap_period);

/// Norm of the limit-cycle comparison state at the final sample.
double limit_cycle_state_norm(const Trajectory& traj);

std::string trajectory_to_csv(const Trajectory& traj);

/// JSON run summary: final/mean velocity, limit-cycle metric and the cost
/// breakdown under the configured weights.
std::string trajectory_summary_json(const Trajectory& traj,
                                    const RobotParams& params);

}  // namespace aerobat
