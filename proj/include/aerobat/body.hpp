#pragma once

#include <Eigen/Dense>
#include <array>

#include "aerobat/config.hpp"

namespace aerobat {

using Vec10 = Eigen::Matrix<double, 10, 1>;
using Mat10 = Eigen::Matrix<double, 10, 10>;
using Mat3x10 = Eigen::Matrix<double, 3, 10>;

/// Generalized force aligned with q2' = [th_sL, th_eL, th_sR, th_eR, x_B, omega_B].
using GeneralizedForce = Vec10;

// Indices into the generalized velocity.
namespace q2i {
inline constexpr int sL = 0, eL = 1, sR = 2, eR = 3, x = 4, w = 7;
}

/// Massed subsystem state: wing joint angles, body position, generalized
/// velocity and the body rotation matrix.
struct BodyState {
  Vec4 joints = Vec4::Zero();  // [theta_sL, theta_eL, theta_sR, theta_eR]
  Vec3 x_b = Vec3::Zero();
  Vec10 u = Vec10::Zero();     // [joint rates, xdot_B, omega_B (body frame)]
  Mat3 r_b = Mat3::Identity();

  Vec3 omega_b() const { return u.segment<3>(q2i::w); }
  Vec3 xdot_b() const { return u.segment<3>(q2i::x); }
};

enum class Side { Left, Right };
enum class BodyId { Body, HumerusL, HumerusR, RadiusL, RadiusR };
inline constexpr std::array<BodyId, 5> all_bodies = {
    BodyId::Body, BodyId::HumerusL, BodyId::HumerusR, BodyId::RadiusL,
    BodyId::RadiusR};

/// A point attached to the wing chain, given in the left-wing convention
/// as a sum of terms R_x(ks*theta_s + ke*theta_e + k0) * v plus a constant
/// base offset. Right-wing points are mirrored across the body x-z plane.
struct WingPointSpec {
  struct Term {
    Vec3 v;
    double ks, ke, k0;
  };
  Vec3 base = Vec3::Zero();
  std::vector<Term> terms;
};

/// Inertial kinematics of an attached point: position, velocity, velocity
/// Jacobian, its time derivative and the velocity-product acceleration.
struct PointKinematics {
  Vec3 p_body;   // body-frame position
  Vec3 v_rel;    // body-frame velocity relative to the body
  Vec3 p;        // inertial position
  Vec3 v;        // inertial velocity
  Mat3x10 jac;   // d v / d u
  Mat3x10 jac_dot;
  Vec3 acc_vp;   // acceleration at frozen generalized velocity
};

PointKinematics point_kinematics(const WingPointSpec& spec, Side side,
                                 const BodyState& state);

// Shipped attachment specs (left-wing convention).
WingPointSpec humerus_com_spec(const MassedParams& mp);
WingPointSpec radius_com_spec(const MassedParams& mp);
WingPointSpec guide6_spec(const MassedParams& mp);   // shoulder guide point p6
WingPointSpec guide17_spec(const MassedParams& mp);  // elbow guide point p17

/// CoM kinematics of one massed body, plus its (constant) angular velocity
/// Jacobian in body frame.
struct ComKinematics {
  PointKinematics pt;
  Mat3x10 jac_omega;
  Vec3 omega;  // body-frame angular velocity
};

ComKinematics com_kinematics(BodyId id, const BodyState& state,
                             const MassedParams& mp);

/// 10x10 mass matrix, symmetric positive definite.
Mat10 mass_matrix(const BodyState& state, const MassedParams& mp);

/// Gravity, Coriolis/centrifugal and SO(3) gyroscopic bias; the equation of
/// motion is M2 * udot + h2 = total_force.
Vec10 bias_forces(const BodyState& state, const MassedParams& mp);

/// udot = M2^-1 (total_force - h2) and Rdot_B = R_B [omega_B]x.
struct MassedAccel {
  Vec10 udot;
  Mat3 r_dot;
};
MassedAccel massed_accel(const BodyState& state,
                         const GeneralizedForce& total_force,
                         const MassedParams& mp);

/// Kinetic and gravitational potential energy.
std::pair<double, double> energies(const BodyState& state,
                                   const MassedParams& mp);

/// Total linear momentum of the massed bodies (inertial frame).
Vec3 linear_momentum(const BodyState& state, const MassedParams& mp);

/// Pitch angle, nose-up positive: asin of the inertial z-component of the
/// body x-axis.
double pitch_angle(const Mat3& r_b);

/// Rotation with pitch theta_y and no roll/yaw (inverse of pitch_angle).
Mat3 rotation_from_pitch(double theta_y);

/// Nearest rotation matrix (polar projection).
Mat3 orthonormalize(const Mat3& r);

Mat3 skew(const Vec3& v);

}  // namespace aerobat
