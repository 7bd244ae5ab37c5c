#pragma once

#include "aerobat/body.hpp"
#include "aerobat/linkage.hpp"

namespace aerobat {

/// Thrown when a guide spring's endpoints coincide and its direction is
/// undefined.
struct CoincidentPointsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Torsional spring-damper torques on the four wing joint coordinates,
/// u_i = -(k (theta - theta0) + b thetadot).
Vec4 torsional_forces(const Vec4& joints, const Vec4& rates,
                      const MassedParams& mp);

/// Body-frame guide spring-damper force on a massed attachment point.
/// Planar: only the y-z components of the points enter, and the returned
/// force has zero x-component. p_link/v_link are linkage (y, z) coordinates,
/// p_pt/v_pt the attachment point's body-frame position and velocity.
Vec3 guide_force(const Vec2& p_link, const Vec2& v_link, const Vec3& p_pt,
                 const Vec3& v_pt, double rest_len, const MassedParams& mp);

/// (d p_dot / d u)^T f for an inertial point Jacobian and inertial force.
GeneralizedForce map_point_force(const Mat3x10& jac, const Vec3& force);

/// Total guide wrench: shoulder and elbow guides on both wings. The right
/// wing sees the linkage end effectors mirrored across the x-z plane.
GeneralizedForce assemble_guide_wrench(const LinkagePose& pose,
                                       const BodyState& state,
                                       const MassedParams& mp);

/// Torsional torques plus guide wrench.
GeneralizedForce coupling_wrench(const LinkagePose& pose,
                                 const BodyState& state,
                                 const MassedParams& mp);

}  // namespace aerobat
