#pragma once

#include <string>
#include <vector>

#include "aerobat/body.hpp"

namespace aerobat {

/// C_L, C_D as functions of the angle of attack in degrees.
std::pair<double, double> lift_drag_coeffs(double beta_deg);

/// Angle of attack (degrees) and squared in-plane relative speed for one
/// segment. v_w is the inertial relative wind, e_l / e_d the body-frame
/// strip axes. When both projections vanish returns (0, 0).
std::pair<double, double> angle_of_attack(const Vec3& v_w, const Mat3& r_b,
                                          const Vec3& e_l, const Vec3& e_d);

enum class WingPanel { HumerusL, HumerusR, RadiusL, RadiusR };
const char* wing_panel_name(WingPanel p);

/// Per-segment diagnostic record.
struct AeroSegmentRecord {
  WingPanel panel;
  bool chordwise;     // false: spanwise strip
  double coord;       // midpoint parameter in [0, 1]
  double beta_deg;
  double v_r;
  double df_lift;     // |C_L| force magnitude, N
  double df_drag;
  Vec3 p;             // inertial application point
};

struct AeroForceResult {
  GeneralizedForce u = GeneralizedForce::Zero();
  double lift = 0.0;    // inertial +z force total
  double thrust = 0.0;  // inertial +x force total
  std::vector<AeroSegmentRecord> segments;  // only when requested
};

/// Strip-theory generalized aerodynamic force: spanwise strips on all four
/// wing panels plus chordwise strips on the radius panels (the wingtip acts
/// as a second leading edge). Midpoint quadrature, fixed summation order.
AeroForceResult generalized_aero_force(const BodyState& state,
                                       const AeroParams& ap,
                                       const MassedParams& mp,
                                       bool record_segments = false);

std::string segments_to_csv(const std::vector<AeroSegmentRecord>& segments);

}  // namespace aerobat
