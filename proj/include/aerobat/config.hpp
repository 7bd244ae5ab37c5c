#pragma once

#include <Eigen/Dense>
#include <array>
#include <stdexcept>
#include <string>

namespace aerobat {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;

/// Thrown on malformed config text.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when a loaded parameter set violates an invariant. The message
/// names the first violated invariant.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Planar linkage network: anchors and link dimensions, body y-z plane,
/// meters and radians. The four variable-length links (FDCs) are
/// l3b, l3c, l8b and l10b; their nominal lengths are fdc_nominal.
struct LinkageGeometry {
  Vec2 p1{0.008, 0.009};     // crank 1 pivot
  Vec2 p4{0.058, 0.009};     // shoulder rocker pivot
  Vec2 p9{0.008, -0.031};    // crank 2 pivot
  Vec2 p12{0.058, -0.031};   // elbow-train rocker pivot
  Vec2 p14{0.100, -0.050};   // elbow output rocker pivot

  double l1 = 0.010;   // crank 1
  double l2 = 0.050;   // coupler, crank 1 to joint 3
  double l3a = 0.045;  // fixed part of the shoulder rocker input arm
  double l5a = 0.050;  // fixed extension from l3c out to joint 5
  double l7 = 0.010;   // crank 2
  double l8a = 0.040;  // fixed part of the elbow-train coupler
  double l9 = 0.055;   // rocker, p12 to joint 11
  double l10a = 0.050; // fixed part of link 10
  double l12a = 0.045; // elbow output rocker input arm
  double l12b = 0.064; // elbow output rocker, p14 to joint 16

  double delta_phi = 0.0;  // crank phase difference theta1 - theta9

  Vec4 fdc_nominal{0.010, 0.010, 0.010, 0.010};  // [l3b, l3c, l8b, l10b]_0

  void validate() const;
};

/// Masses, inertias and the wing attachment geometry of the five massed
/// bodies (body, left/right humerus, left/right radius). Inertia matrices
/// are constant in the body frame.
struct MassedParams {
  double m_body = 0.040;
  double m_humerus = 0.003;
  double m_radius = 0.002;
  Mat3 I_body = Vec3(2e-5, 3e-4, 3e-4).asDiagonal();
  Mat3 I_humerus = Vec3(2.5e-6, 1.0e-7, 2.5e-6).asDiagonal();
  Mat3 I_radius = Vec3(3.5e-6, 1.0e-7, 3.5e-6).asDiagonal();

  double l_h = 0.100;   // humerus length
  double l_r = 0.140;   // radius length
  double alpha = 0.300; // shoulder mount offset angle
  double l5b = 0.020;   // riser between shoulder anchor and humerus root
  Vec3 p7 = Vec3(0.03, 0.05, 0.00);  // shoulder anchor, body frame

  // Guide attachment brackets: r6 rotates with the humerus (R_x(theta7)),
  // r17 with the radius (R_x(theta8)); both relative to their joints.
  Vec3 r6 = Vec3(0.0, 0.0107, -0.0400);
  Vec3 r17 = Vec3(0.0, 0.0042, -0.0402);
  double l4 = 0.030;   // shoulder guide rest length, |p5 - p6| at rest
  double l11 = 0.030;  // elbow guide rest length, |p16 - p17| at rest

  // Torsional spring-dampers on joints 7 and 8, per wing joint
  // [shoulder_L, elbow_L, shoulder_R, elbow_R].
  Vec4 k_torsion{0.02, 0.02, 0.02, 0.02};
  Vec4 b_torsion{5e-4, 5e-4, 5e-4, 5e-4};
  Vec4 theta_j0{0.30, -0.60, 0.30, -0.60};

  double k_guide = 300.0;  // guide spring stiffness
  double b_guide = 1.0;    // guide damper

  double gravity = 9.81;

  void validate() const;
};

/// Strip-theory aerodynamics constants.
struct AeroParams {
  double rho = 1.225;      // air density
  double chord = 0.20;     // wing chord
  double span_h = 0.1077;  // humerus strip span
  double span_r = 0.140;   // radius strip span
  double ac_chord_offset = -0.05;  // aerodynamic center x-offset (quarter chord aft)
  Vec3 v_inf = Vec3::Zero();       // true wind speed, inertial frame
  int n_span = 20;   // spanwise segments per wing panel
  int n_chord = 10;  // chordwise segments per radius panel
  bool enabled = true;

  void validate() const;
};

/// Controller gains, references and FDC command bounds.
struct ControlParams {
  double k_d1 = 50.0;                  // crank rate gain
  Vec4 k_p2{9e4, 9e4, 9e4, 9e4};       // FDC proportional gains (diagonal)
  Vec4 k_d2{540.0, 540.0, 540.0, 540.0};  // FDC derivative gains (diagonal)
  Vec4 k_c = Vec4::Zero();             // pitch outer-loop gain vector
  double omega_ref = 2.0 * M_PI * 10.0;  // flapping rate reference
  double theta_y_ref = 33.0 * M_PI / 180.0;  // pitch reference
  Vec4 l_ref_zp{0.010, 0.010, 0.010, 0.010}; // zero-path FDC reference

  // Optional explicit FDC bounds; when unset (negative) the defaults
  // 0.8 and 1.2 times the nominal lengths apply.
  Vec4 l_min_override = Vec4::Constant(-1.0);
  Vec4 l_max_override = Vec4::Constant(-1.0);

  void validate() const;
};

/// Integration settings.
struct SimParams {
  double dt = 2e-4;
  double t_end = 1.0;
  double projection_tol = 1e-11;
  int max_newton_iters = 50;
  int decimation = 1;           // record every n-th step
  bool reorthonormalize = true; // polar-project R_B each step
  bool conventional_momentum_sign = false;  // flip the orbital term of Pi

  void validate() const;
};

/// Cost weights and optimizer settings for the gait and gain searches.
struct OptimParams {
  double w1 = 1.0;   // angular momentum weight
  double w2 = 1.0;   // body velocity weight
  double w3 = 10.0;  // pitch error weight
  double horizon = 1.0;           // cost simulation length
  int max_evals = 400;
  double simplex_tol = 1e-7;
  double pitch_bound = M_PI / 3.0;   // |theta_y| bound in the gait search
  double kc_bound = 1.0;             // per-component |K_c| bound
  std::uint64_t seed = 0;

  void validate() const;
};

struct RobotParams {
  LinkageGeometry linkage;
  MassedParams massed;
  AeroParams aero;
  ControlParams control;
  SimParams sim;
  OptimParams optim;

  void validate() const;
};

/// FDC command bounds: the configured override when present, otherwise
/// (0.8, 1.2) times the nominal lengths.
std::pair<Vec4, Vec4> fdc_bounds(const RobotParams& params);

/// Parses the sectioned key-value config grammar. Missing keys keep their
/// shipped defaults. Validates the result and checks that the linkage
/// assembles at theta1 = 0.
RobotParams load_config(const std::string& document);
RobotParams load_config_file(const std::string& path);

/// Serializes every parameter; load_config(save_config(p)) == p.
std::string save_config(const RobotParams& params);

/// Applies one "section.key=value" override to a parameter set.
void apply_override(RobotParams& params, const std::string& dotted_key,
                    const std::string& value);

/// FNV-1a hash of the canonical serialized config, for run manifests.
std::uint64_t config_hash(const RobotParams& params);

}  // namespace aerobat
