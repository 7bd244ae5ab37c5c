#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <vector>

#include "aerobat/config.hpp"

namespace aerobat {

using Vec7 = Eigen::Matrix<double, 7, 1>;
using Vec12 = Eigen::Matrix<double, 12, 1>;
using Mat7x12 = Eigen::Matrix<double, 7, 12>;
using Mat12 = Eigen::Matrix<double, 12, 12>;

// q1 component indices.
namespace q1i {
inline constexpr int th1 = 0, th2 = 1, th4 = 2, th9 = 3, th10 = 4, th12 = 5,
                     th13 = 6, th14 = 7, l3b = 8, l3c = 9, l8b = 10, l10b = 11;
// The seven coordinates solved by assembly / projection; theta1 and the
// FDC lengths are driven.
inline constexpr std::array<int, 7> free_coords = {1, 2, 3, 4, 5, 6, 7};
}  // namespace q1i

/// Massless subsystem coordinates
/// q1 = [th1, th2, th4, th9, th10, th12, th13, th14, l3b, l3c, l8b, l10b].
struct LinkageState {
  Vec12 q = Vec12::Zero();
  Vec12 qd = Vec12::Zero();

  Vec4 fdc() const { return q.segment<4>(8); }
  Vec4 fdc_rate() const { return qd.segment<4>(8); }
};

/// Crank and FDC accelerations u1 = [u_g, u_3b, u_3c, u_8b, u_10b].
using LinkageInput = Eigen::Matrix<double, 5, 1>;

/// Body-frame planar joint positions and the end-effector velocities.
/// Dual-path joints report both chain evaluations.
struct LinkagePose {
  Vec2 p1, p2, p3A, p3B, p4, p5, p9, p10, p11A, p11B, p12, p13, p14, p15A,
      p15B, p16;
  Vec2 v5, v16;              // end-effector velocities
  double shoulder_angle = 0; // theta4, shoulder guide drive angle
  double elbow_angle = 0;    // theta14, elbow guide drive angle
};

struct AssemblyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SingularityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

LinkagePose forward_kinematics(const LinkageState& state,
                               const LinkageGeometry& geom);

/// C(q1): three 2D loop closures (joints 3, 11, 15) and the crank phase
/// constraint theta1 - theta9 - delta_phi.
Vec7 constraint_residual(const Vec12& q, const LinkageGeometry& geom);

/// Analytic M_A = dC/dq1 and bias h_A with Cdd = M_A qdd + h_A.
Mat7x12 constraint_jacobian(const Vec12& q, const LinkageGeometry& geom);
Vec7 constraint_bias(const Vec12& q, const Vec12& qd,
                     const LinkageGeometry& geom);

/// Newton solve of C = 0 over the seven free coordinates with theta1 and
/// the FDC lengths held at their targets. Returns the assembly branch
/// nearest the guess.
Vec12 assemble(const LinkageGeometry& geom, double theta1, const Vec4& fdc,
               const Vec12& guess, double tol = 1e-12, int max_iters = 50);

/// Reference assembled configuration of the default geometry at
/// theta1 = 0 with nominal FDC lengths (the shipped assembly branch).
Vec12 default_assembly_guess();

/// q1dd from M1 qdd + h1 = B1 u1.
Vec12 massless_accel(const LinkageState& state, const LinkageInput& u1,
                     const LinkageGeometry& geom);

/// Post-step drift control: Newton position projection of the free
/// coordinates followed by a velocity projection consistent with the
/// driven rates. Driven coordinates are never altered.
void project(LinkageState& state, const LinkageGeometry& geom,
             double tol = 1e-12, int max_iters = 30);

/// One traced end-effector path family entry of a sensitivity sweep.
struct SweepPath {
  Vec4 fdc;
  bool assembled = false;               // false when any sample failed
  std::vector<double> theta1;
  std::vector<Vec2> p5, p16;
  std::vector<double> shoulder_angle, elbow_angle;
};

/// Traces p5 and p16 over a full crank revolution for every FDC vector,
/// by continuation from the default assembly branch. Per-point assembly
/// failures are recorded and the sweep continues.
std::vector<SweepPath> sensitivity_sweep(const LinkageGeometry& geom,
                                         const std::vector<Vec4>& fdc_grid,
                                         int n_crank_samples);

/// CSV export (columns fdc1..fdc4, theta1, p5_y, p5_z, p16_y, p16_z).
std::string sweep_to_csv(const std::vector<SweepPath>& paths);

}  // namespace aerobat
