#include "aerobat/linkage.hpp"

#include <cmath>
#include <sstream>

namespace aerobat {

namespace {

inline Eigen::Matrix2d rot2(double th) {
  const double c = std::cos(th), s = std::sin(th);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

inline Eigen::Matrix2d drot2(double th) {
  const double c = std::cos(th), s = std::sin(th);
  Eigen::Matrix2d r;
  r << -s, -c, c, -s;
  return r;
}

inline Vec2 dir(double th) { return {std::cos(th), std::sin(th)}; }
inline Vec2 ddir(double th) { return {-std::sin(th), std::cos(th)}; }

}  // namespace

LinkagePose forward_kinematics(const LinkageState& state,
                               const LinkageGeometry& geom) {
  const Vec12& q = state.q;
  const Vec12& qd = state.qd;
  const double th1 = q[q1i::th1], th2 = q[q1i::th2], th4 = q[q1i::th4],
               th9 = q[q1i::th9], th10 = q[q1i::th10], th12 = q[q1i::th12],
               th13 = q[q1i::th13], th14 = q[q1i::th14];
  const double l3b = q[q1i::l3b], l3c = q[q1i::l3c], l8b = q[q1i::l8b],
               l10b = q[q1i::l10b];

  LinkagePose pose;
  pose.p1 = geom.p1;
  pose.p4 = geom.p4;
  pose.p9 = geom.p9;
  pose.p12 = geom.p12;
  pose.p14 = geom.p14;

  pose.p2 = geom.p1 + geom.l1 * dir(th1);
  pose.p3A = pose.p2 + geom.l2 * dir(th2);
  pose.p3B = geom.p4 - (geom.l3a + l3b) * dir(th4);
  pose.p5 = geom.p4 + (l3c + geom.l5a) * dir(th4);

  pose.p10 = geom.p9 + geom.l7 * dir(th9);
  pose.p11A = pose.p10 + (geom.l8a + l8b) * dir(th10);
  pose.p11B = geom.p12 + geom.l9 * dir(th12);

  pose.p13 = pose.p11B + geom.l10a * dir(th13);
  pose.p15A = pose.p13 + l10b * dir(th13);
  pose.p15B = geom.p14 - geom.l12a * dir(th14);
  pose.p16 = geom.p14 + geom.l12b * dir(th14);

  pose.v5 = (l3c + geom.l5a) * qd[q1i::th4] * ddir(th4) +
            qd[q1i::l3c] * dir(th4);
  pose.v16 = geom.l12b * qd[q1i::th14] * ddir(th14);

  pose.shoulder_angle = th4;
  pose.elbow_angle = th14;
  return pose;
}

Vec7 constraint_residual(const Vec12& q, const LinkageGeometry& geom) {
  const double th1 = q[0], th2 = q[1], th4 = q[2], th9 = q[3], th10 = q[4],
               th12 = q[5], th13 = q[6], th14 = q[7];
  const double l3b = q[8], l8b = q[10], l10b = q[11];

  Vec7 c;
  // joint 3 loop
  c.segment<2>(0) = geom.p1 + geom.l1 * dir(th1) + geom.l2 * dir(th2) -
                    (geom.p4 - (geom.l3a + l3b) * dir(th4));
  // joint 11 loop
  c.segment<2>(2) = geom.p9 + geom.l7 * dir(th9) +
                    (geom.l8a + l8b) * dir(th10) -
                    (geom.p12 + geom.l9 * dir(th12));
  // joint 15 loop
  c.segment<2>(4) = geom.p12 + geom.l9 * dir(th12) +
                    (geom.l10a + l10b) * dir(th13) -
                    (geom.p14 - geom.l12a * dir(th14));
  // crank phase
  c[6] = th1 - th9 - geom.delta_phi;
  return c;
}

Mat7x12 constraint_jacobian(const Vec12& q, const LinkageGeometry& geom) {
  const double th1 = q[0], th2 = q[1], th4 = q[2], th9 = q[3], th10 = q[4],
               th12 = q[5], th13 = q[6], th14 = q[7];
  const double l3b = q[8], l8b = q[10], l10b = q[11];

  Mat7x12 m = Mat7x12::Zero();
  m.block<2, 1>(0, q1i::th1) = geom.l1 * ddir(th1);
  m.block<2, 1>(0, q1i::th2) = geom.l2 * ddir(th2);
  m.block<2, 1>(0, q1i::th4) = (geom.l3a + l3b) * ddir(th4);
  m.block<2, 1>(0, q1i::l3b) = dir(th4);

  m.block<2, 1>(2, q1i::th9) = geom.l7 * ddir(th9);
  m.block<2, 1>(2, q1i::th10) = (geom.l8a + l8b) * ddir(th10);
  m.block<2, 1>(2, q1i::th12) = -geom.l9 * ddir(th12);
  m.block<2, 1>(2, q1i::l8b) = dir(th10);

  m.block<2, 1>(4, q1i::th12) = geom.l9 * ddir(th12);
  m.block<2, 1>(4, q1i::th13) = (geom.l10a + l10b) * ddir(th13);
  m.block<2, 1>(4, q1i::th14) = geom.l12a * ddir(th14);
  m.block<2, 1>(4, q1i::l10b) = dir(th13);

  m(6, q1i::th1) = 1.0;
  m(6, q1i::th9) = -1.0;
  return m;
}

Vec7 constraint_bias(const Vec12& q, const Vec12& qd,
                     const LinkageGeometry& geom) {
  const double th1 = q[0], th2 = q[1], th4 = q[2], th9 = q[3], th10 = q[4],
               th12 = q[5], th13 = q[6], th14 = q[7];
  const double l3b = q[8], l8b = q[10], l10b = q[11];
  const double w1 = qd[0], w2 = qd[1], w4 = qd[2], w9 = qd[3], w10 = qd[4],
               w12 = qd[5], w13 = qd[6], w14 = qd[7];
  const double v3b = qd[8], v8b = qd[10], v10b = qd[11];

  // d^2/dt^2 [l(t) dir(th(t))] = (ldd dir + 2 ld thd ddir + l thdd ddir
  //                               - l thd^2 dir); bias keeps the
  // acceleration-free terms only.
  auto term = [](double l, double th, double thd, double ld) -> Vec2 {
    return -l * thd * thd * dir(th) + 2.0 * ld * thd * ddir(th);
  };

  Vec7 h;
  h.segment<2>(0) = term(geom.l1, th1, w1, 0.0) + term(geom.l2, th2, w2, 0.0) +
                    term(geom.l3a + l3b, th4, w4, v3b);
  h.segment<2>(2) = term(geom.l7, th9, w9, 0.0) +
                    term(geom.l8a + l8b, th10, w10, v8b) -
                    term(geom.l9, th12, w12, 0.0);
  h.segment<2>(4) = term(geom.l9, th12, w12, 0.0) +
                    term(geom.l10a + l10b, th13, w13, v10b) +
                    term(geom.l12a, th14, w14, 0.0);
  h[6] = 0.0;
  return h;
}

Vec12 assemble(const LinkageGeometry& geom, double theta1, const Vec4& fdc,
               const Vec12& guess, double tol, int max_iters) {
  Vec12 q = guess;
  q[q1i::th1] = theta1;
  q[q1i::th9] = theta1 - geom.delta_phi;
  q.segment<4>(8) = fdc;

  for (int it = 0; it < max_iters; ++it) {
    const Vec7 c = constraint_residual(q, geom);
    if (c.lpNorm<Eigen::Infinity>() <= tol) return q;
    const Mat7x12 m = constraint_jacobian(q, geom);
    Eigen::Matrix<double, 7, 7> mf;
    for (int j = 0; j < 7; ++j) mf.col(j) = m.col(q1i::free_coords[j]);
    Eigen::FullPivLU<Eigen::Matrix<double, 7, 7>> lu(mf);
    if (!lu.isInvertible()) {
      throw SingularityError("assemble: singular constraint Jacobian");
    }
    const Vec7 dq = lu.solve(c);
    for (int j = 0; j < 7; ++j) q[q1i::free_coords[j]] -= dq[j];
  }
  throw AssemblyError("assemble: Newton did not converge (unassemblable "
                      "geometry at this crank angle)");
}

Vec12 default_assembly_guess() {
  Vec12 q;
  q << 0.0, 1.298701274776, -1.066770607248, 0.0, -1.298701274776,
      -2.074822046341, -0.246276413386, 1.338196068307, 0.010, 0.010, 0.010,
      0.010;
  return q;
}

Vec12 massless_accel(const LinkageState& state, const LinkageInput& u1,
                     const LinkageGeometry& geom) {
  Mat12 m1 = Mat12::Zero();
  m1.topRows<7>() = constraint_jacobian(state.q, geom);
  m1(7, q1i::th1) = 1.0;
  m1.block<4, 4>(8, 8).setIdentity();

  Vec12 rhs;
  rhs.head<7>() = -constraint_bias(state.q, state.qd, geom);
  rhs.tail<5>() = u1;

  Eigen::FullPivLU<Mat12> lu(m1);
  if (!lu.isInvertible()) {
    throw SingularityError("massless_accel: kinematic singularity");
  }
  return lu.solve(rhs);
}

void project(LinkageState& state, const LinkageGeometry& geom, double tol,
             int max_iters) {
  // Position projection: Newton over the free coordinates.
  bool converged = false;
  for (int it = 0; it < max_iters; ++it) {
    const Vec7 c = constraint_residual(state.q, geom);
    if (c.lpNorm<Eigen::Infinity>() <= tol) {
      converged = true;
      break;
    }
    const Mat7x12 m = constraint_jacobian(state.q, geom);
    Eigen::Matrix<double, 7, 7> mf;
    for (int j = 0; j < 7; ++j) mf.col(j) = m.col(q1i::free_coords[j]);
    const Vec7 dq = mf.fullPivLu().solve(c);
    for (int j = 0; j < 7; ++j) state.q[q1i::free_coords[j]] -= dq[j];
  }
  if (!converged) {
    throw AssemblyError("project: drift exceeds the projection basin");
  }

  // Velocity projection: M_A qd = 0 with driven rates held.
  const Mat7x12 m = constraint_jacobian(state.q, geom);
  Eigen::Matrix<double, 7, 7> mf;
  for (int j = 0; j < 7; ++j) mf.col(j) = m.col(q1i::free_coords[j]);
  Vec7 rhs = Vec7::Zero();
  rhs -= m.col(q1i::th1) * state.qd[q1i::th1];
  for (int k = 8; k < 12; ++k) rhs -= m.col(k) * state.qd[k];
  const Vec7 qdf = mf.fullPivLu().solve(rhs);
  for (int j = 0; j < 7; ++j) state.qd[q1i::free_coords[j]] = qdf[j];
}

std::vector<SweepPath> sensitivity_sweep(const LinkageGeometry& geom,
                                         const std::vector<Vec4>& fdc_grid,
                                         int n_crank_samples) {
  std::vector<SweepPath> out;
  out.reserve(fdc_grid.size());
  for (const Vec4& fdc : fdc_grid) {
    SweepPath path;
    path.fdc = fdc;
    path.assembled = true;
    Vec12 guess = default_assembly_guess();
    for (int k = 0; k < n_crank_samples; ++k) {
      const double th1 = 2.0 * M_PI * k / n_crank_samples;
      try {
        guess = assemble(geom, th1, fdc, guess);
      } catch (const std::runtime_error&) {
        path.assembled = false;
        continue;
      }
      LinkageState s;
      s.q = guess;
      const LinkagePose pose = forward_kinematics(s, geom);
      path.theta1.push_back(th1);
      path.p5.push_back(pose.p5);
      path.p16.push_back(pose.p16);
      path.shoulder_angle.push_back(pose.shoulder_angle);
      path.elbow_angle.push_back(pose.elbow_angle);
    }
    out.push_back(std::move(path));
  }
  return out;
}

std::string sweep_to_csv(const std::vector<SweepPath>& paths) {
  std::ostringstream os;
  os.precision(17);
  os << "fdc1,fdc2,fdc3,fdc4,theta1,p5_y,p5_z,p16_y,p16_z\n";
  for (const SweepPath& path : paths) {
    for (std::size_t k = 0; k < path.theta1.size(); ++k) {
      os << path.fdc[0] << ',' << path.fdc[1] << ',' << path.fdc[2] << ','
         << path.fdc[3] << ',' << path.theta1[k] << ',' << path.p5[k].x()
         << ',' << path.p5[k].y() << ',' << path.p16[k].x() << ','
         << path.p16[k].y() << '\n';
    }
  }
  return os.str();
}

}  // namespace aerobat
