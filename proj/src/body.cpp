#include "aerobat/body.hpp"

#include <cmath>

namespace aerobat {

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

namespace {

const Vec3 kAxisX(1, 0, 0);
const Mat3 kMirrorY = Vec3(1, -1, 1).asDiagonal();

// R_x(a) v and its first/second derivatives in a.
Vec3 rx(double a, const Vec3& v) {
  const double c = std::cos(a), s = std::sin(a);
  return {v.x(), c * v.y() - s * v.z(), s * v.y() + c * v.z()};
}
Vec3 rx1(double a, const Vec3& v) {
  const double c = std::cos(a), s = std::sin(a);
  return {0.0, -s * v.y() - c * v.z(), c * v.y() - s * v.z()};
}
Vec3 rx2(double a, const Vec3& v) {
  const double c = std::cos(a), s = std::sin(a);
  return {0.0, -(c * v.y() - s * v.z()), -(s * v.y() + c * v.z())};
}

Vec3 l_h_vec(const MassedParams& mp) {
  return {0.0, mp.l_h * std::cos(mp.alpha), mp.l5b + mp.l_h * std::sin(mp.alpha)};
}

}  // namespace

WingPointSpec humerus_com_spec(const MassedParams& mp) {
  return {mp.p7, {{l_h_vec(mp) / 2.0, 1.0, 0.0, -mp.alpha}}};
}
WingPointSpec radius_com_spec(const MassedParams& mp) {
  return {mp.p7,
          {{l_h_vec(mp), 1.0, 0.0, -mp.alpha},
           {Vec3(0.0, mp.l_r / 2.0, 0.0), 1.0, 1.0, mp.alpha}}};
}
WingPointSpec guide6_spec(const MassedParams& mp) {
  return {mp.p7, {{mp.r6, 1.0, 0.0, -mp.alpha}}};
}
WingPointSpec guide17_spec(const MassedParams& mp) {
  return {mp.p7,
          {{l_h_vec(mp), 1.0, 0.0, -mp.alpha},
           {mp.r17, 1.0, 1.0, mp.alpha}}};
}

PointKinematics point_kinematics(const WingPointSpec& spec, Side side,
                                 const BodyState& state) {
  const int col_s = side == Side::Left ? q2i::sL : q2i::sR;
  const int col_e = side == Side::Left ? q2i::eL : q2i::eR;
  const double th_s = state.joints[col_s];
  const double th_e = state.joints[col_e];
  const double thd_s = state.u[col_s];
  const double thd_e = state.u[col_e];

  // Left-convention evaluation, then mirror for the right wing.
  Vec3 p_b = spec.base;
  Vec3 d_s = Vec3::Zero(), d_e = Vec3::Zero();
  Vec3 v_rel = Vec3::Zero();
  Vec3 dd_ss = Vec3::Zero(), dd_se = Vec3::Zero(), dd_ee = Vec3::Zero();
  for (const auto& t : spec.terms) {
    const double a = t.ks * th_s + t.ke * th_e + t.k0;
    p_b += rx(a, t.v);
    const Vec3 r1 = rx1(a, t.v);
    const Vec3 r2 = rx2(a, t.v);
    d_s += t.ks * r1;
    d_e += t.ke * r1;
    const double ad = t.ks * thd_s + t.ke * thd_e;
    v_rel += ad * r1;
    dd_ss += t.ks * t.ks * r2;
    dd_se += t.ks * t.ke * r2;
    dd_ee += t.ke * t.ke * r2;
  }
  // d/dt of the partials and the velocity-product part of pdd, both at
  // frozen generalized velocity.
  Vec3 dt_d_s = thd_s * dd_ss + thd_e * dd_se;
  Vec3 dt_d_e = thd_s * dd_se + thd_e * dd_ee;
  Vec3 pdd_vp = thd_s * thd_s * dd_ss + 2.0 * thd_s * thd_e * dd_se +
                thd_e * thd_e * dd_ee;

  if (side == Side::Right) {
    p_b = kMirrorY * p_b;
    d_s = kMirrorY * d_s;
    d_e = kMirrorY * d_e;
    v_rel = kMirrorY * v_rel;
    dt_d_s = kMirrorY * dt_d_s;
    dt_d_e = kMirrorY * dt_d_e;
    pdd_vp = kMirrorY * pdd_vp;
  }

  const Mat3& r = state.r_b;
  const Vec3 w = state.omega_b();

  PointKinematics out;
  out.p_body = p_b;
  out.v_rel = v_rel;
  out.p = state.x_b + r * p_b;
  out.v = state.xdot_b() + r * (w.cross(p_b) + v_rel);

  out.jac.setZero();
  out.jac.col(col_s) = r * d_s;
  out.jac.col(col_e) = r * d_e;
  out.jac.block<3, 3>(0, q2i::x).setIdentity();
  out.jac.block<3, 3>(0, q2i::w) = -r * skew(p_b);

  out.jac_dot.setZero();
  out.jac_dot.col(col_s) = r * (w.cross(d_s) + dt_d_s);
  out.jac_dot.col(col_e) = r * (w.cross(d_e) + dt_d_e);
  out.jac_dot.block<3, 3>(0, q2i::w) =
      -r * (skew(w) * skew(p_b) + skew(v_rel));

  out.acc_vp = r * (w.cross(w.cross(p_b)) + 2.0 * w.cross(v_rel) + pdd_vp);
  return out;
}

ComKinematics com_kinematics(BodyId id, const BodyState& state,
                             const MassedParams& mp) {
  ComKinematics out;
  out.jac_omega.setZero();
  out.jac_omega.block<3, 3>(0, q2i::w).setIdentity();
  switch (id) {
    case BodyId::Body: {
      PointKinematics& pt = out.pt;
      pt.p_body.setZero();
      pt.v_rel.setZero();
      pt.p = state.x_b;
      pt.v = state.xdot_b();
      pt.jac.setZero();
      pt.jac.block<3, 3>(0, q2i::x).setIdentity();
      pt.jac_dot.setZero();
      pt.acc_vp.setZero();
      break;
    }
    case BodyId::HumerusL:
      out.pt = point_kinematics(humerus_com_spec(mp), Side::Left, state);
      out.jac_omega.col(q2i::sL) = kAxisX;
      break;
    case BodyId::HumerusR:
      out.pt = point_kinematics(humerus_com_spec(mp), Side::Right, state);
      out.jac_omega.col(q2i::sR) = -kAxisX;
      break;
    case BodyId::RadiusL:
      out.pt = point_kinematics(radius_com_spec(mp), Side::Left, state);
      out.jac_omega.col(q2i::sL) = kAxisX;
      out.jac_omega.col(q2i::eL) = kAxisX;
      break;
    case BodyId::RadiusR:
      out.pt = point_kinematics(radius_com_spec(mp), Side::Right, state);
      out.jac_omega.col(q2i::sR) = -kAxisX;
      out.jac_omega.col(q2i::eR) = -kAxisX;
      break;
  }
  out.omega = out.jac_omega * state.u;
  return out;
}

namespace {

double mass_of(BodyId id, const MassedParams& mp) {
  switch (id) {
    case BodyId::Body: return mp.m_body;
    case BodyId::HumerusL:
    case BodyId::HumerusR: return mp.m_humerus;
    default: return mp.m_radius;
  }
}

const Mat3& inertia_of(BodyId id, const MassedParams& mp) {
  switch (id) {
    case BodyId::Body: return mp.I_body;
    case BodyId::HumerusL:
    case BodyId::HumerusR: return mp.I_humerus;
    default: return mp.I_radius;
  }
}

}  // namespace

Mat10 mass_matrix(const BodyState& state, const MassedParams& mp) {
  Mat10 m = Mat10::Zero();
  for (BodyId id : all_bodies) {
    const ComKinematics ck = com_kinematics(id, state, mp);
    const double mass = mass_of(id, mp);
    const Mat3& inertia = inertia_of(id, mp);
    m.noalias() += mass * ck.pt.jac.transpose() * ck.pt.jac;
    m.noalias() += ck.jac_omega.transpose() * inertia * ck.jac_omega;
  }
  return m;
}

Vec10 bias_forces(const BodyState& state, const MassedParams& mp) {
  const Mat3& r = state.r_b;
  const Vec3 w_b = state.omega_b();
  const Vec3 e3(0, 0, 1);
  const Vec3 rt_e3 = r.transpose() * e3;
  const Vec3 rt_xd = r.transpose() * state.xdot_b();

  Vec10 h = Vec10::Zero();
  Vec3 p_omega = Vec3::Zero();  // dL/d omega_B
  Vec3 m_rot = Vec3::Zero();    // sum_j r_Bj x dL/dr_Bj, body frame

  for (BodyId id : all_bodies) {
    const ComKinematics ck = com_kinematics(id, state, mp);
    const double mass = mass_of(id, mp);
    const Mat3& inertia = inertia_of(id, mp);

    // d/dt(M2 u): translational part (the angular Jacobian is constant).
    h.noalias() += mass * (ck.pt.jac_dot.transpose() * ck.pt.v +
                           ck.pt.jac.transpose() * ck.pt.acc_vp);
    // -dT/d theta_j: dv/d theta_j at fixed u equals the jac_dot column.
    for (int k = 0; k < 4; ++k) {
      h[k] -= mass * ck.pt.v.dot(ck.pt.jac_dot.col(k));
    }
    // Gravity.
    const double mg = mass * mp.gravity;
    for (int k = 0; k < 4; ++k) h[k] += mg * e3.dot(ck.pt.jac.col(k));
    h.segment<3>(q2i::x) += mg * e3;
    m_rot += mg * ck.pt.p_body.cross(rt_e3);

    // Momentum conjugate to omega_B and the rotation-dependence of T.
    const Vec3 w_rel = w_b.cross(ck.pt.p_body) + ck.pt.v_rel;
    p_omega += mass * ck.pt.p_body.cross(r.transpose() * ck.pt.v);
    p_omega += (ck.jac_omega.block<3, 3>(0, q2i::w)).transpose() *
               (inertia * ck.omega);
    m_rot += mass * rt_xd.cross(w_rel);
  }
  h.segment<3>(q2i::w) += w_b.cross(p_omega) + m_rot;
  return h;
}

MassedAccel massed_accel(const BodyState& state,
                         const GeneralizedForce& total_force,
                         const MassedParams& mp) {
  const Mat10 m2 = mass_matrix(state, mp);
  Eigen::LDLT<Mat10> ldlt(m2);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw std::runtime_error("massed_accel: mass matrix not positive definite");
  }
  MassedAccel out;
  out.udot = ldlt.solve(total_force - bias_forces(state, mp));
  out.r_dot = state.r_b * skew(state.omega_b());
  return out;
}

std::pair<double, double> energies(const BodyState& state,
                                   const MassedParams& mp) {
  double t = 0.0, u = 0.0;
  for (BodyId id : all_bodies) {
    const ComKinematics ck = com_kinematics(id, state, mp);
    const double mass = mass_of(id, mp);
    t += 0.5 * mass * ck.pt.v.squaredNorm();
    t += 0.5 * ck.omega.dot(inertia_of(id, mp) * ck.omega);
    u += mass * mp.gravity * ck.pt.p.z();
  }
  return {t, u};
}

Vec3 linear_momentum(const BodyState& state, const MassedParams& mp) {
  Vec3 p = Vec3::Zero();
  for (BodyId id : all_bodies) {
    p += mass_of(id, mp) * com_kinematics(id, state, mp).pt.v;
  }
  return p;
}

double pitch_angle(const Mat3& r_b) {
  return std::asin(std::clamp(r_b(2, 0), -1.0, 1.0));
}

Mat3 rotation_from_pitch(double theta_y) {
  return Eigen::AngleAxisd(-theta_y, Vec3::UnitY()).toRotationMatrix();
}

Mat3 orthonormalize(const Mat3& r) {
  Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 out = svd.matrixU() * svd.matrixV().transpose();
  if (out.determinant() < 0.0) {
    Mat3 d = Vec3(1, 1, -1).asDiagonal();
    out = svd.matrixU() * d * svd.matrixV().transpose();
  }
  return out;
}

}  // namespace aerobat
