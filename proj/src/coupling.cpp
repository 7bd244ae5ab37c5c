#include "aerobat/coupling.hpp"

namespace aerobat {

Vec4 torsional_forces(const Vec4& joints, const Vec4& rates,
                      const MassedParams& mp) {
  return -(mp.k_torsion.cwiseProduct(joints - mp.theta_j0) +
           mp.b_torsion.cwiseProduct(rates));
}

Vec3 guide_force(const Vec2& p_link, const Vec2& v_link, const Vec3& p_pt,
                 const Vec3& v_pt, double rest_len, const MassedParams& mp) {
  const Vec2 d = p_link - Vec2(p_pt.y(), p_pt.z());
  const double len = d.norm();
  if (len < 1e-12) {
    throw CoincidentPointsError("guide_force: coincident endpoints");
  }
  const Vec2 e = d / len;
  const double axial = (v_link - Vec2(v_pt.y(), v_pt.z())).dot(e);
  const double mag = mp.k_guide * (len - rest_len) + mp.b_guide * axial;
  const Vec2 f = mag * e;
  return {0.0, f.x(), f.y()};
}

GeneralizedForce map_point_force(const Mat3x10& jac, const Vec3& force) {
  return jac.transpose() * force;
}

namespace {

GeneralizedForce one_guide(const WingPointSpec& spec, Side side,
                           const Vec2& p_link, const Vec2& v_link,
                           double rest_len, const BodyState& state,
                           const MassedParams& mp) {
  const PointKinematics pt = point_kinematics(spec, side, state);
  Vec2 pl = p_link, vl = v_link;
  if (side == Side::Right) {
    pl.x() = -pl.x();
    vl.x() = -vl.x();
  }
  const Vec3 f_body = guide_force(pl, vl, pt.p_body, pt.v_rel, rest_len, mp);
  return map_point_force(pt.jac, state.r_b * f_body);
}

}  // namespace

GeneralizedForce assemble_guide_wrench(const LinkagePose& pose,
                                       const BodyState& state,
                                       const MassedParams& mp) {
  const WingPointSpec g6 = guide6_spec(mp);
  const WingPointSpec g17 = guide17_spec(mp);
  GeneralizedForce u = GeneralizedForce::Zero();
  u += one_guide(g6, Side::Left, pose.p5, pose.v5, mp.l4, state, mp);
  u += one_guide(g17, Side::Left, pose.p16, pose.v16, mp.l11, state, mp);
  u += one_guide(g6, Side::Right, pose.p5, pose.v5, mp.l4, state, mp);
  u += one_guide(g17, Side::Right, pose.p16, pose.v16, mp.l11, state, mp);
  return u;
}

GeneralizedForce coupling_wrench(const LinkagePose& pose,
                                 const BodyState& state,
                                 const MassedParams& mp) {
  GeneralizedForce u = assemble_guide_wrench(pose, state, mp);
  u.head<4>() +=
      torsional_forces(state.joints, state.u.head<4>(), mp);
  return u;
}

}  // namespace aerobat
