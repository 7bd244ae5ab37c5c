#include "aerobat/aero.hpp"

#include <cmath>
#include <sstream>

namespace aerobat {

namespace {
constexpr double kDeg = M_PI / 180.0;
}

std::pair<double, double> lift_drag_coeffs(double beta_deg) {
  const double cl = 0.225 + 1.58 * std::sin((2.13 * beta_deg - 7.2) * kDeg);
  const double cd = 1.92 - 1.55 * std::cos((2.04 * beta_deg - 9.82) * kDeg);
  return {cl, cd};
}

std::pair<double, double> angle_of_attack(const Vec3& v_w, const Mat3& r_b,
                                          const Vec3& e_l, const Vec3& e_d) {
  const double w_l = v_w.dot(r_b * e_l);
  const double w_d = v_w.dot(r_b * e_d);
  if (std::abs(w_l) < 1e-12 && std::abs(w_d) < 1e-12) return {0.0, 0.0};
  return {-std::atan2(w_l, w_d) / kDeg, w_l * w_l + w_d * w_d};
}

const char* wing_panel_name(WingPanel p) {
  switch (p) {
    case WingPanel::HumerusL: return "humerus_l";
    case WingPanel::HumerusR: return "humerus_r";
    case WingPanel::RadiusL: return "radius_l";
    default: return "radius_r";
  }
}

namespace {

const Mat3 kMirrorY = Vec3(1, -1, 1).asDiagonal();

struct Strip {
  WingPointSpec spec;   // application point, left convention
  Vec3 e_span, e_l, e_d;  // left-convention body axes at evaluation time
};

Vec3 l_h_vec(const MassedParams& mp) {
  return {0.0, mp.l_h * std::cos(mp.alpha), mp.l5b + mp.l_h * std::sin(mp.alpha)};
}

Vec3 rx(double a, const Vec3& v) {
  const double c = std::cos(a), s = std::sin(a);
  return {v.x(), c * v.y() - s * v.z(), s * v.y() + c * v.z()};
}

struct Accum {
  const BodyState& state;
  const AeroParams& ap;
  AeroForceResult& out;
  bool record;

  void add(const Strip& strip, Side side, WingPanel panel, bool chordwise,
           double coord, double ds) {
    PointKinematics pt = point_kinematics(strip.spec, side, state);
    Vec3 e_l = strip.e_l, e_d = strip.e_d;
    if (side == Side::Right) {
      e_l = kMirrorY * e_l;
      e_d = kMirrorY * e_d;
    }
    const Vec3 v_w = pt.v - ap.v_inf;
    const auto [beta, vr2] = angle_of_attack(v_w, state.r_b, e_l, e_d);
    if (vr2 <= 0.0) {
      if (record) {
        out.segments.push_back(
            {panel, chordwise, coord, 0.0, 0.0, 0.0, 0.0, pt.p});
      }
      return;
    }
    const double v_r = std::sqrt(vr2);
    const double w_l = v_w.dot(state.r_b * e_l);
    const double w_d = v_w.dot(state.r_b * e_d);
    const Vec3 lift_dir = (-w_l * e_d + w_d * e_l) / v_r;
    const Vec3 drag_dir = -(w_d * e_d + w_l * e_l) / v_r;
    const auto [cl, cd] = lift_drag_coeffs(beta);
    const double q = 0.5 * ap.rho * vr2 * ds;
    const Vec3 df_body = q * (cl * lift_dir + cd * drag_dir);
    const Vec3 df = state.r_b * df_body;
    out.u.noalias() += pt.jac.transpose() * df;
    out.lift += df.z();
    out.thrust += df.x();
    if (record) {
      out.segments.push_back(
          {panel, chordwise, coord, beta, v_r, q * cl, q * cd, pt.p});
    }
  }
};

}  // namespace

AeroForceResult generalized_aero_force(const BodyState& state,
                                       const AeroParams& ap,
                                       const MassedParams& mp,
                                       bool record_segments) {
  AeroForceResult out;
  if (!ap.enabled) return out;
  Accum acc{state, ap, out, record_segments};

  const Vec3 lh = l_h_vec(mp);
  const Vec3 lh_hat = lh.normalized();
  const Vec3 ac_off(ap.ac_chord_offset, 0.0, 0.0);
  const Vec3 e_x = Vec3::UnitX();

  for (Side side : {Side::Left, Side::Right}) {
    const bool left = side == Side::Left;
    const int col_s = left ? q2i::sL : q2i::sR;
    const int col_e = left ? q2i::eL : q2i::eR;
    const double th_s = state.joints[col_s];
    const double th_e = state.joints[col_e];

    // Strip axes, left convention; mirrored inside add() for the right wing.
    const Vec3 span_h = rx(th_s, lh_hat);
    const Vec3 span_r = rx(th_s + th_e, Vec3::UnitY());
    const Vec3 norm_h = e_x.cross(span_h).normalized();
    const Vec3 norm_r = e_x.cross(span_r).normalized();

    // Spanwise strips, humerus panel.
    const double ds_h = ap.chord * ap.span_h / ap.n_span;
    for (int i = 0; i < ap.n_span; ++i) {
      const double r = (i + 0.5) / ap.n_span;
      Strip s;
      s.spec = {mp.p7 + ac_off, {{r * lh, 1.0, 0.0, 0.0}}};
      s.e_span = span_h;
      s.e_d = e_x;
      s.e_l = e_x.cross(span_h).normalized();
      acc.add(s, side, left ? WingPanel::HumerusL : WingPanel::HumerusR,
              false, r, ds_h);
    }
    // Spanwise strips, radius panel.
    const double ds_r = ap.chord * ap.span_r / ap.n_span;
    for (int i = 0; i < ap.n_span; ++i) {
      const double r = (i + 0.5) / ap.n_span;
      Strip s;
      s.spec = {mp.p7 + ac_off,
                {{lh, 1.0, 0.0, 0.0},
                 {Vec3(0.0, r * mp.l_r, 0.0), 1.0, 1.0, 0.0}}};
      s.e_span = span_r;
      s.e_d = e_x;
      s.e_l = norm_r;
      acc.add(s, side, left ? WingPanel::RadiusL : WingPanel::RadiusR,
              false, r, ds_r);
    }
    // Chordwise strips, radius panel only: the wingtip is a leading edge,
    // applied a quarter span inboard of the tip.
    const double ds_c = ap.chord * ap.span_r / ap.n_chord;
    for (int i = 0; i < ap.n_chord; ++i) {
      const double c = (i + 0.5) / ap.n_chord;
      Strip s;
      s.spec = {mp.p7 + Vec3(-c * ap.chord, 0.0, 0.0),
                {{lh, 1.0, 0.0, 0.0},
                 {Vec3(0.0, 0.75 * mp.l_r, 0.0), 1.0, 1.0, 0.0}}};
      s.e_span = e_x;
      s.e_d = span_r;
      s.e_l = norm_r;
      acc.add(s, side, left ? WingPanel::RadiusL : WingPanel::RadiusR,
              true, c, ds_c);
    }
  }
  return out;
}

std::string segments_to_csv(const std::vector<AeroSegmentRecord>& segments) {
  std::ostringstream os;
  os << "panel,chordwise,coord,beta_deg,v_r,df_lift,df_drag,px,py,pz\n";
  os.precision(17);
  for (const auto& s : segments) {
    os << wing_panel_name(s.panel) << ',' << (s.chordwise ? 1 : 0) << ','
       << s.coord << ',' << s.beta_deg << ',' << s.v_r << ',' << s.df_lift
       << ',' << s.df_drag << ',' << s.p.x() << ',' << s.p.y() << ','
       << s.p.z() << '\n';
  }
  return os.str();
}

}  // namespace aerobat
