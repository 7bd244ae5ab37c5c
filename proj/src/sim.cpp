#include "aerobat/sim.hpp"

#include <json.hpp>

#include <cmath>
#include <sstream>

namespace aerobat {

double crank_controller(double theta1_dot, double omega_ref, double k_d1) {
  return k_d1 * (omega_ref - theta1_dot);
}

Vec4 fdc_controller(const Vec4& l, const Vec4& l_dot, const Vec4& l_ref,
                    const Vec4& k_p2, const Vec4& k_d2) {
  return k_p2.cwiseProduct(l_ref - l) - k_d2.cwiseProduct(l_dot);
}

Vec4 pitch_outer_loop(double theta_y, const ControlParams& ctrl,
                      const Vec4& l_min, const Vec4& l_max) {
  const Vec4 raw =
      ctrl.l_ref_zp + ctrl.k_c * (ctrl.theta_y_ref - theta_y);
  return raw.cwiseMax(l_min).cwiseMin(l_max);
}

Vec3 angular_momentum(const BodyState& state, const MassedParams& mp,
                      bool conventional_sign) {
  double m_total = 0.0;
  Vec3 x_com = Vec3::Zero();
  struct Entry {
    double m;
    Vec3 x, v, l_rot;
  };
  std::array<Entry, 5> entries;
  int k = 0;
  for (BodyId id : all_bodies) {
    const ComKinematics ck = com_kinematics(id, state, mp);
    double m;
    Vec3 iw;
    switch (id) {
      case BodyId::Body:
        m = mp.m_body;
        iw = mp.I_body * ck.omega;
        break;
      case BodyId::HumerusL:
      case BodyId::HumerusR:
        m = mp.m_humerus;
        iw = mp.I_humerus * ck.omega;
        break;
      default:
        m = mp.m_radius;
        iw = mp.I_radius * ck.omega;
    }
    entries[k++] = {m, ck.pt.p, ck.pt.v, state.r_b * iw};
    m_total += m;
    x_com += m * ck.pt.p;
  }
  x_com /= m_total;
  const double orbital_sign = conventional_sign ? 1.0 : -1.0;
  Vec3 pi = Vec3::Zero();
  for (const Entry& e : entries) {
    pi += e.l_rot + orbital_sign * e.m * (e.x - x_com).cross(e.v);
  }
  return pi;
}

namespace {

using StateVec = Eigen::Matrix<double, 50, 1>;

StateVec pack(const SystemState& s) {
  StateVec y;
  y.segment<12>(0) = s.link.q;
  y.segment<12>(12) = s.link.qd;
  y.segment<4>(24) = s.body.joints;
  y.segment<3>(28) = s.body.x_b;
  y.segment<10>(31) = s.body.u;
  Eigen::Map<Mat3>(y.data() + 41) = s.body.r_b;
  return y;
}

void unpack(const StateVec& y, SystemState& s) {
  s.link.q = y.segment<12>(0);
  s.link.qd = y.segment<12>(12);
  s.body.joints = y.segment<4>(24);
  s.body.x_b = y.segment<3>(28);
  s.body.u = y.segment<10>(31);
  s.body.r_b = Eigen::Map<const Mat3>(y.data() + 41);
}

Vec4 reference_lengths(const SystemState& s, const RobotParams& p,
                       SimMode mode, const Vec4& l_min, const Vec4& l_max) {
  if (mode == SimMode::PitchStabilized) {
    return pitch_outer_loop(pitch_angle(s.body.r_b), p.control, l_min, l_max);
  }
  return p.control.l_ref_zp;
}

StateVec rhs(const StateVec& y, const RobotParams& p, SimMode mode,
             const Vec4& l_min, const Vec4& l_max) {
  SystemState s;
  unpack(y, s);

  const Vec4 l_ref = reference_lengths(s, p, mode, l_min, l_max);
  LinkageInput u1;
  u1[0] = crank_controller(s.link.qd[q1i::th1], p.control.omega_ref,
                           p.control.k_d1);
  u1.tail<4>() = fdc_controller(s.link.fdc(), s.link.fdc_rate(), l_ref,
                                p.control.k_p2, p.control.k_d2);
  const Vec12 q1dd = massless_accel(s.link, u1, p.linkage);

  const LinkagePose pose = forward_kinematics(s.link, p.linkage);
  GeneralizedForce f = coupling_wrench(pose, s.body, p.massed);
  if (p.aero.enabled) {
    f += generalized_aero_force(s.body, p.aero, p.massed).u;
  }
  const MassedAccel ma = massed_accel(s.body, f, p.massed);

  StateVec dy;
  dy.segment<12>(0) = s.link.qd;
  dy.segment<12>(12) = q1dd;
  dy.segment<4>(24) = s.body.u.head<4>();
  dy.segment<3>(28) = s.body.xdot_b();
  dy.segment<10>(31) = ma.udot;
  Eigen::Map<Mat3>(dy.data() + 41) = ma.r_dot;
  return dy;
}

TrajectorySample make_sample(const SystemState& s, const RobotParams& p) {
  TrajectorySample r;
  r.t = s.t;
  r.x_b = s.body.x_b;
  r.v_b = s.body.xdot_b();
  r.r_b = s.body.r_b;
  r.omega_b = s.body.omega_b();
  r.joints = s.body.joints;
  r.joint_rates = s.body.u.head<4>();
  r.theta1 = s.link.q[q1i::th1];
  r.theta1_dot = s.link.qd[q1i::th1];
  r.fdc = s.link.fdc();
  r.l_ref = s.l_ref;
  r.pi = angular_momentum(s.body, p.massed,
                          p.sim.conventional_momentum_sign);
  r.theta_y = pitch_angle(s.body.r_b);
  const AeroForceResult aero =
      generalized_aero_force(s.body, p.aero, p.massed);
  r.lift = aero.lift;
  r.thrust = aero.thrust;
  r.c_norm = constraint_residual(s.link.q, p.linkage)
                 .cwiseAbs()
                 .maxCoeff();
  return r;
}

}  // namespace

void step(SystemState& state, const RobotParams& params, SimMode mode) {
  const auto [l_min, l_max] = fdc_bounds(params);
  const double dt = params.sim.dt;
  try {
    const StateVec y0 = pack(state);
    const StateVec k1 = rhs(y0, params, mode, l_min, l_max);
    const StateVec k2 = rhs(y0 + 0.5 * dt * k1, params, mode, l_min, l_max);
    const StateVec k3 = rhs(y0 + 0.5 * dt * k2, params, mode, l_min, l_max);
    const StateVec k4 = rhs(y0 + dt * k3, params, mode, l_min, l_max);
    const StateVec y1 =
        y0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    unpack(y1, state);
    project(state.link, params.linkage, params.sim.projection_tol,
            params.sim.max_newton_iters);
    if (params.sim.reorthonormalize) {
      state.body.r_b = orthonormalize(state.body.r_b);
    }
    state.t += dt;
    state.l_ref = reference_lengths(state, params, mode, l_min, l_max);
  } catch (const std::exception& e) {
    std::ostringstream os;
    os << "step failed at t=" << state.t << ": " << e.what();
    throw SimError(os.str());
  }
}

SystemState initial_state(const RobotParams& params, SimMode mode,
                          double theta_y0) {
  const auto [l_min, l_max] = fdc_bounds(params);
  SystemState s;
  s.body.joints = params.massed.theta_j0;
  s.body.r_b = rotation_from_pitch(theta_y0);
  s.l_ref = mode == SimMode::PitchStabilized
                ? pitch_outer_loop(theta_y0, params.control, l_min, l_max)
                : params.control.l_ref_zp;
  s.link.q = assemble(params.linkage, 0.0, s.l_ref,
                      default_assembly_guess());
  s.link.qd.setZero();
  s.link.qd[q1i::th1] = params.control.omega_ref;
  project(s.link, params.linkage, params.sim.projection_tol,
          params.sim.max_newton_iters);
  return s;
}

Trajectory simulate(const RobotParams& params, SystemState state,
                    SimMode mode, double t_end) {
  Trajectory traj;
  const int n_steps = static_cast<int>(std::llround(t_end / params.sim.dt));
  const int dec = std::max(1, params.sim.decimation);
  traj.samples.push_back(make_sample(state, params));
  for (int i = 1; i <= n_steps; ++i) {
    try {
      step(state, params, mode);
    } catch (const SimError& e) {
      traj.complete = false;
      traj.abort_reason = e.what();
      return traj;
    }
    if (i % dec == 0) traj.samples.push_back(make_sample(state, params));
  }
  return traj;
}

Trajectory simulate(const RobotParams& params, SimMode mode, double theta_y0,
                    double t_end) {
  SystemState s;
  try {
    s = initial_state(params, mode, theta_y0);
  } catch (const std::exception& e) {
    Trajectory traj;
    traj.complete = false;
    traj.abort_reason = std::string("initialization failed: ") + e.what();
    return traj;
  }
  return simulate(params, s, mode, t_end);
}

namespace {

Vec10 strobe_state(const TrajectorySample& s) {
  Vec10 v;
  v.segment<3>(0) = s.v_b;
  v.segment<4>(3) = s.joints;
  v.segment<3>(7) = s.omega_b;
  return v;
}

}  // namespace

double limit_cycle_metric(const Trajectory& traj, double flap_period) {
  if (traj.samples.size() < 2) throw SimError("trajectory too short");
  const double dts = traj.samples[1].t - traj.samples[0].t;
  const long k = std::lround(flap_period / dts);
  const long n = static_cast<long>(traj.samples.size());
  if (k < 1 || n <= 2 * k) {
    throw SimError("trajectory shorter than two flap periods");
  }
  double best = std::numeric_limits<double>::infinity();
  for (long j = 1; j <= 5; ++j) {
    const long hi = n - 1 - (j - 1) * k;
    const long lo = hi - k;
    if (lo < 0) break;
    const double d =
        (strobe_state(traj.samples[hi]) - strobe_state(traj.samples[lo]))
            .norm();
    best = std::min(best, d);
  }
  return best;
}

double limit_cycle_state_norm(const Trajectory& traj) {
  if (traj.samples.empty()) throw SimError("empty trajectory");
  return strobe_state(traj.samples.back()).norm();
}

std::string trajectory_to_csv(const Trajectory& traj) {
  std::ostringstream os;
  os << "t,xb_x,xb_y,xb_z,vb_x,vb_y,vb_z,"
     << "r11,r12,r13,r21,r22,r23,r31,r32,r33,"
     << "wx,wy,wz,th_sl,th_el,th_sr,th_er,theta1,"
     << "l3b,l3c,l8b,l10b,pi_x,pi_y,pi_z,theta_y,lift,thrust,c_norm\n";
  os.precision(17);
  for (const auto& s : traj.samples) {
    os << s.t;
    for (int i = 0; i < 3; ++i) os << ',' << s.x_b[i];
    for (int i = 0; i < 3; ++i) os << ',' << s.v_b[i];
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) os << ',' << s.r_b(r, c);
    for (int i = 0; i < 3; ++i) os << ',' << s.omega_b[i];
    for (int i = 0; i < 4; ++i) os << ',' << s.joints[i];
    os << ',' << s.theta1;
    for (int i = 0; i < 4; ++i) os << ',' << s.fdc[i];
    for (int i = 0; i < 3; ++i) os << ',' << s.pi[i];
    os << ',' << s.theta_y << ',' << s.lift << ',' << s.thrust << ','
       << s.c_norm << '\n';
  }
  return os.str();
}

std::string trajectory_summary_json(const Trajectory& traj,
                                    const RobotParams& params) {
  nlohmann::json j;
  j["complete"] = traj.complete;
  if (!traj.abort_reason.empty()) j["abort_reason"] = traj.abort_reason;
  j["samples"] = traj.samples.size();
  if (!traj.samples.empty()) {
    const auto& last = traj.samples.back();
    j["t_end"] = last.t;
    j["final_velocity"] = {last.v_b.x(), last.v_b.y(), last.v_b.z()};
    Vec3 mean_v = Vec3::Zero();
    double pi_term = 0.0, vel_term = 0.0, pitch_term = 0.0;
    const double dts = traj.samples.size() > 1
                           ? traj.samples[1].t - traj.samples[0].t
                           : params.sim.dt;
    for (const auto& s : traj.samples) {
      mean_v += s.v_b;
      pi_term += params.optim.w1 * s.pi.squaredNorm() * dts;
      vel_term += params.optim.w2 * s.v_b.squaredNorm() * dts;
      const double e = params.control.theta_y_ref - s.theta_y;
      pitch_term += params.optim.w3 * e * e * dts;
    }
    mean_v /= static_cast<double>(traj.samples.size());
    j["mean_velocity"] = {mean_v.x(), mean_v.y(), mean_v.z()};
    j["cost"] = {{"momentum", pi_term},
                 {"velocity", vel_term},
                 {"pitch", pitch_term},
                 {"gait", pi_term + vel_term},
                 {"pitch_total", pi_term + vel_term + pitch_term}};
    const double period = 2.0 * M_PI / params.control.omega_ref;
    try {
      j["limit_cycle_metric"] = limit_cycle_metric(traj, period);
      j["limit_cycle_state_norm"] = limit_cycle_state_norm(traj);
    } catch (const SimError&) {
      j["limit_cycle_metric"] = nullptr;
    }
    double max_drift = 0.0;
    for (const auto& s : traj.samples) {
      max_drift = std::max(max_drift, s.c_norm);
    }
    j["max_constraint_drift"] = max_drift;
  }
  return j.dump(2) + "\n";
}

}  // namespace aerobat
