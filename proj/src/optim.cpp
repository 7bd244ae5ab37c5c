#include "aerobat/optim.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>

namespace aerobat {

namespace {

VecX clamp_box(const VecX& x, const VecX& lo, const VecX& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

/// Tracks feasible costs and prices failed evaluations.
struct PenaltyLedger {
  std::vector<double> feasible_costs;

  double penalty() {
    if (feasible_costs.empty()) return 1e6;
    std::vector<double> c = feasible_costs;
    const size_t mid = c.size() / 2;
    std::nth_element(c.begin(), c.begin() + mid, c.end());
    return 1e6 * std::max(1.0, std::abs(c[mid]));
  }
};

}  // namespace

OptimizationResult nelder_mead(
    const std::function<double(const VecX&)>& objective, const VecX& x0,
    const VecX& lower, const VecX& upper,
    const NelderMeadSettings& settings) {
  const int n = static_cast<int>(x0.size());
  OptimizationResult out;
  out.seed = settings.seed;

  PenaltyLedger ledger;
  bool best_set = false;

  auto eval = [&](const VecX& raw) -> double {
    const VecX x = clamp_box(raw, lower, upper);
    double cost;
    bool ok = true;
    try {
      cost = objective(x);
      if (!std::isfinite(cost)) ok = false;
    } catch (const std::exception&) {
      ok = false;
    }
    if (!ok) cost = ledger.penalty();
    else ledger.feasible_costs.push_back(cost);
    out.trace.push_back(cost);
    out.feasible.push_back(ok);
    ++out.evals;
    if (ok && (!best_set || cost < out.best_cost)) {
      out.best = x;
      out.best_cost = cost;
      best_set = true;
    }
    return cost;
  };

  // Initial simplex around x0 with per-coordinate steps scaled by the box.
  std::vector<VecX> pts(n + 1);
  std::vector<double> f(n + 1);
  pts[0] = clamp_box(x0, lower, upper);
  f[0] = eval(pts[0]);
  for (int i = 0; i < n; ++i) {
    VecX p = pts[0];
    double h = settings.initial_step * (upper[i] - lower[i]);
    if (h <= 0.0) h = 1e-3;
    p[i] = p[i] + h <= upper[i] ? p[i] + h : p[i] - h;
    pts[i + 1] = p;
    f[i + 1] = eval(p);
  }

  const double alpha = 1.0, gamma = 2.0, beta = 0.5, sigma = 0.5;
  out.termination = "max_evals";
  while (out.evals < settings.max_evals) {
    std::vector<int> order(n + 1);
    for (int i = 0; i <= n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return f[a] < f[b]; });
    std::vector<VecX> sp(n + 1);
    std::vector<double> sf(n + 1);
    for (int i = 0; i <= n; ++i) {
      sp[i] = pts[order[i]];
      sf[i] = f[order[i]];
    }
    pts = sp;
    f = sf;

    double diam = 0.0;
    for (int i = 1; i <= n; ++i) {
      diam = std::max(diam, (pts[i] - pts[0]).norm());
    }
    if (diam < settings.tol) {
      out.termination = "tol";
      break;
    }

    VecX centroid = VecX::Zero(n);
    for (int i = 0; i < n; ++i) centroid += pts[i];
    centroid /= n;

    const VecX xr = clamp_box(centroid + alpha * (centroid - pts[n]),
                              lower, upper);
    const double fr = eval(xr);
    if (fr < f[0]) {
      const VecX xe = clamp_box(centroid + gamma * (xr - centroid),
                                lower, upper);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[n] = xe;
        f[n] = fe;
      } else {
        pts[n] = xr;
        f[n] = fr;
      }
    } else if (fr < f[n - 1]) {
      pts[n] = xr;
      f[n] = fr;
    } else {
      const VecX base = fr < f[n] ? xr : pts[n];
      const double fbase = std::min(fr, f[n]);
      const VecX xc = clamp_box(centroid + beta * (base - centroid),
                                lower, upper);
      const double fc = eval(xc);
      if (fc < fbase) {
        pts[n] = xc;
        f[n] = fc;
      } else {
        for (int i = 1; i <= n; ++i) {
          pts[i] = clamp_box(pts[0] + sigma * (pts[i] - pts[0]),
                             lower, upper);
          f[i] = eval(pts[i]);
          if (out.evals >= settings.max_evals) break;
        }
      }
    }
  }

  if (!best_set) {
    // Every candidate failed; report the least-bad simplex point.
    out.best = pts[0];
    out.best_cost = f[0];
    out.termination = "all_failed";
  }
  return out;
}

double gait_cost(const Trajectory& traj, double w1, double w2) {
  if (!traj.complete || traj.samples.size() < 2) {
    throw SimError("gait_cost: incomplete trajectory");
  }
  const double dts = traj.samples[1].t - traj.samples[0].t;
  double j = 0.0;
  for (const auto& s : traj.samples) {
    j += (w1 * s.pi.squaredNorm() + w2 * s.v_b.squaredNorm()) * dts;
  }
  return j;
}

double pitch_cost(const Trajectory& traj, double w1, double w2, double w3,
                  double theta_y_ref) {
  double j = gait_cost(traj, w1, w2);
  const double dts = traj.samples[1].t - traj.samples[0].t;
  for (const auto& s : traj.samples) {
    const double e = theta_y_ref - s.theta_y;
    j += w3 * e * e * dts;
  }
  return j;
}

OptimizationResult optimize_gait(const RobotParams& params) {
  const auto [l_min, l_max] = fdc_bounds(params);
  VecX lo(5), hi(5), x0(5);
  lo.head<4>() = l_min;
  hi.head<4>() = l_max;
  lo[4] = -params.optim.pitch_bound;
  hi[4] = params.optim.pitch_bound;
  x0.head<4>() = params.linkage.fdc_nominal;
  x0[4] = params.control.theta_y_ref;

  auto objective = [&params](const VecX& x) {
    RobotParams p = params;
    p.control.l_ref_zp = x.head<4>();
    const Trajectory traj =
        simulate(p, SimMode::OpenLoop, x[4], p.optim.horizon);
    return gait_cost(traj, p.optim.w1, p.optim.w2);
  };

  NelderMeadSettings s;
  s.max_evals = params.optim.max_evals;
  s.tol = params.optim.simplex_tol;
  s.seed = params.optim.seed;
  return nelder_mead(objective, x0, lo, hi, s);
}

OptimizationResult optimize_pitch_gains(const RobotParams& params) {
  const int n = 4;
  VecX lo = VecX::Constant(n, -params.optim.kc_bound);
  VecX hi = VecX::Constant(n, params.optim.kc_bound);
  VecX x0 = VecX::Zero(n);

  auto objective = [&params](const VecX& x) {
    RobotParams p = params;
    p.control.k_c = x;
    const Trajectory traj = simulate(p, SimMode::PitchStabilized,
                                     p.control.theta_y_ref, p.optim.horizon);
    return pitch_cost(traj, p.optim.w1, p.optim.w2, p.optim.w3,
                      p.control.theta_y_ref);
  };

  NelderMeadSettings s;
  s.max_evals = params.optim.max_evals;
  s.tol = params.optim.simplex_tol;
  s.seed = params.optim.seed;
  return nelder_mead(objective, x0, lo, hi, s);
}

std::string result_to_json(const OptimizationResult& result,
                           const RobotParams& params,
                           const std::vector<std::string>& names) {
  nlohmann::json j;
  nlohmann::json best = nlohmann::json::object();
  for (int i = 0; i < result.best.size(); ++i) {
    const std::string key =
        i < static_cast<int>(names.size()) ? names[i]
                                           : "x" + std::to_string(i);
    best[key] = result.best[i];
  }
  j["best"] = best;
  j["best_cost"] = result.best_cost;
  j["trace"] = result.trace;
  std::vector<int> feas(result.feasible.begin(), result.feasible.end());
  j["feasible"] = feas;
  j["evals"] = result.evals;
  j["termination"] = result.termination;
  j["seed"] = result.seed;
  j["settings"] = {{"max_evals", params.optim.max_evals},
                   {"tol", params.optim.simplex_tol},
                   {"horizon", params.optim.horizon},
                   {"w1", params.optim.w1},
                   {"w2", params.optim.w2},
                   {"w3", params.optim.w3}};
  j["config_hash"] = config_hash(params);
  return j.dump(2) + "\n";
}

}  // namespace aerobat
