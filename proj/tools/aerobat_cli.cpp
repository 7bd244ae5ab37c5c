// aerobat command line front end.
//
//   aerobat <subcommand> --config <path> [--out <dir>] [--seed <u64>]
//           [--set key=value]...
//
// Subcommands: simulate, optimize-gait, optimize-pitch, sensitivity,
// validate, plot. Every run writes a manifest (config hash, seed, artifact
// version) into the output directory. AEROBAT_OUT overrides --out.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "aerobat/optim.hpp"

using namespace aerobat;
namespace fs = std::filesystem;

namespace {

constexpr const char* kArtifactVersion = "1";

std::string iso_now() {
  const auto t = std::chrono::system_clock::to_time_t(
      std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

[[noreturn]] void die(const std::string& module, const std::string& what) {
  std::fprintf(stderr, "error [%s] %s: %s\n", iso_now().c_str(),
               module.c_str(), what.c_str());
  std::exit(1);
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) die("cli", "cannot open " + path.string() + " for writing");
  f << text;
}

struct CommonOpts {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "parameter file");
  cmd->add_option("--out", o.out_dir, "output directory");
  cmd->add_option("--seed", o.seed, "optimizer seed")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--set", o.overrides,
                  "override, section.key=value (repeatable)");
}

RobotParams load_params(CLI::App* cmd, CommonOpts& o) {
  RobotParams p;
  try {
    if (!o.config_path.empty()) p = load_config_file(o.config_path);
  } catch (const ParseError& e) {
    die("config", e.what());
  } catch (const ValidationError& e) {
    die("config", e.what());
  } catch (const std::exception& e) {
    die("config", e.what());
  }
  for (const std::string& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "--set: expected key=value, got '%s'\n",
                   kv.c_str());
      std::exit(2);
    }
    try {
      apply_override(p, kv.substr(0, eq), kv.substr(eq + 1));
    } catch (const std::exception& e) {
      std::fprintf(stderr, "--set %s: %s\n", kv.c_str(), e.what());
      std::exit(2);
    }
  }
  try {
    p.validate();
  } catch (const ValidationError& e) {
    die("config", e.what());
  }
  o.seed_given = cmd->count("--seed") > 0;
  if (o.seed_given) p.optim.seed = o.seed;
  if (const char* env = std::getenv("AEROBAT_OUT")) o.out_dir = env;
  return p;
}

fs::path prepare_out(const CommonOpts& o) {
  std::error_code ec;
  fs::create_directories(o.out_dir, ec);
  if (ec) die("cli", "cannot create output directory " + o.out_dir);
  return o.out_dir;
}

void write_manifest(const fs::path& dir, const std::string& subcommand,
                    const RobotParams& p, const CommonOpts& o,
                    const std::vector<std::string>& outputs) {
  nlohmann::json j;
  j["artifact_version"] = kArtifactVersion;
  j["subcommand"] = subcommand;
  j["config_hash"] = config_hash(p);
  j["seed"] = p.optim.seed;
  j["config_path"] = o.config_path;
  j["overrides"] = o.overrides;
  j["outputs"] = outputs;
  write_file(dir / "manifest.json", j.dump(2) + "\n");
}

// ---------------------------------------------------------------- plots --

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string fmt_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct PlotSeries {
  std::string label;
  std::vector<double> y;
};

/// Hand-rolled line plot; byte output depends only on the inputs.
std::string render_svg(const std::string& title, const std::string& ylabel,
                       const std::vector<double>& x,
                       const std::vector<PlotSeries>& series,
                       const std::vector<std::pair<std::string, double>>&
                           hlines = {}) {
  const double w = 800, h = 480;
  const double ml = 70, mr = 20, mt = 40, mb = 50;
  double x_lo = x.front(), x_hi = x.back();
  double y_lo = 1e300, y_hi = -1e300;
  for (const auto& s : series) {
    for (double v : s.y) {
      y_lo = std::min(y_lo, v);
      y_hi = std::max(y_hi, v);
    }
  }
  for (const auto& [_, v] : hlines) {
    y_lo = std::min(y_lo, v);
    y_hi = std::max(y_hi, v);
  }
  if (y_hi - y_lo < 1e-12) {
    y_lo -= 1.0;
    y_hi += 1.0;
  }
  const double pad = 0.05 * (y_hi - y_lo);
  y_lo -= pad;
  y_hi += pad;
  auto px = [&](double v) {
    return ml + (v - x_lo) / (x_hi - x_lo) * (w - ml - mr);
  };
  auto py = [&](double v) {
    return h - mb - (v - y_lo) / (y_hi - y_lo) * (h - mt - mb);
  };

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
      << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << " " << h
      << "\">\n"
      << "<rect width=\"" << w << "\" height=\"" << h
      << "\" fill=\"white\"/>\n"
      << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"16\">"
      << title << "</text>\n";

  // axes and ticks
  svg << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr
      << "\" y2=\"" << h - mb << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
      << "\" y2=\"" << h - mb << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double xv = x_lo + (x_hi - x_lo) * k / 5.0;
    const double yv = y_lo + (y_hi - y_lo) * k / 5.0;
    svg << "<line x1=\"" << fmt(px(xv)) << "\" y1=\"" << h - mb
        << "\" x2=\"" << fmt(px(xv)) << "\" y2=\"" << h - mb + 5
        << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << fmt(px(xv)) << "\" y=\"" << h - mb + 20
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"12\">"
        << fmt_tick(xv) << "</text>\n"
        << "<line x1=\"" << ml - 5 << "\" y1=\"" << fmt(py(yv)) << "\" x2=\""
        << ml << "\" y2=\"" << fmt(py(yv)) << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << ml - 8 << "\" y=\"" << fmt(py(yv) + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"12\">"
        << fmt_tick(yv) << "</text>\n";
  }
  svg << "<text x=\"" << (ml + w - mr) / 2 << "\" y=\"" << h - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\">t [s]</text>\n"
      << "<text x=\"16\" y=\"" << (mt + h - mb) / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\" transform=\"rotate(-90 16 "
      << (mt + h - mb) / 2 << ")\">" << ylabel << "</text>\n";

  for (const auto& [label, v] : hlines) {
    svg << "<line x1=\"" << ml << "\" y1=\"" << fmt(py(v)) << "\" x2=\""
        << w - mr << "\" y2=\"" << fmt(py(v))
        << "\" stroke=\"#888888\" stroke-dasharray=\"6,4\"/>\n"
        << "<text x=\"" << w - mr - 4 << "\" y=\"" << fmt(py(v) - 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\" fill=\"#555555\">"
        << label << "</text>\n";
  }

  for (size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    svg << "<polyline fill=\"none\" stroke=\"" << palette[si % 4]
        << "\" stroke-width=\"1.5\" points=\"";
    for (size_t i = 0; i < x.size(); ++i) {
      if (i) svg << ' ';
      svg << fmt(px(x[i])) << ',' << fmt(py(s.y[i]));
    }
    svg << "\"/>\n"
        << "<text x=\"" << ml + 10 + 120.0 * static_cast<double>(si)
        << "\" y=\"" << mt - 6 << "\" font-family=\"sans-serif\" "
           "font-size=\"12\" fill=\""
        << palette[si % 4] << "\">" << s.label << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;  // column-major

  const std::vector<double>& col(const std::string& name) const {
    for (size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return columns[i];
    }
    throw std::runtime_error("missing channel '" + name + "'");
  }
};

CsvTable read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  CsvTable t;
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error(path + " is empty");
  std::istringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) t.header.push_back(cell);
  t.columns.resize(t.header.size());
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    size_t i = 0;
    while (std::getline(ls, cell, ',') && i < t.columns.size()) {
      t.columns[i++].push_back(std::stod(cell));
    }
  }
  return t;
}

std::vector<std::string> emit_plots(const CsvTable& t, const fs::path& dir,
                                    double theta_y_ref) {
  const std::vector<double>& time = t.col("t");
  std::vector<std::string> written;
  auto emit = [&](const std::string& file, const std::string& title,
                  const std::string& ylabel,
                  const std::vector<PlotSeries>& series,
                  std::vector<std::pair<std::string, double>> hl = {}) {
    write_file(dir / file, render_svg(title, ylabel, time, series, hl));
    written.push_back(file);
  };
  emit("pitch.svg", "Body pitch", "theta_y [rad]",
       {{"theta_y", t.col("theta_y")}},
       {{"theta_y,ref = " + fmt_tick(theta_y_ref * 180.0 / M_PI) + " deg",
         theta_y_ref}});
  emit("velocity.svg", "Body velocity", "v [m/s]",
       {{"v_x", t.col("vb_x")},
        {"v_y", t.col("vb_y")},
        {"v_z", t.col("vb_z")}});
  emit("fdc_lengths.svg", "Variable link lengths", "l [m]",
       {{"l3b", t.col("l3b")},
        {"l3c", t.col("l3c")},
        {"l8b", t.col("l8b")},
        {"l10b", t.col("l10b")}});
  emit("lift_thrust.svg", "Aerodynamic force", "F [N]",
       {{"lift", t.col("lift")}, {"thrust", t.col("thrust")}});
  return written;
}

// ----------------------------------------------------------- validation --

bool check(const char* name, bool ok, double value, double bound) {
  std::printf("%-38s %s   (%.3e vs %.1e)\n", name, ok ? "PASS" : "FAIL",
              value, bound);
  return ok;
}

int run_validate(const RobotParams& params) {
  bool all = true;

  {  // constraint Jacobian vs finite differences
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
      Vec12 q = default_assembly_guess();
      for (int i = 0; i < 12; ++i) q[i] += 0.05 * u(rng);
      const Mat7x12 m = constraint_jacobian(q, params.linkage);
      for (int i = 0; i < 12; ++i) {
        Vec12 qp = q, qm = q;
        const double eps = 1e-6;
        qp[i] += eps;
        qm[i] -= eps;
        const Vec7 fd = (constraint_residual(qp, params.linkage) -
                         constraint_residual(qm, params.linkage)) /
                        (2.0 * eps);
        worst = std::max(worst, (fd - m.col(i)).lpNorm<Eigen::Infinity>());
      }
    }
    all &= check("constraint Jacobian vs FD", worst <= 1e-6, worst, 1e-6);
  }

  {  // energy conservation with conservative forces only
    RobotParams p = params;
    p.aero.enabled = false;
    p.massed.k_guide = 0.0;
    p.massed.b_guide = 0.0;
    p.massed.b_torsion.setZero();
    p.control.k_d1 = 0.0;
    p.control.k_p2.setZero();
    p.control.k_d2.setZero();
    p.sim.dt = 1e-4;
    auto total_energy = [&](const SystemState& s) {
      const auto [ke, pe] = energies(s.body, p.massed);
      const Vec4 d = s.body.joints - p.massed.theta_j0;
      return ke + pe +
             0.5 * d.cwiseProduct(d).dot(p.massed.k_torsion.cwiseAbs());
    };
    SystemState s = initial_state(p, SimMode::OpenLoop, 0.2);
    const double e0 = total_energy(s);
    double drift = 0.0;
    for (int k = 0; k < 3000; ++k) {
      step(s, p, SimMode::OpenLoop);
      drift = std::max(drift, std::abs(total_energy(s) - e0));
    }
    const double rel = drift / std::abs(e0);
    all &= check("energy drift (conservative run)", rel <= 1e-6, rel, 1e-6);
  }

  {  // constraint drift + rotation integrity over a closed-loop run
    RobotParams p = params;
    const Trajectory t =
        simulate(p, SimMode::PitchStabilized, p.control.theta_y_ref, 0.5);
    if (!t.complete) {
      std::printf("%-38s FAIL   (%s)\n", "closed-loop run",
                  t.abort_reason.c_str());
      all = false;
    } else {
      double c = 0.0, rerr = 0.0, derr = 0.0;
      for (const auto& s : t.samples) {
        c = std::max(c, s.c_norm);
        rerr = std::max(
            rerr, (s.r_b.transpose() * s.r_b - Mat3::Identity()).norm());
        derr = std::max(derr, std::abs(s.r_b.determinant() - 1.0));
      }
      all &= check("constraint drift (closed loop)", c <= 1e-8, c, 1e-8);
      all &= check("rotation orthonormality", rerr <= 1e-9, rerr, 1e-9);
      all &= check("rotation determinant", derr <= 1e-9, derr, 1e-9);
    }
  }

  std::printf("validation %s\n", all ? "PASSED" : "FAILED");
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flapping-wing robot simulator and gait optimizer"};
  app.require_subcommand(1);

  CommonOpts common;
  double t_end = -1.0;
  std::string mode_str = "open-loop";
  double theta_y0 = NAN;
  bool aero_segments = false;
  int max_evals = -1;
  double horizon = -1.0;
  int n_scales = 5;
  int n_crank = 90;
  std::string traj_path;

  auto* simulate_cmd =
      app.add_subcommand("simulate", "integrate and export a trajectory");
  add_common(simulate_cmd, common);
  simulate_cmd->add_option("--t-end", t_end, "simulation length [s]");
  simulate_cmd->add_option("--mode", mode_str, "open-loop|pitch-stabilized")
      ->check(CLI::IsMember({"open-loop", "pitch-stabilized"}));
  simulate_cmd->add_option("--theta-y0", theta_y0, "initial pitch [rad]");
  simulate_cmd->add_flag("--aero-segments", aero_segments,
                         "dump the per-segment aero breakdown at t_end");

  auto* gait_cmd = app.add_subcommand(
      "optimize-gait", "search link references and launch pitch");
  add_common(gait_cmd, common);
  gait_cmd->add_option("--max-evals", max_evals, "evaluation budget");
  gait_cmd->add_option("--horizon", horizon, "cost horizon [s]");

  auto* pitch_cmd =
      app.add_subcommand("optimize-pitch", "search pitch loop gains");
  add_common(pitch_cmd, common);
  pitch_cmd->add_option("--max-evals", max_evals, "evaluation budget");
  pitch_cmd->add_option("--horizon", horizon, "cost horizon [s]");

  auto* sens_cmd = app.add_subcommand(
      "sensitivity", "sweep link lengths and trace end-effector paths");
  add_common(sens_cmd, common);
  sens_cmd->add_option("--n-scales", n_scales,
                       "scale factors per link across [0.8, 1.2]");
  sens_cmd->add_option("--n-crank", n_crank, "crank samples per revolution");

  auto* validate_cmd =
      app.add_subcommand("validate", "run the physics invariant checks");
  add_common(validate_cmd, common);

  auto* plot_cmd =
      app.add_subcommand("plot", "render SVG figures from a trajectory CSV");
  add_common(plot_cmd, common);
  plot_cmd->add_option("--traj", traj_path, "trajectory CSV path")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  }
  CLI::App* cmd = app.get_subcommands().front();
  const RobotParams params = load_params(cmd, common);
  const fs::path out = prepare_out(common);

  try {
    if (cmd == simulate_cmd) {
      RobotParams p = params;
      if (t_end < 0.0) t_end = p.sim.t_end;
      const SimMode mode = mode_str == "open-loop" ? SimMode::OpenLoop
                                                   : SimMode::PitchStabilized;
      if (std::isnan(theta_y0)) theta_y0 = p.control.theta_y_ref;
      const Trajectory traj = simulate(p, mode, theta_y0, t_end);
      write_file(out / "trajectory.csv", trajectory_to_csv(traj));
      write_file(out / "summary.json", trajectory_summary_json(traj, p));
      std::vector<std::string> outputs = {"trajectory.csv", "summary.json"};
      if (aero_segments && !traj.samples.empty()) {
        const auto& s = traj.samples.back();
        BodyState b;
        b.joints = s.joints;
        b.x_b = s.x_b;
        b.r_b = s.r_b;
        b.u.head<4>() = s.joint_rates;
        b.u.segment<3>(q2i::x) = s.v_b;
        b.u.segment<3>(q2i::w) = s.omega_b;
        const AeroForceResult r =
            generalized_aero_force(b, p.aero, p.massed, true);
        write_file(out / "aero_segments.csv", segments_to_csv(r.segments));
        outputs.push_back("aero_segments.csv");
      }
      write_manifest(out, "simulate", p, common, outputs);
      if (!traj.complete) die("sim", traj.abort_reason);
    } else if (cmd == gait_cmd || cmd == pitch_cmd) {
      RobotParams p = params;
      if (max_evals > 0) p.optim.max_evals = max_evals;
      if (horizon > 0.0) p.optim.horizon = horizon;
      const bool gait = cmd == gait_cmd;
      const OptimizationResult r =
          gait ? optimize_gait(p) : optimize_pitch_gains(p);
      const std::vector<std::string> names =
          gait ? std::vector<std::string>{"l3b_ref", "l3c_ref", "l8b_ref",
                                          "l10b_ref", "theta_y0"}
               : std::vector<std::string>{"kc_1", "kc_2", "kc_3", "kc_4"};
      const std::string file = gait ? "gait_result.json" : "pitch_result.json";
      write_file(out / file, result_to_json(r, p, names));
      write_manifest(out, gait ? "optimize-gait" : "optimize-pitch", p,
                     common, {file});
      std::printf("best cost %.6e after %d evaluations (%s)\n", r.best_cost,
                  r.evals, r.termination.c_str());
      if (r.termination == "all_failed") die("optim", "no feasible candidate");
    } else if (cmd == sens_cmd) {
      if (n_scales < 2 || n_crank < 4) {
        std::fprintf(stderr,
                     "--n-scales/--n-crank: need at least 2 scales and 4 "
                     "crank samples\n");
        return 2;
      }
      std::vector<Vec4> grid = {params.linkage.fdc_nominal};
      for (int i = 0; i < 4; ++i) {
        for (int k = 0; k < n_scales; ++k) {
          const double s = 0.8 + 0.4 * k / (n_scales - 1.0);
          if (std::abs(s - 1.0) < 1e-12) continue;
          Vec4 f = params.linkage.fdc_nominal;
          f[i] *= s;
          grid.push_back(f);
        }
      }
      const auto paths = sensitivity_sweep(params.linkage, grid, n_crank);
      write_file(out / "sweep.csv", sweep_to_csv(paths));
      write_manifest(out, "sensitivity", params, common, {"sweep.csv"});
    } else if (cmd == validate_cmd) {
      write_manifest(out, "validate", params, common, {});
      return run_validate(params);
    } else if (cmd == plot_cmd) {
      const CsvTable t = read_csv(traj_path);
      const auto written = emit_plots(t, out, params.control.theta_y_ref);
      write_manifest(out, "plot", params, common, written);
    }
  } catch (const AssemblyError& e) {
    die("linkage", e.what());
  } catch (const SingularityError& e) {
    die("linkage", e.what());
  } catch (const SimError& e) {
    die("sim", e.what());
  } catch (const std::exception& e) {
    die(cmd->get_name(), e.what());
  }
  return 0;
}
