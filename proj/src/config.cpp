#include "aerobat/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

#include "aerobat/linkage.hpp"

namespace aerobat {

namespace {

void require(bool cond, const std::string& what) {
  if (!cond) throw ValidationError("invalid config: " + what);
}

bool spd(const Mat3& m) {
  if ((m - m.transpose()).lpNorm<Eigen::Infinity>() > 1e-12) return false;
  Eigen::SelfAdjointEigenSolver<Mat3> es(m);
  return es.eigenvalues().minCoeff() > 0.0;
}

}  // namespace

void LinkageGeometry::validate() const {
  for (double l : {l1, l2, l3a, l5a, l7, l8a, l9, l10a, l12a, l12b}) {
    require(l > 0.0, "linkage lengths must be strictly positive");
  }
  require((fdc_nominal.array() > 0.0).all(),
          "FDC nominal lengths must be strictly positive");
}

void MassedParams::validate() const {
  require(m_body > 0.0 && m_humerus > 0.0 && m_radius > 0.0,
          "masses must be strictly positive");
  require(spd(I_body), "I_body must be symmetric positive definite");
  require(spd(I_humerus), "I_humerus must be symmetric positive definite");
  require(spd(I_radius), "I_radius must be symmetric positive definite");
  require(l_h > 0.0 && l_r > 0.0, "wing link lengths must be positive");
  require((k_torsion.array() >= 0.0).all() && (b_torsion.array() >= 0.0).all(),
          "torsional stiffness/damping must be nonnegative");
  require(k_guide >= 0.0 && b_guide >= 0.0,
          "guide stiffness/damping must be nonnegative");
  require(l4 > 0.0 && l11 > 0.0, "guide rest lengths must be positive");
}

void AeroParams::validate() const {
  require(rho > 0.0, "air density must be positive");
  require(chord > 0.0, "chord must be positive");
  require(span_h > 0.0 && span_r > 0.0, "spans must be positive");
  require(n_span >= 1 && n_chord >= 1, "segment counts must be >= 1");
}

void ControlParams::validate() const {
  require(k_d1 > 0.0, "k_d1 must be positive");
  require((k_p2.array() >= 0.0).all() && (k_d2.array() >= 0.0).all(),
          "FDC PD gains must be nonnegative");
  require(omega_ref > 0.0, "omega_ref must be positive");
}

void SimParams::validate() const {
  require(dt > 0.0, "dt must be positive");
  require(t_end >= dt, "t_end must be at least one step");
  require(projection_tol > 0.0, "projection tolerance must be positive");
  require(decimation >= 1, "decimation must be >= 1");
}

void OptimParams::validate() const {
  require(w1 >= 0.0 && w2 >= 0.0 && w3 >= 0.0, "weights must be nonnegative");
  require(w1 + w2 + w3 > 0.0, "weights must not all be zero");
  require(max_evals >= 1, "max_evals must be >= 1");
  require(horizon > 0.0, "optimization horizon must be positive");
}

void RobotParams::validate() const {
  linkage.validate();
  massed.validate();
  aero.validate();
  control.validate();
  sim.validate();
  optim.validate();
  const auto [lo, hi] = fdc_bounds(*this);
  require((lo.array() > 0.0).all(), "l_min must be positive");
  require((lo.array() <= linkage.fdc_nominal.array()).all() &&
              (linkage.fdc_nominal.array() <= hi.array()).all(),
          "FDC bounds must bracket the nominal lengths");
}

std::pair<Vec4, Vec4> fdc_bounds(const RobotParams& params) {
  Vec4 lo = 0.8 * params.linkage.fdc_nominal;
  Vec4 hi = 1.2 * params.linkage.fdc_nominal;
  if ((params.control.l_min_override.array() >= 0.0).all()) {
    lo = params.control.l_min_override;
  }
  if ((params.control.l_max_override.array() >= 0.0).all()) {
    hi = params.control.l_max_override;
  }
  return {lo, hi};
}

// ---------------------------------------------------------------------------
// Key-value binding table. Each entry reads or writes one typed field, so
// the parser, the serializer and apply_override share a single source of
// key names.

namespace {

struct Binding {
  std::function<std::string(const RobotParams&)> get;
  std::function<void(RobotParams&, const std::string&)> set;
};

double parse_double(const std::string& s) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos])))
      ++pos;
    if (pos != s.size()) throw ParseError("trailing characters in '" + s + "'");
    return v;
  } catch (const std::invalid_argument&) {
    throw ParseError("not a number: '" + s + "'");
  } catch (const std::out_of_range&) {
    throw ParseError("number out of range: '" + s + "'");
  }
}

std::vector<double> parse_array(const std::string& s) {
  std::string t = s;
  if (t.size() >= 2 && t.front() == '[' && t.back() == ']') {
    t = t.substr(1, t.size() - 2);
  }
  std::vector<double> out;
  std::string item;
  std::istringstream is(t);
  while (std::getline(is, item, ',')) out.push_back(parse_double(item));
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

template <typename VecT>
std::string fmt_vec(const VecT& v) {
  std::ostringstream os;
  os << '[';
  for (int i = 0; i < v.size(); ++i) os << (i ? ", " : "") << fmt(v[i]);
  os << ']';
  return os.str();
}

Binding num(std::function<double*(RobotParams&)> field) {
  return {[field](const RobotParams& p) {
            return fmt(*field(const_cast<RobotParams&>(p)));
          },
          [field](RobotParams& p, const std::string& s) {
            *field(p) = parse_double(s);
          }};
}

Binding integer(std::function<int*(RobotParams&)> field) {
  return {[field](const RobotParams& p) {
            return std::to_string(*field(const_cast<RobotParams&>(p)));
          },
          [field](RobotParams& p, const std::string& s) {
            *field(p) = static_cast<int>(parse_double(s));
          }};
}

Binding boolean(std::function<bool*(RobotParams&)> field) {
  return {[field](const RobotParams& p) {
            return *field(const_cast<RobotParams&>(p)) ? std::string("true")
                                                       : std::string("false");
          },
          [field](RobotParams& p, const std::string& s) {
            if (s == "true" || s == "1")
              *field(p) = true;
            else if (s == "false" || s == "0")
              *field(p) = false;
            else
              throw ParseError("expected boolean, got '" + s + "'");
          }};
}

Binding u64(std::function<std::uint64_t*(RobotParams&)> field) {
  return {[field](const RobotParams& p) {
            return std::to_string(*field(const_cast<RobotParams&>(p)));
          },
          [field](RobotParams& p, const std::string& s) {
            *field(p) = std::stoull(s);
          }};
}

template <int N>
Binding vec(std::function<Eigen::Matrix<double, N, 1>*(RobotParams&)> field) {
  return {[field](const RobotParams& p) {
            return fmt_vec(*field(const_cast<RobotParams&>(p)));
          },
          [field](RobotParams& p, const std::string& s) {
            const auto vals = parse_array(s);
            if (static_cast<int>(vals.size()) != N) {
              throw ParseError("expected " + std::to_string(N) +
                               " array entries, got " +
                               std::to_string(vals.size()));
            }
            auto* v = field(p);
            for (int i = 0; i < N; ++i) (*v)[i] = vals[i];
          }};
}

Binding diag3(std::function<Mat3*(RobotParams&)> field) {
  return {[field](const RobotParams& p) {
            const Mat3& m = *field(const_cast<RobotParams&>(p));
            Vec3 d = m.diagonal();
            return fmt_vec(d);
          },
          [field](RobotParams& p, const std::string& s) {
            const auto vals = parse_array(s);
            if (vals.size() != 3) {
              throw ParseError("inertia expects 3 diagonal entries");
            }
            *field(p) = Vec3(vals[0], vals[1], vals[2]).asDiagonal();
          }};
}

// Ordered (section, key) list; order defines the serialized layout.
const std::vector<std::pair<std::string, std::map<std::string, Binding>>>&
schema() {
  static const auto* s = new std::vector<
      std::pair<std::string, std::map<std::string, Binding>>>{
      {"linkage",
       {
           {"p1", vec<2>([](RobotParams& p) { return &p.linkage.p1; })},
           {"p4", vec<2>([](RobotParams& p) { return &p.linkage.p4; })},
           {"p9", vec<2>([](RobotParams& p) { return &p.linkage.p9; })},
           {"p12", vec<2>([](RobotParams& p) { return &p.linkage.p12; })},
           {"p14", vec<2>([](RobotParams& p) { return &p.linkage.p14; })},
           {"l1", num([](RobotParams& p) { return &p.linkage.l1; })},
           {"l2", num([](RobotParams& p) { return &p.linkage.l2; })},
           {"l3a", num([](RobotParams& p) { return &p.linkage.l3a; })},
           {"l5a", num([](RobotParams& p) { return &p.linkage.l5a; })},
           {"l7", num([](RobotParams& p) { return &p.linkage.l7; })},
           {"l8a", num([](RobotParams& p) { return &p.linkage.l8a; })},
           {"l9", num([](RobotParams& p) { return &p.linkage.l9; })},
           {"l10a", num([](RobotParams& p) { return &p.linkage.l10a; })},
           {"l12a", num([](RobotParams& p) { return &p.linkage.l12a; })},
           {"l12b", num([](RobotParams& p) { return &p.linkage.l12b; })},
           {"delta_phi",
            num([](RobotParams& p) { return &p.linkage.delta_phi; })},
           {"fdc_nominal",
            vec<4>([](RobotParams& p) { return &p.linkage.fdc_nominal; })},
       }},
      {"massed",
       {
           {"m_body", num([](RobotParams& p) { return &p.massed.m_body; })},
           {"m_humerus",
            num([](RobotParams& p) { return &p.massed.m_humerus; })},
           {"m_radius",
            num([](RobotParams& p) { return &p.massed.m_radius; })},
           {"I_body_diag",
            diag3([](RobotParams& p) { return &p.massed.I_body; })},
           {"I_humerus_diag",
            diag3([](RobotParams& p) { return &p.massed.I_humerus; })},
           {"I_radius_diag",
            diag3([](RobotParams& p) { return &p.massed.I_radius; })},
           {"l_h", num([](RobotParams& p) { return &p.massed.l_h; })},
           {"l_r", num([](RobotParams& p) { return &p.massed.l_r; })},
           {"alpha", num([](RobotParams& p) { return &p.massed.alpha; })},
           {"l5b", num([](RobotParams& p) { return &p.massed.l5b; })},
           {"p7", vec<3>([](RobotParams& p) { return &p.massed.p7; })},
           {"r6", vec<3>([](RobotParams& p) { return &p.massed.r6; })},
           {"r17", vec<3>([](RobotParams& p) { return &p.massed.r17; })},
           {"l4", num([](RobotParams& p) { return &p.massed.l4; })},
           {"l11", num([](RobotParams& p) { return &p.massed.l11; })},
           {"k_torsion",
            vec<4>([](RobotParams& p) { return &p.massed.k_torsion; })},
           {"b_torsion",
            vec<4>([](RobotParams& p) { return &p.massed.b_torsion; })},
           {"theta_j0",
            vec<4>([](RobotParams& p) { return &p.massed.theta_j0; })},
           {"k_guide", num([](RobotParams& p) { return &p.massed.k_guide; })},
           {"b_guide", num([](RobotParams& p) { return &p.massed.b_guide; })},
           {"gravity", num([](RobotParams& p) { return &p.massed.gravity; })},
       }},
      {"aero",
       {
           {"rho", num([](RobotParams& p) { return &p.aero.rho; })},
           {"chord", num([](RobotParams& p) { return &p.aero.chord; })},
           {"span_h", num([](RobotParams& p) { return &p.aero.span_h; })},
           {"span_r", num([](RobotParams& p) { return &p.aero.span_r; })},
           {"ac_chord_offset",
            num([](RobotParams& p) { return &p.aero.ac_chord_offset; })},
           {"v_inf", vec<3>([](RobotParams& p) { return &p.aero.v_inf; })},
           {"n_span", integer([](RobotParams& p) { return &p.aero.n_span; })},
           {"n_chord",
            integer([](RobotParams& p) { return &p.aero.n_chord; })},
           {"enabled",
            boolean([](RobotParams& p) { return &p.aero.enabled; })},
       }},
      {"control",
       {
           {"k_d1", num([](RobotParams& p) { return &p.control.k_d1; })},
           {"k_p2", vec<4>([](RobotParams& p) { return &p.control.k_p2; })},
           {"k_d2", vec<4>([](RobotParams& p) { return &p.control.k_d2; })},
           {"k_c", vec<4>([](RobotParams& p) { return &p.control.k_c; })},
           {"flap_hz",
            {[](const RobotParams& p) {
               return fmt(p.control.omega_ref / (2.0 * M_PI));
             },
             [](RobotParams& p, const std::string& s) {
               p.control.omega_ref = 2.0 * M_PI * parse_double(s);
             }}},
           {"theta_y_ref",
            num([](RobotParams& p) { return &p.control.theta_y_ref; })},
           {"l_ref_zp",
            vec<4>([](RobotParams& p) { return &p.control.l_ref_zp; })},
           {"l_min",
            vec<4>([](RobotParams& p) { return &p.control.l_min_override; })},
           {"l_max",
            vec<4>([](RobotParams& p) { return &p.control.l_max_override; })},
       }},
      {"sim",
       {
           {"dt", num([](RobotParams& p) { return &p.sim.dt; })},
           {"t_end", num([](RobotParams& p) { return &p.sim.t_end; })},
           {"projection_tol",
            num([](RobotParams& p) { return &p.sim.projection_tol; })},
           {"max_newton_iters",
            integer([](RobotParams& p) { return &p.sim.max_newton_iters; })},
           {"decimation",
            integer([](RobotParams& p) { return &p.sim.decimation; })},
           {"reorthonormalize",
            boolean([](RobotParams& p) { return &p.sim.reorthonormalize; })},
           {"conventional_momentum_sign",
            boolean([](RobotParams& p) {
              return &p.sim.conventional_momentum_sign;
            })},
       }},
      {"optim",
       {
           {"w1", num([](RobotParams& p) { return &p.optim.w1; })},
           {"w2", num([](RobotParams& p) { return &p.optim.w2; })},
           {"w3", num([](RobotParams& p) { return &p.optim.w3; })},
           {"horizon", num([](RobotParams& p) { return &p.optim.horizon; })},
           {"max_evals",
            integer([](RobotParams& p) { return &p.optim.max_evals; })},
           {"simplex_tol",
            num([](RobotParams& p) { return &p.optim.simplex_tol; })},
           {"pitch_bound",
            num([](RobotParams& p) { return &p.optim.pitch_bound; })},
           {"kc_bound",
            num([](RobotParams& p) { return &p.optim.kc_bound; })},
           {"seed", u64([](RobotParams& p) { return &p.optim.seed; })},
       }},
  };
  return *s;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

RobotParams load_config(const std::string& document) {
  RobotParams params;
  std::istringstream is(document);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ParseError("line " + std::to_string(lineno) +
                         ": unterminated section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    bool found = false;
    for (const auto& [sec, keys] : schema()) {
      if (sec != section) continue;
      const auto it = keys.find(key);
      if (it != keys.end()) {
        it->second.set(params, value);
        found = true;
      }
      break;
    }
    if (!found) {
      throw ParseError("line " + std::to_string(lineno) + ": unknown key '" +
                       section + "." + key + "'");
    }
  }
  params.validate();
  // Assembly check: the configured linkage must close at theta1 = 0.
  try {
    assemble(params.linkage, 0.0, params.linkage.fdc_nominal,
             default_assembly_guess());
  } catch (const std::runtime_error& e) {
    throw ValidationError(std::string("default linkage does not assemble at "
                                      "theta1 = 0: ") + e.what());
  }
  return params;
}

RobotParams load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return load_config(os.str());
}

std::string save_config(const RobotParams& params) {
  std::ostringstream os;
  for (const auto& [sec, keys] : schema()) {
    os << '[' << sec << "]\n";
    for (const auto& [key, binding] : keys) {
      os << key << " = " << binding.get(params) << '\n';
    }
    os << '\n';
  }
  return os.str();
}

void apply_override(RobotParams& params, const std::string& dotted_key,
                    const std::string& value) {
  const std::size_t dot = dotted_key.find('.');
  if (dot == std::string::npos) {
    throw ParseError("override key must be section.key: " + dotted_key);
  }
  const std::string section = dotted_key.substr(0, dot);
  const std::string key = dotted_key.substr(dot + 1);
  for (const auto& [sec, keys] : schema()) {
    if (sec != section) continue;
    const auto it = keys.find(key);
    if (it != keys.end()) {
      it->second.set(params, value);
      return;
    }
  }
  throw ParseError("unknown override key: " + dotted_key);
}

std::uint64_t config_hash(const RobotParams& params) {
  const std::string doc = save_config(params);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : doc) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace aerobat
