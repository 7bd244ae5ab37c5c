#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "aerobat/linkage.hpp"

using namespace aerobat;

namespace {

// Deterministic random feasible states: assemble at random crank angles
// and FDC lengths, with random consistent velocities.
LinkageState random_feasible(std::mt19937_64& rng,
                             const LinkageGeometry& geom) {
  std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI);
  std::uniform_real_distribution<double> scale(0.85, 1.15);
  std::uniform_real_distribution<double> rate(-5.0, 5.0);
  LinkageState s;
  Vec4 fdc;
  for (int i = 0; i < 4; ++i) fdc[i] = scale(rng) * geom.fdc_nominal[i];
  s.q = assemble(geom, ang(rng), fdc, default_assembly_guess());
  s.qd[q1i::th1] = 40.0 * rate(rng) / 5.0;
  for (int i = 8; i < 12; ++i) s.qd[i] = 0.02 * rate(rng);
  project(s, geom);
  return s;
}

}  // namespace

TEST_CASE("default guess satisfies the constraints") {
  const LinkageGeometry geom;
  const Vec7 c = constraint_residual(default_assembly_guess(), geom);
  CHECK(c.lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("forward kinematics chain arithmetic") {
  LinkageGeometry geom;
  geom.p1 = Vec2(0.0, 0.0);
  geom.l1 = 1.0;
  geom.l2 = 1.0;
  LinkageState s;  // th1 = th2 = 0
  const LinkagePose pose = forward_kinematics(s, geom);
  CHECK(pose.p3A.isApprox(Vec2(2.0, 0.0)));
  s.q[q1i::th1] = M_PI / 2.0;
  const LinkagePose pose2 = forward_kinematics(s, geom);
  CHECK(pose2.p3A.isApprox(Vec2(0.0, 1.0) + Vec2(1.0, 0.0), 1e-12));
}

TEST_CASE("dual-path joints agree when assembled") {
  const LinkageGeometry geom;
  std::mt19937_64 rng(7);
  for (int k = 0; k < 20; ++k) {
    const LinkageState s = random_feasible(rng, geom);
    const LinkagePose pose = forward_kinematics(s, geom);
    CHECK((pose.p3A - pose.p3B).norm() < 1e-9);
    CHECK((pose.p11A - pose.p11B).norm() < 1e-9);
    CHECK((pose.p15A - pose.p15B).norm() < 1e-9);
  }
}

TEST_CASE("phase constraint row and residual") {
  const LinkageGeometry geom;
  Vec12 q = default_assembly_guess();
  q[q1i::th1] = 1.0;
  q[q1i::th9] = 0.4;
  LinkageGeometry g2 = geom;
  g2.delta_phi = 0.6;
  CHECK(constraint_residual(q, g2)[6] == doctest::Approx(0.0));
  const Mat7x12 m = constraint_jacobian(q, geom);
  Eigen::Matrix<double, 1, 12> expected = Eigen::Matrix<double, 1, 12>::Zero();
  expected[q1i::th1] = 1.0;
  expected[q1i::th9] = -1.0;
  CHECK((m.row(6) - expected).norm() == 0.0);
}

TEST_CASE("jacobian and bias match finite differences") {
  const LinkageGeometry geom;
  std::mt19937_64 rng(42);
  const double eps = 1e-6;
  for (int k = 0; k < 100; ++k) {
    const LinkageState s = random_feasible(rng, geom);
    const Mat7x12 m = constraint_jacobian(s.q, geom);
    for (int j = 0; j < 12; ++j) {
      Vec12 qp = s.q, qm = s.q;
      qp[j] += eps;
      qm[j] -= eps;
      const Vec7 col = (constraint_residual(qp, geom) -
                        constraint_residual(qm, geom)) /
                       (2.0 * eps);
      CHECK((m.col(j) - col).lpNorm<Eigen::Infinity>() < 1e-6);
    }
    // h_A = Mdot qd via central difference along the velocity direction.
    const Vec7 h = constraint_bias(s.q, s.qd, geom);
    const Vec7 h_fd = (constraint_jacobian(s.q + eps * s.qd, geom) -
                       constraint_jacobian(s.q - eps * s.qd, geom)) /
                      (2.0 * eps) * s.qd;
    CHECK((h - h_fd).lpNorm<Eigen::Infinity>() < 1e-5);
  }
}

TEST_CASE("zero velocity gives zero bias") {
  const LinkageGeometry geom;
  const Vec12 q = default_assembly_guess();
  CHECK(constraint_bias(q, Vec12::Zero(), geom).norm() == 0.0);
}

TEST_CASE("assemble is a fixed point on feasible input") {
  const LinkageGeometry geom;
  const Vec12 q0 = default_assembly_guess();
  const Vec12 q = assemble(geom, 0.0, geom.fdc_nominal, q0);
  CHECK((q - q0).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("full revolution continuation at FDC box corners") {
  const LinkageGeometry geom;
  for (int corner = 0; corner < 16; ++corner) {
    Vec4 fdc;
    for (int i = 0; i < 4; ++i) {
      fdc[i] = geom.fdc_nominal[i] * ((corner >> i) & 1 ? 1.2 : 0.8);
    }
    Vec12 guess = default_assembly_guess();
    for (int k = 0; k < 90; ++k) {
      const double th1 = 2.0 * M_PI * k / 90.0;
      CHECK_NOTHROW(guess = assemble(geom, th1, fdc, guess));
    }
  }
}

TEST_CASE("grossly lengthened FDC is unassemblable") {
  const LinkageGeometry geom;
  Vec4 fdc = geom.fdc_nominal;
  fdc[0] *= 5.0;
  CHECK_THROWS_AS(assemble(geom, 0.0, fdc, default_assembly_guess()),
                  AssemblyError);
}

TEST_CASE("coupler branch matches the closed-form four-bar solution") {
  // The first loop is a four-bar: crank l1 at p1, coupler l2, rocker
  // (l3a + l3b) hanging from p4. Solve it by circle intersection and
  // compare angles.
  const LinkageGeometry geom;
  const double r_rock = geom.l3a + geom.fdc_nominal[0];
  Vec12 guess = default_assembly_guess();
  for (int k = 0; k < 50; ++k) {
    const double th1 = 2.0 * M_PI * k / 50.0;
    guess = assemble(geom, th1, geom.fdc_nominal, guess);
    const Vec2 p2 = geom.p1 + geom.l1 * Vec2(std::cos(th1), std::sin(th1));
    const Vec2 d = geom.p4 - p2;
    const double dist = d.norm();
    const double a =
        (geom.l2 * geom.l2 - r_rock * r_rock + dist * dist) / (2.0 * dist);
    const double h2 = geom.l2 * geom.l2 - a * a;
    REQUIRE(h2 >= 0.0);
    const double h = std::sqrt(h2);
    const Vec2 mid = p2 + a * d / dist;
    const Vec2 perp(-d.y() / dist, d.x() / dist);
    // Two branches; pick the one matching the assembled coupler angle.
    const double th2 = guess[q1i::th2];
    double best = 1e9;
    for (double sgn : {-1.0, 1.0}) {
      const Vec2 p3 = mid + sgn * h * perp;
      const double cand = std::atan2(p3.y() - p2.y(), p3.x() - p2.x());
      const double diff = std::abs(std::remainder(cand - th2, 2.0 * M_PI));
      best = std::min(best, diff);
    }
    CHECK(best < 1e-9);
  }
}

TEST_CASE("massless accelerations satisfy the constraint and input rows") {
  const LinkageGeometry geom;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> in(-50.0, 50.0);
  for (int k = 0; k < 20; ++k) {
    const LinkageState s = random_feasible(rng, geom);
    LinkageInput u1;
    for (int i = 0; i < 5; ++i) u1[i] = in(rng);
    const Vec12 qdd = massless_accel(s, u1, geom);
    const Vec7 resid =
        constraint_jacobian(s.q, geom) * qdd + constraint_bias(s.q, s.qd, geom);
    CHECK(resid.lpNorm<Eigen::Infinity>() < 1e-9);
    CHECK(qdd[q1i::th1] == doctest::Approx(u1[0]).epsilon(1e-12));
    for (int i = 0; i < 4; ++i) {
      CHECK(qdd[8 + i] == doctest::Approx(u1[1 + i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("unit crank input maps straight through") {
  const LinkageGeometry geom;
  LinkageState s;
  s.q = default_assembly_guess();
  LinkageInput u1 = LinkageInput::Zero();
  u1[0] = 1.0;
  const Vec12 qdd = massless_accel(s, u1, geom);
  CHECK(qdd[q1i::th1] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("projection restores the manifold and keeps driven coordinates") {
  const LinkageGeometry geom;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> pert(-1e-4, 1e-4);
  for (int k = 0; k < 10; ++k) {
    LinkageState s = random_feasible(rng, geom);
    LinkageState drifted = s;
    for (int j : q1i::free_coords) drifted.q[j] += pert(rng);
    for (int j = 0; j < 12; ++j) drifted.qd[j] += pert(rng);
    const double th1 = drifted.q[q1i::th1];
    const Vec4 fdc = drifted.fdc();
    const double th1d = drifted.qd[q1i::th1];
    const Vec4 fdcd = drifted.fdc_rate();
    project(drifted, geom);
    CHECK(constraint_residual(drifted.q, geom).lpNorm<Eigen::Infinity>() <
          1e-10);
    CHECK((constraint_jacobian(drifted.q, geom) * drifted.qd)
              .lpNorm<Eigen::Infinity>() < 1e-10);
    CHECK(drifted.q[q1i::th1] == th1);
    CHECK(drifted.fdc() == fdc);
    CHECK(drifted.qd[q1i::th1] == th1d);
    CHECK(drifted.fdc_rate() == fdcd);
  }
}

TEST_CASE("sensitivity sweep shapes, determinism and CSV") {
  const LinkageGeometry geom;
  std::vector<Vec4> grid = {geom.fdc_nominal, geom.fdc_nominal};
  const auto paths = sensitivity_sweep(geom, grid, 36);
  REQUIRE(paths.size() == 2);
  CHECK(paths[0].assembled);
  CHECK(paths[0].theta1.size() == 36);
  for (std::size_t k = 0; k < 36; ++k) {
    CHECK(paths[0].p5[k] == paths[1].p5[k]);
    CHECK(paths[0].p16[k] == paths[1].p16[k]);
  }
  const std::string csv = sweep_to_csv(paths);
  CHECK(csv.rfind("fdc1,fdc2,fdc3,fdc4,theta1,p5_y,p5_z,p16_y,p16_z\n", 0) ==
        0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 73);
}

TEST_CASE("each FDC individually reshapes the end-effector paths") {
  const LinkageGeometry geom;
  std::vector<Vec4> grid = {geom.fdc_nominal};
  for (int i = 0; i < 4; ++i) {
    Vec4 fdc = geom.fdc_nominal;
    fdc[i] *= 1.2;
    grid.push_back(fdc);
  }
  const auto paths = sensitivity_sweep(geom, grid, 72);
  for (int i = 1; i <= 4; ++i) {
    REQUIRE(paths[i].assembled);
    double dev = 0.0;
    for (std::size_t k = 0; k < paths[i].theta1.size(); ++k) {
      dev = std::max(dev, (paths[i].p5[k] - paths[0].p5[k]).norm());
      dev = std::max(dev, (paths[i].p16[k] - paths[0].p16[k]).norm());
    }
    CHECK(dev > 1e-4);
  }
}
