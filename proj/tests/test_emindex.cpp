// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "emaslov/emindex.hpp"

using namespace emaslov;
using Eigen::Vector2d;

namespace {

GeometrySpec flat2() {
  GeometrySpec spec;
  spec.dim = 2;
  spec.metric_index = 0;
  spec.metric = make_constant_field(MatrixXd::Identity(2, 2));
  spec.sigma = make_constant_field(MatrixXd::Zero(2, 2));
  return spec;
}

GeometrySpec landau(double b) {
  GeometrySpec spec = flat2();
  MatrixXd s(2, 2);
  s << 0, b, -b, 0;
  spec.sigma = make_constant_field(s);
  return spec;
}

GeometrySpec sphere() {
  GeometrySpec spec;
  spec.dim = 2;
  spec.metric_index = 0;
  spec.metric = make_round_sphere_metric();
  spec.sigma = make_constant_field(MatrixXd::Zero(2, 2));
  spec.chart_ok = [](const VectorXd& x) { return x[0] > 1e-3 && x[0] < M_PI - 1e-3; };
  return spec;
}

GeometrySpec minkowski(double e_field) {
  GeometrySpec spec;
  spec.dim = 2;
  spec.metric_index = 1;
  Vector2d diag(-1.0, 1.0);
  spec.metric = make_constant_field(diag.asDiagonal());
  MatrixXd s(2, 2);
  s << 0, -e_field, e_field, 0;
  spec.sigma = make_constant_field(s);
  return spec;
}

struct Setup {
  Trajectory traj;
  ParallelFrame frame;
  TransferPath transfer;
  EMLagrangianSetup em;
};

Setup make(const GeometrySpec& spec, const Vector2d& x0, const Vector2d& v0, double T) {
  Setup s{integrate_em_geodesic(spec, x0, v0, T), {}, {}, {}};
  s.frame = build_parallel_frame(s.traj);
  s.transfer = build_transfer(s.traj, s.frame, JacobiFlavor::ordinary);
  s.em = build_setup(s.traj, s.transfer);
  return s;
}

Setup make_landau(double T) { return make(landau(1.0), Vector2d::Zero(), Vector2d(1, 0), T); }
Setup make_sphere(double T) {
  return make(sphere(), Vector2d(M_PI / 2.0, 0.0), Vector2d(0, 1), T);
}
Setup make_flat(double T) { return make(flat2(), Vector2d::Zero(), Vector2d(1, 0), T); }

}  // namespace

TEST_CASE("ell_check(0) is exactly the vertical") {
  Setup s = make_flat(1.0);
  MatrixXd f0 = s.em.ell_check(0.0);
  CHECK(largest_principal_angle(f0, s.em.vertical.a) < 1e-10);
}

TEST_CASE("free motion: ell_check(t) = {(-t w, w)}") {
  Setup s = make_flat(2.0);
  for (double t : {0.5, 1.0, 1.9}) {
    MatrixXd expected(4, 2);
    expected.topRows(2) = -t * MatrixXd::Identity(2, 2);
    expected.bottomRows(2) = MatrixXd::Identity(2, 2);
    // the angle itself has an acos cancellation floor near 1e-8
    CHECK(largest_principal_angle(s.em.ell_check(t), expected) < 1e-7);
  }
}

TEST_CASE("the setup frames are Lagrangian and S lies in L") {
  for (Setup s : {make_flat(1.0), make_landau(1.5 * M_PI), make_sphere(1.5 * M_PI),
                  make(minkowski(1.0), Vector2d::Zero(), Vector2d(1, 0), 1.0)}) {
    // make_lagrangian already validated both reference frames at build time
    // S is the first column of the L frame by construction; check it spans with the rest
    Eigen::JacobiSVD<MatrixXd> svd(s.em.l_ref.a);
    CHECK(svd.singularValues()[1] > 1e-8);
    // ell_check never meets the S line
    for (int k = 0; k <= 40; ++k) {
      const double t = s.traj.T * k / 40.0;
      CHECK(smallest_principal_angle(s.em.ell_check(t), s.em.s0) > 1e-6);
    }
  }
}

TEST_CASE("kappa = 0 has no energy-level reference Lagrangian") {
  Trajectory null_traj =
      integrate_em_geodesic(minkowski(0.0), Vector2d::Zero(), Vector2d(1, 1), 1.0);
  ParallelFrame frame = build_parallel_frame(null_traj);
  TransferPath transfer = build_transfer(null_traj, frame, JacobiFlavor::ordinary, 64);
  CHECK_THROWS_AS(build_setup(null_traj, transfer), ZeroEnergy);
}

TEST_CASE("flat space: both Maslov indices vanish") {
  Setup s = make_flat(1.0);
  CHECK(ordinary_maslov(s.em, 0.25, 1.0) == 0);
  CHECK(ec_maslov(s.em, 0.25, 1.0) == 0);
}

TEST_CASE("sphere at T = 3 pi / 2: both Maslov indices equal +1") {
  Setup s = make_sphere(1.5 * M_PI);
  const double eps = M_PI / 2.0;
  CHECK(ordinary_maslov(s.em, eps, s.traj.T) == 1);
  CHECK(ec_maslov(s.em, eps, s.traj.T) == 1);
}

TEST_CASE("Landau at T = 3 pi / 2: mu = 0 and mu_k = +1") {
  Setup s = make_landau(1.5 * M_PI);
  const double eps = M_PI / 2.0;
  CHECK(ordinary_maslov(s.em, eps, s.traj.T) == 0);
  CHECK(ec_maslov(s.em, eps, s.traj.T) == 1);
}

TEST_CASE("Landau long window: mu = +2 across the double crossing, mu_k = +3") {
  Setup s = make_landau(3.5 * M_PI);
  const double eps = M_PI / 2.0;
  CHECK(ordinary_maslov(s.em, eps, s.traj.T) == 2);
  CHECK(ec_maslov(s.em, eps, s.traj.T) == 3);
}

TEST_CASE("endpoint on a conjugate instant is rejected") {
  Setup s = make_sphere(1.5 * M_PI);
  CHECK_THROWS_AS(ordinary_maslov(s.em, M_PI / 2.0, M_PI), EndpointOnCycle);
  Setup l = make_landau(3.0 * M_PI);
  CHECK_THROWS_AS(ec_maslov(l.em, M_PI / 2.0, 3.0 * M_PI), EndpointOnCycle);
}

TEST_CASE("J*-slope products match the closed forms") {
  SUBCASE("flat: 2 kappa / s") {
    Setup s = make_flat(2.0);
    for (double t : {0.5, 1.0, 1.7})
      CHECK(jstar_slope_product(s.em, t) ==
            doctest::Approx(2.0 * s.traj.kappa / t).epsilon(1e-8));
  }
  SUBCASE("Landau: (b/2) cot(b s / 2)") {
    Setup s = make_landau(1.5 * M_PI);
    for (double t : {0.5, 2.0, 4.0})
      CHECK(jstar_slope_product(s.em, t) ==
            doctest::Approx(0.5 / std::tan(0.5 * t)).epsilon(1e-8));
  }
  SUBCASE("Minkowski line: 2 kappa / s < 0") {
    Setup s = make(minkowski(0.0), Vector2d::Zero(), Vector2d(1, 0), 1.0);
    CHECK(jstar_slope_product(s.em, 0.8) == doctest::Approx(-1.0 / 0.8).epsilon(1e-8));
  }
  SUBCASE("ordinary conjugate instant rejected") {
    Setup s = make_landau(2.5 * M_PI);
    CHECK_THROWS_AS(jstar_slope_product(s.em, 2.0 * M_PI), ConjugateEndpoint);
  }
}

TEST_CASE("Kashiwara difference: direct evaluation equals the sign table") {
  SUBCASE("flat, kappa > 0: difference 0") {
    Setup s = make_flat(1.0);
    KashiwaraDifference kd = kashiwara_difference(s.em, 0.25, 1.0);
    CHECK(kd.direct == 0);
    CHECK(kd.sign_table == 0);
  }
  SUBCASE("Minkowski timelike line, kappa < 0: difference 0 with flipped table signs") {
    Setup s = make(minkowski(0.0), Vector2d::Zero(), Vector2d(1, 0), 1.0);
    KashiwaraDifference kd = kashiwara_difference(s.em, 0.25, 1.0);
    CHECK(kd.direct == 0);
    CHECK(kd.sign_table == 0);
  }
  SUBCASE("Landau at 3 pi / 2: difference +1") {
    Setup s = make_landau(1.5 * M_PI);
    KashiwaraDifference kd = kashiwara_difference(s.em, M_PI / 2.0, s.traj.T);
    CHECK(kd.direct == 1);
    CHECK(kd.sign_table == 1);
  }
}

TEST_CASE("mu_k - mu from two Maslov runs equals the Kashiwara difference") {
  struct Case {
    Setup s;
    double eps;
  };
  for (Case c : {Case{make_landau(1.5 * M_PI), M_PI / 2.0},
                 Case{make_sphere(1.5 * M_PI), M_PI / 2.0}, Case{make_flat(1.0), 0.25},
                 Case{make(minkowski(1.0), Vector2d::Zero(), Vector2d(1, 0), 1.0), 0.25}}) {
    const double T = c.s.traj.T;
    const int mu = ordinary_maslov(c.s.em, c.eps, T);
    const int mu_k = ec_maslov(c.s.em, c.eps, T);
    KashiwaraDifference kd = kashiwara_difference(c.s.em, c.eps, T);
    CHECK(mu_k - mu == kd.direct);
  }
}

TEST_CASE("crossing times of ell_check match the conjugate instants") {
  SUBCASE("Landau: vertical crossings at 2 pi, L crossings at k pi") {
    Setup s = make_landau(3.2 * M_PI);
    std::vector<double> vert =
        reference_crossing_times(s.em, s.em.vertical, s.traj.T / 2048, s.traj.T);
    REQUIRE(vert.size() == 1);
    CHECK(std::abs(vert[0] - 2.0 * M_PI) < 1e-7);
    auto ord_instants = find_conjugate_instants(s.transfer, s.traj.T / 2048, s.traj.T);
    REQUIRE(ord_instants.size() == 1);
    CHECK(std::abs(vert[0] - ord_instants[0].t) < 1e-7);
    std::vector<double> lref =
        reference_crossing_times(s.em, s.em.l_ref, s.traj.T / 2048, s.traj.T);
    REQUIRE(lref.size() == 3);
    for (int k = 0; k < 3; ++k) CHECK(std::abs(lref[k] - (k + 1) * M_PI) < 1e-7);

    TransferPath ec = build_transfer(s.traj, s.frame, JacobiFlavor::energy_constrained);
    auto ec_instants = find_conjugate_instants(ec, s.traj.T / 2048, s.traj.T);
    REQUIRE(ec_instants.size() == lref.size());
    for (size_t k = 0; k < lref.size(); ++k) CHECK(std::abs(lref[k] - ec_instants[k].t) < 1e-7);
  }
  SUBCASE("sphere: both references cross at pi (sigma = 0)") {
    Setup s = make_sphere(1.5 * M_PI);
    std::vector<double> vert =
        reference_crossing_times(s.em, s.em.vertical, s.traj.T / 2048, s.traj.T);
    std::vector<double> lref =
        reference_crossing_times(s.em, s.em.l_ref, s.traj.T / 2048, s.traj.T);
    REQUIRE(vert.size() == 1);
    REQUIRE(lref.size() == 1);
    CHECK(std::abs(vert[0] - M_PI) < 1e-7);
    CHECK(std::abs(lref[0] - M_PI) < 1e-7);
  }
}

TEST_CASE("crossing signature across the Landau ec instant matches sig(g_t | J')") {
  Setup s = make_landau(1.5 * M_PI);
  auto path = [&](double t) { return s.em.ell_check(t); };
  CrossingData crossing = crossing_signature(s.em.space, path, s.em.l_ref, M_PI);
  REQUIRE(crossing.kernel_dim == 1);
  CHECK(crossing.nondegenerate);

  TransferPath ec = build_transfer(s.traj, s.frame, JacobiFlavor::energy_constrained);
  auto instants = find_conjugate_instants(ec, s.traj.T / 2048, s.traj.T);
  REQUIRE(instants.size() == 1);
  CHECK(crossing.signature == instants[0].signature);
  CHECK(crossing.signature == 1);

  // the Maslov index across the instant agrees as well
  LagrangianPath window = s.em.sampled_path(M_PI - 0.3, M_PI + 0.3, 128);
  CHECK(maslov_index(s.em.space, window, s.em.l_ref) == instants[0].signature);
}
