// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "emaslov/geometry.hpp"

using namespace emaslov;
using Eigen::Vector2d;
using Eigen::Vector3d;

namespace {

GeometrySpec flat_spec(int dim) {
  GeometrySpec spec;
  spec.dim = dim;
  spec.metric_index = 0;
  spec.metric = make_constant_field(MatrixXd::Identity(dim, dim));
  spec.sigma = make_constant_field(MatrixXd::Zero(dim, dim));
  return spec;
}

GeometrySpec sphere_spec() {
  GeometrySpec spec;
  spec.dim = 2;
  spec.metric_index = 0;
  spec.metric = make_round_sphere_metric();
  spec.sigma = make_constant_field(MatrixXd::Zero(2, 2));
  return spec;
}

GeometrySpec landau_spec(double b) {
  GeometrySpec spec = flat_spec(2);
  MatrixXd s(2, 2);
  s << 0, b, -b, 0;
  spec.sigma = make_constant_field(s);
  return spec;
}

GeometrySpec minkowski_field_spec(double e) {
  GeometrySpec spec;
  spec.dim = 2;
  spec.metric_index = 1;
  Vector2d diag(-1.0, 1.0);
  spec.metric = make_constant_field(diag.asDiagonal());
  MatrixXd s(2, 2);
  s << 0, -e, e, 0;
  spec.sigma = make_constant_field(s);
  return spec;
}

// curved 2d polynomial metric with a position-dependent closed sigma
GeometrySpec poly_spec() {
  GeometrySpec spec;
  spec.dim = 2;
  spec.metric_index = 0;
  std::vector<std::vector<Polynomial>> g(2, std::vector<Polynomial>(2));
  g[0][0] = Polynomial::parse("1 + x0^2 + x1^2", 2);
  g[1][1] = Polynomial::parse("1 + x0^2", 2);
  g[0][1] = Polynomial::parse("0.3*x0*x1", 2);
  g[1][0] = g[0][1];
  spec.metric = make_poly_field(2, std::move(g));
  std::vector<std::vector<Polynomial>> s(2, std::vector<Polynomial>(2));
  s[0][1] = Polynomial::parse("1 + x0", 2);
  s[1][0] = Polynomial::parse("-1 - x0", 2);
  spec.sigma = make_poly_field(2, std::move(s));
  return spec;
}

}  // namespace

TEST_CASE("flat metric has vanishing Christoffels and curvature") {
  GeometrySpec spec = flat_spec(2);
  GeometryEval ev = evaluate_geometry(spec, Vector2d(0.7, -0.3));
  for (const MatrixXd& gamma : ev.christoffel) CHECK(gamma.cwiseAbs().maxCoeff() == 0.0);
  CHECK(ev.curvature_operator(Vector2d(1, 0), Vector2d(0, 1)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("round sphere Christoffel Gamma^phi_{theta phi} = cot(theta)") {
  GeometrySpec spec = sphere_spec();
  const double theta = M_PI / 3.0;
  GeometryEval ev = evaluate_geometry(spec, Vector2d(theta, 0.4));
  CHECK(ev.christoffel[1](0, 1) == doctest::Approx(1.0 / std::tan(theta)).epsilon(1e-10));
  CHECK(ev.christoffel[1](1, 0) == doctest::Approx(1.0 / std::tan(theta)).epsilon(1e-10));
  // metric compatibility: d_k g_ij = Gamma^l_{ki} g_lj + Gamma^l_{kj} g_il
  for (int k = 0; k < 2; ++k)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        double rhs = 0;
        for (int l = 0; l < 2; ++l)
          rhs += ev.christoffel[l](k, i) * ev.g(l, j) + ev.christoffel[l](k, j) * ev.g(i, l);
        CHECK(ev.dg[k](i, j) == doctest::Approx(rhs).epsilon(1e-9));
      }
}

TEST_CASE("round sphere sectional curvature is +1 in the stated convention") {
  GeometrySpec spec = sphere_spec();
  const double theta = M_PI / 3.0;
  GeometryEval ev = evaluate_geometry(spec, Vector2d(theta, -1.2));
  Vector2d e1(1.0, 0.0);
  Vector2d e2(0.0, 1.0 / std::sin(theta));
  VectorXd r = ev.curvature_apply(e1, e2, e2);  // R(e1, e2) e2
  CHECK(e1.dot(ev.g * r) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("Minkowski is flat") {
  GeometrySpec spec = minkowski_field_spec(0.0);
  GeometryEval ev = evaluate_geometry(spec, Vector2d(0.2, 0.9));
  CHECK(ev.curvature_operator(Vector2d(1, 1), Vector2d(1, -1)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("first Bianchi identity and argument antisymmetry on a curved metric") {
  GeometrySpec spec = poly_spec();
  GeometryEval ev = evaluate_geometry(spec, Vector2d(0.31, -0.17));
  const int n = 2;
  auto unit = [n](int i) { return VectorXd::Unit(n, i); };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        VectorXd cyc = ev.curvature_apply(unit(k), unit(i), unit(j)) +
                       ev.curvature_apply(unit(i), unit(j), unit(k)) +
                       ev.curvature_apply(unit(j), unit(k), unit(i));
        CHECK(cyc.cwiseAbs().maxCoeff() < 1e-9);
      }
  // antisymmetry in the R(., .) arguments
  Vector2d u(1.0, 0.0), v(0.5, 2.0), w(-0.3, 0.8);
  VectorXd r1 = ev.curvature_apply(u, v, w);  // R(u, v) w
  VectorXd r2 = ev.curvature_apply(v, u, w);  // R(v, u) w
  CHECK((r1 + r2).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("Lorentz force matches the defining relation") {
  SUBCASE("Landau plane, b = 1") {
    GeometryEval ev = evaluate_geometry(landau_spec(1.0), Vector2d(0.0, 0.0));
    MatrixXd expected(2, 2);
    expected << 0, 1, -1, 0;
    CHECK((ev.lorentz - expected).cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("sigma = 0 gives Y = 0") {
    GeometryEval ev = evaluate_geometry(flat_spec(3), Vector3d(1, 2, 3));
    CHECK(ev.lorentz.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("Minkowski with unit field: Y = [[0,1],[1,0]]") {
    GeometryEval ev = evaluate_geometry(minkowski_field_spec(1.0), Vector2d(0.0, 0.0));
    MatrixXd expected(2, 2);
    expected << 0, 1, 1, 0;
    CHECK((ev.lorentz - expected).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("defining relation and g-antisymmetry at random points") {
  GeometrySpec spec = poly_spec();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  for (int trial = 0; trial < 1000; ++trial) {
    Vector2d x(dist(rng), dist(rng));
    GeometryEval ev = evaluate_geometry(spec, x);
    Vector2d u(dist(rng), dist(rng)), v(dist(rng), dist(rng));
    const double scale = 1.0 + ev.sigma.cwiseAbs().maxCoeff();
    CHECK(std::abs(u.dot(ev.sigma * v) - u.dot(ev.g * (ev.lorentz * v))) < 1e-10 * scale);
    CHECK(std::abs(u.dot(ev.g * (ev.lorentz * u))) < 1e-10 * scale);
  }
}

TEST_CASE("nabla Y: constant field on flat space is parallel") {
  GeometryEval ev = evaluate_geometry(landau_spec(2.5), Vector2d(0.4, 0.1));
  for (const MatrixXd& m : ev.nabla_lorentz) CHECK(m.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("nabla Y: closed linear field on flat R^3") {
  // sigma = x0 dx0 ^ dx1 (closed); hand derivative: d_0 Y = [[0,1,0],[-1,0,0],[0,0,0]]
  GeometrySpec spec = flat_spec(3);
  std::vector<std::vector<Polynomial>> s(3, std::vector<Polynomial>(3));
  s[0][1] = Polynomial::parse("x0", 3);
  s[1][0] = Polynomial::parse("-1*x0", 3);
  spec.sigma = make_poly_field(3, std::move(s));
  GeometryEval ev = evaluate_geometry(spec, Vector3d(0.7, -0.2, 0.5));
  MatrixXd expected = MatrixXd::Zero(3, 3);
  expected(0, 1) = 1.0;
  expected(1, 0) = -1.0;
  CHECK((ev.nabla_lorentz[0] - expected).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(ev.nabla_lorentz[1].cwiseAbs().maxCoeff() < 1e-12);
  CHECK(closedness_residual(ev) < 1e-8);
}

TEST_CASE("non-closed sigma is a hard error") {
  // sigma = x0 dx1 ^ dx2 has d sigma = dx0 ^ dx1 ^ dx2 != 0
  GeometrySpec spec = flat_spec(3);
  std::vector<std::vector<Polynomial>> s(3, std::vector<Polynomial>(3));
  s[1][2] = Polynomial::parse("x0", 3);
  s[2][1] = Polynomial::parse("-1*x0", 3);
  spec.sigma = make_poly_field(3, std::move(s));
  CHECK_THROWS_AS(evaluate_geometry(spec, Vector3d(0.1, 0.2, 0.3)), Error);
}

TEST_CASE("cyclic nabla-Y identity at random points") {
  GeometrySpec spec = poly_spec();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  for (int trial = 0; trial < 100; ++trial) {
    Vector2d x(dist(rng), dist(rng));
    CHECK(closedness_residual(evaluate_geometry(spec, x)) < 1e-8);
  }
  GeometryEval ev = evaluate_geometry(spec, Vector2d(0.21, 0.05));
  for (const MatrixXd& m : ev.nabla_lorentz) {
    MatrixXd gm = ev.g * m;
    CHECK((gm + gm.transpose()).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("finite-difference provider agrees with the analytic one") {
  for (const GeometrySpec& spec : {sphere_spec(), poly_spec()}) {
    GeometrySpec fd = spec;
    fd.provider = DerivativeProvider::finite_difference;
    const Vector2d x(1.1, 0.3);  // valid for both charts
    GeometryEval a = evaluate_geometry(spec, x);
    GeometryEval b = evaluate_geometry(fd, x);
    for (int k = 0; k < 2; ++k) {
      CHECK((a.dg[k] - b.dg[k]).cwiseAbs().maxCoeff() < 1e-6);
      CHECK((a.christoffel[k] - b.christoffel[k]).cwiseAbs().maxCoeff() < 1e-6);
      CHECK((a.nabla_lorentz[k] - b.nabla_lorentz[k]).cwiseAbs().maxCoeff() < 1e-6);
      for (int l = 0; l < 2; ++l)
        CHECK((a.d2g[k][l] - b.d2g[k][l]).cwiseAbs().maxCoeff() < 1e-6);
    }
    MatrixXd ra = a.curvature_operator(Vector2d(1, 0), Vector2d(0, 1));
    MatrixXd rb = b.curvature_operator(Vector2d(1, 0), Vector2d(0, 1));
    CHECK((ra - rb).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("area field on the sphere is b sin(theta) d theta ^ d phi") {
  GeometrySpec spec = sphere_spec();
  spec.sigma = make_area_field(spec.metric, 2.0);
  const Vector2d x(0.8, -0.4);
  GeometryEval ev = evaluate_geometry(spec, x);
  CHECK(ev.sigma(0, 1) == doctest::Approx(2.0 * std::sin(0.8)).epsilon(1e-12));
  // Lorentz force of an area field is g-antisymmetric with |Y v| = b |v|
  Vector2d v(0.3, 1.1);
  const double vnorm = std::sqrt(v.dot(ev.g * v));
  Vector2d yv = ev.lorentz * v;
  CHECK(std::sqrt(yv.dot(ev.g * yv)) == doctest::Approx(2.0 * vnorm).epsilon(1e-10));
  // analytic derivative path agrees with finite differences
  GeometrySpec fd = spec;
  fd.provider = DerivativeProvider::finite_difference;
  GeometryEval ev_fd = evaluate_geometry(fd, x);
  for (int k = 0; k < 2; ++k)
    CHECK((ev.dsigma[k] - ev_fd.dsigma[k]).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("degenerate metric is rejected") {
  GeometrySpec spec;
  spec.dim = 2;
  spec.metric_index = 0;
  std::vector<std::vector<Polynomial>> g(2, std::vector<Polynomial>(2));
  g[0][0] = Polynomial::parse("x0", 2);  // vanishes at x0 = 0
  g[1][1] = Polynomial::parse("1", 2);
  spec.metric = make_poly_field(2, std::move(g));
  spec.sigma = make_constant_field(MatrixXd::Zero(2, 2));
  CHECK_THROWS_AS(evaluate_geometry(spec, Vector2d(0.0, 0.0)), DegenerateMetric);
  CHECK_NOTHROW(evaluate_geometry(spec, Vector2d(2.0, 0.0)));
}

TEST_CASE("analytic provider without derivatives raises DerivativeUnavailable") {
  class ValueOnly final : public MatrixField {
   public:
    MatrixXd value(const VectorXd&) const override { return MatrixXd::Identity(2, 2); }
  };
  GeometrySpec spec;
  spec.dim = 2;
  spec.metric_index = 0;
  spec.metric = std::make_shared<ValueOnly>();
  spec.sigma = make_constant_field(MatrixXd::Zero(2, 2));
  CHECK_THROWS_AS(evaluate_geometry(spec, Vector2d(0, 0)), DerivativeUnavailable);
  spec.provider = DerivativeProvider::finite_difference;
  CHECK_NOTHROW(evaluate_geometry(spec, Vector2d(0, 0)));
}

TEST_CASE("chart validity region is enforced") {
  GeometrySpec spec = sphere_spec();
  spec.chart_ok = [](const VectorXd& x) { return x[0] > 1e-3 && x[0] < M_PI - 1e-3; };
  CHECK_THROWS_AS(evaluate_geometry(spec, Vector2d(1e-5, 0.0)), ChartExit);
}
