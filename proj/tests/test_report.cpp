// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "emaslov/report.hpp"

using namespace emaslov;

namespace {

Pipeline gallery_pipeline(const std::string& name) {
  ConfigFile config = ConfigFile::parse_string(gallery_config_text(name), name);
  return build_pipeline(RunInputs::from_config(config, name));
}

}  // namespace

TEST_CASE("gallery configs parse and pin the energy") {
  for (const std::string& name : gallery_system_names()) {
    ConfigFile config = ConfigFile::parse_string(gallery_config_text(name), name);
    RunInputs inputs = RunInputs::from_config(config, name);
    GeometryEval geo = evaluate_geometry(inputs.spec, inputs.x0);
    const double e0 = 0.5 * inputs.v0.dot(geo.g * inputs.v0);
    const double target = config.section("run").get_double("kappa_target");
    CHECK(e0 == doctest::Approx(target).epsilon(1e-12));
  }
}

TEST_CASE("kappa rescaling adjusts the velocity magnitude") {
  const std::string text = R"(
dim = 2
[metric]
builtin = flat
[initial]
x0 = 0 0
v0 = 2 0
[run]
kappa_target = 0.5
T = 1.0
)";
  RunInputs inputs = RunInputs::from_config(ConfigFile::parse_string(text));
  CHECK(inputs.v0.norm() == doctest::Approx(1.0));

  const std::string bad = R"(
dim = 2
metric_index = 1
[metric]
builtin = minkowski
[initial]
x0 = 0 0
v0 = 1 0
[run]
kappa_target = 0.5
T = 1.0
)";
  // timelike v0 has E < 0; kappa_target > 0 is unreachable by rescaling
  CHECK_THROWS_AS(RunInputs::from_config(ConfigFile::parse_string(bad)), ConfigError);
}

TEST_CASE("flat report: all indices zero, every verdict true") {
  IndexReport report = run_report(gallery_pipeline("flat_trivial"));
  CHECK(report.mu_ordinary == 0);
  CHECK(report.mu_ec == 0);
  CHECK(report.sf_ordinary == 0);
  CHECK(report.sf_ec == 0);
  CHECK(report.kashiwara_difference_direct == 0);
  CHECK(report.all_verdicts());
  CHECK_FALSE(report.bifurcation_predicted);
  CHECK(report.ordinary_instants.empty());
  CHECK(report.ec_instants.empty());
}

TEST_CASE("sphere report: mu = 1, sf = -1 on both pipelines") {
  IndexReport report = run_report(gallery_pipeline("round_sphere"));
  CHECK(report.mu_ordinary == 1);
  CHECK(report.mu_ec == 1);
  CHECK(report.sf_ordinary == -1);
  CHECK(report.sf_ec == -1);
  CHECK(report.all_verdicts());
  CHECK(report.bifurcation_predicted);
}

TEST_CASE("Landau report: mu = 0, sf = 0, |mu_k| = 1 with sf_k = -mu_k") {
  IndexReport report = run_report(gallery_pipeline("landau"));
  CHECK(report.mu_ordinary == 0);
  CHECK(report.sf_ordinary == 0);
  CHECK(report.mu_ec == 1);
  CHECK(report.sf_ec == -1);
  CHECK(report.kashiwara_difference_direct == 1);
  CHECK(report.kashiwara_difference_signtable == 1);
  CHECK(report.all_verdicts());
  CHECK(report.bifurcation_predicted);
}

TEST_CASE("Minkowski reports hold with kappa < 0") {
  for (const std::string& name : {std::string("minkowski_line"), std::string("minkowski_field")}) {
    IndexReport report = run_report(gallery_pipeline(name));
    CHECK(report.kappa == doctest::Approx(-0.5));
    CHECK(report.mu_ordinary == 0);
    CHECK(report.mu_ec == 0);
    CHECK(report.all_verdicts());
  }
}

TEST_CASE("a conjugate horizon is rejected with the offending flavor") {
  ConfigFile config =
      ConfigFile::parse_string(gallery_config_text("round_sphere"), "round_sphere");
  RunInputs inputs = RunInputs::from_config(config, "round_sphere");
  inputs.T = M_PI;  // the conjugate instant itself
  try {
    run_report(build_pipeline(inputs));
    FAIL("expected EndpointConjugate");
  } catch (const EndpointConjugate& e) {
    CHECK(std::string(e.what()).find("conjugate instant") != std::string::npos);
  }
}

TEST_CASE("report JSON carries the pinned schema keys") {
  IndexReport report = run_report(gallery_pipeline("flat_trivial"));
  nlohmann::json j = report.to_json();
  for (const char* key :
       {"system", "kappa", "T", "epsilon", "N", "seed", "ordinary_conjugate_instants",
        "ec_conjugate_instants", "mu_ordinary", "mu_ec", "sf_ordinary", "sf_ec",
        "kashiwara_difference_direct", "kashiwara_difference_signtable", "verdict_sf_eq_neg_mu",
        "verdict_sfk_eq_neg_muk", "verdict_difference_identity", "bifurcation_predicted"})
    CHECK(j.contains(key));
}

TEST_CASE("reports are byte-reproducible for a fixed seed") {
  IndexReport a = run_report(gallery_pipeline("landau"));
  IndexReport b = run_report(gallery_pipeline("landau"));
  CHECK(a.to_json().dump(2) == b.to_json().dump(2));
}

TEST_CASE("bifurcation probe finds a Landau branch at t0 = pi") {
  Pipeline p = gallery_pipeline("landau");
  BifurcationProbeResult result = bifurcation_probe(p, M_PI);
  REQUIRE(result.found());
  const ProbeBranch& branch = result.branches.front();
  CHECK(branch.residual < 1e-8);
  CHECK(branch.energy_error < 1e-10);
  CHECK((branch.w - p.inputs.v0).norm() > 1e-6);
  // all branches stay on the energy level
  for (const ProbeBranch& b : result.branches) CHECK(b.energy_error < 1e-10);
}

TEST_CASE("bifurcation probe on a straight line finds nothing") {
  Pipeline p = gallery_pipeline("flat_trivial");
  BifurcationProbeResult result = bifurcation_probe(p, 0.5);
  CHECK_FALSE(result.found());
}

TEST_CASE("bifurcation probe sees the antipodal great-circle family") {
  Pipeline p = gallery_pipeline("round_sphere");
  BifurcationProbeResult result = bifurcation_probe(p, M_PI);
  REQUIRE(result.found());
  CHECK(result.branches.front().residual < 1e-8);
}

TEST_CASE("geodesic CSV has the pinned columns") {
  Pipeline p = gallery_pipeline("flat_trivial");
  std::ostringstream os;
  write_geodesic_csv(p.traj, 8, os);
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  CHECK(header == "t,x1,x2,v1,v2,E");
  int rows = 0;
  std::string line;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 9);
}

TEST_CASE("conjugate and eigen CSV headers") {
  Pipeline p = gallery_pipeline("flat_trivial");
  std::ostringstream conj;
  write_conjugate_csv(p.transfer_ordinary, p.transfer_ec, 0.01, 1.0, 4, conj);
  CHECK(conj.str().rfind("t,det_ordinary,det_ec,smallest_singular_value\n", 0) == 0);

  FormPath forms(p.foulon, p.traj.kappa, p.inputs.T);
  std::ostringstream eig;
  write_eigen_csv(eigen_trace(forms, 0.25, 1.0, 16, 4), eig);
  CHECK(eig.str().rfind("s,lambda1,lambda2,lambda3,lambda4,lambda5,lambda6,lambda7,lambda8,ind\n",
                        0) == 0);
}

TEST_CASE("mutual-oracle run: magnetic field on the round sphere") {
  // No closed form is asserted here: the symplectic/ODE pipeline and the
  // Galerkin/eigenvalue pipeline must simply agree on integers.
  const std::string text = R"(
dim = 2
metric_index = 0
[metric]
builtin = round_sphere
[sigma]
builtin = area
b = 1.5
[initial]
x0 = 1.5707963267948966 0
v0 = 0 1
[run]
kappa_target = 0.5
T = 3.0
N = 96
seed = 7
)";
  RunInputs inputs = RunInputs::from_config(ConfigFile::parse_string(text), "magnetic_sphere");
  IndexReport report = run_report(build_pipeline(inputs));
  CHECK(report.all_verdicts());
  CHECK(!report.ec_instants.empty());  // strong field focuses within the window
  CHECK(report.mu_ec == -report.sf_ec);
}

TEST_CASE("mutual-oracle run: curved metric with a position-dependent field") {
  // Every geometric ingredient is nonzero here: curvature, nabla Y, sigma.
  const std::string text = R"(
dim = 2
metric_index = 0
[metric]
builtin = poly
entry 0 0 = 1 + 0.1*x1^2
entry 1 1 = 1 + 0.1*x0^2
entry 0 1 = 0.05*x0*x1
[sigma]
builtin = poly
entry 0 1 = 2 + 0.2*x0 + 0.1*x1
[initial]
x0 = 0 0
v0 = 1 0
[run]
kappa_target = 0.5
T = 2.5
N = 96
seed = 7
)";
  RunInputs inputs = RunInputs::from_config(ConfigFile::parse_string(text), "curved_magnetic");
  IndexReport report = run_report(build_pipeline(inputs));
  CHECK(report.all_verdicts());
  CHECK(!report.ec_instants.empty());
}

TEST_CASE("gallery --json emits a machine-readable aggregate") {
  std::ostringstream log;
  const int status = run_gallery("", true, log);
  CHECK(status == 0);
  const std::string text = log.str();
  const size_t start = text.find("[\n");  // the per-system lines end with "[ok]"
  REQUIRE(start != std::string::npos);
  nlohmann::json aggregate = nlohmann::json::parse(text.substr(start));
  REQUIRE(aggregate.is_array());
  CHECK(aggregate.size() == 5);
  for (const auto& entry : aggregate) {
    CHECK(entry["verdict_sfk_eq_neg_muk"].get<bool>());
    CHECK(entry["verdict_sf_eq_neg_mu"].get<bool>());
    CHECK(entry["verdict_difference_identity"].get<bool>());
  }
}

TEST_CASE("gallery run writes five reports and exits cleanly") {
  namespace fs = std::filesystem;
  fs::path outdir = fs::temp_directory_path() / "emaslov_gallery_test";
  fs::remove_all(outdir);
  std::ostringstream log;
  const int status = run_gallery(outdir.string(), false, log);
  CHECK(status == 0);
  int reports = 0;
  for (const std::string& name : gallery_system_names()) {
    if (fs::exists(outdir / (name + "_report.json"))) ++reports;
    CHECK(fs::exists(outdir / (name + "_geodesic.csv")));
    CHECK(fs::exists(outdir / (name + "_conjugate.csv")));
    CHECK(fs::exists(outdir / (name + "_specflow.csv")));
  }
  CHECK(reports == 5);
  fs::remove_all(outdir);
}
