// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "emaslov/emindex.hpp"
#include "emaslov/specflow.hpp"

namespace emaslov {

/// One fully specified run: geometry plus initial data and run parameters.
struct RunInputs {
  std::string system_id = "custom";
  GeometrySpec spec;
  VectorXd x0, v0;
  double T = 0.0;
  int elements = 128;
  std::uint64_t seed = 1;

  static RunInputs from_config(const ConfigFile& config, const std::string& system_id = "custom");
};

/// All intermediate artifacts of one run, built once and shared.
struct Pipeline {
  RunInputs inputs;
  Trajectory traj;
  ParallelFrame frame;
  FoulonData foulon;
  TransferPath transfer_ordinary;
  TransferPath transfer_ec;
  std::vector<ConjugateInstant> instants_ordinary;
  std::vector<ConjugateInstant> instants_ec;
  double epsilon = 0.0;
};

Pipeline build_pipeline(const RunInputs& inputs);

/// One detected crossing of ell_check with a reference Maslov cycle.
struct ReferenceCrossing {
  double t = 0.0;
  std::string reference;  // "vertical" or "energy_level"
  int signature = 0;
  bool nondegenerate = false;
};

struct IndexReport {
  std::string system;
  double kappa = 0.0;
  double T = 0.0;
  double epsilon = 0.0;
  int elements = 0;
  std::uint64_t seed = 0;
  std::vector<ConjugateInstant> ordinary_instants;
  std::vector<ConjugateInstant> ec_instants;
  std::vector<ReferenceCrossing> crossings;
  int mu_ordinary = 0;
  int mu_ec = 0;
  int sf_ordinary = 0;
  int sf_ec = 0;
  int kashiwara_difference_direct = 0;
  int kashiwara_difference_signtable = 0;
  bool verdict_sf_eq_neg_mu = false;
  bool verdict_sfk_eq_neg_muk = false;
  bool verdict_difference_identity = false;
  bool bifurcation_predicted = false;

  bool all_verdicts() const {
    return verdict_sf_eq_neg_mu && verdict_sfk_eq_neg_muk && verdict_difference_identity;
  }
  nlohmann::json to_json() const;
};

/// Full pipeline: conjugate scans, endpoint checks, both Maslov indices, both
/// spectral flows, the Kashiwara difference two ways, and the verdicts.
IndexReport run_report(const Pipeline& pipeline);

struct ProbeBranch {
  VectorXd w;           // initial velocity on the kappa level
  double meeting_time;  // tau with gamma_w(tau) = gamma(target_time)
  double target_time;   // parameter of the met point on the base geodesic
  double residual;      // |gamma_w(tau) - gamma(target_time)|
  double energy_error;  // |E(p, w) - kappa|
};

struct BifurcationProbeResult {
  double t0 = 0.0;
  std::vector<ProbeBranch> branches;
  bool found() const { return !branches.empty(); }
  nlohmann::json to_json() const;
};

struct ProbeOptions {
  std::vector<double> deltas = {0.01, 0.03, 0.1};
  std::vector<double> target_offsets = {0.0, -0.02, 0.02, -0.05, 0.05};
  double residual_tol = 1e-8;
  double distinctness = 1e-6;
  int max_newton_iters = 40;
};

/// Search for distinct same-energy geodesics from gamma(0) meeting the base
/// geodesic at points gamma(t), t near t0. Numerical evidence only.
BifurcationProbeResult bifurcation_probe(const Pipeline& pipeline, double t0,
                                         const ProbeOptions& options = {});

/// Pinned gallery systems.
std::vector<std::string> gallery_system_names();
std::string gallery_config_text(const std::string& name);

/// Runs every gallery system, writes reports and CSV traces under outdir,
/// returns 0 iff every verdict holds.
int run_gallery(const std::string& outdir, bool json_aggregate, std::ostream& log);

// CSV writers (formats pinned by the external interfaces)
void write_geodesic_csv(const Trajectory& traj, int samples, std::ostream& os);
void write_conjugate_csv(const TransferPath& ordinary, const TransferPath& ec, double a, double b,
                         int samples, std::ostream& os);
void write_eigen_csv(const std::vector<EigenTraceRow>& rows, std::ostream& os);

}  // namespace emaslov
