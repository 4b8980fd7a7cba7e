// SPDX-License-Identifier: Apache-2.0
#include "emaslov/report.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace emaslov {

namespace {

constexpr double kPi = 3.14159265358979323846;

nlohmann::json instant_to_json(const ConjugateInstant& inst) {
  nlohmann::json j;
  j["t"] = inst.t;
  j["multiplicity"] = inst.multiplicity;
  j["signature"] = inst.signature;
  j["nondegenerate"] = inst.nondegenerate;
  j["even_contact"] = inst.even_contact;
  if (inst.flavor == JacobiFlavor::energy_constrained) j["constraint_c"] = inst.constraint_c;
  return j;
}

}  // namespace

RunInputs RunInputs::from_config(const ConfigFile& config, const std::string& system_id) {
  RunInputs in;
  in.system_id = system_id;
  in.spec = GeometrySpec::from_config(config);
  const ConfigSection& initial = config.section("initial");
  in.x0 = initial.get_vector("x0");
  in.v0 = initial.get_vector("v0");
  if (in.x0.size() != in.spec.dim || in.v0.size() != in.spec.dim)
    throw ConfigError("x0 and v0 must have length dim");

  const ConfigSection& run = config.section("run");
  in.T = run.get_double("T");
  if (!(in.T > 0)) throw ConfigError("T must be positive");
  in.elements = static_cast<int>(run.get_int_or("N", 128));
  if (in.elements < 4) throw ConfigError("N must be at least 4");
  in.seed = static_cast<std::uint64_t>(run.get_int_or("seed", 1));

  if (run.has("kappa_target")) {
    const double target = run.get_double("kappa_target");
    GeometryEval geo = evaluate_geometry(in.spec, in.x0);
    const double e0 = 0.5 * in.v0.dot(geo.g * in.v0);
    if (std::abs(target) < 1e-14) {
      if (std::abs(e0) > 1e-12)
        throw ConfigError("kappa_target = 0 requires a null initial velocity");
    } else {
      if (e0 * target <= 0.0)
        throw ConfigError("kappa_target and E(x0, v0) must have the same sign");
      in.v0 *= std::sqrt(target / e0);
    }
  }
  return in;
}

Pipeline build_pipeline(const RunInputs& inputs) {
  Pipeline p;
  p.inputs = inputs;
  p.traj = integrate_em_geodesic(inputs.spec, inputs.x0, inputs.v0, inputs.T);
  p.frame = build_parallel_frame(p.traj);
  p.foulon = foulon_data(p.traj, p.frame);
  p.transfer_ordinary = build_transfer(p.traj, p.frame, JacobiFlavor::ordinary);
  p.transfer_ec = build_transfer(p.traj, p.frame, JacobiFlavor::energy_constrained);
  const double a = inputs.T / 2048.0;
  p.instants_ordinary = find_conjugate_instants(p.transfer_ordinary, a, inputs.T);
  p.instants_ec = find_conjugate_instants(p.transfer_ec, a, inputs.T);
  p.epsilon = choose_epsilon(p.instants_ordinary, p.instants_ec, inputs.T, p.traj.mean_step());
  return p;
}

IndexReport run_report(const Pipeline& p) {
  const double T = p.inputs.T;
  const double endpoint_tol = 1e-6 * std::max(1.0, T);
  for (const ConjugateInstant& inst : p.instants_ordinary)
    if (std::abs(inst.t - T) < endpoint_tol)
      throw EndpointConjugate("T is an ordinary conjugate instant (nearest at t = " +
                              std::to_string(inst.t) + ")");
  for (const ConjugateInstant& inst : p.instants_ec)
    if (std::abs(inst.t - T) < endpoint_tol)
      throw EndpointConjugate("T is an energy-constrained conjugate instant (nearest at t = " +
                              std::to_string(inst.t) + ")");

  IndexReport report;
  report.system = p.inputs.system_id;
  report.kappa = p.traj.kappa;
  report.T = T;
  report.epsilon = p.epsilon;
  report.elements = p.inputs.elements;
  report.seed = p.inputs.seed;
  report.ordinary_instants = p.instants_ordinary;
  report.ec_instants = p.instants_ec;

  EMLagrangianSetup setup = build_setup(p.traj, p.transfer_ordinary);
  report.mu_ordinary = ordinary_maslov(setup, p.epsilon, T, p.inputs.seed);
  report.mu_ec = ec_maslov(setup, p.epsilon, T, p.inputs.seed);
  KashiwaraDifference kd = kashiwara_difference(setup, p.epsilon, T);
  report.kashiwara_difference_direct = kd.direct;
  report.kashiwara_difference_signtable = kd.sign_table;

  auto record_crossings = [&](const LagrangianFrame& ref, const std::string& label) {
    for (double t : reference_crossing_times(setup, ref, T / 2048.0, T)) {
      ReferenceCrossing crossing;
      crossing.t = t;
      crossing.reference = label;
      CrossingData data =
          crossing_signature(setup.space, [&](double s) { return setup.ell_check(s); }, ref, t,
                             1e-5, p.inputs.seed);
      crossing.signature = data.signature;
      crossing.nondegenerate = data.nondegenerate;
      report.crossings.push_back(crossing);
    }
  };
  record_crossings(setup.vertical, "vertical");
  record_crossings(setup.l_ref, "energy_level");

  FormPath forms(p.foulon, p.traj.kappa, T);
  report.sf_ordinary = spectral_flow(forms, p.epsilon, T, p.inputs.elements, /*restricted=*/true);
  report.sf_ec = spectral_flow(forms, p.epsilon, T, p.inputs.elements, /*restricted=*/false);

  report.verdict_sf_eq_neg_mu = (report.sf_ordinary == -report.mu_ordinary);
  report.verdict_sfk_eq_neg_muk = (report.sf_ec == -report.mu_ec);
  report.verdict_difference_identity =
      (report.sf_ec - report.sf_ordinary == report.mu_ordinary - report.mu_ec) &&
      (report.kashiwara_difference_direct == report.mu_ec - report.mu_ordinary);
  report.bifurcation_predicted = (report.mu_ec != 0);
  return report;
}

nlohmann::json IndexReport::to_json() const {
  nlohmann::json j;
  j["system"] = system;
  j["kappa"] = kappa;
  j["T"] = T;
  j["epsilon"] = epsilon;
  j["N"] = elements;
  j["seed"] = seed;
  j["ordinary_conjugate_instants"] = nlohmann::json::array();
  for (const auto& inst : ordinary_instants)
    j["ordinary_conjugate_instants"].push_back(instant_to_json(inst));
  j["ec_conjugate_instants"] = nlohmann::json::array();
  for (const auto& inst : ec_instants) j["ec_conjugate_instants"].push_back(instant_to_json(inst));
  j["crossings"] = nlohmann::json::array();
  for (const auto& crossing : crossings) {
    nlohmann::json jc;
    jc["t"] = crossing.t;
    jc["reference"] = crossing.reference;
    jc["signature"] = crossing.signature;
    jc["nondegenerate"] = crossing.nondegenerate;
    j["crossings"].push_back(jc);
  }
  j["mu_ordinary"] = mu_ordinary;
  j["mu_ec"] = mu_ec;
  j["sf_ordinary"] = sf_ordinary;
  j["sf_ec"] = sf_ec;
  j["kashiwara_difference_direct"] = kashiwara_difference_direct;
  j["kashiwara_difference_signtable"] = kashiwara_difference_signtable;
  j["verdict_sf_eq_neg_mu"] = verdict_sf_eq_neg_mu;
  j["verdict_sfk_eq_neg_muk"] = verdict_sfk_eq_neg_muk;
  j["verdict_difference_identity"] = verdict_difference_identity;
  j["bifurcation_predicted"] = bifurcation_predicted;
  return j;
}

nlohmann::json BifurcationProbeResult::to_json() const {
  nlohmann::json j;
  j["t0"] = t0;
  j["branch_found"] = found();
  j["branches"] = nlohmann::json::array();
  for (const auto& b : branches) {
    nlohmann::json jb;
    jb["w"] = std::vector<double>(b.w.data(), b.w.data() + b.w.size());
    jb["meeting_time"] = b.meeting_time;
    jb["target_time"] = b.target_time;
    jb["residual"] = b.residual;
    jb["energy_error"] = b.energy_error;
    j["branches"].push_back(jb);
  }
  return j;
}

namespace {

// Velocity on the kappa level: w(u) = (1 + alpha) v + u for u g-orthogonal
// to v, with alpha solving E(p, w) = kappa by 1-d Newton.
struct EnergyChart {
  const GeometrySpec* spec = nullptr;
  VectorXd x0, v0;
  double kappa = 0.0;
  MatrixXd g0;
  MatrixXd perp;  // n x (n-1) basis of <v>^perp

  std::optional<VectorXd> lift(const VectorXd& coords) const {
    VectorXd u = perp * coords;
    double alpha = 0.0;
    for (int iter = 0; iter < 60; ++iter) {
      VectorXd w = (1.0 + alpha) * v0 + u;
      const double h = 0.5 * w.dot(g0 * w) - kappa;
      const double hp = (g0 * w).dot(v0);
      if (std::abs(h) < 1e-14 * std::max(1.0, std::abs(kappa))) return w;
      if (std::abs(hp) < 1e-14) return std::nullopt;
      alpha -= h / hp;
      if (!std::isfinite(alpha) || std::abs(alpha) > 0.9) return std::nullopt;
    }
    return std::nullopt;
  }
};

VectorXd geodesic_endpoint(const GeometrySpec& spec, const VectorXd& x0, const VectorXd& w,
                           double tau) {
  Trajectory t = integrate_em_geodesic(spec, x0, w, tau);
  return t.position(tau);
}

}  // namespace

BifurcationProbeResult bifurcation_probe(const Pipeline& p, double t0,
                                         const ProbeOptions& opts) {
  BifurcationProbeResult result;
  result.t0 = t0;
  const GeometrySpec& spec = p.inputs.spec;
  const int n = spec.dim;

  EnergyChart chart;
  chart.spec = &spec;
  p.traj.eval(0.0, chart.x0, chart.v0);
  chart.kappa = p.traj.kappa;
  chart.g0 = evaluate_geometry(spec, chart.x0).g;
  VectorXd gv = chart.g0 * chart.v0;
  Eigen::JacobiSVD<MatrixXd> svd(gv.transpose(), Eigen::ComputeFullV);
  chart.perp = svd.matrixV().rightCols(n - 1);

  // Seed directions: perpendicular parts of the ec kernel slopes at t0 (when
  // available), otherwise the raw perpendicular basis.
  std::vector<VectorXd> directions;
  for (const ConjugateInstant& inst : p.instants_ec) {
    if (std::abs(inst.t - t0) > 1e-3 * std::max(1.0, t0)) continue;
    for (int c = 0; c < inst.jprime.cols(); ++c) {
      VectorXd dir = inst.jprime.col(c);
      VectorXd coords = chart.perp.transpose() * dir;  // Euclidean projection is fine for seeding
      if (coords.norm() > 1e-10) directions.push_back(coords.normalized());
    }
  }
  for (int k = 0; k < n - 1; ++k) directions.push_back(VectorXd::Unit(n - 1, k));

  const double vscale = std::max(1.0, chart.v0.norm());
  auto try_newton = [&](VectorXd z, double target_t) -> std::optional<ProbeBranch> {
    const VectorXd q_target = p.traj.position(target_t);
    const double q_scale = std::max(1.0, q_target.norm());
    for (int iter = 0; iter < opts.max_newton_iters; ++iter) {
      VectorXd coords = z.head(n - 1);
      const double tau = z[n - 1];
      if (!(tau > 0.05 * t0) || tau > p.traj.T * 1.5) return std::nullopt;
      auto w = chart.lift(coords);
      if (!w) return std::nullopt;
      VectorXd residual = geodesic_endpoint(spec, chart.x0, *w, tau) - q_target;
      if (residual.norm() < opts.residual_tol * q_scale) {
        ProbeBranch branch;
        branch.w = *w;
        branch.meeting_time = tau;
        branch.target_time = target_t;
        branch.residual = residual.norm();
        branch.energy_error = std::abs(0.5 * (*w).dot(chart.g0 * (*w)) - chart.kappa);
        return branch;
      }
      // finite-difference Jacobian in (coords, tau)
      MatrixXd jac(n, n);
      const double h = 1e-6 * (1.0 + z.norm());
      for (int k = 0; k < n; ++k) {
        VectorXd zp = z, zm = z;
        zp[k] += h;
        zm[k] -= h;
        auto wp = chart.lift(zp.head(n - 1));
        auto wm = chart.lift(zm.head(n - 1));
        if (!wp || !wm) return std::nullopt;
        VectorXd fp = geodesic_endpoint(spec, chart.x0, *wp, zp[n - 1]) - q_target;
        VectorXd fm = geodesic_endpoint(spec, chart.x0, *wm, zm[n - 1]) - q_target;
        jac.col(k) = (fp - fm) / (2.0 * h);
      }
      Eigen::FullPivLU<MatrixXd> lu(jac);
      if (!lu.isInvertible()) return std::nullopt;
      VectorXd step = lu.solve(residual);
      if (!step.allFinite()) return std::nullopt;
      if (step.norm() > 0.5 * std::max(1.0, z.norm())) step *= 0.5 * std::max(1.0, z.norm()) / step.norm();
      z -= step;
    }
    return std::nullopt;
  };

  for (double offset : opts.target_offsets) {
    const double target_t = t0 * (1.0 + offset);
    if (!(target_t > 0) || target_t > p.traj.T) continue;
    for (const VectorXd& dir : directions) {
      for (double delta : opts.deltas) {
        VectorXd z(n);
        z.head(n - 1) = delta * vscale * dir;
        z[n - 1] = t0;
        auto branch = try_newton(z, target_t);
        if (!branch) continue;
        if ((branch->w - chart.v0).norm() <= opts.distinctness * vscale) continue;
        bool duplicate = false;
        for (const ProbeBranch& existing : result.branches)
          if ((existing.w - branch->w).norm() < 10 * opts.distinctness * vscale &&
              std::abs(existing.meeting_time - branch->meeting_time) < 1e-6)
            duplicate = true;
        if (!duplicate) result.branches.push_back(*branch);
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Gallery

std::vector<std::string> gallery_system_names() {
  return {"flat_trivial", "landau", "round_sphere", "minkowski_line", "minkowski_field"};
}

std::string gallery_config_text(const std::string& name) {
  std::ostringstream os;
  os << std::setprecision(17);
  if (name == "flat_trivial") {
    os << "dim = 2\nmetric_index = 0\nprovider = analytic\n"
       << "[metric]\nbuiltin = flat\n[sigma]\nbuiltin = none\n"
       << "[initial]\nx0 = 0 0\nv0 = 1 0\n"
       << "[run]\nkappa_target = 0.5\nT = 1.0\nN = 128\nseed = 20240801\n";
  } else if (name == "landau") {
    os << "dim = 2\nmetric_index = 0\nprovider = analytic\n"
       << "[metric]\nbuiltin = flat\n[sigma]\nbuiltin = constant\nb = 1.0\n"
       << "[initial]\nx0 = 0 0\nv0 = 1 0\n"
       << "[run]\nkappa_target = 0.5\nT = " << 1.5 * kPi << "\nN = 128\nseed = 20240801\n";
  } else if (name == "round_sphere") {
    os << "dim = 2\nmetric_index = 0\nprovider = analytic\n"
       << "[metric]\nbuiltin = round_sphere\n[sigma]\nbuiltin = none\n"
       << "[initial]\nx0 = " << 0.5 * kPi << " 0\nv0 = 0 1\n"
       << "[run]\nkappa_target = 0.5\nT = " << 1.5 * kPi << "\nN = 128\nseed = 20240801\n";
  } else if (name == "minkowski_line") {
    os << "dim = 2\nmetric_index = 1\nprovider = analytic\n"
       << "[metric]\nbuiltin = minkowski\n[sigma]\nbuiltin = none\n"
       << "[initial]\nx0 = 0 0\nv0 = 1 0\n"
       << "[run]\nkappa_target = -0.5\nT = 1.0\nN = 128\nseed = 20240801\n";
  } else if (name == "minkowski_field") {
    os << "dim = 2\nmetric_index = 1\nprovider = analytic\n"
       << "[metric]\nbuiltin = minkowski\n[sigma]\nbuiltin = em_field\nE = 1.0\n"
       << "[initial]\nx0 = 0 0\nv0 = 1 0\n"
       << "[run]\nkappa_target = -0.5\nT = 1.0\nN = 128\nseed = 20240801\n";
  } else {
    throw ConfigError("unknown gallery system '" + name + "'");
  }
  return os.str();
}

int run_gallery(const std::string& outdir, bool json_aggregate, std::ostream& log) {
  namespace fs = std::filesystem;
  if (!outdir.empty()) fs::create_directories(outdir);
  nlohmann::json aggregate = nlohmann::json::array();
  bool all_ok = true;
  for (const std::string& name : gallery_system_names()) {
    ConfigFile config = ConfigFile::parse_string(gallery_config_text(name), name);
    RunInputs inputs = RunInputs::from_config(config, name);
    Pipeline pipeline = build_pipeline(inputs);
    IndexReport report = run_report(pipeline);
    all_ok = all_ok && report.all_verdicts();
    aggregate.push_back(report.to_json());
    if (!outdir.empty()) {
      std::ofstream(fs::path(outdir) / (name + "_report.json"))
          << report.to_json().dump(2) << "\n";
      std::ofstream geo(fs::path(outdir) / (name + "_geodesic.csv"));
      write_geodesic_csv(pipeline.traj, 512, geo);
      std::ofstream conj(fs::path(outdir) / (name + "_conjugate.csv"));
      write_conjugate_csv(pipeline.transfer_ordinary, pipeline.transfer_ec,
                          inputs.T / 2048.0, inputs.T, 512, conj);
      FormPath forms(pipeline.foulon, pipeline.traj.kappa, inputs.T);
      std::ofstream eig(fs::path(outdir) / (name + "_specflow.csv"));
      write_eigen_csv(eigen_trace(forms, pipeline.epsilon, inputs.T, 64, 128), eig);
    }
    log << name << ": mu = " << report.mu_ordinary << ", mu_k = " << report.mu_ec
        << ", sf = " << report.sf_ordinary << ", sf_k = " << report.sf_ec
        << (report.all_verdicts() ? "  [ok]" : "  [VERDICT FAILED]") << "\n";
  }
  if (json_aggregate) log << aggregate.dump(2) << "\n";
  return all_ok ? 0 : 1;
}

// ---------------------------------------------------------------------------
// CSV writers

void write_geodesic_csv(const Trajectory& traj, int samples, std::ostream& os) {
  const int n = traj.dim();
  os << "t";
  for (int i = 1; i <= n; ++i) os << ",x" << i;
  for (int i = 1; i <= n; ++i) os << ",v" << i;
  os << ",E\n";
  os << std::setprecision(17);
  for (int k = 0; k <= samples; ++k) {
    const double t = traj.T * k / samples;
    VectorXd x, v;
    traj.eval(t, x, v);
    os << t;
    for (int i = 0; i < n; ++i) os << "," << x[i];
    for (int i = 0; i < n; ++i) os << "," << v[i];
    os << "," << traj.energy(t) << "\n";
  }
}

void write_conjugate_csv(const TransferPath& ordinary, const TransferPath& ec, double a, double b,
                         int samples, std::ostream& os) {
  os << "t,det_ordinary,det_ec,smallest_singular_value\n";
  os << std::setprecision(17);
  for (int k = 0; k <= samples; ++k) {
    const double t = a + (b - a) * k / samples;
    MatrixXd mo = ordinary.jblock(t);
    MatrixXd me = ec.jblock(t);
    Eigen::JacobiSVD<MatrixXd> so(mo);
    Eigen::JacobiSVD<MatrixXd> se(me);
    const double smin = std::min(so.singularValues().minCoeff(), se.singularValues().minCoeff());
    os << t << "," << mo.determinant() << "," << me.determinant() << "," << smin << "\n";
  }
}

void write_eigen_csv(const std::vector<EigenTraceRow>& rows, std::ostream& os) {
  os << "s";
  for (int i = 1; i <= 8; ++i) os << ",lambda" << i;
  os << ",ind\n";
  os << std::setprecision(17);
  for (const EigenTraceRow& row : rows) {
    os << row.s;
    for (size_t i = 0; i < 8; ++i) {
      os << ",";
      if (i < row.smallest.size()) os << row.smallest[i];
    }
    os << "," << row.index << "\n";
  }
}

}  // namespace emaslov
