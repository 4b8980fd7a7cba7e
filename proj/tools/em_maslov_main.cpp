// SPDX-License-Identifier: Apache-2.0
//
// em-maslov: electromagnetic geodesics, conjugate instants, Maslov indices,
// and spectral flows on charted semi-Riemannian manifolds.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "emaslov/report.hpp"

namespace {

using namespace emaslov;

RunInputs load_inputs(const std::string& config_path, double t_override, int n_override) {
  ConfigFile config = ConfigFile::parse_file(config_path);
  RunInputs inputs = RunInputs::from_config(config, config_path);
  if (t_override > 0) inputs.T = t_override;
  if (n_override > 0) inputs.elements = n_override;
  return inputs;
}

std::ostream& open_or_stdout(std::ofstream& file, const std::string& path) {
  if (path.empty()) return std::cout;
  file.open(path);
  if (!file) throw Error("cannot open output file '" + path + "'");
  return file;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"electromagnetic geodesics, conjugate instants, Maslov indices, spectral flows"};
  app.require_subcommand(1);

  std::string config_path, out_path, json_path, flavor = "both";
  double t_override = -1.0, t0 = -1.0;
  int n_override = -1;
  bool json_flag = false;
  std::string outdir;

  auto add_common = [&](CLI::App* cmd, bool needs_config = true) {
    if (needs_config) cmd->add_option("--config", config_path, "config file")->required();
    cmd->add_option("--T", t_override, "horizon override");
    cmd->add_option("--N", n_override, "Galerkin element count override");
  };

  CLI::App* geodesic = app.add_subcommand("geodesic", "integrate and export the trajectory");
  add_common(geodesic);
  geodesic->add_option("--out", out_path, "output CSV (default stdout)");

  CLI::App* conjugate = app.add_subcommand("conjugate", "detect conjugate instants");
  add_common(conjugate);
  conjugate->add_option("--flavor", flavor, "both | ordinary | ec");
  conjugate->add_option("--out", out_path, "det-trace CSV output");

  CLI::App* maslov = app.add_subcommand("maslov", "Maslov indices over [eps, T]");
  add_common(maslov);

  CLI::App* specflow_cmd = app.add_subcommand("specflow", "Galerkin spectral flows over [eps, T]");
  add_common(specflow_cmd);
  bool ec_only = false, ordinary_only = false;
  specflow_cmd->add_flag("--ec", ec_only, "energy-constrained flow only");
  specflow_cmd->add_flag("--ordinary", ordinary_only, "ordinary flow only");
  specflow_cmd->add_option("--out", out_path, "eigen-trace CSV output");

  CLI::App* report_cmd = app.add_subcommand("report", "full index report with verdicts");
  add_common(report_cmd);
  report_cmd->add_option("--json", json_path, "write the report JSON here");

  CLI::App* probe = app.add_subcommand("probe", "bifurcation evidence probe at an instant");
  add_common(probe);
  probe->add_option("--t0", t0, "target instant")->required();
  std::vector<double> probe_deltas;
  probe->add_option("--delta", probe_deltas, "seed perturbation sizes (default 0.01 0.03 0.1)");

  CLI::App* gallery = app.add_subcommand("gallery", "run all built-in systems");
  gallery->add_flag("--json", json_flag, "print a machine-readable aggregate");
  gallery->add_option("--outdir", outdir, "directory for reports and CSV traces");

  CLI11_PARSE(app, argc, argv);

  try {
    if (geodesic->parsed()) {
      RunInputs in = load_inputs(config_path, t_override, n_override);
      Trajectory traj = integrate_em_geodesic(in.spec, in.x0, in.v0, in.T);
      std::ofstream file;
      write_geodesic_csv(traj, 512, open_or_stdout(file, out_path));
      std::cerr << "kappa = " << traj.kappa << ", energy drift = " << traj.energy_drift << "\n";
      if (traj.zero_energy)
        std::cerr << "warning: kappa = 0; energy-constrained operations will reject this run\n";
      return 0;
    }
    if (conjugate->parsed()) {
      RunInputs in = load_inputs(config_path, t_override, n_override);
      Pipeline p = build_pipeline(in);
      auto print = [](const char* label, const std::vector<ConjugateInstant>& instants) {
        std::cout << label << ":\n";
        for (const auto& inst : instants)
          std::cout << "  t = " << inst.t << "  multiplicity " << inst.multiplicity
                    << "  signature " << inst.signature
                    << (inst.nondegenerate ? "" : "  (degenerate)")
                    << (inst.even_contact ? "  (even contact)" : "") << "\n";
        if (instants.empty()) std::cout << "  (none)\n";
      };
      if (flavor != "ec") print("ordinary conjugate instants", p.instants_ordinary);
      if (flavor != "ordinary") print("energy-constrained conjugate instants", p.instants_ec);
      if (!out_path.empty()) {
        std::ofstream file(out_path);
        write_conjugate_csv(p.transfer_ordinary, p.transfer_ec, in.T / 2048.0, in.T, 512, file);
      }
      return 0;
    }
    if (maslov->parsed()) {
      RunInputs in = load_inputs(config_path, t_override, n_override);
      Pipeline p = build_pipeline(in);
      EMLagrangianSetup setup = build_setup(p.traj, p.transfer_ordinary);
      std::cout << "epsilon = " << p.epsilon << "\n";
      std::cout << "mu_ordinary = " << ordinary_maslov(setup, p.epsilon, in.T, in.seed) << "\n";
      std::cout << "mu_ec = " << ec_maslov(setup, p.epsilon, in.T, in.seed) << "\n";
      return 0;
    }
    if (specflow_cmd->parsed()) {
      RunInputs in = load_inputs(config_path, t_override, n_override);
      Pipeline p = build_pipeline(in);
      FormPath forms(p.foulon, p.traj.kappa, in.T);
      std::cout << "epsilon = " << p.epsilon << "\n";
      if (!ec_only)
        std::cout << "sf_ordinary = "
                  << spectral_flow(forms, p.epsilon, in.T, in.elements, true) << "\n";
      if (!ordinary_only)
        std::cout << "sf_ec = " << spectral_flow(forms, p.epsilon, in.T, in.elements, false)
                  << "\n";
      if (!out_path.empty()) {
        std::ofstream file(out_path);
        write_eigen_csv(eigen_trace(forms, p.epsilon, in.T, in.elements, 128, ec_only ? false : ordinary_only),
                        file);
      }
      return 0;
    }
    if (report_cmd->parsed()) {
      RunInputs in = load_inputs(config_path, t_override, n_override);
      IndexReport report = run_report(build_pipeline(in));
      std::cout << report.to_json().dump(2) << "\n";
      if (!json_path.empty()) std::ofstream(json_path) << report.to_json().dump(2) << "\n";
      return report.all_verdicts() ? 0 : 1;
    }
    if (probe->parsed()) {
      RunInputs in = load_inputs(config_path, t_override, n_override);
      Pipeline p = build_pipeline(in);
      ProbeOptions opts;
      if (!probe_deltas.empty()) opts.deltas = probe_deltas;
      BifurcationProbeResult result = bifurcation_probe(p, t0, opts);
      std::cout << result.to_json().dump(2) << "\n";
      if (!result.found()) std::cerr << "no branch found (reported, not fatal)\n";
      return 0;
    }
    if (gallery->parsed()) {
      return run_gallery(outdir, json_flag, std::cout);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
