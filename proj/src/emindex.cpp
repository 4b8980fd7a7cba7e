// SPDX-License-Identifier: Apache-2.0
#include "emaslov/emindex.hpp"

#include <cmath>

namespace emaslov {

namespace {

constexpr double kZeroEnergyTol = 1e-12;

}  // namespace

MatrixXd EMLagrangianSetup::ell_check(double t) const {
  MatrixXd phi = transfer.eval(t);
  Eigen::FullPivLU<MatrixXd> lu(phi);
  if (!lu.isInvertible()) throw SingularTransfer("transfer matrix singular at t = " + std::to_string(t));
  return lu.solve(vertical.a);
}

LagrangianPath EMLagrangianSetup::sampled_path(double a, double b, int samples) const {
  LagrangianPath path;
  path.times.resize(samples + 1);
  path.frames.resize(samples + 1);
  for (int k = 0; k <= samples; ++k) {
    const double t = a + (b - a) * k / samples;
    path.times[k] = t;
    path.frames[k] = ell_check(t);
  }
  path.refine = [this](double t) { return ell_check(t); };
  return path;
}

EMLagrangianSetup build_setup(const Trajectory& traj, const TransferPath& transfer_ordinary) {
  if (transfer_ordinary.flavor != JacobiFlavor::ordinary)
    throw Error("build_setup expects the ordinary transfer path");
  if (std::abs(traj.kappa) < kZeroEnergyTol)
    throw ZeroEnergy("the reference Lagrangian L requires kappa != 0");
  const int n = traj.dim();

  EMLagrangianSetup setup;
  setup.transfer = transfer_ordinary;
  setup.space.omega = transfer_ordinary.omega_matrix(0.0);
  setup.space.validate();

  MatrixXd vert(2 * n, n);
  vert.topRows(n).setZero();
  vert.bottomRows(n) = MatrixXd::Identity(n, n);
  setup.vertical = make_lagrangian(setup.space, vert);

  setup.s0 = transfer_ordinary.s_vector(0.0);
  // frame coordinates m with g[v, y] = m . y_frame: m = I_{n,p} vf
  VectorXd vf = setup.s0.head(n);
  VectorXd m = transfer_ordinary.frame.inp * vf;
  Eigen::JacobiSVD<MatrixXd> svd(m.transpose(), Eigen::ComputeFullV);
  MatrixXd perp = svd.matrixV().rightCols(n - 1);  // null space of m^T
  MatrixXd lref(2 * n, n);
  lref.col(0) = setup.s0;
  for (int k = 0; k < n - 1; ++k) {
    lref.col(k + 1).head(n).setZero();
    lref.col(k + 1).tail(n) = perp.col(k);
  }
  setup.l_ref = make_lagrangian(setup.space, lref);
  Eigen::JacobiSVD<MatrixXd> lref_svd(lref);
  setup.l_ref_condition =
      lref_svd.singularValues()[0] / lref_svd.singularValues()[n - 1];
  return setup;
}

namespace {

int maslov_for_reference(const EMLagrangianSetup& setup, const LagrangianFrame& reference,
                         double eps, double T, std::uint64_t seed) {
  MaslovOptions opts;
  opts.seed = seed;
  LagrangianPath path = setup.sampled_path(eps, T);
  if (smallest_principal_angle(path.frames.front(), reference.a) <= opts.transversality ||
      smallest_principal_angle(path.frames.back(), reference.a) <= opts.transversality)
    throw EndpointOnCycle("a Maslov window endpoint is (numerically) a conjugate instant");
  return maslov_index(setup.space, path, reference, opts);
}

}  // namespace

int ordinary_maslov(const EMLagrangianSetup& setup, double eps, double T, std::uint64_t seed) {
  return maslov_for_reference(setup, setup.vertical, eps, T, seed);
}

int ec_maslov(const EMLagrangianSetup& setup, double eps, double T, std::uint64_t seed) {
  return maslov_for_reference(setup, setup.l_ref, eps, T, seed);
}

double jstar_slope_product(const EMLagrangianSetup& setup, double s) {
  const int n = setup.transfer.n();
  MatrixXd phi = setup.transfer.eval(s);
  MatrixXd jb = phi.topRightCorner(n, n);
  Eigen::JacobiSVD<MatrixXd> svd(jb, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const VectorXd sv = svd.singularValues();
  // threshold against the whole transfer scale: at an instant of multiplicity n
  // the J-block's own leading singular value vanishes too
  const double scale = std::max(phi.cwiseAbs().maxCoeff(), 1.0);
  if (sv[n - 1] < 1e-8 * scale)
    throw ConjugateEndpoint("s = " + std::to_string(s) + " is an ordinary conjugate instant");
  // frame coordinates of gd(s): velocity part of the S vector at s
  VectorXd gdf = setup.transfer.s_vector(s).head(n);
  VectorXd wtilde = svd.solve(gdf);
  VectorXd slope = phi.bottomRightCorner(n, n) * wtilde;
  return slope.dot(setup.transfer.frame.inp * gdf);
}

namespace {

int table_sign(double value, double scale) {
  const double tol = 1e-8 * std::max(1.0, scale);
  if (value > tol) return -1;
  if (value < -tol) return 1;
  return 0;
}

}  // namespace

KashiwaraDifference kashiwara_difference(const EMLagrangianSetup& setup, double eps, double T) {
  KashiwaraDifference result;
  const int tau_b = kashiwara_tau(setup.space, setup.l_ref, setup.vertical,
                                  make_lagrangian(setup.space, setup.ell_check(T), 1e-6));
  const int tau_a = kashiwara_tau(setup.space, setup.l_ref, setup.vertical,
                                  make_lagrangian(setup.space, setup.ell_check(eps), 1e-6));
  if ((tau_b - tau_a) % 2 != 0)
    throw Error("Kashiwara difference is not an even integer: " + std::to_string(tau_b) + " - " +
                std::to_string(tau_a));
  result.direct = (tau_b - tau_a) / 2;

  const double kappa = setup.transfer.traj.kappa;
  const double prod_b = jstar_slope_product(setup, T);
  const double prod_a = jstar_slope_product(setup, eps);
  const int sgn_b = table_sign(prod_b, std::abs(2.0 * kappa / T));
  const int sgn_a = table_sign(prod_a, std::abs(2.0 * kappa / eps));
  if ((sgn_b == 0) != (sgn_a == 0))
    throw Error("sign table is inconsistent between the endpoints");
  if ((sgn_b - sgn_a) % 2 != 0) throw Error("sign-table difference is not an even integer");
  result.sign_table = (sgn_b - sgn_a) / 2;

  if (result.direct != result.sign_table)
    throw Error("Kashiwara difference mismatch: direct " + std::to_string(result.direct) +
                " vs sign table " + std::to_string(result.sign_table));
  return result;
}

std::vector<double> reference_crossing_times(const EMLagrangianSetup& setup,
                                             const LagrangianFrame& reference, double a, double b,
                                             int grid) {
  const MatrixXd ref = reference.orthonormal();
  const int d = static_cast<int>(ref.rows());
  // determinant signs from the raw (continuous) frames; singular values from
  // orthonormalized frames so they depend only on the subspaces
  auto det_at = [&](double t) {
    MatrixXd s(d, d);
    s << ref, setup.ell_check(t);
    return s.determinant();
  };
  auto smin_at = [&](double t) {
    MatrixXd s(d, d);
    s << ref, LagrangianFrame{setup.ell_check(t)}.orthonormal();
    Eigen::JacobiSVD<MatrixXd> svd(s);
    const VectorXd sv = svd.singularValues();
    return sv[sv.size() - 1];
  };

  std::vector<double> ts(grid + 1), dets(grid + 1), smins(grid + 1);
  for (int k = 0; k <= grid; ++k) {
    ts[k] = a + (b - a) * k / grid;
    dets[k] = det_at(ts[k]);
    smins[k] = smin_at(ts[k]);
  }
  const double tol = 1e-10 * std::max(1.0, b);
  std::vector<double> found;
  auto push = [&](double t) {
    for (double f : found)
      if (std::abs(f - t) < 10 * tol) return;
    found.push_back(t);
  };
  for (int k = 0; k + 1 <= grid; ++k) {
    if ((dets[k] < 0) == (dets[k + 1] < 0)) continue;
    double lo = ts[k], hi = ts[k + 1], flo = dets[k];
    while (hi - lo > tol) {
      const double mid = 0.5 * (lo + hi);
      const double fmid = det_at(mid);
      if ((flo < 0) != (fmid < 0))
        hi = mid;
      else {
        lo = mid;
        flo = fmid;
      }
    }
    push(0.5 * (lo + hi));
  }
  for (int k = 1; k < grid; ++k) {
    if (!(smins[k] <= smins[k - 1] && smins[k] <= smins[k + 1]) || smins[k] > 0.05) continue;
    double lo = ts[k - 1], hi = ts[k + 1];
    while (hi - lo > tol) {
      const double m1 = lo + (hi - lo) / 3.0;
      const double m2 = hi - (hi - lo) / 3.0;
      if (smin_at(m1) < smin_at(m2))
        hi = m2;
      else
        lo = m1;
    }
    const double t_star = 0.5 * (lo + hi);
    if (smin_at(t_star) < 1e-6) push(t_star);
  }
  if (smins[grid] < 1e-6) push(ts[grid]);
  std::sort(found.begin(), found.end());
  return found;
}

}  // namespace emaslov
