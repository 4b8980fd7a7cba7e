// SPDX-License-Identifier: Apache-2.0
#include "emaslov/jacobi.hpp"

#include <algorithm>
#include <cmath>

#include "emaslov/symplectic.hpp"

namespace emaslov {

namespace {

constexpr double kZeroEnergyTol = 1e-12;

MatrixXd metric_at(const Trajectory& traj, const VectorXd& x) {
  MatrixXd g = traj.spec.metric->value(x);
  return 0.5 * (g + g.transpose());
}

MatrixXd sigma_at(const Trajectory& traj, const VectorXd& x) {
  MatrixXd s = traj.spec.sigma->value(x);
  return 0.5 * (s - s.transpose());
}

}  // namespace

void JacobiSolution::eval(double t, VectorXd& j, VectorXd& dj) const {
  VectorXd state = sol.eval(t);
  j = state.head(n);
  dj = state.tail(n);
}

VectorXd JacobiSolution::value(double t) const { return sol.eval(t).head(n); }

VectorXd JacobiSolution::slope(double t) const { return sol.eval(t).tail(n); }

JacobiSolution solve_jacobi(const Trajectory& traj, JacobiFlavor flavor, const VectorXd& u,
                            const VectorXd& w, const OdeOptions& options) {
  const int n = traj.dim();
  if (flavor == JacobiFlavor::energy_constrained && std::abs(traj.kappa) < kZeroEnergyTol)
    throw ZeroEnergy("energy-constrained Jacobi equation requires kappa != 0");

  JacobiSolution out;
  out.flavor = flavor;
  out.u = u;
  out.w = w;
  out.n = n;
  GeometryEval geo0 = evaluate_geometry(traj.spec, traj.position(0.0));
  out.c = (flavor == JacobiFlavor::energy_constrained)
              ? w.dot(geo0.g * traj.velocity(0.0))
              : 0.0;
  const double forcing = (flavor == JacobiFlavor::energy_constrained)
                             ? out.c / (2.0 * traj.kappa)
                             : 0.0;

  // State (J, U) with U = DJ/dt:
  //   dJ/dt = U - Gamma(gd, J)
  //   dU/dt = -Gamma(gd, U) - R(J, gd) gd + (nabla_J Y)[gd] + Y U + forcing * Y gd
  auto rhs = [&traj, n, forcing](double t, const VectorXd& y, VectorXd& dydt) {
    VectorXd x, v;
    traj.eval(t, x, v);
    GeometryEval geo = evaluate_geometry(traj.spec, x);
    const VectorXd j = y.head(n);
    const VectorXd uu = y.tail(n);
    VectorXd acc = -geo.curvature_operator(v, v) * j + geo.lorentz * uu;
    for (int k = 0; k < n; ++k) acc += j[k] * (geo.nabla_lorentz[k] * v);
    if (forcing != 0.0) acc += forcing * (geo.lorentz * v);
    dydt.resize(2 * n);
    dydt.head(n) = uu - geo.gamma_quad(v, j);
    dydt.tail(n) = acc - geo.gamma_quad(v, uu);
  };
  VectorXd y0(2 * n);
  y0 << u, w;
  out.sol = integrate_dense(rhs, y0, 0.0, traj.T, options);
  return out;
}

MatrixXd TransferPath::eval(double t) const {
  const int nn = n();
  VectorXd x, v;
  traj.eval(t, x, v);
  MatrixXd g = metric_at(traj, x);
  MatrixXd f = frame.eval(t);
  MatrixXd to_frame = frame.inp * f.transpose() * g;  // F(t)^{-1}
  MatrixXd out(2 * nn, 2 * nn);
  VectorXd j(nn), dj(nn);
  for (int col = 0; col < 2 * nn; ++col) {
    columns[col].eval(t, j, dj);
    out.col(col).head(nn) = to_frame * j;
    out.col(col).tail(nn) = to_frame * dj;
  }
  return out;
}

MatrixXd TransferPath::jblock(double t) const {
  return eval(t).topRightCorner(n(), n());
}

MatrixXd TransferPath::slope_block(double t) const {
  return eval(t).bottomRightCorner(n(), n());
}

MatrixXd TransferPath::omega_matrix(double t) const {
  const int nn = n();
  VectorXd x, v;
  traj.eval(t, x, v);
  MatrixXd g = metric_at(traj, x);
  MatrixXd f = frame.eval(t);
  MatrixXd sigma_f = f.transpose() * sigma_at(traj, x) * f;
  MatrixXd gram;
  if (flavor == JacobiFlavor::ordinary) {
    gram = frame.inp;
  } else {
    if (std::abs(traj.kappa) < kZeroEnergyTol)
      throw ZeroEnergy("omega-hat requires kappa != 0");
    VectorXd m = f.transpose() * (g * v);  // m_i = g[E_i, gd]
    gram = frame.inp - (0.5 / traj.kappa) * m * m.transpose();
  }
  MatrixXd out = MatrixXd::Zero(2 * nn, 2 * nn);
  out.topLeftCorner(nn, nn) = sigma_f;
  out.topRightCorner(nn, nn) = -gram;
  out.bottomLeftCorner(nn, nn) = gram;
  return out;
}

VectorXd TransferPath::s_vector(double t) const {
  const int nn = n();
  VectorXd x, v;
  traj.eval(t, x, v);
  MatrixXd g = metric_at(traj, x);
  MatrixXd f = frame.eval(t);
  MatrixXd sig = sigma_at(traj, x);
  MatrixXd y = g.inverse() * sig;
  MatrixXd to_frame = frame.inp * f.transpose() * g;
  VectorXd out(2 * nn);
  out.head(nn) = to_frame * v;
  out.tail(nn) = to_frame * (y * v);
  return out;
}

TransferPath build_transfer(const Trajectory& traj, const ParallelFrame& frame,
                            JacobiFlavor flavor, int n_samples) {
  const int n = traj.dim();
  TransferPath transfer;
  transfer.flavor = flavor;
  transfer.traj = traj;
  transfer.frame = frame;
  MatrixXd f0 = frame.eval(0.0);
  for (int i = 0; i < n; ++i)
    transfer.columns.push_back(solve_jacobi(traj, flavor, f0.col(i), VectorXd::Zero(n)));
  for (int i = 0; i < n; ++i)
    transfer.columns.push_back(solve_jacobi(traj, flavor, VectorXd::Zero(n), f0.col(i)));
  transfer.sample_times.resize(n_samples + 1);
  transfer.samples.resize(n_samples + 1);
  for (int k = 0; k <= n_samples; ++k) {
    const double t = traj.T * k / n_samples;
    transfer.sample_times[k] = t;
    transfer.samples[k] = transfer.eval(t);
  }
  return transfer;
}

MatrixXd metric_g_t(const Trajectory& traj, double t) {
  if (std::abs(traj.kappa) < kZeroEnergyTol) throw ZeroEnergy("g_t requires kappa != 0");
  VectorXd x, v;
  traj.eval(t, x, v);
  MatrixXd g = metric_at(traj, x);
  VectorXd gv = g * v;
  return g - (0.5 / traj.kappa) * gv * gv.transpose();
}

namespace {

struct KernelInfo {
  int multiplicity = 0;
  MatrixXd kernel;  // n x multiplicity, frame coordinates of w
  double smin = 0.0;
};

// Kernel against an absolute threshold; the scale is the largest singular
// value of the J-block anywhere on the scan window, so full-kernel instants
// (multiplicity n) are resolved too.
KernelInfo kernel_of(const MatrixXd& m, double abs_threshold) {
  Eigen::JacobiSVD<MatrixXd> svd(m, Eigen::ComputeFullV);
  const VectorXd sv = svd.singularValues();
  KernelInfo info;
  info.smin = sv[sv.size() - 1];
  std::vector<int> cols;
  for (int k = 0; k < sv.size(); ++k)
    if (sv[k] < abs_threshold) cols.push_back(k);
  info.multiplicity = static_cast<int>(cols.size());
  info.kernel.resize(m.cols(), info.multiplicity);
  for (size_t i = 0; i < cols.size(); ++i) info.kernel.col(static_cast<int>(i)) = svd.matrixV().col(cols[i]);
  return info;
}

double smin_at(const TransferPath& transfer, double t) {
  Eigen::JacobiSVD<MatrixXd> svd(transfer.jblock(t));
  const VectorXd sv = svd.singularValues();
  return sv[sv.size() - 1];
}

// Bisection on a sign change of det.
double bisect_det(const TransferPath& transfer, double lo, double hi, double f_lo, double tol) {
  for (int iter = 0; iter < 200 && hi - lo > tol; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = transfer.jblock(mid).determinant();
    if (f_mid == 0.0) return mid;
    if ((f_lo < 0) != (f_mid < 0))
      hi = mid;
    else {
      lo = mid;
      f_lo = f_mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Ternary search for a local minimum of the smallest singular value.
double ternary_min(const TransferPath& transfer, double lo, double hi, double tol) {
  for (int iter = 0; iter < 300 && hi - lo > tol; ++iter) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (smin_at(transfer, m1) < smin_at(transfer, m2))
      hi = m2;
    else
      lo = m1;
  }
  return 0.5 * (lo + hi);
}

ConjugateInstant make_instant(const TransferPath& transfer, double t, bool even_contact,
                              double scale, const ConjugateScanOptions& opts) {
  MatrixXd m = transfer.jblock(t);
  KernelInfo info = kernel_of(m, opts.kernel_rel * scale);
  if (info.multiplicity == 0)
    throw DegenerateCrossing("det M vanishes near t = " + std::to_string(t) +
                             " but no numerical kernel was resolved");
  ConjugateInstant inst;
  inst.t = t;
  inst.flavor = transfer.flavor;
  inst.multiplicity = info.multiplicity;
  inst.even_contact = even_contact;

  MatrixXd slopes = transfer.slope_block(t) * info.kernel;  // frame coords at t
  MatrixXd f = transfer.frame.eval(t);
  inst.jprime = f * slopes;  // chart coords

  // constraint constant of the first kernel direction (w in chart coords)
  if (transfer.flavor == JacobiFlavor::energy_constrained) {
    VectorXd x0, v0;
    transfer.traj.eval(0.0, x0, v0);
    MatrixXd g0 = metric_at(transfer.traj, x0);
    VectorXd w_chart = transfer.frame.eval(0.0) * info.kernel.col(0);
    inst.constraint_c = w_chart.dot(g0 * v0);
  }

  MatrixXd grading;
  if (transfer.flavor == JacobiFlavor::energy_constrained) {
    grading = metric_g_t(transfer.traj, t);
  } else {
    grading = metric_at(transfer.traj, transfer.traj.position(t));
  }
  MatrixXd q = inst.jprime.transpose() * grading * inst.jprime;
  SignatureCounts counts = signature_counts(q);
  inst.nondegenerate = counts.nondegenerate();
  inst.signature = counts.signature();
  return inst;
}

}  // namespace

std::vector<ConjugateInstant> find_conjugate_instants(const TransferPath& transfer, double a,
                                                      double b,
                                                      const ConjugateScanOptions& opts) {
  if (!(a > 0.0) || !(b > a) || b > transfer.traj.T * (1.0 + 1e-12))
    throw Error("conjugate scan window must satisfy 0 < a < b <= T");
  const double tol = opts.time_tol * std::max(1.0, b);
  const int grid = opts.grid;
  std::vector<double> ts(grid + 1), dets(grid + 1), smins(grid + 1);
  double scale = 0.0;
  for (int k = 0; k <= grid; ++k) {
    const double t = a + (b - a) * k / grid;
    MatrixXd m = transfer.jblock(t);
    ts[k] = t;
    dets[k] = m.determinant();
    Eigen::JacobiSVD<MatrixXd> svd(m);
    const VectorXd sv = svd.singularValues();
    smins[k] = sv[sv.size() - 1];
    scale = std::max(scale, sv[0]);
  }
  scale = std::max(scale, 1e-300);

  std::vector<double> found;
  std::vector<bool> even;
  auto push_found = [&](double t, bool is_even) {
    for (size_t i = 0; i < found.size(); ++i)
      if (std::abs(found[i] - t) < 10 * tol) return;
    found.push_back(t);
    even.push_back(is_even);
  };

  // odd crossings: sign changes of det
  for (int k = 0; k + 1 <= grid; ++k) {
    if (dets[k] == 0.0) {
      push_found(ts[k], false);
      continue;
    }
    if ((dets[k] < 0) != (dets[k + 1] < 0))
      push_found(bisect_det(transfer, ts[k], ts[k + 1], dets[k], tol), false);
  }
  // even contacts: interior local minima of the smallest singular value
  for (int k = 1; k < grid; ++k) {
    if (!(smins[k] <= smins[k - 1] && smins[k] <= smins[k + 1])) continue;
    if (smins[k] > 0.05 * scale) continue;  // nowhere near rank deficiency
    const double t_star = ternary_min(transfer, ts[k - 1], ts[k + 1], tol);
    const double smin_star = smin_at(transfer, t_star);
    if (smin_star < opts.kernel_rel * scale)
      push_found(t_star, true);
    else if (smin_star < opts.ambiguous_rel * scale)
      throw DegenerateCrossing("rank dip at t = " + std::to_string(t_star) +
                               " is numerically ambiguous (relative smin " +
                               std::to_string(smin_star / scale) + ")");
  }
  // window endpoint can itself be an instant
  if (smins[grid] < opts.kernel_rel * scale) push_found(ts[grid], false);

  std::vector<size_t> order(found.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t i, size_t j) { return found[i] < found[j]; });

  std::vector<ConjugateInstant> instants;
  for (size_t idx : order)
    instants.push_back(make_instant(transfer, found[idx], even[idx], scale, opts));
  return instants;
}

double choose_epsilon(const std::vector<ConjugateInstant>& ordinary,
                      const std::vector<ConjugateInstant>& energy_constrained, double T,
                      double mean_step) {
  double first = std::numeric_limits<double>::infinity();
  for (const auto& inst : ordinary) first = std::min(first, inst.t);
  for (const auto& inst : energy_constrained) first = std::min(first, inst.t);
  const double floor_eps = 4.0 * mean_step;
  if (!std::isfinite(first)) return std::clamp(floor_eps, T / 64.0, T / 4.0);
  double eps = std::max(first / 2.0, floor_eps);
  if (eps > 0.9 * first)
    throw Error("cannot choose epsilon below the first conjugate instant");
  return eps;
}

}  // namespace emaslov
