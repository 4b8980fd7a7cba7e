// SPDX-License-Identifier: Apache-2.0
#include "emaslov/flow.hpp"

#include <cmath>

namespace emaslov {

namespace {

double energy_of(const GeometryEval& geo, const VectorXd& v) { return 0.5 * v.dot(geo.g * v); }

// Indefinite Gram-Schmidt with candidate pivoting. Returns columns with
// g-norms +-1 ordered so that the Gram matrix is I_{n,p}.
MatrixXd orthonormal_basis(const GeometryEval& geo, int p, const std::vector<VectorXd>& preferred) {
  const int n = static_cast<int>(geo.x.size());
  std::vector<VectorXd> candidates = preferred;
  for (int i = 0; i < n; ++i) candidates.push_back(VectorXd::Unit(n, i));
  std::vector<VectorXd> basis;
  std::vector<double> signs;
  for (const VectorXd& cand : candidates) {
    if (static_cast<int>(basis.size()) == n) break;
    VectorXd v = cand;
    for (size_t j = 0; j < basis.size(); ++j)
      v -= signs[j] * basis[j].dot(geo.g * v) * basis[j];
    const double norm2 = v.dot(geo.g * v);
    if (std::abs(norm2) < 1e-10 * std::max(1.0, v.squaredNorm())) continue;  // null direction
    basis.push_back(v / std::sqrt(std::abs(norm2)));
    signs.push_back(norm2 > 0 ? 1.0 : -1.0);
  }
  if (static_cast<int>(basis.size()) != n)
    throw GramSchmidtFailure("could not g-orthonormalize the tangent basis (null directions)");
  MatrixXd frame(n, n);
  int col = 0;
  for (size_t j = 0; j < basis.size(); ++j)
    if (signs[j] < 0) frame.col(col++) = basis[j];
  int negatives = col;
  for (size_t j = 0; j < basis.size(); ++j)
    if (signs[j] > 0) frame.col(col++) = basis[j];
  if (negatives != p)
    throw GramSchmidtFailure("orthonormalized basis realizes index " + std::to_string(negatives) +
                             ", expected " + std::to_string(p));
  return frame;
}

}  // namespace

void Trajectory::eval(double t, VectorXd& x, VectorXd& v) const {
  VectorXd state = sol.eval(t);
  const int n = dim();
  x = state.head(n);
  v = state.tail(n);
}

VectorXd Trajectory::position(double t) const { return sol.eval(t).head(dim()); }

VectorXd Trajectory::velocity(double t) const { return sol.eval(t).tail(dim()); }

double Trajectory::energy(double t) const {
  VectorXd x, v;
  eval(t, x, v);
  return energy_of(evaluate_geometry(spec, x), v);
}

Trajectory integrate_em_geodesic(const GeometrySpec& spec, const VectorXd& x0, const VectorXd& v0,
                                 double T, const OdeOptions& options) {
  if (!(T > 0)) throw Error("horizon T must be positive");
  const int n = spec.dim;
  GeometryEval geo0 = evaluate_geometry(spec, x0);
  Trajectory traj;
  traj.spec = spec;
  traj.kappa = energy_of(geo0, v0);
  traj.T = T;
  traj.zero_energy = std::abs(traj.kappa) < 1e-12 * std::max(1.0, v0.squaredNorm());

  auto rhs = [&spec, n](double, const VectorXd& y, VectorXd& dydt) {
    const VectorXd x = y.head(n);
    const VectorXd v = y.tail(n);
    GeometryEval geo = evaluate_geometry(spec, x);
    dydt.resize(2 * n);
    dydt.head(n) = v;
    dydt.tail(n) = geo.lorentz * v - geo.gamma_quad(v, v);
  };
  VectorXd y0(2 * n);
  y0 << x0, v0;
  traj.sol = integrate_dense(rhs, y0, 0.0, T, options);

  double drift = 0.0;
  for (int k = 0; k <= 128; ++k) drift = std::max(drift, std::abs(traj.energy(T * k / 128.0) - traj.kappa));
  traj.energy_drift = drift;
  return traj;
}

MatrixXd ParallelFrame::eval(double t) const {
  VectorXd flat = sol.eval(t);
  return Eigen::Map<const MatrixXd>(flat.data(), n, n);
}

VectorXd ParallelFrame::to_frame(const GeometryEval& geo, const MatrixXd& frame_matrix,
                                 const VectorXd& u) const {
  return inp * (frame_matrix.transpose() * (geo.g * u));
}

ParallelFrame build_parallel_frame(const Trajectory& traj, const FrameOptions& options) {
  const int n = traj.dim();
  const GeometrySpec& spec = traj.spec;
  VectorXd x0, v0;
  traj.eval(0.0, x0, v0);
  GeometryEval geo0 = evaluate_geometry(spec, x0);

  std::vector<VectorXd> preferred = options.preferred;
  if (std::abs(v0.dot(geo0.g * v0)) > 1e-8 * std::max(1.0, v0.squaredNorm()))
    preferred.insert(preferred.begin(), v0);
  MatrixXd f0 = orthonormal_basis(geo0, spec.metric_index, preferred);

  ParallelFrame frame;
  frame.n = n;
  VectorXd diag = VectorXd::Ones(n);
  for (int i = 0; i < spec.metric_index; ++i) diag[i] = -1.0;
  frame.inp = diag.asDiagonal();
  if (options.initial_rotation.size() > 0) {
    f0 = f0 * options.initial_rotation;
    MatrixXd gram = f0.transpose() * geo0.g * f0;
    if ((gram - frame.inp).cwiseAbs().maxCoeff() > 1e-9)
      throw GramSchmidtFailure("initial_rotation does not preserve the I_{n,p} Gram matrix");
  }

  // dE/dt = -Gamma(v, E) + (1/2) Y E, columns evolved together.
  auto rhs = [&traj, &spec, n](double t, const VectorXd& y, VectorXd& dydt) {
    VectorXd x, v;
    traj.eval(t, x, v);
    GeometryEval geo = evaluate_geometry(spec, x);
    Eigen::Map<const MatrixXd> f(y.data(), n, n);
    dydt.resize(n * n);
    Eigen::Map<MatrixXd> df(dydt.data(), n, n);
    for (int c = 0; c < n; ++c)
      df.col(c) = 0.5 * geo.lorentz * f.col(c) - geo.gamma_quad(v, f.col(c));
  };
  VectorXd y0 = Eigen::Map<const VectorXd>(f0.data(), n * n);
  frame.sol = integrate_dense(rhs, y0, 0.0, traj.T);

  double drift = 0.0;
  for (int k = 0; k <= 256; ++k) {
    const double t = traj.T * k / 256.0;
    GeometryEval geo = evaluate_geometry(spec, traj.position(t));
    MatrixXd f = frame.eval(t);
    drift = std::max(drift, (f.transpose() * geo.g * f - frame.inp).cwiseAbs().maxCoeff());
  }
  frame.gram_drift = drift;
  return frame;
}

namespace {

// K v = R(v, gd) gd + (1/2)(nabla_gd Y)[v] - (nabla_v Y)[gd] - (1/4) Y^2[v]
MatrixXd jacobi_operator_chart_impl(const GeometryEval& geo, const VectorXd& v) {
  const int n = static_cast<int>(v.size());
  MatrixXd k = geo.curvature_operator(v, v);
  for (int m = 0; m < n; ++m) k += 0.5 * v[m] * geo.nabla_lorentz[m];
  for (int m = 0; m < n; ++m) k.col(m) -= geo.nabla_lorentz[m] * v;
  k -= 0.25 * geo.lorentz * geo.lorentz;
  return k;
}

}  // namespace

MatrixXd FoulonData::jacobi_operator_chart(double t) const {
  VectorXd x, v;
  traj.eval(t, x, v);
  GeometryEval geo = evaluate_geometry(traj.spec, x);
  return jacobi_operator_chart_impl(geo, v);
}

void FoulonData::eval(double t, MatrixXd& K, VectorXd& xi) const {
  VectorXd x, v;
  traj.eval(t, x, v);
  GeometryEval geo = evaluate_geometry(traj.spec, x);
  MatrixXd kc = jacobi_operator_chart_impl(geo, v);
  MatrixXd f = frame.eval(t);
  K = f.transpose() * geo.g * kc * f;
  K = 0.5 * (K + K.transpose());
  xi = f.transpose() * (geo.g * (geo.lorentz * v));
}

MatrixXd FoulonData::K(double t) const {
  MatrixXd k;
  VectorXd xi;
  eval(t, k, xi);
  return k;
}

VectorXd FoulonData::xi(double t) const {
  MatrixXd k;
  VectorXd xi;
  eval(t, k, xi);
  return xi;
}

FoulonData foulon_data(const Trajectory& traj, const ParallelFrame& frame) {
  return FoulonData{traj, frame};
}

}  // namespace emaslov
