// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include <Eigen/Dense>

#include "emaslov/geometry.hpp"
#include "emaslov/ode.hpp"

namespace emaslov {

/// Densely sampled electromagnetic geodesic with re-evaluation capability.
///
/// Solves the Lorentz force equation D(dot gamma)/dt = Y(gamma)[dot gamma],
/// in chart coordinates: ddot x^k + Gamma^k_{ij} xdot^i xdot^j = (Y xdot)^k.
/// The energy E = (1/2) g[xdot, xdot] is a first integral; the recorded
/// drift is checked against energy_tol by the test suites.
struct Trajectory {
  GeometrySpec spec;
  double kappa = 0.0;  // E(x0, v0)
  double T = 0.0;
  DenseSolution sol;   // state (x, v), dimension 2n
  double energy_drift = 0.0;
  bool zero_energy = false;  // flagged here; energy-constrained consumers reject it

  int dim() const { return spec.dim; }
  void eval(double t, VectorXd& x, VectorXd& v) const;
  VectorXd position(double t) const;
  VectorXd velocity(double t) const;
  double energy(double t) const;
  double mean_step() const { return sol.mean_step(); }
};

Trajectory integrate_em_geodesic(const GeometrySpec& spec, const VectorXd& x0, const VectorXd& v0,
                                 double T, const OdeOptions& options = {});

/// D_t-parallel g-orthonormal frame E_1..E_n along a trajectory, with the
/// timelike (negative) directions first so the Gram matrix is I_{n,p}.
/// D_t V = DV/dt - (1/2) Y[V], so the columns solve DE/dt = (1/2) Y[E].
struct ParallelFrame {
  int n = 0;
  MatrixXd inp;        // I_{n,p}
  DenseSolution sol;   // flattened n*n frame matrix, column-major
  double gram_drift = 0.0;

  MatrixXd eval(double t) const;
  /// Coordinates of a chart vector u at gamma(t) in the frame: F(t)^{-1} u,
  /// computed as I_{n,p} F^T g u.
  VectorXd to_frame(const GeometryEval& geo, const MatrixXd& frame_matrix, const VectorXd& u) const;
};

struct FrameOptions {
  /// Extra candidate vectors tried first by the Gram-Schmidt sweep
  /// (the unit tangent is always tried first when non-null).
  std::vector<VectorXd> preferred;
  /// Optional constant rotation applied to the initial frame (must preserve
  /// I_{n,p}); used to exercise frame independence.
  MatrixXd initial_rotation;
};

ParallelFrame build_parallel_frame(const Trajectory& traj, const FrameOptions& options = {});

/// Frame data for the index forms: K(t) = I_{n,p} * (frame matrix of the
/// Jacobi operator K) and xi(t) = I_{n,p} * (frame coordinates of Y[gamma dot]),
/// with K v = R(v, gd) gd + (1/2)(nabla_gd Y)[v] - (nabla_v Y)[gd] - (1/4) Y^2[v].
struct FoulonData {
  Trajectory traj;
  ParallelFrame frame;

  void eval(double t, MatrixXd& K, VectorXd& xi) const;
  MatrixXd K(double t) const;
  VectorXd xi(double t) const;
  /// Chart-coordinate matrix of the Jacobi operator at time t.
  MatrixXd jacobi_operator_chart(double t) const;
};

FoulonData foulon_data(const Trajectory& traj, const ParallelFrame& frame);

}  // namespace emaslov
