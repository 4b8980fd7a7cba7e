// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include <Eigen/Dense>

#include "emaslov/flow.hpp"

namespace emaslov {

enum class JacobiFlavor { ordinary, energy_constrained };

/// Solution of the (ordinary or energy-constrained) Jacobi equation along a
/// trajectory, stored as the pair (J, DJ/dt) in chart coordinates.
///
/// Energy-constrained flavor:
///   D^2 J/dt^2 + R(J, gd) gd - (nabla_J Y)[gd] - Y[DJ/dt] - (c/2k) Y[gd] = 0
/// with the constant c = g[DJ/dt(0), gd(0)]; the ordinary flavor erases the
/// last term. For ec solutions g[DJ/dt(t), gd(t)] stays equal to c.
struct JacobiSolution {
  JacobiFlavor flavor = JacobiFlavor::ordinary;
  VectorXd u, w;   // initial value and initial covariant slope
  double c = 0.0;  // g[w, gd(0)] for the ec flavor
  DenseSolution sol;
  int n = 0;

  void eval(double t, VectorXd& j, VectorXd& dj) const;
  VectorXd value(double t) const;
  VectorXd slope(double t) const;
};

JacobiSolution solve_jacobi(const Trajectory& traj, JacobiFlavor flavor, const VectorXd& u,
                            const VectorXd& w, const OdeOptions& options = {});

/// Linearized propagator along the trajectory, expressed in the D_t-parallel
/// frame: columns are the 2n Jacobi solutions with frame-basis initial data.
/// The (u = 0) sub-block is the w-parametrized family whose rank drops detect
/// conjugate instants.
struct TransferPath {
  JacobiFlavor flavor = JacobiFlavor::ordinary;
  Trajectory traj;
  ParallelFrame frame;
  std::vector<JacobiSolution> columns;  // 2n
  std::vector<double> sample_times;
  std::vector<MatrixXd> samples;

  int n() const { return traj.dim(); }
  /// 2n x 2n propagator at t, frame coordinates at both ends.
  MatrixXd eval(double t) const;
  /// Top-right n x n block of eval(t): J-components of the w-basis family.
  MatrixXd jblock(double t) const;
  /// Bottom-right n x n block: DJ/dt components of the w-basis family.
  MatrixXd slope_block(double t) const;
  /// Frame matrix at t of omega (ordinary flavor) or omega-hat (ec flavor).
  MatrixXd omega_matrix(double t) const;
  /// Frame coordinates of the Hamiltonian vector S = (gd, Y[gd]) at t.
  VectorXd s_vector(double t) const;
};

TransferPath build_transfer(const Trajectory& traj, const ParallelFrame& frame,
                            JacobiFlavor flavor, int n_samples = 512);

struct ConjugateInstant {
  double t = 0.0;
  JacobiFlavor flavor = JacobiFlavor::ordinary;
  int multiplicity = 0;
  MatrixXd jprime;           // chart-coordinate slope vectors, one column per kernel direction
  bool nondegenerate = false;
  int signature = 0;         // sig(g_t | J'[t0]) (ec) or sig(g | J'[t0]) (ordinary)
  bool even_contact = false; // det M touched zero without a sign change
  double constraint_c = 0.0; // c of the first kernel solution (ec flavor)
};

struct ConjugateScanOptions {
  int grid = 2048;
  double time_tol = 1e-10;      // scaled by max(1, window length)
  double kernel_rel = 1e-7;     // singular values below this (relative) count as kernel
  double ambiguous_rel = 1e-5;  // dip below this but above kernel_rel is an error
};

/// Rank-deficiency scan of the J-block over [a, b] (0 < a <= b <= T).
std::vector<ConjugateInstant> find_conjugate_instants(const TransferPath& transfer, double a,
                                                      double b,
                                                      const ConjugateScanOptions& options = {});

/// The degenerate metric g_t = g - (1/2k) g[gd, .] (x) g[gd, .], chart coords.
MatrixXd metric_g_t(const Trajectory& traj, double t);

/// Epsilon below the first crossing of either flavor, floored at four mean
/// integrator steps; used as the left endpoint of index windows.
double choose_epsilon(const std::vector<ConjugateInstant>& ordinary,
                      const std::vector<ConjugateInstant>& energy_constrained, double T,
                      double mean_step);

}  // namespace emaslov
