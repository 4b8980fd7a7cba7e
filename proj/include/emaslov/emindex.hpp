// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "emaslov/jacobi.hpp"
#include "emaslov/symplectic.hpp"

namespace emaslov {

/// Electromagnetic Lagrangian data at (p, v) = (gamma(0), gd(0)), in frame
/// coordinates of T_p M (+) T_p M:
///  - the symplectic form omega[(u1,v1),(u2,v2)] = g[v1,u2] - g[u1,v2] + sigma[u1,u2];
///  - the vertical reference {0} (+) T_p M;
///  - the energy-level reference L = <S> + {0} (+) <v>^perp, S = (v, Y[v]);
///  - the path ell_check(t) = Phi_t^{-1}(vertical at gamma(t)).
struct EMLagrangianSetup {
  TransferPath transfer;  // ordinary flavor
  SymplecticSpace space;
  LagrangianFrame vertical;
  LagrangianFrame l_ref;
  VectorXd s0;            // S at t = 0, frame coordinates
  double l_ref_condition = 1.0;  // frame conditioning; grows as v approaches a null direction

  /// Raw (continuous-in-t) frame of ell_check(t).
  MatrixXd ell_check(double t) const;
  /// Sampled path over [a, b] with a refinement callback.
  LagrangianPath sampled_path(double a, double b, int samples = 512) const;
};

EMLagrangianSetup build_setup(const Trajectory& traj, const TransferPath& transfer_ordinary);

/// Maslov index of ell_check|[eps, T] w.r.t. the vertical.
int ordinary_maslov(const EMLagrangianSetup& setup, double eps, double T, std::uint64_t seed = 1);
/// Maslov index of ell_check|[eps, T] w.r.t. L (the reduction shortcut).
int ec_maslov(const EMLagrangianSetup& setup, double eps, double T, std::uint64_t seed = 1);

/// mu_ec - mu_ordinary computed two ways: direct Kashiwara evaluation of
/// (1/2) tau(L, V, ell(T)) - (1/2) tau(L, V, ell(eps)), and the J*-slope sign
/// table. The two must agree; disagreement throws.
struct KashiwaraDifference {
  int direct = 0;
  int sign_table = 0;
};
KashiwaraDifference kashiwara_difference(const EMLagrangianSetup& setup, double eps, double T);

/// g[D J*_s/dt, gd]|_{t=s} for the unique ordinary Jacobi field with
/// J(0) = 0, J(s) = gd(s). Throws ConjugateEndpoint when s is conjugate.
double jstar_slope_product(const EMLagrangianSetup& setup, double s);

/// Times in [a, b] where ell_check(t) meets the Maslov cycle of the given
/// reference Lagrangian (rank drop of the concatenated frame).
std::vector<double> reference_crossing_times(const EMLagrangianSetup& setup,
                                             const LagrangianFrame& reference, double a, double b,
                                             int grid = 2048);

}  // namespace emaslov
