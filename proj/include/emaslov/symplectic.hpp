// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "emaslov/errors.hpp"

namespace emaslov {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Finite-dimensional real symplectic vector space (R^{2n}, omega) with
/// omega[u, v] = u^T Omega v for an antisymmetric invertible Omega.
struct SymplecticSpace {
  MatrixXd omega;

  int n() const { return static_cast<int>(omega.rows()) / 2; }
  int dim() const { return static_cast<int>(omega.rows()); }
  void validate() const;
  /// Basis D with D^T Omega D = [[0, I], [-I, 0]].
  MatrixXd darboux_basis() const;
};

/// 2n x n full-rank frame spanning a Lagrangian subspace.
struct LagrangianFrame {
  MatrixXd a;

  /// Frame with Euclidean-orthonormal columns spanning the same subspace.
  MatrixXd orthonormal() const;
};

LagrangianFrame make_lagrangian(const SymplecticSpace& space, const MatrixXd& frame,
                                double tol = 1e-9);
LagrangianFrame random_lagrangian(const SymplecticSpace& space, std::mt19937_64& rng);

/// Smallest principal angle between the column spans (0 iff they intersect).
double smallest_principal_angle(const MatrixXd& a, const MatrixXd& b);
/// Largest principal angle (the gap metric's arcsin distance).
double largest_principal_angle(const MatrixXd& a, const MatrixXd& b);
/// Basis (possibly empty) of span(a) intersect span(b).
MatrixXd subspace_intersection(const MatrixXd& a, const MatrixXd& b, double tol = 1e-7);

/// Signature counts of a symmetric matrix with a relative zero threshold.
struct SignatureCounts {
  int positive = 0;
  int negative = 0;
  int zero = 0;
  int signature() const { return positive - negative; }
  bool nondegenerate() const { return zero == 0; }
};
SignatureCounts signature_counts(const MatrixXd& sym, double rel_tol = 1e-8);

/// Matrix (in the basis of L0's frame) of the chart form
/// phi_{L0,L1}(L) = omega[T ., .]|_{L0}, where L = graph of T : L0 -> L1.
MatrixXd chart_form(const SymplecticSpace& space, const LagrangianFrame& l0,
                    const LagrangianFrame& l1, const LagrangianFrame& l);

/// A sampled Lagrangian path with an optional refinement callback that
/// re-evaluates the underlying frame at new parameter values.
struct LagrangianPath {
  std::vector<double> times;
  std::vector<MatrixXd> frames;
  std::function<MatrixXd(double)> refine;
};

struct MaslovOptions {
  bool require_integer = true;
  std::uint64_t seed = 1;
  int aux_tries = 60;
  int max_depth = 20;
  double transversality = 1e-6;
  double continuity_angle = 0.1;  // radians
};

/// Maslov index of the path with respect to L0, doubled (exact half-integers).
int maslov_index_doubled(const SymplecticSpace& space, const LagrangianPath& path,
                         const LagrangianFrame& l0, const MaslovOptions& options = {});
/// Integer Maslov index; throws NonIntegerResult if endpoints touch Sigma(L0).
int maslov_index(const SymplecticSpace& space, const LagrangianPath& path,
                 const LagrangianFrame& l0, const MaslovOptions& options = {});

struct CrossingData {
  int kernel_dim = 0;
  bool nondegenerate = false;
  int signature = 0;
};

/// Crossing form of a C^1 path at an isolated intersection t0 with Sigma(L0):
/// the derivative of the chart representation restricted to ell(t0) cap L0.
CrossingData crossing_signature(const SymplecticSpace& space,
                                const std::function<MatrixXd(double)>& path,
                                const LagrangianFrame& l0, double t0, double h = 1e-5,
                                std::uint64_t seed = 1);

/// Kashiwara index of a Lagrangian triplet: signature of
/// omega[v1,v2] + omega[v2,v3] + omega[v3,v1] on L1 (+) L2 (+) L3.
int kashiwara_tau(const SymplecticSpace& space, const LagrangianFrame& l1,
                  const LagrangianFrame& l2, const LagrangianFrame& l3);

}  // namespace emaslov
