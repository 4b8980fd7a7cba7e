// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <vector>

#include "emaslov/flow.hpp"

namespace emaslov {

/// Piecewise-linear H^1_0 Galerkin discretization on [0, 1] with N elements:
/// hats h_1..h_{N-1} per coordinate plus one scalar coordinate for B.
/// Total dimension n(N-1) + 1.
struct GalerkinSpace {
  int n = 0;
  int elements = 0;
  int dim() const { return n * (elements - 1) + 1; }
  int restricted_dim() const { return n * (elements - 1); }
};

/// Hat-basis Gram matrices on [0, 1]: int h_a h_b (assembled with the same
/// 3-point Gauss rule the forms use; exact for these integrands) and the
/// exact stiffness int h_a' h_b'. Both are positive definite.
MatrixXd hat_mass_matrix(int elements);
MatrixXd hat_stiffness_matrix(int elements);

/// Path s -> Q_s of index forms on the Galerkin space, assembled from
///   Q_s[(v1,B1),(v2,B2)] = (1/s) int <I_{n,p} v1', v2'> - (1/s) int <K_s v1, v2>
///                        + B1 (1/s) int <v2, xi_s> + B2 (1/s) int <v1, xi_s>
///                        + 2 kappa s B1 B2,
/// with K_s(t) = s^2 K(st) and xi_s(t) = s^2 xi(st).
class FormPath {
 public:
  FormPath(FoulonData foulon, double kappa, double T);

  /// Full form on H = H^1_0 x R (dimension n(N-1) + 1).
  MatrixXd assemble(double s, int elements) const;
  /// Restriction to V = H^1_0 x {0} (the classical index form of gamma|[0,s]).
  MatrixXd assemble_restricted(double s, int elements) const;

  double kappa() const { return kappa_; }
  double horizon() const { return T_; }
  const FoulonData& foulon() const { return foulon_; }

 private:
  FoulonData foulon_;
  double kappa_ = 0.0;
  double T_ = 0.0;
};

/// Morse index (negative eigenvalue count) with a relative zero threshold.
int form_index(const MatrixXd& form, bool* degenerate = nullptr, double rel_tol = 1e-8);

/// Spectral flow over [a, b] as ind(Q_a) - ind(Q_b), computed at N and 2N
/// elements; the two must agree (NotConverged otherwise). Endpoints must be
/// nondegenerate (DegenerateEndpoint).
int spectral_flow(const FormPath& path, double a, double b, int elements, bool restricted = false);

/// Finite-dimensional convention for a generic symmetric matrix path.
int spectral_flow_matrices(const std::function<MatrixXd(double)>& path, double a, double b,
                           double rel_tol = 1e-8);

/// Brute-force oracle: per-branch signed zero crossings of the sorted
/// eigenvalue curves on a fine grid.
int eigenvalue_crossing_count(const std::function<MatrixXd(double)>& path, double a, double b,
                              int grid = 2000);

/// ind(Q_s | V^{perp_{Q_s}}) via the Schur complement of the V-block; in {0, 1}.
int index_of_restriction_complement(const FormPath& path, double s, int elements);

struct RestrictionDifference {
  int sf_full = 0;
  int sf_restricted = 0;
  int ind_a = 0;
  int ind_b = 0;
  bool holds() const { return sf_full - sf_restricted == ind_a - ind_b; }
};

/// Both sides of the restriction formula
///   sf(Q,[a,b]) - sf(Q|V,[a,b]) = ind Q_a|V^perp - ind Q_b|V^perp.
RestrictionDifference restriction_difference(const FormPath& path, double a, double b,
                                             int elements);

/// Degenerate instants of s -> Q_s on [a, b]: index jumps located by
/// bisection on a uniform grid, refined x4 near detections.
std::vector<double> degenerate_instants(const FormPath& path, double a, double b, int elements,
                                        int grid = 512, bool restricted = false);

/// Eight smallest-magnitude eigenvalues plus the index, for CSV traces.
struct EigenTraceRow {
  double s = 0.0;
  std::vector<double> smallest;  // up to 8
  int index = 0;
};
std::vector<EigenTraceRow> eigen_trace(const FormPath& path, double a, double b, int elements,
                                       int samples, bool restricted = false);

}  // namespace emaslov
