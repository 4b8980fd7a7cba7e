// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "emaslov/config.hpp"
#include "emaslov/errors.hpp"

namespace emaslov {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// A chart-valued matrix field (metric or electromagnetic 2-form) with
/// optional analytic first and second partials.
class MatrixField {
 public:
  virtual ~MatrixField() = default;
  virtual MatrixXd value(const VectorXd& x) const = 0;
  virtual bool has_analytic_derivatives() const { return false; }
  /// out[k] = d(value)/dx_k
  virtual void d1(const VectorXd& x, std::vector<MatrixXd>& out) const;
  /// out[k][l] = d^2(value)/dx_k dx_l
  virtual void d2(const VectorXd& x, std::vector<std::vector<MatrixXd>>& out) const;
};

std::shared_ptr<const MatrixField> make_constant_field(const MatrixXd& value);
std::shared_ptr<const MatrixField> make_round_sphere_metric();
std::shared_ptr<const MatrixField> make_poly_field(int dim, std::vector<std::vector<Polynomial>> entries);
/// Uniform magnetic field on an oriented 2d chart: b times the metric area
/// form, sigma = b sqrt(|det g|) dx0 ^ dx1.
std::shared_ptr<const MatrixField> make_area_field(std::shared_ptr<const MatrixField> metric,
                                                   double b);

enum class DerivativeProvider { analytic, finite_difference };

/// Chart-based definition of (g, sigma): the problem input.
///
/// Immutable after construction; all evaluations are pure functions of
/// (spec, x) and safe to share across concurrent workers.
struct GeometrySpec {
  int dim = 0;
  int metric_index = 0;  // index p of g
  std::shared_ptr<const MatrixField> metric;
  std::shared_ptr<const MatrixField> sigma;
  DerivativeProvider provider = DerivativeProvider::analytic;
  double fd_step = 1e-5;       // first-derivative stencils, scaled by (1 + |x|)
  double fd_step2 = 5e-4;      // second-derivative stencils, scaled by (1 + |x|)
  double degeneracy_tol = 1e-10;
  double closedness_tol = 1e-8;
  std::function<bool(const VectorXd&)> chart_ok;  // empty = whole chart valid

  /// Load from a config file with [metric] and [sigma] sections.
  static GeometrySpec from_config(const ConfigFile& config);
};

/// Everything the downstream modules need at a single chart point.
struct GeometryEval {
  VectorXd x;
  MatrixXd g, g_inv;
  std::vector<MatrixXd> dg;                      // dg[k] = d_k g
  std::vector<std::vector<MatrixXd>> d2g;        // d2g[k][l]
  MatrixXd sigma;                                // matrix of the 2-form, sigma[u,v] = u^T S v
  std::vector<MatrixXd> dsigma;
  std::vector<MatrixXd> christoffel;             // christoffel[k](i,j) = Gamma^k_{ij}
  std::vector<std::vector<MatrixXd>> dchristoffel;  // [m][k](i,j) = d_m Gamma^k_{ij}
  MatrixXd lorentz;                              // Y = g^{-1} S
  std::vector<MatrixXd> dlorentz;                // d_k Y
  std::vector<MatrixXd> nabla_lorentz;           // nabla_lorentz[k] = (nabla_{e_k} Y)

  /// (R(u, v) w)^l with the convention R(X,Y) = [nabla_X, nabla_Y] - nabla_[X,Y].
  VectorXd curvature_apply(const VectorXd& u, const VectorXd& v, const VectorXd& w) const;
  /// Matrix of u -> R(u, v) w.
  MatrixXd curvature_operator(const VectorXd& v, const VectorXd& w) const;
  /// (Gamma contracted) covariant quadratic term: (Gamma^k_{ij} a^i b^j)_k.
  VectorXd gamma_quad(const VectorXd& a, const VectorXd& b) const;
};

/// Full evaluation at x. Checks g nondegenerate/symmetric, sigma antisymmetric,
/// and d(sigma) = 0; a closedness violation is a hard error.
GeometryEval evaluate_geometry(const GeometrySpec& spec, const VectorXd& x);

/// Individual operations (each evaluates only what it needs).
std::vector<MatrixXd> christoffel(const GeometrySpec& spec, const VectorXd& x);
MatrixXd lorentz_force(const GeometrySpec& spec, const VectorXd& x);
std::vector<MatrixXd> nabla_Y(const GeometrySpec& spec, const VectorXd& x);

/// Residual of the cyclic identity g[u,(nabla_v Y)w] + cyclic = 0 on basis triples.
double closedness_residual(const GeometryEval& eval);

}  // namespace emaslov
