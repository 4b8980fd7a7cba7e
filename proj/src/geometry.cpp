// SPDX-License-Identifier: Apache-2.0
#include "emaslov/geometry.hpp"

#include <cmath>
#include <sstream>

namespace emaslov {

namespace {

double scale_of(const MatrixXd& m) { return std::max(1.0, m.cwiseAbs().maxCoeff()); }

class ConstantField final : public MatrixField {
 public:
  explicit ConstantField(MatrixXd value) : value_(std::move(value)) {}
  MatrixXd value(const VectorXd&) const override { return value_; }
  bool has_analytic_derivatives() const override { return true; }
  void d1(const VectorXd& x, std::vector<MatrixXd>& out) const override {
    out.assign(x.size(), MatrixXd::Zero(value_.rows(), value_.cols()));
  }
  void d2(const VectorXd& x, std::vector<std::vector<MatrixXd>>& out) const override {
    const int n = static_cast<int>(x.size());
    out.assign(n, std::vector<MatrixXd>(n, MatrixXd::Zero(value_.rows(), value_.cols())));
  }

 private:
  MatrixXd value_;
};

// Chart (theta, phi) with g = diag(1, sin^2 theta).
class RoundSphereMetric final : public MatrixField {
 public:
  MatrixXd value(const VectorXd& x) const override {
    MatrixXd g = MatrixXd::Identity(2, 2);
    const double s = std::sin(x[0]);
    g(1, 1) = s * s;
    return g;
  }
  bool has_analytic_derivatives() const override { return true; }
  void d1(const VectorXd& x, std::vector<MatrixXd>& out) const override {
    out.assign(2, MatrixXd::Zero(2, 2));
    out[0](1, 1) = std::sin(2.0 * x[0]);
  }
  void d2(const VectorXd& x, std::vector<std::vector<MatrixXd>>& out) const override {
    out.assign(2, std::vector<MatrixXd>(2, MatrixXd::Zero(2, 2)));
    out[0][0](1, 1) = 2.0 * std::cos(2.0 * x[0]);
  }
};

class PolyMatrixField final : public MatrixField {
 public:
  PolyMatrixField(int dim, std::vector<std::vector<Polynomial>> entries)
      : dim_(dim), entries_(std::move(entries)) {}
  MatrixXd value(const VectorXd& x) const override {
    const int m = static_cast<int>(entries_.size());
    MatrixXd out(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) out(i, j) = entries_[i][j].eval(x);
    return out;
  }
  bool has_analytic_derivatives() const override { return true; }
  void d1(const VectorXd& x, std::vector<MatrixXd>& out) const override {
    const int m = static_cast<int>(entries_.size());
    out.assign(dim_, MatrixXd::Zero(m, m));
    for (int k = 0; k < dim_; ++k)
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) out[k](i, j) = entries_[i][j].derivative(k).eval(x);
  }
  void d2(const VectorXd& x, std::vector<std::vector<MatrixXd>>& out) const override {
    const int m = static_cast<int>(entries_.size());
    out.assign(dim_, std::vector<MatrixXd>(dim_, MatrixXd::Zero(m, m)));
    for (int k = 0; k < dim_; ++k)
      for (int l = 0; l < dim_; ++l)
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < m; ++j)
            out[k][l](i, j) = entries_[i][j].derivative(k).derivative(l).eval(x);
  }

 private:
  int dim_;
  std::vector<std::vector<Polynomial>> entries_;
};

// b times the metric area form on a 2d chart: sigma = b sqrt(|det g|) dx0 ^ dx1.
class AreaField final : public MatrixField {
 public:
  AreaField(std::shared_ptr<const MatrixField> metric, double b)
      : metric_(std::move(metric)), b_(b) {}
  MatrixXd value(const VectorXd& x) const override {
    MatrixXd s(2, 2);
    const double density = std::sqrt(std::abs(metric_->value(x).determinant()));
    s << 0, b_ * density, -b_ * density, 0;
    return s;
  }
  bool has_analytic_derivatives() const override {
    return metric_->has_analytic_derivatives();
  }
  void d1(const VectorXd& x, std::vector<MatrixXd>& out) const override {
    MatrixXd g = metric_->value(x);
    std::vector<MatrixXd> dg;
    metric_->d1(x, dg);
    const double density = std::sqrt(std::abs(g.determinant()));
    MatrixXd g_inv = g.inverse();
    out.assign(x.size(), MatrixXd::Zero(2, 2));
    for (int k = 0; k < static_cast<int>(x.size()); ++k) {
      // Jacobi's formula: d_k sqrt(det g) = (1/2) sqrt(det g) tr(g^{-1} d_k g)
      const double dd = 0.5 * density * (g_inv * dg[k]).trace();
      out[k](0, 1) = b_ * dd;
      out[k](1, 0) = -b_ * dd;
    }
  }

 private:
  std::shared_ptr<const MatrixField> metric_;
  double b_;
};

// Order-4 central stencils.
void fd_d1(const MatrixField& field, const VectorXd& x, double h, std::vector<MatrixXd>& out) {
  const int n = static_cast<int>(x.size());
  out.resize(n);
  VectorXd p = x;
  for (int k = 0; k < n; ++k) {
    p = x;
    p[k] = x[k] + 2 * h;
    MatrixXd f_p2 = field.value(p);
    p[k] = x[k] + h;
    MatrixXd f_p1 = field.value(p);
    p[k] = x[k] - h;
    MatrixXd f_m1 = field.value(p);
    p[k] = x[k] - 2 * h;
    MatrixXd f_m2 = field.value(p);
    out[k] = (-f_p2 + 8.0 * f_p1 - 8.0 * f_m1 + f_m2) / (12.0 * h);
  }
}

void fd_d2(const MatrixField& field, const VectorXd& x, double h,
           std::vector<std::vector<MatrixXd>>& out) {
  const int n = static_cast<int>(x.size());
  out.assign(n, std::vector<MatrixXd>(n));
  VectorXd p = x;
  const MatrixXd f0 = field.value(x);
  for (int k = 0; k < n; ++k) {
    // diagonal: order-4 second-derivative stencil
    p = x;
    p[k] = x[k] + 2 * h;
    MatrixXd f_p2 = field.value(p);
    p[k] = x[k] + h;
    MatrixXd f_p1 = field.value(p);
    p[k] = x[k] - h;
    MatrixXd f_m1 = field.value(p);
    p[k] = x[k] - 2 * h;
    MatrixXd f_m2 = field.value(p);
    out[k][k] = (-f_p2 + 16.0 * f_p1 - 30.0 * f0 + 16.0 * f_m1 - f_m2) / (12.0 * h * h);
  }
  // mixed: nested order-4 first-derivative stencils
  const double w[4] = {-1.0, 8.0, -8.0, 1.0};
  const double o[4] = {2.0, 1.0, -1.0, -2.0};
  for (int k = 0; k < n; ++k) {
    for (int l = k + 1; l < n; ++l) {
      MatrixXd acc;
      for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) {
          p = x;
          p[k] = x[k] + o[a] * h;
          p[l] = x[l] + o[b] * h;
          MatrixXd f = field.value(p);
          if (acc.size() == 0)
            acc = (w[a] * w[b]) * f;
          else
            acc += (w[a] * w[b]) * f;
        }
      }
      out[k][l] = acc / (144.0 * h * h);
      out[l][k] = out[k][l];
    }
  }
}

void check_metric(const GeometrySpec& spec, const VectorXd& x, const MatrixXd& g) {
  const double scale = scale_of(g);
  if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw Error("metric matrix is not symmetric at the queried point");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (g + g.transpose()));
  const VectorXd ev = es.eigenvalues();
  const double max_abs = ev.cwiseAbs().maxCoeff();
  const double min_abs = ev.cwiseAbs().minCoeff();
  if (min_abs <= spec.degeneracy_tol * max_abs) {
    std::ostringstream os;
    os << "metric degenerate at x = [" << x.transpose() << "]";
    throw DegenerateMetric(os.str());
  }
  int negatives = 0;
  for (int i = 0; i < ev.size(); ++i)
    if (ev[i] < 0) ++negatives;
  if (negatives != spec.metric_index)
    throw Error("metric index mismatch: spec declares p = " + std::to_string(spec.metric_index) +
                " but g has " + std::to_string(negatives) + " negative eigenvalues");
}

void check_sigma(const GeometrySpec& spec, const MatrixXd& s, const std::vector<MatrixXd>& ds) {
  const double scale = scale_of(s);
  if ((s + s.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw Error("sigma matrix is not antisymmetric at the queried point");
  // d(sigma)_{ijk} = d_i s_{jk} + d_j s_{ki} + d_k s_{ij} must vanish.
  const int n = spec.dim;
  double dscale = 1.0;
  for (const MatrixXd& m : ds) dscale = std::max(dscale, m.cwiseAbs().maxCoeff());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k) {
        const double r = ds[i](j, k) + ds[j](k, i) + ds[k](i, j);
        if (std::abs(r) > spec.closedness_tol * dscale)
          throw Error("sigma is not closed: d(sigma) residual " + std::to_string(r));
      }
}

}  // namespace

void MatrixField::d1(const VectorXd&, std::vector<MatrixXd>&) const {
  throw DerivativeUnavailable("matrix field has no analytic first derivatives");
}

void MatrixField::d2(const VectorXd&, std::vector<std::vector<MatrixXd>>&) const {
  throw DerivativeUnavailable("matrix field has no analytic second derivatives");
}

std::shared_ptr<const MatrixField> make_constant_field(const MatrixXd& value) {
  return std::make_shared<ConstantField>(value);
}

std::shared_ptr<const MatrixField> make_round_sphere_metric() {
  return std::make_shared<RoundSphereMetric>();
}

std::shared_ptr<const MatrixField> make_poly_field(int dim,
                                                   std::vector<std::vector<Polynomial>> entries) {
  return std::make_shared<PolyMatrixField>(dim, std::move(entries));
}

std::shared_ptr<const MatrixField> make_area_field(std::shared_ptr<const MatrixField> metric,
                                                   double b) {
  return std::make_shared<AreaField>(std::move(metric), b);
}

VectorXd GeometryEval::curvature_apply(const VectorXd& u, const VectorXd& v,
                                       const VectorXd& w) const {
  return curvature_operator(v, w) * u;
}

MatrixXd GeometryEval::curvature_operator(const VectorXd& v, const VectorXd& w) const {
  const int n = static_cast<int>(x.size());
  MatrixXd m = MatrixXd::Zero(n, n);
  // (R(u,v)w)^l = [d_i G^l_{jk} - d_j G^l_{ik} + G^l_{im} G^m_{jk} - G^l_{jm} G^m_{ik}] u^i v^j w^k
  for (int l = 0; l < n; ++l) {
    for (int i = 0; i < n; ++i) {
      double term = v.dot(dchristoffel[i][l] * w);
      for (int j = 0; j < n; ++j) term -= v[j] * (dchristoffel[j][l] * w)(i);
      for (int mm = 0; mm < n; ++mm) {
        term += christoffel[l](i, mm) * v.dot(christoffel[mm] * w);
        term -= (christoffel[l] * v)(mm) * (christoffel[mm] * w)(i);
      }
      m(l, i) = term;
    }
  }
  return m;
}

VectorXd GeometryEval::gamma_quad(const VectorXd& a, const VectorXd& b) const {
  const int n = static_cast<int>(x.size());
  VectorXd out(n);
  for (int k = 0; k < n; ++k) out[k] = a.dot(christoffel[k] * b);
  return out;
}

GeometryEval evaluate_geometry(const GeometrySpec& spec, const VectorXd& x) {
  if (static_cast<int>(x.size()) != spec.dim) throw Error("chart point has wrong dimension");
  if (spec.chart_ok && !spec.chart_ok(x)) {
    std::ostringstream os;
    os << "chart point [" << x.transpose() << "] outside validity region";
    throw ChartExit(os.str());
  }
  GeometryEval ev;
  ev.x = x;
  ev.g = spec.metric->value(x);
  check_metric(spec, x, ev.g);
  ev.g = 0.5 * (ev.g + ev.g.transpose());
  ev.g_inv = ev.g.inverse();
  ev.sigma = spec.sigma->value(x);
  ev.sigma = 0.5 * (ev.sigma - ev.sigma.transpose());

  const double h1 = spec.fd_step * (1.0 + x.norm());
  const double h2 = spec.fd_step2 * (1.0 + x.norm());
  if (spec.provider == DerivativeProvider::analytic) {
    if (!spec.metric->has_analytic_derivatives() || !spec.sigma->has_analytic_derivatives())
      throw DerivativeUnavailable("analytic provider selected but a field lacks derivatives");
    spec.metric->d1(x, ev.dg);
    spec.metric->d2(x, ev.d2g);
    spec.sigma->d1(x, ev.dsigma);
  } else {
    fd_d1(*spec.metric, x, h1, ev.dg);
    fd_d2(*spec.metric, x, h2, ev.d2g);
    fd_d1(*spec.sigma, x, h1, ev.dsigma);
  }
  check_sigma(spec, spec.sigma->value(x), ev.dsigma);

  const int n = spec.dim;
  // Gamma^k_{ij} = (1/2) g^{kl} (d_i g_{lj} + d_j g_{li} - d_l g_{ij})
  ev.christoffel.assign(n, MatrixXd::Zero(n, n));
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int l = 0; l < n; ++l)
          acc += ev.g_inv(k, l) * (ev.dg[i](l, j) + ev.dg[j](l, i) - ev.dg[l](i, j));
        ev.christoffel[k](i, j) = 0.5 * acc;
      }

  // d_m g^{kl} = -(g^{-1} d_m g g^{-1})^{kl}
  std::vector<MatrixXd> dg_inv(n);
  for (int m = 0; m < n; ++m) dg_inv[m] = -ev.g_inv * ev.dg[m] * ev.g_inv;
  ev.dchristoffel.assign(n, std::vector<MatrixXd>(n, MatrixXd::Zero(n, n)));
  for (int m = 0; m < n; ++m)
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double acc = 0.0;
          for (int l = 0; l < n; ++l) {
            acc += dg_inv[m](k, l) * (ev.dg[i](l, j) + ev.dg[j](l, i) - ev.dg[l](i, j));
            acc += ev.g_inv(k, l) *
                   (ev.d2g[m][i](l, j) + ev.d2g[m][j](l, i) - ev.d2g[m][l](i, j));
          }
          ev.dchristoffel[m][k](i, j) = 0.5 * acc;
        }

  ev.lorentz = ev.g_inv * ev.sigma;
  ev.dlorentz.resize(n);
  for (int k = 0; k < n; ++k) ev.dlorentz[k] = dg_inv[k] * ev.sigma + ev.g_inv * ev.dsigma[k];
  // (nabla_k Y) = d_k Y + G_k Y - Y G_k with (G_k)(i,m) = Gamma^i_{km}
  ev.nabla_lorentz.resize(n);
  for (int k = 0; k < n; ++k) {
    MatrixXd gk(n, n);
    for (int i = 0; i < n; ++i)
      for (int m = 0; m < n; ++m) gk(i, m) = ev.christoffel[i](k, m);
    ev.nabla_lorentz[k] = ev.dlorentz[k] + gk * ev.lorentz - ev.lorentz * gk;
  }
  return ev;
}

std::vector<MatrixXd> christoffel(const GeometrySpec& spec, const VectorXd& x) {
  return evaluate_geometry(spec, x).christoffel;
}

MatrixXd lorentz_force(const GeometrySpec& spec, const VectorXd& x) {
  return evaluate_geometry(spec, x).lorentz;
}

std::vector<MatrixXd> nabla_Y(const GeometrySpec& spec, const VectorXd& x) {
  return evaluate_geometry(spec, x).nabla_lorentz;
}

double closedness_residual(const GeometryEval& ev) {
  const int n = static_cast<int>(ev.x.size());
  std::vector<MatrixXd> gn(n);
  for (int k = 0; k < n; ++k) gn[k] = ev.g * ev.nabla_lorentz[k];
  double worst = 0.0;
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v)
      for (int w = 0; w < n; ++w)
        worst = std::max(std::abs(gn[v](u, w) + gn[w](v, u) + gn[u](w, v)), worst);
  return worst;
}

GeometrySpec GeometrySpec::from_config(const ConfigFile& config) {
  GeometrySpec spec;
  spec.dim = static_cast<int>(config.top.get_int("dim"));
  if (spec.dim <= 0) throw ConfigError("dim must be positive");
  spec.metric_index = static_cast<int>(config.top.get_int_or("metric_index", 0));
  if (spec.metric_index < 0 || spec.metric_index > spec.dim)
    throw ConfigError("metric_index must lie in [0, dim]");
  const std::string provider = config.top.get_string_or("provider", "analytic");
  if (provider == "analytic")
    spec.provider = DerivativeProvider::analytic;
  else if (provider == "finite_difference")
    spec.provider = DerivativeProvider::finite_difference;
  else
    throw ConfigError("provider must be 'analytic' or 'finite_difference'");
  spec.fd_step = config.top.get_double_or("fd_step", 1e-5);
  spec.fd_step2 = config.top.get_double_or("fd_step2", 5e-4);

  const ConfigSection& metric = config.section("metric");
  const std::string mkind = metric.get_string("builtin");
  if (mkind == "flat") {
    if (spec.metric_index != 0) throw ConfigError("flat metric has index 0");
    spec.metric = make_constant_field(MatrixXd::Identity(spec.dim, spec.dim));
  } else if (mkind == "minkowski") {
    if (spec.metric_index == 0) spec.metric_index = 1;
    VectorXd diag = VectorXd::Ones(spec.dim);
    for (int i = 0; i < spec.metric_index; ++i) diag[i] = -1.0;
    spec.metric = make_constant_field(diag.asDiagonal());
  } else if (mkind == "round_sphere") {
    if (spec.dim != 2) throw ConfigError("round_sphere metric requires dim = 2");
    if (spec.metric_index != 0) throw ConfigError("round_sphere metric has index 0");
    spec.metric = make_round_sphere_metric();
    spec.chart_ok = [](const VectorXd& x) { return x[0] > 1e-3 && x[0] < M_PI - 1e-3; };
  } else if (mkind == "poly") {
    std::vector<std::vector<Polynomial>> entries(
        spec.dim, std::vector<Polynomial>(spec.dim));
    for (const auto& [i, j, text, line] : metric.entries) {
      if (i >= spec.dim || j >= spec.dim)
        throw ConfigError("metric entry index out of range at line " + std::to_string(line));
      Polynomial p = Polynomial::parse(text, spec.dim);
      entries[i][j] = p;
      entries[j][i] = p;
    }
    spec.metric = make_poly_field(spec.dim, std::move(entries));
  } else {
    throw ConfigError("unknown metric builtin '" + mkind + "'");
  }

  MatrixXd zero = MatrixXd::Zero(spec.dim, spec.dim);
  if (!config.has_section("sigma")) {
    spec.sigma = make_constant_field(zero);
    return spec;
  }
  const ConfigSection& sigma = config.section("sigma");
  const std::string skind = sigma.get_string("builtin");
  if (skind == "none") {
    spec.sigma = make_constant_field(zero);
  } else if (skind == "constant") {
    if (spec.dim < 2) throw ConfigError("constant sigma requires dim >= 2");
    const double b = sigma.get_double("b");
    MatrixXd s = zero;
    s(0, 1) = b;
    s(1, 0) = -b;
    spec.sigma = make_constant_field(s);
  } else if (skind == "area") {
    if (spec.dim != 2) throw ConfigError("area sigma requires dim = 2");
    spec.sigma = make_area_field(spec.metric, sigma.get_double("b"));
  } else if (skind == "em_field") {
    // Constant electric field on a (t, x) chart: pinned so that with
    // g = diag(-1, 1) the Lorentz force is Y = [[0, E], [E, 0]].
    if (spec.dim < 2) throw ConfigError("em_field sigma requires dim >= 2");
    const double e = sigma.get_double("E");
    MatrixXd s = zero;
    s(0, 1) = -e;
    s(1, 0) = e;
    spec.sigma = make_constant_field(s);
  } else if (skind == "poly") {
    std::vector<std::vector<Polynomial>> entries(
        spec.dim, std::vector<Polynomial>(spec.dim));
    for (const auto& [i, j, text, line] : sigma.entries) {
      if (i >= spec.dim || j >= spec.dim)
        throw ConfigError("sigma entry index out of range at line " + std::to_string(line));
      if (i == j) throw ConfigError("sigma diagonal entries must vanish (line " +
                                    std::to_string(line) + ")");
      Polynomial p = Polynomial::parse(text, spec.dim);
      entries[i][j] = p;
      std::vector<Polynomial::Term> negated;
      for (Polynomial::Term t : p.terms()) {
        t.coeff = -t.coeff;
        negated.push_back(std::move(t));
      }
      entries[j][i] = Polynomial(std::move(negated));
    }
    spec.sigma = make_poly_field(spec.dim, std::move(entries));
  } else {
    throw ConfigError("unknown sigma builtin '" + skind + "'");
  }
  return spec;
}

}  // namespace emaslov
