// SPDX-License-Identifier: Apache-2.0
#include "emaslov/specflow.hpp"

#include <algorithm>
#include <cmath>

namespace emaslov {

namespace {

constexpr double kGauss3Nodes[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
constexpr double kGauss3Weights[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};

}  // namespace

MatrixXd hat_mass_matrix(int elements) {
  const int nh = elements - 1;
  const double h = 1.0 / elements;
  MatrixXd mass = MatrixXd::Zero(nh, nh);
  for (int e = 0; e < elements; ++e) {
    const double t0 = e * h;
    for (int qp = 0; qp < 3; ++qp) {
      const double tau = t0 + 0.5 * h * (1.0 + kGauss3Nodes[qp]);
      const double weight = 0.5 * h * kGauss3Weights[qp];
      int hats[2] = {0, 0};
      double vals[2] = {0.0, 0.0};
      int active = 0;
      if (e >= 1) {
        hats[active] = e;
        vals[active] = (t0 + h - tau) / h;
        ++active;
      }
      if (e + 1 <= nh) {
        hats[active] = e + 1;
        vals[active] = (tau - t0) / h;
        ++active;
      }
      for (int ai = 0; ai < active; ++ai)
        for (int bi = 0; bi < active; ++bi)
          mass(hats[ai] - 1, hats[bi] - 1) += vals[ai] * vals[bi] * weight;
    }
  }
  return mass;
}

MatrixXd hat_stiffness_matrix(int elements) {
  const int nh = elements - 1;
  const double h = 1.0 / elements;
  MatrixXd stiff = MatrixXd::Zero(nh, nh);
  for (int a = 0; a < nh; ++a) {
    stiff(a, a) = 2.0 / h;
    if (a + 1 < nh) {
      stiff(a, a + 1) = -1.0 / h;
      stiff(a + 1, a) = -1.0 / h;
    }
  }
  return stiff;
}

FormPath::FormPath(FoulonData foulon, double kappa, double T)
    : foulon_(std::move(foulon)), kappa_(kappa), T_(T) {
  if (!(T > 0)) throw Error("FormPath horizon must be positive");
}

MatrixXd FormPath::assemble(double s, int elements) const {
  if (!(s > 0.0) || s > T_ * (1.0 + 1e-12))
    throw Error("form parameter s must lie in (0, T]");
  if (std::abs(kappa_) < 1e-12)
    throw ZeroEnergy("the B-coordinate of the index form requires kappa != 0");
  const int n = foulon_.traj.dim();
  const int nh = elements - 1;  // hats per coordinate
  const int dim = n * nh + 1;
  const double h = 1.0 / elements;
  const MatrixXd inp = foulon_.frame.inp;

  MatrixXd q = MatrixXd::Zero(dim, dim);
  // stiffness (1/s) int <I_{n,p} v1', v2'>: exact tridiagonal assembly
  for (int a = 1; a <= nh; ++a) {
    for (int i = 0; i < n; ++i) {
      const int ia = (a - 1) * n + i;
      q(ia, ia) += (2.0 / h) * inp(i, i) / s;
      if (a + 1 <= nh) {
        const int ib = a * n + i;
        q(ia, ib) += (-1.0 / h) * inp(i, i) / s;
        q(ib, ia) += (-1.0 / h) * inp(i, i) / s;
      }
    }
  }
  // element loop for the K mass and the xi coupling (3-point Gauss)
  MatrixXd kmat(n, n);
  VectorXd xi(n);
  for (int e = 0; e < elements; ++e) {
    const double t0 = e * h;
    for (int qp = 0; qp < 3; ++qp) {
      const double tau = t0 + 0.5 * h * (1.0 + kGauss3Nodes[qp]);
      const double weight = 0.5 * h * kGauss3Weights[qp];
      foulon_.eval(s * tau, kmat, xi);  // K(st), xi(st)
      const double s2 = s * s;
      // active hats on element e: hat e (falling) and hat e+1 (rising)
      int hats[2] = {0, 0};
      double vals[2] = {0.0, 0.0};
      int active = 0;
      if (e >= 1) {
        hats[active] = e;
        vals[active] = (t0 + h - tau) / h;
        ++active;
      }
      if (e + 1 <= nh) {
        hats[active] = e + 1;
        vals[active] = (tau - t0) / h;
        ++active;
      }
      for (int ai = 0; ai < active; ++ai) {
        const int a = hats[ai];
        for (int bi = 0; bi < active; ++bi) {
          const int b = hats[bi];
          const double phi = vals[ai] * vals[bi] * weight;
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
              q((a - 1) * n + i, (b - 1) * n + j) -= (s2 * kmat(i, j)) * phi / s;
        }
        const double phi_a = vals[ai] * weight;
        for (int i = 0; i < n; ++i) {
          q((a - 1) * n + i, dim - 1) += (s2 * xi[i]) * phi_a / s;
          q(dim - 1, (a - 1) * n + i) += (s2 * xi[i]) * phi_a / s;
        }
      }
    }
  }
  q(dim - 1, dim - 1) = 2.0 * kappa_ * s;
  return q;
}

MatrixXd FormPath::assemble_restricted(double s, int elements) const {
  if (!(s > 0.0) || s > T_ * (1.0 + 1e-12))
    throw Error("form parameter s must lie in (0, T]");
  // The V-block is kappa-independent; assemble() requires kappa != 0 only for
  // the B row, so build the full matrix through a padded path when possible.
  const int n = foulon_.traj.dim();
  const int dim = n * (elements - 1);
  if (std::abs(kappa_) >= 1e-12) {
    MatrixXd full = assemble(s, elements);
    return full.topLeftCorner(dim, dim);
  }
  FormPath padded(foulon_, 1.0, T_);  // kappa enters only the B row/corner
  MatrixXd full = padded.assemble(s, elements);
  return full.topLeftCorner(dim, dim);
}

int form_index(const MatrixXd& form, bool* degenerate, double rel_tol) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(form);
  const VectorXd ev = es.eigenvalues();
  const double scale = std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  int negatives = 0;
  bool near_zero = false;
  for (int k = 0; k < ev.size(); ++k) {
    if (ev[k] < -rel_tol * scale)
      ++negatives;
    else if (ev[k] <= rel_tol * scale)
      near_zero = true;
  }
  if (degenerate) *degenerate = near_zero;
  return negatives;
}

namespace {

int sf_at_resolution(const FormPath& path, double a, double b, int elements, bool restricted) {
  auto matrix_at = [&](double s) {
    return restricted ? path.assemble_restricted(s, elements) : path.assemble(s, elements);
  };
  bool degenerate_a = false, degenerate_b = false;
  const int ind_a = form_index(matrix_at(a), &degenerate_a);
  const int ind_b = form_index(matrix_at(b), &degenerate_b);
  if (degenerate_a || degenerate_b)
    throw DegenerateEndpoint("spectral-flow endpoint form is numerically degenerate");
  return ind_a - ind_b;
}

}  // namespace

int spectral_flow(const FormPath& path, double a, double b, int elements, bool restricted) {
  if (!(a > 0.0) || !(b > a)) throw Error("spectral flow window must satisfy 0 < a < b");
  const int sf_n = sf_at_resolution(path, a, b, elements, restricted);
  const int sf_2n = sf_at_resolution(path, a, b, 2 * elements, restricted);
  if (sf_n != sf_2n)
    throw NotConverged("spectral flow disagrees between N = " + std::to_string(elements) +
                       " and 2N (" + std::to_string(sf_n) + " vs " + std::to_string(sf_2n) + ")");
  return sf_n;
}

int spectral_flow_matrices(const std::function<MatrixXd(double)>& path, double a, double b,
                           double rel_tol) {
  bool degenerate_a = false, degenerate_b = false;
  const int ind_a = form_index(path(a), &degenerate_a, rel_tol);
  const int ind_b = form_index(path(b), &degenerate_b, rel_tol);
  if (degenerate_a || degenerate_b)
    throw DegenerateEndpoint("spectral-flow endpoint matrix is degenerate");
  return ind_a - ind_b;
}

int eigenvalue_crossing_count(const std::function<MatrixXd(double)>& path, double a, double b,
                              int grid) {
  VectorXd prev;
  int total = 0;
  for (int k = 0; k <= grid; ++k) {
    const double s = a + (b - a) * k / grid;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(path(s));
    VectorXd ev = es.eigenvalues();  // ascending
    if (k == 0) {
      prev = ev;
      continue;
    }
    for (int i = 0; i < ev.size(); ++i) {
      if (ev[i] == 0.0) continue;  // landed exactly on zero: keep the last sign
      if (prev[i] < 0.0 && ev[i] > 0.0) ++total;  // upward crossing
      if (prev[i] > 0.0 && ev[i] < 0.0) --total;  // downward crossing
      prev[i] = ev[i];
    }
  }
  return total;
}

int index_of_restriction_complement(const FormPath& path, double s, int elements) {
  if (std::abs(path.kappa()) < 1e-12) throw ZeroEnergy("restriction complement requires kappa != 0");
  MatrixXd full = path.assemble(s, elements);
  const int vdim = static_cast<int>(full.rows()) - 1;
  MatrixXd a = full.topLeftCorner(vdim, vdim);
  VectorXd b = full.topRightCorner(vdim, 1);
  const double d = full(vdim, vdim);
  bool degenerate = false;
  (void)form_index(a, &degenerate);
  if (degenerate)
    throw ConjugateEndpoint("V-block degenerate at s = " + std::to_string(s) +
                            " (ordinary conjugate instant)");
  const double schur = d - b.dot(a.lu().solve(b));
  return schur < 0.0 ? 1 : 0;
}

RestrictionDifference restriction_difference(const FormPath& path, double a, double b,
                                             int elements) {
  RestrictionDifference out;
  out.sf_full = spectral_flow(path, a, b, elements, false);
  out.sf_restricted = spectral_flow(path, a, b, elements, true);
  out.ind_a = index_of_restriction_complement(path, a, elements);
  out.ind_b = index_of_restriction_complement(path, b, elements);
  return out;
}

std::vector<double> degenerate_instants(const FormPath& path, double a, double b, int elements,
                                        int grid, bool restricted) {
  auto index_at = [&](double s) {
    MatrixXd q = restricted ? path.assemble_restricted(s, elements) : path.assemble(s, elements);
    return form_index(q);
  };
  std::vector<double> out;
  std::vector<int> inds(grid + 1);
  for (int k = 0; k <= grid; ++k) inds[k] = index_at(a + (b - a) * k / grid);
  for (int k = 0; k + 1 <= grid; ++k) {
    if (inds[k] == inds[k + 1]) continue;
    double lo = a + (b - a) * k / grid;
    double hi = a + (b - a) * (k + 1) / grid;
    int ind_lo = inds[k];
    // refine x4 then bisect to tight resolution
    for (int iter = 0; iter < 40 && hi - lo > 1e-7 * std::max(1.0, b); ++iter) {
      const double mid = 0.5 * (lo + hi);
      if (index_at(mid) == ind_lo)
        lo = mid;
      else
        hi = mid;
    }
    out.push_back(0.5 * (lo + hi));
  }
  return out;
}

std::vector<EigenTraceRow> eigen_trace(const FormPath& path, double a, double b, int elements,
                                       int samples, bool restricted) {
  std::vector<EigenTraceRow> rows;
  for (int k = 0; k <= samples; ++k) {
    const double s = a + (b - a) * k / samples;
    MatrixXd q = restricted ? path.assemble_restricted(s, elements) : path.assemble(s, elements);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(q);
    VectorXd ev = es.eigenvalues();
    std::vector<double> sorted(ev.data(), ev.data() + ev.size());
    std::sort(sorted.begin(), sorted.end(),
              [](double x, double y) { return std::abs(x) < std::abs(y); });
    EigenTraceRow row;
    row.s = s;
    for (size_t i = 0; i < sorted.size() && i < 8; ++i) row.smallest.push_back(sorted[i]);
    row.index = 0;
    const double scale = std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
    for (int i = 0; i < ev.size(); ++i)
      if (ev[i] < -1e-8 * scale) ++row.index;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace emaslov
