// SPDX-License-Identifier: Apache-2.0
#include "emaslov/symplectic.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

namespace emaslov {

namespace {

MatrixXd thin_q(const MatrixXd& a) {
  Eigen::HouseholderQR<MatrixXd> qr(a);
  MatrixXd q = qr.householderQ() * MatrixXd::Identity(a.rows(), a.cols());
  return q;
}

Eigen::VectorXd principal_cosines(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd qa = thin_q(a);
  MatrixXd qb = thin_q(b);
  Eigen::JacobiSVD<MatrixXd> svd(qa.transpose() * qb);
  return svd.singularValues();
}

double clamp_cos(double c) { return std::clamp(c, -1.0, 1.0); }

}  // namespace

void SymplecticSpace::validate() const {
  if (omega.rows() != omega.cols() || omega.rows() % 2 != 0)
    throw Error("symplectic matrix must be square of even dimension");
  const double scale = std::max(1.0, omega.cwiseAbs().maxCoeff());
  if ((omega + omega.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw Error("symplectic matrix must be antisymmetric");
  Eigen::FullPivLU<MatrixXd> lu(omega);
  if (!lu.isInvertible()) throw Error("symplectic matrix is degenerate");
}

MatrixXd SymplecticSpace::darboux_basis() const {
  const int d = dim();
  const int half = n();
  MatrixXd e(d, half), f(d, half);
  std::vector<VectorXd> candidates;
  for (int i = 0; i < d; ++i) candidates.push_back(VectorXd::Unit(d, i));
  int pairs = 0;
  auto reduce = [&](VectorXd v) {
    for (int k = 0; k < pairs; ++k) {
      const double alpha = v.dot(omega * f.col(k));   // omega[v, f_k]
      const double beta = v.dot(omega * e.col(k));    // omega[v, e_k]
      v -= alpha * e.col(k);
      v += beta * f.col(k);
    }
    return v;
  };
  for (size_t ci = 0; ci < candidates.size() && pairs < half; ++ci) {
    VectorXd u = reduce(candidates[ci]);
    if (u.norm() < 1e-10) continue;
    // find a partner with omega[u, w] != 0
    int best = -1;
    double best_val = 0.0;
    for (size_t cj = 0; cj < candidates.size(); ++cj) {
      VectorXd w = reduce(candidates[cj]);
      const double val = std::abs(u.dot(omega * w));
      if (val > best_val) {
        best_val = val;
        best = static_cast<int>(cj);
      }
    }
    if (best < 0 || best_val < 1e-12) continue;
    VectorXd w = reduce(candidates[best]);
    const double pairing = u.dot(omega * w);
    e.col(pairs) = u;
    f.col(pairs) = w / pairing;
    ++pairs;
  }
  if (pairs != half) throw Error("Darboux basis construction failed");
  MatrixXd d_basis(d, d);
  d_basis << e, f;
  // verify: D^T Omega D = [[0, I], [-I, 0]]
  MatrixXd j(d, d);
  j.setZero();
  j.topRightCorner(half, half) = MatrixXd::Identity(half, half);
  j.bottomLeftCorner(half, half) = -MatrixXd::Identity(half, half);
  if ((d_basis.transpose() * omega * d_basis - j).cwiseAbs().maxCoeff() > 1e-8)
    throw Error("Darboux basis verification failed");
  return d_basis;
}

MatrixXd LagrangianFrame::orthonormal() const { return thin_q(a); }

LagrangianFrame make_lagrangian(const SymplecticSpace& space, const MatrixXd& frame, double tol) {
  if (frame.rows() != space.dim() || frame.cols() != space.n())
    throw Error("Lagrangian frame must be 2n x n");
  Eigen::JacobiSVD<MatrixXd> svd(frame);
  const VectorXd sv = svd.singularValues();
  if (sv[sv.size() - 1] < 1e-10 * sv[0]) throw Error("Lagrangian frame is rank-deficient");
  MatrixXd q = thin_q(frame);
  const double residual = (q.transpose() * space.omega * q).cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, space.omega.cwiseAbs().maxCoeff());
  if (residual > tol * scale)
    throw Error("frame does not span a Lagrangian subspace (omega residual " +
                std::to_string(residual) + ")");
  return LagrangianFrame{frame};
}

LagrangianFrame random_lagrangian(const SymplecticSpace& space, std::mt19937_64& rng) {
  const int half = space.n();
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXcd z(half, half);
  for (int i = 0; i < half; ++i)
    for (int j = 0; j < half; ++j) z(i, j) = std::complex<double>(gauss(rng), gauss(rng));
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(z);
  Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(half, half);
  MatrixXd std_frame(2 * half, half);
  std_frame.topRows(half) = q.real();
  std_frame.bottomRows(half) = q.imag();
  return make_lagrangian(space, space.darboux_basis() * std_frame, 1e-7);
}

double smallest_principal_angle(const MatrixXd& a, const MatrixXd& b) {
  const Eigen::VectorXd cosines = principal_cosines(a, b);
  return std::acos(clamp_cos(cosines[0]));  // largest cosine first
}

double largest_principal_angle(const MatrixXd& a, const MatrixXd& b) {
  const Eigen::VectorXd cosines = principal_cosines(a, b);
  return std::acos(clamp_cos(cosines[cosines.size() - 1]));
}

MatrixXd subspace_intersection(const MatrixXd& a, const MatrixXd& b, double tol) {
  MatrixXd qa = thin_q(a);
  MatrixXd qb = thin_q(b);
  MatrixXd stacked(qa.rows(), qa.cols() + qb.cols());
  stacked << qa, -qb;
  Eigen::JacobiSVD<MatrixXd> svd(stacked, Eigen::ComputeFullV);
  const VectorXd sv = svd.singularValues();
  const double scale = sv[0];
  std::vector<int> kernel_cols;
  for (int k = static_cast<int>(sv.size()) - 1; k >= 0; --k)
    if (sv[k] < tol * scale) kernel_cols.push_back(k);
  MatrixXd out(qa.rows(), static_cast<int>(kernel_cols.size()));
  for (size_t m = 0; m < kernel_cols.size(); ++m) {
    VectorXd coeff = svd.matrixV().col(kernel_cols[m]);
    out.col(static_cast<int>(m)) = qa * coeff.head(qa.cols());
  }
  return out;
}

SignatureCounts signature_counts(const MatrixXd& sym, double rel_tol) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (sym + sym.transpose()));
  const VectorXd ev = es.eigenvalues();
  const double scale = std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  SignatureCounts counts;
  for (int i = 0; i < ev.size(); ++i) {
    if (ev[i] > rel_tol * scale)
      ++counts.positive;
    else if (ev[i] < -rel_tol * scale)
      ++counts.negative;
    else
      ++counts.zero;
  }
  return counts;
}

MatrixXd chart_form(const SymplecticSpace& space, const LagrangianFrame& l0,
                    const LagrangianFrame& l1, const LagrangianFrame& l) {
  const int half = space.n();
  if (smallest_principal_angle(l0.a, l1.a) < 1e-9)
    throw NotTransversal("chart reference pair (L0, L1) is not transversal");
  MatrixXd basis(2 * half, 2 * half);
  basis << l0.a, l1.a;
  Eigen::FullPivLU<MatrixXd> lu(basis);
  if (!lu.isInvertible()) throw NotTransversal("chart reference pair (L0, L1) is not transversal");
  MatrixXd cd = lu.solve(l.a);  // l = A0 C + A1 D columnwise
  MatrixXd c = cd.topRows(half);
  MatrixXd d = cd.bottomRows(half);
  Eigen::FullPivLU<MatrixXd> luc(c);
  if (std::abs(luc.determinant()) < 1e-12 * std::max(1.0, c.cwiseAbs().maxCoeff()))
    throw NotTransversal("path Lagrangian is not transversal to the auxiliary L1");
  MatrixXd t = d * luc.inverse();  // T in bases (A0, A1)
  MatrixXd phi = t.transpose() * l1.a.transpose() * space.omega * l0.a;
  const double asym = (phi - phi.transpose()).cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, phi.cwiseAbs().maxCoeff());
  if (asym > 1e-7 * scale)
    throw Error("chart form is not symmetric; inputs are not Lagrangian enough");
  return 0.5 * (phi + phi.transpose());
}

namespace {

struct Sample {
  double t;
  MatrixXd frame;
};

// The auxiliary Lagrangian must clear every sample by a margin exceeding the
// sampling density, so the continuous path cannot cross Sigma(L1) unseen
// between samples.
bool transversal_to_all(const LagrangianFrame& cand, const LagrangianFrame& l0,
                        const std::vector<Sample>& seg, double tol) {
  double max_gap = 0.0;
  for (size_t i = 0; i + 1 < seg.size(); ++i)
    max_gap = std::max(max_gap, largest_principal_angle(seg[i].frame, seg[i + 1].frame));
  const double margin = std::max(tol, 1.5 * max_gap);
  if (smallest_principal_angle(cand.a, l0.a) <= tol) return false;
  for (const Sample& s : seg)
    if (smallest_principal_angle(cand.a, s.frame) <= margin) return false;
  return true;
}

// Signature of the chart form with the kernel dimension pinned geometrically:
// a sample can lie exactly on Sigma(L0), and every auxiliary chart must then
// agree on how many eigenvalues are zero there.
int chart_signature(const SymplecticSpace& space, const LagrangianFrame& l0,
                    const LagrangianFrame& aux, const LagrangianFrame& l) {
  const int kernel = static_cast<int>(subspace_intersection(l.a, l0.a).cols());
  MatrixXd phi = chart_form(space, l0, aux, l);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(phi);
  VectorXd ev = es.eigenvalues();
  std::vector<double> sorted(ev.data(), ev.data() + ev.size());
  std::sort(sorted.begin(), sorted.end(),
            [](double x, double y) { return std::abs(x) < std::abs(y); });
  int sig = 0;
  for (size_t k = static_cast<size_t>(kernel); k < sorted.size(); ++k)
    sig += sorted[k] > 0 ? 1 : -1;
  return sig;
}

// Doubled contribution of one segment, recursing on aux-search failure.
int segment_doubled(const SymplecticSpace& space, std::vector<Sample> seg,
                    const LagrangianFrame& l0, const MaslovOptions& opts, std::mt19937_64& rng,
                    const std::function<MatrixXd(double)>& refine, int depth) {
  if (depth > opts.max_depth)
    throw RefinementExhausted("no transversal auxiliary Lagrangian found (path undersampled?)");
  for (int attempt = 0; attempt < opts.aux_tries; ++attempt) {
    LagrangianFrame cand = random_lagrangian(space, rng);
    if (!transversal_to_all(cand, l0, seg, opts.transversality)) continue;
    LagrangianFrame first{seg.front().frame};
    LagrangianFrame last{seg.back().frame};
    return chart_signature(space, l0, cand, last) - chart_signature(space, l0, cand, first);
  }
  if (seg.size() == 2) {
    if (!refine)
      throw RefinementExhausted("segment needs refinement but path has no refine callback");
    Sample mid;
    mid.t = 0.5 * (seg[0].t + seg[1].t);
    mid.frame = refine(mid.t);
    seg.insert(seg.begin() + 1, std::move(mid));
  }
  const size_t split = seg.size() / 2;
  std::vector<Sample> left(seg.begin(), seg.begin() + split + 1);
  std::vector<Sample> right(seg.begin() + split, seg.end());
  return segment_doubled(space, std::move(left), l0, opts, rng, refine, depth + 1) +
         segment_doubled(space, std::move(right), l0, opts, rng, refine, depth + 1);
}

}  // namespace

int maslov_index_doubled(const SymplecticSpace& space, const LagrangianPath& path,
                         const LagrangianFrame& l0, const MaslovOptions& opts) {
  if (path.times.size() != path.frames.size() || path.times.size() < 2)
    throw Error("Lagrangian path needs at least two samples");
  std::vector<Sample> samples;
  samples.reserve(path.times.size());
  for (size_t i = 0; i < path.times.size(); ++i)
    samples.push_back(Sample{path.times[i], path.frames[i]});

  // Continuity pre-pass: subdivide until consecutive subspace gaps are small.
  for (size_t i = 0; i + 1 < samples.size();) {
    const double gap = largest_principal_angle(samples[i].frame, samples[i + 1].frame);
    if (gap <= opts.continuity_angle) {
      ++i;
      continue;
    }
    if (!path.refine)
      throw RefinementExhausted("path not sampled densely enough and no refine callback given");
    if (samples[i + 1].t - samples[i].t < 1e-13 * (path.times.back() - path.times.front()))
      throw RefinementExhausted("path appears discontinuous");
    Sample mid;
    mid.t = 0.5 * (samples[i].t + samples[i + 1].t);
    mid.frame = path.refine(mid.t);
    samples.insert(samples.begin() + static_cast<long>(i) + 1, std::move(mid));
  }

  std::mt19937_64 rng(opts.seed);
  return segment_doubled(space, std::move(samples), l0, opts, rng, path.refine, 0);
}

int maslov_index(const SymplecticSpace& space, const LagrangianPath& path,
                 const LagrangianFrame& l0, const MaslovOptions& opts) {
  if (opts.require_integer) {
    if (smallest_principal_angle(path.frames.front(), l0.a) <= opts.transversality ||
        smallest_principal_angle(path.frames.back(), l0.a) <= opts.transversality)
      throw NonIntegerResult("path endpoint touches the Maslov cycle of L0");
  }
  const int doubled = maslov_index_doubled(space, path, l0, opts);
  if (doubled % 2 != 0)
    throw NonIntegerResult("Maslov index is a strict half-integer: " + std::to_string(doubled) +
                           "/2");
  return doubled / 2;
}

CrossingData crossing_signature(const SymplecticSpace& space,
                                const std::function<MatrixXd(double)>& path,
                                const LagrangianFrame& l0, double t0, double h,
                                std::uint64_t seed) {
  CrossingData data;
  MatrixXd a0 = path(t0);
  MatrixXd inter = subspace_intersection(a0, l0.a);
  data.kernel_dim = static_cast<int>(inter.cols());
  if (data.kernel_dim == 0) {
    data.nondegenerate = true;
    return data;
  }
  // Coordinates of the intersection vectors in the basis a0.
  MatrixXd coords = a0.colPivHouseholderQr().solve(inter);

  LagrangianFrame lt0 = make_lagrangian(space, a0, 1e-6);
  std::mt19937_64 rng(seed);
  MatrixXd am = path(t0 - h);
  MatrixXd ap = path(t0 + h);
  for (int attempt = 0; attempt < 200; ++attempt) {
    LagrangianFrame aux = random_lagrangian(space, rng);
    if (smallest_principal_angle(aux.a, a0) <= 1e-6) continue;
    if (smallest_principal_angle(aux.a, am) <= 1e-6) continue;
    if (smallest_principal_angle(aux.a, ap) <= 1e-6) continue;
    MatrixXd phi_p = chart_form(space, lt0, aux, LagrangianFrame{ap});
    MatrixXd phi_m = chart_form(space, lt0, aux, LagrangianFrame{am});
    MatrixXd dphi = (phi_p - phi_m) / (2.0 * h);
    MatrixXd restricted = coords.transpose() * dphi * coords;
    SignatureCounts counts = signature_counts(restricted);
    data.nondegenerate = counts.nondegenerate();
    data.signature = counts.signature();
    return data;
  }
  throw RefinementExhausted("no auxiliary complement found for crossing form");
}

int kashiwara_tau(const SymplecticSpace& space, const LagrangianFrame& l1,
                  const LagrangianFrame& l2, const LagrangianFrame& l3) {
  const int half = space.n();
  MatrixXd a1 = l1.orthonormal(), a2 = l2.orthonormal(), a3 = l3.orthonormal();
  MatrixXd q = MatrixXd::Zero(3 * half, 3 * half);
  q.block(0, half, half, half) = a1.transpose() * space.omega * a2;
  q.block(half, 2 * half, half, half) = a2.transpose() * space.omega * a3;
  q.block(2 * half, 0, half, half) = a3.transpose() * space.omega * a1;
  MatrixXd sym = 0.5 * (q + q.transpose());
  return signature_counts(sym).signature();
}

}  // namespace emaslov
