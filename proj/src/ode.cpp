// SPDX-License-Identifier: Apache-2.0
#include "emaslov/ode.hpp"

#include <algorithm>
#include <cmath>

namespace emaslov {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                 a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                 b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
// 5th-order minus 4th-order weights, for the embedded error estimate.
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                 e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
// Dense-output weights for the quartic continuous extension.
constexpr double d1 = -12715105075.0 / 11282082432.0;
constexpr double d3 = 87487479700.0 / 32700410799.0;
constexpr double d4 = -10690763975.0 / 1880347072.0;
constexpr double d5 = 701980252875.0 / 199316789632.0;
constexpr double d6 = -1453857185.0 / 822651844.0;
constexpr double d7 = 69997945.0 / 29380423.0;

}  // namespace

void DenseSolution::eval(double t, Eigen::VectorXd& out) const {
  if (steps_.empty()) throw IntegratorFailure("empty dense solution");
  const double span = t_end_ - t_begin_;
  const double slack = 1e-9 * std::max(1.0, std::abs(span));
  if (t < t_begin_ - slack || t > t_end_ + slack)
    throw IntegratorFailure("dense evaluation outside [t0, t1]");
  t = std::clamp(t, t_begin_, t_end_);
  // Binary search for the step containing t.
  size_t lo = 0, hi = steps_.size() - 1;
  while (lo < hi) {
    size_t mid = (lo + hi) / 2;
    if (steps_[mid].t0 + steps_[mid].h < t)
      lo = mid + 1;
    else
      hi = mid;
  }
  const Step& s = steps_[lo];
  const double theta = (t - s.t0) / s.h;
  const double theta1 = 1.0 - theta;
  out = s.cont1 +
        theta * (s.cont2 + theta1 * (s.cont3 + theta * (s.cont4 + theta1 * s.cont5)));
}

Eigen::VectorXd DenseSolution::eval(double t) const {
  Eigen::VectorXd out;
  eval(t, out);
  return out;
}

DenseSolution integrate_dense(const OdeRhs& rhs, const Eigen::VectorXd& y0, double t0, double t1,
                              const OdeOptions& options) {
  if (!(t1 > t0)) throw IntegratorFailure("integration requires t1 > t0");
  const int n = static_cast<int>(y0.size());
  Eigen::VectorXd y = y0;
  Eigen::VectorXd k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), yerr(n);

  rhs(t0, y, k1);
  const double h_max = options.max_step > 0.0 ? options.max_step : (t1 - t0) / 64.0;
  double h = options.initial_step;
  if (h <= 0.0) {
    const double d0 = y.cwiseAbs().maxCoeff() + options.atol;
    const double d1n = k1.cwiseAbs().maxCoeff() + options.atol;
    h = 0.01 * d0 / d1n;
    h = std::min(h, (t1 - t0) / 10.0);
    h = std::max(h, 1e-10 * (t1 - t0));
  }
  h = std::min(h, h_max);

  std::vector<DenseSolution::Step> steps;
  double t = t0;
  long n_steps = 0;
  while (t < t1) {
    if (++n_steps > options.max_steps) throw IntegratorFailure("step budget exhausted");
    if (h < 1e-14 * (t1 - t0)) throw IntegratorFailure("step size underflow");
    if (t + h > t1) h = t1 - t;

    ytmp = y + h * (a21 * k1);
    rhs(t + c2 * h, ytmp, k2);
    ytmp = y + h * (a31 * k1 + a32 * k2);
    rhs(t + c3 * h, ytmp, k3);
    ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    rhs(t + c4 * h, ytmp, k4);
    ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    rhs(t + c5 * h, ytmp, k5);
    ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    rhs(t + h, ytmp, k6);
    ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    rhs(t + h, ynew, k7);  // FSAL
    yerr = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double err = 0.0;
    for (int i = 0; i < n; ++i) {
      const double sk = options.atol + options.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      const double r = yerr[i] / sk;
      err += r * r;
    }
    err = std::sqrt(err / std::max(1, n));

    if (err <= 1.0) {
      DenseSolution::Step step;
      step.t0 = t;
      step.h = h;
      step.cont1 = y;
      step.cont2 = ynew - y;
      step.cont3 = h * k1 - step.cont2;
      step.cont4 = step.cont2 - h * k7 - step.cont3;
      step.cont5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
      steps.push_back(std::move(step));
      t += h;
      y.swap(ynew);
      k1.swap(k7);
      const double factor = std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2), 0.2, 5.0);
      h = std::min(h * factor, h_max);
    } else {
      h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
    }
  }
  return DenseSolution(t0, t1, std::move(steps));
}

}  // namespace emaslov
