// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "emaslov/errors.hpp"

namespace emaslov {

using OdeRhs = std::function<void(double t, const Eigen::VectorXd& y, Eigen::VectorXd& dydt)>;

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double initial_step = 0.0;  // 0 = choose automatically
  double max_step = 0.0;      // 0 = (t1 - t0) / 64; keeps dense output tight
  long max_steps = 4000000;
};

/// Dense-output solution of an initial value problem: piecewise quartic
/// interpolation over the accepted steps, evaluable at any t in [t0, t1].
class DenseSolution {
 public:
  struct Step {
    double t0 = 0.0;
    double h = 0.0;
    Eigen::VectorXd cont1, cont2, cont3, cont4, cont5;
  };

  DenseSolution() = default;
  DenseSolution(double t_begin, double t_end, std::vector<Step> steps)
      : t_begin_(t_begin), t_end_(t_end), steps_(std::move(steps)) {}

  Eigen::VectorXd eval(double t) const;
  void eval(double t, Eigen::VectorXd& out) const;

  double t_begin() const { return t_begin_; }
  double t_end() const { return t_end_; }
  long step_count() const { return static_cast<long>(steps_.size()); }
  double mean_step() const {
    return steps_.empty() ? 0.0 : (t_end_ - t_begin_) / static_cast<double>(steps_.size());
  }

 private:
  double t_begin_ = 0.0;
  double t_end_ = 0.0;
  std::vector<Step> steps_;
};

/// Embedded Dormand-Prince 5(4) with adaptive steps and dense output.
/// Forward integration only (t1 > t0).
DenseSolution integrate_dense(const OdeRhs& rhs, const Eigen::VectorXd& y0, double t0, double t1,
                              const OdeOptions& options = {});

}  // namespace emaslov
