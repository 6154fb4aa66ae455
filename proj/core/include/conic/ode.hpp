#pragma once

// Dormand-Prince 5(4) with PI step-size control and the free 4th-order
// continuous extension. Integrates in either time direction.

#include <Eigen/Dense>

#include <cstddef>
#include <functional>

namespace conic {

using OdeVector = Eigen::VectorXd;
using OdeRhs = std::function<void(double t, const OdeVector& y, OdeVector& dydt)>;

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double initial_step = 0.0;  // 0: automatic
  double max_step = 0.0;      // 0: unbounded
  std::size_t max_steps = 50'000'000;
};

// One accepted step with its dense-output polynomial.
class DenseStep {
 public:
  double t_old() const { return t_old_; }
  double t_new() const { return t_new_; }
  const OdeVector& y_old() const { return rc1_; }
  const OdeVector& y_new() const { return y_new_; }
  OdeVector operator()(double t) const;
  double component(double t, Eigen::Index i) const;

 private:
  friend class DormandPrince;
  double t_old_ = 0.0, t_new_ = 0.0, h_ = 0.0;
  OdeVector rc1_, rc2_, rc3_, rc4_, rc5_, y_new_;
};

struct OdeResult {
  double t = 0.0;
  OdeVector y;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  bool stopped = false;  // observer asked to stop
};

// Return false to stop the integration after this step.
using StepObserver = std::function<bool(const DenseStep&)>;

class DormandPrince {
 public:
  DormandPrince(OdeRhs rhs, OdeOptions options = {});

  // Throws StiffnessError when the step size underflows. A conic::DomainError
  // raised while evaluating a trial stage is treated as a step rejection.
  OdeResult integrate(double t0, const OdeVector& y0, double t1, const StepObserver& observer = {}) const;

 private:
  double initial_step(double t0, const OdeVector& y0, const OdeVector& f0, double dir) const;
  double error_norm(const OdeVector& err, const OdeVector& y0, const OdeVector& y1) const;

  OdeRhs rhs_;
  OdeOptions opt_;
};

}  // namespace conic
