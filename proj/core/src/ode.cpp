#include "conic/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "conic/errors.hpp"

namespace conic {

namespace {

constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

constexpr double kBeta = 0.04;
constexpr double kAlpha = 0.2 - 0.75 * kBeta;
constexpr double kSafety = 0.9;

}  // namespace

OdeVector DenseStep::operator()(double t) const {
  const double s = (t - t_old_) / h_;
  const double s1 = 1.0 - s;
  return rc1_ + s * (rc2_ + s1 * (rc3_ + s * (rc4_ + s1 * rc5_)));
}

double DenseStep::component(double t, Eigen::Index i) const {
  const double s = (t - t_old_) / h_;
  const double s1 = 1.0 - s;
  return rc1_[i] + s * (rc2_[i] + s1 * (rc3_[i] + s * (rc4_[i] + s1 * rc5_[i])));
}

DormandPrince::DormandPrince(OdeRhs rhs, OdeOptions options) : rhs_(std::move(rhs)), opt_(options) {
  if (!(opt_.rtol > 0.0) || !(opt_.atol >= 0.0)) throw DomainError("ODE tolerances must be positive");
}

double DormandPrince::error_norm(const OdeVector& err, const OdeVector& y0, const OdeVector& y1) const {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double sc = opt_.atol + opt_.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double q = err[i] / sc;
    acc += q * q;
  }
  return std::sqrt(acc / static_cast<double>(err.size()));
}

double DormandPrince::initial_step(double t0, const OdeVector& y0, const OdeVector& f0, double dir) const {
  if (opt_.initial_step > 0.0) return opt_.initial_step;
  OdeVector sc = (opt_.atol + opt_.rtol * y0.array().abs()).matrix();
  const double dnf = (f0.array() / sc.array()).matrix().squaredNorm() / f0.size();
  const double dny = (y0.array() / sc.array()).matrix().squaredNorm() / y0.size();
  double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
  if (opt_.max_step > 0.0) h = std::min(h, opt_.max_step);
  OdeVector y1 = y0 + dir * h * f0;
  OdeVector f1(y0.size());
  rhs_(t0 + dir * h, y1, f1);
  const double der2 = std::sqrt(((f1 - f0).array() / sc.array()).matrix().squaredNorm() / y0.size()) / h;
  const double der12 = std::max(der2, std::sqrt(dnf));
  const double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 0.2);
  h = std::min(100.0 * h, h1);
  if (opt_.max_step > 0.0) h = std::min(h, opt_.max_step);
  return h;
}

OdeResult DormandPrince::integrate(double t0, const OdeVector& y0, double t1, const StepObserver& observer) const {
  OdeResult res;
  res.t = t0;
  res.y = y0;
  if (t1 == t0) return res;
  const double dir = t1 > t0 ? 1.0 : -1.0;
  const Eigen::Index n = y0.size();

  OdeVector k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), y1(n), err(n);
  double t = t0;
  OdeVector y = y0;
  rhs_(t, y, k1);
  double h = initial_step(t0, y0, k1, dir);
  double err_old = 1e-4;
  bool last_rejected = false;
  DenseStep step;

  while (dir * (t1 - t) > 0.0) {
    if (res.accepted + res.rejected >= opt_.max_steps)
      throw StiffnessError("integrator exceeded the step budget at t = " + std::to_string(t));
    const double span = std::abs(t1 - t);
    bool final_step = false;
    if (h >= span) {
      h = span;
      final_step = true;
    }
    if (h < 1e-14 * std::max(1.0, std::abs(t)))
      throw StiffnessError("step size underflow at t = " + std::to_string(t));
    const double hs = dir * h;

    bool stage_failed = false;
    try {
      ytmp = y + hs * a21 * k1;
      rhs_(t + c2 * hs, ytmp, k2);
      ytmp = y + hs * (a31 * k1 + a32 * k2);
      rhs_(t + c3 * hs, ytmp, k3);
      ytmp = y + hs * (a41 * k1 + a42 * k2 + a43 * k3);
      rhs_(t + c4 * hs, ytmp, k4);
      ytmp = y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
      rhs_(t + c5 * hs, ytmp, k5);
      ytmp = y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
      rhs_(t + hs, ytmp, k6);
      y1 = y + hs * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
      rhs_(t + hs, y1, k7);
    } catch (const DomainError&) {
      stage_failed = true;
    }
    if (stage_failed || !y1.allFinite() || !k7.allFinite()) {
      h *= 0.25;
      ++res.rejected;
      last_rejected = true;
      continue;
    }

    err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double en = std::max(error_norm(err, y, y1), 1e-16);

    if (en > 1.0) {
      h *= std::max(0.2, kSafety * std::pow(en, -0.2));
      ++res.rejected;
      last_rejected = true;
      continue;
    }

    step.t_old_ = t;
    step.t_new_ = final_step ? t1 : t + hs;
    step.h_ = hs;
    step.rc1_ = y;
    step.rc2_ = y1 - y;
    step.rc3_ = hs * k1 - step.rc2_;
    step.rc4_ = step.rc2_ - hs * k7 - step.rc3_;
    step.rc5_ = hs * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
    step.y_new_ = y1;

    t = step.t_new_;
    y = y1;
    k1 = k7;
    ++res.accepted;

    double fac = kSafety * std::pow(en, -kAlpha) * std::pow(err_old, kBeta);
    fac = std::clamp(fac, 0.2, 10.0);
    if (last_rejected) fac = std::min(fac, 1.0);
    err_old = std::max(en, 1e-4);
    h *= fac;
    if (opt_.max_step > 0.0) h = std::min(h, opt_.max_step);
    last_rejected = false;

    if (observer && !observer(step)) {
      res.stopped = true;
      break;
    }
  }
  res.t = t;
  res.y = y;
  return res;
}

}  // namespace conic
