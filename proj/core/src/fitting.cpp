#include "conic/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "conic/errors.hpp"

namespace conic {

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("fit_line: need two or more samples");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  LineFit f;
  const double den = n * sxx - sx * sx;
  f.slope = den != 0.0 ? (n * sxy - sx * sy) / den : 0.0;
  f.intercept = (sy - f.slope * sx) / n;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    ss += r * r;
  }
  f.rms = std::sqrt(ss / n);
  return f;
}

LineFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (x[i] > 0.0 && std::abs(y[i]) > 0.0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(std::abs(y[i])));
    }
  }
  return fit_line(lx, ly);
}

double richardson(double x1, double y1, double x2, double y2, double beta) {
  const double w1 = std::pow(x1, -beta), w2 = std::pow(x2, -beta);
  return (y2 * w1 - y1 * w2) / (w1 - w2);
}

namespace {

struct Projection {
  double limit = 0.0, amplitude = 0.0, ssr = 0.0;
};

// Linear least squares for (limit, amplitude) at fixed beta.
Projection project(const std::vector<double>& x, const std::vector<double>& y, double beta, double ymean) {
  double s1 = 0, sw = 0, sww = 0, sy = 0, swy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = std::pow(x[i], -beta);
    const double v = y[i] - ymean;
    s1 += 1.0;
    sw += w;
    sww += w * w;
    sy += v;
    swy += w * v;
  }
  Projection p;
  const double den = s1 * sww - sw * sw;
  if (den <= 0.0) {
    p.limit = ymean + sy / s1;
    p.amplitude = 0.0;
  } else {
    p.amplitude = (s1 * swy - sw * sy) / den;
    p.limit = ymean + (sy - p.amplitude * sw) / s1;
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - p.limit - p.amplitude * std::pow(x[i], -beta);
    p.ssr += r * r;
  }
  return p;
}

struct Solved {
  double beta;
  Projection proj;
};

Solved minimise_beta(const std::vector<double>& x, const std::vector<double>& y, const TailFitOptions& opt,
                     double ymean) {
  // coarse scan in beta followed by golden-section refinement
  constexpr int kScan = 160;
  double best_b = opt.beta_min;
  double best = std::numeric_limits<double>::infinity();
  const double db = (opt.beta_max - opt.beta_min) / kScan;
  for (int i = 0; i <= kScan; ++i) {
    const double b = opt.beta_min + i * db;
    const double s = project(x, y, b, ymean).ssr;
    if (s < best) {
      best = s;
      best_b = b;
    }
  }
  double lo = std::max(opt.beta_min, best_b - db), hi = std::min(opt.beta_max, best_b + db);
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
  double fc = project(x, y, c, ymean).ssr, fd = project(x, y, d, ymean).ssr;
  for (int it = 0; it < 80 && hi - lo > 1e-10; ++it) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - g * (hi - lo);
      fc = project(x, y, c, ymean).ssr;
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + g * (hi - lo);
      fd = project(x, y, d, ymean).ssr;
    }
  }
  const double b = 0.5 * (lo + hi);
  return {b, project(x, y, b, ymean)};
}

}  // namespace

TailFit fit_power_tail(const std::vector<double>& x, const std::vector<double>& y, const TailFitOptions& opt) {
  if (x.size() != y.size() || x.size() < 3) throw DomainError("fit_power_tail: need three or more samples");
  TailFit fit;
  const double ymean = [&] {
    double s = 0.0;
    for (double v : y) s += v;
    return s / static_cast<double>(y.size());
  }();
  double spread = 0.0, scale = 0.0;
  for (double v : y) {
    spread = std::max(spread, std::abs(v - ymean));
    scale = std::max(scale, std::abs(v));
  }
  if (spread <= opt.flat_tolerance * std::max(1.0, scale)) {
    fit.limit = y.back();
    fit.beta = std::numeric_limits<double>::quiet_NaN();
    fit.error = spread;
    return fit;
  }

  // one sign of successive differences, up to rounding noise
  const double noise = 1e3 * std::numeric_limits<double>::epsilon() * std::max(1.0, scale);
  int sign = 0;
  for (std::size_t i = 1; i < y.size(); ++i) {
    const double dlt = y[i] - y[i - 1];
    if (std::abs(dlt) <= noise) continue;
    const int s = dlt > 0 ? 1 : -1;
    if (sign != 0 && s != sign) fit.monotone = false;
    sign = s;
  }

  const Solved full = minimise_beta(x, y, opt, ymean);
  const bool at_edge = full.beta <= opt.beta_min + 1e-6 || full.beta >= opt.beta_max - 1e-6;
  if (at_edge) {
    fit.fallback = true;
    fit.beta = opt.fallback_beta;
    const std::size_t n = x.size();
    fit.limit = richardson(x[n - 2], y[n - 2], x[n - 1], y[n - 1], opt.fallback_beta);
    const Projection p = project(x, y, opt.fallback_beta, ymean);
    fit.amplitude = p.amplitude;
    fit.rms = std::sqrt(p.ssr / static_cast<double>(n));
    fit.error = std::abs(fit.limit - richardson(x[n - 3], y[n - 3], x[n - 2], y[n - 2], opt.fallback_beta));
    return fit;
  }
  fit.beta = full.beta;
  fit.limit = full.proj.limit;
  fit.amplitude = full.proj.amplitude;
  fit.rms = std::sqrt(full.proj.ssr / static_cast<double>(x.size()));
  fit.error = fit.rms;
  if (x.size() >= 4) {
    const std::vector<double> xs(x.begin() + 1, x.end()), ys(y.begin() + 1, y.end());
    const Solved tail = minimise_beta(xs, ys, opt, ymean);
    fit.error = std::max(fit.rms, std::abs(tail.proj.limit - fit.limit));
  }
  return fit;
}

}  // namespace conic
