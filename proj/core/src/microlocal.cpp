#include "conic/microlocal.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "conic/errors.hpp"
#include "conic/fitting.hpp"

namespace conic {

namespace {

constexpr double kPi = kTwoPi / 2.0;
constexpr double kInf = std::numeric_limits<double>::infinity();

double wrap_angle(double d) { return std::remainder(d, kTwoPi); }

// beyond this argument the bump transform is below 1e-20 and is dropped
constexpr double kTransformCut = 2000.0;

// (1/2pi) int b(x) e^{i s x} dx for the unit bump, trapezoid on M nodes.
// b is flat to all orders at +-1, so aliasing from s + 2 pi M is negligible
// once M exceeds s.
std::vector<double> bump_transform(const std::vector<double>& s, double sharpness) {
  double smax = 0.0;
  for (double v : s)
    if (std::abs(v) < kTransformCut) smax = std::max(smax, std::abs(v));
  const int m = static_cast<int>(std::ceil(smax)) + 256;
  std::vector<double> b(m);
  for (int k = 0; k < m; ++k) b[k] = bump(static_cast<double>(k) / m, sharpness);
  std::vector<double> out(s.size(), 0.0);
  constexpr int resync = 64;
  for (std::size_t q = 0; q < s.size(); ++q) {
    if (std::abs(s[q]) >= kTransformCut) continue;
    double acc = 0.5 * b[0];
    const double step = s[q] / m;
    // cos(step k) by rotation, restarted every resync terms
    const double c1 = std::cos(step), s1 = std::sin(step);
    double c = 1.0, sn = 0.0;
    for (int k = 1; k < m; ++k) {
      if (k % resync == 0) {
        c = std::cos(step * k);
        sn = std::sin(step * k);
      } else {
        const double cn = c * c1 - sn * s1;
        sn = sn * c1 + c * s1;
        c = cn;
      }
      acc += b[k] * c;
    }
    out[q] = acc / (kPi * m);
  }
  return out;
}

// One axis of the tensor Weyl kernel
//   K(i, i') = P((x_i + x_i')/2) k_eps(x_i - x_i') dx
// with P the position factor and k_eps the transformed momentum bump. On the
// periodic axis all images x_i' + 2 pi n are summed; even n share the
// midpoint index i + i', odd n the antipodal one.
class AxisKernel {
 public:
  // Entries are available for |i - i'| <= reach.
  AxisKernel(int n, double x0, double dx, bool periodic, double pos_center, double pos_width, double pos_scale,
             double mom_center, double mom_width, double eps, double sharpness, int reach)
      : n_(n), reach_(std::clamp(reach, 0, n - 1)), periodic_(periodic), diagonal_(std::isinf(mom_width)) {
    const int ns = 2 * n;
    pmid_.resize(ns);
    for (int s = 0; s < ns; ++s) {
      const double x = x0 + 0.5 * s * dx;
      if (std::isinf(pos_width)) {
        pmid_[s] = 1.0;
      } else {
        const double d = periodic ? wrap_angle(x - pos_center) : pos_scale * x - pos_center;
        pmid_[s] = bump(d / pos_width, sharpness);
      }
    }
    if (diagonal_) return;
    const auto kernel = [&](const std::vector<double>& offsets) {
      std::vector<double> arg(offsets.size());
      for (std::size_t q = 0; q < offsets.size(); ++q) arg[q] = mom_width * offsets[q] / eps;
      const std::vector<double> bh = bump_transform(arg, sharpness);
      std::vector<cplx> k(offsets.size());
      for (std::size_t q = 0; q < offsets.size(); ++q)
        k[q] = std::polar(mom_width * bh[q] * dx / eps, offsets[q] / eps * mom_center);
      return k;
    };
    std::vector<double> offsets(2 * reach_ + 1);
    for (int d = -reach_; d <= reach_; ++d) offsets[d + reach_] = d * dx;
    if (!periodic) {
      even_ = kernel(offsets);
      return;
    }
    const double period = n * dx;
    const int images = static_cast<int>(std::ceil(kTransformCut * eps / (mom_width * period))) + 1;
    even_.assign(offsets.size(), 0.0);
    odd_.assign(offsets.size(), 0.0);
    for (int img = -images; img <= images; ++img) {
      std::vector<double> shifted(offsets);
      for (double& o : shifted) o += img * period;
      const std::vector<cplx> k = kernel(shifted);
      auto& dst = (img % 2 == 0) ? even_ : odd_;
      for (std::size_t q = 0; q < k.size(); ++q) dst[q] += k[q];
    }
  }

  // Kernel block on rows x cols.
  Eigen::MatrixXcd block(const std::vector<int>& rows, const std::vector<int>& cols) const {
    Eigen::MatrixXcd k = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t a = 0; a < rows.size(); ++a)
      for (std::size_t b = 0; b < cols.size(); ++b) {
        if (diagonal_) {
          if (rows[a] == cols[b]) k(a, b) = pmid_[2 * rows[a]];
        } else {
          k(a, b) = entry(rows[a], cols[b]);
        }
      }
    return k;
  }

 private:
  cplx entry(int i, int j) const {
    if (std::abs(i - j) > reach_) throw DomainError("weyl kernel: offset outside the tabulated reach");
    const int d = i - j + reach_;
    if (!periodic_) return pmid_[i + j] * even_[d];
    const int ns = 2 * n_;
    return pmid_[(i + j) % ns] * even_[d] + pmid_[(i + j + n_) % ns] * odd_[d];
  }

  int n_;
  int reach_;
  bool periodic_;
  bool diagonal_;
  std::vector<double> pmid_;
  std::vector<cplx> even_, odd_;
};

void check_resolution(double center, double width, double eps, double dx, const char* axis) {
  if (std::isinf(width)) return;
  const double freq = (std::abs(center) + width) / eps;
  if (freq * dx > kTwoPi / 8.0)
    throw ResolutionError(std::string("weyl_apply: ") + axis + " grid spacing " + std::to_string(dx) +
                          " does not resolve frequency " + std::to_string(freq) + " with 8 points per oscillation");
}

// Index sets a Weyl application reads from and writes to.
struct Support {
  std::vector<int> r, theta;
};

Support nonzero_support(const WaveFunction& u) {
  const auto& G = u.grid;
  std::vector<char> rr(G.nr, 0), tt(G.ntheta, 0);
  for (int i = 0; i < G.nr; ++i)
    for (int k = 0; k < G.ntheta; ++k)
      if (u.at(i, k) != cplx(0.0)) rr[i] = tt[k] = 1;
  Support s;
  for (int i = 0; i < G.nr; ++i)
    if (rr[i]) s.r.push_back(i);
  for (int k = 0; k < G.ntheta; ++k)
    if (tt[k]) s.theta.push_back(k);
  return s;
}

Support full_support(const PolarGrid& G) {
  Support s;
  for (int i = 0; i < G.nr; ++i) s.r.push_back(i);
  for (int k = 0; k < G.ntheta; ++k) s.theta.push_back(k);
  return s;
}

WaveFunction weyl_on(const SymbolCutoff& a, double eps, const WaveFunction& u, Quantization q, const Support& out_set) {
  if (!(eps > 0.0)) throw DomainError("weyl_apply: eps must be positive");
  const auto& G = u.grid;
  const auto& w = a.widths;
  for (double v : w)
    if (!(v > 0.0)) throw DomainError("weyl_apply: symbol widths must be positive");
  check_resolution(a.center.rho, w[2], eps, G.dr, "radial");
  check_resolution(a.center.omega, w[3], eps, G.dtheta(), "angular");
  const double scale = q == Quantization::RadiallyHomogeneous ? eps : 1.0;
  if (!std::isinf(w[0])) {
    const double lo = (a.center.r - w[0]) / scale, hi = (a.center.r + w[0]) / scale;
    if (lo < G.r0 || hi > G.r_max())
      throw ResolutionError("weyl_apply: position support [" + std::to_string(lo) + ", " + std::to_string(hi) +
                            "] leaves the radial grid [" + std::to_string(G.r0) + ", " + std::to_string(G.r_max()) +
                            "]");
  }
  WaveFunction out(u.space, G);
  const Support in_set = nonzero_support(u);
  if (in_set.r.empty() || out_set.r.empty() || out_set.theta.empty()) return out;
  const auto reach = [](const std::vector<int>& rows, const std::vector<int>& cols) {
    return std::max(rows.back() - cols.front(), cols.back() - rows.front());
  };
  const AxisKernel kr(G.nr, G.r0, G.dr, false, a.center.r, w[0], scale, a.center.rho, w[2], eps, a.sharpness,
                      reach(out_set.r, in_set.r));
  const AxisKernel kt(G.ntheta, 0.0, G.dtheta(), true, a.center.theta, w[1], 1.0, a.center.omega, w[3], eps,
                      a.sharpness, reach(out_set.theta, in_set.theta));
  Eigen::MatrixXcd x(static_cast<Eigen::Index>(in_set.r.size()), static_cast<Eigen::Index>(in_set.theta.size()));
  for (std::size_t i = 0; i < in_set.r.size(); ++i)
    for (std::size_t k = 0; k < in_set.theta.size(); ++k) x(i, k) = u.at(in_set.r[i], in_set.theta[k]);
  const Eigen::MatrixXcd y =
      kr.block(out_set.r, in_set.r) * (x * kt.block(out_set.theta, in_set.theta).transpose());
  for (std::size_t i = 0; i < out_set.r.size(); ++i)
    for (std::size_t k = 0; k < out_set.theta.size(); ++k) out.at(out_set.r[i], out_set.theta[k]) = y(i, k);
  return out;
}

double axis_window(double d, double width, double margin, double sharpness) {
  if (std::isinf(width)) return 1.0;
  d = std::abs(d);
  if (d <= width) return 1.0;
  const double taper = margin * width;
  if (d >= width + taper) return 0.0;
  return bump_step(1.0 - (d - width) / taper, sharpness);
}

// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
struct GaussLegendre {
  std::vector<double> x, w;
  explicit GaussLegendre(int n) : x(n), w(n) {
    for (int i = 0; i < n; ++i) {
      double z = std::cos(kPi * (i + 0.75) / (n + 0.5)), dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = z;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (z * p1 - p0) / (z * z - 1.0);
        const double dz = p1 / dp;
        z -= dz;
        if (std::abs(dz) < 1e-16) break;
      }
      x[i] = z;
      w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
  }
};

// int_a^b bump(t, s) dt on 8 Gauss-Legendre panels.
double bump_integral(double a, double b, double s) {
  static const GaussLegendre gl(24);
  constexpr int panels = 8;
  const double h = (b - a) / panels;
  double acc = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h;
    for (std::size_t k = 0; k < gl.x.size(); ++k) acc += gl.w[k] * bump(mid + 0.5 * h * gl.x[k], s);
  }
  return 0.5 * h * acc;
}

}  // namespace

double bump(double x, double sharpness) {
  if (!(std::abs(x) < 1.0)) return 0.0;
  const double x2 = x * x;
  return std::exp(-sharpness * x2 / (1.0 - x2));
}

double bump_step(double x, double sharpness) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  // symmetric about 1/2; integrate over the shorter side
  if (x > 0.5) return 1.0 - bump_step(1.0 - x, sharpness);
  return bump_integral(-1.0, 2.0 * x - 1.0, sharpness) / (2.0 * bump_integral(-1.0, 0.0, sharpness));
}

double smooth_step(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double f = std::exp(-1.0 / x), g = std::exp(-1.0 / (1.0 - x));
  return f / (f + g);
}

double SymbolCutoff::value(const PhasePoint& z) const {
  const auto factor = [this](double d, double w) { return std::isinf(w) ? 1.0 : bump(d / w, sharpness); };
  return factor(z.r - center.r, widths[0]) * factor(wrap_angle(z.theta - center.theta), widths[1]) *
         factor(z.rho - center.rho, widths[2]) * factor(z.omega - center.omega, widths[3]);
}

bool SymbolCutoff::position_only() const { return std::isinf(widths[2]) && std::isinf(widths[3]); }

std::string to_string(Quantization q) {
  return q == Quantization::Standard ? "standard" : "radially-homogeneous";
}

std::string to_string(Decision d) {
  switch (d) {
    case Decision::Absent:
      return "absent";
    case Decision::Present:
      return "present";
    case Decision::Marginal:
      break;
  }
  return "marginal";
}

WaveFunction weyl_apply(const SymbolCutoff& a, double eps, const WaveFunction& u, Quantization q) {
  return weyl_on(a, eps, u, q, full_support(u.grid));
}

double PositionWindow::value(const SymbolCutoff& a, Quantization q, double r, double theta) const {
  const double pr =
      q == Quantization::Standard ? axis_window(r - a.center.r, a.widths[0], margin, sharpness) : 1.0;
  return pr * axis_window(wrap_angle(theta - a.center.theta), a.widths[1], margin, sharpness);
}

WaveFunction sandwich(const SymbolCutoff& a, double eps, const WaveFunction& u, Quantization q,
                      const PositionWindow& psi, const ScatteringMetric& g) {
  if (!(psi.margin > 0.0)) throw DomainError("sandwich: window margin must be positive");
  const auto& G = u.grid;
  if (q == Quantization::Standard && !std::isinf(a.widths[0])) {
    const double reach = a.widths[0] * (1.0 + psi.margin);
    if (a.center.r - reach < G.r0 || a.center.r + reach > G.r_max())
      throw ResolutionError("sandwich: window support leaves the radial grid");
  }
  WaveFunction w = to_half_density(u, g);
  // psi is a product of a radial and an angular factor
  std::vector<double> pr(G.nr), pt(G.ntheta);
  for (int i = 0; i < G.nr; ++i)
    pr[i] = q == Quantization::Standard ? axis_window(G.r(i) - a.center.r, a.widths[0], psi.margin, psi.sharpness)
                                        : 1.0;
  for (int k = 0; k < G.ntheta; ++k)
    pt[k] = axis_window(wrap_angle(G.theta(k) - a.center.theta), a.widths[1], psi.margin, psi.sharpness);
  Support rows;
  for (int i = 0; i < G.nr; ++i)
    if (pr[i] != 0.0) rows.r.push_back(i);
  for (int k = 0; k < G.ntheta; ++k)
    if (pt[k] != 0.0) rows.theta.push_back(k);
  for (int i = 0; i < G.nr; ++i)
    for (int k = 0; k < G.ntheta; ++k) w.at(i, k) *= pr[i] * pt[k];
  WaveFunction out = weyl_on(a, eps, w, q, rows);
  for (int i = 0; i < G.nr; ++i)
    for (int k = 0; k < G.ntheta; ++k) out.at(i, k) *= pr[i] * pt[k];
  return from_half_density(out, u.space, g);
}

std::vector<double> TestConfig::ladder() const {
  std::vector<double> e(levels);
  for (int k = 0; k < levels; ++k) e[k] = std::ldexp(eps0, -k);
  return e;
}

WFVerdict decide(const std::vector<LadderPoint>& ladder, const TestConfig& cfg, double floor_abs) {
  if (ladder.size() < 5) throw DomainError("verdict: the ladder needs at least 5 values");
  for (std::size_t k = 1; k < ladder.size(); ++k)
    if (!(ladder[k].eps < ladder[k - 1].eps)) throw DomainError("verdict: ladder eps must decrease strictly");
  WFVerdict v;
  v.ladder = ladder;
  v.threshold = cfg.threshold;
  v.marginal_low = cfg.marginal_low;
  v.widths = cfg.widths;
  v.sharpness = cfg.sharpness;
  v.window_margin = cfg.window.margin;

  const auto below = [&](const LadderPoint& p) { return p.norm <= floor_abs; };
  if (std::all_of(ladder.begin(), ladder.end(), below)) {
    v.exponent = kInf;
    v.floor_hit = true;
    v.decision = Decision::Absent;
    v.diagnostic = "every ladder norm at or below the floor";
    return v;
  }
  std::size_t used = ladder.size();
  for (std::size_t k = 0; k < ladder.size(); ++k)
    if (below(ladder[k])) {
      used = k + 1;
      v.floor_hit = true;
      break;
    }
  if (used < 2 || (v.floor_hit && !std::all_of(ladder.begin() + used, ladder.end(), below))) {
    v.exponent = std::nan("");
    v.monotone = false;
    v.decision = Decision::Marginal;
    v.diagnostic = "non-monotone ladder: norms rise again after reaching the floor";
    return v;
  }
  std::vector<double> x(used), y(used);
  for (std::size_t k = 0; k < used; ++k) {
    x[k] = std::log(ladder[k].eps);
    y[k] = std::log(std::max(ladder[k].norm, floor_abs));
  }
  v.exponent = fit_line(x, y).slope;
  bool up = false, down = false;
  for (std::size_t k = 1; k < used; ++k) {
    const double step = y[k] - y[k - 1];
    if (step > cfg.monotone_slack) up = true;
    if (step < -cfg.monotone_slack) down = true;
  }
  v.monotone = !(up && down);
  if (!v.monotone) {
    v.decision = Decision::Marginal;
    v.diagnostic = "non-monotone ladder";
    return v;
  }
  if (v.exponent >= cfg.threshold) {
    v.decision = Decision::Absent;
  } else if (v.floor_hit) {
    v.decision = Decision::Marginal;
    v.diagnostic = "floor reached; the exponent is a lower bound";
  } else {
    v.decision = v.exponent >= cfg.marginal_low ? Decision::Marginal : Decision::Present;
  }
  return v;
}

namespace {

SymbolCutoff symbol_at(const PhasePoint& p, const TestConfig& cfg) { return {p, cfg.widths, cfg.sharpness}; }

WFVerdict run_ladder(const StateFamily& family, const PhasePoint& point, const TestConfig& cfg,
                     const ScatteringMetric& g, Quantization q, double floor_abs, bool check_norm) {
  const SymbolCutoff a = symbol_at(point, cfg);
  std::vector<LadderPoint> ladder;
  double scale = 0.0;
  for (double eps : cfg.ladder()) {
    const WaveFunction u = family(eps);
    if (check_norm) {
      const double nu = norm(u, g);
      if (nu > 1.0 + 1e-9) throw DomainError("fs_test: family member has norm " + std::to_string(nu) + " > 1");
      scale = std::max(scale, nu);
    }
    const WaveFunction s = sandwich(a, eps, u, q, cfg.window, g);
    ladder.push_back({eps, norm(s, g)});
  }
  WFVerdict v = decide(ladder, cfg, check_norm ? cfg.floor * scale : floor_abs);
  v.point = point;
  v.scaling = q;
  return v;
}

}  // namespace

WFVerdict fs_test(const StateFamily& family, const PhasePoint& point, const TestConfig& cfg,
                  const ScatteringMetric& g) {
  return run_ladder(family, point, cfg, g, Quantization::Standard, 0.0, true);
}

WFVerdict wf_test(const WaveFunction& u, const PhasePoint& point, const TestConfig& cfg, const ScatteringMetric& g) {
  const auto fixed = [&u](double) { return u; };
  return run_ladder(fixed, point, cfg, g, Quantization::Standard, cfg.floor * norm(u, g), false);
}

WFVerdict wf_rh_test(const WaveFunction& u, const PhasePoint& point, const TestConfig& cfg,
                     const ScatteringMetric& g) {
  const double eps_min = cfg.ladder().back();
  if (!std::isinf(cfg.widths[0]) && (point.r + cfg.widths[0]) / eps_min > u.grid.r_max())
    throw ResolutionError("wf_rh_test: r_max " + std::to_string(u.grid.r_max()) + " below the scaled support " +
                          std::to_string((point.r + cfg.widths[0]) / eps_min));
  const auto fixed = [&u](double) { return u; };
  return run_ladder(fixed, point, cfg, g, Quantization::RadiallyHomogeneous, cfg.floor * norm(u, g), false);
}

}  // namespace conic
