#include "conic/propagator.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>

#include "conic/errors.hpp"
#include "conic/microlocal.hpp"

namespace conic {

namespace {

double l2(const std::vector<cplx>& a) {
  double s = 0.0;
  for (const auto& z : a) s += std::norm(z);
  return std::sqrt(s);
}

// plain arithmetic; std::complex products go through the slow Annex G path
inline cplx mul(cplx a, cplx b) {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

inline void times_i(cplx& z, double c) { z = {-c * z.imag(), c * z.real()}; }

cplx dot(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    re += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
    im += a[i].real() * b[i].imag() - a[i].imag() * b[i].real();
  }
  return {re, im};
}

// y -= c x
void axpy_minus(cplx c, const std::vector<cplx>& x, std::vector<cplx>& y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= mul(c, x[i]);
}

bool cn_admissible(const ScatteringMetric& g, const Potential& V) {
  if (!g.is_rotationally_symmetric() || !V.angular.is_constant()) return false;
  return std::none_of(g.perturbations().begin(), g.perturbations().end(),
                      [](const PerturbationTerm& t) { return t.order == 1 && t.amplitude != 0.0; });
}

}  // namespace

CurvedPropagator::CurvedPropagator(const ScatteringMetric& g, const Potential& V, const PolarGrid& grid, Scheme scheme,
                                   double seam_fraction)
    : g_(g), V_(V), grid_(grid), scheme_(scheme), fft_(grid.nr, grid.ntheta) {
  if (grid.nr < 4) throw ResolutionError("propagator: radial grid needs at least 4 nodes");
  if (!(grid.r0 - 0.5 * grid.dr > 1.0)) throw DomainError("propagator: radial grid must stay inside r > 1");
  if (scheme == Scheme::CrankNicolson && !cn_admissible(g, V))
    throw DomainError("crank-nicolson scheme requires a rotationally symmetric metric and potential without m1");

  const std::size_t n = grid.size();
  m_.resize(n);
  v_.resize(n);
  arr_.resize(n);
  art_.resize(n);
  att_.resize(n);
  for (int i = 0; i < grid.nr; ++i)
    for (int k = 0; k < grid.ntheta; ++k) {
      const double r = grid.r(i), th = grid.theta(k);
      const std::size_t idx = grid.index(i, k);
      const InverseMetricJet inv = g_.inverse_jet(r, th);
      const double det = g_.metric_matrix(r, th).determinant();
      const double sq = std::sqrt(det);
      m_[idx] = std::pow(det, -0.25);
      v_[idx] = V_.value(r, th);
      arr_[idx] = sq * inv.grr.v;
      art_[idx] = sq * inv.grt.v;
      att_[idx] = sq * inv.gtt.v;
    }
  kr_.resize(grid.nr);
  kt_.resize(grid.ntheta);
  // derivatives are band-limited to 2/3 of the Nyquist frequency
  const auto band = [](int idx, int count) { return std::min(idx, count - idx) <= count / 3; };
  for (int i = 0; i < grid.nr; ++i) kr_[i] = band(i, grid.nr) ? fft_wavenumber(i, grid.nr, grid.dr) : 0.0;
  for (int k = 0; k < grid.ntheta; ++k)
    kt_[k] = band(k, grid.ntheta) ? fft_wavenumber(k, grid.ntheta, grid.dtheta()) : 0.0;

  if (scheme == Scheme::CrankNicolson) {
    a_half_.resize(grid.nr + 1);
    gtt_node_.resize(grid.nr);
    for (int i = 0; i <= grid.nr; ++i) {
      const double r = grid.r0 + (i - 0.5) * grid.dr;
      const InverseMetricJet inv = g_.inverse_jet(r, 0.0);
      a_half_[i] = std::sqrt(g_.metric_matrix(r, 0.0).determinant()) * inv.grr.v;
    }
    for (int i = 0; i < grid.nr; ++i) gtt_node_[i] = g_.inverse_jet(grid.r(i), 0.0).gtt.v;
  } else {
    if (!(seam_fraction >= 0.0 && seam_fraction < 0.5)) throw DomainError("seam_fraction must lie in [0, 0.5)");
    if (seam_fraction > 0.0) blend_seam(seam_fraction);
    spectral_bounds();
  }
}

void CurvedPropagator::blend_seam(double fraction) {
  const PolarGrid& G = grid_;
  const double width = fraction * (G.r_max() - G.r0);
  const int lo = static_cast<int>(std::lround(width / G.dr));
  const int hi = G.nr - 1 - lo;
  if (lo < 1 || hi <= lo) return;
  for (int k = 0; k < G.ntheta; ++k) {
    const std::size_t a = G.index(lo, k), b = G.index(hi, k);
    // positive fields meet at the geometric mean, so m^2 a_rr stays near its end values
    const double m_t = std::sqrt(m_[a] * m_[b]), rr_t = std::sqrt(arr_[a] * arr_[b]);
    const double tt_t = std::sqrt(att_[a] * att_[b]);
    const double rt_t = 0.5 * (art_[a] + art_[b]), v_t = 0.5 * (v_[a] + v_[b]);
    for (int i = 0; i < G.nr; ++i) {
      double s = 0.0;
      if (i < lo) s = smooth_step(static_cast<double>(lo - i) / lo);
      if (i > hi) s = smooth_step(static_cast<double>(i - hi) / (G.nr - 1 - hi));
      if (s == 0.0) continue;
      const std::size_t n = G.index(i, k);
      const auto geo = [s](double x, double t) { return std::exp((1.0 - s) * std::log(x) + s * std::log(t)); };
      m_[n] = geo(m_[n], m_t);
      arr_[n] = geo(arr_[n], rr_t);
      att_[n] = geo(att_[n], tt_t);
      art_[n] = (1.0 - s) * art_[n] + s * rt_t;
      v_[n] = (1.0 - s) * v_[n] + s * v_t;
    }
  }
}

CurvedPropagator::~CurvedPropagator() = default;

std::vector<double> CurvedPropagator::absorber_profile(const AbsorbingLayer& layer) const {
  std::vector<double> w(grid_.nr, 0.0);
  if (layer.strength == 0.0) return w;
  const double width = layer.width_fraction * (grid_.r_max() - grid_.r0);
  if (!(width > 0.0)) return w;
  for (int i = 0; i < grid_.nr; ++i) {
    const double r = grid_.r(i);
    const double lo = grid_.r0 + width - r, hi = r - (grid_.r_max() - width);
    const double depth = std::max({0.0, lo, hi}) / width;
    w[i] = layer.strength * std::pow(depth, layer.power);
  }
  return w;
}

Tridiagonal CurvedPropagator::radial_matrix(int mode) const {
  if (scheme_ != Scheme::CrankNicolson) throw DomainError("radial_matrix is defined for the crank-nicolson scheme");
  const int n = grid_.nr;
  const double idr2 = 1.0 / (grid_.dr * grid_.dr);
  Tridiagonal T;
  T.diag.resize(n);
  T.off.resize(n - 1);
  for (int i = 0; i < n; ++i) {
    const double mi = m_[grid_.index(i, 0)];
    T.diag[i] = mi * mi * (a_half_[i] + a_half_[i + 1]) * idr2 + double(mode) * mode * gtt_node_[i] +
                v_[grid_.index(i, 0)];
    if (i + 1 < n) T.off[i] = -mi * m_[grid_.index(i + 1, 0)] * a_half_[i + 1] * idr2;
  }
  return T;
}

void CurvedPropagator::apply(const std::vector<cplx>& w, std::vector<cplx>& out) const {
  const PolarGrid& G = grid_;
  out.resize(G.size());
  if (scheme_ == Scheme::CrankNicolson) {
    std::vector<cplx> a = w;
    fft_.forward_theta(a.data());
    for (int k = 0; k < G.ntheta; ++k) {
      const int mode = static_cast<int>(std::lround(fft_wavenumber(k, G.ntheta, G.dtheta())));
      const Tridiagonal T = radial_matrix(mode);
      for (int i = 0; i < G.nr; ++i) {
        cplx s = T.diag[i] * a[G.index(i, k)];
        if (i > 0) s += T.off[i - 1] * a[G.index(i - 1, k)];
        if (i + 1 < G.nr) s += T.off[i] * a[G.index(i + 1, k)];
        out[G.index(i, k)] = s / static_cast<double>(G.ntheta);
      }
    }
    fft_.backward_theta(out.data());
    return;
  }
  const std::size_t n = G.size();
  thread_local std::vector<cplx> dr, dt;
  dr.resize(n);
  dt.resize(n);
  for (std::size_t i = 0; i < n; ++i) dr[i] = dt[i] = m_[i] * w[i];
  fft_.forward_r(dr.data());
  fft_.forward_theta(dt.data());
  const double sr = 1.0 / G.nr, st = 1.0 / G.ntheta;
  for (int i = 0; i < G.nr; ++i)
    for (int k = 0; k < G.ntheta; ++k) {
      times_i(dr[G.index(i, k)], kr_[i] * sr);
      times_i(dt[G.index(i, k)], kt_[k] * st);
    }
  fft_.backward_r(dr.data());
  fft_.backward_theta(dt.data());
  for (std::size_t i = 0; i < n; ++i) {
    const cplx a = arr_[i] * dr[i] + art_[i] * dt[i];
    dt[i] = art_[i] * dr[i] + att_[i] * dt[i];
    dr[i] = a;
  }
  fft_.forward_r(dr.data());
  fft_.forward_theta(dt.data());
  for (int i = 0; i < G.nr; ++i)
    for (int k = 0; k < G.ntheta; ++k) {
      times_i(dr[G.index(i, k)], kr_[i] * sr);
      times_i(dt[G.index(i, k)], kt_[k] * st);
    }
  fft_.backward_r(dr.data());
  fft_.backward_theta(dt.data());
  for (std::size_t i = 0; i < n; ++i) out[i] = -m_[i] * (dr[i] + dt[i]) + v_[i] * w[i];
}

double CurvedPropagator::crank_nicolson_budget(const WaveFunction& u, const EvolutionConfig& cfg) const {
  const WaveFunction w = to_half_density(u, g_);
  std::vector<cplx> hw;
  apply(w.data, hw);
  std::vector<cplx> a = w.data, b = hw;
  fft_.forward_theta(a.data());
  fft_.forward_theta(b.data());
  double total = 0.0;
  for (const auto& z : a) total += std::norm(z);
  double lambda = 0.0;
  for (int k = 0; k < grid_.ntheta; ++k) {
    double na = 0.0, nb = 0.0;
    for (int i = 0; i < grid_.nr; ++i) {
      na += std::norm(a[grid_.index(i, k)]);
      nb += std::norm(b[grid_.index(i, k)]);
    }
    if (na > 1e-12 * total) lambda = std::max(lambda, std::sqrt(nb / na));
  }
  const double span = std::max(std::abs(cfg.t_total), 1e-300);
  if (lambda == 0.0) return std::abs(cfg.t_total);
  return std::sqrt(12.0 * cfg.phase_budget / (span * lambda * lambda * lambda));
}

void CurvedPropagator::evolve_cn(std::vector<cplx>& w, const EvolutionConfig& cfg) const {
  const PolarGrid& G = grid_;
  const int steps = std::max(1, static_cast<int>(std::ceil(std::abs(cfg.t_total) / cfg.dt - 1e-12)));
  const double h = cfg.t_total / steps;
  const std::vector<double> cap = absorber_profile(cfg.absorber);
  fft_.forward_theta(w.data());
  const int n = G.nr;
  std::vector<cplx> lower(n), diag(n), upper(n), cprime(n), rhs(n), x(n);
  for (int k = 0; k < G.ntheta; ++k) {
    const int mode = static_cast<int>(std::lround(fft_wavenumber(k, G.ntheta, G.dtheta())));
    const Tridiagonal T = radial_matrix(mode);
    // A = I + i h/2 (T - i W |h|/h), B = I - i h/2 (T - i W |h|/h)
    const cplx ih(0.0, 0.5 * h);
    std::vector<cplx> d(n), o(n > 1 ? n - 1 : 0);
    for (int i = 0; i < n; ++i) d[i] = T.diag[i] - cplx(0.0, cap[i]) * (h >= 0 ? 1.0 : -1.0);
    for (int i = 0; i + 1 < n; ++i) o[i] = T.off[i];
    // Thomas factorisation of A
    std::vector<cplx> ad(n), ao(n > 1 ? n - 1 : 0);
    for (int i = 0; i < n; ++i) ad[i] = 1.0 + ih * d[i];
    for (int i = 0; i + 1 < n; ++i) ao[i] = ih * o[i];
    std::vector<cplx> piv(n), mult(n);
    piv[0] = ad[0];
    for (int i = 1; i < n; ++i) {
      mult[i] = ao[i - 1] / piv[i - 1];
      piv[i] = ad[i] - mult[i] * ao[i - 1];
    }
    for (int s = 0; s < steps; ++s) {
      for (int i = 0; i < n; ++i) {
        cplx v = (1.0 - ih * d[i]) * w[G.index(i, k)];
        if (i > 0) v -= ih * o[i - 1] * w[G.index(i - 1, k)];
        if (i + 1 < n) v -= ih * o[i] * w[G.index(i + 1, k)];
        rhs[i] = v;
      }
      for (int i = 1; i < n; ++i) rhs[i] -= mult[i] * rhs[i - 1];
      x[n - 1] = rhs[n - 1] / piv[n - 1];
      for (int i = n - 2; i >= 0; --i) x[i] = (rhs[i] - ao[i] * x[i + 1]) / piv[i];
      for (int i = 0; i < n; ++i) w[G.index(i, k)] = x[i];
    }
  }
  fft_.backward_theta(w.data());
  for (auto& z : w) z /= static_cast<double>(G.ntheta);
}

void CurvedPropagator::spectral_bounds() {
  // H = M Q M + V with Q >= 0, so min V bounds the spectrum from below.
  lambda_min_ = *std::min_element(v_.begin(), v_.end());
  const std::size_t n = grid_.size();
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> normal;
  std::vector<std::vector<cplx>> basis(1, std::vector<cplx>(n));
  for (auto& z : basis[0]) z = {normal(rng), normal(rng)};
  const double n0 = l2(basis[0]);
  for (auto& z : basis[0]) z /= n0;
  std::vector<double> alpha, beta;
  std::vector<cplx> u;
  double upper = 0.0;
  const int steps = static_cast<int>(std::min<std::size_t>(60, n));
  for (int k = 0; k < steps; ++k) {
    apply(basis[k], u);
    alpha.push_back(dot(basis[k], u).real());
    for (int j = 0; j <= k; ++j) axpy_minus(dot(basis[j], u), basis[j], u);
    for (int j = 0; j <= k; ++j) axpy_minus(dot(basis[j], u), basis[j], u);
    const double b = l2(u);
    const int m = k + 1;
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) T(i, i) = alpha[i];
    for (int i = 0; i + 1 < m; ++i) T(i, i + 1) = T(i + 1, i) = beta[i];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    // top Ritz value plus its residual
    upper = es.eigenvalues()(m - 1) + b * std::abs(es.eigenvectors()(m - 1, m - 1));
    if (b < 1e-12 * std::abs(upper)) break;
    beta.push_back(b);
    basis.emplace_back(n);
    for (std::size_t i = 0; i < n; ++i) basis[k + 1][i] = u[i] / b;
  }
  lambda_max_ = upper + 0.02 * (upper - lambda_min_);
}

std::vector<double> bessel_j_sequence(double x, int n) {
  if (!(x >= 0.0) || n < 0) throw DomainError("bessel_j_sequence: need x >= 0 and n >= 0");
  std::vector<double> out(n + 1, 0.0);
  if (x == 0.0) {
    out[0] = 1.0;
    return out;
  }
  const int top = std::max(n, static_cast<int>(std::ceil(x))) + 30 +
                  static_cast<int>(std::sqrt(40.0 * std::max<double>(n, x)));
  std::vector<double> j(top + 2, 0.0);
  j[top] = 1e-300;
  double sum = 0.0;
  for (int k = top; k >= 1; --k) {
    j[k - 1] = 2.0 * k / x * j[k] - j[k + 1];
    if (std::abs(j[k - 1]) > 1e250) {
      for (int m = k - 1; m <= top; ++m) j[m] *= 1e-250;
      sum *= 1e-250;
    }
    if ((k - 1) % 2 == 0 && k - 1 > 0) sum += 2.0 * j[k - 1];
  }
  sum += j[0];
  for (int k = 0; k <= n; ++k) out[k] = j[k] / sum;
  return out;
}

// e^{-i dt H} w by a Chebyshev series on [lambda_min, lambda_max].
void CurvedPropagator::chebyshev_exp(std::vector<cplx>& w, double dt, const EvolutionConfig& cfg) const {
  const double half = 0.5 * (lambda_max_ - lambda_min_);
  const double mid = 0.5 * (lambda_max_ + lambda_min_);
  const double x = half * std::abs(dt);
  const double sign = dt >= 0 ? 1.0 : -1.0;
  const int kmax = static_cast<int>(std::ceil(x + 10.0 * std::cbrt(x) + 40.0));
  const std::size_t n = w.size();
  std::vector<cplx> t0 = w, t1, t2, acc(n);
  // T_1 = H' w with H' = (H - mid) / half
  const auto step = [&](const std::vector<cplx>& in, std::vector<cplx>& out) {
    apply(in, out);
    for (std::size_t i = 0; i < n; ++i) out[i] = (out[i] - mid * in[i]) / half;
  };
  const std::vector<double> bessel = bessel_j_sequence(x, kmax);
  const auto coeff = [&](int k) {
    // (2 - delta_k0) (-i sign)^k J_k(x)
    const double j = bessel[k];
    static constexpr cplx powers[4] = {{1, 0}, {0, -1}, {-1, 0}, {0, 1}};
    const cplx p = powers[k % 4];
    return (k == 0 ? 1.0 : 2.0) * j * cplx(p.real(), sign * p.imag());
  };
  for (std::size_t i = 0; i < n; ++i) acc[i] = mul(coeff(0), t0[i]);
  if (x == 0.0) {
    w = acc;
    return;
  }
  step(t0, t1);
  axpy_minus(-coeff(1), t1, acc);
  int quiet = 0;
  for (int k = 2; k <= kmax; ++k) {
    step(t1, t2);
    for (std::size_t i = 0; i < n; ++i) t2[i] = 2.0 * t2[i] - t0[i];
    const cplx c = coeff(k);
    axpy_minus(-c, t2, acc);
    std::swap(t0, t1);
    std::swap(t1, t2);
    quiet = (k > x && std::abs(c) < 1e-3 * cfg.series_tol) ? quiet + 1 : 0;
    if (quiet >= 4) break;
    if (k == kmax) throw StiffnessError("Chebyshev series did not converge");
  }
  const std::complex<double> phase = std::polar(1.0, -sign * mid * std::abs(dt));
  for (std::size_t i = 0; i < n; ++i) w[i] = mul(phase, acc[i]);
}

void CurvedPropagator::evolve_spectral(std::vector<cplx>& w, const EvolutionConfig& cfg) const {
  if (cfg.absorber.strength == 0.0) {
    chebyshev_exp(w, cfg.t_total, cfg);
    return;
  }
  const int steps = std::max(1, static_cast<int>(std::ceil(std::abs(cfg.t_total) / cfg.dt - 1e-12)));
  const double h = cfg.t_total / steps;
  const std::vector<double> cap = absorber_profile(cfg.absorber);
  std::vector<double> damp(grid_.nr);
  for (int i = 0; i < grid_.nr; ++i) damp[i] = std::exp(-0.5 * std::abs(h) * cap[i]);
  const auto absorb = [&] {
    for (int i = 0; i < grid_.nr; ++i)
      for (int k = 0; k < grid_.ntheta; ++k) w[grid_.index(i, k)] *= damp[i];
  };
  for (int s = 0; s < steps; ++s) {
    absorb();
    chebyshev_exp(w, h, cfg);
    absorb();
  }
}

WaveFunction CurvedPropagator::evolve(const WaveFunction& u, const EvolutionConfig& cfg) const {
  if (u.space != Space::Curved) throw DomainError("curved_evolve expects a curved state");
  if (u.grid.nr != grid_.nr || u.grid.ntheta != grid_.ntheta || std::abs(u.grid.r0 - grid_.r0) > 1e-12 ||
      std::abs(u.grid.dr - grid_.dr) > 1e-14)
    throw ResamplingError("state and propagator grids differ");
  if (!(cfg.dt > 0.0)) throw DomainError("evolution: dt must be positive");
  if (cfg.t_total == 0.0) return u;
  if (scheme_ == Scheme::CrankNicolson) {
    const double budget = crank_nicolson_budget(u, cfg);
    if (cfg.dt > budget * (1.0 + 1e-12))
      throw BudgetError("crank-nicolson step " + std::to_string(cfg.dt) + " exceeds the phase budget; need dt <= " +
                            std::to_string(budget),
                        budget);
  }
  WaveFunction w = to_half_density(u, g_);
  if (scheme_ == Scheme::CrankNicolson)
    evolve_cn(w.data, cfg);
  else
    evolve_spectral(w.data, cfg);
  return from_half_density(w, Space::Curved, g_);
}

WaveFunction curved_evolve(const WaveFunction& u, const ScatteringMetric& g, const Potential& V,
                           const EvolutionConfig& cfg) {
  const CurvedPropagator prop(g, V, u.grid, cfg.scheme);
  return prop.evolve(u, cfg);
}

}  // namespace conic
