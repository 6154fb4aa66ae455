#include "conic/quantum.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "conic/errors.hpp"

namespace conic {

PolarGrid PolarGrid::covering(double r_lo, double r_hi, double dr, int ntheta) {
  if (!(dr > 0.0) || !(r_hi > r_lo) || ntheta < 1) throw DomainError("PolarGrid::covering: invalid extent");
  PolarGrid g;
  g.r0 = r_lo;
  g.dr = dr;
  g.nr = static_cast<int>(std::ceil((r_hi - r_lo) / dr - 1e-9)) + 1;
  g.ntheta = ntheta;
  return g;
}

std::string to_string(Space s) { return s == Space::Free ? "free" : "curved"; }

std::vector<double> quadrature_weights(const WaveFunction& u, const ScatteringMetric& g) {
  const PolarGrid& G = u.grid;
  std::vector<double> w(G.size());
  const double cell = G.dr * G.dtheta();
  for (int i = 0; i < G.nr; ++i)
    for (int j = 0; j < G.ntheta; ++j) {
      const double th = G.theta(j);
      w[G.index(i, j)] =
          cell * (u.space == Space::Free ? std::sqrt(g.boundary().h(th)) : g.sqrt_det(G.r(i), th));
    }
  return w;
}

namespace {

void require_same_grid(const WaveFunction& u, const WaveFunction& v) {
  const auto& a = u.grid;
  const auto& b = v.grid;
  if (u.space != v.space || a.nr != b.nr || a.ntheta != b.ntheta || std::abs(a.r0 - b.r0) > 1e-12 * (1 + std::abs(a.r0)) ||
      std::abs(a.dr - b.dr) > 1e-14 * a.dr)
    throw ResamplingError("inner product of states on different grids");
}

// index of r on grid G when r is a node, -1 when outside, throws when between nodes
long node_index(const PolarGrid& G, double r) {
  const double q = (r - G.r0) / G.dr;
  const double k = std::round(q);
  if (std::abs(q - k) > 1e-6) throw ResamplingError("grid nodes are not aligned (dr or r0 mismatch)");
  if (k < 0 || k >= G.nr) return -1;
  return static_cast<long>(k);
}

void require_compatible(const PolarGrid& a, const PolarGrid& b) {
  if (a.ntheta != b.ntheta) throw ResamplingError("angular resolutions differ");
  if (std::abs(a.dr - b.dr) > 1e-12 * a.dr) throw ResamplingError("radial steps differ");
}

}  // namespace

cplx inner(const WaveFunction& u, const WaveFunction& v, const ScatteringMetric& g) {
  require_same_grid(u, v);
  const auto w = quadrature_weights(u, g);
  cplx s = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) s += u.data[k] * std::conj(v.data[k]) * w[k];
  return s;
}

double norm(const WaveFunction& u, const ScatteringMetric& g) {
  const auto w = quadrature_weights(u, g);
  double s = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) s += std::norm(u.data[k]) * w[k];
  return std::sqrt(s);
}

double flat_norm(const WaveFunction& u) {
  double s = 0.0;
  for (const auto& z : u.data) s += std::norm(z);
  return std::sqrt(s * u.grid.dr * u.grid.dtheta());
}

WaveFunction free_evolve(const WaveFunction& u, double t) {
  WaveFunction out = u;
  if (t == 0.0) return out;
  const PolarGrid& G = u.grid;
  GridFft fft(G.nr, G.ntheta);
  fft.forward_r(out.data.data());
  const double scale = 1.0 / G.nr;
  for (int k = 0; k < G.nr; ++k) {
    const double kr = fft_wavenumber(k, G.nr, G.dr);
    const cplx m = std::polar(scale, -t * kr * kr);
    for (int j = 0; j < G.ntheta; ++j) out.at(k, j) *= m;
  }
  fft.backward_r(out.data.data());
  return out;
}

double cutoff_j(double r) {
  if (r <= 1.5) return 0.0;
  if (r >= 2.0) return 1.0;
  const double x = (r - 1.5) / 0.5;
  const double a = std::exp(-1.0 / x), b = std::exp(-1.0 / (1.0 - x));
  return a / (a + b);
}

WaveFunction J_embed(const WaveFunction& u, const ScatteringMetric& g, const PolarGrid& target) {
  if (u.space != Space::Free) throw DomainError("J_embed expects a free state");
  require_compatible(u.grid, target);
  if (!(target.r0 > 1.0)) throw DomainError("J_embed: curved grid must lie in r > 1");
  WaveFunction v(Space::Curved, target);
  for (int i = 0; i < target.nr; ++i) {
    const double r = target.r(i);
    const long src = node_index(u.grid, r);
    const double jr = cutoff_j(r);
    if (src < 0 || jr == 0.0) continue;
    for (int k = 0; k < target.ntheta; ++k) {
      const double th = target.theta(k);
      const double det = g.metric_matrix(r, th).determinant();
      v.at(i, k) = jr * std::pow(det, -0.25) * std::pow(g.boundary().h(th), 0.25) * u.at(static_cast<int>(src), k);
    }
  }
  return v;
}

WaveFunction J_adjoint(const WaveFunction& v, const ScatteringMetric& g, const PolarGrid& target) {
  if (v.space != Space::Curved) throw DomainError("J_adjoint expects a curved state");
  require_compatible(v.grid, target);
  WaveFunction u(Space::Free, target);
  // every curved node must be a free node
  for (int i = 0; i < v.grid.nr; ++i) {
    const double r = v.grid.r(i);
    const long dst = node_index(target, r);
    const double jr = cutoff_j(r);
    if (dst < 0) {
      bool nonzero = false;
      for (int k = 0; k < v.grid.ntheta; ++k) nonzero = nonzero || v.at(i, k) != cplx(0.0);
      if (nonzero && jr != 0.0) throw ResamplingError("J_adjoint: free grid does not cover the curved support");
      continue;
    }
    if (jr == 0.0) continue;
    for (int k = 0; k < target.ntheta; ++k) {
      const double th = target.theta(k);
      const double det = g.metric_matrix(r, th).determinant();
      u.at(static_cast<int>(dst), k) = jr * std::pow(det, 0.25) * std::pow(g.boundary().h(th), -0.25) * v.at(i, k);
    }
  }
  return u;
}

WaveFunction to_half_density(const WaveFunction& u, const ScatteringMetric& g) {
  WaveFunction w = u;
  const auto& G = u.grid;
  for (int i = 0; i < G.nr; ++i)
    for (int k = 0; k < G.ntheta; ++k) {
      const double th = G.theta(k);
      const double f = u.space == Space::Free ? std::pow(g.boundary().h(th), 0.25)
                                              : std::pow(g.metric_matrix(G.r(i), th).determinant(), 0.25);
      w.at(i, k) *= f;
    }
  return w;
}

WaveFunction from_half_density(const WaveFunction& w, Space space, const ScatteringMetric& g) {
  WaveFunction u = w;
  u.space = space;
  const auto& G = w.grid;
  for (int i = 0; i < G.nr; ++i)
    for (int k = 0; k < G.ntheta; ++k) {
      const double th = G.theta(k);
      const double f = space == Space::Free ? std::pow(g.boundary().h(th), 0.25)
                                            : std::pow(g.metric_matrix(G.r(i), th).determinant(), 0.25);
      u.at(i, k) /= f;
    }
  return u;
}

WaveFunction make_coherent_state(const PhasePoint& c, double eps, const PolarGrid& grid, Space space,
                                 const ScatteringMetric& g) {
  if (!(eps > 0.0 && eps <= 1.0)) throw DomainError("coherent state: eps must lie in (0, 1]");
  const double width = std::sqrt(eps);
  // 8 points per central wavelength 2 pi eps / |p|, Nyquist above |p| + 6 sigma
  const auto resolves = [&](double momentum, double step) {
    const double wavelength = momentum != 0.0 ? kTwoPi * eps / std::abs(momentum) : INFINITY;
    const double k_needed = (std::abs(momentum) + 6.0 * width) / eps;
    return wavelength >= 8.0 * step * (1.0 - 1e-9) && M_PI / step >= k_needed && width >= 2.0 * step;
  };
  if (!resolves(c.rho, grid.dr))
    throw ResolutionError("coherent state: radial grid step too coarse for eps = " + std::to_string(eps));
  if (!resolves(c.omega, grid.dtheta()))
    throw ResolutionError("coherent state: angular grid too coarse for eps = " + std::to_string(eps));
  if (c.r - 8.0 * width < grid.r0 || c.r + 8.0 * width > grid.r_max())
    throw ResolutionError("coherent state: packet not contained in the radial grid");

  WaveFunction w(space, grid);
  std::vector<cplx> ang(grid.ntheta);
  for (int k = 0; k < grid.ntheta; ++k) {
    cplx s = 0.0;
    for (int m = -3; m <= 3; ++m) {
      const double d = grid.theta(k) - c.theta + kTwoPi * m;
      s += std::exp(cplx(-d * d / (2.0 * eps), c.omega * d / eps));
    }
    ang[k] = s;
  }
  for (int i = 0; i < grid.nr; ++i) {
    const double d = grid.r(i) - c.r;
    const cplx rad = std::exp(cplx(-d * d / (2.0 * eps), c.rho * d / eps));
    for (int k = 0; k < grid.ntheta; ++k) w.at(i, k) = rad * ang[k];
  }
  const double n = flat_norm(w);
  for (auto& z : w.data) z /= n;
  return from_half_density(w, space, g);
}

Moments moments(const WaveFunction& u, const ScatteringMetric& g, double eps) {
  const WaveFunction w = to_half_density(u, g);
  const auto& G = w.grid;
  Moments m;
  double sr = 0.0;
  cplx st = 0.0;
  for (int i = 0; i < G.nr; ++i)
    for (int k = 0; k < G.ntheta; ++k) {
      const double p = std::norm(w.at(i, k));
      m.mass += p;
      sr += p * G.r(i);
      st += p * std::polar(1.0, G.theta(k));
    }
  if (m.mass == 0.0) return m;
  m.r = sr / m.mass;
  m.theta = std::arg(st);
  if (m.theta < 0.0) m.theta += kTwoPi;

  GridFft fft(G.nr, G.ntheta);
  WaveFunction a = w;
  fft.forward_r(a.data.data());
  double pr = 0.0, mass_r = 0.0;
  for (int i = 0; i < G.nr; ++i) {
    const double kr = fft_wavenumber(i, G.nr, G.dr);
    for (int k = 0; k < G.ntheta; ++k) {
      const double p = std::norm(a.at(i, k));
      pr += p * kr;
      mass_r += p;
    }
  }
  WaveFunction b = w;
  fft.forward_theta(b.data.data());
  double pt = 0.0, mass_t = 0.0;
  for (int i = 0; i < G.nr; ++i)
    for (int k = 0; k < G.ntheta; ++k) {
      const double mk = fft_wavenumber(k, G.ntheta, G.dtheta());
      const double p = std::norm(b.at(i, k));
      pt += p * mk;
      mass_t += p;
    }
  m.rho = eps * pr / mass_r;
  m.omega = eps * pt / mass_t;
  m.mass *= G.dr * G.dtheta();
  return m;
}

void write_snapshot_csv(std::ostream& os, const WaveFunction& u) {
  const auto& G = u.grid;
  os << "# conic-snapshot v1\n";
  os << std::setprecision(17);
  os << "# space=" << to_string(u.space) << "\n# r0=" << G.r0 << "\n# dr=" << G.dr << "\n# nr=" << G.nr
     << "\n# ntheta=" << G.ntheta << "\n";
  os << "r,mode,re,im\n";
  WaveFunction a = u;
  GridFft fft(G.nr, G.ntheta);
  fft.forward_theta(a.data.data());
  for (int i = 0; i < G.nr; ++i)
    for (int k = 0; k < G.ntheta; ++k) {
      const int mode = k <= G.ntheta / 2 ? k : k - G.ntheta;
      const cplx c = a.at(i, k) / static_cast<double>(G.ntheta);
      os << G.r(i) << ',' << mode << ',' << c.real() << ',' << c.imag() << '\n';
    }
}

WaveFunction read_snapshot_csv(std::istream& is) {
  std::map<std::string, std::string> header;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.rfind("# ", 0) == 0) {
      const auto eq = line.find('=');
      if (eq != std::string::npos) header[line.substr(2, eq - 2)] = line.substr(eq + 1);
      continue;
    }
    break;  // column header
  }
  for (const char* key : {"space", "r0", "dr", "nr", "ntheta"})
    if (!header.count(key)) throw ConfigError("snapshot: missing header field '" + std::string(key) + "'");
  PolarGrid G;
  G.r0 = std::stod(header["r0"]);
  G.dr = std::stod(header["dr"]);
  G.nr = std::stoi(header["nr"]);
  G.ntheta = std::stoi(header["ntheta"]);
  WaveFunction u(header["space"] == "free" ? Space::Free : Space::Curved, G);
  for (int i = 0; i < G.nr; ++i)
    for (int k = 0; k < G.ntheta; ++k) {
      if (!std::getline(is, line)) throw ConfigError("snapshot: truncated at line " + std::to_string(lineno + 1));
      ++lineno;
      std::stringstream ss(line);
      std::string r, mode, re, im;
      std::getline(ss, r, ',');
      std::getline(ss, mode, ',');
      std::getline(ss, re, ',');
      std::getline(ss, im, ',');
      int m = std::stoi(mode);
      if (m < 0) m += G.ntheta;
      u.at(i, m) = cplx(std::stod(re), std::stod(im));
    }
  GridFft fft(G.nr, G.ntheta);
  fft.backward_theta(u.data.data());
  return u;
}

namespace {
constexpr char kMagic[8] = {'C', 'S', 'N', 'P', '1', 0, 0, 0};
}

void write_snapshot_binary(std::ostream& os, const WaveFunction& u) {
  os.write(kMagic, sizeof kMagic);
  const std::int32_t space = u.space == Space::Free ? 0 : 1;
  const std::int32_t nr = u.grid.nr, nt = u.grid.ntheta;
  os.write(reinterpret_cast<const char*>(&space), sizeof space);
  os.write(reinterpret_cast<const char*>(&nr), sizeof nr);
  os.write(reinterpret_cast<const char*>(&nt), sizeof nt);
  os.write(reinterpret_cast<const char*>(&u.grid.r0), sizeof(double));
  os.write(reinterpret_cast<const char*>(&u.grid.dr), sizeof(double));
  os.write(reinterpret_cast<const char*>(u.data.data()), static_cast<std::streamsize>(u.data.size() * sizeof(cplx)));
}

WaveFunction read_snapshot_binary(std::istream& is) {
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof magic) != 0) throw ConfigError("snapshot: bad magic");
  std::int32_t space = 0, nr = 0, nt = 0;
  PolarGrid G;
  is.read(reinterpret_cast<char*>(&space), sizeof space);
  is.read(reinterpret_cast<char*>(&nr), sizeof nr);
  is.read(reinterpret_cast<char*>(&nt), sizeof nt);
  is.read(reinterpret_cast<char*>(&G.r0), sizeof(double));
  is.read(reinterpret_cast<char*>(&G.dr), sizeof(double));
  G.nr = nr;
  G.ntheta = nt;
  if (!is || nr < 1 || nt < 1) throw ConfigError("snapshot: bad header");
  WaveFunction u(space == 0 ? Space::Free : Space::Curved, G);
  is.read(reinterpret_cast<char*>(u.data.data()), static_cast<std::streamsize>(u.data.size() * sizeof(cplx)));
  if (!is) throw ConfigError("snapshot: truncated data");
  return u;
}

}  // namespace conic
