#include "conic/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "conic/errors.hpp"

namespace conic {

Jet AngularProfile::eval(const Jet& theta) const {
  if (amplitude == 0.0) return Jet::constant(offset);
  return offset + amplitude * cos(static_cast<double>(harmonic) * theta - phase);
}

double AngularProfile::operator()(double theta) const {
  return offset + amplitude * std::cos(harmonic * theta - phase);
}

Jet RadialProfile::eval(const Jet& r) const {
  switch (shape) {
    case RadialShape::Power:
      return pow(r, -exponent);
    case RadialShape::PowerSinLog:
      return pow(r, -exponent) * sin(log(r));
    case RadialShape::Ring: {
      const Jet d = r - center;
      return exp(-(d * d) / (2.0 * width * width));
    }
  }
  return Jet::constant(0.0);
}

Jet PerturbationTerm::jet(double r, double theta) const {
  return amplitude * radial.eval(Jet::r_var(r)) * angular.eval(Jet::theta_var(theta));
}

Jet Potential::jet(double r, double theta) const {
  if (amplitude == 0.0) return Jet::constant(0.0);
  return amplitude * pow(Jet::r_var(r), 2.0 - decay_mu3) * angular.eval(Jet::theta_var(theta));
}

double Potential::value(double r, double theta) const {
  if (amplitude == 0.0) return 0.0;
  return amplitude * std::pow(r, 2.0 - decay_mu3) * angular(theta);
}

ScatteringMetric::ScatteringMetric(std::string name, BoundaryMetric boundary, double r_conic,
                                   std::vector<PerturbationTerm> perturbations, double mu)
    : name_(std::move(name)),
      boundary_(boundary),
      r_conic_(r_conic),
      perturbations_(std::move(perturbations)),
      mu_(mu) {
  if (!(mu_ > 0.0 && mu_ < 1.0)) throw ConfigError("metric '" + name_ + "': mu must lie in (0,1)");
  if (boundary_.shape.offset <= std::abs(boundary_.shape.amplitude))
    throw MetricValidityError("metric '" + name_ + "': boundary metric h is not positive");
  for (const auto& term : perturbations_) {
    if (term.order < 0 || term.order > 2)
      throw ConfigError("metric '" + name_ + "': perturbation order must be 0, 1 or 2");
    const double floor = term.order == 0 ? 1.0 : term.order == 1 ? 0.5 : 0.0;
    if (!(term.decay_mu > floor))
      throw ConfigError("metric '" + name_ + "': perturbation of order " + std::to_string(term.order) +
                        " is not short-range (decay exponent too small)");
  }
}

bool ScatteringMetric::is_rotationally_symmetric() const {
  if (!boundary_.shape.is_constant()) return false;
  return std::all_of(perturbations_.begin(), perturbations_.end(),
                     [](const PerturbationTerm& t) { return t.angular.is_constant(); });
}

void ScatteringMetric::check_domain(double r) const {
  if (!(r > 1.0)) throw DomainError("point outside the end chart: r = " + std::to_string(r));
}

Jet ScatteringMetric::perturbation_jet(int order, double r, double theta) const {
  Jet sum = Jet::constant(0.0);
  for (const auto& term : perturbations_)
    if (term.order == order) sum = sum + term.jet(r, theta);
  return sum;
}

Eigen::Matrix2d ScatteringMetric::metric_matrix(double r, double theta) const {
  check_domain(r);
  const double m0 = perturbation_jet(0, r, theta).v;
  const double m1 = perturbation_jet(1, r, theta).v;
  const double m2 = perturbation_jet(2, r, theta).v;
  Eigen::Matrix2d g;
  g(0, 0) = 1.0 + m0;
  g(0, 1) = g(1, 0) = r * m1;
  g(1, 1) = r * r * (boundary_.h(theta) + m2);
  if (!(g(0, 0) > 0.0) || !(g.determinant() > 0.0))
    throw MetricValidityError("metric '" + name_ + "' is not positive definite at r = " + std::to_string(r) +
                              ", theta = " + std::to_string(theta));
  return g;
}

InverseMetricJet ScatteringMetric::inverse_jet(double r, double theta) const {
  check_domain(r);
  const Jet rj = Jet::r_var(r);
  const Jet m0 = perturbation_jet(0, r, theta);
  const Jet m1 = perturbation_jet(1, r, theta);
  const Jet m2 = perturbation_jet(2, r, theta);
  const Jet h = boundary_.h_jet(theta);
  const Jet grr = 1.0 + m0;
  const Jet grt = rj * m1;
  const Jet gtt = rj * rj * (h + m2);
  const Jet det = grr * gtt - grt * grt;
  if (!(grr.v > 0.0) || !(det.v > 0.0))
    throw MetricValidityError("metric '" + name_ + "' is singular at r = " + std::to_string(r));
  const Jet inv = reciprocal(det);
  return {gtt * inv, -grt * inv, grr * inv};
}

SymbolCoeffs ScatteringMetric::inverse_symbol_coeffs(double r, double theta) const {
  check_domain(r);
  const double m0 = perturbation_jet(0, r, theta).v;
  const double m1 = perturbation_jet(1, r, theta).v;
  const double m2 = perturbation_jet(2, r, theta).v;
  const double h = boundary_.h(theta);
  const double grr = 1.0 + m0;
  const double gtt = r * r * (h + m2);
  const double det = grr * gtt - r * r * m1 * m1;
  if (!(grr > 0.0) || !(det > 0.0))
    throw MetricValidityError("metric '" + name_ + "' is singular at r = " + std::to_string(r));
  // Written so that the conic case gives exact zeros.
  SymbolCoeffs c;
  c.a0 = (r * r * m1 * m1 - gtt * m0) / det;
  c.a1 = -2.0 * r * r * m1 / det;
  c.a2 = r * r * (m1 * m1 - grr * m2) / (det * h);
  return c;
}

double ScatteringMetric::symbol_p(const PhasePoint& z) const {
  const InverseMetricJet g = inverse_jet(z.r, z.theta);
  return g.grr.v * z.rho * z.rho + 2.0 * g.grt.v * z.rho * z.omega + g.gtt.v * z.omega * z.omega;
}

SymbolDerivatives ScatteringMetric::symbol_derivatives(const PhasePoint& z) const {
  const InverseMetricJet g = inverse_jet(z.r, z.theta);
  const double rr = z.rho * z.rho, ro = z.rho * z.omega, oo = z.omega * z.omega;
  SymbolDerivatives d;
  d.p = g.grr.v * rr + 2.0 * g.grt.v * ro + g.gtt.v * oo;
  d.grad(0) = g.grr.dr * rr + 2.0 * g.grt.dr * ro + g.gtt.dr * oo;
  d.grad(1) = g.grr.dt * rr + 2.0 * g.grt.dt * ro + g.gtt.dt * oo;
  d.grad(2) = 2.0 * (g.grr.v * z.rho + g.grt.v * z.omega);
  d.grad(3) = 2.0 * (g.grt.v * z.rho + g.gtt.v * z.omega);

  auto& H = d.hess;
  H(0, 0) = g.grr.drr * rr + 2.0 * g.grt.drr * ro + g.gtt.drr * oo;
  H(0, 1) = g.grr.drt * rr + 2.0 * g.grt.drt * ro + g.gtt.drt * oo;
  H(1, 1) = g.grr.dtt * rr + 2.0 * g.grt.dtt * ro + g.gtt.dtt * oo;
  H(0, 2) = 2.0 * (g.grr.dr * z.rho + g.grt.dr * z.omega);
  H(0, 3) = 2.0 * (g.grt.dr * z.rho + g.gtt.dr * z.omega);
  H(1, 2) = 2.0 * (g.grr.dt * z.rho + g.grt.dt * z.omega);
  H(1, 3) = 2.0 * (g.grt.dt * z.rho + g.gtt.dt * z.omega);
  H(2, 2) = 2.0 * g.grr.v;
  H(2, 3) = 2.0 * g.grt.v;
  H(3, 3) = 2.0 * g.gtt.v;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < i; ++j) H(i, j) = H(j, i);
  return d;
}

double ScatteringMetric::sqrt_det(double r, double theta) const {
  return std::sqrt(metric_matrix(r, theta).determinant());
}

double trap_ring_amplitude(double r_star, double ring_center, double ring_width) {
  const double d = r_star - ring_center;
  const double b = std::exp(-d * d / (2.0 * ring_width * ring_width));
  const double db = -d / (ring_width * ring_width) * b;
  const double denom = 2.0 * r_star * b + r_star * r_star * db;
  if (denom == 0.0) throw ConfigError("trap: ring placement admits no circular geodesic at r_star");
  return -2.0 * r_star / denom;
}

bool DecayReport::passed() const {
  return std::none_of(slopes.begin(), slopes.end(), [](const DecaySlope& s) { return s.flagged; });
}

DecayGrid DecayGrid::standard(double r_lo, double r_hi, int n_r, int n_theta) {
  DecayGrid g;
  const double q = std::log(r_hi / r_lo) / std::max(1, n_r - 1);
  for (int i = 0; i < n_r; ++i) g.radii.push_back(r_lo * std::exp(q * i));
  for (int j = 0; j < n_theta; ++j) g.angles.push_back(kTwoPi * j / n_theta);
  return g;
}

DecayReport validate_decay(const PerturbationTerm& term, int k_max, const DecayGrid& grid) {
  if (k_max < 0 || k_max > 4)
    throw ResolutionError("validate_decay: derivative order above 4 is not resolved with step r/100");
  if (grid.radii.size() < 5 || grid.angles.empty())
    throw ResolutionError("validate_decay: need at least 5 radii and one angle");
  const auto [lo, hi] = std::minmax_element(grid.radii.begin(), grid.radii.end());
  if (*hi / *lo < 10.0) throw ResolutionError("validate_decay: radial sample spans less than a decade");

  DecayReport report;
  report.decay_mu = term.decay_mu;
  for (int k = 0; k <= k_max; ++k) {
    std::vector<double> xs, ys;
    for (double r : grid.radii) {
      double sup = 0.0;
      for (double th : grid.angles) {
        auto f = [&](double s) { return term.value(s, th); };
        sup = std::max(sup, std::abs(central_difference(f, r, r / 100.0, k)));
      }
      if (sup > 0.0) {
        xs.push_back(std::log(r));
        ys.push_back(std::log(sup));
      }
    }
    DecaySlope s;
    s.k = k;
    s.expected = -term.decay_mu - k;
    if (xs.size() < 3) {
      s.slope = -std::numeric_limits<double>::infinity();
    } else {
      const double n = static_cast<double>(xs.size());
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
      }
      s.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    }
    s.flagged = s.slope > s.expected + 0.1;
    report.slopes.push_back(s);
  }
  return report;
}

namespace {

ParamTable merged(const std::string& name, const ParamTable& defaults, const ParamTable& given) {
  ParamTable out = defaults;
  for (const auto& [k, v] : given) {
    if (!defaults.count(k)) throw ConfigError("metric '" + name + "': unknown parameter '" + k + "'");
    out[k] = v;
  }
  return out;
}

PerturbationTerm power_term(int order, double amp, double exponent, AngularProfile ang, double decay) {
  PerturbationTerm t;
  t.order = order;
  t.amplitude = amp;
  t.radial.shape = RadialShape::Power;
  t.radial.exponent = exponent;
  t.angular = ang;
  t.decay_mu = decay;
  return t;
}

AngularProfile cosine(double c0, double c1, double phase = 0.0) {
  AngularProfile a;
  a.offset = c0;
  a.amplitude = c1;
  a.phase = phase;
  return a;
}

}  // namespace

const std::vector<ZooEntry>& builtin_metrics() {
  static const std::vector<ZooEntry> zoo = {
      {"flat", "Euclidean plane in polar form, dr^2 + r^2 dtheta^2", {}},
      {"bump", "m2 = epsilon r^-mu (phi0 + phi1 cos theta)",
       {{"epsilon", 0.1}, {"mu", 0.5}, {"phi0", 0.0}, {"phi1", 1.0}}},
      {"radial", "m0 = epsilon r^(-1-mu)", {{"epsilon", 0.1}, {"mu", 0.5}}},
      {"potential", "flat metric, V = c r^(2-mu3) (chi0 + chi1 cos theta)",
       {{"c", 1.0}, {"mu3", 2.5}, {"chi0", 1.0}, {"chi1", 0.0}, {"mu", 0.5}}},
      {"composite",
       "m0 = eps r^(-1-mu)(1 + cos(theta)/4), m1 = eps1 r^(-(1+mu)/2)(1 + sin(theta)/4), m2 = eps r^-mu cos theta",
       {{"epsilon", 0.1}, {"epsilon1", 0.15}, {"mu", 0.5}}},
      {"composite-sym", "m0 = eps r^(-1-mu), m2 = eps r^-mu (no angular dependence)",
       {{"epsilon", 0.1}, {"mu", 0.5}}},
      {"trap", "m2 = eps exp(-(r-c)^2/(2w^2)) with eps placing a stable circular geodesic at r_star",
       {{"r_star", 10.0}, {"ring_center", 11.0}, {"ring_width", 1.0}, {"mu", 0.5}}},
  };
  return zoo;
}

Model make_builtin_model(const std::string& name, const ParamTable& params) {
  const auto& zoo = builtin_metrics();
  const auto it = std::find_if(zoo.begin(), zoo.end(), [&](const ZooEntry& e) { return e.name == name; });
  if (it == zoo.end()) throw ConfigError("unknown metric '" + name + "' (see list-metrics)");
  const ParamTable p = merged(name, it->defaults, params);
  const auto get = [&](const char* k) { return p.at(k); };

  BoundaryMetric boundary;
  Model model;
  if (name == "flat") {
    model.metric = ScatteringMetric(name, boundary, 1.0, {}, 0.5);
  } else if (name == "bump") {
    const double mu = get("mu");
    model.metric = ScatteringMetric(name, boundary, 1.0,
                                    {power_term(2, get("epsilon"), mu, cosine(get("phi0"), get("phi1")), mu)}, mu);
  } else if (name == "radial") {
    const double mu = get("mu");
    model.metric = ScatteringMetric(name, boundary, 1.0,
                                    {power_term(0, get("epsilon"), 1.0 + mu, cosine(1.0, 0.0), 1.0 + mu)}, mu);
  } else if (name == "potential") {
    model.metric = ScatteringMetric(name, boundary, 1.0, {}, get("mu"));
    model.potential.amplitude = get("c");
    model.potential.decay_mu3 = get("mu3");
    model.potential.angular = cosine(get("chi0"), get("chi1"));
    if (!(model.potential.decay_mu3 > 1.0)) throw ConfigError("potential: mu3 must exceed 1");
  } else if (name == "composite" || name == "composite-sym") {
    const double eps = get("epsilon"), mu = get("mu");
    const bool sym = name == "composite-sym";
    std::vector<PerturbationTerm> terms;
    terms.push_back(power_term(0, eps, 1.0 + mu, sym ? cosine(1.0, 0.0) : cosine(1.0, 0.25), 1.0 + mu));
    if (!sym)
      terms.push_back(
          power_term(1, get("epsilon1"), 0.5 * (1.0 + mu), cosine(1.0, 0.25, kTwoPi / 4.0), 0.5 * (1.0 + mu)));
    terms.push_back(power_term(2, eps, mu, sym ? cosine(1.0, 0.0) : cosine(0.0, 1.0), mu));
    model.metric = ScatteringMetric(name, boundary, 1.0, std::move(terms), mu);
  } else if (name == "trap") {
    PerturbationTerm ring;
    ring.order = 2;
    ring.radial.shape = RadialShape::Ring;
    ring.radial.center = get("ring_center");
    ring.radial.width = get("ring_width");
    ring.amplitude = trap_ring_amplitude(get("r_star"), ring.radial.center, ring.radial.width);
    ring.angular = cosine(1.0, 0.0);
    ring.decay_mu = 2.0;
    model.metric = ScatteringMetric(name, boundary, 1.0, {ring}, get("mu"));
  }
  return model;
}

}  // namespace conic
