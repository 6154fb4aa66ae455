#pragma once

// Hamiltonian flow of the kinetic symbol p on T*M_infinity, the backward
// scattering data and the Jacobian of the sheared flow.

#include <Eigen/Dense>

#include <array>
#include <string>
#include <vector>

#include "conic/geometry.hpp"

namespace conic {

// Point of T*M_free = T*(R x S^1); r may be any real.
struct FreePhasePoint {
  double r = 0.0;
  double theta = 0.0;
  double rho = 0.0;
  double omega = 0.0;
};

struct FlowOptions {
  double tol = 1e-10;
  bool include_potential = false;  // add -grad V to the momentum equations
  double chart_margin = 1.05;
};

Eigen::Vector4d hamilton_rhs(const ScatteringMetric& g, const Potential& V, const PhasePoint& z,
                             const FlowOptions& opt = {});

// Linearisation of hamilton_rhs in (r, theta, rho, omega).
Eigen::Matrix4d hamilton_jacobian(const ScatteringMetric& g, const Potential& V, const PhasePoint& z,
                                  const FlowOptions& opt = {});

// d^2(r^2)/dt^2 along the kinetic flow, evaluated from the vector field.
double radial_virial(const ScatteringMetric& g, const PhasePoint& z);

struct TrajectorySample {
  double t = 0.0;
  PhasePoint z;
  double p_rel_drift = 0.0;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;  // time-decreasing
  double p0 = 0.0;
  double energy_drift = 0.0;              // max |p - p0| / p0 over accepted steps
  double t_end = 0.0;                     // last time reached
  bool chart_exit = false;
  long winding = 0;                       // floor(theta(t_end) / 2 pi)
};

// Backward integration to t_end < 0. With empty sample_times every accepted
// step is recorded; otherwise the dense output is sampled at those times.
Trajectory integrate_flow(const ScatteringMetric& g, const Potential& V, const PhasePoint& start, double t_end,
                          const FlowOptions& opt = {}, const std::vector<double>& sample_times = {});

enum class TrappingStatus { Nontrapped, Trapped, Undecided };
std::string to_string(TrappingStatus s);

struct TrappingVerdict {
  TrappingStatus status = TrappingStatus::Undecided;
  double escape_time = 0.0;  // NaN unless nontrapped
  double c_fit = 0.0;        // smallest C with r > |t|/C - C on the samples
  double virial_min = 0.0;   // min of d^2(r^2)/dt^2 on the tail
  std::string reason;
};

TrappingVerdict detect_nontrapping(const ScatteringMetric& g, const Potential& V, const PhasePoint& start,
                                   double t_max = 1e4, double r_esc = 1e3, const FlowOptions& opt = {});

FreePhasePoint comparison_flow(const FreePhasePoint& z, double t);

// (r(t) - 2 t rho(t), theta(t), rho(t), omega(t)); throws ChartExitError.
FreePhasePoint scattering_map_S_t(const ScatteringMetric& g, const Potential& V, const PhasePoint& start, double t,
                                  const FlowOptions& opt = {});

// Ladder t_k = -t0 2^k. Each component is fitted on the last fit_points ladder
// entries whose increments stay above 10 * flow.tol.
struct ScatteringOptions {
  FlowOptions flow{1e-13, false, 1.05};
  double t0 = 16.0;
  int min_doublings = 8;
  int max_doublings = 20;
  std::size_t fit_points = 9;
};

struct LadderEntry {
  double t = 0.0;
  FreePhasePoint s;
};

struct ScatteringData {
  double r_minus = 0.0;
  double theta_minus = 0.0;  // unwrapped limit
  double rho_minus = 0.0;
  double omega_minus = 0.0;
  std::array<double, 4> err{};   // r, theta, rho, omega
  std::array<double, 4> beta{};  // NaN where the component is constant
  std::array<bool, 4> fallback{};
  double mu_used = 0.0;
  double p0 = 0.0;
  std::string status = "ok";     // ok | extrapolation-unreliable
  std::vector<LadderEntry> ladder;

  double theta_minus_mod() const;  // in [0, 2 pi)
  long winding() const;
  FreePhasePoint point() const { return {r_minus, theta_minus, rho_minus, omega_minus}; }
};

ScatteringData extract_scattering_data(const ScatteringMetric& g, const Potential& V, const PhasePoint& start,
                                       const ScatteringOptions& opt = {});

struct VariationalState {
  PhasePoint point;          // standard coordinates at time t
  FreePhasePoint sheared;    // (R, theta, rho, omega)
  Eigen::Matrix4d jacobian;  // d(R,theta,rho,omega)(t) / d(R,theta,rho,omega)(0)
};

VariationalState jacobian_S_t(const ScatteringMetric& g, const Potential& V, const PhasePoint& start, double t,
                              const FlowOptions& opt = {});

// Ladder of Jacobians for one start; entries match the requested times.
std::vector<VariationalState> jacobian_ladder(const ScatteringMetric& g, const Potential& V, const PhasePoint& start,
                                              const std::vector<double>& times, const FlowOptions& opt = {});

// Central-difference Jacobian of S_t with steps h in each coordinate.
Eigen::Matrix4d finite_difference_jacobian(const ScatteringMetric& g, const Potential& V, const PhasePoint& start,
                                           double t, double h = 1e-5, const FlowOptions& opt = {});

struct PhaseBox {
  PhasePoint lo;
  PhasePoint hi;
};

struct DiffeoEntry {
  double t = 0.0;
  double sup_norm = 0.0;  // sup over the window of ||J(t) - I||_2
  int failed_starts = 0;  // chart exits or integration failures
};

struct DiffeoReport {
  std::vector<DiffeoEntry> entries;
  int samples = 0;
  bool convergent = false;  // increments of sup ||J - I|| shrink along the ladder
  bool passed = false;
};

DiffeoReport check_local_diffeo(const ScatteringMetric& g, const Potential& V, const PhaseBox& window,
                                const std::vector<double>& t_ladder, int samples_per_axis = 3,
                                const FlowOptions& opt = {});

}  // namespace conic
