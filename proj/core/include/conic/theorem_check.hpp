#pragma once

// End-to-end check of the WF correspondence
//
//   (x0, xi0) in WF(e^{-i t0 H} u0)  <=>  S_-(x0, xi0) in WF(e^{-i t0 H0} J* u0)
//
// on a radial test family. u0 = J e^{i t0 H0} F with F a band-limited jump
// (singular) or its mollified version (smooth control), constant in theta.
// Both sides are evolved on single-mode grids (rotationally symmetric
// models only) and replicated in theta for the ladder tests.

#include <cstdint>
#include <string>
#include <vector>

#include "conic/classical.hpp"
#include "conic/microlocal.hpp"
#include "conic/quantum.hpp"

namespace conic {

enum class InitialProfile { Singular, Smooth };

std::string to_string(InitialProfile p);
InitialProfile parse_initial_profile(const std::string& s);

struct JumpStateParams {
  double r_jump = 55.0;
  double cutoff_halfwidth = 24.0;  // F = step * bump((r - r_jump) / halfwidth)
  double mollifier = 12.0;         // smooth step length of the control
  double band = 52.0;              // |k| where the spectral filter starts
  double band_taper = 12.0;
  double sharpness = kDefaultSharpness;
};

struct TheoremCheckConfig {
  double t0 = 0.5;
  JumpStateParams state;

  double dr = 1.0 / 64.0;
  double r_inner = 1.05;
  int nr_curved = 10240;
  int free_pad = 4096;   // free grid starts free_pad nodes below r_inner
  int nr_free = 16384;
  int ntheta_test = 64;

  double dt = 0.05;
  double absorber_width = 0.1;
  double absorber_strength = 50.0;
  double seam_fraction = 0.05;

  TestConfig test;     // wf tests on both sides
  TestConfig rh_test;  // hypothesis of the smoothing check

  double rho0 = -0.5;
  int placements = 10;
  int aligned_every = 2;  // placements k with k % aligned_every == 0 sit on the jump
  double offset_min = 16.5;
  double offset_max = 19.0;

  ScatteringOptions scattering;
  int threads = 1;

  TheoremCheckConfig();
  PolarGrid curved_grid() const;
  PolarGrid free_grid() const;
  void validate() const;  // throws DomainError
};

// F on the free grid, band-limited to |k| < band + band_taper.
WaveFunction jump_profile(const PolarGrid& free_grid, const JumpStateParams& p, InitialProfile profile);

struct PreparedStates {
  InitialProfile profile = InitialProfile::Singular;
  WaveFunction u0;     // curved, single mode
  WaveFunction left;   // e^{-i t0 H} u0, replicated in theta
  WaveFunction right;  // e^{-i t0 H0} J* u0, replicated in theta
  double norm_u0 = 0.0;
  double norm_left = 0.0;
  double norm_right = 0.0;
  double lambda_max = 0.0;
};

PreparedStates prepare_states(const Model& model, InitialProfile profile, const TheoremCheckConfig& cfg);

WaveFunction replicate_theta(const WaveFunction& u, int ntheta);

struct Placement {
  PhasePoint point;
  double offset = 0.0;  // point.r - r_jump
  bool aligned = false;
};

std::vector<Placement> make_placements(const TheoremCheckConfig& cfg, std::uint64_t seed);

enum class Agreement { Agree, Inconclusive, Contradiction };

std::string to_string(Agreement a);
Agreement compare_verdicts(const WFVerdict& left, const WFVerdict& right);

struct PlacementResult {
  Placement placement;
  ScatteringData scattering;
  PhasePoint paired;  // (r_-, theta_- mod 2 pi, rho_-, omega_-)
  WFVerdict left;
  WFVerdict right;
  Agreement agreement = Agreement::Inconclusive;
};

struct TheoremCheckReport {
  std::string metric;
  InitialProfile profile = InitialProfile::Singular;
  double t0 = 0.0;
  std::uint64_t seed = 0;
  double norm_u0 = 0.0;
  double norm_left = 0.0;
  double norm_right = 0.0;
  double lambda_max = 0.0;
  std::vector<PlacementResult> results;
  int agreed = 0;
  int present_pairs = 0;
  int absent_pairs = 0;
  int inconclusive = 0;
  int contradictions = 0;

  std::string status() const;  // agree | inconclusive | contradiction
};

TheoremCheckReport theorem_check(const Model& model, const PreparedStates& states, const TheoremCheckConfig& cfg,
                                 std::uint64_t seed);

struct SmoothingReport {
  std::string metric;
  InitialProfile profile = InitialProfile::Smooth;
  PhasePoint point;     // (x0, xi0)
  ScatteringData scattering;
  PhasePoint rh_point;  // (-2 t0 rho_-, theta_-, rho_-, omega_-)
  WFVerdict hypothesis; // wf_rh_test on u0 at rh_point
  WFVerdict conclusion; // wf_test on e^{-i t0 H} u0 at point

  // confirmed | hypothesis-failed | violated | inconclusive
  std::string status() const;
};

SmoothingReport smoothing_check(const Model& model, const PreparedStates& states, const TheoremCheckConfig& cfg,
                                const PhasePoint& point);

}  // namespace conic
