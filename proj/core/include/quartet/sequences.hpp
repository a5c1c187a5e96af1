#pragma once

// Pulse sequencing and the canonical experiment protocols: optical spin
// readout visibility, excited-state lifetimes, metastable relaxation,
// off-resonant repolarization, resonant spin depletion, and the emission
// change map versus the MS1 branching rates.
//
// Charge resets are idealized as instantaneous replacement by the fully
// mixed ground state. Probe windows integrate the detected PL over the full
// window (no gating) and include dark counts; probing is destructive, so
// protocols re-initialize before every probe.

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "quartet/dynamics.hpp"

namespace quartet::sequences {

// Laser-power anchor: a 20 nW resonant beam drives a 4.33 MHz Rabi
// frequency; amplitude scales with the square root of power.
inline constexpr double rabi_mhz_at_20nw = 4.33;
inline double rabi_from_power_nw(double power_nw) {
  return rabi_mhz_at_20nw * std::sqrt(power_nw / 20.0);
}

struct PulseSegment {
  double duration_us = 0.0;  // > 0
  dynamics::DriveState drive;
  bool record = false;  // sample PL while this segment runs
  std::string label;
};

enum class InitialState { thermal_ground, custom };

struct PulseSequence {
  std::vector<PulseSegment> segments;
  InitialState initial = InitialState::thermal_ground;
  dynamics::DensityMatrix custom_initial;  // used when initial == custom
  double sample_dt_us = 0.01;

  void validate() const;
};

struct Trace {
  std::vector<double> time_us;  // strictly increasing
  std::vector<double> pl;       // counts/us, >= 0
  std::vector<double> sigma;    // empty, or one entry per sample
  std::string label;
  std::map<std::string, double> meta;
  dynamics::DensityMatrix final_state;

  void validate() const;
};

// Runs the segments in order; recorded segments contribute samples on a
// uniform grid (left edge included, right edge carried into the next
// segment) with the exact solver, or RK4 when configured.
Trace run_sequence(const PulseSequence& seq, const dynamics::ModelConfig& config);

// Ground-state spin populations (p_half, p_three_half) normalized within the
// ground manifold, computational basis.
std::pair<double, double> polarization(const dynamics::DensityMatrix& rho);

struct VisibilityOptions {
  double pump_us = 80.0;
  double probe_us = 0.3;
  double pump_rabi = rabi_mhz_at_20nw;
  double probe_rabi = rabi_mhz_at_20nw;
};

// Polarize by pumping one transition, then measure raw integrated PL of an
// A1 probe and (after identical re-initialization) an A2 probe.
//   v                = |PL_A2 - PL_A1| / (PL_A2 + PL_A1)        raw
//   v_dark_corrected = |PL_A2 - PL_A1| / (PL_A2 + PL_A1 - 2 D)  D = dark
// p_12/p_32 are the spin populations the contrast implies
// ((1+v)/2 for the unpumped pair); the physically simulated pre-probe
// populations are reported alongside.
struct VisibilityResult {
  double v = 0.0;
  double p_12 = 0.0;
  double p_32 = 0.0;
  double v_dark_corrected = 0.0;
  double pl_a1 = 0.0;        // integrated counts over the probe window
  double pl_a2 = 0.0;
  double pl_dark = 0.0;      // dark integral over one window
  double phys_p_12 = 0.0;    // pre-probe ground-state populations
  double phys_p_32 = 0.0;
};

VisibilityResult visibility_experiment(const dynamics::ModelConfig& config,
                                       Transition pump,
                                       const VisibilityOptions& opts = {});

// Dark-count correction applied to a pair of integrated probe windows:
// |b - a| / (a + b - 2 dark), clamped to [0, 1]; 1 when the corrected
// denominator is not positive. visibility_experiment uses exactly this.
double dark_corrected_visibility(double pl_a, double pl_b, double pl_dark);

struct LifetimeOptions {
  double pulse_us = 0.001;
  double pulse_rabi = 250.0;  // strong short pulse, partial excitation
  double window_us = 0.0;     // 0 = seven lifetimes of the addressed pair
  int samples = 40;
};

struct LifetimeResult {
  Trace trace;
  double tau_us = 0.0;  // log-linear fit of the dark PL decay
};

// Short resonant pulse on the chosen pair, then dark PL decay. The excited
// pair decays as a single exponential at its total rate.
LifetimeResult lifetime_experiment(const dynamics::ModelConfig& config,
                                   Transition t,
                                   const LifetimeOptions& opts = {});

struct MetastableOptions {
  double probe_us = 0.3;
  double probe_rabi = rabi_mhz_at_20nw;
  double settle_us = 0.05;  // dark settle between pump end and first delay
};

struct MetastableDecayResult {
  Trace probe_a1;  // integrated probe PL (mean rate) vs delay
  Trace probe_a2;
  double tau_us = 0.0;  // exponential recovery constant of the A1 trace
};

// Pump to the illuminated steady state, wait a dark delay, probe each
// transition (separate re-initialized runs). The A1 recovery is a single
// exponential with the total MS1 leave rate whenever the intrinsic
// MS2 -> +-1/2 rate vanishes (it does in both shipped parameter sets).
MetastableDecayResult metastable_decay_experiment(
    const dynamics::ModelConfig& config, const dynamics::DriveState& pump,
    const std::vector<double>& delays_us, const MetastableOptions& opts = {});

struct RepolarizationOptions {
  double init_rabi = rabi_mhz_at_20nw;
  double init_us = 80.0;
  double settle_us = 2.0;
};

struct RepolarizationResult {
  Trace trace;            // instantaneous PL rate at each pump duration
  double p_12_final = 0.0;  // polarization after the longest duration
  double p_32_final = 0.0;
};

// Resonantly polarize (drive `init` empties its pair), then apply the
// off-resonant pump for each duration and record PL and final polarization.
RepolarizationResult repolarization_experiment(
    const dynamics::ModelConfig& config, Transition init,
    const dynamics::DriveState& offres_pump,
    const std::vector<double>& durations_us,
    const RepolarizationOptions& opts = {});

struct DepletionOptions {
  dynamics::DriveState init_pump;  // off-resonant initialization
  double dark_us = 2.0;
  double window_us = 40.0;
  int samples = 80;
};

// PL time trace of a resonant window at each drive amplitude, after
// off-resonant initialization and a dark interval.
std::vector<Trace> spin_depletion_experiment(const dynamics::ModelConfig& config,
                                             Transition t,
                                             const std::vector<double>& rabis_mhz,
                                             const DepletionOptions& opts);

enum class Excitation { a1, a2, off_resonant };

struct MapOptions {
  double window_us = 40.0;
  double resonant_rabi = rabi_mhz_at_20nw;
  double offres_rabi = 1.0;             // window drive for off_resonant
  double reference_gamma_3 = 3.81;
  double reference_gamma_4 = 0.24;
};

// Emitted photons integrated over one excitation window applied to the
// thermally mixed ground manifold, for the given MS1 branching rates;
// detector dark counts are excluded (the map predicts emission, not counts).
double windowed_emission(const dynamics::ModelConfig& base, double gamma_3,
                         double gamma_4, Excitation exc, const MapOptions& opts);

// Percent PL change relative to the reference branching rates, on a
// (gamma_3 x gamma_4) grid: entry (i, j) belongs to gamma_3s[i], gamma_4s[j].
Eigen::MatrixXd emission_change_map(const dynamics::ModelConfig& base,
                                    const std::vector<double>& gamma_3s,
                                    const std::vector<double>& gamma_4s,
                                    Excitation exc, const MapOptions& opts);

}  // namespace quartet::sequences
