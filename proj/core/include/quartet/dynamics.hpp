#pragma once

// Ten-level Lindblad dynamics: coherent optical drive in the rotating frame,
// radiative decay, intersystem crossing through two metastable doublets,
// drive-dependent deshelling of the upper doublet, and an incoherent
// off-resonant (730 nm) pump.
//
// Conventions:
//  - Hamiltonians in MHz, time in microseconds, commutator -i 2 pi [H, rho].
//  - Decay rates in 1/us (numerically equal to MHz, no 2 pi factor).
//  - The photoluminescence observable is
//      pl_rate = efficiency * gamma_r * (sum of excited populations) + dark,
//    dark counts never enter the master equation.

#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "quartet/basis.hpp"
#include "quartet/spincore.hpp"

namespace quartet::dynamics {

// Thrown when an iterative or linear-algebra step cannot produce a valid
// result (singular steady-state system, non-finite propagation, ...).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Decay and conversion rates, all in 1/us.
//  gamma_r   radiative e -> g, spin conserving, per sublevel
//  gamma_1   e,+-1/2 -> MS1        gamma_1p  e,+-1/2 -> MS2
//  gamma_2   e,+-3/2 -> MS1        gamma_2p  e,+-3/2 -> MS2
//  gamma_3   MS1 -> g,+-1/2        gamma_4   MS1 -> g,+-3/2
//  gamma_3p0 MS2 -> g,+-1/2 and gamma_4p0 MS2 -> g,+-3/2 without drive;
//  under drive the deshelling law adds beta * mean Rabi * saturation factor.
// MS -> ground rates split half per target sublevel.
struct RateSet {
  double gamma_r = 0.0;
  double gamma_1 = 0.0;
  double gamma_1p = 0.0;
  double gamma_2 = 0.0;
  double gamma_2p = 0.0;
  double gamma_3 = 0.0;
  double gamma_4 = 0.0;
  double gamma_3p0 = 0.0;
  double gamma_4p0 = 0.0;
  double beta = 0.0;  // deshelling efficiency, in [0, 1]

  // Total decay rate of one excited +-1/2 (resp. +-3/2) sublevel.
  double big_gamma_1() const { return gamma_r + gamma_1 + gamma_1p; }
  double big_gamma_2() const { return gamma_r + gamma_2 + gamma_2p; }

  // Throws std::invalid_argument naming the offending rate.
  void validate() const;
};

// Lasers acting during one time segment. Rabi amplitudes and rates in MHz.
// resonant_* are coherent couplings; incoherent_* are two-way per-sublevel
// pump rates on the same transitions (rate-equation-style driving);
// offres_pump is the spin-conserving 730 nm pump rate.
//
// Deshelling of MS2 uses the law above with Omega_i = resonant_rabi_i +
// incoherent_rabi_i. When the off-resonant pump runs, offres_gamma_3p/4p
// override the MS2 -> ground rates (fitted values from the pump tables); if
// they are unset the same law is applied with offres_pump as the drive.
struct DriveState {
  double resonant_rabi_a1 = 0.0;
  double resonant_rabi_a2 = 0.0;
  double detuning_a1 = 0.0;
  double detuning_a2 = 0.0;
  double offres_pump = 0.0;
  double incoherent_rabi_a1 = 0.0;
  double incoherent_rabi_a2 = 0.0;
  std::optional<double> offres_gamma_3p;
  std::optional<double> offres_gamma_4p;

  void validate() const;
  bool any_coherent() const {
    return resonant_rabi_a1 > 0.0 || resonant_rabi_a2 > 0.0;
  }
};

struct SolverOptions {
  enum class Method { exact, rk4 };
  Method method = Method::exact;
  double dt_max = 0.0;  // us; 0 = automatic step bound (rk4 only)
};

// Full model: both manifold Hamiltonians (strain included), rates, and the
// detection parameters.
struct ModelConfig {
  spincore::ManifoldHamiltonian h_ground;
  spincore::ManifoldHamiltonian h_excited;
  RateSet rates;
  double efficiency = 1.0;    // detection efficiency, in (0, 1]
  double dark_rate_hz = 0.0;  // detector dark counts, Hz
  SolverOptions solver;

  void validate() const;
};

// Density matrix in the global 10-level basis.
struct DensityMatrix {
  Mat10 m = Mat10::Zero();

  // Hermiticity within 1e-10, unit trace within 1e-9, eigenvalues >= -1e-9.
  void validate() const;

  static DensityMatrix mixed_ground();      // diag(1/4,1/4,1/4,1/4,0,...)
  static DensityMatrix pure(int level);     // basis state projector
  double population(int level) const { return m(level, level).real(); }
  double excited_population() const;
  double ground_population() const;
};

// Effective MS2 -> ground rates (gamma_3p, gamma_4p) under resonant driving
// with the given per-transition Rabi amplitudes:
//   gamma_ip = gamma_ip0 + beta (O1+O2)/2 * (Oi + gamma_r)/(Oi + BigGamma_i).
std::pair<double, double> deshelling_rates(const RateSet& rates,
                                           double omega_a1, double omega_a2);

// One basis-aligned jump operator |to><from| applied at `rate`.
struct JumpOp {
  int from;
  int to;
  double rate;
};

// Complete dissipator for (config, drive): radiative decay, intersystem
// crossing, metastable deshelling, and the off-resonant pump. Stable order.
std::vector<JumpOp> jump_operators(const ModelConfig& config,
                                   const DriveState& drive);

// Rotating-frame 10x10 Hamiltonian for the segment. Frame policy: the frame
// follows the single coherently driven transition when there is one (exact);
// with both lasers on, each excited pair is recentered by its own laser
// (approximation: distorts excited-manifold strain mixing at the percent
// level; no shipped experiment drives both pairs in one segment); with no
// coherent drive the A1 frame is used, which leaves populations and PL
// unaffected.
Mat10 total_hamiltonian(const ModelConfig& config, const DriveState& drive);

// d rho / dt in 1/us: -i 2 pi [H, rho] + sum_k D[A_k] rho.
Mat10 lindblad_rhs(const Mat10& rho, const ModelConfig& config,
                   const DriveState& drive);

namespace detail {
// RHS with the segment-constant pieces precomputed; what lindblad_rhs and
// the propagators share.
Mat10 apply_generator(const Mat10& h, const std::vector<JumpOp>& ops,
                      const Mat10& rho);
}  // namespace detail

// Fixed-step RK4 propagation with dt = min(dt_max, 0.05/Gamma_max,
// 0.05/(2 pi f_max)). Does not renormalize the trace. dt_max <= 0 means
// automatic only.
DensityMatrix propagate(const DensityMatrix& rho0, const ModelConfig& config,
                        const DriveState& drive, double duration_us,
                        double dt_max_us = 0.0);

// Detected photoluminescence rate in counts/us.
double pl_rate(const DensityMatrix& rho, const ModelConfig& config);
double pl_rate(const Mat10& rho, const ModelConfig& config);

// Automatic RK4 step bound for the segment.
double rk4_step_bound(const ModelConfig& config, const DriveState& drive);

}  // namespace quartet::dynamics
