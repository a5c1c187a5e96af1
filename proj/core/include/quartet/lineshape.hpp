#pragma once

// Fermi-golden-rule intersystem-crossing rates from a spin-orbit matrix
// element and a vibrational overlap function A(E), computed with the
// generating-function method from a user-supplied phonon mode table.
//
// Conventions: energies in meV throughout, rates in MHz, temperature 0 K
// (emission-only generating function; thermal occupation of optical phonons
// is negligible in the few-kelvin regime this targets).
//
// The mode table carries Gaussian-broadened partial couplings
//   S(E) = sum_k s_k N(E; omega_k, sigma_k).
// Its Fourier transform is analytic,
//   S~(t) = sum_k s_k exp(+i omega_k t - sigma_k^2 t^2 / 2),
// so the time-domain generating function G(t) = exp(S~(t) - S~(0)) e^{-eta|t|}
// is sampled exactly and only the final transform back to energy is numeric
// (one FFT). A trapezoid half-weight at t = 0 makes the discrete normalization
// sum_m A(E_m) dE = 1 an algebraic identity of the DFT, so the normalization
// invariant holds to the time-truncation error e^{-eta T}.

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace quartet::lineshape {

struct PhononMode {
  double omega_mev = 0.0;  // mode energy, > 0
  double sigma_mev = 2.0;  // Gaussian broadening of the spectral density, > 0
  double s_k = 0.0;        // partial Huang-Rhys factor, >= 0
};

struct PhononData {
  std::vector<PhononMode> modes;

  void validate() const;
  double total_hr() const;  // sum of s_k
};

// Bundled synthetic mode set for tests and demos (the physical mode data
// comes from external phonon calculations and is supplied by the user).
PhononData synthetic_modes();

// Partial Huang-Rhys factors from a relaxation displacement.
//
// displacement: 3N Cartesian displacement between the two electronic
//   states' equilibrium geometries, in angstrom, atom-major (x,y,z per atom).
// masses_amu:   N atomic masses.
// mode_vectors: one 3N vector per mode, orthonormal in mass-weighted
//   coordinates.
// omegas_mev:   mode energies.
//
// q_k = sum_i sqrt(m_atom(i)) dR_i e_k,i  (amu^1/2 angstrom), and
// s_k = q_k^2 omega_k / (2 hbar) with the unit constant folded in.
std::vector<double> partial_hr_factors(
    const Eigen::VectorXd& displacement_angstrom,
    const std::vector<double>& masses_amu,
    const std::vector<Eigen::VectorXd>& mode_vectors,
    const std::vector<double>& omegas_mev);

// (1 amu angstrom^2 meV) / (2 hbar^2), the dimensionless factor in
// s_k = hr_unit() * q_k^2 [amu angstrom^2] * omega_k [meV].
double hr_unit();

// Gaussian-broadened spectral density sampled on an energy grid.
// If the grid fails to cover every mode +-5 sigma, a warning is appended
// (the integral check in the caller would silently lose weight otherwise).
std::vector<double> spectral_density(const PhononData& modes,
                                     const std::vector<double>& grid_mev,
                                     std::vector<std::string>* warnings = nullptr);

struct OverlapFunction {
  std::vector<double> energies;  // meV, uniform ascending grid
  std::vector<double> a;         // 1/meV
  double eta_mev = 1.0;

  // Linear interpolation; throws std::out_of_range outside the grid.
  double value_at(double energy_mev) const;
  // Riemann integrals over the stored grid (normalization / first moment).
  double integral() const;
  double first_moment() const;
};

struct FftOptions {
  // 0 = derive from eta and the mode table. Overrides are validated:
  // a time step violating Nyquist for the multi-phonon extent throws.
  double t_window = 0.0;  // 1/meV
  int n_time = 0;         // samples; rounded up to a power of two
};

// Vibrational overlap function A(E) = (1/2pi) int dt G(t) e^{-iEt}.
// eta_mev > 0 is the homogeneous (Lorentzian) broadening.
OverlapFunction overlap_function(const PhononData& modes, double eta_mev,
                                 const FftOptions& options = {});

// Gamma_ISC = (2 pi / hbar) lambda^2 A(Delta), converted to MHz.
double isc_rate_mhz(double lambda_soc_mev, double delta_if_mev,
                    const OverlapFunction& overlap);

}  // namespace quartet::lineshape
