#pragma once

// Classical population-rate description of the same center: pair-summed
// populations (the +-m sublevels of each manifold share one variable), an
// explicit high-lying bath level MS3 reached from MS2 under optical driving,
// and the adiabatically reduced 4-level ground/metastable system.
//
// The deshelling mechanism: driving promotes MS2 population to MS3 at
// R = beta (Omega_1 + Omega_2); MS3 decays at BigGamma to each excited pair;
// from there ordinary emission and intersystem crossing proceed. Eliminating
// MS3 and the optically cycling levels yields the closed-form deshelling law
// used by the Lindblad model (dynamics::deshelling_rates).
//
// Omega_i here are incoherent excitation rates per transition. Where a
// coherent Rabi amplitude Omega_c needs comparing against this model, the
// adiabatically matched rate is W = (2 pi Omega_c)^2 / BigGamma_i; the
// identity mapping W = Omega_c is only quantitatively right near
// Omega_c ~ 4 MHz where the two coincide.

#include <array>

#include "quartet/basis.hpp"
#include "quartet/dynamics.hpp"

namespace quartet::ratemodel {

// Pair-summed populations. `spare` is reserved padding so the struct maps
// onto an 8-vector; it stays zero in all shipped dynamics.
struct PopulationVector {
  double g12 = 0.0;   // ground +-1/2
  double g32 = 0.0;   // ground +-3/2
  double e12 = 0.0;   // excited +-1/2
  double e32 = 0.0;   // excited +-3/2
  double ms1 = 0.0;
  double ms2 = 0.0;
  double ms3 = 0.0;
  double spare = 0.0;

  double sum() const { return g12 + g32 + e12 + e32 + ms1 + ms2 + ms3 + spare; }
  std::array<double, 8> as_array() const {
    return {g12, g32, e12, e32, ms1, ms2, ms3, spare};
  }
  static PopulationVector from_array(const std::array<double, 8>& a) {
    return {a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7]};
  }
  // Unit population sum within 1e-9 and nonnegative entries.
  void validate() const;

  static PopulationVector mixed_ground() { return {0.5, 0.5, 0, 0, 0, 0, 0, 0}; }
};

double default_big_gamma(const dynamics::RateSet& rates);  // 100 max(G1,G2)

// Full 7-level (pair-summed) rate equations with the MS3 bath included.
// omega_a1/a2 are incoherent excitation rates in 1/us. Population conserving.
PopulationVector full_rate_rhs(const PopulationVector& p,
                               const dynamics::RateSet& rates,
                               double omega_a1, double omega_a2,
                               double big_gamma);

// Quasi-steady MS3 population (R/(2 BigGamma)) p_ms2; valid for R << BigGamma
// (the regime the default BigGamma enforces).
double adiabatic_ms3(double p_ms2, const dynamics::RateSet& rates,
                     double omega_a1, double omega_a2, double big_gamma);

// Coefficients of the reduced 4-level system after eliminating MS3 and the
// optical cycles:
//   P_ai: ground -> MS1 pumping rate through the excited state
//   Pp_ai: ground -> MS2 pumping rate
//   kappa: MS2 -> MS1 through the bath
//   gamma_3p_eff / gamma_4p_eff: drive-dependent MS2 -> ground rates
struct ReducedParams {
  double p_a1 = 0.0;
  double p_a2 = 0.0;
  double pp_a1 = 0.0;
  double pp_a2 = 0.0;
  double kappa = 0.0;
  double gamma_3p_eff = 0.0;
  double gamma_4p_eff = 0.0;
};

ReducedParams reduced_params(const dynamics::RateSet& rates,
                             double omega_a1, double omega_a2);

// Reduced right-hand side; state order (ms2, ms1, g32, g12). Conserving.
std::array<double, 4> reduced_rhs(const std::array<double, 4>& p,
                                  const ReducedParams& rp,
                                  const dynamics::RateSet& rates);

// Single-drive closed-form approximation of the deshelling law
// (gamma_ip0 + beta Omega (Omega + gamma_r) / BigGamma_i, no Omega in the
// denominator); kept for comparison against the exact two-drive law, not
// used by the dynamics.
double eq3_approx(const dynamics::RateSet& rates, double omega,
                  Transition which = Transition::A1);

// 8x8 generator of the full rate equations acting on as_array() vectors;
// lets tests integrate the linear system exactly.
Eigen::Matrix<double, 8, 8> full_rate_matrix(const dynamics::RateSet& rates,
                                             double omega_a1, double omega_a2,
                                             double big_gamma);

}  // namespace quartet::ratemodel
