#include "quartet/ratemodel.hpp"

#include <cmath>
#include <stdexcept>

namespace quartet::ratemodel {

void PopulationVector::validate() const {
  const auto a = as_array();
  double s = 0.0;
  for (double v : a) {
    if (!std::isfinite(v) || v < 0.0) {
      throw std::invalid_argument("populations must be finite and >= 0");
    }
    s += v;
  }
  if (std::abs(s - 1.0) > 1e-9) {
    throw std::invalid_argument("population sum must be 1 within 1e-9");
  }
}

double default_big_gamma(const dynamics::RateSet& rates) {
  return 100.0 * std::max(rates.big_gamma_1(), rates.big_gamma_2());
}

Eigen::Matrix<double, 8, 8> full_rate_matrix(const dynamics::RateSet& r,
                                             double omega_a1, double omega_a2,
                                             double big_gamma) {
  // State order matches PopulationVector::as_array():
  // (g12, g32, e12, e32, ms1, ms2, ms3, spare).
  enum { G12, G32, E12, E32, MS1, MS2, MS3, SPARE };
  const double rr = r.beta * (omega_a1 + omega_a2);  // MS2 -> MS3 rate

  Eigen::Matrix<double, 8, 8> m = Eigen::Matrix<double, 8, 8>::Zero();

  // Optical cycles: two-way incoherent pumping plus radiative return.
  m(E12, G12) += omega_a1;
  m(G12, G12) -= omega_a1;
  m(G12, E12) += omega_a1 + r.gamma_r;
  m(E32, G32) += omega_a2;
  m(G32, G32) -= omega_a2;
  m(G32, E32) += omega_a2 + r.gamma_r;

  // Intersystem crossing out of the excited pairs.
  m(MS1, E12) += r.gamma_1;
  m(MS2, E12) += r.gamma_1p;
  m(E12, E12) -= r.big_gamma_1() + omega_a1;
  m(MS1, E32) += r.gamma_2;
  m(MS2, E32) += r.gamma_2p;
  m(E32, E32) -= r.big_gamma_2() + omega_a2;

  // Metastable returns. MS2 loses to the bath at rr and to the ground
  // quartet at the intrinsic rates only; drive-induced deshelling emerges
  // from the MS3 recycling path.
  m(G12, MS1) += r.gamma_3;
  m(G32, MS1) += r.gamma_4;
  m(MS1, MS1) -= r.gamma_3 + r.gamma_4;
  m(G12, MS2) += r.gamma_3p0;
  m(G32, MS2) += r.gamma_4p0;
  m(MS3, MS2) += rr;
  m(MS2, MS2) -= r.gamma_3p0 + r.gamma_4p0 + rr;

  // Bath decays into each excited pair.
  m(E12, MS3) += big_gamma;
  m(E32, MS3) += big_gamma;
  m(MS3, MS3) -= 2.0 * big_gamma;

  return m;
}

PopulationVector full_rate_rhs(const PopulationVector& p,
                               const dynamics::RateSet& rates,
                               double omega_a1, double omega_a2,
                               double big_gamma) {
  const auto m = full_rate_matrix(rates, omega_a1, omega_a2, big_gamma);
  const auto a = p.as_array();
  Eigen::Matrix<double, 8, 1> x;
  for (int i = 0; i < 8; ++i) x(i) = a[i];
  Eigen::Matrix<double, 8, 1> d = m * x;
  std::array<double, 8> out;
  for (int i = 0; i < 8; ++i) out[i] = d(i);
  return PopulationVector::from_array(out);
}

double adiabatic_ms3(double p_ms2, const dynamics::RateSet& rates,
                     double omega_a1, double omega_a2, double big_gamma) {
  if (big_gamma <= 0.0) {
    throw std::invalid_argument("big_gamma must be > 0");
  }
  const double rr = rates.beta * (omega_a1 + omega_a2);
  return rr / (2.0 * big_gamma) * p_ms2;
}

ReducedParams reduced_params(const dynamics::RateSet& r,
                             double omega_a1, double omega_a2) {
  const double rr = r.beta * (omega_a1 + omega_a2);
  const double d1 = omega_a1 + r.big_gamma_1();
  const double d2 = omega_a2 + r.big_gamma_2();
  ReducedParams rp;
  rp.p_a1 = omega_a1 * r.gamma_1 / d1;
  rp.p_a2 = omega_a2 * r.gamma_2 / d2;
  rp.pp_a1 = omega_a1 * r.gamma_1p / d1;
  rp.pp_a2 = omega_a2 * r.gamma_2p / d2;
  rp.kappa = 0.5 * rr * (r.gamma_1 / d1 + r.gamma_2 / d2);
  rp.gamma_3p_eff = r.gamma_3p0 + 0.5 * rr * (omega_a1 + r.gamma_r) / d1;
  rp.gamma_4p_eff = r.gamma_4p0 + 0.5 * rr * (omega_a2 + r.gamma_r) / d2;
  return rp;
}

std::array<double, 4> reduced_rhs(const std::array<double, 4>& p,
                                  const ReducedParams& rp,
                                  const dynamics::RateSet& rates) {
  const double ms2 = p[0], ms1 = p[1], g32 = p[2], g12 = p[3];
  std::array<double, 4> d{};
  d[0] = -(rp.gamma_3p_eff + rp.gamma_4p_eff + rp.kappa) * ms2 +
         rp.pp_a1 * g12 + rp.pp_a2 * g32;
  d[1] = rp.kappa * ms2 + rp.p_a1 * g12 + rp.p_a2 * g32 -
         (rates.gamma_3 + rates.gamma_4) * ms1;
  d[2] = rp.gamma_4p_eff * ms2 - (rp.p_a2 + rp.pp_a2) * g32 + rates.gamma_4 * ms1;
  d[3] = rp.gamma_3p_eff * ms2 - (rp.p_a1 + rp.pp_a1) * g12 + rates.gamma_3 * ms1;
  return d;
}

double eq3_approx(const dynamics::RateSet& rates, double omega,
                  Transition which) {
  const double big_gamma = which == Transition::A1 ? rates.big_gamma_1()
                                                   : rates.big_gamma_2();
  const double intrinsic = which == Transition::A1 ? rates.gamma_3p0
                                                   : rates.gamma_4p0;
  return intrinsic + rates.beta * omega * (omega + rates.gamma_r) / big_gamma;
}

}  // namespace quartet::ratemodel
