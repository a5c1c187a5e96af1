#include <array>
#include <cmath>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "doctest.h"
#include "quartet/presets.hpp"
#include "quartet/ratemodel.hpp"

using namespace quartet;
using ratemodel::PopulationVector;

TEST_CASE("rate matrix conserves population") {
  const auto rates = presets::rates("table2_no_strain");
  const double bg = ratemodel::default_big_gamma(rates);
  CHECK(bg == doctest::Approx(100.0 * rates.big_gamma_1()));
  CHECK(bg == doctest::Approx(16639.0));

  const auto m = ratemodel::full_rate_matrix(rates, 2.0, 0.7, bg);
  // Every column sums to zero: whatever leaves one level enters another.
  for (int j = 0; j < 8; ++j) CHECK(std::abs(m.col(j).sum()) < 1e-10);

  // rhs is the matrix acting on the population vector.
  PopulationVector p{0.2, 0.1, 0.15, 0.05, 0.3, 0.15, 0.05, 0.0};
  const auto d = ratemodel::full_rate_rhs(p, rates, 2.0, 0.7, bg);
  const Eigen::Matrix<double, 8, 1> pv =
      Eigen::Map<const Eigen::Matrix<double, 8, 1>>(p.as_array().data());
  const Eigen::Matrix<double, 8, 1> dv =
      Eigen::Map<const Eigen::Matrix<double, 8, 1>>(d.as_array().data());
  CHECK((dv - m * pv).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(std::abs(dv.sum()) < 1e-12);
}

TEST_CASE("two-way optical cycle reaches the saturated two-level steady state") {
  // With all conversion channels off, drive + radiative decay form a closed
  // two-level (pair) system whose steady excited fraction is W/(2W + G).
  dynamics::RateSet r;
  r.gamma_r = 50.0;
  const double w = 7.0;
  const auto m = ratemodel::full_rate_matrix(r, w, 0.0, 1000.0);

  Eigen::Matrix<double, 8, 1> p = Eigen::Matrix<double, 8, 1>::Zero();
  p(0) = 1.0;  // all population in g12
  const Eigen::Matrix<double, 8, 1> pt = (m * 5.0).exp() * p;
  CHECK(pt(2) == doctest::Approx(w / (2.0 * w + r.gamma_r)).epsilon(1e-9));
  CHECK(pt(0) ==
        doctest::Approx((w + r.gamma_r) / (2.0 * w + r.gamma_r)).epsilon(1e-9));
  // Undriven pair untouched.
  CHECK(pt(1) == doctest::Approx(0.0));
  CHECK(pt(3) == doctest::Approx(0.0));
}

TEST_CASE("ms3 bath is adiabatic at the default scale") {
  const auto rates = presets::rates("table2_strain");
  const double bg = ratemodel::default_big_gamma(rates);

  // Steady state of the full system under drive: MS3 holds the quasi-steady
  // population predicted by the closed form.
  const auto m = ratemodel::full_rate_matrix(rates, 3.0, 3.0, bg);
  Eigen::Matrix<double, 8, 1> p = Eigen::Matrix<double, 8, 1>::Zero();
  p(0) = p(1) = 0.5;
  const Eigen::Matrix<double, 8, 1> ss = (m * 2000.0).exp() * p;
  const double predicted = ratemodel::adiabatic_ms3(ss(5), rates, 3.0, 3.0, bg);
  CHECK(ss(6) == doctest::Approx(predicted).epsilon(1e-3));
  CHECK(ss(6) < 1e-4);  // bath population stays negligible
  // exp(M t) at ||M t|| ~ 3e7 keeps the sum only to Pade roundoff.
  CHECK(std::abs(ss.sum() - 1.0) < 1e-7);
}

TEST_CASE("reduced four-level system tracks the full one at weak drive") {
  const auto rates = presets::rates("table2_no_strain");
  const double bg = ratemodel::default_big_gamma(rates);
  const double o1 = 0.05, o2 = 0.03;

  const auto m = ratemodel::full_rate_matrix(rates, o1, o2, bg);
  Eigen::Matrix<double, 8, 1> p = Eigen::Matrix<double, 8, 1>::Zero();
  p(0) = 0.7;
  p(1) = 0.3;

  const auto rp = ratemodel::reduced_params(rates, o1, o2);
  std::array<double, 4> q{0.0, 0.0, 0.3, 0.7};  // (ms2, ms1, g32, g12)

  // Integrate the reduced system with small RK4 steps and compare the slow
  // populations against the exact matrix exponential of the full system.
  const double t_end = 20.0, h = 1e-3;
  auto deriv = [&](const std::array<double, 4>& s) {
    return ratemodel::reduced_rhs(s, rp, rates);
  };
  for (double t = 0.0; t < t_end - 0.5 * h; t += h) {
    const auto k1 = deriv(q);
    std::array<double, 4> tmp;
    for (int i = 0; i < 4; ++i) tmp[i] = q[i] + 0.5 * h * k1[i];
    const auto k2 = deriv(tmp);
    for (int i = 0; i < 4; ++i) tmp[i] = q[i] + 0.5 * h * k2[i];
    const auto k3 = deriv(tmp);
    for (int i = 0; i < 4; ++i) tmp[i] = q[i] + h * k3[i];
    const auto k4 = deriv(tmp);
    for (int i = 0; i < 4; ++i)
      q[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  const Eigen::Matrix<double, 8, 1> full = (m * t_end).exp() * p;

  // Excited populations are transient in the reduced picture; compare the
  // slow manifolds only. Elimination error is second order in the drive.
  CHECK(std::abs(q[3] - full(0)) < 2e-3);  // g12
  CHECK(std::abs(q[2] - full(1)) < 2e-3);  // g32
  CHECK(std::abs(q[1] - full(4)) < 2e-3);  // ms1
  CHECK(std::abs(q[0] - full(5)) < 2e-3);  // ms2
}

TEST_CASE("closed-form deshelling approximation") {
  const auto rates = presets::rates("table2_no_strain");
  CHECK(ratemodel::eq3_approx(rates, 4.33, Transition::A1) ==
        doctest::Approx(0.21458146571308376).epsilon(1e-12));
  // Near 4 MHz it agrees with the exact two-drive law at equal drives.
  const auto [g3p, g4p] = dynamics::deshelling_rates(rates, 4.33, 4.33);
  CHECK(std::abs(ratemodel::eq3_approx(rates, 4.33, Transition::A1) - g3p) /
            g3p <
        0.03);
  (void)g4p;
}

TEST_CASE("population vector validation") {
  PopulationVector p = PopulationVector::mixed_ground();
  CHECK_NOTHROW(p.validate());
  CHECK(p.sum() == doctest::Approx(1.0));
  p.ms1 = -0.01;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = PopulationVector::mixed_ground();
  p.g12 = 0.7;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);

  const auto arr = PopulationVector{0.1, 0.2, 0.3, 0.4, 0, 0, 0, 0}.as_array();
  const auto back = PopulationVector::from_array(arr);
  CHECK(back.g32 == doctest::Approx(0.2));
  CHECK(back.e32 == doctest::Approx(0.4));
}
