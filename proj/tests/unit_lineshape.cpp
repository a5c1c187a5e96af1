#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "quartet/lineshape.hpp"

using namespace quartet;
using lineshape::OverlapFunction;
using lineshape::PhononData;

namespace {

// Integral of A over [lo, hi) on the stored uniform grid.
double window_weight(const OverlapFunction& f, double lo, double hi) {
  const double de = f.energies[1] - f.energies[0];
  double s = 0.0;
  for (size_t i = 0; i < f.energies.size(); ++i) {
    if (f.energies[i] >= lo && f.energies[i] < hi) s += f.a[i] * de;
  }
  return s;
}

}  // namespace

TEST_CASE("huang-rhys unit constant") {
  CHECK(lineshape::hr_unit() ==
        doctest::Approx(0.119612667).epsilon(1e-9));
}

TEST_CASE("partial factors from a displacement") {
  // One atom of mass 4 amu displaced 0.3 angstrom along x, one mode along x:
  // q = 2 * 0.3, s = hr_unit * q^2 * omega.
  Eigen::VectorXd disp(3);
  disp << 0.3, 0.0, 0.0;
  Eigen::VectorXd mode(3);
  mode << 1.0, 0.0, 0.0;
  const auto s =
      lineshape::partial_hr_factors(disp, {4.0}, {mode}, {50.0});
  REQUIRE(s.size() == 1);
  CHECK(s[0] == doctest::Approx(2.1530280058922884).epsilon(1e-12));

  // A mode orthogonal to the displacement carries nothing.
  Eigen::VectorXd ymode(3);
  ymode << 0.0, 1.0, 0.0;
  const auto s2 =
      lineshape::partial_hr_factors(disp, {4.0}, {mode, ymode}, {50.0, 80.0});
  CHECK(s2[1] == doctest::Approx(0.0));

  CHECK_THROWS_AS(
      lineshape::partial_hr_factors(disp, {4.0, 12.0}, {mode}, {50.0}),
      std::invalid_argument);
  CHECK_THROWS_AS(lineshape::partial_hr_factors(disp, {4.0}, {mode}, {}),
                  std::invalid_argument);
  Eigen::VectorXd short_mode(2);
  short_mode << 1.0, 0.0;
  CHECK_THROWS_AS(
      lineshape::partial_hr_factors(disp, {4.0}, {short_mode}, {50.0}),
      std::invalid_argument);
}

TEST_CASE("spectral density integrates to the total factor") {
  const auto modes = lineshape::synthetic_modes();
  CHECK(modes.total_hr() == doctest::Approx(0.90).epsilon(1e-12));

  std::vector<double> grid;
  for (double e = 0.0; e <= 250.0; e += 0.05) grid.push_back(e);
  std::vector<std::string> warnings;
  const auto s = lineshape::spectral_density(modes, grid, &warnings);
  CHECK(warnings.empty());
  double integral = 0.0, moment = 0.0;
  for (size_t i = 0; i < s.size(); ++i) {
    integral += s[i] * 0.05;
    moment += grid[i] * s[i] * 0.05;
  }
  CHECK(integral == doctest::Approx(0.90).epsilon(1e-4));
  CHECK(moment / integral == doctest::Approx(88.3 / 0.90).epsilon(1e-3));

  // A grid that cuts a mode off gets flagged.
  std::vector<double> narrow;
  for (double e = 0.0; e <= 100.0; e += 0.05) narrow.push_back(e);
  std::vector<std::string> w2;
  lineshape::spectral_density(modes, narrow, &w2);
  CHECK(!w2.empty());
}

TEST_CASE("zero coupling gives the homogeneous lorentzian") {
  PhononData d;
  d.modes = {{60.0, 2.0, 0.0}};
  const double eta = 0.8;
  const auto f = lineshape::overlap_function(d, eta);

  CHECK(std::abs(f.integral() - 1.0) <= 1e-3);
  CHECK(f.value_at(0.0) ==
        doctest::Approx(1.0 / (std::numbers::pi * eta)).epsilon(0.01));
  CHECK(f.value_at(4.0) ==
        doctest::Approx(eta / std::numbers::pi / (16.0 + eta * eta))
            .epsilon(0.01));
  CHECK_THROWS_AS(f.value_at(1e9), std::out_of_range);
}

TEST_CASE("multi-phonon windows follow poisson weights") {
  PhononData d;
  d.modes = {{60.0, 2.0, 0.5}};
  const auto f = lineshape::overlap_function(d, 0.3);

  CHECK(std::abs(f.integral() - 1.0) <= 1e-3);
  double factorial = 1.0;
  for (int n = 0; n <= 3; ++n) {
    if (n > 0) factorial *= n;
    const double expected = std::exp(-0.5) * std::pow(0.5, n) / factorial;
    const double got = window_weight(f, 60.0 * n - 30.0, 60.0 * n + 30.0);
    CHECK(got == doctest::Approx(expected).epsilon(0.02));
  }
}

TEST_CASE("synthetic table keeps its first moment") {
  const auto f = lineshape::overlap_function(lineshape::synthetic_modes(), 0.5);
  CHECK(std::abs(f.integral() - 1.0) <= 1e-3);
  CHECK(f.first_moment() == doctest::Approx(88.3).epsilon(0.01));
}

TEST_CASE("fft grid overrides are validated") {
  lineshape::FftOptions coarse;
  coarse.t_window = 10.0;
  coarse.n_time = 16;
  CHECK_THROWS_AS(
      lineshape::overlap_function(lineshape::synthetic_modes(), 1.0, coarse),
      std::invalid_argument);
  CHECK_THROWS_AS(lineshape::overlap_function(lineshape::synthetic_modes(), 0.0),
                  std::invalid_argument);
}

TEST_CASE("golden-rule conversion") {
  OverlapFunction f;
  f.energies = {-1.0, 0.0, 1.0, 2.0};
  f.a = {1.0, 1.0, 1.0, 1.0};

  CHECK(lineshape::isc_rate_mhz(1e-3, 0.5, f) ==
        doctest::Approx(9.545838906925493).epsilon(1e-12));
  // Quadratic in the spin-orbit element.
  CHECK(lineshape::isc_rate_mhz(2e-3, 0.5, f) ==
        doctest::Approx(38.18335562770197).epsilon(1e-12));
}
