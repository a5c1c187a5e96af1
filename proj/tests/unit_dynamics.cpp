#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "doctest.h"
#include "quartet/dynamics.hpp"
#include "quartet/presets.hpp"

using namespace quartet;
using dynamics::DriveState;
using dynamics::ModelConfig;
using dynamics::RateSet;

TEST_CASE("rate and drive validation") {
  RateSet r = presets::rates("table2_no_strain");
  CHECK_NOTHROW(r.validate());
  r.gamma_2 = -0.1;
  CHECK_THROWS_AS(r.validate(), std::invalid_argument);
  r = presets::rates("table2_no_strain");
  r.beta = 1.2;
  CHECK_THROWS_AS(r.validate(), std::invalid_argument);

  DriveState d;
  d.resonant_rabi_a1 = -1.0;
  CHECK_THROWS_AS(d.validate(), std::invalid_argument);
  d = DriveState{};
  d.offres_pump = -0.5;
  CHECK_THROWS_AS(d.validate(), std::invalid_argument);
}

TEST_CASE("deshelling law") {
  const RateSet r = presets::rates("table2_no_strain");

  // Frozen values at the published resonant operating point.
  auto [g3p, g4p] = dynamics::deshelling_rates(r, 4.33, 4.33);
  CHECK(g3p == doctest::Approx(0.209139).epsilon(1e-10));
  CHECK(g4p == doctest::Approx(0.4168254362005277).epsilon(1e-10));
  auto [g3p1, g4p1] = dynamics::deshelling_rates(r, 4.33, 0.0);
  CHECK(g3p1 == doctest::Approx(0.1045695).epsilon(1e-10));
  CHECK(g4p1 == doctest::Approx(0.2233560576199956).epsilon(1e-10));

  // The saturated form stays within a few percent of the weak-drive
  // approximation beta O (O + gamma_r) / BigGamma at this drive.
  const double approx = r.beta * 4.33 * (4.33 + r.gamma_r) / r.big_gamma_1();
  CHECK(std::abs(g3p - approx) / approx < 0.03);

  // Independent recomputation across random drives and rates.
  std::mt19937_64 rng(21u);
  std::uniform_real_distribution<double> uo(0.0, 12.0), ur(0.5, 120.0),
      ub(0.0, 0.5);
  for (int k = 0; k < 100; ++k) {
    RateSet q;
    q.gamma_r = ur(rng);
    q.gamma_1 = ur(rng);
    q.gamma_1p = ur(rng);
    q.gamma_2 = ur(rng);
    q.gamma_2p = ur(rng);
    q.gamma_3 = 1.0;
    q.gamma_4 = 1.0;
    q.gamma_3p0 = 0.01;
    q.gamma_4p0 = 0.02;
    q.beta = ub(rng);
    const double o1 = uo(rng), o2 = uo(rng);
    const auto [a, b] = dynamics::deshelling_rates(q, o1, o2);
    const double mean = q.beta * 0.5 * (o1 + o2);
    const double want_a =
        q.gamma_3p0 + mean * (o1 + q.gamma_r) / (o1 + q.big_gamma_1());
    const double want_b =
        q.gamma_4p0 + mean * (o2 + q.gamma_r) / (o2 + q.big_gamma_2());
    CHECK(std::abs(a - want_a) < 1e-12);
    CHECK(std::abs(b - want_b) < 1e-12);
    // Monotone in the drive.
    const auto [a2, b2] = dynamics::deshelling_rates(q, o1 + 1.0, o2 + 1.0);
    CHECK(a2 >= a);
    CHECK(b2 >= b);
  }

  // No drive: intrinsic rates only.
  const auto [a0, b0] = dynamics::deshelling_rates(r, 0.0, 0.0);
  CHECK(a0 == doctest::Approx(r.gamma_3p0));
  CHECK(b0 == doctest::Approx(r.gamma_4p0));
}

TEST_CASE("jump operator inventory in the dark") {
  const ModelConfig config = presets::model("table2_no_strain");
  const auto ops = dynamics::jump_operators(config, DriveState{});

  // 4 radiative + 8 intersystem + 4 from MS1 + 2 from MS2 (the MS2 -> +-1/2
  // channel has zero intrinsic rate and is dropped).
  CHECK(ops.size() == 18);
  for (const auto& op : ops) {
    CHECK(op.rate > 0.0);
    CHECK(op.from != op.to);
  }

  // Outflow of each excited sublevel equals its total decay rate.
  auto outflow = [&](int level) {
    double s = 0.0;
    for (const auto& op : ops)
      if (op.from == level) s += op.rate;
    return s;
  };
  CHECK(outflow(idx::e_p12) == doctest::Approx(config.rates.big_gamma_1()));
  CHECK(outflow(idx::e_m12) == doctest::Approx(config.rates.big_gamma_1()));
  CHECK(outflow(idx::e_p32) == doctest::Approx(config.rates.big_gamma_2()));
  CHECK(outflow(idx::e_m32) == doctest::Approx(config.rates.big_gamma_2()));
  // MS1 empties at gamma_3 + gamma_4, split evenly inside each pair.
  CHECK(outflow(idx::ms1) ==
        doctest::Approx(config.rates.gamma_3 + config.rates.gamma_4));

  // Radiative decay conserves spin: e_m12 -> g_m12 at gamma_r.
  const bool has_radiative =
      std::any_of(ops.begin(), ops.end(), [&](const dynamics::JumpOp& op) {
        return op.from == idx::e_m12 && op.to == idx::g_m12 &&
               std::abs(op.rate - config.rates.gamma_r) < 1e-12;
      });
  CHECK(has_radiative);

  // The off-resonant pump adds two-way spin-conserving channels.
  DriveState pump;
  pump.offres_pump = 1.0;
  const auto ops_pump = dynamics::jump_operators(config, pump);
  CHECK(ops_pump.size() > ops.size() + 7);
}

TEST_CASE("frame policy without coherent drive") {
  const ModelConfig config = presets::model("table2_no_strain");
  const Mat10 h = dynamics::total_hamiltonian(config, DriveState{});
  // Diagonal in the eigenbasis-aligned frame, no couplings.
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j)
      if (i != j) CHECK(std::abs(h(i, j)) < 1e-12);
  // Addressed pair sits at zero optical offset in its frame.
  CHECK(std::abs(h(idx::e_p12, idx::e_p12) - h(idx::g_p12, idx::g_p12)) <
        1e-9);
}

TEST_CASE("rk4 propagation keeps the state physical") {
  ModelConfig config = presets::model("table2_no_strain");
  config.solver.method = dynamics::SolverOptions::Method::rk4;
  DriveState drive;
  drive.resonant_rabi_a1 = 2.0;
  drive.offres_pump = 0.5;

  auto rho = dynamics::DensityMatrix::mixed_ground();
  rho = dynamics::propagate(rho, config, drive, 1.0);
  CHECK_NOTHROW(rho.validate());
  CHECK(rho.m.trace().real() == doctest::Approx(1.0).epsilon(1e-8));

  const Eigen::VectorXd ev =
      Eigen::SelfAdjointEigenSolver<Mat10>(rho.m).eigenvalues();
  CHECK(ev.minCoeff() > -1e-8);
  // Drive moved population out of the ground manifold.
  CHECK(rho.excited_population() > 1e-4);
  CHECK(rho.population(idx::ms1) > 1e-4);
}

TEST_CASE("rhs conserves trace and hermiticity") {
  const ModelConfig config = presets::model("table2_strain", "table1_strain");
  DriveState drive;
  drive.resonant_rabi_a2 = 3.0;
  drive.detuning_a2 = 1.5;
  drive.offres_pump = 0.6;

  std::mt19937_64 rng(5u);
  std::normal_distribution<double> g;
  Mat10 a;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) a(i, j) = cplx(g(rng), g(rng));
  Mat10 rho = a * a.adjoint();
  rho /= rho.trace();

  const Mat10 rhs = dynamics::lindblad_rhs(rho, config, drive);
  CHECK(std::abs(rhs.trace()) < 1e-12 * config.rates.big_gamma_1());
  CHECK((rhs - rhs.adjoint()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("photoluminescence observable") {
  ModelConfig config = presets::model("table2_no_strain");
  CHECK(config.efficiency == doctest::Approx(1.5e-4));
  CHECK(config.dark_rate_hz == doctest::Approx(7.0));

  // One excited sublevel: eff * gamma_r + dark (Hz -> 1/us).
  const auto exc = dynamics::DensityMatrix::pure(idx::e_p32);
  CHECK(dynamics::pl_rate(exc, config) ==
        doctest::Approx(1.5e-4 * 56.39 + 7.0e-6).epsilon(1e-12));
  // Ground state: dark counts only.
  const auto gnd = dynamics::DensityMatrix::mixed_ground();
  CHECK(dynamics::pl_rate(gnd, config) == doctest::Approx(7.0e-6));

  const double bound = dynamics::rk4_step_bound(config, DriveState{});
  CHECK(bound > 0.0);
  CHECK(bound <= 0.05 / config.rates.big_gamma_1());
}

TEST_CASE("density matrix validation flags bad states") {
  auto rho = dynamics::DensityMatrix::mixed_ground();
  CHECK_NOTHROW(rho.validate());
  rho.m(0, 0) += 0.5;  // trace off
  CHECK_THROWS_AS(rho.validate(), std::invalid_argument);

  auto rho2 = dynamics::DensityMatrix::pure(idx::g_p12);
  rho2.m(0, 1) = cplx(0.0, 0.7);  // breaks positivity (and hermiticity)
  CHECK_THROWS_AS(rho2.validate(), std::invalid_argument);
}
