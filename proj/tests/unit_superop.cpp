#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "doctest.h"
#include "quartet/presets.hpp"
#include "quartet/superop.hpp"

using namespace quartet;
using dynamics::DriveState;
using dynamics::ModelConfig;

namespace {

Mat10 random_density(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Mat10 a;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) a(i, j) = cplx(g(rng), g(rng));
  Mat10 rho = a * a.adjoint();
  rho /= rho.trace();
  return rho;
}

DriveState pumped_drive() {
  DriveState d;
  d.resonant_rabi_a1 = 2.5;
  d.detuning_a1 = 0.8;
  d.offres_pump = 0.4;
  return d;
}

}  // namespace

TEST_CASE("real vectorization is an isometry") {
  std::mt19937_64 rng(31u);
  for (int k = 0; k < 20; ++k) {
    const Mat10 rho = random_density(rng);
    const Eigen::VectorXd x = superop::to_real_vector(rho);
    CHECK(x.size() == superop::dim);
    CHECK(x.norm() == doctest::Approx(rho.norm()).epsilon(1e-13));
    const Mat10 back = superop::from_real_vector(x);
    CHECK((back - rho).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("liouvillian matrix reproduces the right-hand side") {
  const ModelConfig config = presets::model("table2_strain", "table1_strain");
  const DriveState drive = pumped_drive();
  const superop::SegmentGenerator gen(config, drive);

  std::mt19937_64 rng(32u);
  for (int k = 0; k < 10; ++k) {
    const Mat10 rho = random_density(rng);
    const Mat10 via_l =
        superop::from_real_vector(gen.matrix() * superop::to_real_vector(rho));
    const Mat10 direct = dynamics::lindblad_rhs(rho, config, drive);
    CHECK((via_l - direct).cwiseAbs().maxCoeff() <
          1e-10 * (1.0 + direct.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("matrix exponential agrees with rk4 integration") {
  ModelConfig config = presets::model("table2_no_strain");
  const DriveState drive = pumped_drive();
  const superop::SegmentGenerator gen(config, drive);

  const auto rho0 = dynamics::DensityMatrix::mixed_ground();
  const Eigen::VectorXd x1 =
      gen.apply(superop::to_real_vector(rho0.m), 0.35);

  config.solver.method = dynamics::SolverOptions::Method::rk4;
  config.solver.dt_max = 2e-4;
  const auto rho_rk4 = dynamics::propagate(rho0, config, drive, 0.35);
  CHECK((superop::from_real_vector(x1) - rho_rk4.m).cwiseAbs().maxCoeff() <
        1e-7);

  // Propagator is cached: same dt returns the same matrix object.
  CHECK(&gen.propagator(0.35) == &gen.propagator(0.35));
  // Semigroup property.
  const Eigen::VectorXd x2 = gen.apply(gen.apply(
      superop::to_real_vector(rho0.m), 0.2), 0.15);
  CHECK((x1 - x2).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("steady state is fixed and reachable") {
  const ModelConfig config = presets::model("table2_no_strain");
  const DriveState drive = pumped_drive();
  const superop::SegmentGenerator gen(config, drive);

  const Eigen::VectorXd ss = gen.steady_state();
  const Mat10 rho_ss = superop::from_real_vector(ss);
  CHECK(rho_ss.trace().real() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK((gen.matrix() * ss).cwiseAbs().maxCoeff() < 1e-9);

  // Long-time propagation from an unrelated state lands on it.
  const Eigen::VectorXd far = gen.apply(
      superop::to_real_vector(dynamics::DensityMatrix::pure(idx::ms2).m),
      400.0);
  CHECK((far - ss).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("integrated photoluminescence matches quadrature") {
  const ModelConfig config = presets::model("table2_no_strain");
  const DriveState drive = pumped_drive();
  const superop::SegmentGenerator gen(config, drive);

  const Eigen::VectorXd x0 =
      superop::to_real_vector(dynamics::DensityMatrix::mixed_ground().m);
  const auto res = gen.propagate_with_integral(x0, 2.0);
  CHECK((res.x_end - gen.apply(x0, 2.0)).cwiseAbs().maxCoeff() < 1e-11);

  // Riemann midpoint sum over fine steps.
  const int n = 4000;
  const double h = 2.0 / n;
  double sum = 0.0;
  Eigen::VectorXd x = x0;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd mid = gen.apply(x, 0.5 * h);
    sum += h * gen.weights().dot(mid);
    x = gen.apply(x, h);
  }
  CHECK(res.integral == doctest::Approx(sum).epsilon(1e-7));
}

TEST_CASE("photoluminescence weights form the affine part of pl_rate") {
  const ModelConfig config = presets::model("table2_strain");
  const Eigen::RowVectorXd w = superop::pl_weights(config);
  std::mt19937_64 rng(33u);
  for (int k = 0; k < 10; ++k) {
    const Mat10 rho = random_density(rng);
    const double via_w =
        w.dot(superop::to_real_vector(rho)) + config.dark_rate_hz * 1e-6;
    CHECK(via_w == doctest::Approx(dynamics::pl_rate(rho, config))
                       .epsilon(1e-12));
  }
}
