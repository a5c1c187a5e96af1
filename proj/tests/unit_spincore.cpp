#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "doctest.h"
#include "quartet/presets.hpp"
#include "quartet/spincore.hpp"

using namespace quartet;
using spincore::StrainParams;

namespace {

Eigen::Vector4d sorted_eigs(const Mat4& h) {
  return Eigen::SelfAdjointEigenSolver<Mat4>(h).eigenvalues();
}

}  // namespace

TEST_CASE("spin-3/2 operator algebra") {
  const auto& ops = spincore::spin_ops();

  CHECK(ops.sz(0, 0).real() == doctest::Approx(1.5));
  CHECK(ops.sz(1, 1).real() == doctest::Approx(0.5));
  CHECK(ops.sz(2, 2).real() == doctest::Approx(-0.5));
  CHECK(ops.sz(3, 3).real() == doctest::Approx(-1.5));

  const double rt3 = std::sqrt(3.0);
  CHECK(ops.s_plus(0, 1).real() == doctest::Approx(rt3));
  CHECK(ops.s_plus(1, 2).real() == doctest::Approx(2.0));
  CHECK(ops.s_plus(2, 3).real() == doctest::Approx(rt3));

  const Mat4 comm = ops.sx * ops.sy - ops.sy * ops.sx;
  CHECK((comm - cplx(0, 1) * ops.sz).cwiseAbs().maxCoeff() < 1e-14);

  const Mat4 casimir = ops.sx * ops.sx + ops.sy * ops.sy + ops.sz * ops.sz;
  CHECK((casimir - 3.75 * Mat4::Identity()).cwiseAbs().maxCoeff() < 1e-14);

  CHECK((ops.s_plus - (ops.sx + cplx(0, 1) * ops.sy)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((ops.s_minus - ops.s_plus.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("strain hamiltonian matrix elements in the canonical gauge") {
  StrainParams s;
  s.pi_z = -2.0;
  s.pi_1 = 1.2;
  s.pi_2 = 0.7;
  s.theta = 0.4;
  const auto h = spincore::strain_hamiltonian(35.0, s);
  const double rt3 = std::sqrt(3.0);

  CHECK(h.d_zfs == doctest::Approx(35.0));
  // Diagonal (d + pi_z) Sz^2.
  CHECK(h.matrix(0, 0).real() == doctest::Approx(33.0 * 2.25));
  CHECK(h.matrix(1, 1).real() == doctest::Approx(33.0 * 0.25));
  // |Delta m| = 1 block carries +-sqrt(3) pi_1 with theta_1 = 0.
  CHECK(h.matrix(0, 1).real() == doctest::Approx(rt3 * 1.2));
  CHECK(h.matrix(0, 1).imag() == doctest::Approx(0.0));
  CHECK(h.matrix(2, 3).real() == doctest::Approx(-rt3 * 1.2));
  // |Delta m| = 2 block carries sqrt(3) pi_2 e^{-i theta}.
  const cplx c2 = rt3 * 0.7 * std::exp(cplx(0, -0.4));
  CHECK(std::abs(h.matrix(0, 2) - c2) < 1e-14);
  CHECK(std::abs(h.matrix(1, 3) - c2) < 1e-14);
  // Hermitian.
  CHECK((h.matrix - h.matrix.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("strain parameter validation") {
  StrainParams s;
  s.pi_1 = -0.1;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.pi_1 = 0.1;
  s.theta = std::numbers::pi;  // domain is [0, pi)
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.theta = -0.1;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.theta = 0.5;
  CHECK_NOTHROW(s.validate());
  s.pi_z = std::nan("");
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("frozen spectra for the published deformation") {
  // Independently derived reference eigenvalues for the fitted deformation
  // (pi_z 1.51, pi_1 3.78, pi_2 3.68, theta 0.92 pi) on a 35 MHz prefactor.
  const auto s = presets::strain("table1_strain");
  const auto h = spincore::strain_hamiltonian(35.0, s);
  const auto ev = sorted_eigs(h.matrix);

  CHECK(ev(0) == doctest::Approx(8.00144680628692).epsilon(1e-9));
  CHECK(ev(1) == doctest::Approx(8.00144680628692).epsilon(1e-9));
  CHECK(ev(2) == doctest::Approx(83.2735531937131).epsilon(1e-9));
  CHECK(ev(3) == doctest::Approx(83.2735531937131).epsilon(1e-9));
  CHECK(spincore::odmr_frequency(h) ==
        doctest::Approx(75.2721063874261).epsilon(1e-9));

  // Same deformation on the excited-manifold prefactor.
  const auto he = spincore::strain_hamiltonian(500.0, s);
  CHECK(spincore::odmr_frequency(he) ==
        doctest::Approx(1003.18646821017).epsilon(1e-9));
}

TEST_CASE("frozen spectrum for a second deformation point") {
  const auto h = spincore::strain_hamiltonian_two_phase(35.0, -2.3, 5.1, 0.0,
                                                        1.7, 1.234);
  const auto ev = sorted_eigs(h);
  CHECK(ev(0) == doctest::Approx(6.87514705914157).epsilon(1e-9));
  CHECK(ev(3) == doctest::Approx(74.8748529408584).epsilon(1e-9));
  CHECK(ev(3) - ev(0) == doctest::Approx(67.9997058817169).epsilon(1e-9));
  // Kramers degeneracy of both pairs.
  CHECK(ev(1) - ev(0) < 1e-10);
  CHECK(ev(3) - ev(2) < 1e-10);
}

TEST_CASE("line position calibration") {
  const auto h0 = spincore::strain_hamiltonian(
      spincore::zfs_prefactor_from_splitting(70.0), {});
  CHECK(std::abs(spincore::odmr_frequency(h0) - 70.0) < 1e-12);

  StrainParams ax;
  ax.pi_z = 1.51;
  const auto ha = spincore::strain_hamiltonian(35.0, ax);
  CHECK(std::abs(spincore::odmr_frequency(ha) - 73.02) < 1e-12);
}

TEST_CASE("phase choices never move the spectrum") {
  std::mt19937_64 rng(11u);
  std::uniform_real_distribution<double> upz(-5.0, 5.0), uamp(0.0, 6.0),
      uph(0.0, 2.0 * std::numbers::pi);
  for (int draw = 0; draw < 200; ++draw) {
    const double piz = upz(rng), p1 = uamp(rng), p2 = uamp(rng);
    const double t1 = uph(rng), t2 = uph(rng);
    const auto ha =
        spincore::strain_hamiltonian_two_phase(35.0, piz, p1, t1, p2, t2);
    // Gauge rotation by -t1 moves the pair to the canonical one-phase form.
    const auto hb = spincore::strain_hamiltonian_two_phase(
        35.0, piz, p1, 0.0, p2, t2 - 2.0 * t1);
    CHECK((sorted_eigs(ha) - sorted_eigs(hb)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("eigensystem characters label the dominant spin pair") {
  const auto plain = spincore::strain_hamiltonian(35.0, {});
  const auto es = spincore::ground_eigenstates(plain);
  CHECK(es.character[0] == spincore::SpinCharacter::half);
  CHECK(es.character[1] == spincore::SpinCharacter::half);
  CHECK(es.character[2] == spincore::SpinCharacter::three_half);
  CHECK(es.character[3] == spincore::SpinCharacter::three_half);
  CHECK(es.values(0) == doctest::Approx(35.0 * 0.25));
  CHECK(es.values(3) == doctest::Approx(35.0 * 2.25));

  // Moderate mixing keeps the labels.
  const auto mixed =
      spincore::strain_hamiltonian(35.0, presets::strain("table1_strain"));
  const auto esm = spincore::ground_eigenstates(mixed);
  CHECK(esm.character[0] == spincore::SpinCharacter::half);
  CHECK(esm.character[2] == spincore::SpinCharacter::three_half);
  // Columns orthonormal.
  CHECK((esm.vectors.adjoint() * esm.vectors - Mat4::Identity())
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}

TEST_CASE("rotating frame for one laser") {
  const auto hg = spincore::strain_hamiltonian(35.0, {});
  const auto he = spincore::strain_hamiltonian(500.0, {});

  CHECK(spincore::transition_reference(hg, he, Transition::A1) ==
        doctest::Approx(116.25));
  CHECK(spincore::transition_reference(hg, he, Transition::A2) ==
        doctest::Approx(1046.25));

  const auto rf = spincore::rotating_frame(hg, he, 0.0, 3.0, Transition::A1);
  // Ground block untouched.
  CHECK(rf.matrix(1, 1).real() == doctest::Approx(8.75));
  // Addressed excited diagonal meets the ground one at zero detuning.
  CHECK(rf.matrix(5, 5).real() == doctest::Approx(8.75));
  CHECK(rf.matrix(6, 6).real() == doctest::Approx(8.75));
  // Coupling rabi/2 only on the addressed pair.
  CHECK(rf.matrix(1, 5).real() == doctest::Approx(1.5));
  CHECK(rf.matrix(2, 6).real() == doctest::Approx(1.5));
  CHECK(std::abs(rf.matrix(0, 4)) < 1e-14);
  CHECK(std::abs(rf.matrix(3, 7)) < 1e-14);

  const auto rfd = spincore::rotating_frame(hg, he, 2.5, 3.0, Transition::A1);
  CHECK(rfd.matrix(5, 5).real() == doctest::Approx(8.75 - 2.5));

  const auto rf2 = spincore::rotating_frame(hg, he, 0.0, 4.0, Transition::A2);
  CHECK(rf2.matrix(0, 4).real() == doctest::Approx(2.0));
  CHECK(std::abs(rf2.matrix(1, 5)) < 1e-14);

  CHECK_THROWS_AS(spincore::rotating_frame(hg, he, 0.0, -1.0, Transition::A1),
                  std::invalid_argument);
}
