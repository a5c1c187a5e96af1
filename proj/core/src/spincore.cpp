#include "quartet/spincore.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace quartet::spincore {

namespace {

SpinOperators build_spin_operators() {
  SpinOperators ops;
  ops.sz = Mat4::Zero();
  ops.sz.diagonal() << 1.5, 0.5, -0.5, -1.5;

  // <m+1|S+|m> = sqrt(S(S+1) - m(m+1)) for S = 3/2.
  ops.s_plus = Mat4::Zero();
  ops.s_plus(0, 1) = std::sqrt(3.0);
  ops.s_plus(1, 2) = 2.0;
  ops.s_plus(2, 3) = std::sqrt(3.0);
  ops.s_minus = ops.s_plus.adjoint();

  ops.sx = 0.5 * (ops.s_plus + ops.s_minus);
  ops.sy = (ops.s_plus - ops.s_minus) / cplx(0.0, 2.0);
  return ops;
}

void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) {
    throw std::invalid_argument(std::string(name) + " must be finite");
  }
}

}  // namespace

const SpinOperators& spin_ops() {
  static const SpinOperators ops = build_spin_operators();
  return ops;
}

void StrainParams::validate() const {
  require_finite(pi_z, "pi_z");
  require_finite(pi_1, "pi_1");
  require_finite(pi_2, "pi_2");
  require_finite(theta, "theta");
  if (pi_1 < 0.0) {
    throw std::invalid_argument("pi_1 must be >= 0 (canonical gauge)");
  }
  if (pi_2 < 0.0) {
    throw std::invalid_argument("pi_2 must be >= 0 (canonical gauge)");
  }
  if (theta < 0.0 || theta >= std::numbers::pi) {
    throw std::invalid_argument("theta must lie in [0, pi)");
  }
}

Mat4 strain_hamiltonian_two_phase(double d_zfs_mhz, double pi_z,
                                  double pi_1, double theta_1,
                                  double pi_2, double theta_2) {
  const SpinOperators& s = spin_ops();
  const Mat4 mixed = s.s_plus * s.sz + s.sz * s.s_plus;  // {S+, Sz}
  const Mat4 quad = s.s_plus * s.s_plus;                 // S+^2

  Mat4 h = (d_zfs_mhz + pi_z) * (s.sz * s.sz);
  const cplx c1 = 0.5 * pi_1 * std::exp(cplx(0.0, -theta_1));
  const cplx c2 = 0.5 * pi_2 * std::exp(cplx(0.0, -theta_2));
  h += c1 * mixed + std::conj(c1) * mixed.adjoint();
  h += c2 * quad + std::conj(c2) * quad.adjoint();
  return h;
}

ManifoldHamiltonian strain_hamiltonian(double d_zfs_mhz, const StrainParams& strain) {
  require_finite(d_zfs_mhz, "d_zfs");
  strain.validate();
  ManifoldHamiltonian out;
  out.d_zfs = d_zfs_mhz;
  out.matrix = strain_hamiltonian_two_phase(d_zfs_mhz, strain.pi_z, strain.pi_1,
                                            0.0, strain.pi_2, strain.theta);
  return out;
}

double odmr_frequency(const ManifoldHamiltonian& h) {
  Eigen::SelfAdjointEigenSolver<Mat4> es(h.matrix, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();  // ascending
  return std::abs(0.5 * (ev(2) + ev(3)) - 0.5 * (ev(0) + ev(1)));
}

EigenSystem ground_eigenstates(const ManifoldHamiltonian& h) {
  Eigen::SelfAdjointEigenSolver<Mat4> es(h.matrix);
  EigenSystem sys;
  sys.values = es.eigenvalues();
  sys.vectors = es.eigenvectors();
  for (int c = 0; c < 4; ++c) {
    const double w_half = std::norm(sys.vectors(1, c)) + std::norm(sys.vectors(2, c));
    sys.character[c] =
        w_half >= 0.5 ? SpinCharacter::half : SpinCharacter::three_half;
  }
  return sys;
}

double transition_reference(const ManifoldHamiltonian& h_ground,
                            const ManifoldHamiltonian& h_excited,
                            Transition target) {
  // +-1/2 occupy rows 1,2 of a manifold block; +-3/2 rows 0,3.
  const int a = target == Transition::A1 ? 1 : 0;
  const int b = target == Transition::A1 ? 2 : 3;
  const double ge = 0.5 * (h_excited.matrix(a, a).real() + h_excited.matrix(b, b).real());
  const double gg = 0.5 * (h_ground.matrix(a, a).real() + h_ground.matrix(b, b).real());
  return ge - gg;
}

RotatingFrameHamiltonian rotating_frame(const ManifoldHamiltonian& h_ground,
                                        const ManifoldHamiltonian& h_excited,
                                        double detuning_mhz, double rabi_mhz,
                                        Transition target) {
  require_finite(detuning_mhz, "detuning");
  require_finite(rabi_mhz, "rabi");
  if (rabi_mhz < 0.0) {
    throw std::invalid_argument("rabi must be >= 0");
  }

  RotatingFrameHamiltonian out;
  out.detuning = detuning_mhz;
  out.rabi = rabi_mhz;
  out.target = target;
  out.matrix.setZero();
  out.matrix.block<4, 4>(0, 0) = h_ground.matrix;

  // In the frame rotating at the laser frequency the excited block is offset
  // so that the addressed pair sits at -detuning relative to its ground
  // partner levels.
  const double ref = transition_reference(h_ground, h_excited, target);
  Mat4 shifted = h_excited.matrix;
  shifted.diagonal().array() -= cplx(ref + detuning_mhz, 0.0);
  out.matrix.block<4, 4>(4, 4) = shifted;

  const int a = target == Transition::A1 ? 1 : 0;
  const int b = target == Transition::A1 ? 2 : 3;
  const double half_rabi = 0.5 * rabi_mhz;
  out.matrix(a, 4 + a) = half_rabi;
  out.matrix(4 + a, a) = half_rabi;
  out.matrix(b, 4 + b) = half_rabi;
  out.matrix(4 + b, b) = half_rabi;
  return out;
}

}  // namespace quartet::spincore
