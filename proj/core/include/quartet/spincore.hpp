#pragma once

// Spin-3/2 operator algebra and intra-manifold strain Hamiltonians.
//
// Units: all Hamiltonian entries are in MHz (ordinary frequency, not
// angular). Dynamics code multiplies by 2*pi when forming the commutator.
//
// The quartet Hamiltonian of one orbital manifold is
//
//   H = (d + Pi_z) Sz^2
//     + Pi_1/2 [ e^{-i th1} (S+ Sz + Sz S+) + h.c. ]
//     + Pi_2/2 [ e^{-i th2} S+^2 + h.c. ]
//
// with d the zero-field Sz^2 prefactor (HALF the observable +-1/2 <-> +-3/2
// splitting) and (Pi_z, Pi_1, Pi_2) the axial and transverse deformation
// amplitudes. A rotation of the transverse axes by phi shifts the phases as
// th1 -> th1 + phi, th2 -> th2 + 2 phi, so only th2 - 2 th1 is physical; the
// canonical gauge fixes th1 = 0 and stores th2 = theta in [0, pi). The
// eigenvalue spectrum is independent of both phases (the phases move
// eigenvectors only), so spectra for +-Pi_1 and +-Pi_2 coincide.

#include <array>
#include <complex>

#include <Eigen/Dense>

#include "quartet/basis.hpp"

namespace quartet::spincore {

// Matrix representations for S = 3/2 in the (+3/2, +1/2, -1/2, -3/2) basis.
// Invariants: [Sx, Sy] = i Sz and Sx^2 + Sy^2 + Sz^2 = (15/4) I.
struct SpinOperators {
  Mat4 sx, sy, sz, s_plus, s_minus;
};

// Built once on first use; the returned reference stays valid.
const SpinOperators& spin_ops();

// Deformation parameters in the canonical gauge. Amplitudes are in MHz.
struct StrainParams {
  double pi_z = 0.0;    // axial shift, any sign
  double pi_1 = 0.0;    // |Delta m| = 1 amplitude, >= 0
  double pi_2 = 0.0;    // |Delta m| = 2 amplitude, >= 0
  double theta = 0.0;   // phase of the |Delta m| = 2 term, in [0, pi)

  // Throws std::invalid_argument (naming the offending field) when outside
  // the canonical domain or non-finite.
  void validate() const;
};

// One manifold's 4x4 Hamiltonian together with the Sz^2 prefactor it was
// built from (needed to recover the bare splitting later).
struct ManifoldHamiltonian {
  Mat4 matrix = Mat4::Zero();
  double d_zfs = 0.0;  // MHz, Sz^2 prefactor (half the observable splitting)
};

// Observable splittings (70 MHz ground, ~1 GHz excited) are twice the Sz^2
// prefactor: Sz^2 eigenvalues are 9/4 and 1/4, difference 2.
constexpr double zfs_prefactor_from_splitting(double splitting_mhz) {
  return 0.5 * splitting_mhz;
}

// Builds H above with th1 = 0, th2 = strain.theta. Validates the params.
ManifoldHamiltonian strain_hamiltonian(double d_zfs_mhz, const StrainParams& strain);

// Pre-gauge-reduction form with independent phases and signed amplitudes.
// Used by symmetry tests; not restricted to the canonical domain.
Mat4 strain_hamiltonian_two_phase(double d_zfs_mhz, double pi_z,
                                  double pi_1, double theta_1,
                                  double pi_2, double theta_2);

// |mean of the upper ascending eigenvalue pair - mean of the lower pair|.
// Equals the zero-field splitting (2 d_zfs) without strain and shifts by
// exactly 2 Pi_z under purely axial strain.
double odmr_frequency(const ManifoldHamiltonian& h);

enum class SpinCharacter { half, three_half };

// Eigen-decomposition with |m_s| character labels. Eigenvalues ascend.
// Each Kramers partner carries the same +-1/2 subspace weight, so the label
// is invariant under the eigensolver's arbitrary rotation inside a
// degenerate doublet. Ties (weight exactly 1/2) label as half.
struct EigenSystem {
  Eigen::Vector4d values;                    // MHz, ascending
  Mat4 vectors;                              // columns, orthonormal
  std::array<SpinCharacter, 4> character{};  // per column
};

EigenSystem ground_eigenstates(const ManifoldHamiltonian& h);

// Two-manifold rotating-frame Hamiltonian for one resonant laser:
// ground block unchanged, excited block shifted by the laser detuning, and a
// coherent coupling rabi/2 connecting only the addressed spin pair
// (+-1/2 for A1, +-3/2 for A2). Basis: 8x8 block of the global ordering
// (4 ground then 4 excited rows).
struct RotatingFrameHamiltonian {
  Eigen::Matrix<cplx, 8, 8> matrix;
  double detuning = 0.0;  // MHz, laser minus transition reference
  double rabi = 0.0;      // MHz, >= 0
  Transition target = Transition::A1;
};

// detuning is (laser frequency - reference transition frequency); the
// reference is the mean diagonal gap of the addressed pair, so at zero
// detuning the addressed diagonal entries of ground and shifted excited
// blocks coincide up to strain-induced mixing terms. rabi must be >= 0.
RotatingFrameHamiltonian rotating_frame(const ManifoldHamiltonian& h_ground,
                                        const ManifoldHamiltonian& h_excited,
                                        double detuning_mhz, double rabi_mhz,
                                        Transition target);

// Mean computational-basis transition frequency of the addressed pair
// (excited minus ground diagonal average). Used as the frame reference.
double transition_reference(const ManifoldHamiltonian& h_ground,
                            const ManifoldHamiltonian& h_excited,
                            Transition target);

}  // namespace quartet::spincore
