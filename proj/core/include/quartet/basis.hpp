#pragma once

// Global level ordering for the 10-level model of a spin-3/2 color center:
// a ground and an excited orbital quartet plus two metastable doublet levels.
// Every density matrix, Hamiltonian and jump operator in this library uses
// this index convention.

#include <complex>

#include <Eigen/Dense>

namespace quartet {

using cplx = std::complex<double>;
using Mat4 = Eigen::Matrix4cd;
using Mat10 = Eigen::Matrix<cplx, 10, 10>;
using Vec10 = Eigen::Matrix<cplx, 10, 1>;

inline constexpr int n_levels = 10;

namespace idx {
// Spin projections are listed in descending m_s order within each manifold.
inline constexpr int g_p32 = 0;  // ground, m_s = +3/2
inline constexpr int g_p12 = 1;  // ground, m_s = +1/2
inline constexpr int g_m12 = 2;  // ground, m_s = -1/2
inline constexpr int g_m32 = 3;  // ground, m_s = -3/2
inline constexpr int e_p32 = 4;  // excited, m_s = +3/2
inline constexpr int e_p12 = 5;  // excited, m_s = +1/2
inline constexpr int e_m12 = 6;  // excited, m_s = -1/2
inline constexpr int e_m32 = 7;  // excited, m_s = -3/2
inline constexpr int ms1 = 8;    // lower metastable doublet
inline constexpr int ms2 = 9;    // upper metastable doublet
}  // namespace idx

// Optical spin pairs: A1 drives the m_s = +-1/2 sublevels, A2 the +-3/2 ones.
enum class Transition { A1, A2 };

inline const char* to_string(Transition t) {
  return t == Transition::A1 ? "A1" : "A2";
}

}  // namespace quartet
