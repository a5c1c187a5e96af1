#include "quartet/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace quartet::dynamics {

namespace {

void require_nonneg(double v, const char* name) {
  if (!std::isfinite(v) || v < 0.0) {
    throw std::invalid_argument(std::string(name) + " must be finite and >= 0");
  }
}

}  // namespace

void RateSet::validate() const {
  require_nonneg(gamma_r, "gamma_r");
  require_nonneg(gamma_1, "gamma_1");
  require_nonneg(gamma_1p, "gamma_1p");
  require_nonneg(gamma_2, "gamma_2");
  require_nonneg(gamma_2p, "gamma_2p");
  require_nonneg(gamma_3, "gamma_3");
  require_nonneg(gamma_4, "gamma_4");
  require_nonneg(gamma_3p0, "gamma_3p0");
  require_nonneg(gamma_4p0, "gamma_4p0");
  if (!std::isfinite(beta) || beta < 0.0 || beta > 1.0) {
    throw std::invalid_argument("beta must lie in [0, 1]");
  }
}

void DriveState::validate() const {
  require_nonneg(resonant_rabi_a1, "resonant_rabi_a1");
  require_nonneg(resonant_rabi_a2, "resonant_rabi_a2");
  require_nonneg(offres_pump, "offres_pump");
  require_nonneg(incoherent_rabi_a1, "incoherent_rabi_a1");
  require_nonneg(incoherent_rabi_a2, "incoherent_rabi_a2");
  if (!std::isfinite(detuning_a1) || !std::isfinite(detuning_a2)) {
    throw std::invalid_argument("detuning must be finite");
  }
  if (offres_gamma_3p) require_nonneg(*offres_gamma_3p, "offres_gamma_3p");
  if (offres_gamma_4p) require_nonneg(*offres_gamma_4p, "offres_gamma_4p");
}

void ModelConfig::validate() const {
  rates.validate();
  if (!std::isfinite(efficiency) || efficiency <= 0.0 || efficiency > 1.0) {
    throw std::invalid_argument("efficiency must lie in (0, 1]");
  }
  require_nonneg(dark_rate_hz, "dark_rate_hz");
  if (!h_ground.matrix.allFinite() || !h_excited.matrix.allFinite()) {
    throw std::invalid_argument("manifold Hamiltonians must be finite");
  }
}

void DensityMatrix::validate() const {
  if (!m.allFinite()) throw std::invalid_argument("density matrix must be finite");
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-10) {
    throw std::invalid_argument("density matrix must be Hermitian within 1e-10");
  }
  if (std::abs(m.trace().real() - 1.0) > 1e-9 || std::abs(m.trace().imag()) > 1e-9) {
    throw std::invalid_argument("density matrix trace must be 1 within 1e-9");
  }
  Eigen::SelfAdjointEigenSolver<Mat10> es(m, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-9) {
    throw std::invalid_argument("density matrix must be positive within 1e-9");
  }
}

DensityMatrix DensityMatrix::mixed_ground() {
  DensityMatrix rho;
  for (int i = 0; i < 4; ++i) rho.m(i, i) = 0.25;
  return rho;
}

DensityMatrix DensityMatrix::pure(int level) {
  DensityMatrix rho;
  rho.m(level, level) = 1.0;
  return rho;
}

double DensityMatrix::excited_population() const {
  double p = 0.0;
  for (int i = idx::e_p32; i <= idx::e_m32; ++i) p += m(i, i).real();
  return p;
}

double DensityMatrix::ground_population() const {
  double p = 0.0;
  for (int i = idx::g_p32; i <= idx::g_m32; ++i) p += m(i, i).real();
  return p;
}

std::pair<double, double> deshelling_rates(const RateSet& rates,
                                           double omega_a1, double omega_a2) {
  const double mean_omega = 0.5 * (omega_a1 + omega_a2);
  const double g3p = rates.gamma_3p0 +
                     rates.beta * mean_omega * (omega_a1 + rates.gamma_r) /
                         (omega_a1 + rates.big_gamma_1());
  const double g4p = rates.gamma_4p0 +
                     rates.beta * mean_omega * (omega_a2 + rates.gamma_r) /
                         (omega_a2 + rates.big_gamma_2());
  return {g3p, g4p};
}

std::vector<JumpOp> jump_operators(const ModelConfig& config,
                                   const DriveState& drive) {
  const RateSet& r = config.rates;
  std::vector<JumpOp> ops;
  ops.reserve(26);

  // Radiative decay, spin conserving.
  for (int m = 0; m < 4; ++m) {
    ops.push_back({idx::e_p32 + m, idx::g_p32 + m, r.gamma_r});
  }

  // Intersystem crossing into the metastable doublets.
  ops.push_back({idx::e_p12, idx::ms1, r.gamma_1});
  ops.push_back({idx::e_m12, idx::ms1, r.gamma_1});
  ops.push_back({idx::e_p12, idx::ms2, r.gamma_1p});
  ops.push_back({idx::e_m12, idx::ms2, r.gamma_1p});
  ops.push_back({idx::e_p32, idx::ms1, r.gamma_2});
  ops.push_back({idx::e_m32, idx::ms1, r.gamma_2});
  ops.push_back({idx::e_p32, idx::ms2, r.gamma_2p});
  ops.push_back({idx::e_m32, idx::ms2, r.gamma_2p});

  // MS1 return, half per target sublevel.
  ops.push_back({idx::ms1, idx::g_p12, 0.5 * r.gamma_3});
  ops.push_back({idx::ms1, idx::g_m12, 0.5 * r.gamma_3});
  ops.push_back({idx::ms1, idx::g_p32, 0.5 * r.gamma_4});
  ops.push_back({idx::ms1, idx::g_m32, 0.5 * r.gamma_4});

  // MS2 return with drive-dependent deshelling. Resonant and incoherent
  // near-resonant driving enter the law through the summed amplitudes; an
  // off-resonant pump either carries fitted override values or enters the
  // same law as the drive.
  const double omega_a1 = drive.resonant_rabi_a1 + drive.incoherent_rabi_a1;
  const double omega_a2 = drive.resonant_rabi_a2 + drive.incoherent_rabi_a2;
  auto [g3p, g4p] = deshelling_rates(r, omega_a1, omega_a2);
  if (drive.offres_pump > 0.0) {
    if (drive.offres_gamma_3p) {
      g3p = *drive.offres_gamma_3p;
      g4p = drive.offres_gamma_4p ? *drive.offres_gamma_4p : r.gamma_4p0;
    } else {
      auto [o3, o4] = deshelling_rates(r, drive.offres_pump, drive.offres_pump);
      // The law with equal drive on both pairs; remove the double-counted
      // intrinsic part when adding to the resonant contribution.
      g3p += o3 - r.gamma_3p0;
      g4p += o4 - r.gamma_4p0;
    }
  }
  ops.push_back({idx::ms2, idx::g_p12, 0.5 * g3p});
  ops.push_back({idx::ms2, idx::g_m12, 0.5 * g3p});
  ops.push_back({idx::ms2, idx::g_p32, 0.5 * g4p});
  ops.push_back({idx::ms2, idx::g_m32, 0.5 * g4p});

  // Incoherent near-resonant pumping, two-way per sublevel.
  if (drive.incoherent_rabi_a1 > 0.0) {
    ops.push_back({idx::g_p12, idx::e_p12, drive.incoherent_rabi_a1});
    ops.push_back({idx::g_m12, idx::e_m12, drive.incoherent_rabi_a1});
    ops.push_back({idx::e_p12, idx::g_p12, drive.incoherent_rabi_a1});
    ops.push_back({idx::e_m12, idx::g_m12, drive.incoherent_rabi_a1});
  }
  if (drive.incoherent_rabi_a2 > 0.0) {
    ops.push_back({idx::g_p32, idx::e_p32, drive.incoherent_rabi_a2});
    ops.push_back({idx::g_m32, idx::e_m32, drive.incoherent_rabi_a2});
    ops.push_back({idx::e_p32, idx::g_p32, drive.incoherent_rabi_a2});
    ops.push_back({idx::e_m32, idx::g_m32, drive.incoherent_rabi_a2});
  }

  // 730 nm pump: spin conserving, both directions, each at the pump rate.
  if (drive.offres_pump > 0.0) {
    for (int m = 0; m < 4; ++m) {
      ops.push_back({idx::g_p32 + m, idx::e_p32 + m, drive.offres_pump});
      ops.push_back({idx::e_p32 + m, idx::g_p32 + m, drive.offres_pump});
    }
  }

  std::erase_if(ops, [](const JumpOp& op) { return op.rate <= 0.0; });
  return ops;
}

Mat10 total_hamiltonian(const ModelConfig& config, const DriveState& drive) {
  Mat10 h = Mat10::Zero();
  h.block<4, 4>(0, 0) = config.h_ground.matrix;

  const bool drive_a1 = drive.resonant_rabi_a1 > 0.0;
  const bool drive_a2 = drive.resonant_rabi_a2 > 0.0;

  if (drive_a1 != drive_a2 || (!drive_a1 && !drive_a2)) {
    // Single-laser frame (or no laser: A1 frame by convention; populations
    // and PL are frame invariant).
    const Transition t = drive_a2 ? Transition::A2 : Transition::A1;
    const double rabi = drive_a2 ? drive.resonant_rabi_a2 : drive.resonant_rabi_a1;
    const double det = drive_a2 ? drive.detuning_a2 : drive.detuning_a1;
    const auto rf = spincore::rotating_frame(config.h_ground, config.h_excited,
                                             det, rabi, t);
    h.block<8, 8>(0, 0) = rf.matrix;
    return h;
  }

  // Both lasers in one segment: recenter each excited pair by its own laser.
  Mat4 shifted = config.h_excited.matrix;
  const double ref1 = spincore::transition_reference(config.h_ground,
                                                     config.h_excited,
                                                     Transition::A1);
  const double ref2 = spincore::transition_reference(config.h_ground,
                                                     config.h_excited,
                                                     Transition::A2);
  shifted(1, 1) -= ref1 + drive.detuning_a1;
  shifted(2, 2) -= ref1 + drive.detuning_a1;
  shifted(0, 0) -= ref2 + drive.detuning_a2;
  shifted(3, 3) -= ref2 + drive.detuning_a2;
  h.block<4, 4>(4, 4) = shifted;
  h(idx::g_p12, idx::e_p12) = h(idx::e_p12, idx::g_p12) = 0.5 * drive.resonant_rabi_a1;
  h(idx::g_m12, idx::e_m12) = h(idx::e_m12, idx::g_m12) = 0.5 * drive.resonant_rabi_a1;
  h(idx::g_p32, idx::e_p32) = h(idx::e_p32, idx::g_p32) = 0.5 * drive.resonant_rabi_a2;
  h(idx::g_m32, idx::e_m32) = h(idx::e_m32, idx::g_m32) = 0.5 * drive.resonant_rabi_a2;
  return h;
}

namespace detail {

Mat10 apply_generator(const Mat10& h, const std::vector<JumpOp>& ops,
                      const Mat10& rho) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  Mat10 out = cplx(0.0, -two_pi) * (h * rho - rho * h);

  // Basis-aligned jumps A = |to><from|:
  //   D[A] rho = rate (rho_ff |to><to| - 1/2 {|f><f|, rho}).
  for (const JumpOp& op : ops) {
    out(op.to, op.to) += op.rate * rho(op.from, op.from);
    const double half = 0.5 * op.rate;
    out.row(op.from) -= half * rho.row(op.from);
    out.col(op.from) -= half * rho.col(op.from);
  }
  return out;
}

}  // namespace detail

Mat10 lindblad_rhs(const Mat10& rho, const ModelConfig& config,
                   const DriveState& drive) {
  return detail::apply_generator(total_hamiltonian(config, drive),
                                 jump_operators(config, drive), rho);
}

double rk4_step_bound(const ModelConfig& config, const DriveState& drive) {
  double gamma_max = 0.0;
  Eigen::Matrix<double, 10, 1> outflow = Eigen::Matrix<double, 10, 1>::Zero();
  for (const JumpOp& op : jump_operators(config, drive)) {
    outflow(op.from) += op.rate;
  }
  gamma_max = outflow.maxCoeff();

  const Mat10 h = total_hamiltonian(config, drive);
  const double f_max = h.cwiseAbs().rowwise().sum().maxCoeff();

  double dt = std::numeric_limits<double>::infinity();
  if (gamma_max > 0.0) dt = std::min(dt, 0.05 / gamma_max);
  if (f_max > 0.0) dt = std::min(dt, 0.05 / (2.0 * std::numbers::pi * f_max));
  if (!std::isfinite(dt)) dt = 1.0;  // free evolution of a trivial system
  return dt;
}

DensityMatrix propagate(const DensityMatrix& rho0, const ModelConfig& config,
                        const DriveState& drive, double duration_us,
                        double dt_max_us) {
  if (!(duration_us >= 0.0) || !std::isfinite(duration_us)) {
    throw std::invalid_argument("duration must be finite and >= 0");
  }
  double dt = rk4_step_bound(config, drive);
  if (dt_max_us > 0.0) dt = std::min(dt, dt_max_us);
  if (config.solver.dt_max > 0.0) dt = std::min(dt, config.solver.dt_max);

  DensityMatrix rho = rho0;
  if (duration_us == 0.0) return rho;

  const auto n_steps = static_cast<long>(std::ceil(duration_us / dt));
  const double h = duration_us / static_cast<double>(n_steps);
  const Mat10 ham = total_hamiltonian(config, drive);
  const auto ops = jump_operators(config, drive);
  Mat10 k1, k2, k3, k4;
  for (long s = 0; s < n_steps; ++s) {
    k1 = detail::apply_generator(ham, ops, rho.m);
    k2 = detail::apply_generator(ham, ops, rho.m + 0.5 * h * k1);
    k3 = detail::apply_generator(ham, ops, rho.m + 0.5 * h * k2);
    k4 = detail::apply_generator(ham, ops, rho.m + h * k3);
    rho.m += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  if (!rho.m.allFinite()) {
    throw NumericalError("propagation produced non-finite density matrix");
  }
  return rho;
}

double pl_rate(const Mat10& rho, const ModelConfig& config) {
  double pe = 0.0;
  for (int i = idx::e_p32; i <= idx::e_m32; ++i) pe += rho(i, i).real();
  return config.efficiency * config.rates.gamma_r * pe +
         config.dark_rate_hz * 1e-6;
}

double pl_rate(const DensityMatrix& rho, const ModelConfig& config) {
  return pl_rate(rho.m, config);
}

}  // namespace quartet::dynamics
