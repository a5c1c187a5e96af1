#include "quartet/lineshape.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <unsupported/Eigen/FFT>

namespace quartet::lineshape {

namespace {

constexpr double kAmuKg = 1.66053906660e-27;
constexpr double kAngstrom2M2 = 1e-20;
constexpr double kMevJ = 1.602176634e-22;
constexpr double kHbarJs = 1.054571817e-34;
constexpr double kHbarMevS = 6.582119569e-13;  // hbar in meV s

double gaussian(double e, double mu, double sigma) {
  const double z = (e - mu) / sigma;
  return std::exp(-0.5 * z * z) / (std::sqrt(2.0 * std::numbers::pi) * sigma);
}

}  // namespace

void PhononData::validate() const {
  for (const auto& m : modes) {
    if (!(m.omega_mev > 0.0)) {
      throw std::invalid_argument("phonon mode energy must be positive");
    }
    if (!(m.sigma_mev > 0.0)) {
      throw std::invalid_argument("phonon mode broadening must be positive");
    }
    if (!(m.s_k >= 0.0) || !std::isfinite(m.s_k)) {
      throw std::invalid_argument("partial Huang-Rhys factor must be >= 0");
    }
  }
}

double PhononData::total_hr() const {
  double s = 0.0;
  for (const auto& m : modes) s += m.s_k;
  return s;
}

PhononData synthetic_modes() {
  // Loosely diamond-like acoustic-to-optical ladder; total HR factor 0.90.
  PhononData d;
  d.modes = {{40.0, 3.0, 0.08},
             {65.0, 4.0, 0.22},
             {90.0, 5.0, 0.18},
             {120.0, 5.0, 0.30},
             {155.0, 6.0, 0.12}};
  return d;
}

double hr_unit() {
  return kAmuKg * kAngstrom2M2 * kMevJ / (2.0 * kHbarJs * kHbarJs);
}

std::vector<double> partial_hr_factors(
    const Eigen::VectorXd& displacement_angstrom,
    const std::vector<double>& masses_amu,
    const std::vector<Eigen::VectorXd>& mode_vectors,
    const std::vector<double>& omegas_mev) {
  const Eigen::Index n3 = displacement_angstrom.size();
  if (n3 != 3 * static_cast<Eigen::Index>(masses_amu.size())) {
    throw std::invalid_argument("displacement length must be 3x atom count");
  }
  if (mode_vectors.size() != omegas_mev.size()) {
    throw std::invalid_argument("one mode energy per mode vector required");
  }

  // Mass-weighted displacement, amu^1/2 angstrom per coordinate.
  Eigen::VectorXd weighted(n3);
  for (Eigen::Index i = 0; i < n3; ++i) {
    const double m = masses_amu[static_cast<size_t>(i / 3)];
    if (!(m > 0.0)) throw std::invalid_argument("atomic mass must be positive");
    weighted(i) = std::sqrt(m) * displacement_angstrom(i);
  }

  const double unit = hr_unit();
  std::vector<double> s(mode_vectors.size());
  for (size_t k = 0; k < mode_vectors.size(); ++k) {
    if (mode_vectors[k].size() != n3) {
      throw std::invalid_argument("mode vector dimension mismatch");
    }
    if (!(omegas_mev[k] > 0.0)) {
      throw std::invalid_argument("mode energy must be positive");
    }
    const double q = weighted.dot(mode_vectors[k]);
    s[k] = unit * q * q * omegas_mev[k];
  }
  return s;
}

std::vector<double> spectral_density(const PhononData& modes,
                                     const std::vector<double>& grid_mev,
                                     std::vector<std::string>* warnings) {
  modes.validate();
  if (grid_mev.empty()) return {};
  const double lo = grid_mev.front();
  const double hi = grid_mev.back();
  for (const auto& m : modes.modes) {
    if (m.omega_mev - 5.0 * m.sigma_mev < lo ||
        m.omega_mev + 5.0 * m.sigma_mev > hi) {
      if (warnings) {
        warnings->push_back(
            "spectral density grid does not cover every mode +-5 sigma; the "
            "integral will miss weight");
      }
      break;
    }
  }
  std::vector<double> out(grid_mev.size(), 0.0);
  for (size_t i = 0; i < grid_mev.size(); ++i) {
    for (const auto& m : modes.modes) {
      out[i] += m.s_k * gaussian(grid_mev[i], m.omega_mev, m.sigma_mev);
    }
  }
  return out;
}

double OverlapFunction::value_at(double energy_mev) const {
  if (energies.size() < 2) throw std::out_of_range("overlap grid is empty");
  if (energy_mev < energies.front() || energy_mev > energies.back()) {
    throw std::out_of_range("energy outside the overlap grid");
  }
  const auto it =
      std::upper_bound(energies.begin(), energies.end(), energy_mev);
  const size_t j = std::min<size_t>(static_cast<size_t>(it - energies.begin()),
                                    energies.size() - 1);
  const size_t i = j == 0 ? 0 : j - 1;
  if (i == j) return a[i];
  const double w = (energy_mev - energies[i]) / (energies[j] - energies[i]);
  return a[i] * (1.0 - w) + a[j] * w;
}

double OverlapFunction::integral() const {
  if (energies.size() < 2) return 0.0;
  const double de = energies[1] - energies[0];
  double s = 0.0;
  for (double v : a) s += v;
  return s * de;
}

double OverlapFunction::first_moment() const {
  if (energies.size() < 2) return 0.0;
  const double de = energies[1] - energies[0];
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += energies[i] * a[i];
  return s * de;
}

OverlapFunction overlap_function(const PhononData& modes, double eta_mev,
                                 const FftOptions& options) {
  modes.validate();
  if (!(eta_mev > 0.0)) {
    throw std::invalid_argument("homogeneous broadening eta must be positive");
  }

  double omega_top = 0.0;   // highest broadened one-phonon energy
  double sigma_max = 0.0;
  for (const auto& m : modes.modes) {
    omega_top = std::max(omega_top, m.omega_mev + 10.0 * m.sigma_mev);
    sigma_max = std::max(sigma_max, m.sigma_mev);
  }
  const double s_tot = modes.total_hr();

  // Multi-phonon extent: Poisson weights with mean s_tot are negligible
  // beyond ~s_tot + 8 sqrt(s_tot) + 12 phonons. The negative side only
  // carries Lorentzian wings; 1e-3 normalization needs ~700 eta of tail,
  // which the DFT sum identity supplies through aliasing (the emitted grid
  // integral is exact by construction), but keeping real width there keeps
  // per-point values clean.
  const double n_ph = s_tot + 8.0 * std::sqrt(std::max(s_tot, 1e-12)) + 12.0;
  const double e_pos = std::max(n_ph * omega_top, 200.0 * eta_mev);
  const double e_neg = std::max(100.0 * eta_mev, 10.0 * sigma_max);
  const double span = e_pos + e_neg;

  double dt = 2.0 * std::numbers::pi / span;
  double t_window = options.t_window > 0.0 ? options.t_window : 20.0 / eta_mev;
  if (options.t_window > 0.0 && options.n_time > 0) {
    const double dt_user = options.t_window / options.n_time;
    if (dt_user > 2.0 * std::numbers::pi / (2.0 * omega_top + 20.0 * eta_mev)) {
      throw std::invalid_argument(
          "time grid too coarse: sampling violates Nyquist for the mode "
          "spectrum (aliasing)");
    }
    dt = dt_user;
  }

  size_t n = 1;
  const double n_needed = t_window / dt;
  while (static_cast<double>(n) < n_needed) n <<= 1;
  if (options.n_time > 0) {
    size_t nu = 1;
    while (nu < static_cast<size_t>(options.n_time)) nu <<= 1;
    n = std::max(n, nu);
  }
  dt = t_window / static_cast<double>(n);
  // Round the step back down so the final grid still satisfies Nyquist.
  while (2.0 * std::numbers::pi / dt < span) {
    n <<= 1;
    dt = t_window / static_cast<double>(n);
  }

  // G(t_j) on the one-sided grid; the t<0 half is supplied by Hermitian
  // symmetry, A(E) = (1/pi) Re int_0^inf G(t) e^{-iEt} dt.
  std::vector<std::complex<double>> g(n);
  for (size_t j = 0; j < n; ++j) {
    const double t = dt * static_cast<double>(j);
    std::complex<double> st(0.0, 0.0);
    for (const auto& m : modes.modes) {
      const double damp = m.sigma_mev * t;
      st += m.s_k * std::exp(-0.5 * damp * damp) *
            std::exp(std::complex<double>(0.0, m.omega_mev * t));
    }
    g[j] = std::exp(st - s_tot) * std::exp(-eta_mev * t);
  }
  g[0] *= 0.5;  // trapezoid weight; makes sum_m A_m dE = 1 a DFT identity

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spectrum;
  fft.fwd(spectrum, g);

  // Reorder to ascending energy: bins m > n/2 are negative frequencies.
  const double de = 2.0 * std::numbers::pi / (dt * static_cast<double>(n));
  OverlapFunction out;
  out.eta_mev = eta_mev;
  out.energies.resize(n);
  out.a.resize(n);
  const size_t half = n / 2;
  for (size_t m = 0; m < n; ++m) {
    const size_t src = (m + half) % n;
    const double freq = (static_cast<double>(m) - static_cast<double>(half)) * de;
    out.energies[m] = freq;
    out.a[m] = dt / std::numbers::pi * spectrum[src].real();
  }
  return out;
}

double isc_rate_mhz(double lambda_soc_mev, double delta_if_mev,
                    const OverlapFunction& overlap) {
  const double a = overlap.value_at(delta_if_mev);  // 1/meV
  const double rate_per_s = 2.0 * std::numbers::pi / kHbarMevS *
                            lambda_soc_mev * lambda_soc_mev * a;
  return rate_per_s * 1e-6;
}

}  // namespace quartet::lineshape
