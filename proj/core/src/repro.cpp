#include "quartet/repro.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "quartet/basis.hpp"
#include "quartet/dynamics.hpp"
#include "quartet/estimate.hpp"
#include "quartet/lineshape.hpp"
#include "quartet/presets.hpp"
#include "quartet/ratemodel.hpp"
#include "quartet/sequences.hpp"
#include "quartet/spincore.hpp"
#include "quartet/superop.hpp"

namespace quartet::repro {

namespace {

using dynamics::DriveState;
using dynamics::ModelConfig;

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  }
};

std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof buf, f, args);
  va_end(args);
  return buf;
}

bool within_rel(double value, double target, double rel) {
  return std::abs(value - target) <= rel * std::abs(target);
}

// Pair-summed populations in PopulationVector order
// (g12, g32, e12, e32, ms1, ms2, ms3, spare).
std::array<double, 8> pair_bins(const Mat10& rho) {
  return {rho(idx::g_p12, idx::g_p12).real() + rho(idx::g_m12, idx::g_m12).real(),
          rho(idx::g_p32, idx::g_p32).real() + rho(idx::g_m32, idx::g_m32).real(),
          rho(idx::e_p12, idx::e_p12).real() + rho(idx::e_m12, idx::e_m12).real(),
          rho(idx::e_p32, idx::e_p32).real() + rho(idx::e_m32, idx::e_m32).real(),
          rho(idx::ms1, idx::ms1).real(),
          rho(idx::ms2, idx::ms2).real(),
          0.0,
          0.0};
}

}  // namespace

CheckResult check_lifetimes() {
  Timer timer;
  CheckResult r{1, "excited-state lifetimes"};

  const auto config = presets::model("table2_no_strain");
  const auto a1 = sequences::lifetime_experiment(config, Transition::A1);
  const auto a2 = sequences::lifetime_experiment(config, Transition::A2);
  const double tau1_ns = 1e3 * a1.tau_us;
  const double tau2_ns = 1e3 * a2.tau_us;

  r.runtime_s = timer.seconds();
  r.pass = within_rel(tau1_ns, 6.01, 0.02) && within_rel(tau2_ns, 11.06, 0.02) &&
           r.runtime_s < 1.0;
  r.details = fmt("tau(+-1/2 pair) %.3f ns vs 6.01 +-2%%, "
                  "tau(+-3/2 pair) %.3f ns vs 11.06 +-2%%, limit 1 s",
                  tau1_ns, tau2_ns);
  return r;
}

CheckResult check_metastable_lifetimes() {
  Timer timer;
  CheckResult r{2, "metastable relaxation constants"};

  struct Case {
    const char* preset;
    double expect_ns;
    double step_us;  // 16 pump-probe delays at this spacing
  };
  const Case cases[] = {{"table2_no_strain", 246.91, 0.1},
                        {"table2_strain", 833.33, 0.3}};

  DriveState pump;
  pump.resonant_rabi_a1 = sequences::rabi_mhz_at_20nw;
  pump.resonant_rabi_a2 = sequences::rabi_mhz_at_20nw;

  double taus_ns[2] = {0, 0};
  bool ok = true;
  for (int c = 0; c < 2; ++c) {
    const auto config = presets::model(cases[c].preset);
    std::vector<double> delays;
    for (int k = 1; k <= 16; ++k) delays.push_back(cases[c].step_us * k);
    const auto res = sequences::metastable_decay_experiment(config, pump, delays);
    taus_ns[c] = 1e3 * res.tau_us;
    ok = ok && within_rel(taus_ns[c], cases[c].expect_ns, 0.02);
  }

  r.runtime_s = timer.seconds();
  r.pass = ok && r.runtime_s < 10.0;
  r.details = fmt("recovery %.1f ns vs 246.91 +-2%% (plain), "
                  "%.1f ns vs 833.33 +-2%% (deformed), limit 10 s",
                  taus_ns[0], taus_ns[1]);
  return r;
}

CheckResult check_repolarization() {
  Timer timer;
  CheckResult r{3, "off-resonant repolarization fidelity"};

  struct Case {
    const char* rates;
    const char* strain;
    const char* pump;
    double expect_p12;
  };
  const Case cases[] = {
      {"table2_no_strain", "", "pump730_50uw_no_strain", 0.60},
      {"table2_strain", "table1_strain", "pump730_50uw_strain", 0.53}};

  const std::vector<double> durations = {0.5, 1, 2, 4, 8, 16, 32, 64, 128, 256, 400};

  double p12[2] = {0, 0};
  bool ok = true;
  for (int c = 0; c < 2; ++c) {
    const auto config = presets::model(cases[c].rates, cases[c].strain);
    const auto pump = presets::pump(cases[c].pump);
    const auto res = sequences::repolarization_experiment(config, Transition::A2,
                                                          pump, durations);
    p12[c] = res.p_12_final;
    ok = ok && std::abs(p12[c] - cases[c].expect_p12) <= 0.03;
  }

  r.runtime_s = timer.seconds();
  r.pass = ok && r.runtime_s < 30.0;
  r.details = fmt("steady p12/p32 %.3f/%.3f vs 0.60/0.40 +-0.03 (plain), "
                  "%.3f/%.3f vs 0.53/0.47 +-0.03 (deformed), limit 30 s",
                  p12[0], 1 - p12[0], p12[1], 1 - p12[1]);
  return r;
}

CheckResult check_emission_map() {
  Timer timer;
  CheckResult r{4, "emission change at the deformed branching point"};

  // Everything except the MS1 branching rates stays at the plain-emitter
  // values; the map evaluates the deformed point against the plain reference.
  const auto base = presets::model("table2_no_strain");
  const sequences::MapOptions opts;

  auto point = [&](sequences::Excitation exc) {
    return sequences::emission_change_map(base, {1.11}, {0.09}, exc, opts)(0, 0);
  };
  const double d_a1 = point(sequences::Excitation::a1);
  const double d_a2 = point(sequences::Excitation::a2);
  const double d_or = point(sequences::Excitation::off_resonant);

  r.runtime_s = timer.seconds();
  r.pass = std::abs(d_a1 - (-5.7)) <= 1.5 && std::abs(d_a2) < 1.5 &&
           std::abs(d_or - (-5.1)) <= 1.5 && r.runtime_s < 60.0;
  r.details = fmt("+-1/2 window %+.2f%% vs -5.7 +-1.5, +-3/2 window %+.2f%% "
                  "(|x| < 1.5), off-resonant %+.2f%% vs -5.1 +-1.5, limit 60 s",
                  d_a1, d_a2, d_or);
  return r;
}

CheckResult check_visibility() {
  Timer timer;
  CheckResult r{5, "readout visibility and dark correction"};

  const auto config = presets::model("table2_no_strain");
  const auto res = sequences::visibility_experiment(config, Transition::A1);

  // The correction formula must be reproduced bit for bit on synthetic
  // window pairs (and on the simulated pair itself).
  bool formula = res.v_dark_corrected ==
                 sequences::dark_corrected_visibility(res.pl_a1, res.pl_a2,
                                                      res.pl_dark);
  const double synth[][3] = {{3.0, 97.0, 1.0}, {10.0, 5.0, 2.0}, {0.62, 0.18, 0.04}};
  for (const auto& s : synth) {
    const double den = s[0] + s[1] - 2.0 * s[2];
    const double expect = std::min(std::abs(s[1] - s[0]) / den, 1.0);
    formula = formula &&
              sequences::dark_corrected_visibility(s[0], s[1], s[2]) == expect;
  }

  r.runtime_s = timer.seconds();
  r.pass = res.v >= 0.93 && res.v_dark_corrected >= 0.96 &&
           res.v_dark_corrected >= res.v && formula;
  r.details = fmt("raw V %.4f (>= 0.93), corrected %.4f (>= 0.96 and >= raw), "
                  "correction formula exact on synthetic pairs: %s",
                  res.v, res.v_dark_corrected, formula ? "yes" : "no");
  return r;
}

CheckResult check_deshelling_linearity() {
  Timer timer;
  CheckResult r{6, "deshelling law linearity and efficiency round trip"};

  const auto truth = presets::model("table2_no_strain");
  sequences::DepletionOptions dopt;
  dopt.init_pump = presets::pump("pump730_50uw_no_strain");
  dopt.dark_us = 2.0;
  dopt.window_us = 40.0;
  dopt.samples = 40;

  const std::vector<double> rabis = {1, 2, 3, 4, 5, 6, 7};
  const auto data =
      sequences::spin_depletion_experiment(truth, Transition::A1, rabis, dopt);

  estimate::NelderMeadOptions nm;
  nm.ftol = 1e-9;
  nm.xtol = 1e-10;
  nm.max_evals = 500;

  // Per-amplitude refit of constant MS2 -> ground rates: freezing beta at
  // zero makes gamma_3p0/gamma_4p0 the effective window rates.
  std::vector<double> g3_eff, g4_eff;
  for (size_t i = 0; i < rabis.size(); ++i) {
    estimate::FitProblem p;
    p.baseline = truth;
    p.baseline.rates.beta = 0.0;
    p.sigma.rule = estimate::SigmaModel::Rule::relative;
    estimate::ExperimentSpec spec;
    spec.kind = estimate::ExperimentSpec::Kind::spin_depletion;
    spec.transition = Transition::A1;
    spec.rabis_mhz = {rabis[i]};
    spec.depletion = dopt;
    p.datasets.push_back({{data[i]}, spec});
    p.free_params = {{"gamma_3p0", 0.15, 0.0, 1.5}, {"gamma_4p0", 0.15, 0.0, 1.5}};
    const auto fit = estimate::rate_fit(p, nm);
    g3_eff.push_back(fit.best(0));
    g4_eff.push_back(fit.best(1));
  }

  const auto lf3 = estimate::linear_fit(rabis, g3_eff);
  const auto lf4 = estimate::linear_fit(rabis, g4_eff);

  // Efficiency round trip on the same traces with the full law active.
  estimate::FitProblem pb;
  pb.baseline = truth;
  pb.sigma.rule = estimate::SigmaModel::Rule::relative;
  estimate::ExperimentSpec all;
  all.kind = estimate::ExperimentSpec::Kind::spin_depletion;
  all.transition = Transition::A1;
  all.rabis_mhz = rabis;
  all.depletion = dopt;
  pb.datasets.push_back({data, all});
  pb.free_params = {{"beta", 0.10, 0.02, 0.35}};
  estimate::NelderMeadOptions nmb = nm;
  nmb.max_evals = 200;
  const auto bfit = estimate::rate_fit(pb, nmb);
  const double beta_hat = bfit.best(0);

  r.runtime_s = timer.seconds();
  r.pass = std::abs(lf3.intercept) < 0.05 && std::abs(lf4.intercept) < 0.05 &&
           lf3.r2 >= 0.99 && lf4.r2 >= 0.99 &&
           within_rel(beta_hat, 0.1358, 0.15);
  r.details = fmt("gamma_3' intercept %+.4f, gamma_4' intercept %+.4f "
                  "(|x| < 0.05/us), r2 %.4f/%.4f (>= 0.99), beta %.4f vs "
                  "0.1358 +-15%%",
                  lf3.intercept, lf4.intercept, lf3.r2, lf4.r2, beta_hat);
  return r;
}

CheckResult check_rate_equation_equivalence() {
  Timer timer;
  CheckResult r{7, "rate-equation cross-check"};

  const Eigen::VectorXd x0 =
      superop::to_real_vector(dynamics::DensityMatrix::mixed_ground().m);
  const auto a0 = ratemodel::PopulationVector::mixed_ground().as_array();
  Eigen::Matrix<double, 8, 1> p0;
  for (int i = 0; i < 8; ++i) p0(i) = a0[i];

  auto max_dev = [&](const superop::SegmentGenerator& gen,
                     const Eigen::Matrix<double, 8, 8>& m,
                     std::initializer_list<double> times) {
    double dev = 0.0;
    for (double t : times) {
      const Mat10 rho = superop::from_real_vector(gen.apply(x0, t));
      const auto bins = pair_bins(rho);
      const Eigen::Matrix<double, 8, 1> p = (m * t).exp() * p0;
      for (int i = 0; i < 8; ++i) dev = std::max(dev, std::abs(bins[i] - p(i)));
    }
    return dev;
  };

  // Incoherent pumping with the bath channel off: the Lindblad diagonal and
  // the pair-summed rate equations are the same linear system.
  auto config = presets::model("table2_no_strain");
  config.rates.beta = 0.0;
  DriveState inc;
  inc.incoherent_rabi_a1 = 2.0;
  inc.incoherent_rabi_a2 = 1.0;
  superop::SegmentGenerator lind_inc(config, inc);
  const auto gen_inc = ratemodel::full_rate_matrix(
      config.rates, 2.0, 1.0, ratemodel::default_big_gamma(config.rates));
  const double dev_inc = max_dev(lind_inc, gen_inc, {0.1, 0.5, 2.0, 10.0});

  // Weak coherent drive against the adiabatically mapped cycling rate
  // W = (2 pi Omega_c)^2 / BigGamma_1. MS2 rates are frozen on the rate side
  // at the segment-constant values the Lindblad law applies, so only the
  // optical cycle differs between the two descriptions.
  const auto coh_config = presets::model("table2_no_strain");
  const double omega_c = 2.0;
  DriveState coh;
  coh.resonant_rabi_a1 = omega_c;
  superop::SegmentGenerator lind_coh(coh_config, coh);

  auto mapped = coh_config.rates;
  const auto [g3e, g4e] = dynamics::deshelling_rates(coh_config.rates, omega_c, 0.0);
  mapped.gamma_3p0 = g3e;
  mapped.gamma_4p0 = g4e;
  mapped.beta = 0.0;
  const double w =
      std::pow(2.0 * std::numbers::pi * omega_c, 2) / coh_config.rates.big_gamma_1();
  const auto gen_coh = ratemodel::full_rate_matrix(
      mapped, w, 0.0, ratemodel::default_big_gamma(mapped));
  const double dev_coh = max_dev(lind_coh, gen_coh, {0.5, 1.0, 2.0, 5.0});

  const double drive_ratio =
      2.0 * std::numbers::pi * omega_c / coh_config.rates.big_gamma_1();

  r.runtime_s = timer.seconds();
  r.pass = dev_inc < 1e-6 && dev_coh < 0.05 && r.runtime_s < 10.0;
  r.details = fmt("incoherent max population deviation %.2e (< 1e-6); coherent "
                  "vs mapped W %.4f (< 0.05) at 2 pi Omega / Gamma = %.3f; "
                  "limit 10 s",
                  dev_inc, dev_coh, drive_ratio);
  return r;
}

CheckResult check_strain_symmetries() {
  Timer timer;
  CheckResult r{8, "deformation symmetries and line calibration"};

  std::mt19937_64 rng(0x5712u);
  std::uniform_real_distribution<double> upz(-5.0, 5.0);
  std::uniform_real_distribution<double> uamp(0.0, 6.0);
  std::uniform_real_distribution<double> uph(0.0, 2.0 * std::numbers::pi);

  const auto& ops = spincore::spin_ops();
  const Mat4 ux = (cplx(0.0, -std::numbers::pi) * ops.sx).exp();
  const double ms[4] = {1.5, 0.5, -0.5, -1.5};

  double worst = 0.0;
  for (int draw = 0; draw < 1000; ++draw) {
    const double piz = upz(rng), p1 = uamp(rng), p2 = uamp(rng);
    const double t1 = uph(rng), t2 = uph(rng), phi = uph(rng);

    const Mat4 h =
        spincore::strain_hamiltonian_two_phase(35.0, piz, p1, t1, p2, t2);

    // Transverse-axis rotation: phases advance as (t1 + phi, t2 + 2 phi).
    Mat4 uphi = Mat4::Zero();
    for (int j = 0; j < 4; ++j) uphi(j, j) = std::exp(cplx(0.0, -phi * ms[j]));
    const Mat4 hg = spincore::strain_hamiltonian_two_phase(
        35.0, piz, p1, t1 + phi, p2, t2 + 2.0 * phi);
    worst = std::max(worst,
                     (uphi * h * uphi.adjoint() - hg).cwiseAbs().maxCoeff());

    // Spin flip about x: (pi_1, pi_2, t1, t2) -> (-pi_1, pi_2, -t1, -t2).
    const Mat4 hx =
        spincore::strain_hamiltonian_two_phase(35.0, piz, -p1, -t1, p2, -t2);
    worst = std::max(worst, (ux * h * ux.adjoint() - hx).cwiseAbs().maxCoeff());

    // The phase freedom never moves the spectrum.
    Eigen::SelfAdjointEigenSolver<Mat4> e0(h), eg(hg), ex(hx);
    worst = std::max(
        worst, (e0.eigenvalues() - eg.eigenvalues()).cwiseAbs().maxCoeff());
    worst = std::max(
        worst, (e0.eigenvalues() - ex.eigenvalues()).cwiseAbs().maxCoeff());
  }

  // Line-position calibration: no deformation reads exactly the zero-field
  // splitting; a purely axial shift moves it by exactly twice the amplitude.
  const auto h70 = spincore::strain_hamiltonian(
      spincore::zfs_prefactor_from_splitting(70.0), {});
  const double err70 = std::abs(spincore::odmr_frequency(h70) - 70.0);
  double err_axial = 0.0;
  for (int draw = 0; draw < 100; ++draw) {
    spincore::StrainParams s;
    s.pi_z = upz(rng);
    const auto h = spincore::strain_hamiltonian(35.0, s);
    err_axial = std::max(
        err_axial,
        std::abs(spincore::odmr_frequency(h) - (70.0 + 2.0 * s.pi_z)));
  }

  r.runtime_s = timer.seconds();
  r.pass = worst < 1e-10 && err70 < 1e-9 && err_axial < 1e-9;
  r.details = fmt("worst symmetry residual %.1e over 1000 draws (< 1e-10); "
                  "unstrained line off by %.1e MHz, axial-shift law off by "
                  "%.1e MHz (< 1e-9)",
                  worst, err70, err_axial);
  return r;
}

CheckResult check_round_trip_estimation() {
  Timer timer;
  CheckResult r{9, "round-trip rate estimation with intervals"};
  using estimate::ExperimentSpec;

  const auto truth = presets::model("table2_no_strain");

  estimate::FitProblem problem;
  problem.baseline = truth;
  problem.sigma.rule = estimate::SigmaModel::Rule::relative;
  // Per-trace scale of the accepted mismatch; chosen at the counting-noise
  // level of the measured traces so the accept-reject box is populated.
  problem.sigma.relative = 0.08;

  {
    ExperimentSpec e;
    e.kind = ExperimentSpec::Kind::lifetime;
    e.transition = Transition::A1;
    e.lifetime.samples = 28;
    problem.datasets.push_back({estimate::simulate_experiment(truth, e), e});
    e.transition = Transition::A2;
    problem.datasets.push_back({estimate::simulate_experiment(truth, e), e});
  }
  {
    ExperimentSpec e;
    e.kind = ExperimentSpec::Kind::metastable_decay;
    e.pump.resonant_rabi_a1 = sequences::rabi_mhz_at_20nw;
    e.pump.resonant_rabi_a2 = sequences::rabi_mhz_at_20nw;
    e.metastable.settle_us = 0.12;
    for (int k = 1; k <= 12; ++k) e.delays_us.push_back(0.12 * k);
    for (int k = 1; k <= 4; ++k) e.delays_us.push_back(1.44 + 5.0 * k);
    problem.datasets.push_back({estimate::simulate_experiment(truth, e), e});
  }
  {
    ExperimentSpec e;
    e.kind = ExperimentSpec::Kind::repolarization;
    e.transition = Transition::A2;  // resonant initialization pair
    e.pump.offres_pump = 0.60;      // law-driven deshelling, no overrides
    e.durations_us = {5, 10, 15, 20, 25, 30, 60, 90, 120};
    problem.datasets.push_back({estimate::simulate_experiment(truth, e), e});
  }
  {
    ExperimentSpec e;
    e.kind = ExperimentSpec::Kind::spin_depletion;
    e.transition = Transition::A1;
    e.rabis_mhz = {3.0, 6.0};
    e.depletion.init_pump.offres_pump = 0.60;
    e.depletion.dark_us = 2.0;
    e.depletion.window_us = 40.0;
    e.depletion.samples = 26;
    problem.datasets.push_back({estimate::simulate_experiment(truth, e), e});
  }

  struct Start {
    const char* name;
    double truth;
    double init;
    double lo;
    double hi;
  };
  const std::vector<Start> starts = {
      {"gamma_r", 56.39, 56.39 * 1.10, 30.0, 90.0},
      {"gamma_1", 83.11, 83.11 * 0.92, 40.0, 130.0},
      {"gamma_1p", 26.89, 26.89 * 1.08, 10.0, 60.0},
      {"gamma_2", 6.70, 6.70 * 0.90, 2.0, 15.0},
      {"gamma_2p", 27.33, 27.33 * 1.10, 10.0, 60.0},
      {"gamma_3", 3.81, 3.81 * 0.93, 1.5, 8.0},
      {"gamma_4", 0.24, 0.24 * 1.12, 0.05, 0.8},
      {"gamma_3p0", 0.00, 0.01, 0.0, 0.05},
      {"gamma_4p0", 0.04, 0.04 * 1.15, 0.005, 0.15},
      {"beta", 0.1358, 0.1358 * 0.90, 0.05, 0.30},
  };
  for (const auto& s : starts) {
    problem.free_params.push_back({s.name, s.init, s.lo, s.hi});
  }

  estimate::NelderMeadOptions nm;
  nm.ftol = 1e-12;
  nm.xtol = 1e-11;
  nm.max_evals = 6000;
  nm.restarts = 2;
  const auto fit = estimate::rate_fit(problem, nm);

  // Recovery within 2%; the one rate that is exactly zero gets an absolute
  // floor of 0.002/us instead of a relative band.
  bool recovered = true;
  double worst_rel = 0.0;
  for (size_t i = 0; i < starts.size(); ++i) {
    const double err = std::abs(fit.best(static_cast<Eigen::Index>(i)) -
                                starts[i].truth);
    recovered = recovered && err <= std::max(0.02 * starts[i].truth, 0.002);
    if (starts[i].truth > 0.0) {
      worst_rel = std::max(worst_rel, err / starts[i].truth);
    }
  }

  Timer abc_timer;
  estimate::ABCConfig abc;
  abc.seed = 7;
  const auto intervals = estimate::abc_errors(problem, fit, abc);
  const double abc_s = abc_timer.seconds();

  auto flagged = [&](const std::string& name) {
    for (const auto& wmsg : intervals.warnings) {
      if (wmsg.find("parameter " + name + " is unidentifiable") !=
          std::string::npos) {
        return true;
      }
    }
    return false;
  };
  int covered = 0, identifiable = 0;
  bool contained = true;
  for (const auto& s : starts) {
    if (flagged(s.name)) continue;
    ++identifiable;
    const auto ci = intervals.ci68.at(s.name);
    const bool in = s.truth >= ci.first - 1e-12 && s.truth <= ci.second + 1e-12;
    covered += in ? 1 : 0;
    contained = contained && in;
  }

  r.runtime_s = timer.seconds();
  r.pass = recovered && contained && identifiable > 0 &&
           !intervals.accepted.empty() && abc_s < 600.0;
  r.details = fmt("worst rate error %.2f%% (tol 2%%, absolute floor 0.002/us "
                  "on the zero rate: %s); 68%% intervals hold truth for %d of "
                  "%d identifiable; accepted %zu/9000; resampling %.0f s "
                  "(limit 600); fit evals %d",
                  100.0 * worst_rel, recovered ? "met" : "missed", covered,
                  identifiable, intervals.accepted.size(), abc_s, fit.evals);
  return r;
}

CheckResult check_lineshape() {
  Timer timer;
  CheckResult r{10, "vibronic overlap oracle"};

  // One broadened mode: the emission sidebands carry Poisson weights
  // exp(-S) S^n / n! around multiples of the mode energy.
  lineshape::PhononData data;
  data.modes = {{60.0, 2.0, 1.0}};
  const double eta = 0.5;
  const auto ov = lineshape::overlap_function(data, eta);

  const double de = ov.energies[1] - ov.energies[0];
  auto window_weight = [&](int n) {
    const double lo = 60.0 * n - 30.0, hi = 60.0 * n + 30.0;
    double w = 0.0;
    for (size_t i = 0; i < ov.energies.size(); ++i) {
      if (ov.energies[i] >= lo && ov.energies[i] < hi) w += ov.a[i] * de;
    }
    return w;
  };
  double worst_weight = 0.0;
  double fact = 1.0;
  for (int n = 0; n <= 3; ++n) {
    if (n > 1) fact *= n;
    const double expect = std::exp(-1.0) / fact;
    worst_weight =
        std::max(worst_weight, std::abs(window_weight(n) / expect - 1.0));
  }

  const double norm_err = std::abs(ov.integral() - 1.0);
  // The mean of A(E) is the coupling-weighted mode energy, 60 meV here.
  const double moment_err = std::abs(ov.first_moment() / 60.0 - 1.0);

  r.runtime_s = timer.seconds();
  r.pass = worst_weight <= 0.02 && norm_err <= 1e-3 && moment_err <= 0.01;
  r.details = fmt("worst sideband weight error %.2f%% (<= 2%%), normalization "
                  "off by %.1e (<= 1e-3), first moment off by %.2f%% (<= 1%%)",
                  100.0 * worst_weight, norm_err, 100.0 * moment_err);
  return r;
}

CheckResult check_coverage_note() {
  CheckResult r{11, "scope note"};
  r.pass = true;
  r.details =
      "informational: the suite covers dynamics, protocols, estimation, and "
      "the vibronic overlap oracle; field-dependent line maps, absolute "
      "photon-count levels, and first-principles mode tables remain external "
      "inputs carried by the preset layer";
  return r;
}

std::vector<CheckResult> run_all(std::ostream* progress) {
  using Fn = CheckResult (*)();
  const Fn checks[] = {check_lifetimes,
                       check_metastable_lifetimes,
                       check_repolarization,
                       check_emission_map,
                       check_visibility,
                       check_deshelling_linearity,
                       check_rate_equation_equivalence,
                       check_strain_symmetries,
                       check_round_trip_estimation,
                       check_lineshape,
                       check_coverage_note};
  std::vector<CheckResult> out;
  out.reserve(std::size(checks));
  for (const auto& fn : checks) {
    out.push_back(fn());
    if (progress) *progress << format_line(out.back()) << std::endl;
  }
  return out;
}

std::string format_line(const CheckResult& r) {
  return fmt("[%s] %2d %s (%.1f s): %s", r.pass ? "PASS" : "FAIL", r.number,
             r.name.c_str(), r.runtime_s, r.details.c_str());
}

bool all_passed(const std::vector<CheckResult>& results) {
  return std::all_of(results.begin(), results.end(),
                     [](const CheckResult& r) { return r.pass; });
}

}  // namespace quartet::repro
