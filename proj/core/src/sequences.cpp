#include "quartet/sequences.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "quartet/superop.hpp"

namespace quartet::sequences {

namespace {

using dynamics::DensityMatrix;
using dynamics::DriveState;
using dynamics::ModelConfig;
using superop::SegmentGenerator;

double dark_per_us(const ModelConfig& config) {
  return config.dark_rate_hz * 1e-6;
}

// Integrated PL over a window plus the post-window state, exact.
struct WindowResult {
  Eigen::VectorXd x_end;
  double counts;
};

WindowResult integrate_window(const ModelConfig& config, const DriveState& drive,
                              const Eigen::VectorXd& x0, double duration_us) {
  SegmentGenerator gen(config, drive);
  auto out = gen.propagate_with_integral(x0, duration_us);
  return {out.x_end, out.integral + dark_per_us(config) * duration_us};
}

Eigen::VectorXd steady_vector(const ModelConfig& config, const DriveState& drive) {
  SegmentGenerator gen(config, drive);
  return gen.steady_state();
}

}  // namespace

void PulseSequence::validate() const {
  if (segments.empty()) {
    throw std::invalid_argument("sequence must contain at least one segment");
  }
  for (const auto& s : segments) {
    if (!(s.duration_us > 0.0) || !std::isfinite(s.duration_us)) {
      throw std::invalid_argument("segment duration must be finite and > 0");
    }
    s.drive.validate();
  }
  if (!(sample_dt_us > 0.0)) {
    throw std::invalid_argument("sample_dt must be > 0");
  }
  if (initial == InitialState::custom) custom_initial.validate();
}

void Trace::validate() const {
  if (time_us.size() != pl.size()) {
    throw std::invalid_argument("trace time and pl lengths differ");
  }
  if (!sigma.empty() && sigma.size() != pl.size()) {
    throw std::invalid_argument("trace sigma length mismatch");
  }
  for (size_t i = 0; i + 1 < time_us.size(); ++i) {
    if (!(time_us[i + 1] > time_us[i])) {
      throw std::invalid_argument("trace times must increase strictly");
    }
  }
  for (double v : pl) {
    if (!std::isfinite(v) || v < -1e-12) {
      throw std::invalid_argument("trace pl must be finite and >= 0");
    }
  }
}

Trace run_sequence(const PulseSequence& seq, const ModelConfig& config) {
  seq.validate();
  config.validate();

  DensityMatrix rho = seq.initial == InitialState::custom
                          ? seq.custom_initial
                          : DensityMatrix::mixed_ground();

  Trace trace;
  trace.label = "sequence";
  double t0 = 0.0;
  const bool exact = config.solver.method == dynamics::SolverOptions::Method::exact;

  for (const auto& seg : seq.segments) {
    if (!seg.record) {
      if (exact) {
        SegmentGenerator gen(config, seg.drive);
        rho.m = superop::from_real_vector(
            gen.apply(superop::to_real_vector(rho.m), seg.duration_us));
      } else {
        rho = dynamics::propagate(rho, config, seg.drive, seg.duration_us);
      }
      t0 += seg.duration_us;
      continue;
    }

    const int n = std::max<int>(1, std::lround(seg.duration_us / seq.sample_dt_us));
    const double dt = seg.duration_us / n;
    if (exact) {
      SegmentGenerator gen(config, seg.drive);
      Eigen::VectorXd x = superop::to_real_vector(rho.m);
      for (int k = 0; k < n; ++k) {
        trace.time_us.push_back(t0 + k * dt);
        trace.pl.push_back(dynamics::pl_rate(superop::from_real_vector(x), config));
        x = gen.apply(x, dt);
      }
      rho.m = superop::from_real_vector(x);
    } else {
      for (int k = 0; k < n; ++k) {
        trace.time_us.push_back(t0 + k * dt);
        trace.pl.push_back(dynamics::pl_rate(rho, config));
        rho = dynamics::propagate(rho, config, seg.drive, dt);
      }
    }
    t0 += seg.duration_us;
  }

  trace.final_state = rho;
  trace.meta["duration_us"] = t0;
  trace.validate();
  return trace;
}

std::pair<double, double> polarization(const DensityMatrix& rho) {
  const double p12 = rho.population(idx::g_p12) + rho.population(idx::g_m12);
  const double p32 = rho.population(idx::g_p32) + rho.population(idx::g_m32);
  const double total = p12 + p32;
  if (total <= 0.0) {
    throw std::invalid_argument("polarization undefined: empty ground manifold");
  }
  return {p12 / total, p32 / total};
}

double dark_corrected_visibility(double pl_a, double pl_b, double pl_dark) {
  const double den = pl_a + pl_b - 2.0 * pl_dark;
  if (den <= 0.0) return 1.0;
  const double v = std::abs(pl_b - pl_a) / den;
  return std::min(v, 1.0);
}

VisibilityResult visibility_experiment(const ModelConfig& config, Transition pump,
                                       const VisibilityOptions& opts) {
  config.validate();

  DriveState pump_drive;
  DriveState probe_a1, probe_a2;
  if (pump == Transition::A1) {
    pump_drive.resonant_rabi_a1 = opts.pump_rabi;
  } else {
    pump_drive.resonant_rabi_a2 = opts.pump_rabi;
  }
  probe_a1.resonant_rabi_a1 = opts.probe_rabi;
  probe_a2.resonant_rabi_a2 = opts.probe_rabi;

  // Charge reset, polarizing pump, then one probe; re-initialized per probe.
  SegmentGenerator pump_gen(config, pump_drive);
  const Eigen::VectorXd x_reset =
      superop::to_real_vector(DensityMatrix::mixed_ground().m);
  const Eigen::VectorXd x_pumped = pump_gen.apply(x_reset, opts.pump_us);

  DensityMatrix pre_probe;
  pre_probe.m = superop::from_real_vector(x_pumped);
  auto [p12, p32] = polarization(pre_probe);

  const double pl_a1 = integrate_window(config, probe_a1, x_pumped, opts.probe_us).counts;
  const double pl_a2 = integrate_window(config, probe_a2, x_pumped, opts.probe_us).counts;
  const double pl_dark = dark_per_us(config) * opts.probe_us;

  VisibilityResult res;
  res.pl_a1 = pl_a1;
  res.pl_a2 = pl_a2;
  res.pl_dark = pl_dark;
  res.phys_p_12 = p12;
  res.phys_p_32 = p32;

  const double sum = pl_a1 + pl_a2;
  if (sum <= 0.0) throw dynamics::NumericalError("visibility: zero probe PL");
  res.v = std::abs(pl_a2 - pl_a1) / sum;

  res.v_dark_corrected = dark_corrected_visibility(pl_a1, pl_a2, pl_dark);

  // The contrast maps onto the spin populations of the two pairs; the larger
  // share belongs to the pair the pump does not address.
  const double hi = 0.5 * (1.0 + res.v);
  if (pump == Transition::A1) {
    res.p_32 = hi;
    res.p_12 = 1.0 - hi;
  } else {
    res.p_12 = hi;
    res.p_32 = 1.0 - hi;
  }
  return res;
}

LifetimeResult lifetime_experiment(const ModelConfig& config, Transition t,
                                   const LifetimeOptions& opts) {
  config.validate();

  DriveState pulse;
  if (t == Transition::A1) {
    pulse.resonant_rabi_a1 = opts.pulse_rabi;
  } else {
    pulse.resonant_rabi_a2 = opts.pulse_rabi;
  }

  const double big_gamma = t == Transition::A1 ? config.rates.big_gamma_1()
                                               : config.rates.big_gamma_2();
  const double window =
      opts.window_us > 0.0 ? opts.window_us : 7.0 / std::max(big_gamma, 1.0);

  PulseSequence seq;
  seq.segments.push_back({opts.pulse_us, pulse, false, "pulse"});
  seq.segments.push_back({window, DriveState{}, true, "decay"});
  seq.sample_dt_us = window / opts.samples;
  Trace trace = run_sequence(seq, config);
  trace.label = std::string("lifetime_") + to_string(t);

  // Log-linear fit of the dark-count-subtracted decay. The addressed pair is
  // the only excited population, so the decay is a pure exponential.
  const double dark = dark_per_us(config);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (size_t i = 0; i < trace.pl.size(); ++i) {
    const double signal = trace.pl[i] - dark;
    if (signal <= 0.0) continue;
    const double x = trace.time_us[i];
    const double y = std::log(signal);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
    ++n;
  }
  if (n < 3) throw dynamics::NumericalError("lifetime fit: too few samples");
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  if (!(slope < 0.0)) throw dynamics::NumericalError("lifetime fit: no decay");

  LifetimeResult res;
  res.trace = std::move(trace);
  res.tau_us = -1.0 / slope;
  res.trace.meta["tau_us"] = res.tau_us;
  return res;
}

MetastableDecayResult metastable_decay_experiment(
    const ModelConfig& config, const DriveState& pump,
    const std::vector<double>& delays_us, const MetastableOptions& opts) {
  config.validate();
  pump.validate();
  if (delays_us.size() < 3) {
    throw std::invalid_argument("metastable decay needs at least 3 delays");
  }
  if (!std::is_sorted(delays_us.begin(), delays_us.end())) {
    throw std::invalid_argument("delays must be sorted ascending");
  }

  // Illuminated steady state, then dark evolution; both probes reuse the
  // same dark trajectory since probing happens on re-initialized copies.
  Eigen::VectorXd x0 = steady_vector(config, pump);
  SegmentGenerator dark_gen(config, DriveState{});
  x0 = dark_gen.apply(x0, opts.settle_us);

  DriveState probe_a1, probe_a2;
  probe_a1.resonant_rabi_a1 = opts.probe_rabi;
  probe_a2.resonant_rabi_a2 = opts.probe_rabi;
  SegmentGenerator probe1(config, probe_a1);
  SegmentGenerator probe2(config, probe_a2);

  MetastableDecayResult res;
  res.probe_a1.label = "metastable_probe_A1";
  res.probe_a2.label = "metastable_probe_A2";

  Eigen::VectorXd x = x0;
  double reached = 0.0;
  const double dark = dark_per_us(config);
  for (double delay : delays_us) {
    x = dark_gen.apply(x, delay - reached);
    reached = delay;
    const auto w1 = probe1.propagate_with_integral(x, opts.probe_us);
    const auto w2 = probe2.propagate_with_integral(x, opts.probe_us);
    res.probe_a1.time_us.push_back(delay);
    res.probe_a1.pl.push_back(w1.integral / opts.probe_us + dark);
    res.probe_a2.time_us.push_back(delay);
    res.probe_a2.pl.push_back(w2.integral / opts.probe_us + dark);
  }
  res.probe_a1.final_state.m = superop::from_real_vector(x);
  res.probe_a2.final_state = res.probe_a1.final_state;

  // Recovery constant from the A1 trace: y(t) = a - b exp(-t/tau) fitted by
  // scanning the rate (golden-section on the 1-d profile after solving the
  // linear subproblem exactly).
  const auto& tv = res.probe_a1.time_us;
  const auto& yv = res.probe_a1.pl;
  auto sse_for_rate = [&](double k) {
    // least squares for (a, b) given exp(-k t)
    double s1 = 0, se = 0, see = 0, sy = 0, sye = 0;
    const int n = static_cast<int>(tv.size());
    for (int i = 0; i < n; ++i) {
      const double e = std::exp(-k * tv[i]);
      s1 += 1.0; se += e; see += e * e; sy += yv[i]; sye += yv[i] * e;
    }
    const double det = s1 * see - se * se;
    if (std::abs(det) < 1e-300) return 1e300;
    const double a = (sy * see - se * sye) / det;
    const double b = -(s1 * sye - se * sy) / det;
    double sse = 0;
    for (int i = 0; i < n; ++i) {
      const double r = yv[i] - (a - b * std::exp(-k * tv[i]));
      sse += r * r;
    }
    return sse;
  };
  // Golden-section search on the log of the rate.
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  auto eval = [&](double logk) { return sse_for_rate(std::exp(logk)); };
  double la = std::log(1e-3), lb = std::log(1e3);
  double lc = lb - gr * (lb - la), ld = la + gr * (lb - la);
  double fc = eval(lc), fd = eval(ld);
  for (int it = 0; it < 200 && lb - la > 1e-12; ++it) {
    if (fc < fd) {
      lb = ld; ld = lc; fd = fc;
      lc = lb - gr * (lb - la);
      fc = eval(lc);
    } else {
      la = lc; lc = ld; fc = fd;
      ld = la + gr * (lb - la);
      fd = eval(ld);
    }
  }
  res.tau_us = 1.0 / std::exp(0.5 * (la + lb));
  res.probe_a1.meta["tau_us"] = res.tau_us;
  return res;
}

RepolarizationResult repolarization_experiment(
    const ModelConfig& config, Transition init, const DriveState& offres_pump,
    const std::vector<double>& durations_us, const RepolarizationOptions& opts) {
  config.validate();
  offres_pump.validate();
  if (durations_us.empty()) {
    throw std::invalid_argument("repolarization needs at least one duration");
  }
  if (!std::is_sorted(durations_us.begin(), durations_us.end())) {
    throw std::invalid_argument("durations must be sorted ascending");
  }

  DriveState init_drive;
  if (init == Transition::A1) {
    init_drive.resonant_rabi_a1 = opts.init_rabi;
  } else {
    init_drive.resonant_rabi_a2 = opts.init_rabi;
  }

  SegmentGenerator init_gen(config, init_drive);
  SegmentGenerator settle_gen(config, DriveState{});
  SegmentGenerator pump_gen(config, offres_pump);

  Eigen::VectorXd x =
      superop::to_real_vector(dynamics::DensityMatrix::mixed_ground().m);
  x = init_gen.apply(x, opts.init_us);
  x = settle_gen.apply(x, opts.settle_us);

  RepolarizationResult res;
  res.trace.label = "repolarization";
  double reached = 0.0;
  DensityMatrix rho;
  for (double tau : durations_us) {
    x = pump_gen.apply(x, tau - reached);
    reached = tau;
    rho.m = superop::from_real_vector(x);
    res.trace.time_us.push_back(tau);
    res.trace.pl.push_back(dynamics::pl_rate(rho, config));
  }
  res.trace.final_state = rho;
  auto [p12, p32] = polarization(rho);
  res.p_12_final = p12;
  res.p_32_final = p32;
  res.trace.meta["p_12_final"] = p12;
  res.trace.meta["p_32_final"] = p32;
  return res;
}

std::vector<Trace> spin_depletion_experiment(const ModelConfig& config,
                                             Transition t,
                                             const std::vector<double>& rabis_mhz,
                                             const DepletionOptions& opts) {
  config.validate();
  opts.init_pump.validate();

  // Off-resonant initialization reaches its steady state; the dark interval
  // then empties the optical cycle while MS2 stays shelved.
  Eigen::VectorXd x0 = steady_vector(config, opts.init_pump);
  SegmentGenerator dark_gen(config, DriveState{});
  x0 = dark_gen.apply(x0, opts.dark_us);

  std::vector<Trace> traces;
  traces.reserve(rabis_mhz.size());
  const double dt = opts.window_us / opts.samples;
  for (double rabi : rabis_mhz) {
    DriveState drive;
    if (t == Transition::A1) {
      drive.resonant_rabi_a1 = rabi;
    } else {
      drive.resonant_rabi_a2 = rabi;
    }
    SegmentGenerator gen(config, drive);
    Trace trace;
    trace.label = "depletion";
    trace.meta["rabi_mhz"] = rabi;
    Eigen::VectorXd x = x0;
    for (int k = 0; k < opts.samples; ++k) {
      trace.time_us.push_back(k * dt);
      trace.pl.push_back(dynamics::pl_rate(superop::from_real_vector(x), config));
      x = gen.apply(x, dt);
    }
    trace.final_state.m = superop::from_real_vector(x);
    trace.validate();
    traces.push_back(std::move(trace));
  }
  return traces;
}

double windowed_emission(const ModelConfig& base, double gamma_3, double gamma_4,
                         Excitation exc, const MapOptions& opts) {
  ModelConfig config = base;
  config.rates.gamma_3 = gamma_3;
  config.rates.gamma_4 = gamma_4;
  config.validate();

  DriveState window;
  switch (exc) {
    case Excitation::a1:
      window.resonant_rabi_a1 = opts.resonant_rabi;
      break;
    case Excitation::a2:
      window.resonant_rabi_a2 = opts.resonant_rabi;
      break;
    case Excitation::off_resonant:
      window.offres_pump = opts.offres_rabi;
      break;
  }
  // The window drives the thermally mixed ground manifold directly, and the
  // integral counts emitted photons only: a pumped initial state depends on
  // the branching rates under test and detector dark counts dilute the
  // relative change, so either would mask the effect the map quantifies.
  SegmentGenerator gen(config, window);
  const Eigen::VectorXd x0 =
      superop::to_real_vector(DensityMatrix::mixed_ground().m);
  return gen.propagate_with_integral(x0, opts.window_us).integral;
}

Eigen::MatrixXd emission_change_map(const ModelConfig& base,
                                    const std::vector<double>& gamma_3s,
                                    const std::vector<double>& gamma_4s,
                                    Excitation exc, const MapOptions& opts) {
  const double ref = windowed_emission(base, opts.reference_gamma_3,
                                       opts.reference_gamma_4, exc, opts);
  if (ref <= 0.0) throw dynamics::NumericalError("emission map: zero reference");

  Eigen::MatrixXd map(gamma_3s.size(), gamma_4s.size());
  for (size_t i = 0; i < gamma_3s.size(); ++i) {
    for (size_t j = 0; j < gamma_4s.size(); ++j) {
      const double pl = windowed_emission(base, gamma_3s[i], gamma_4s[j], exc, opts);
      map(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          100.0 * (pl - ref) / ref;
    }
  }
  return map;
}

}  // namespace quartet::sequences
