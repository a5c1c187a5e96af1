#include "quartet/estimate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

#include "quartet/superop.hpp"

namespace quartet::estimate {

namespace {

double median_step(const std::vector<double>& t) {
  if (t.size() < 2) return 1.0;
  std::vector<double> steps(t.size() - 1);
  for (size_t i = 0; i + 1 < t.size(); ++i) steps[i] = t[i + 1] - t[i];
  std::nth_element(steps.begin(), steps.begin() + steps.size() / 2, steps.end());
  return steps[steps.size() / 2];
}

double interp(const std::vector<double>& xs, const std::vector<double>& ys,
              double x) {
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const size_t j = static_cast<size_t>(it - xs.begin());
  const double w = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
  return ys[j - 1] * (1.0 - w) + ys[j] * w;
}

// Inverse standard normal CDF (Acklam's rational approximation, ~1e-9).
double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("quantile must lie in (0, 1)");
  }
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double q, r;
  if (p < plow) {
    q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - plow) {
    q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  q = p - 0.5;
  r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

double quantile_of(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(v.begin(), v.end());
  const double pos = q * (static_cast<double>(v.size()) - 1.0);
  const size_t lo = static_cast<size_t>(pos);
  const size_t hi = std::min(lo + 1, v.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return v[lo] * (1.0 - w) + v[hi] * w;
}

}  // namespace

double chi2_quantile_over_dof(double quantile, int dof) {
  if (dof <= 0) throw std::invalid_argument("dof must be positive");
  const double z = quantile == 0.95 ? z_95 : normal_quantile(quantile);
  const double k = static_cast<double>(dof);
  const double t = 1.0 - 2.0 / (9.0 * k) + z * std::sqrt(2.0 / (9.0 * k));
  return t * t * t;
}

double chi2_reduced(const std::vector<sequences::Trace>& model,
                    const std::vector<sequences::Trace>& data, int n_free,
                    const SigmaModel& sigma) {
  if (model.size() != data.size()) {
    throw std::invalid_argument("chi2: model and data trace counts differ");
  }
  double chi2 = 0.0;
  long n_points = 0;
  for (size_t k = 0; k < data.size(); ++k) {
    const auto& d = data[k];
    const auto& m = model[k];
    if (d.time_us.empty()) continue;
    const double bin = median_step(d.time_us);
    double peak = 0.0;
    for (double v : d.pl) peak = std::max(peak, std::abs(v));
    const bool same_grid = m.time_us == d.time_us;

    for (size_t i = 0; i < d.time_us.size(); ++i) {
      const double y = d.pl[i];
      const double f =
          same_grid ? m.pl[i] : interp(m.time_us, m.pl, d.time_us[i]);
      double s;
      switch (sigma.rule) {
        case SigmaModel::Rule::poisson:
          s = std::sqrt(std::max(y * bin, 1.0)) / bin;
          break;
        case SigmaModel::Rule::relative:
          s = std::max(sigma.relative * peak, sigma.floor);
          break;
        case SigmaModel::Rule::provided:
          if (d.sigma.size() != d.pl.size()) {
            throw std::invalid_argument("chi2: trace lacks sigma column");
          }
          s = d.sigma[i];
          break;
        default:
          s = 1.0;
      }
      if (!(s > 0.0)) throw std::invalid_argument("chi2: nonpositive sigma");
      const double r = (y - f) / s;
      chi2 += r * r;
      ++n_points;
    }
  }
  const long dof = n_points - n_free;
  if (dof <= 0) throw std::invalid_argument("chi2: dof must be positive");
  return chi2 / static_cast<double>(dof);
}

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0,
                             const Eigen::VectorXd& lower,
                             const Eigen::VectorXd& upper,
                             const NelderMeadOptions& opts) {
  const int n = static_cast<int>(x0.size());
  if (lower.size() != n || upper.size() != n) {
    throw std::invalid_argument("nelder_mead: bound dimensions differ");
  }
  for (int i = 0; i < n; ++i) {
    if (!(lower(i) <= upper(i))) {
      throw std::invalid_argument("nelder_mead: lower bound above upper");
    }
  }

  auto clip = [&](Eigen::VectorXd x) {
    for (int i = 0; i < n; ++i) x(i) = std::clamp(x(i), lower(i), upper(i));
    return x;
  };

  int evals = 0;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++evals;
    const double v = f(x);
    return std::isfinite(v) ? v : 1e300;
  };

  Eigen::VectorXd best_x = clip(x0);
  double best_f = eval(best_x);
  bool converged = false;

  for (int round = 0; round <= opts.restarts; ++round) {
    // Initial simplex around the current best point.
    std::vector<Eigen::VectorXd> pts(n + 1, best_x);
    std::vector<double> vals(n + 1);
    vals[0] = best_f;
    for (int i = 0; i < n; ++i) {
      const double width = upper(i) - lower(i);
      double step = opts.initial_step * (width > 0.0 ? width : 1.0);
      if (pts[i + 1](i) + step > upper(i)) step = -step;
      pts[i + 1](i) = std::clamp(pts[i + 1](i) + step, lower(i), upper(i));
      vals[i + 1] = eval(pts[i + 1]);
    }

    while (evals < opts.max_evals) {
      // order ascending by value
      std::vector<int> order(n + 1);
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(),
                [&](int a, int b) { return vals[a] < vals[b]; });
      std::vector<Eigen::VectorXd> sp(n + 1);
      std::vector<double> sv(n + 1);
      for (int i = 0; i <= n; ++i) {
        sp[i] = pts[order[i]];
        sv[i] = vals[order[i]];
      }
      pts.swap(sp);
      vals.swap(sv);

      const double spread = std::abs(vals[n] - vals[0]);
      double xspread = 0.0;
      for (int i = 1; i <= n; ++i) {
        xspread = std::max(xspread, (pts[i] - pts[0]).cwiseAbs().maxCoeff());
      }
      if (spread < opts.ftol * (1.0 + std::abs(vals[0])) && xspread < opts.xtol) {
        converged = true;
        break;
      }

      Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
      for (int i = 0; i < n; ++i) centroid += pts[i];
      centroid /= static_cast<double>(n);

      const Eigen::VectorXd xr = clip(centroid + (centroid - pts[n]));
      const double fr = eval(xr);
      if (fr < vals[0]) {
        const Eigen::VectorXd xe = clip(centroid + 2.0 * (centroid - pts[n]));
        const double fe = eval(xe);
        if (fe < fr) {
          pts[n] = xe;
          vals[n] = fe;
        } else {
          pts[n] = xr;
          vals[n] = fr;
        }
      } else if (fr < vals[n - 1]) {
        pts[n] = xr;
        vals[n] = fr;
      } else {
        const Eigen::VectorXd xc = clip(centroid + 0.5 * (pts[n] - centroid));
        const double fc = eval(xc);
        if (fc < vals[n]) {
          pts[n] = xc;
          vals[n] = fc;
        } else {
          for (int i = 1; i <= n; ++i) {
            pts[i] = clip(pts[0] + 0.5 * (pts[i] - pts[0]));
            vals[i] = eval(pts[i]);
          }
        }
      }
    }

    int arg = 0;
    for (int i = 1; i <= n; ++i) {
      if (vals[i] < vals[arg]) arg = i;
    }
    if (vals[arg] < best_f) {
      best_f = vals[arg];
      best_x = pts[arg];
    }
    if (evals >= opts.max_evals) break;
  }

  return {best_x, best_f, evals, converged};
}

std::vector<sequences::Trace> simulate_experiment(const dynamics::ModelConfig& config,
                                                  const ExperimentSpec& spec) {
  using Kind = ExperimentSpec::Kind;
  switch (spec.kind) {
    case Kind::lifetime: {
      auto res = sequences::lifetime_experiment(config, spec.transition,
                                                spec.lifetime);
      return {std::move(res.trace)};
    }
    case Kind::metastable_decay: {
      auto res = sequences::metastable_decay_experiment(config, spec.pump,
                                                        spec.delays_us,
                                                        spec.metastable);
      return {std::move(res.probe_a1), std::move(res.probe_a2)};
    }
    case Kind::repolarization: {
      auto res = sequences::repolarization_experiment(config, spec.transition,
                                                      spec.pump, spec.durations_us,
                                                      spec.repolarization);
      return {std::move(res.trace)};
    }
    case Kind::spin_depletion:
      return sequences::spin_depletion_experiment(config, spec.transition,
                                                  spec.rabis_mhz, spec.depletion);
    case Kind::visibility:
    case Kind::emission_change_map:
      throw std::invalid_argument(
          "experiment kind does not produce traces; use its dedicated runner");
  }
  throw std::invalid_argument("unknown experiment kind");
}

void apply_param(dynamics::ModelConfig& config, const std::string& name,
                 double value) {
  dynamics::RateSet& r = config.rates;
  if (name == "gamma_r") r.gamma_r = value;
  else if (name == "gamma_1") r.gamma_1 = value;
  else if (name == "gamma_1p") r.gamma_1p = value;
  else if (name == "gamma_2") r.gamma_2 = value;
  else if (name == "gamma_2p") r.gamma_2p = value;
  else if (name == "gamma_3") r.gamma_3 = value;
  else if (name == "gamma_4") r.gamma_4 = value;
  else if (name == "gamma_3p0") r.gamma_3p0 = value;
  else if (name == "gamma_4p0") r.gamma_4p0 = value;
  else if (name == "beta") r.beta = value;
  else if (name == "efficiency") config.efficiency = value;
  else if (name == "dark_rate_hz") config.dark_rate_hz = value;
  else throw std::invalid_argument("unknown fit parameter: " + name);
}

double get_param(const dynamics::ModelConfig& config, const std::string& name) {
  const dynamics::RateSet& r = config.rates;
  if (name == "gamma_r") return r.gamma_r;
  if (name == "gamma_1") return r.gamma_1;
  if (name == "gamma_1p") return r.gamma_1p;
  if (name == "gamma_2") return r.gamma_2;
  if (name == "gamma_2p") return r.gamma_2p;
  if (name == "gamma_3") return r.gamma_3;
  if (name == "gamma_4") return r.gamma_4;
  if (name == "gamma_3p0") return r.gamma_3p0;
  if (name == "gamma_4p0") return r.gamma_4p0;
  if (name == "beta") return r.beta;
  if (name == "efficiency") return config.efficiency;
  if (name == "dark_rate_hz") return config.dark_rate_hz;
  throw std::invalid_argument("unknown fit parameter: " + name);
}

double fit_objective(const FitProblem& problem, const Eigen::VectorXd& values) {
  if (values.size() != static_cast<Eigen::Index>(problem.free_params.size())) {
    throw std::invalid_argument("fit_objective: parameter count mismatch");
  }
  dynamics::ModelConfig config = problem.baseline;
  for (size_t i = 0; i < problem.free_params.size(); ++i) {
    apply_param(config, problem.free_params[i].name,
                values(static_cast<Eigen::Index>(i)));
  }
  std::vector<sequences::Trace> model, data;
  for (const auto& ds : problem.datasets) {
    auto traces = simulate_experiment(config, ds.experiment);
    if (traces.size() != ds.data.size()) {
      throw std::invalid_argument("fit_objective: dataset trace count mismatch");
    }
    for (size_t k = 0; k < traces.size(); ++k) {
      model.push_back(std::move(traces[k]));
      data.push_back(ds.data[k]);
    }
  }
  return chi2_reduced(model, data,
                      static_cast<int>(problem.free_params.size()),
                      problem.sigma);
}

FitResult rate_fit(const FitProblem& problem, const NelderMeadOptions& opts) {
  const size_t n = problem.free_params.size();
  if (n == 0) throw std::invalid_argument("rate_fit: no free parameters");
  Eigen::VectorXd x0(n), lo(n), hi(n);
  for (size_t i = 0; i < n; ++i) {
    const auto& p = problem.free_params[i];
    x0(static_cast<Eigen::Index>(i)) = p.init;
    lo(static_cast<Eigen::Index>(i)) = p.lower;
    hi(static_cast<Eigen::Index>(i)) = p.upper;
  }

  auto obj = [&](const Eigen::VectorXd& x) { return fit_objective(problem, x); };
  const auto nm = nelder_mead(obj, x0, lo, hi, opts);

  FitResult res;
  res.best = nm.x;
  res.chi2_r = nm.f;
  res.evals = nm.evals;
  res.converged = nm.converged;
  for (const auto& p : problem.free_params) res.param_names.push_back(p.name);

  // Sensitivity probe: a parameter whose +-5% excursion barely moves the
  // objective is unidentifiable with these datasets.
  for (size_t i = 0; i < n; ++i) {
    Eigen::VectorXd x = nm.x;
    const auto ii = static_cast<Eigen::Index>(i);
    const double scale = x(ii) != 0.0 ? std::abs(x(ii))
                                      : 0.05 * (hi(ii) - lo(ii)) + 1e-12;
    double delta = 0.0;
    for (double sign : {+1.0, -1.0}) {
      x(ii) = std::clamp(nm.x(ii) + sign * 0.05 * scale, lo(ii), hi(ii));
      delta = std::max(delta, std::abs(obj(x) - nm.f));
      x(ii) = nm.x(ii);
    }
    if (delta < 1e-4) {
      res.warnings.push_back("parameter " + problem.free_params[i].name +
                             " is unidentifiable with the given datasets");
    }
  }
  return res;
}

int worker_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("QUARTETSIM_WORKERS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

FitResult abc_errors(const FitProblem& problem, const FitResult& fit,
                     const ABCConfig& config) {
  const size_t n = fit.best.size();
  if (n == 0) throw std::invalid_argument("abc_errors: empty best fit");
  if (config.iterations <= 0) {
    throw std::invalid_argument("abc_errors: iterations must be positive");
  }

  long n_points = 0;
  for (const auto& ds : problem.datasets) {
    for (const auto& t : ds.data) n_points += static_cast<long>(t.pl.size());
  }
  const int dof = static_cast<int>(n_points) - static_cast<int>(n);
  if (dof <= 0) throw std::invalid_argument("abc_errors: dof must be positive");
  const double threshold =
      chi2_quantile_over_dof(config.acceptance_quantile, dof);

  Eigen::VectorXd lo(n), hi(n);
  for (size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double b = fit.best(ii);
    lo(ii) = b - config.variation * std::abs(b);
    hi(ii) = b + config.variation * std::abs(b);
    // Keep the prior inside the declared parameter bounds.
    lo(ii) = std::max(lo(ii), problem.free_params[i].lower);
    hi(ii) = std::min(hi(ii), problem.free_params[i].upper);
  }

  const int n_workers =
      std::max(1, std::min(worker_count(config.workers), config.iterations));
  std::vector<std::vector<std::pair<int, Eigen::VectorXd>>> found(n_workers);
  std::atomic<int> next{0};
  constexpr std::uint64_t golden = 0x9E3779B97F4A7C15ull;

  auto run_trial = [&](int trial) -> std::pair<bool, Eigen::VectorXd> {
    std::mt19937_64 rng(config.seed +
                        golden * static_cast<std::uint64_t>(trial + 1));
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    Eigen::VectorXd x(n);
    for (size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      x(ii) = lo(ii) + (hi(ii) - lo(ii)) * uni(rng);
    }
    const double c = fit_objective(problem, x);
    return {c <= threshold, x};
  };

  auto worker = [&](int w) {
    for (int trial = next.fetch_add(1); trial < config.iterations;
         trial = next.fetch_add(1)) {
      auto [ok, x] = run_trial(trial);
      if (ok) found[w].emplace_back(trial, std::move(x));
    }
  };

  if (n_workers == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker, w);
    for (auto& t : pool) t.join();
  }

  FitResult out = fit;
  out.accepted.clear();
  for (auto& chunk : found) {
    for (auto& item : chunk) out.accepted.push_back(std::move(item));
  }
  std::sort(out.accepted.begin(), out.accepted.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  const double acceptance = static_cast<double>(out.accepted.size()) /
                            static_cast<double>(config.iterations);
  if (acceptance < 1e-3) {
    out.warnings.push_back(
        "acceptance below 0.1%: intervals unreliable; widen the variation "
        "box or relax the acceptance quantile");
  }
  if (fit.chi2_r > threshold) {
    out.warnings.push_back(
        "best fit exceeds the acceptance threshold; model and data disagree");
  }

  const double tail = 0.5 * (1.0 - config.ci_level);
  for (size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    std::pair<double, double> ci{fit.best(ii), fit.best(ii)};
    if (!out.accepted.empty()) {
      std::vector<double> values;
      values.reserve(out.accepted.size());
      for (const auto& [idx, x] : out.accepted) values.push_back(x(ii));
      ci = {quantile_of(values, tail), quantile_of(values, 1.0 - tail)};
    }
    out.ci68[fit.param_names[i]] = ci;
  }
  return out;
}

StrainObservables strain_forward(const spincore::StrainParams& s,
                                 const dynamics::ModelConfig& baseline,
                                 double pump_rabi) {
  dynamics::ModelConfig config = baseline;
  config.h_ground = spincore::strain_hamiltonian(baseline.h_ground.d_zfs, s);

  StrainObservables obs;
  obs.odmr_mhz = spincore::odmr_frequency(config.h_ground);

  dynamics::DriveState a1, a2;
  a1.resonant_rabi_a1 = pump_rabi;
  a2.resonant_rabi_a2 = pump_rabi;

  dynamics::DensityMatrix rho;
  rho.m = superop::from_real_vector(
      superop::SegmentGenerator(config, a1).steady_state());
  obs.p32_after_a1 = sequences::polarization(rho).second;
  rho.m = superop::from_real_vector(
      superop::SegmentGenerator(config, a2).steady_state());
  obs.p12_after_a2 = sequences::polarization(rho).first;
  return obs;
}

StrainFitResult strain_fit(const StrainObservables& obs,
                           const dynamics::ModelConfig& baseline,
                           const StrainFitOptions& opts) {
  auto residual = [&](const Eigen::VectorXd& x) {
    spincore::StrainParams s;
    s.pi_z = x(0);
    s.pi_1 = x(1);
    s.pi_2 = x(2);
    s.theta = x(3);
    StrainObservables f = strain_forward(s, baseline, opts.pump_rabi);
    const double r1 = (f.odmr_mhz - obs.odmr_mhz) / obs.sigma_odmr;
    const double r2 = (f.p32_after_a1 - obs.p32_after_a1) / obs.sigma_p;
    const double r3 = (f.p12_after_a2 - obs.p12_after_a2) / obs.sigma_p;
    return r1 * r1 + r2 * r2 + r3 * r3;
  };

  Eigen::VectorXd lo(4), hi(4);
  lo << -opts.pi_z_bound, 0.0, 0.0, 0.0;
  hi << opts.pi_z_bound, opts.pi_bound, opts.pi_bound,
      std::numbers::pi * (1.0 - 1e-12);

  // Latin hypercube start points, deterministic.
  const int m = std::max(1, opts.multistarts);
  std::mt19937_64 rng(0x5eedULL);
  std::vector<std::vector<int>> strata(4, std::vector<int>(m));
  for (auto& col : strata) {
    std::iota(col.begin(), col.end(), 0);
    std::shuffle(col.begin(), col.end(), rng);
  }

  NelderMeadResult best;
  best.f = std::numeric_limits<double>::infinity();
  for (int k = 0; k < m; ++k) {
    Eigen::VectorXd x0(4);
    for (int d = 0; d < 4; ++d) {
      const double frac = (strata[d][k] + 0.5) / m;
      x0(d) = lo(d) + frac * (hi(d) - lo(d));
    }
    const auto r = nelder_mead(residual, x0, lo, hi, opts.nm);
    if (r.f < best.f) best = r;
  }

  StrainFitResult out;
  out.params.pi_z = best.x(0);
  out.params.pi_1 = best.x(1);
  out.params.pi_2 = best.x(2);
  out.params.theta = best.x(3);
  out.residual = best.f;
  if (out.params.pi_1 < 0.05 && out.params.pi_2 < 0.05) {
    out.under_determined = true;
    out.warnings.push_back(
        "transverse amplitudes consistent with zero: theta is not "
        "determined by the data");
  }
  return out;
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("linear_fit needs >= 2 paired points");
  }
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  const double den = n * sxx - sx * sx;
  if (std::abs(den) < 1e-300) {
    throw std::invalid_argument("linear_fit: degenerate abscissa");
  }
  LinearFit f;
  f.slope = (n * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / n;
  const double sstot = syy - sy * sy / n;
  double ssres = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    ssres += r * r;
  }
  f.r2 = sstot > 0 ? 1.0 - ssres / sstot : 1.0;
  return f;
}

}  // namespace quartet::estimate
