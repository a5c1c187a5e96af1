#pragma once

// Model-data comparison and parameter estimation: reduced chi-square with a
// Poisson-counting default, a bounded Nelder-Mead simplex with restarts,
// forward-model fits for the deformation parameters and the rate set, and
// accept-reject (ABC style) interval estimation around a best fit.

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "quartet/dynamics.hpp"
#include "quartet/sequences.hpp"
#include "quartet/spincore.hpp"

namespace quartet::estimate {

// Per-point uncertainty for chi-square:
//   poisson   sigma_i = sqrt(max(y_i * bin, 1)) / bin, bin = median grid step
//             (counting statistics on rate samples)
//   relative  sigma_i = max(relative * max|y|, floor)
//   provided  the trace's own sigma column
struct SigmaModel {
  enum class Rule { poisson, relative, provided };
  Rule rule = Rule::poisson;
  double relative = 0.01;
  double floor = 0.0;
};

// Sum over all trace pairs; model traces are linearly resampled onto the
// data grids when the grids differ. dof = total points - n_free (must be
// positive). Invariant under common rescaling of data, model, and sigma.
double chi2_reduced(const std::vector<sequences::Trace>& model,
                    const std::vector<sequences::Trace>& data, int n_free,
                    const SigmaModel& sigma = {});

struct NelderMeadOptions {
  double ftol = 1e-10;
  double xtol = 1e-12;
  int max_evals = 20000;
  int restarts = 1;           // restart-from-best polish passes
  double initial_step = 0.08; // simplex edge, relative to box width
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int evals = 0;
  bool converged = false;  // false when the evaluation budget ran out
};

// Bounded simplex minimization (reflection 1, expansion 2, contraction 1/2,
// shrink 1/2) with proposals clipped to [lower, upper]. The result is never
// worse than f(x0).
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0,
                             const Eigen::VectorXd& lower,
                             const Eigen::VectorXd& upper,
                             const NelderMeadOptions& opts = {});

// Descriptor of one simulated experiment, shared by the fitting layer and
// the command line front end.
struct ExperimentSpec {
  enum class Kind {
    visibility,
    lifetime,
    metastable_decay,
    repolarization,
    spin_depletion,
    emission_change_map,
  };
  Kind kind = Kind::lifetime;
  Transition transition = Transition::A1;
  dynamics::DriveState pump;  // off-resonant pump where the protocol uses one

  std::vector<double> delays_us;     // metastable_decay
  std::vector<double> durations_us;  // repolarization
  std::vector<double> rabis_mhz;     // spin_depletion
  std::vector<double> map_gamma_3s;  // emission_change_map
  std::vector<double> map_gamma_4s;

  sequences::VisibilityOptions visibility;
  sequences::LifetimeOptions lifetime;
  sequences::MetastableOptions metastable;
  sequences::RepolarizationOptions repolarization;
  sequences::DepletionOptions depletion;
  sequences::MapOptions map;
  sequences::Excitation excitation = sequences::Excitation::a1;
};

// Traces produced by the trace-yielding kinds (lifetime 1, metastable 2,
// repolarization 1, spin_depletion N). Throws std::invalid_argument for
// visibility and emission_change_map, which have scalar/matrix results.
std::vector<sequences::Trace> simulate_experiment(const dynamics::ModelConfig& config,
                                                  const ExperimentSpec& spec);

// Names accepted by the parameter mapping: the nine decay rates, beta,
// efficiency, dark_rate_hz.
void apply_param(dynamics::ModelConfig& config, const std::string& name,
                 double value);
double get_param(const dynamics::ModelConfig& config, const std::string& name);

struct ParamSpec {
  std::string name;
  double init = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct Dataset {
  std::vector<sequences::Trace> data;  // one per simulated trace, same order
  ExperimentSpec experiment;
};

struct FitProblem {
  std::vector<Dataset> datasets;
  std::vector<ParamSpec> free_params;
  dynamics::ModelConfig baseline;
  SigmaModel sigma;
};

// chi2_reduced of the joint problem at the given free-parameter values.
double fit_objective(const FitProblem& problem, const Eigen::VectorXd& values);

struct FitResult {
  std::vector<std::string> param_names;
  Eigen::VectorXd best;
  double chi2_r = 0.0;
  int evals = 0;
  bool converged = false;
  std::vector<std::string> warnings;  // identifiability and acceptance notes
  // Filled by abc_errors:
  std::map<std::string, std::pair<double, double>> ci68;
  std::vector<std::pair<int, Eigen::VectorXd>> accepted;  // (trial index, params)
};

// Joint Nelder-Mead fit from the ParamSpec initial point. After convergence
// each parameter is probed (+-5%) for sensitivity; parameters whose probe
// moves chi2_r by less than 1e-4 are flagged unidentifiable.
FitResult rate_fit(const FitProblem& problem, const NelderMeadOptions& opts = {});

struct ABCConfig {
  double variation = 0.20;            // half-width of the uniform box, relative
  int iterations = 9000;
  double acceptance_quantile = 0.95;  // chi-square quantile for the threshold
  double ci_level = 0.68;
  std::uint64_t seed = 1;
  int workers = 0;  // 0: QUARTETSIM_WORKERS env or hardware concurrency
};

// Uniform resampling in the +-variation box around the best fit; trials with
// chi2_r below the Wilson-Hilferty chi-square quantile (scaled by dof) are
// accepted. Deterministic for a given seed independent of worker count:
// trial i uses mt19937_64(seed + 0x9E3779B97F4A7C15 * (i+1)) and the
// accepted list is sorted by trial index. Central ci_level intervals per
// parameter; acceptance below 0.1% adds a widen-the-box warning.
FitResult abc_errors(const FitProblem& problem, const FitResult& fit,
                     const ABCConfig& config);

// Deformation-parameter fit: matches the ground-manifold line splitting and
// the two steady optical pumping fidelities (A1-pumped p_32, A2-pumped
// p_12) through the forward model, strain applied to the ground manifold.
struct StrainObservables {
  double odmr_mhz = 0.0;
  double p32_after_a1 = 0.0;
  double p12_after_a2 = 0.0;
  double sigma_odmr = 0.02;  // MHz
  double sigma_p = 0.005;
};

struct StrainFitOptions {
  double pump_rabi = sequences::rabi_mhz_at_20nw;
  int multistarts = 16;  // Latin hypercube over the parameter box
  double pi_z_bound = 10.0;
  double pi_bound = 10.0;
  NelderMeadOptions nm;
};

struct StrainFitResult {
  spincore::StrainParams params;
  double residual = 0.0;  // weighted least squares at the optimum
  bool under_determined = false;  // transverse amplitudes ~ 0: theta unfixed
  std::vector<std::string> warnings;
};

StrainFitResult strain_fit(const StrainObservables& obs,
                           const dynamics::ModelConfig& baseline,
                           const StrainFitOptions& opts = {});

// Forward model used by strain_fit (exposed for round-trip tests).
StrainObservables strain_forward(const spincore::StrainParams& s,
                                 const dynamics::ModelConfig& baseline,
                                 double pump_rabi = sequences::rabi_mhz_at_20nw);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

// 95th-percentile standard normal deviate used by the Wilson-Hilferty
// chi-square quantile approximation.
inline constexpr double z_95 = 1.6448536269514722;
double chi2_quantile_over_dof(double quantile, int dof);

int worker_count(int requested);  // env-aware resolution

}  // namespace quartet::estimate
