#pragma once

// Configuration files, trace CSV exchange, result documents, and the
// command-line surface.
//
// Config files are JSON. Unknown keys are rejected with their full path;
// parse errors carry line and column; validation errors name the offending
// key and the invariant it violates. No partially-applied configuration
// ever reaches the physics layers: parsing either returns a fully
// validated RunConfig or throws.
//
// Trace CSVs use the canonical header `time_us,pl_counts_per_us` with an
// optional `sigma` column; values are printed with 17 significant digits so
// an emit/ingest round trip is bit-exact. Unit suffixes live in the header
// names on purpose.

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "quartet/estimate.hpp"
#include "quartet/lineshape.hpp"
#include "quartet/sequences.hpp"

namespace quartet::iocli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_validation = 1;  // parse/validation failures
inline constexpr int exit_numerical = 2;   // solver/linear-algebra failures

// Parse or validation failure; maps to exit_validation at the CLI boundary.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FitJob {
  std::vector<estimate::ParamSpec> free_params;
  estimate::SigmaModel sigma;
  // One spec per dataset; the data CSVs arrive as CLI arguments, in order,
  // one file per trace the spec produces.
  std::vector<estimate::ExperimentSpec> experiments;
};

struct StrainFitJob {
  estimate::StrainObservables observables;
  estimate::StrainFitOptions options;
};

struct SweepJob {
  std::vector<double> gamma_3s;
  std::vector<double> gamma_4s;
  std::vector<sequences::Excitation> excitations;
  sequences::MapOptions map;
};

struct LineshapeJob {
  lineshape::PhononData modes;
  double eta_mev = 1.0;
  double lambda_soc_mev = 0.0;  // 0: emit only the overlap function
  double delta_if_mev = 0.0;
  lineshape::FftOptions fft;
};

struct RunConfig {
  dynamics::ModelConfig model;
  std::string rates_preset;  // provenance only; empty when given explicitly
  std::string strain_preset;

  std::optional<estimate::ExperimentSpec> experiment;
  std::optional<FitJob> fit;
  std::optional<StrainFitJob> strain_fit;
  std::optional<SweepJob> sweep;
  std::optional<LineshapeJob> lineshape;
  estimate::ABCConfig abc;

  std::uint64_t seed = 1;
  std::string out_dir = ".";
  std::string snapshot_json;  // canonical serialization of the input config
};

// `origin` labels error messages (a file path or "<inline>").
RunConfig parse_config(const std::string& text, const std::string& origin);
RunConfig load_config(const std::string& path);

std::string trace_to_csv(const sequences::Trace& trace);
sequences::Trace trace_from_csv(const std::string& text, const std::string& origin);
sequences::Trace ingest_trace(const std::string& path);
void emit_trace(const sequences::Trace& trace, const std::string& path);

// Self-contained result document (JSON): schema version, tool name and
// version, seed and timestamp provenance, the config snapshot, and whatever
// sections the subcommand produced. Keys serialize sorted, so documents are
// deterministic up to the timestamp.
class ResultBuilder {
 public:
  ResultBuilder(std::uint64_t seed, const std::string& config_snapshot_json);
  ~ResultBuilder();
  ResultBuilder(ResultBuilder&&) noexcept;
  ResultBuilder& operator=(ResultBuilder&&) noexcept;

  void add_trace(const sequences::Trace& trace);
  void add_fit(const estimate::FitResult& fit);
  void add_abc_table(const estimate::FitResult& fit);  // accepted cloud
  void add_scalar(const std::string& key, double value);
  void add_note(const std::string& note);
  void add_map(const std::string& name, const std::vector<double>& gamma_3s,
               const std::vector<double>& gamma_4s, const Eigen::MatrixXd& percent);
  void add_overlap_summary(const lineshape::OverlapFunction& overlap);

  std::string json() const;
  void write(const std::string& path) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Reads back a document written by the `fit` subcommand: the fit section
// plus the embedded data traces, in document order.
struct FitDocument {
  estimate::FitResult fit;
  std::vector<sequences::Trace> traces;
};
FitDocument read_fit_document(const std::string& path);

inline constexpr int schema_version = 1;

// Subcommands: simulate, fit, abc, sweep, lineshape, paper-repro.
// Every subcommand accepts --seed, --out, --preset. Returns an exit code;
// never throws.
int cli_main(int argc, const char* const* argv);

}  // namespace quartet::iocli
