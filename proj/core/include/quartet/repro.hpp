#pragma once

// The published-results reproduction suite. Each check compares a shipped
// parameter set against the measured quantity it was fitted to, with the
// tolerance pinned next to the comparison. The checks are self-contained:
// they build their own configurations from the preset tables and report one
// pass/fail line each.

#include <iosfwd>
#include <string>
#include <vector>

namespace quartet::repro {

struct CheckResult {
  int number = 0;
  std::string name;
  bool pass = false;
  std::string details;   // measured values and the pinned tolerances
  double runtime_s = 0.0;
};

CheckResult check_lifetimes();                  // 1
CheckResult check_metastable_lifetimes();       // 2
CheckResult check_repolarization();             // 3
CheckResult check_emission_map();               // 4
CheckResult check_visibility();                 // 5
CheckResult check_deshelling_linearity();       // 6
CheckResult check_rate_equation_equivalence();  // 7
CheckResult check_strain_symmetries();          // 8
CheckResult check_round_trip_estimation();      // 9
CheckResult check_lineshape();                  // 10
CheckResult check_coverage_note();              // 11

// Runs every check in order; when `progress` is set, one formatted line is
// streamed per check as it finishes.
std::vector<CheckResult> run_all(std::ostream* progress = nullptr);

std::string format_line(const CheckResult& r);
bool all_passed(const std::vector<CheckResult>& results);

}  // namespace quartet::repro
