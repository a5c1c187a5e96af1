// Runs the published-results checks and prints one pass/fail line each.
// Exit status 0 only when every check passes.

#include <iostream>

#include "quartet/repro.hpp"

int main() {
  const auto results = quartet::repro::run_all(&std::cout);
  int passed = 0;
  for (const auto& r : results) passed += r.pass ? 1 : 0;
  std::cout << passed << "/" << results.size() << " checks passed"
            << std::endl;
  return quartet::repro::all_passed(results) ? 0 : 1;
}
