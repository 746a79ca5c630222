#include <cstring>
#include <iostream>

#include "josc/acceptance.hpp"

// Runs the verification suite and reports one PASS/FAIL line per criterion.
// Usage: josc_acceptance [core|all]   (default: all)
int main(int argc, char** argv) {
  josc::Suite suite = josc::Suite::all;
  if (argc > 1 && std::strcmp(argv[1], "core") == 0) suite = josc::Suite::core;
  const auto results = josc::run_acceptance(suite, std::cout);
  return josc::all_passed(results) ? 0 : 1;
}
