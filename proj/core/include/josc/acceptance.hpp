#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace josc {

enum class Suite { core, all };

struct CriterionResult {
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0;
};

/// Run the verification suite: every check prints one PASS/FAIL line to
/// `out` as it completes. `core` covers the desk-scale checks; `all` adds
/// the seed-population statistics and the runtime budget.
std::vector<CriterionResult> run_acceptance(Suite suite, std::ostream& out);

/// True when every criterion passed.
bool all_passed(const std::vector<CriterionResult>& results);

}  // namespace josc
