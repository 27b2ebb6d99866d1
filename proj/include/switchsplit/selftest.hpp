#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace switchsplit {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SuiteResult {
  std::vector<CheckResult> checks;

  bool all_passed() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }
};

// Named check suites:
//   fast     - structural invariants and determinism, a few seconds
//   oracle   - estimates against closed-form / baseline targets, minutes
//   variance - replicate variance comparisons, minutes
//   all      - everything above
// Results stream to `log` as they complete, one line per check.
SuiteResult run_selftest(const std::string& suite, unsigned threads, std::ostream& log);

// The eight release gates, run in order with shared intermediate results,
// one line each. Slower than `fast` but authoritative.
SuiteResult run_acceptance(unsigned threads, std::ostream& log);

namespace selftest_detail {
// Quantile of the Fisher F distribution, used for the two-sided variance
// equality test. Implemented via the regularized incomplete beta function
// so the statistical checks carry no external dependency.
double fisher_f_quantile(double p, double df1, double df2);
double regularized_incomplete_beta(double a, double b, double x);
}  // namespace selftest_detail

}  // namespace switchsplit
