#include <doctest.h>

#include <cmath>
#include <sstream>

#include "switchsplit/selftest.hpp"

using namespace switchsplit;
using selftest_detail::fisher_f_quantile;
using selftest_detail::regularized_incomplete_beta;

TEST_CASE("regularized incomplete beta basics") {
  // I_x(1, 1) is the uniform CDF.
  for (double x : {0.0, 0.1, 0.25, 0.5, 0.9, 1.0})
    CHECK(regularized_incomplete_beta(1.0, 1.0, x) == doctest::Approx(x).epsilon(1e-12));

  // I_x(a, b) = 1 - I_{1-x}(b, a).
  for (double x : {0.05, 0.3, 0.6, 0.95}) {
    const double lhs = regularized_incomplete_beta(3.5, 7.25, x);
    const double rhs = 1.0 - regularized_incomplete_beta(7.25, 3.5, 1.0 - x);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }

  // I_x(1, b) = 1 - (1-x)^b in closed form.
  CHECK(regularized_incomplete_beta(1.0, 4.0, 0.2) ==
        doctest::Approx(1.0 - std::pow(0.8, 4.0)).epsilon(1e-12));

  // Monotone in x.
  double prev = -1.0;
  for (double x = 0.0; x <= 1.0; x += 0.05) {
    const double v = regularized_incomplete_beta(2.5, 4.0, x);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("F quantiles satisfy the classical identities") {
  // Equal degrees of freedom put the median at one.
  for (double df : {3.0, 10.0, 199.0})
    CHECK(fisher_f_quantile(0.5, df, df) == doctest::Approx(1.0).epsilon(1e-9));

  // With df1 = df2 = 2 the CDF is q / (q + 1), so the 0.95 quantile is 19.
  CHECK(fisher_f_quantile(0.95, 2.0, 2.0) == doctest::Approx(19.0).epsilon(1e-9));
  CHECK(fisher_f_quantile(0.9, 2.0, 2.0) == doctest::Approx(9.0).epsilon(1e-9));

  // Reciprocal identity between the tails.
  for (double p : {0.005, 0.05, 0.25}) {
    const double lo = fisher_f_quantile(p, 199.0, 199.0);
    const double hi = fisher_f_quantile(1.0 - p, 199.0, 199.0);
    CHECK(lo * hi == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(lo < 1.0);
    CHECK(hi > 1.0);
  }

  // Round trip through the CDF.
  const double q = fisher_f_quantile(0.975, 12.0, 8.0);
  const double x = 12.0 * q / (12.0 * q + 8.0);
  CHECK(regularized_incomplete_beta(6.0, 4.0, x) == doctest::Approx(0.975).epsilon(1e-9));
}

TEST_CASE("the fast selftest suite passes and reports each check") {
  std::ostringstream log;
  const SuiteResult result = run_selftest("fast", 0, log);
  CHECK(result.all_passed());
  CHECK(result.checks.size() >= 5);
  for (const auto& check : result.checks) {
    CHECK_FALSE(check.name.empty());
    CHECK(log.str().find(check.name) != std::string::npos);
  }
  CHECK(log.str().find("suite fast") != std::string::npos);

  std::ostringstream ignored;
  CHECK_THROWS(run_selftest("nonsense", 0, ignored));
}
