#include <iostream>

#include "switchsplit/selftest.hpp"

int main() {
  const switchsplit::SuiteResult result = switchsplit::run_acceptance(0, std::cout);
  return result.all_passed() ? 0 : 1;
}
