// One line per acceptance criterion; exits nonzero if any fails.

#include <iostream>

#include "mfcert/acceptance.hpp"

int main() {
  using namespace mfcert::acceptance;
  bool all = true;
  for (int id : suite_criteria("all")) {
    const Criterion c = run_criterion(id);
    std::cout << c.line() << std::endl;
    all = all && c.pass();
  }
  std::cout << (all ? "acceptance: all criteria pass" : "acceptance: FAILURES") << std::endl;
  return all ? 0 : 1;
}
