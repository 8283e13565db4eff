#pragma once
#include <string>

namespace reldiff {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

constexpr int kCriteria = 13;
CriterionResult run_criterion(int id);

}  // namespace reldiff
