#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "thirdgrade/params.hpp"

namespace thirdgrade::cli {

enum ExitCode { kOk = 0, kValidation = 1, kViolation = 2, kBlowup = 3 };

// Entry point shared by the executable and the tests.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct CheckRow {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

// The operator invariant suite behind `check-operators`.
std::vector<CheckRow> operator_checks(const Config& cfg, int trials);

}  // namespace thirdgrade::cli
