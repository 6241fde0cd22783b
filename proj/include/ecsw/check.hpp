#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace ecsw {

/// One verified property: residual compared against a tolerance.
/// With `lower_bound` set, the check passes when residual > tolerance
/// (non-triviality guards); otherwise when residual < tolerance.
struct CheckRecord {
  std::string name;
  std::string property;
  double residual = 0.0;
  double tolerance = 0.0;
  bool lower_bound = false;
  bool pass = false;
  bool skipped = false;
  std::string note;
};

inline CheckRecord make_check(std::string name, std::string property, double residual,
                              double tolerance, bool lower_bound = false) {
  CheckRecord r;
  r.name = std::move(name);
  r.property = std::move(property);
  r.residual = residual;
  r.tolerance = tolerance;
  r.lower_bound = lower_bound;
  r.pass = std::isfinite(residual) && (lower_bound ? residual > tolerance : residual < tolerance);
  return r;
}

inline CheckRecord skipped_check(std::string name, std::string property, std::string note) {
  CheckRecord r;
  r.name = std::move(name);
  r.property = std::move(property);
  r.skipped = true;
  r.pass = true;
  r.note = std::move(note);
  return r;
}

inline bool all_pass(const std::vector<CheckRecord>& records) {
  for (const auto& r : records)
    if (!r.pass) return false;
  return true;
}

}  // namespace ecsw
