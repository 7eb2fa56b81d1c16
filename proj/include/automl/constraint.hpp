#pragma once

// User constraints: `<metric> <op> <number> [<unit>]`, e.g. `fps >= 10` or
// `latency_ms <= 100 ms`. Identifiers are lowercase snake case.

#include <string>
#include <string_view>

namespace automl {

enum class CompareOp { lt, le, gt, ge };

std::string_view to_string(CompareOp op);  // "<", "<=", ">", ">="

struct Constraint {
  std::string metric;
  CompareOp op = CompareOp::ge;
  double value = 0.0;
  std::string unit;

  bool satisfied_by(double observed) const;
  bool operator==(const Constraint&) const = default;
};

/// Throws Error{BadConstraint} whose message names the 1-based column.
Constraint parse_constraint(std::string_view text);

/// Canonical text form; parse_constraint(format_constraint(c)) == c.
std::string format_constraint(const Constraint& c);

}  // namespace automl
