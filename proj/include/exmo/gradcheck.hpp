#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace exmo {

enum class Precision { single, double_ };

Precision parse_precision(const std::string& s);

struct GradCheckRow {
  std::string op;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  std::size_t checked = 0;
  bool pass() const { return max_rel_error < tolerance; }
};

/// Compares every operator's analytic backward pass against central finite
/// differences of a random linear functional of its output, on random
/// inputs no larger than 2x8x8. In double precision a final row checks 20
/// random weights of a complete 32x32 network end to end.
std::vector<GradCheckRow> run_gradcheck(Precision precision, std::uint64_t seed = 0);

/// Relative error |a - n| / max(|a|, |n|), falling back to the absolute
/// difference when both magnitudes are below `floor`.
double relative_error(double analytic, double numeric, double floor);

}  // namespace exmo
