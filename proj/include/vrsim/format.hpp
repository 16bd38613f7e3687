#pragma once

#include <string>

namespace vrsim {

/// Shortest decimal text that parses back to exactly `v`.
/// Integral values keep a trailing ".0" so they stay floats on re-read.
/// Throws std::domain_error for NaN and infinities.
std::string format_double(double v);

}  // namespace vrsim
