#include "vrsim/format.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace vrsim {

std::string format_double(double v) {
  if (!std::isfinite(v)) throw std::domain_error("non-finite value cannot be serialized");
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw std::domain_error("float formatting failed");
  std::string out(buf, end);
  if (out.find_first_of(".e") == std::string::npos) out += ".0";
  return out;
}

}  // namespace vrsim
