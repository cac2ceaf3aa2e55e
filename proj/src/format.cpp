#include "gpobs/format.hpp"

#include <charconv>
#include <cmath>
#include <system_error>

#include "gpobs/error.hpp"

namespace gpobs {

std::string format_double(double value) {
  if (value == 0.0) return "0";  // also folds -0
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) throw Error(ErrorCode::invalid_argument, "cannot format number");
  return std::string(buf, end);
}

double parse_double(std::string_view text) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size() || !std::isfinite(value)) {
    throw Error(ErrorCode::parse_error, "not a finite number: '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace gpobs
