#pragma once

#include <string>
#include <string_view>

namespace gpobs {

// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);

// Exact (correctly rounded) decimal parse; throws Error(parse_error) on junk.
double parse_double(std::string_view text);

}  // namespace gpobs
