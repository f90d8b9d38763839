#pragma once

#include <string>
#include <string_view>

namespace hjlab {

/// Shortest decimal representation that parses back to the identical double.
std::string format_double(double v);

/// Strict parse of a full token; throws PreconditionError on junk.
double parse_double(std::string_view token);
long long parse_int(std::string_view token);

}  // namespace hjlab
