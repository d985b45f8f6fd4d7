#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace admc {

/// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);

/// Parses the whole of `text` as a double; nullopt on any leftover characters.
std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_int(std::string_view text);

}  // namespace admc
