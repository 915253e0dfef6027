// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cimt::text {

std::string_view trim(std::string_view s);

/// Comma-separated fields, each trimmed. No quoting: none of the toolkit's
/// tables carry commas inside fields.
std::vector<std::string_view> split_fields(std::string_view line, char delimiter = ',');

std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_integer(std::string_view s);

/// Locale-independent fixed notation, e.g. format_fixed(175.31, 3) == "175.310".
std::string format_fixed(double value, int decimals);

/// Shortest representation that round-trips to the same double.
std::string format_exact(double value);

}  // namespace cimt::text
