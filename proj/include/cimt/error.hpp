// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cimt {

enum class ErrorKind {
    InvalidInput,
    InvalidConfig,
    Parse,
    Geometry,
    Numeric,
    DuplicateId,
    UnparseableId,
    Io,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the toolkit. The kind lets callers (and the CLI
/// exit-code mapping) distinguish configuration problems from bad inputs.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Collects non-fatal conditions (implausible calibration factors, empty
/// contour overlap) so library code stays silent and callers decide how to log.
struct Diagnostics {
    std::vector<std::string> warnings;

    void warn(std::string message) { warnings.push_back(std::move(message)); }
};

}  // namespace cimt
