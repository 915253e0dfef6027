// SPDX-License-Identifier: Apache-2.0

#include "cimt/error.hpp"

namespace cimt {

std::string_view to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::InvalidInput:
        return "invalid input";
    case ErrorKind::InvalidConfig:
        return "invalid config";
    case ErrorKind::Parse:
        return "parse error";
    case ErrorKind::Geometry:
        return "geometry error";
    case ErrorKind::Numeric:
        return "numeric error";
    case ErrorKind::DuplicateId:
        return "duplicate id";
    case ErrorKind::UnparseableId:
        return "unparseable id";
    case ErrorKind::Io:
        return "io error";
    }
    return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind)
{
}

}  // namespace cimt
