// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "cimt/band.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace cimt {

// Binary PGM (P5). Probability maps are stored with maxval 65535 as 16-bit
// big-endian samples, v -> v / 65535. Masks are 8-bit with 0 / 255.

inline constexpr std::string_view kProbabilitySuffix = ".prob.pgm";
inline constexpr std::string_view kMaskSuffix = ".mask.pgm";

/// Accepts any maxval in [1, 65535]; probability = sample / maxval.
ProbabilityMap read_probability_pgm(std::istream& in, std::string image_id);
ProbabilityMap read_probability_pgm(const std::filesystem::path& path);

/// Quantizes each probability to round(p * 65535).
void write_probability_pgm(std::ostream& out, const ProbabilityMap& map);
void write_probability_pgm(const std::filesystem::path& path, const ProbabilityMap& map);

/// Nonzero samples are foreground.
BinaryMask read_mask_pgm(std::istream& in, std::string image_id);
BinaryMask read_mask_pgm(const std::filesystem::path& path);

void write_mask_pgm(std::ostream& out, const BinaryMask& mask);
void write_mask_pgm(const std::filesystem::path& path, const BinaryMask& mask);

/// "<dir>/clin_0001_L.prob.pgm" -> "clin_0001_L". Returns the plain stem when
/// the suffix does not match.
std::string image_id_from_path(const std::filesystem::path& path, std::string_view suffix);

}  // namespace cimt
