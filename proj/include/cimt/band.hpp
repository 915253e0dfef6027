// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cimt {

/// Foreground probability per pixel, row-major, for one image at working
/// resolution.
struct ProbabilityMap {
    std::string image_id;
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> values;

    double at(std::size_t x, std::size_t y) const { return values[y * width + x]; }
};

/// Throws Error(InvalidInput) naming the image and the first offending pixel
/// if dimensions are inconsistent or a value is non-finite or outside [0,1].
void validate(const ProbabilityMap& map);

struct BinaryMask {
    std::string image_id;
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> bits;  // 0 or 1
    // Absent for masks that were not produced by thresholding (rasterized
    // references, masks loaded from disk).
    std::optional<double> threshold_used;

    bool at(std::size_t x, std::size_t y) const { return bits[y * width + x] != 0; }
    std::size_t foreground_count() const;
};

BinaryMask empty_mask(std::string image_id, std::size_t width, std::size_t height);

/// Inclusive row range of positive pixels in one column.
struct ColumnSpan {
    int upper = 0;
    int lower = 0;

    friend bool operator==(const ColumnSpan&, const ColumnSpan&) = default;
};

struct BoundaryProfiles {
    std::string image_id;
    std::size_t height = 0;
    std::vector<std::optional<ColumnSpan>> columns;
};

struct ThicknessProfile {
    std::string image_id;
    std::vector<std::optional<double>> per_column_px;
    std::size_t valid_column_count = 0;
};

/// Thickness is counted inclusively: a band covering rows 3..5 is 3 px thick.
inline constexpr std::string_view kThicknessConvention = "inclusive";

inline constexpr double kDefaultThreshold = 0.5;

/// Image-level reduction of a column-wise thickness profile.
struct AggregationPolicy {
    enum class Kind { Mean, Median, TrimmedMean };

    Kind kind = Kind::Mean;
    double trim_fraction = 0.0;  // per tail, TrimmedMean only

    static AggregationPolicy mean() { return {}; }
    static AggregationPolicy median() { return {Kind::Median, 0.0}; }
    static AggregationPolicy trimmed_mean(double fraction);

    /// Accepts "mean", "median" and "trimmed:<fraction>".
    static AggregationPolicy parse(std::string_view text);
    std::string to_string() const;
};

/// bit(x,y) = p(x,y) > threshold (strict). threshold must lie in (0,1).
BinaryMask threshold_map(const ProbabilityMap& map, double threshold);

BoundaryProfiles extract_boundaries(const BinaryMask& mask);

ThicknessProfile thickness_profile(const BoundaryProfiles& boundaries);

std::optional<double> aggregate_cimt_px(const ThicknessProfile& profile,
                                        const AggregationPolicy& policy);

/// Keeps only the largest 8-connected foreground component. Ties go to the
/// component whose first pixel comes first in row-major order.
BinaryMask keep_largest_component(const BinaryMask& mask);

}  // namespace cimt
