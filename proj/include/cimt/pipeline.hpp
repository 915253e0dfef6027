// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "cimt/band.hpp"
#include "cimt/calibration.hpp"

#include <optional>

namespace cimt {

inline constexpr long long kDefaultTargetHeight = 512;

struct MeasureOptions {
    double threshold = kDefaultThreshold;
    AggregationPolicy policy;
    long long target_height = kDefaultTargetHeight;
    bool largest_component = false;
};

/// Everything produced while measuring one image. `result` is absent when no
/// column holds a positive pixel.
struct Measurement {
    BinaryMask mask;
    ThicknessProfile profile;
    std::optional<MeasurementResult> result;
};

/// Column-wise thickness of an already binarized band at working resolution,
/// converted to µm. The mask height must equal `target_height`.
Measurement measure_mask(BinaryMask mask, const CalibrationRecord& calibration, const AggregationPolicy& policy,
                         long long target_height, bool largest_component = false);

/// threshold -> optional largest component -> boundaries -> thickness ->
/// aggregate -> µm.
Measurement measure_probability_map(const ProbabilityMap& map, const CalibrationRecord& calibration,
                                    const MeasureOptions& options);

}  // namespace cimt
