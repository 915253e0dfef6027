// SPDX-License-Identifier: Apache-2.0

#include "cimt/pipeline.hpp"

#include "cimt/error.hpp"

namespace cimt {

Measurement measure_mask(BinaryMask mask, const CalibrationRecord& calibration, const AggregationPolicy& policy,
                         long long target_height, bool largest_component)
{
    if (target_height <= 0) {
        throw Error(ErrorKind::InvalidConfig, "target height must be positive");
    }
    if (mask.height != static_cast<std::size_t>(target_height)) {
        throw Error(ErrorKind::InvalidInput, "image '" + mask.image_id + "' has height " +
                                                 std::to_string(mask.height) + ", expected target height " +
                                                 std::to_string(target_height));
    }
    const WorkingScale scale = working_pixel_size(calibration, target_height);

    Measurement m;
    m.mask = largest_component ? keep_largest_component(mask) : std::move(mask);
    m.profile = thickness_profile(extract_boundaries(m.mask));
    if (const auto px = aggregate_cimt_px(m.profile, policy)) {
        MeasurementResult r;
        r.image_id = m.mask.image_id;
        r.cimt_px_working = *px;
        r.cimt_um = px_to_um(*px, scale);
        r.threshold_used = m.mask.threshold_used;
        r.scale = scale;
        r.valid_columns = m.profile.valid_column_count;
        m.result = std::move(r);
    }
    return m;
}

Measurement measure_probability_map(const ProbabilityMap& map, const CalibrationRecord& calibration,
                                    const MeasureOptions& options)
{
    return measure_mask(threshold_map(map, options.threshold), calibration, options.policy,
                        options.target_height, options.largest_component);
}

}  // namespace cimt
