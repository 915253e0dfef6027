// SPDX-License-Identifier: Apache-2.0

#include "cimt/band.hpp"

#include "cimt/error.hpp"
#include "cimt/numeric.hpp"
#include "cimt/simd.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace cimt {

namespace {

std::string pixel_location(std::size_t index, std::size_t width)
{
    std::ostringstream os;
    os << "(x=" << index % width << ", y=" << index / width << ")";
    return os.str();
}

void check_dimensions(const std::string& id, std::size_t width, std::size_t height, std::size_t size)
{
    if (width == 0 || height == 0) {
        throw Error(ErrorKind::InvalidInput, "image '" + id + "' has zero width or height");
    }
    if (size != width * height) {
        throw Error(ErrorKind::InvalidInput, "image '" + id + "' holds " + std::to_string(size) +
                                                 " values, expected " + std::to_string(width * height));
    }
}

}  // namespace

void validate(const ProbabilityMap& map)
{
    check_dimensions(map.image_id, map.width, map.height, map.values.size());
    for (std::size_t i = 0; i < map.values.size(); ++i) {
        const double v = map.values[i];
        if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
            std::ostringstream os;
            os << "image '" << map.image_id << "' has probability " << v << " at "
               << pixel_location(i, map.width);
            throw Error(ErrorKind::InvalidInput, os.str());
        }
    }
}

std::size_t BinaryMask::foreground_count() const
{
    return static_cast<std::size_t>(std::count_if(bits.begin(), bits.end(), [](std::uint8_t b) { return b != 0; }));
}

BinaryMask empty_mask(std::string image_id, std::size_t width, std::size_t height)
{
    BinaryMask mask;
    mask.image_id = std::move(image_id);
    mask.width = width;
    mask.height = height;
    mask.bits.assign(width * height, 0);
    return mask;
}

AggregationPolicy AggregationPolicy::trimmed_mean(double fraction)
{
    if (!(fraction >= 0.0 && fraction < 0.5)) {
        throw Error(ErrorKind::InvalidConfig, "trimmed-mean fraction must lie in [0, 0.5), got " +
                                                  std::to_string(fraction));
    }
    return {Kind::TrimmedMean, fraction};
}

AggregationPolicy AggregationPolicy::parse(std::string_view text)
{
    if (text == "mean") {
        return mean();
    }
    if (text == "median") {
        return median();
    }
    constexpr std::string_view prefix = "trimmed:";
    if (text.starts_with(prefix)) {
        const std::string_view number = text.substr(prefix.size());
        double fraction = 0.0;
        const auto [end, ec] = std::from_chars(number.data(), number.data() + number.size(), fraction);
        if (ec != std::errc{} || end != number.data() + number.size()) {
            throw Error(ErrorKind::InvalidConfig, "bad trimmed-mean fraction '" + std::string(number) + "'");
        }
        return trimmed_mean(fraction);
    }
    throw Error(ErrorKind::InvalidConfig,
                "unknown aggregation '" + std::string(text) + "' (expected mean, median or trimmed:<f>)");
}

std::string AggregationPolicy::to_string() const
{
    switch (kind) {
    case Kind::Mean:
        return "mean";
    case Kind::Median:
        return "median";
    case Kind::TrimmedMean: {
        std::ostringstream os;
        os << "trimmed:" << trim_fraction;
        return os.str();
    }
    }
    return "mean";
}

BinaryMask threshold_map(const ProbabilityMap& map, double threshold)
{
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw Error(ErrorKind::InvalidConfig,
                    "threshold must lie in (0,1), got " + std::to_string(threshold));
    }
    check_dimensions(map.image_id, map.width, map.height, map.values.size());

    BinaryMask mask = empty_mask(map.image_id, map.width, map.height);
    mask.threshold_used = threshold;
    const std::size_t bad = simd::kernels().threshold_greater(map.values, threshold, mask.bits);
    if (bad != simd::kNoIndex) {
        throw Error(ErrorKind::InvalidInput, "image '" + map.image_id +
                                                 "' has a non-finite probability at " +
                                                 pixel_location(bad, map.width));
    }
    return mask;
}

BoundaryProfiles extract_boundaries(const BinaryMask& mask)
{
    check_dimensions(mask.image_id, mask.width, mask.height, mask.bits.size());

    std::vector<std::int32_t> upper(mask.width);
    std::vector<std::int32_t> lower(mask.width);
    simd::kernels().column_extents(mask.bits, mask.width, upper, lower);

    BoundaryProfiles out;
    out.image_id = mask.image_id;
    out.height = mask.height;
    out.columns.resize(mask.width);
    for (std::size_t x = 0; x < mask.width; ++x) {
        if (upper[x] >= 0) {
            out.columns[x] = ColumnSpan{upper[x], lower[x]};
        }
    }
    return out;
}

ThicknessProfile thickness_profile(const BoundaryProfiles& boundaries)
{
    ThicknessProfile profile;
    profile.image_id = boundaries.image_id;
    profile.per_column_px.resize(boundaries.columns.size());
    for (std::size_t x = 0; x < boundaries.columns.size(); ++x) {
        if (const auto& span = boundaries.columns[x]) {
            profile.per_column_px[x] = static_cast<double>(span->lower - span->upper + 1);
            ++profile.valid_column_count;
        }
    }
    return profile;
}

std::optional<double> aggregate_cimt_px(const ThicknessProfile& profile,
                                        const AggregationPolicy& policy)
{
    if (policy.kind == AggregationPolicy::Kind::TrimmedMean &&
        !(policy.trim_fraction >= 0.0 && policy.trim_fraction < 0.5)) {
        throw Error(ErrorKind::InvalidConfig, "trimmed-mean fraction must lie in [0, 0.5)");
    }

    std::vector<double> values;
    values.reserve(profile.valid_column_count);
    for (const auto& v : profile.per_column_px) {
        if (v) {
            values.push_back(*v);
        }
    }
    if (values.empty()) {
        return std::nullopt;
    }

    switch (policy.kind) {
    case AggregationPolicy::Kind::Mean:
        return compensated_mean(values);
    case AggregationPolicy::Kind::Median: {
        std::sort(values.begin(), values.end());
        const std::size_t n = values.size();
        if (n % 2 == 1) {
            return values[n / 2];
        }
        return 0.5 * (values[n / 2 - 1] + values[n / 2]);
    }
    case AggregationPolicy::Kind::TrimmedMean: {
        std::sort(values.begin(), values.end());
        const auto drop = static_cast<std::size_t>(std::floor(policy.trim_fraction * static_cast<double>(values.size())));
        const std::span<const double> kept(values.data() + drop, values.size() - 2 * drop);
        return compensated_mean(kept);
    }
    }
    return std::nullopt;
}

BinaryMask keep_largest_component(const BinaryMask& mask)
{
    check_dimensions(mask.image_id, mask.width, mask.height, mask.bits.size());
    const std::size_t w = mask.width;
    const std::size_t h = mask.height;

    std::vector<std::int32_t> label(w * h, -1);
    std::vector<std::size_t> stack;
    std::int32_t best_label = -1;
    std::size_t best_size = 0;
    std::int32_t next_label = 0;

    for (std::size_t start = 0; start < w * h; ++start) {
        if (mask.bits[start] == 0 || label[start] >= 0) {
            continue;
        }
        const std::int32_t current = next_label++;
        std::size_t size = 0;
        stack.push_back(start);
        label[start] = current;
        while (!stack.empty()) {
            const std::size_t idx = stack.back();
            stack.pop_back();
            ++size;
            const auto x = static_cast<std::ptrdiff_t>(idx % w);
            const auto y = static_cast<std::ptrdiff_t>(idx / w);
            for (std::ptrdiff_t dy = -1; dy <= 1; ++dy) {
                for (std::ptrdiff_t dx = -1; dx <= 1; ++dx) {
                    const std::ptrdiff_t nx = x + dx;
                    const std::ptrdiff_t ny = y + dy;
                    if (nx < 0 || ny < 0 || nx >= static_cast<std::ptrdiff_t>(w) ||
                        ny >= static_cast<std::ptrdiff_t>(h)) {
                        continue;
                    }
                    const auto n = static_cast<std::size_t>(ny) * w + static_cast<std::size_t>(nx);
                    if (mask.bits[n] != 0 && label[n] < 0) {
                        label[n] = current;
                        stack.push_back(n);
                    }
                }
            }
        }
        if (size > best_size) {
            best_size = size;
            best_label = current;
        }
    }

    BinaryMask out = mask;
    for (std::size_t i = 0; i < out.bits.size(); ++i) {
        out.bits[i] = (best_label >= 0 && label[i] == best_label) ? 1 : 0;
    }
    return out;
}

}  // namespace cimt
