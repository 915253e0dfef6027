// SPDX-License-Identifier: Apache-2.0

#include "cimt/simd.hpp"

#include <cmath>

namespace cimt::simd {
namespace {

std::size_t threshold_greater_scalar(std::span<const double> values, double threshold,
                                     std::span<std::uint8_t> out)
{
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double v = values[i];
        if (!std::isfinite(v)) {
            return i;
        }
        out[i] = v > threshold ? 1 : 0;
    }
    return kNoIndex;
}

void column_extents_scalar(std::span<const std::uint8_t> bits, std::size_t width,
                           std::span<std::int32_t> upper, std::span<std::int32_t> lower)
{
    const std::size_t height = width == 0 ? 0 : bits.size() / width;
    for (std::size_t x = 0; x < width; ++x) {
        upper[x] = -1;
        lower[x] = -1;
    }
    for (std::size_t y = 0; y < height; ++y) {
        const std::uint8_t* row = bits.data() + y * width;
        for (std::size_t x = 0; x < width; ++x) {
            if (row[x] != 0) {
                if (upper[x] < 0) {
                    upper[x] = static_cast<std::int32_t>(y);
                }
                lower[x] = static_cast<std::int32_t>(y);
            }
        }
    }
}

OverlapCounts overlap_counts_scalar(std::span<const std::uint8_t> first,
                                    std::span<const std::uint8_t> second)
{
    OverlapCounts counts;
    for (std::size_t i = 0; i < first.size(); ++i) {
        const bool a = first[i] != 0;
        const bool b = second[i] != 0;
        counts.first += a;
        counts.second += b;
        counts.both += a && b;
    }
    return counts;
}

}  // namespace

const Kernels& scalar_kernels()
{
    static const Kernels k{Isa::Scalar, &threshold_greater_scalar, &column_extents_scalar,
                           &overlap_counts_scalar};
    return k;
}

}  // namespace cimt::simd
