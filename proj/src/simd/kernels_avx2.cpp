// SPDX-License-Identifier: Apache-2.0
//
// Compiled with -mavx2; only reached after a runtime CPU check.

#include "cimt/simd.hpp"

#include <immintrin.h>

#include <bit>
#include <cmath>

namespace cimt::simd {
namespace {

std::size_t threshold_greater_avx2(std::span<const double> values, double threshold,
                                   std::span<std::uint8_t> out)
{
    const std::size_t n = values.size();
    const double* src = values.data();
    std::uint8_t* dst = out.data();

    // |v| < inf is false for NaN and +-inf alike.
    const __m256d abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
    const __m256d inf = _mm256_set1_pd(INFINITY);
    const __m256d t = _mm256_set1_pd(threshold);

    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(src + i);
        const __m256d finite = _mm256_cmp_pd(_mm256_and_pd(v, abs_mask), inf, _CMP_LT_OQ);
        const int finite_bits = _mm256_movemask_pd(finite);
        if (finite_bits != 0xF) {
            return i + static_cast<std::size_t>(std::countr_one(static_cast<unsigned>(finite_bits)));
        }
        const int gt = _mm256_movemask_pd(_mm256_cmp_pd(v, t, _CMP_GT_OQ));
        dst[i + 0] = static_cast<std::uint8_t>(gt & 1);
        dst[i + 1] = static_cast<std::uint8_t>((gt >> 1) & 1);
        dst[i + 2] = static_cast<std::uint8_t>((gt >> 2) & 1);
        dst[i + 3] = static_cast<std::uint8_t>((gt >> 3) & 1);
    }
    for (; i < n; ++i) {
        const double v = src[i];
        if (!std::isfinite(v)) {
            return i;
        }
        dst[i] = v > threshold ? 1 : 0;
    }
    return kNoIndex;
}

void column_extents_avx2(std::span<const std::uint8_t> bits, std::size_t width,
                         std::span<std::int32_t> upper, std::span<std::int32_t> lower)
{
    const std::size_t height = width == 0 ? 0 : bits.size() / width;
    const std::size_t vec_end = width - width % 8;
    const __m256i zero = _mm256_setzero_si256();
    const __m256i none = _mm256_set1_epi32(-1);
    const __m256i int_max = _mm256_set1_epi32(0x7fffffff);

    // Eight columns at a time. Rows are visited in increasing order, so the
    // last set row seen is the lower extent; the upper extent is a running min.
    for (std::size_t x = 0; x < vec_end; x += 8) {
        __m256i up = int_max;
        __m256i lo = none;
        for (std::size_t y = 0; y < height; ++y) {
            const __m128i raw = _mm_loadl_epi64(
                reinterpret_cast<const __m128i*>(bits.data() + y * width + x));
            const __m256i widened = _mm256_cvtepu8_epi32(raw);
            const __m256i set = _mm256_cmpgt_epi32(widened, zero);
            const __m256i row = _mm256_set1_epi32(static_cast<int>(y));
            up = _mm256_min_epi32(up, _mm256_blendv_epi8(int_max, row, set));
            lo = _mm256_blendv_epi8(lo, row, set);
        }
        // Empty columns: up is still INT_MAX, map to -1.
        const __m256i empty = _mm256_cmpeq_epi32(up, int_max);
        up = _mm256_blendv_epi8(up, none, empty);
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(upper.data() + x), up);
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(lower.data() + x), lo);
    }
    for (std::size_t x = vec_end; x < width; ++x) {
        upper[x] = -1;
        lower[x] = -1;
        for (std::size_t y = 0; y < height; ++y) {
            if (bits[y * width + x] != 0) {
                if (upper[x] < 0) {
                    upper[x] = static_cast<std::int32_t>(y);
                }
                lower[x] = static_cast<std::int32_t>(y);
            }
        }
    }
}

OverlapCounts overlap_counts_avx2(std::span<const std::uint8_t> first,
                                  std::span<const std::uint8_t> second)
{
    const std::size_t n = first.size();
    const __m256i zero = _mm256_setzero_si256();
    OverlapCounts counts;
    std::size_t i = 0;
    for (; i + 32 <= n; i += 32) {
        const __m256i a = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(first.data() + i));
        const __m256i b = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(second.data() + i));
        // Mask bits are set for zero bytes; invert to count nonzero ones.
        const auto a_set = ~static_cast<std::uint32_t>(_mm256_movemask_epi8(_mm256_cmpeq_epi8(a, zero)));
        const auto b_set = ~static_cast<std::uint32_t>(_mm256_movemask_epi8(_mm256_cmpeq_epi8(b, zero)));
        counts.first += static_cast<std::uint64_t>(std::popcount(a_set));
        counts.second += static_cast<std::uint64_t>(std::popcount(b_set));
        counts.both += static_cast<std::uint64_t>(std::popcount(a_set & b_set));
    }
    for (; i < n; ++i) {
        const bool a = first[i] != 0;
        const bool b = second[i] != 0;
        counts.first += a;
        counts.second += b;
        counts.both += a && b;
    }
    return counts;
}

}  // namespace

const Kernels& avx2_kernels()
{
    static const Kernels k{Isa::Avx2, &threshold_greater_avx2, &column_extents_avx2,
                           &overlap_counts_avx2};
    return k;
}

}  // namespace cimt::simd
