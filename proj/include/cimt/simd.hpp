// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

namespace cimt::simd {

enum class Isa {
    Scalar,
    Avx2,
};

std::string_view to_string(Isa isa);

inline constexpr std::size_t kNoIndex = std::numeric_limits<std::size_t>::max();

struct OverlapCounts {
    std::uint64_t first = 0;
    std::uint64_t second = 0;
    std::uint64_t both = 0;

    friend bool operator==(const OverlapCounts&, const OverlapCounts&) = default;
};

/// Data-parallel inner loops. Every variant must produce bit-identical output
/// to the scalar reference; tests/test_simd.cpp enforces this.
struct Kernels {
    Isa isa;

    /// out[i] = values[i] > threshold. Returns the index of the first
    /// non-finite value (out is then unspecified) or kNoIndex.
    std::size_t (*threshold_greater)(std::span<const double> values, double threshold,
                                     std::span<std::uint8_t> out);

    /// Row-major bits of size width*height. For each column writes the first
    /// and last row holding a nonzero byte, or -1 for both when the column is
    /// empty.
    void (*column_extents)(std::span<const std::uint8_t> bits, std::size_t width,
                           std::span<std::int32_t> upper, std::span<std::int32_t> lower);

    /// Nonzero counts of each operand and of their intersection.
    OverlapCounts (*overlap_counts)(std::span<const std::uint8_t> first,
                                    std::span<const std::uint8_t> second);
};

const Kernels& scalar_kernels();
#if defined(CIMT_HAVE_AVX2)
const Kernels& avx2_kernels();
#endif

bool isa_available(Isa isa);
std::vector<Isa> available_isas();

/// Kernels for a specific ISA; throws cimt::Error if it is not available on
/// this build or CPU.
const Kernels& kernels_for(Isa isa);

/// Best available ISA, unless CIMT_KIT_SIMD=scalar forces the reference path.
/// Resolved once per process.
const Kernels& kernels();

}  // namespace cimt::simd
