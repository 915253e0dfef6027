// SPDX-License-Identifier: Apache-2.0

#include "cimt/error.hpp"
#include "cimt/simd.hpp"

#include <cstdlib>
#include <string>

namespace cimt::simd {

std::string_view to_string(Isa isa)
{
    switch (isa) {
    case Isa::Scalar:
        return "scalar";
    case Isa::Avx2:
        return "avx2";
    }
    return "unknown";
}

bool isa_available(Isa isa)
{
    switch (isa) {
    case Isa::Scalar:
        return true;
    case Isa::Avx2:
#if defined(CIMT_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
        return __builtin_cpu_supports("avx2") != 0;
#else
        return false;
#endif
    }
    return false;
}

std::vector<Isa> available_isas()
{
    std::vector<Isa> out;
    for (Isa isa : {Isa::Scalar, Isa::Avx2}) {
        if (isa_available(isa)) {
            out.push_back(isa);
        }
    }
    return out;
}

const Kernels& kernels_for(Isa isa)
{
    if (!isa_available(isa)) {
        throw Error(ErrorKind::InvalidConfig,
                    "SIMD variant '" + std::string(to_string(isa)) + "' is not available");
    }
#if defined(CIMT_HAVE_AVX2)
    if (isa == Isa::Avx2) {
        return avx2_kernels();
    }
#endif
    return scalar_kernels();
}

namespace {

const Kernels& select_kernels()
{
    if (const char* forced = std::getenv("CIMT_KIT_SIMD")) {
        if (std::string_view(forced) == "scalar") {
            return scalar_kernels();
        }
    }
    return kernels_for(available_isas().back());
}

}  // namespace

const Kernels& kernels()
{
    static const Kernels& active = select_kernels();
    return active;
}

}  // namespace cimt::simd
