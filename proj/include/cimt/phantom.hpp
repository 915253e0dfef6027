// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "cimt/band.hpp"
#include "cimt/calibration.hpp"
#include "cimt/contours.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace cimt {

// Synthetic bands with analytically known thickness. Phantoms are generated
// directly at working resolution (orig_height == height), so the pixel size in
// the calibration record applies unchanged.

enum class CurveKind { Constant, Linear, Sinusoidal };

/// Row-valued function of the column index.
struct CurveSpec {
    CurveKind kind = CurveKind::Constant;
    double base = 0.0;
    double slope = 0.0;      // Linear: px per column
    double amplitude = 0.0;  // Sinusoidal: px
    double period = 1.0;     // Sinusoidal: columns
    double phase = 0.0;      // Sinusoidal: rad

    static CurveSpec constant(double value) { return {CurveKind::Constant, value}; }
    static CurveSpec linear(double base, double slope) { return {CurveKind::Linear, base, slope}; }
    static CurveSpec sinusoidal(double base, double amplitude, double period, double phase)
    {
        return {CurveKind::Sinusoidal, base, 0.0, amplitude, period, phase};
    }

    double operator()(double x) const;
};

/// Curve rows are snapped to multiples of this quantum (a power of two), which
/// keeps li + thickness and ma - li exact and lets contour files round-trip.
/// An li row landing exactly on a pixel center moves down by one quantum.
inline constexpr double kRowQuantum = 1.0 / 1024.0;

struct PhantomSpec {
    std::string image_id = "phantom";
    std::size_t width = 512;
    std::size_t height = 512;
    CurveSpec li_curve = CurveSpec::constant(200.0);
    CurveSpec thickness_curve = CurveSpec::constant(20.0);
    double edge_softness = 0.0;       // px; 0 gives a hard band
    double probability_offset = 0.0;  // added before noise, in [-0.3, 0.3]
    double mm_per_pixel = 0.06;
    double noise_sd = 0.0;
    std::uint64_t rng_seed = 0;

    /// Band inside the image at every column (1 <= li, li + thickness <=
    /// height - 2), thickness >= 2 px, and the scalar parameters in range.
    /// Throws Error(InvalidInput).
    void validate() const;
};

struct PhantomBundle {
    ProbabilityMap prob;
    ContourPair contours;
    CalibrationRecord calibration;
    double analytic_cimt_um = 0.0;
    std::vector<double> analytic_profile_px;
};

/// Pixel (x, y) with center c = y + 0.5 gets
///   clamp(sig((c - li) / s) * sig((li + thick - c) / s) + offset + noise, 0, 1)
/// and, for s == 0, 1 inside the band (pixel-center rule) and 0 outside before
/// offset and noise. Noise is N(0, noise_sd) per pixel in row-major order from
/// SplitMix64(rng_seed).
PhantomBundle generate(const PhantomSpec& spec);

/// `n` phantoms varying around `base`, ids clin_0001_L, clin_0001_R,
/// clin_0002_L, ... Per phantom, drawn from SplitMix64(variation_seed):
///   li family: constant, linear or sinusoidal with equal probability
///   li base in [0.35, 0.55] * height; slope in [-0.04, 0.04];
///   amplitude in [2, 8] px; period in [width / 3, 2 * width]; phase in [0, 2 pi)
///   thickness base in [12, 28] px, an integer when the base thickness curve is
///   constant; otherwise the base family with amplitude up to 0.2 * base
///   mm_per_pixel in [0.8, 1.2] * base.mm_per_pixel
///   rng_seed: fresh 64-bit draw
/// Softness, offset and noise level are copied from `base`. Draws that would
/// leave the image are redrawn.
std::vector<PhantomBundle> generate_suite(std::size_t n, const PhantomSpec& base, std::uint64_t variation_seed);

/// Writes `<id>.prob.pgm`, `<id>.li.txt` and `<id>.ma.txt` for every bundle,
/// plus `calibration.csv` and `analytic.csv` (`image_id,analytic_cimt_um`).
void write_suite(const std::filesystem::path& dir, std::span<const PhantomBundle> bundles);

}  // namespace cimt
