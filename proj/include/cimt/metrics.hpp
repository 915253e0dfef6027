// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "cimt/band.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cimt {

struct OverlapReport {
    std::string image_id;
    double dice = 0.0;
    double iou = 0.0;
    std::uint64_t intersection_px = 0;
    std::uint64_t union_px = 0;
    std::uint64_t pred_px = 0;
    std::uint64_t ref_px = 0;
    // Both masks empty; dice and iou are then defined as 1.
    bool both_empty = false;
};

/// Dice 2|A∩B|/(|A|+|B|) and IoU |A∩B|/|A∪B|. Throws Error(InvalidInput) on a
/// dimension mismatch.
OverlapReport overlap(const BinaryMask& pred, const BinaryMask& ref);

struct MeasurementPair {
    double pred_um = 0.0;
    double ref_um = 0.0;
};

/// Candidate for agreement analysis; either side may be missing.
struct CandidatePair {
    std::string image_id;
    std::optional<double> pred_um;
    std::optional<double> ref_um;
};

struct BlandAltmanPoint {
    double mean_um = 0.0;
    double diff_um = 0.0;  // pred - ref
};

inline constexpr double kLimitsOfAgreementZ = 1.96;

struct AgreementReport {
    std::size_t n = 0;
    std::size_t excluded = 0;  // candidates dropped for a missing side
    double mae_um = 0.0;
    double rmse_um = 0.0;
    double bias_um = 0.0;
    std::optional<double> pearson_r;
    std::string pearson_note;  // why pearson_r is absent
    std::optional<double> diff_sd_um;
    std::optional<double> loa_low_um;
    std::optional<double> loa_high_um;
    std::vector<BlandAltmanPoint> bland_altman;
};

/// Differences are pred - ref. Needs n >= 1; Pearson and limits of
/// agreement additionally need n >= 2 (and non-zero variance for Pearson).
AgreementReport agreement(std::span<const MeasurementPair> pairs);

/// Keeps only candidates with both sides present and records how many were
/// dropped.
AgreementReport agreement_mutual(std::span<const CandidatePair> candidates);

/// Sample correlation; absent for n < 2 or a constant side.
std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys);

struct SeedSummary {
    std::size_t n = 0;
    double mean = 0.0;
    std::optional<double> sd;  // sample (n - 1) standard deviation
};

SeedSummary seed_summary(std::span<const double> per_seed);

/// "0.7739 $\pm$ 0.0037" style cell, or just the mean when sd is absent.
std::string format_mean_sd(const SeedSummary& summary, int decimals);

}  // namespace cimt
