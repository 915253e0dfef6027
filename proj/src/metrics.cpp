// SPDX-License-Identifier: Apache-2.0

#include "cimt/metrics.hpp"

#include "cimt/error.hpp"
#include "cimt/numeric.hpp"
#include "cimt/simd.hpp"
#include "cimt/text.hpp"

#include <algorithm>
#include <cmath>

namespace cimt {

OverlapReport overlap(const BinaryMask& pred, const BinaryMask& ref)
{
    if (pred.width != ref.width || pred.height != ref.height || pred.bits.size() != ref.bits.size()) {
        throw Error(ErrorKind::InvalidInput, "image '" + pred.image_id + "': mask sizes differ (" +
                                                 std::to_string(pred.width) + "x" + std::to_string(pred.height) +
                                                 " vs " + std::to_string(ref.width) + "x" +
                                                 std::to_string(ref.height) + ")");
    }
    const simd::OverlapCounts c = simd::kernels().overlap_counts(pred.bits, ref.bits);

    OverlapReport r;
    r.image_id = pred.image_id;
    r.pred_px = c.first;
    r.ref_px = c.second;
    r.intersection_px = c.both;
    r.union_px = c.first + c.second - c.both;
    if (r.union_px == 0) {
        r.both_empty = true;
        r.dice = 1.0;
        r.iou = 1.0;
        return r;
    }
    r.dice = 2.0 * static_cast<double>(c.both) / static_cast<double>(c.first + c.second);
    r.iou = static_cast<double>(c.both) / static_cast<double>(r.union_px);
    return r;
}

std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys)
{
    const std::size_t n = xs.size();
    if (n < 2 || ys.size() != n) {
        return std::nullopt;
    }
    const double mx = compensated_mean(xs);
    const double my = compensated_mean(ys);
    CompensatedSum sxx;
    CompensatedSum syy;
    CompensatedSum sxy;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxx.add(dx * dx);
        syy.add(dy * dy);
        sxy.add(dx * dy);
    }
    if (sxx.value() <= 0.0 || syy.value() <= 0.0) {
        return std::nullopt;
    }
    const double r = sxy.value() / std::sqrt(sxx.value() * syy.value());
    return std::clamp(r, -1.0, 1.0);
}

AgreementReport agreement(std::span<const MeasurementPair> pairs)
{
    if (pairs.empty()) {
        throw Error(ErrorKind::InvalidInput, "agreement needs at least one (pred, ref) pair");
    }
    AgreementReport r;
    r.n = pairs.size();

    std::vector<double> preds;
    std::vector<double> refs;
    std::vector<double> diffs;
    preds.reserve(r.n);
    refs.reserve(r.n);
    diffs.reserve(r.n);
    CompensatedSum abs_sum;
    CompensatedSum sq_sum;
    for (const auto& p : pairs) {
        const double d = p.pred_um - p.ref_um;
        preds.push_back(p.pred_um);
        refs.push_back(p.ref_um);
        diffs.push_back(d);
        abs_sum.add(std::fabs(d));
        sq_sum.add(d * d);
        r.bland_altman.push_back({0.5 * (p.pred_um + p.ref_um), d});
    }
    const auto n = static_cast<double>(r.n);
    r.bias_um = compensated_mean(diffs);
    r.mae_um = abs_sum.value() / n;
    r.rmse_um = std::sqrt(sq_sum.value() / n);

    if (r.n < 2) {
        r.pearson_note = "fewer than 2 pairs";
        return r;
    }
    r.pearson_r = pearson(preds, refs);
    if (!r.pearson_r) {
        r.pearson_note = "zero variance in predictions or references";
    }
    CompensatedSum dev;
    for (double d : diffs) {
        dev.add((d - r.bias_um) * (d - r.bias_um));
    }
    r.diff_sd_um = std::sqrt(dev.value() / (n - 1.0));
    r.loa_low_um = r.bias_um - kLimitsOfAgreementZ * *r.diff_sd_um;
    r.loa_high_um = r.bias_um + kLimitsOfAgreementZ * *r.diff_sd_um;
    return r;
}

AgreementReport agreement_mutual(std::span<const CandidatePair> candidates)
{
    std::vector<MeasurementPair> pairs;
    std::size_t excluded = 0;
    for (const auto& c : candidates) {
        if (c.pred_um && c.ref_um) {
            pairs.push_back({*c.pred_um, *c.ref_um});
        } else {
            ++excluded;
        }
    }
    AgreementReport r = agreement(pairs);
    r.excluded = excluded;
    return r;
}

SeedSummary seed_summary(std::span<const double> per_seed)
{
    if (per_seed.empty()) {
        throw Error(ErrorKind::InvalidInput, "seed summary needs at least one value");
    }
    SeedSummary s;
    s.n = per_seed.size();
    s.mean = compensated_mean(per_seed);
    if (s.n >= 2) {
        CompensatedSum dev;
        for (double v : per_seed) {
            dev.add((v - s.mean) * (v - s.mean));
        }
        s.sd = std::sqrt(dev.value() / static_cast<double>(s.n - 1));
    }
    return s;
}

std::string format_mean_sd(const SeedSummary& summary, int decimals)
{
    std::string out = text::format_fixed(summary.mean, decimals);
    if (summary.sd) {
        out += " $\\pm$ " + text::format_fixed(*summary.sd, decimals);
    }
    return out;
}

}  // namespace cimt
