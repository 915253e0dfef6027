// SPDX-License-Identifier: Apache-2.0
//
// Acceptance checks. One PASS/FAIL line per criterion; exit status is nonzero
// if any criterion fails.

#include "cimt/calibrator.hpp"
#include "cimt/cli.hpp"
#include "cimt/contours.hpp"
#include "cimt/metrics.hpp"
#include "cimt/phantom.hpp"
#include "cimt/pipeline.hpp"
#include "cimt/random.hpp"
#include "cimt/splits.hpp"
#include "cimt/text.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace fs = std::filesystem;
using namespace cimt;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(const char* id, const char* title, double budget_s, const std::function<Outcome()>& check)
{
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = check();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (elapsed > budget_s) {
        o.pass = false;
        o.detail += "; runtime " + text::format_fixed(elapsed, 2) + " s over budget";
    }
    if (!o.pass) {
        ++failures;
    }
    std::printf("%s  %s %s: %s [%.3f s / %.0f s]\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.c_str(),
                elapsed, budget_s);
}

std::string fmt(double v, int decimals = 6)
{
    return text::format_fixed(v, decimals);
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p)
{
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(p));
    for (std::string line; std::getline(in, line);) {
        std::vector<std::string> row;
        for (const auto f : text::split_fields(line)) {
            row.emplace_back(f);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

int cli_run(std::vector<std::string> args)
{
    args.insert(args.begin(), "cimt_kit");
    return cli::run(args);
}

// ------------------------------------------------------------------ criteria

Outcome seed_summary_arithmetic()
{
    const std::vector<double> dice = {0.771, 0.773, 0.778};
    const std::vector<double> mae = {175.310, 194.487, 173.688};
    const SeedSummary d = seed_summary(dice);
    const SeedSummary m = seed_summary(mae);

    // The per-seed dice values are printed to 3 decimals, so each true value
    // lies within 0.0005 of its printed one. The mean moves by at most that
    // much; the sample sd by at most ||delta||_2 / sqrt(n - 1). Half a unit
    // of the summary's own 4-decimal print is added on top.
    const double input_half_ulp = 0.0005;
    const double print_half_ulp = 0.00005;
    const double mean_tol = input_half_ulp + print_half_ulp;
    const double sd_tol = std::sqrt(3.0) * input_half_ulp / std::sqrt(2.0) + print_half_ulp;
    const bool dice_ok = std::abs(d.mean - 0.7739) <= mean_tol && d.sd && std::abs(*d.sd - 0.0037) <= sd_tol;
    const std::string mae_cell = format_mean_sd(m, 2);
    const bool mae_ok = mae_cell == "181.16 $\\pm$ 11.57";
    return {dice_ok && mae_ok, "dice " + fmt(d.mean, 6) + " +/- " + fmt(*d.sd, 6) + " vs 0.7739 +/- 0.0037 (tol " +
                                   fmt(mean_tol, 5) + " / " + fmt(sd_tol, 5) + "); mae cell \"" + mae_cell + "\""};
}

Outcome calibration_formula()
{
    const CalibrationRecord rec{"x", 0.05, 512, 1024};
    const WorkingScale s = working_pixel_size(rec, 512);
    const double um = px_to_um(10.0, s);
    const bool exact = s.mm_per_pixel_working == 0.1 && um == 1000.0;

    // Resize invariance: the same phantom band rasterized at its original
    // grid and at the 512x512 working grid.
    SplitMix64 rng(20240601);
    std::size_t n = 0;
    std::size_t violations = 0;
    double worst_px = 0.0;
    for (int group = 0; group < 24; ++group) {
        PhantomSpec base;
        base.height = static_cast<std::size_t>(389 + rng.below(768 - 389 + 1));
        base.width = static_cast<std::size_t>(static_cast<double>(base.height) * rng.uniform(0.8, 1.6));
        base.mm_per_pixel = rng.uniform(0.04, 0.08);
        base.thickness_curve = group % 2 == 0 ? CurveSpec::constant(20.0)
                                              : CurveSpec::sinusoidal(20.0, 3.0, static_cast<double>(base.width), 0.0);
        for (const auto& b : generate_suite(5, base, rng.next())) {
            const auto& cal = b.calibration;
            const BinaryMask orig = rasterize_band(b.contours, {cal.orig_width, cal.orig_height, Resolution::Original},
                                                   1.0, 1.0);
            const double sx = 512.0 / static_cast<double>(cal.orig_width);
            const double sy = 512.0 / static_cast<double>(cal.orig_height);
            const BinaryMask work = rasterize_band(b.contours, {512, 512, Resolution::Working}, sx, sy);
            const auto mo = measure_mask(orig, cal, AggregationPolicy::mean(), static_cast<long long>(cal.orig_height));
            const auto mw = measure_mask(work, cal, AggregationPolicy::mean(), 512);
            ++n;
            if (!mo.result || !mw.result) {
                ++violations;
                continue;
            }
            const double diff_px = std::abs(mo.result->cimt_um - mw.result->cimt_um) / (cal.mm_per_pixel_orig * 1000.0);
            worst_px = std::max(worst_px, diff_px);
            if (diff_px > 1.5) {
                ++violations;
            }
        }
    }
    return {exact && violations == 0 && n >= 100,
            "0.05 mm/px x 1024/512 = " + text::format_exact(s.mm_per_pixel_working) + " mm/px, 10 px = " +
                text::format_exact(um) + " um; resize invariance on " + std::to_string(n) +
                " phantoms (orig heights 389..768): worst " + fmt(worst_px, 4) + " orig px, " +
                std::to_string(violations) + " over 1.5"};
}

Outcome temperature_noop()
{
    SplitMix64 rng(77);
    const double temps[] = {0.5, 1.0, 2.0, 5.0};
    std::size_t maps = 0;
    std::size_t mismatches = 0;
    for (int i = 0; i < 120; ++i) {
        ProbabilityMap m{"t" + std::to_string(i), 16 + rng.below(49), 16 + rng.below(49), {}};
        m.values.resize(m.width * m.height);
        for (double& v : m.values) {
            do {
                // A quarter of the maps crowd values around 0.5, down to a few ulps.
                v = i % 4 == 0 ? 0.5 + std::ldexp(rng.uniform(-1.0, 1.0), -static_cast<int>(rng.below(52)))
                               : rng.uniform();
            } while (v == 0.5 || v < 0.0 || v > 1.0);
        }
        const BinaryMask base = threshold_map(m, 0.5);
        for (double t : temps) {
            if (threshold_map(temperature_scale(m, t), 0.5).bits != base.bits) {
                ++mismatches;
            }
        }
        ++maps;
    }

    // Downstream: the temperature ablation on noisy soft phantoms.
    PhantomSpec base;
    base.edge_softness = 3.0;
    base.probability_offset = 0.2;
    base.noise_sd = 0.05;
    std::vector<CalibrationSample> samples;
    for (const auto& b : generate_suite(8, base, 5)) {
        samples.push_back({b.prob, b.calibration, b.analytic_cimt_um});
    }
    CalibrationConfig config;
    config.temperature_grid = {0.5, 1.0, 2.0, 5.0};
    const auto points = sweep_temperature(samples, config, 0.5);
    double worst_improvement = 0.0;
    for (const auto& p : points) {
        worst_improvement = std::max(worst_improvement, std::abs(points[1].stats.mae_um - p.stats.mae_um));
    }
    return {mismatches == 0 && maps >= 100 && worst_improvement == 0.0,
            std::to_string(maps) + " maps x 4 temperatures, " + std::to_string(mismatches) +
                " mask mismatches; phantom MAE improvement over T=1: " + fmt(worst_improvement, 3) + " um"};
}

Outcome threshold_calibration()
{
    PhantomSpec base;
    base.edge_softness = 3.0;
    base.probability_offset = 0.2;
    std::vector<CalibrationSample> samples;
    for (const auto& b : generate_suite(28, base, 42)) {
        samples.push_back({b.prob, b.calibration, b.analytic_cimt_um});
    }
    const CalibrationConfig config;
    const SweepResult sweep = sweep_threshold(samples, config);
    const CalibratedComparison c = evaluate_calibrated(samples, sweep.best_threshold, config);
    const bool ok = sweep.best_threshold > 0.5 && c.calibrated.mae_um < c.baseline.mae_um &&
                    std::abs(c.calibrated.bias_um) < std::abs(c.baseline.bias_um) && c.baseline.bias_um > 0.0;
    return {ok, "28 phantoms, offset +0.2: t* = " + text::format_exact(sweep.best_threshold) + ", MAE " +
                    fmt(c.baseline.mae_um, 3) + " -> " + fmt(c.calibrated.mae_um, 3) + " um, bias " +
                    fmt(c.baseline.bias_um, 3) + " -> " + fmt(c.calibrated.bias_um, 3) + " um"};
}

Outcome overlap_oracle()
{
    SplitMix64 rng(1000);
    double worst = 0.0;
    double worst_identity = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const std::size_t w = 1 + rng.below(32);
        const std::size_t h = 1 + rng.below(32);
        BinaryMask a = empty_mask("a", w, h);
        BinaryMask b = empty_mask("a", w, h);
        const double da = rng.uniform();
        const double db = rng.uniform();
        for (std::size_t k = 0; k < w * h; ++k) {
            a.bits[k] = rng.uniform() < da ? 1 : 0;
            b.bits[k] = rng.uniform() < db ? 1 : 0;
        }
        long both = 0;
        long either = 0;
        long na = 0;
        long nb = 0;
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                const bool pa = a.at(x, y);
                const bool pb = b.at(x, y);
                both += pa && pb;
                either += pa || pb;
                na += pa;
                nb += pb;
            }
        }
        const double dice = na + nb == 0 ? 1.0 : 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
        const double iou = either == 0 ? 1.0 : static_cast<double>(both) / static_cast<double>(either);
        const OverlapReport r = overlap(a, b);
        worst = std::max({worst, std::abs(r.dice - dice), std::abs(r.iou - iou)});
        worst_identity = std::max(worst_identity, std::abs(r.iou - r.dice / (2.0 - r.dice)));
    }
    return {worst <= 1e-12 && worst_identity <= 1e-12,
            "1000 pairs: max |diff| vs counting oracle " + text::format_exact(worst) +
                ", max |iou - dice/(2-dice)| " + text::format_exact(worst_identity)};
}

Outcome splits()
{
    std::vector<std::string> ids;
    for (int i = 1; i <= 1088; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "clin_%04d", i);
        ids.push_back(std::string(buf) + "_L");
        ids.push_back(std::string(buf) + "_R");
    }
    bool ok = true;
    std::string detail;
    for (std::uint64_t seed : {42ULL, 123ULL, 999ULL}) {
        const SplitManifest a = make_image_split(ids, seed, SplitRatios{});
        const SplitManifest b = make_image_split(ids, seed, SplitRatios{});
        std::ostringstream sa;
        std::ostringstream sb;
        write_manifest_csv(sa, a);
        write_manifest_csv(sb, b);
        const bool deterministic = sa.str() == sb.str();
        const bool clean = verify_no_leakage(a).ok();
        const std::size_t test = a.patient_count(Partition::Test);
        const bool sized = test + 2 >= 218 && test <= 218 + 2;
        ok = ok && deterministic && clean && sized;
        detail += "seed " + std::to_string(seed) + ": " + std::to_string(a.patient_count(Partition::Train)) + "/" +
                  std::to_string(a.patient_count(Partition::Val)) + "/" + std::to_string(test) +
                  (deterministic ? " deterministic" : " NONDETERMINISTIC") + (clean ? " leak-free" : " LEAKS") +
                  "; ";
    }
    return {ok, detail + "target test 218 +/- 2"};
}

Outcome round_trip()
{
    const fs::path root = fs::temp_directory_path() / ("cimt_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(root);
    std::vector<std::string> outputs[2];
    bool ok = true;
    std::string detail;
    for (int run = 0; run < 2; ++run) {
        const fs::path dir = root / ("run" + std::to_string(run));
        const std::string ph = (dir / "phantoms").string();
        const std::string cal = ph + "/calibration.csv";
        ok = ok && cli_run({"phantom", "--output", ph, "--n", "28", "--seed", "42"}) == cli::kExitOk;
        ok = ok && cli_run({"measure", "--input", ph, "--calibration", cal, "--output",
                            (dir / "measure.csv").string()}) == cli::kExitOk;
        ok = ok && cli_run({"evaluate", "--input", ph, "--calibration", cal, "--contours", ph, "--output",
                            (dir / "eval").string(), "--seed", "42"}) == cli::kExitOk;
        for (const char* f : {"measure.csv", "measure.failures.csv", "measure.meta.txt", "eval/per_image.csv",
                              "eval/summary.csv", "eval/bland_altman.csv", "phantoms/calibration.csv"}) {
            outputs[run].push_back(slurp(dir / f));
        }
        for (const auto& entry : fs::directory_iterator(ph)) {
            if (entry.path().extension() == ".pgm") {
                outputs[run].push_back(slurp(entry.path()));
            }
        }
    }
    const bool identical = outputs[0] == outputs[1];

    const auto per_image = read_csv(root / "run0/eval/per_image.csv");
    std::size_t rows = 0;
    bool file_exact = per_image.size() == 29;
    for (std::size_t i = 1; i < per_image.size(); ++i) {
        ++rows;
        file_exact = file_exact && per_image[i][1] == "1.000000" && per_image[i][5] == "0.000";
    }
    const auto summary = read_csv(root / "run0/eval/summary.csv");
    const bool summary_exact = summary.size() == 2 && summary[1][2] == "1.000000" && summary[1][4] == "0.000";

    // Same chain through the library, compared without any rounding.
    PhantomSpec base;
    double max_dice_gap = 0.0;
    std::vector<MeasurementPair> pairs;
    for (const auto& b : generate_suite(28, base, 42)) {
        const Measurement m = measure_probability_map(b.prob, b.calibration, MeasureOptions{});
        const BinaryMask ref = rasterize_band(b.contours, {b.prob.width, b.prob.height, Resolution::Working}, 1.0,
                                              1.0);
        max_dice_gap = std::max(max_dice_gap, 1.0 - overlap(m.mask, ref).dice);
        pairs.push_back({m.result->cimt_um, reference_cimt(b.contours, b.calibration, AggregationPolicy::mean())->cimt_um});
    }
    const AgreementReport agr = agreement(pairs);
    fs::remove_all(root);

    ok = ok && identical && file_exact && summary_exact && max_dice_gap == 0.0 && agr.mae_um == 0.0;
    detail = std::to_string(rows) + " hard-band phantoms: dice 1 - min = " + text::format_exact(max_dice_gap) +
             ", MAE = " + text::format_exact(agr.mae_um) + " um (in-process), CSV dice/MAE " +
             (file_exact && summary_exact ? "1.000000/0.000" : "MISMATCH") + ", two runs " +
             (identical ? "byte-identical" : "DIFFER") + " over " + std::to_string(outputs[0].size()) + " files";
    return {ok, detail};
}

}  // namespace

int main()
{
    std::printf("N/A   AC1 headline test-set numbers (dice 0.7739 +/- 0.0037, MAE 181.16 +/- 11.57 um): need the "
                "clinical dataset and a trained model; replaced by the checks below\n");
    report("AC2", "seed-summary arithmetic", 1.0, seed_summary_arithmetic);
    report("AC3", "calibration formula and resize invariance", 10.0, calibration_formula);
    report("AC4", "temperature no-op at t=0.5", 5.0, temperature_noop);
    report("AC5", "threshold calibration on offset phantoms", 30.0, threshold_calibration);
    report("AC6", "overlap oracle", 5.0, overlap_oracle);
    report("AC7", "patient-level splits", 1.0, splits);
    report("AC8", "end-to-end round trip", 10.0, round_trip);
    std::printf("%s: %d criterion(s) failed\n", failures == 0 ? "OK" : "FAILED", failures);
    return failures == 0 ? 0 : 1;
}
