// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "cimt/band.hpp"
#include "cimt/calibration.hpp"
#include "cimt/pipeline.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cimt {

// Test-time threshold calibration: choose the binarization threshold that
// minimizes the CIMT error on a calibration (validation) set. Model weights
// are never touched; only the post-processing decision rule moves.

enum class Objective { MaeUm, RmseUm, AbsBiasUm };

std::string_view to_string(Objective objective);
Objective parse_objective(std::string_view text);

/// 0.05, 0.10, ..., 0.95 (computed as k / 20 so grid values are exact
/// decimal-nearest doubles).
std::vector<double> default_threshold_grid();

struct CalibrationConfig {
    std::vector<double> threshold_grid = default_threshold_grid();
    std::vector<double> temperature_grid{1.0};
    Objective objective = Objective::MaeUm;
    AggregationPolicy policy;
    long long target_height = kDefaultTargetHeight;
    bool largest_component = false;
    unsigned jobs = 1;

    /// Grids non-empty and strictly increasing, thresholds in (0,1),
    /// temperatures > 0. Throws Error(InvalidConfig).
    void validate() const;
};

/// One calibration image: model output, pixel size, and reference CIMT.
struct CalibrationSample {
    ProbabilityMap map;
    CalibrationRecord calibration;
    double reference_um = 0.0;
};

/// Errors over a set at one operating point. Images without a detectable band
/// are scored as a prediction of 0 µm, i.e. their full reference value counts
/// as error; `n_valid` counts images that did produce a band.
struct ErrorStats {
    double mae_um = 0.0;
    double rmse_um = 0.0;
    double bias_um = 0.0;
    double mean_pred_um = 0.0;
    std::size_t n = 0;
    std::size_t n_valid = 0;
};

double objective_value(const ErrorStats& stats, Objective objective);

struct SweepPoint {
    double threshold = 0.0;
    ErrorStats stats;
    double objective = 0.0;
};

struct SweepResult {
    std::vector<SweepPoint> per_point;
    Objective objective = Objective::MaeUm;
    double best_threshold = kDefaultThreshold;
    double best_mae_um = 0.0;
    double best_objective = 0.0;
};

/// Scores every sample at one threshold (after optional temperature scaling).
ErrorStats score_threshold(std::span<const CalibrationSample> samples, double threshold,
                           const CalibrationConfig& config, double temperature = 1.0);

/// Grid search. Exact objective ties go to the threshold closest to 0.5, then
/// to the smaller one. Throws Error(InvalidInput) on an empty set.
SweepResult sweep_threshold(std::span<const CalibrationSample> samples, const CalibrationConfig& config);

/// v -> sigmoid(logit(v) / T); 0 and 1 are fixed. The side of 0.5 is always
/// preserved (a value != 0.5 never lands on 0.5), so a 0.5 decision is
/// invariant under any T > 0.
ProbabilityMap temperature_scale(const ProbabilityMap& map, double temperature);

struct TemperaturePoint {
    double temperature = 1.0;
    ErrorStats stats;
};

/// Temperature ablation at a fixed decision threshold.
std::vector<TemperaturePoint> sweep_temperature(std::span<const CalibrationSample> samples,
                                                const CalibrationConfig& config,
                                                double threshold = kDefaultThreshold);

struct CalibratedComparison {
    double baseline_threshold = kDefaultThreshold;
    double calibrated_threshold = kDefaultThreshold;
    ErrorStats baseline;
    ErrorStats calibrated;
    double improvement_um = 0.0;  // baseline MAE - calibrated MAE, may be negative
};

CalibratedComparison evaluate_calibrated(std::span<const CalibrationSample> samples, double calibrated_threshold,
                                         const CalibrationConfig& config,
                                         double baseline_threshold = kDefaultThreshold);

/// Sweep curve CSV: `threshold,mae_um,rmse_um,bias_um,n_valid`.
void write_sweep_csv(std::ostream& out, const SweepResult& sweep);

/// key=value manifest holding best_threshold (plus objective context).
void write_calibration_manifest(std::ostream& out, const SweepResult& sweep);

/// Reads best_threshold from a manifest written by write_calibration_manifest.
double read_best_threshold(std::istream& in);

}  // namespace cimt
