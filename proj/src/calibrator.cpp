// SPDX-License-Identifier: Apache-2.0

#include "cimt/calibrator.hpp"

#include "cimt/error.hpp"
#include "cimt/numeric.hpp"
#include "cimt/text.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace cimt {

std::string_view to_string(Objective objective)
{
    switch (objective) {
    case Objective::MaeUm:
        return "mae_um";
    case Objective::RmseUm:
        return "rmse_um";
    case Objective::AbsBiasUm:
        return "abs_bias_um";
    }
    return "mae_um";
}

Objective parse_objective(std::string_view text)
{
    if (text == "mae_um" || text == "mae") {
        return Objective::MaeUm;
    }
    if (text == "rmse_um" || text == "rmse") {
        return Objective::RmseUm;
    }
    if (text == "abs_bias_um" || text == "abs_bias") {
        return Objective::AbsBiasUm;
    }
    throw Error(ErrorKind::InvalidConfig, "unknown objective '" + std::string(text) + "'");
}

std::vector<double> default_threshold_grid()
{
    std::vector<double> grid;
    for (int k = 1; k <= 19; ++k) {
        grid.push_back(k / 20.0);
    }
    return grid;
}

namespace {

void check_grid(const std::vector<double>& grid, std::string_view name, bool unit_interval)
{
    if (grid.empty()) {
        throw Error(ErrorKind::InvalidConfig, std::string(name) + " grid is empty");
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double v = grid[i];
        const bool ok = unit_interval ? (v > 0.0 && v < 1.0) : (v > 0.0 && std::isfinite(v));
        if (!ok) {
            throw Error(ErrorKind::InvalidConfig, std::string(name) + " grid value " + text::format_exact(v) +
                                                      " out of range");
        }
        if (i > 0 && !(grid[i - 1] < v)) {
            throw Error(ErrorKind::InvalidConfig, std::string(name) + " grid must be strictly increasing");
        }
    }
}

// predictions[t * n + i] for threshold t and sample i; absent when no band.
std::vector<std::optional<double>> predict(std::span<const CalibrationSample> samples,
                                           std::span<const double> thresholds, const CalibrationConfig& config,
                                           double temperature)
{
    const std::size_t n = samples.size();
    std::vector<std::optional<double>> out(thresholds.size() * n);
    parallel_for(out.size(), config.jobs, [&](std::size_t k) {
        const std::size_t t = k / n;
        const std::size_t i = k % n;
        MeasureOptions options;
        options.threshold = thresholds[t];
        options.policy = config.policy;
        options.target_height = config.target_height;
        options.largest_component = config.largest_component;
        const CalibrationSample& s = samples[i];
        const Measurement m = temperature == 1.0
                                  ? measure_probability_map(s.map, s.calibration, options)
                                  : measure_probability_map(temperature_scale(s.map, temperature), s.calibration,
                                                            options);
        if (m.result) {
            out[k] = m.result->cimt_um;
        }
    });
    return out;
}

ErrorStats reduce(std::span<const CalibrationSample> samples, std::span<const std::optional<double>> preds)
{
    ErrorStats stats;
    stats.n = samples.size();
    CompensatedSum abs_sum;
    CompensatedSum sq_sum;
    CompensatedSum diff_sum;
    CompensatedSum pred_sum;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double pred = preds[i].value_or(0.0);
        if (preds[i]) {
            ++stats.n_valid;
        }
        const double d = pred - samples[i].reference_um;
        abs_sum.add(std::fabs(d));
        sq_sum.add(d * d);
        diff_sum.add(d);
        pred_sum.add(pred);
    }
    const auto n = static_cast<double>(stats.n);
    stats.mae_um = abs_sum.value() / n;
    stats.rmse_um = std::sqrt(sq_sum.value() / n);
    stats.bias_um = diff_sum.value() / n;
    stats.mean_pred_um = pred_sum.value() / n;
    return stats;
}

void require_samples(std::span<const CalibrationSample> samples)
{
    if (samples.empty()) {
        throw Error(ErrorKind::InvalidInput, "calibration set is empty");
    }
    for (const auto& s : samples) {
        if (!std::isfinite(s.reference_um) || s.reference_um < 0.0) {
            throw Error(ErrorKind::InvalidInput, "image '" + s.map.image_id + "' lacks a valid reference CIMT");
        }
    }
}

// True when candidate `a` should replace incumbent `b`.
bool better(const SweepPoint& a, const SweepPoint& b)
{
    if (a.objective != b.objective) {
        return a.objective < b.objective;
    }
    // Distances are compared with a tolerance: |0.3 - 0.5| and |0.7 - 0.5|
    // differ in the last bit.
    const double da = std::fabs(a.threshold - kDefaultThreshold);
    const double db = std::fabs(b.threshold - kDefaultThreshold);
    if (std::fabs(da - db) > 1e-12) {
        return da < db;
    }
    return a.threshold < b.threshold;
}

}  // namespace

void CalibrationConfig::validate() const
{
    check_grid(threshold_grid, "threshold", true);
    check_grid(temperature_grid, "temperature", false);
    if (target_height <= 0) {
        throw Error(ErrorKind::InvalidConfig, "target height must be positive");
    }
    if (policy.kind == AggregationPolicy::Kind::TrimmedMean &&
        !(policy.trim_fraction >= 0.0 && policy.trim_fraction < 0.5)) {
        throw Error(ErrorKind::InvalidConfig, "trimmed-mean fraction must lie in [0, 0.5)");
    }
}

double objective_value(const ErrorStats& stats, Objective objective)
{
    switch (objective) {
    case Objective::MaeUm:
        return stats.mae_um;
    case Objective::RmseUm:
        return stats.rmse_um;
    case Objective::AbsBiasUm:
        return std::fabs(stats.bias_um);
    }
    return stats.mae_um;
}

ErrorStats score_threshold(std::span<const CalibrationSample> samples, double threshold,
                           const CalibrationConfig& config, double temperature)
{
    require_samples(samples);
    const double thresholds[] = {threshold};
    const auto preds = predict(samples, thresholds, config, temperature);
    return reduce(samples, preds);
}

SweepResult sweep_threshold(std::span<const CalibrationSample> samples, const CalibrationConfig& config)
{
    config.validate();
    require_samples(samples);

    const auto preds = predict(samples, config.threshold_grid, config, 1.0);
    const std::size_t n = samples.size();

    SweepResult result;
    result.objective = config.objective;
    for (std::size_t t = 0; t < config.threshold_grid.size(); ++t) {
        SweepPoint p;
        p.threshold = config.threshold_grid[t];
        p.stats = reduce(samples, std::span(preds).subspan(t * n, n));
        p.objective = objective_value(p.stats, config.objective);
        result.per_point.push_back(p);
    }
    const SweepPoint* best = &result.per_point.front();
    for (const auto& p : result.per_point) {
        if (better(p, *best)) {
            best = &p;
        }
    }
    result.best_threshold = best->threshold;
    result.best_mae_um = best->stats.mae_um;
    result.best_objective = best->objective;
    return result;
}

ProbabilityMap temperature_scale(const ProbabilityMap& map, double temperature)
{
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw Error(ErrorKind::InvalidConfig, "temperature must be positive and finite");
    }
    validate(map);
    ProbabilityMap out = map;
    if (temperature == 1.0) {
        return out;
    }
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        const double v = map.values[i];
        if (v == 0.0 || v == 1.0) {
            continue;
        }
        const double z = (std::log(v) - std::log1p(-v)) / temperature;
        double s = 0.0;
        if (z >= 0.0) {
            s = 1.0 / (1.0 + std::exp(-z));
        } else {
            const double e = std::exp(z);
            s = e / (1.0 + e);
        }
        // Rounding can collapse values within an ulp or so of 0.5 onto 0.5.
        if (v > 0.5 && s <= 0.5) {
            s = std::nextafter(0.5, 1.0);
        } else if (v < 0.5 && s >= 0.5) {
            s = std::nextafter(0.5, 0.0);
        }
        if (!std::isfinite(s)) {
            std::ostringstream os;
            os << "image '" << map.image_id << "': temperature scaling produced a non-finite value at (x="
               << i % map.width << ", y=" << i / map.width << ")";
            throw Error(ErrorKind::Numeric, os.str());
        }
        out.values[i] = s;
    }
    return out;
}

std::vector<TemperaturePoint> sweep_temperature(std::span<const CalibrationSample> samples,
                                                const CalibrationConfig& config, double threshold)
{
    config.validate();
    require_samples(samples);
    std::vector<TemperaturePoint> out;
    for (double temperature : config.temperature_grid) {
        out.push_back({temperature, score_threshold(samples, threshold, config, temperature)});
    }
    return out;
}

CalibratedComparison evaluate_calibrated(std::span<const CalibrationSample> samples, double calibrated_threshold,
                                         const CalibrationConfig& config, double baseline_threshold)
{
    for (double t : {calibrated_threshold, baseline_threshold}) {
        if (!(t > 0.0 && t < 1.0)) {
            throw Error(ErrorKind::InvalidConfig, "threshold " + text::format_exact(t) + " outside (0,1)");
        }
    }
    CalibratedComparison c;
    c.baseline_threshold = baseline_threshold;
    c.calibrated_threshold = calibrated_threshold;
    c.baseline = score_threshold(samples, baseline_threshold, config);
    c.calibrated = calibrated_threshold == baseline_threshold
                       ? c.baseline
                       : score_threshold(samples, calibrated_threshold, config);
    c.improvement_um = c.baseline.mae_um - c.calibrated.mae_um;
    return c;
}

void write_sweep_csv(std::ostream& out, const SweepResult& sweep)
{
    out << "threshold,mae_um,rmse_um,bias_um,n_valid\n";
    for (const auto& p : sweep.per_point) {
        out << text::format_fixed(p.threshold, 2) << ',' << text::format_fixed(p.stats.mae_um, 3) << ','
            << text::format_fixed(p.stats.rmse_um, 3) << ',' << text::format_fixed(p.stats.bias_um, 3) << ','
            << p.stats.n_valid << '\n';
    }
}

void write_calibration_manifest(std::ostream& out, const SweepResult& sweep)
{
    out << "best_threshold=" << text::format_exact(sweep.best_threshold) << '\n'
        << "objective=" << to_string(sweep.objective) << '\n'
        << "best_objective=" << text::format_fixed(sweep.best_objective, 3) << '\n'
        << "best_mae_um=" << text::format_fixed(sweep.best_mae_um, 3) << '\n'
        << "grid_points=" << sweep.per_point.size() << '\n';
}

double read_best_threshold(std::istream& in)
{
    std::string line;
    while (std::getline(in, line)) {
        const auto content = text::trim(line);
        constexpr std::string_view key = "best_threshold=";
        if (content.starts_with(key)) {
            const auto v = text::parse_double(content.substr(key.size()));
            if (!v || !(*v > 0.0 && *v < 1.0)) {
                throw Error(ErrorKind::Parse, "bad best_threshold value '" + std::string(content) + "'");
            }
            return *v;
        }
    }
    throw Error(ErrorKind::Parse, "calibration manifest has no best_threshold entry");
}

}  // namespace cimt
