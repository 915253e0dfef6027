// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "cimt/error.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cimt {

/// Pixel size of one image at its original resolution. Pixels are assumed
/// isotropic, so a single factor serves both axes.
struct CalibrationRecord {
    std::string image_id;
    double mm_per_pixel_orig = 0.0;
    std::size_t orig_width = 0;
    std::size_t orig_height = 0;
};

// Hard limits; values outside (kMinPlausible, kMaxPlausible) only warn.
inline constexpr double kMinMmPerPixel = 0.001;
inline constexpr double kMaxMmPerPixel = 1.0;
inline constexpr double kMinPlausibleMmPerPixel = 0.01;
inline constexpr double kMaxPlausibleMmPerPixel = 0.2;

/// Throws Error(InvalidInput) on a hard violation. Implausible but accepted
/// factors are reported through `diagnostics` when given.
void validate(const CalibrationRecord& record, Diagnostics* diagnostics = nullptr);

struct WorkingScale {
    std::size_t target_height = 0;
    double mm_per_pixel_working = 0.0;
};

/// Vertical pixel size after resizing the image to `target_height` rows:
/// mm_per_pixel_orig * orig_height / target_height. Exactly the original
/// factor when the heights agree.
WorkingScale working_pixel_size(const CalibrationRecord& record, long long target_height);

/// t_px * mm_per_pixel_working * 1000.
double px_to_um(double thickness_px, const WorkingScale& scale);

struct MeasurementResult {
    std::string image_id;
    double cimt_px_working = 0.0;
    double cimt_um = 0.0;
    std::optional<double> threshold_used;
    WorkingScale scale;
    std::size_t valid_columns = 0;
};

/// Calibration table keyed by image id, in file order.
class CalibrationTable {
public:
    CalibrationTable() = default;
    explicit CalibrationTable(std::vector<CalibrationRecord> records);

    const std::vector<CalibrationRecord>& records() const { return records_; }
    const CalibrationRecord* find(std::string_view image_id) const;

private:
    std::vector<CalibrationRecord> records_;
};

/// CSV with header `image_id,mm_per_pixel,orig_width,orig_height` (columns
/// located by name). Errors carry the 1-based line number.
CalibrationTable parse_calibration_table(std::istream& in, Diagnostics* diagnostics = nullptr);
CalibrationTable load_calibration_table(const std::filesystem::path& path,
                                        Diagnostics* diagnostics = nullptr);

void write_calibration_table(std::ostream& out, std::span<const CalibrationRecord> records);

/// Builds calibration records from CUBS-style per-image CF files
/// (`<cf_dir>/<image_id>_CF.txt`, a single mm/pixel number) and a dimensions
/// CSV `image_id,orig_width,orig_height` such as the probability exporter's
/// manifest.
std::vector<CalibrationRecord> import_cf_files(const std::filesystem::path& cf_dir,
                                               const std::filesystem::path& dimensions_csv,
                                               Diagnostics* diagnostics = nullptr);

}  // namespace cimt
