// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "cimt/band.hpp"
#include "cimt/calibration.hpp"
#include "cimt/error.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cimt {

// Coordinates are continuous pixel units of the original image: row r covers
// [r, r + 1) and its center sits at r + 0.5. Columns are sampled at integer x.

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Function-like polyline in x: sorted by x, no repeated x.
struct Polyline {
    std::vector<Point> points;

    double min_x() const { return points.front().x; }
    double max_x() const { return points.back().x; }
};

/// Sorts by x and replaces points sharing an x by their mean row.
Polyline canonicalize(std::vector<Point> points);

/// LI (upper, lumen-intima) and MA (lower, media-adventitia) reference traces.
struct ContourPair {
    std::string image_id;
    Polyline li;
    Polyline ma;
};

inline constexpr std::string_view kLiSuffix = ".li.txt";
inline constexpr std::string_view kMaSuffix = ".ma.txt";

/// MA may sit above LI on at most this fraction of shared columns.
inline constexpr double kMaxOrderViolationFraction = 0.01;

/// Whitespace-separated `x y` pairs, one per line; blank lines and lines
/// starting with '#' are skipped. Returns the canonicalized polyline.
Polyline parse_polyline(std::istream& in, std::string_view source_name);

/// Checks the far-wall ordering and builds the pair; throws Error(Geometry).
ContourPair make_contour_pair(std::string image_id, Polyline li, Polyline ma);

ContourPair parse_contour_pair(std::istream& li_source, std::istream& ma_source, std::string image_id);

/// Reads `<dir>/<image_id>.li.txt` and `<dir>/<image_id>.ma.txt`.
ContourPair load_contour_pair(const std::filesystem::path& dir, const std::string& image_id);

/// Writes `x y` lines with round-trip precision.
void write_polyline(std::ostream& out, const Polyline& line);
void save_contour_pair(const std::filesystem::path& dir, const ContourPair& pair);

/// Throws Error(Geometry) when a vertex lies outside [0, dim + 0.5).
void check_within_image(const ContourPair& pair, const CalibrationRecord& calibration);

/// Linear interpolation, absent outside [min_x, max_x].
std::optional<double> sample_at(const Polyline& line, double x);
std::vector<std::optional<double>> sample_at_columns(const Polyline& line, std::span<const int> columns);

/// Integer columns covered by both traces, [first, last]; absent when disjoint.
struct ColumnRange {
    int first = 0;
    int last = -1;

    std::size_t size() const { return last < first ? 0 : static_cast<std::size_t>(last - first + 1); }
};
std::optional<ColumnRange> overlap_columns(const ContourPair& pair);

/// Pixel-center rule: row r belongs to the band iff li <= r + 0.5 <= ma.
inline bool row_in_band(double li, double ma, std::size_t row)
{
    const double center = static_cast<double>(row) + 0.5;
    return li <= center && center <= ma;
}

enum class Resolution { Original, Working };

struct BandMaskSpec {
    std::size_t width = 0;
    std::size_t height = 0;
    Resolution resolution = Resolution::Original;
};

/// Fills the band between the traces after scaling coordinates by
/// (scale_x, scale_y). Column x of the output samples the traces at original
/// abscissa x / scale_x; rows are compared against scaled trace rows.
/// An empty overlap yields an empty mask and a warning.
BinaryMask rasterize_band(const ContourPair& pair, const BandMaskSpec& spec, double scale_x, double scale_y,
                          Diagnostics* diagnostics = nullptr);

/// Sub-pixel vertical gap max(ma - li, 0) at every shared integer column, in
/// original pixels.
ThicknessProfile reference_profile(const ContourPair& pair);

/// Reference CIMT straight from the traces: the gap profile aggregated by
/// `policy`, converted with the original pixel size. Absent when the traces
/// share no column.
std::optional<MeasurementResult> reference_cimt(const ContourPair& pair, const CalibrationRecord& calibration,
                                                const AggregationPolicy& policy);

}  // namespace cimt
