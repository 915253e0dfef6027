// SPDX-License-Identifier: Apache-2.0

#include "cimt/contours.hpp"

#include "cimt/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace cimt {

Polyline canonicalize(std::vector<Point> points)
{
    std::stable_sort(points.begin(), points.end(), [](const Point& a, const Point& b) { return a.x < b.x; });
    Polyline out;
    out.points.reserve(points.size());
    for (std::size_t i = 0; i < points.size();) {
        std::size_t j = i;
        double sum = 0.0;
        while (j < points.size() && points[j].x == points[i].x) {
            sum += points[j].y;
            ++j;
        }
        out.points.push_back({points[i].x, sum / static_cast<double>(j - i)});
        i = j;
    }
    return out;
}

Polyline parse_polyline(std::istream& in, std::string_view source_name)
{
    std::vector<Point> points;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto content = text::trim(line);
        if (content.empty() || content.front() == '#') {
            continue;
        }
        std::istringstream fields{std::string(content)};
        std::string xs;
        std::string ys;
        std::string extra;
        fields >> xs >> ys;
        const auto x = text::parse_double(xs);
        const auto y = text::parse_double(ys);
        if (!x || !y || (fields >> extra)) {
            throw Error(ErrorKind::Parse, std::string(source_name) + ": line " + std::to_string(line_no) +
                                              ": expected 'x y', got '" + std::string(content) + "'");
        }
        if (!std::isfinite(*x) || !std::isfinite(*y)) {
            throw Error(ErrorKind::Parse, std::string(source_name) + ": line " + std::to_string(line_no) +
                                              ": non-finite coordinate");
        }
        points.push_back({*x, *y});
    }
    Polyline out = canonicalize(std::move(points));
    if (out.points.size() < 2) {
        throw Error(ErrorKind::Parse, std::string(source_name) + ": need at least 2 distinct points, found " +
                                          std::to_string(out.points.size()));
    }
    return out;
}

std::optional<double> sample_at(const Polyline& line, double x)
{
    const auto& pts = line.points;
    if (pts.empty() || x < pts.front().x || x > pts.back().x) {
        return std::nullopt;
    }
    const auto it = std::lower_bound(pts.begin(), pts.end(), x, [](const Point& p, double v) { return p.x < v; });
    if (it->x == x) {
        return it->y;
    }
    const Point& b = *it;
    const Point& a = *(it - 1);
    const double t = (x - a.x) / (b.x - a.x);
    return a.y + t * (b.y - a.y);
}

std::vector<std::optional<double>> sample_at_columns(const Polyline& line, std::span<const int> columns)
{
    std::vector<std::optional<double>> out;
    out.reserve(columns.size());
    for (int c : columns) {
        out.push_back(sample_at(line, static_cast<double>(c)));
    }
    return out;
}

namespace {

std::optional<ColumnRange> shared_columns(const Polyline& li, const Polyline& ma)
{
    const double lo = std::max(li.min_x(), ma.min_x());
    const double hi = std::min(li.max_x(), ma.max_x());
    const double first = std::ceil(lo);
    const double last = std::floor(hi);
    if (!(first <= last)) {
        return std::nullopt;
    }
    return ColumnRange{static_cast<int>(first), static_cast<int>(last)};
}

}  // namespace

std::optional<ColumnRange> overlap_columns(const ContourPair& pair)
{
    return shared_columns(pair.li, pair.ma);
}

ContourPair make_contour_pair(std::string image_id, Polyline li, Polyline ma)
{
    if (li.points.size() < 2 || ma.points.size() < 2) {
        throw Error(ErrorKind::Parse, "image '" + image_id + "': each trace needs at least 2 points");
    }
    if (const auto range = shared_columns(li, ma)) {
        std::size_t violations = 0;
        for (int x = range->first; x <= range->last; ++x) {
            const double l = *sample_at(li, x);
            const double m = *sample_at(ma, x);
            if (m < l) {
                ++violations;
            }
        }
        const double fraction = static_cast<double>(violations) / static_cast<double>(range->size());
        if (fraction > kMaxOrderViolationFraction) {
            std::ostringstream os;
            os << "image '" << image_id << "': MA lies above LI at " << violations << " of " << range->size()
               << " shared columns";
            throw Error(ErrorKind::Geometry, os.str());
        }
    }
    return ContourPair{std::move(image_id), std::move(li), std::move(ma)};
}

ContourPair parse_contour_pair(std::istream& li_source, std::istream& ma_source, std::string image_id)
{
    Polyline li = parse_polyline(li_source, image_id + std::string(kLiSuffix));
    Polyline ma = parse_polyline(ma_source, image_id + std::string(kMaSuffix));
    return make_contour_pair(std::move(image_id), std::move(li), std::move(ma));
}

ContourPair load_contour_pair(const std::filesystem::path& dir, const std::string& image_id)
{
    const auto li_path = dir / (image_id + std::string(kLiSuffix));
    const auto ma_path = dir / (image_id + std::string(kMaSuffix));
    std::ifstream li(li_path);
    if (!li) {
        throw Error(ErrorKind::Io, "cannot open '" + li_path.string() + "'");
    }
    std::ifstream ma(ma_path);
    if (!ma) {
        throw Error(ErrorKind::Io, "cannot open '" + ma_path.string() + "'");
    }
    return parse_contour_pair(li, ma, image_id);
}

void write_polyline(std::ostream& out, const Polyline& line)
{
    for (const auto& p : line.points) {
        out << text::format_exact(p.x) << ' ' << text::format_exact(p.y) << '\n';
    }
}

void save_contour_pair(const std::filesystem::path& dir, const ContourPair& pair)
{
    for (const auto& [suffix, line] : {std::pair{kLiSuffix, &pair.li}, std::pair{kMaSuffix, &pair.ma}}) {
        const auto path = dir / (pair.image_id + std::string(suffix));
        std::ofstream out(path);
        if (!out) {
            throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
        }
        write_polyline(out, *line);
    }
}

void check_within_image(const ContourPair& pair, const CalibrationRecord& calibration)
{
    const double max_x = static_cast<double>(calibration.orig_width) + 0.5;
    const double max_y = static_cast<double>(calibration.orig_height) + 0.5;
    for (const Polyline* line : {&pair.li, &pair.ma}) {
        for (const auto& p : line->points) {
            if (p.x < 0.0 || p.x >= max_x || p.y < 0.0 || p.y >= max_y) {
                std::ostringstream os;
                os << "image '" << pair.image_id << "': contour point (" << p.x << ", " << p.y
                   << ") outside the " << calibration.orig_width << "x" << calibration.orig_height << " image";
                throw Error(ErrorKind::Geometry, os.str());
            }
        }
    }
}

BinaryMask rasterize_band(const ContourPair& pair, const BandMaskSpec& spec, double scale_x, double scale_y,
                          Diagnostics* diagnostics)
{
    if (!(scale_x > 0.0) || !(scale_y > 0.0) || !std::isfinite(scale_x) || !std::isfinite(scale_y)) {
        throw Error(ErrorKind::InvalidConfig, "rasterization scales must be positive");
    }
    if (spec.width == 0 || spec.height == 0) {
        throw Error(ErrorKind::InvalidConfig, "mask dimensions must be positive");
    }
    BinaryMask mask = empty_mask(pair.image_id, spec.width, spec.height);

    const auto range = overlap_columns(pair);
    if (!range) {
        if (diagnostics) {
            diagnostics->warn("image '" + pair.image_id + "': LI and MA traces share no column");
        }
        return mask;
    }

    const double lo = std::max(pair.li.min_x(), pair.ma.min_x());
    const double hi = std::min(pair.li.max_x(), pair.ma.max_x());
    const auto first = std::max(0.0, std::ceil(lo * scale_x));
    const auto last = std::min(static_cast<double>(spec.width) - 1.0, std::floor(hi * scale_x));
    for (double xs = first; xs <= last; xs += 1.0) {
        const double x_orig = scale_x == 1.0 ? xs : xs / scale_x;
        const auto li = sample_at(pair.li, x_orig);
        const auto ma = sample_at(pair.ma, x_orig);
        if (!li || !ma) {
            continue;
        }
        const double top = *li * scale_y;
        const double bottom = *ma * scale_y;
        const auto col = static_cast<std::size_t>(xs);
        // Rows whose centers fall in [top, bottom].
        const double r_begin = std::max(0.0, std::ceil(top - 0.5));
        const double r_end = std::min(static_cast<double>(spec.height) - 1.0, std::floor(bottom - 0.5));
        for (double r = r_begin; r <= r_end; r += 1.0) {
            const auto row = static_cast<std::size_t>(r);
            if (row_in_band(top, bottom, row)) {
                mask.bits[row * spec.width + col] = 1;
            }
        }
    }
    if (mask.foreground_count() == 0 && diagnostics) {
        diagnostics->warn("image '" + pair.image_id + "': rasterized band is empty");
    }
    return mask;
}

ThicknessProfile reference_profile(const ContourPair& pair)
{
    ThicknessProfile profile;
    profile.image_id = pair.image_id;
    const auto range = overlap_columns(pair);
    if (!range || range->last < 0) {
        return profile;
    }
    // Profiles are indexed by image column; anything left of column 0 is dropped.
    profile.per_column_px.resize(static_cast<std::size_t>(range->last) + 1);
    for (int x = std::max(range->first, 0); x <= range->last; ++x) {
        const double gap = *sample_at(pair.ma, x) - *sample_at(pair.li, x);
        profile.per_column_px[static_cast<std::size_t>(x)] = std::max(gap, 0.0);
        ++profile.valid_column_count;
    }
    return profile;
}

std::optional<MeasurementResult> reference_cimt(const ContourPair& pair, const CalibrationRecord& calibration,
                                                const AggregationPolicy& policy)
{
    const ThicknessProfile profile = reference_profile(pair);
    const auto px = aggregate_cimt_px(profile, policy);
    if (!px) {
        return std::nullopt;
    }
    MeasurementResult result;
    result.image_id = pair.image_id;
    result.scale = working_pixel_size(calibration, static_cast<long long>(calibration.orig_height));
    result.cimt_px_working = *px;
    result.cimt_um = px_to_um(*px, result.scale);
    result.valid_columns = profile.valid_column_count;
    return result;
}

}  // namespace cimt
