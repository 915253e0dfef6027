// SPDX-License-Identifier: Apache-2.0

#include "cimt/calibration.hpp"

#include "cimt/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_set>

namespace cimt {

void validate(const CalibrationRecord& record, Diagnostics* diagnostics)
{
    const double f = record.mm_per_pixel_orig;
    if (!std::isfinite(f) || !(f > kMinMmPerPixel && f < kMaxMmPerPixel)) {
        std::ostringstream os;
        os << "image '" << record.image_id << "': mm_per_pixel " << f << " outside ("
           << kMinMmPerPixel << ", " << kMaxMmPerPixel << ")";
        throw Error(ErrorKind::InvalidInput, os.str());
    }
    if (record.orig_width == 0 || record.orig_height == 0) {
        throw Error(ErrorKind::InvalidInput,
                    "image '" + record.image_id + "': original dimensions must be positive");
    }
    if (diagnostics && !(f > kMinPlausibleMmPerPixel && f < kMaxPlausibleMmPerPixel)) {
        std::ostringstream os;
        os << "image '" << record.image_id << "': mm_per_pixel " << f
           << " is outside the usual range (" << kMinPlausibleMmPerPixel << ", "
           << kMaxPlausibleMmPerPixel << ")";
        diagnostics->warn(os.str());
    }
}

WorkingScale working_pixel_size(const CalibrationRecord& record, long long target_height)
{
    if (target_height <= 0) {
        throw Error(ErrorKind::InvalidConfig,
                    "target height must be positive, got " + std::to_string(target_height));
    }
    validate(record);
    const auto target = static_cast<std::size_t>(target_height);
    WorkingScale scale;
    scale.target_height = target;
    if (target == record.orig_height) {
        scale.mm_per_pixel_working = record.mm_per_pixel_orig;
    } else {
        scale.mm_per_pixel_working = record.mm_per_pixel_orig *
                                     static_cast<double>(record.orig_height) /
                                     static_cast<double>(target);
    }
    return scale;
}

double px_to_um(double thickness_px, const WorkingScale& scale)
{
    if (!(thickness_px >= 0.0) || !std::isfinite(thickness_px)) {
        throw Error(ErrorKind::InvalidInput,
                    "pixel thickness must be finite and non-negative, got " + std::to_string(thickness_px));
    }
    return thickness_px * scale.mm_per_pixel_working * 1000.0;
}

CalibrationTable::CalibrationTable(std::vector<CalibrationRecord> records)
    : records_(std::move(records))
{
    std::unordered_set<std::string> seen;
    for (const auto& r : records_) {
        if (!seen.insert(r.image_id).second) {
            throw Error(ErrorKind::DuplicateId, "calibration image_id '" + r.image_id + "' appears twice");
        }
    }
}

const CalibrationRecord* CalibrationTable::find(std::string_view image_id) const
{
    const auto it = std::find_if(records_.begin(), records_.end(),
                                 [&](const CalibrationRecord& r) { return r.image_id == image_id; });
    return it == records_.end() ? nullptr : &*it;
}

namespace {

std::string at_line(std::size_t line)
{
    return "line " + std::to_string(line) + ": ";
}

std::map<std::string, std::size_t, std::less<>> header_index(std::string_view header)
{
    std::map<std::string, std::size_t, std::less<>> index;
    const auto fields = text::split_fields(header);
    for (std::size_t i = 0; i < fields.size(); ++i) {
        index.emplace(std::string(fields[i]), i);
    }
    return index;
}

std::size_t require_column(const std::map<std::string, std::size_t, std::less<>>& index,
                           std::string_view name)
{
    const auto it = index.find(name);
    if (it == index.end()) {
        throw Error(ErrorKind::Parse, at_line(1) + "missing column '" + std::string(name) + "'");
    }
    return it->second;
}

std::size_t parse_dimension(std::string_view field, std::string_view name, std::size_t line)
{
    const auto v = text::parse_integer(field);
    if (!v) {
        throw Error(ErrorKind::Parse, at_line(line) + "non-numeric " + std::string(name) + " '" +
                                          std::string(field) + "'");
    }
    if (*v <= 0) {
        throw Error(ErrorKind::InvalidInput, at_line(line) + std::string(name) + " must be positive");
    }
    return static_cast<std::size_t>(*v);
}

}  // namespace

CalibrationTable parse_calibration_table(std::istream& in, Diagnostics* diagnostics)
{
    std::string line;
    if (!std::getline(in, line)) {
        throw Error(ErrorKind::Parse, at_line(1) + "empty calibration table");
    }
    const auto index = header_index(line);
    const std::size_t c_id = require_column(index, "image_id");
    const std::size_t c_mm = require_column(index, "mm_per_pixel");
    const std::size_t c_w = require_column(index, "orig_width");
    const std::size_t c_h = require_column(index, "orig_height");
    const std::size_t needed = std::max({c_id, c_mm, c_w, c_h}) + 1;

    std::vector<CalibrationRecord> records;
    std::map<std::string, std::size_t, std::less<>> first_seen;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) {
            continue;
        }
        const auto fields = text::split_fields(line);
        if (fields.size() < needed) {
            throw Error(ErrorKind::Parse, at_line(line_no) + "expected " + std::to_string(needed) +
                                              " fields, found " + std::to_string(fields.size()));
        }
        CalibrationRecord r;
        r.image_id = std::string(fields[c_id]);
        if (r.image_id.empty()) {
            throw Error(ErrorKind::Parse, at_line(line_no) + "empty image_id");
        }
        const auto mm = text::parse_double(fields[c_mm]);
        if (!mm) {
            throw Error(ErrorKind::Parse, at_line(line_no) + "non-numeric mm_per_pixel '" +
                                              std::string(fields[c_mm]) + "'");
        }
        r.mm_per_pixel_orig = *mm;
        r.orig_width = parse_dimension(fields[c_w], "orig_width", line_no);
        r.orig_height = parse_dimension(fields[c_h], "orig_height", line_no);

        const auto [it, inserted] = first_seen.emplace(r.image_id, line_no);
        if (!inserted) {
            throw Error(ErrorKind::DuplicateId, at_line(line_no) + "image_id '" + r.image_id +
                                                    "' already defined on line " + std::to_string(it->second));
        }
        try {
            validate(r, diagnostics);
        } catch (const Error& e) {
            throw Error(e.kind(), at_line(line_no) + e.what());
        }
        records.push_back(std::move(r));
    }
    return CalibrationTable(std::move(records));
}

CalibrationTable load_calibration_table(const std::filesystem::path& path, Diagnostics* diagnostics)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open calibration table '" + path.string() + "'");
    }
    return parse_calibration_table(in, diagnostics);
}

void write_calibration_table(std::ostream& out, std::span<const CalibrationRecord> records)
{
    out << "image_id,mm_per_pixel,orig_width,orig_height\n";
    for (const auto& r : records) {
        out << r.image_id << ',' << text::format_exact(r.mm_per_pixel_orig) << ',' << r.orig_width << ','
            << r.orig_height << '\n';
    }
}

std::vector<CalibrationRecord> import_cf_files(const std::filesystem::path& cf_dir,
                                               const std::filesystem::path& dimensions_csv,
                                               Diagnostics* diagnostics)
{
    std::ifstream dims(dimensions_csv);
    if (!dims) {
        throw Error(ErrorKind::Io, "cannot open '" + dimensions_csv.string() + "'");
    }
    std::string line;
    if (!std::getline(dims, line)) {
        throw Error(ErrorKind::Parse, at_line(1) + "empty dimensions table");
    }
    const auto index = header_index(line);
    const std::size_t c_id = require_column(index, "image_id");
    const std::size_t c_w = require_column(index, "orig_width");
    const std::size_t c_h = require_column(index, "orig_height");
    const std::size_t needed = std::max({c_id, c_w, c_h}) + 1;

    std::vector<CalibrationRecord> records;
    std::size_t line_no = 1;
    while (std::getline(dims, line)) {
        ++line_no;
        if (text::trim(line).empty()) {
            continue;
        }
        const auto fields = text::split_fields(line);
        if (fields.size() < needed) {
            throw Error(ErrorKind::Parse, at_line(line_no) + "too few fields");
        }
        CalibrationRecord r;
        r.image_id = std::string(fields[c_id]);
        r.orig_width = parse_dimension(fields[c_w], "orig_width", line_no);
        r.orig_height = parse_dimension(fields[c_h], "orig_height", line_no);

        const auto cf_path = cf_dir / (r.image_id + "_CF.txt");
        std::ifstream cf(cf_path);
        if (!cf) {
            throw Error(ErrorKind::Io, "missing CF file '" + cf_path.string() + "'");
        }
        std::string token;
        cf >> token;
        const auto mm = text::parse_double(token);
        if (!mm) {
            throw Error(ErrorKind::Parse, "CF file '" + cf_path.string() + "': non-numeric value '" + token + "'");
        }
        r.mm_per_pixel_orig = *mm;
        validate(r, diagnostics);
        records.push_back(std::move(r));
    }
    // Constructing the table rejects duplicates.
    return CalibrationTable(std::move(records)).records();
}

}  // namespace cimt
