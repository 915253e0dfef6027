// SPDX-License-Identifier: Apache-2.0

#include "cimt/pgm.hpp"

#include "cimt/error.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

namespace cimt {

namespace {

struct PgmHeader {
    std::size_t width = 0;
    std::size_t height = 0;
    unsigned maxval = 0;
};

void skip_whitespace_and_comments(std::istream& in)
{
    for (;;) {
        const int c = in.peek();
        if (c == '#') {
            in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
        } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            in.get();
        } else {
            return;
        }
    }
}

std::size_t read_header_number(std::istream& in, const std::string& id, const char* field)
{
    skip_whitespace_and_comments(in);
    long long value = -1;
    in >> value;
    if (!in || value <= 0) {
        throw Error(ErrorKind::Parse, "PGM '" + id + "': bad " + field);
    }
    return static_cast<std::size_t>(value);
}

PgmHeader read_header(std::istream& in, const std::string& id)
{
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || magic[1] != '5') {
        throw Error(ErrorKind::Parse, "PGM '" + id + "': expected binary P5 magic");
    }
    PgmHeader h;
    h.width = read_header_number(in, id, "width");
    h.height = read_header_number(in, id, "height");
    const std::size_t maxval = read_header_number(in, id, "maxval");
    if (maxval > 65535) {
        throw Error(ErrorKind::Parse, "PGM '" + id + "': maxval above 65535");
    }
    h.maxval = static_cast<unsigned>(maxval);
    // Exactly one whitespace byte separates the header from the raster.
    const int sep = in.get();
    if (sep != ' ' && sep != '\t' && sep != '\n' && sep != '\r') {
        throw Error(ErrorKind::Parse, "PGM '" + id + "': missing header terminator");
    }
    return h;
}

std::vector<unsigned> read_samples(std::istream& in, const PgmHeader& h, const std::string& id)
{
    const std::size_t count = h.width * h.height;
    const std::size_t bytes_per_sample = h.maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(count * bytes_per_sample);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
        throw Error(ErrorKind::Parse, "PGM '" + id + "': truncated raster (" +
                                          std::to_string(in.gcount()) + " of " +
                                          std::to_string(raw.size()) + " bytes)");
    }
    std::vector<unsigned> samples(count);
    for (std::size_t i = 0; i < count; ++i) {
        unsigned v = bytes_per_sample == 2 ? (unsigned{raw[2 * i]} << 8) | raw[2 * i + 1] : raw[i];
        if (v > h.maxval) {
            throw Error(ErrorKind::Parse, "PGM '" + id + "': sample " + std::to_string(v) +
                                              " exceeds maxval at index " + std::to_string(i));
        }
        samples[i] = v;
    }
    return samples;
}

std::ifstream open_input(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
    }
    return in;
}

std::ofstream open_output(const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
    }
    return out;
}

}  // namespace

std::string image_id_from_path(const std::filesystem::path& path, std::string_view suffix)
{
    const std::string name = path.filename().string();
    if (name.size() > suffix.size() && name.ends_with(suffix)) {
        return name.substr(0, name.size() - suffix.size());
    }
    return path.stem().string();
}

ProbabilityMap read_probability_pgm(std::istream& in, std::string image_id)
{
    const PgmHeader h = read_header(in, image_id);
    const std::vector<unsigned> samples = read_samples(in, h, image_id);
    ProbabilityMap map;
    map.image_id = std::move(image_id);
    map.width = h.width;
    map.height = h.height;
    map.values.resize(samples.size());
    const double scale = static_cast<double>(h.maxval);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        map.values[i] = static_cast<double>(samples[i]) / scale;
    }
    return map;
}

ProbabilityMap read_probability_pgm(const std::filesystem::path& path)
{
    std::ifstream in = open_input(path);
    return read_probability_pgm(in, image_id_from_path(path, kProbabilitySuffix));
}

void write_probability_pgm(std::ostream& out, const ProbabilityMap& map)
{
    validate(map);
    out << "P5\n" << map.width << ' ' << map.height << "\n65535\n";
    std::vector<char> raw(map.values.size() * 2);
    for (std::size_t i = 0; i < map.values.size(); ++i) {
        const auto v = static_cast<unsigned>(std::lround(map.values[i] * 65535.0));
        raw[2 * i] = static_cast<char>((v >> 8) & 0xFF);
        raw[2 * i + 1] = static_cast<char>(v & 0xFF);
    }
    out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (!out) {
        throw Error(ErrorKind::Io, "failed writing probability map '" + map.image_id + "'");
    }
}

void write_probability_pgm(const std::filesystem::path& path, const ProbabilityMap& map)
{
    std::ofstream out = open_output(path);
    write_probability_pgm(out, map);
}

BinaryMask read_mask_pgm(std::istream& in, std::string image_id)
{
    const PgmHeader h = read_header(in, image_id);
    const std::vector<unsigned> samples = read_samples(in, h, image_id);
    BinaryMask mask = empty_mask(std::move(image_id), h.width, h.height);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        mask.bits[i] = samples[i] != 0 ? 1 : 0;
    }
    return mask;
}

BinaryMask read_mask_pgm(const std::filesystem::path& path)
{
    std::ifstream in = open_input(path);
    return read_mask_pgm(in, image_id_from_path(path, kMaskSuffix));
}

void write_mask_pgm(std::ostream& out, const BinaryMask& mask)
{
    out << "P5\n" << mask.width << ' ' << mask.height << "\n255\n";
    std::vector<char> raw(mask.bits.size());
    for (std::size_t i = 0; i < mask.bits.size(); ++i) {
        raw[i] = mask.bits[i] != 0 ? static_cast<char>(255) : 0;
    }
    out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (!out) {
        throw Error(ErrorKind::Io, "failed writing mask '" + mask.image_id + "'");
    }
}

void write_mask_pgm(const std::filesystem::path& path, const BinaryMask& mask)
{
    std::ofstream out = open_output(path);
    write_mask_pgm(out, mask);
}

}  // namespace cimt
