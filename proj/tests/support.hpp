// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "cimt/band.hpp"
#include "cimt/error.hpp"
#include "cimt/random.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

namespace cimt::test {

/// Kind of the cimt::Error thrown by fn; fails the test when nothing is thrown.
template <typename Fn>
ErrorKind kind_of(Fn&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected a cimt::Error");
    return ErrorKind::Io;
}

inline ProbabilityMap make_map(std::size_t width, std::size_t height, std::vector<double> values,
                               std::string id = "img")
{
    return ProbabilityMap{std::move(id), width, height, std::move(values)};
}

inline ProbabilityMap random_map(SplitMix64& rng, std::size_t width, std::size_t height, std::string id = "img")
{
    ProbabilityMap m{std::move(id), width, height, std::vector<double>(width * height)};
    for (double& v : m.values) {
        v = rng.uniform();
    }
    return m;
}

inline BinaryMask random_mask(SplitMix64& rng, std::size_t width, std::size_t height, double density,
                              std::string id = "img")
{
    BinaryMask m = empty_mask(std::move(id), width, height);
    for (auto& b : m.bits) {
        b = rng.uniform() < density ? 1 : 0;
    }
    return m;
}

/// Rows in [first, last] set in every column.
inline BinaryMask band_mask(std::size_t width, std::size_t height, std::size_t first, std::size_t last)
{
    BinaryMask m = empty_mask("band", width, height);
    for (std::size_t y = first; y <= last; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            m.bits[y * width + x] = 1;
        }
    }
    return m;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag)
    {
        static SplitMix64 rng(0x7e57);
        path_ = std::filesystem::temp_directory_path() / ("cimtkit_" + tag + "_" + std::to_string(rng.next()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const std::filesystem::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    out << content;
}

}  // namespace cimt::test
