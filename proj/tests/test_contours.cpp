// SPDX-License-Identifier: Apache-2.0

#include "cimt/contours.hpp"
#include "cimt/pipeline.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace cimt;
using cimt::test::kind_of;

namespace {

Polyline flat(double row, double x0, double x1)
{
    return canonicalize({{x0, row}, {x1, row}});
}

ContourPair flat_pair(double li, double ma, double x0 = 0, double x1 = 99)
{
    return make_contour_pair("band", flat(li, x0, x1), flat(ma, x0, x1));
}

}  // namespace

TEST_SUITE("contours")
{
    TEST_CASE("canonicalize sorts and merges repeated x")
    {
        const auto p = canonicalize({{3, 1}, {1, 5}, {3, 3}, {2, 0}});
        REQUIRE(p.points.size() == 3);
        CHECK(p.points[0].x == 1);
        CHECK(p.points[1].x == 2);
        CHECK(p.points[2].x == 3);
        CHECK(p.points[2].y == 2.0);
    }

    TEST_CASE("parsing")
    {
        std::istringstream in("# LI trace\n0 100\n\n99 100\n");
        const auto p = parse_polyline(in, "li");
        CHECK(p.points.size() == 2);
        std::istringstream single("5 5\n");
        CHECK(kind_of([&] { parse_polyline(single, "x"); }) == ErrorKind::Parse);
        std::istringstream junk("0 1\n1 abc\n");
        try {
            parse_polyline(junk, "junk.li.txt");
            FAIL("no error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Parse);
            CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        }
        std::istringstream nan("0 1\n1 nan\n");
        CHECK(kind_of([&] { parse_polyline(nan, "x"); }) == ErrorKind::Parse);
    }

    TEST_CASE("far-wall ordering")
    {
        CHECK_NOTHROW(flat_pair(100, 150));
        CHECK(kind_of([] { flat_pair(150, 100); }) == ErrorKind::Geometry);
        // One crossed column out of 201 is under the 1% allowance.
        const auto li = canonicalize({{0, 100}, {100, 100}, {101, 100}, {102, 100}, {200, 100}});
        const auto ma = canonicalize({{0, 120}, {100, 120}, {101, 90}, {102, 120}, {200, 120}});
        CHECK_NOTHROW(make_contour_pair("x", li, ma));
        // Five crossed columns out of 101 are not.
        const auto li2 = canonicalize({{0, 100}, {100, 100}});
        const auto ma2 = canonicalize({{0, 120}, {40, 120}, {41, 90}, {45, 90}, {46, 120}, {100, 120}});
        CHECK(kind_of([&] { make_contour_pair("x", li2, ma2); }) == ErrorKind::Geometry);
    }

    TEST_CASE("sampling")
    {
        const auto a = canonicalize({{0, 10}, {10, 20}});
        CHECK(sample_at(a, 5) == 15.0);
        CHECK_FALSE(sample_at(a, -1).has_value());
        CHECK_FALSE(sample_at(a, 10.5).has_value());
        const auto b = canonicalize({{0, 10}, {4, 10}, {8, 18}});
        CHECK(sample_at(b, 6) == 14.0);
        const std::vector<int> cols = {0, 4, 8};
        const auto s = sample_at_columns(b, cols);
        CHECK(s[0] == 10.0);
        CHECK(s[1] == 10.0);
        CHECK(s[2] == 18.0);
    }

    TEST_CASE("sampling reproduces vertex rows")
    {
        SplitMix64 rng(41);
        std::vector<Point> pts;
        for (int x = 0; x < 50; x += 1 + static_cast<int>(rng.below(4))) {
            pts.push_back({static_cast<double>(x), rng.uniform(0, 500)});
        }
        const auto line = canonicalize(pts);
        for (const auto& p : line.points) {
            CHECK(sample_at(line, p.x) == p.y);
        }
    }

    TEST_CASE("rasterization follows the pixel-center rule")
    {
        const auto pair = flat_pair(100, 150);
        const auto mask = rasterize_band(pair, {100, 200, Resolution::Original}, 1.0, 1.0);
        for (std::size_t x = 0; x < 100; ++x) {
            for (std::size_t y = 0; y < 200; ++y) {
                CHECK(mask.at(x, y) == (y >= 100 && y <= 149));
            }
        }
    }

    TEST_CASE("zero-thickness band sets at most one row per column")
    {
        for (double row : {100.0, 100.5, 100.25}) {
            const auto mask = rasterize_band(flat_pair(row, row), {100, 200, Resolution::Original}, 1.0, 1.0);
            const auto b = extract_boundaries(mask);
            for (const auto& c : b.columns) {
                if (c) {
                    CHECK(c->upper == c->lower);
                }
            }
        }
    }

    TEST_CASE("empty overlap gives an empty mask and a warning")
    {
        const auto pair = make_contour_pair("x", flat(10, 0, 20), flat(30, 50, 80));
        Diagnostics d;
        const auto mask = rasterize_band(pair, {100, 100, Resolution::Original}, 1.0, 1.0, &d);
        CHECK(mask.foreground_count() == 0);
        CHECK_FALSE(d.warnings.empty());
        CHECK_FALSE(reference_cimt(pair, {"x", 0.06, 100, 100}, AggregationPolicy::mean()).has_value());
    }

    TEST_CASE("rasterized rows sit inside the scaled traces")
    {
        SplitMix64 rng(42);
        for (int trial = 0; trial < 30; ++trial) {
            std::vector<Point> li;
            std::vector<Point> ma;
            for (int x = 0; x <= 300; x += 25) {
                const double top = rng.uniform(50, 200);
                li.push_back({static_cast<double>(x), top});
                ma.push_back({static_cast<double>(x), top + rng.uniform(0, 40)});
            }
            const auto pair = make_contour_pair("x", canonicalize(li), canonicalize(ma));
            const double sx = rng.uniform(0.5, 2.0);
            const double sy = rng.uniform(0.5, 2.0);
            const auto mask = rasterize_band(pair, {512, 512, Resolution::Working}, sx, sy);
            for (std::size_t x = 0; x < 512; ++x) {
                for (std::size_t y = 0; y < 512; ++y) {
                    if (!mask.at(x, y)) {
                        continue;
                    }
                    const double xo = static_cast<double>(x) / sx;
                    const double c = static_cast<double>(y) + 0.5;
                    REQUIRE(sample_at(pair.li, xo).has_value());
                    CHECK(c >= *sample_at(pair.li, xo) * sy - 1e-9);
                    CHECK(c <= *sample_at(pair.ma, xo) * sy + 1e-9);
                }
            }
        }
    }

    TEST_CASE("reference CIMT")
    {
        const CalibrationRecord cal{"band", 0.06, 100, 200};
        const auto r = reference_cimt(flat_pair(100, 150), cal, AggregationPolicy::mean());
        REQUIRE(r.has_value());
        CHECK(r->cimt_px_working == 50.0);
        CHECK(r->cimt_um == doctest::Approx(3000.0).epsilon(1e-14));
        CHECK(reference_cimt(flat_pair(120, 120), cal, AggregationPolicy::mean())->cimt_um == 0.0);

        // Gap 20 + 0.1 x over [0, 100] has mean 25 px.
        const auto sloped = make_contour_pair("s", canonicalize({{0, 100}, {100, 100}}),
                                              canonicalize({{0, 120}, {100, 130}}));
        const auto s = reference_cimt(sloped, {"s", 0.05, 200, 300}, AggregationPolicy::mean());
        CHECK(s->cimt_um == doctest::Approx(1250.0).epsilon(1e-12));
        CHECK(s->valid_columns == 101);
    }

    TEST_CASE("points outside the image are geometry errors")
    {
        const auto pair = flat_pair(100, 150, 0, 99);
        CHECK_NOTHROW(check_within_image(pair, {"band", 0.06, 100, 200}));
        CHECK(kind_of([&] { check_within_image(pair, {"band", 0.06, 50, 200}); }) == ErrorKind::Geometry);
        CHECK(kind_of([&] { check_within_image(pair, {"band", 0.06, 100, 120}); }) == ErrorKind::Geometry);
    }

    TEST_CASE("contour files round-trip exactly")
    {
        test::TempDir dir("contours");
        SplitMix64 rng(43);
        std::vector<Point> li;
        std::vector<Point> ma;
        for (int x = 0; x < 40; ++x) {
            const double top = rng.uniform(10, 20);
            li.push_back({static_cast<double>(x), top});
            ma.push_back({static_cast<double>(x), top + rng.uniform(1, 9)});
        }
        const auto pair = make_contour_pair("clin_0003_L", canonicalize(li), canonicalize(ma));
        save_contour_pair(dir.path(), pair);
        const auto back = load_contour_pair(dir.path(), "clin_0003_L");
        REQUIRE(back.li.points.size() == 40);
        for (std::size_t i = 0; i < 40; ++i) {
            CHECK(back.li.points[i].y == pair.li.points[i].y);
            CHECK(back.ma.points[i].y == pair.ma.points[i].y);
        }
        CHECK(kind_of([&] { load_contour_pair(dir.path(), "nope"); }) == ErrorKind::Io);
    }
}
