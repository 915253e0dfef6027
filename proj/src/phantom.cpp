// SPDX-License-Identifier: Apache-2.0

#include "cimt/phantom.hpp"

#include "cimt/error.hpp"
#include "cimt/numeric.hpp"
#include "cimt/pgm.hpp"
#include "cimt/random.hpp"
#include "cimt/text.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace cimt {

double CurveSpec::operator()(double x) const
{
    switch (kind) {
    case CurveKind::Constant:
        return base;
    case CurveKind::Linear:
        return base + slope * x;
    case CurveKind::Sinusoidal:
        return base + amplitude * std::sin(2.0 * std::numbers::pi * x / period + phase);
    }
    return base;
}

namespace {

double quantize(double row)
{
    return std::round(row / kRowQuantum) * kRowQuantum;
}

// An upper edge exactly on a pixel center would put both end rows of an
// integer-thick band inside it (thickness + 1 pixels).
double quantize_edge(double row)
{
    const double q = quantize(row);
    return q - std::floor(q) == 0.5 ? q + kRowQuantum : q;
}

struct Curves {
    std::vector<double> li;
    std::vector<double> thickness;
};

Curves sample_curves(const PhantomSpec& spec)
{
    Curves c;
    c.li.resize(spec.width);
    c.thickness.resize(spec.width);
    for (std::size_t x = 0; x < spec.width; ++x) {
        const auto xd = static_cast<double>(x);
        c.li[x] = quantize_edge(spec.li_curve(xd));
        c.thickness[x] = quantize(spec.thickness_curve(xd));
    }
    return c;
}

double sigmoid(double z)
{
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

std::string invalid(const PhantomSpec& spec, const std::string& what)
{
    return "phantom '" + spec.image_id + "': " + what;
}

}  // namespace

void PhantomSpec::validate() const
{
    if (width < 2 || height < 5) {
        throw Error(ErrorKind::InvalidInput, invalid(*this, "image must be at least 2x5 pixels"));
    }
    if (!(edge_softness >= 0.0) || !std::isfinite(edge_softness)) {
        throw Error(ErrorKind::InvalidInput, invalid(*this, "edge softness must be >= 0"));
    }
    if (!(probability_offset >= -0.3 && probability_offset <= 0.3)) {
        throw Error(ErrorKind::InvalidInput, invalid(*this, "probability offset must lie in [-0.3, 0.3]"));
    }
    if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) {
        throw Error(ErrorKind::InvalidInput, invalid(*this, "noise sd must be >= 0"));
    }
    if (!(mm_per_pixel > kMinMmPerPixel && mm_per_pixel < kMaxMmPerPixel)) {
        throw Error(ErrorKind::InvalidInput, invalid(*this, "mm_per_pixel out of range"));
    }
    for (const CurveSpec* c : {&li_curve, &thickness_curve}) {
        if (c->kind == CurveKind::Sinusoidal && !(c->period > 0.0)) {
            throw Error(ErrorKind::InvalidInput, invalid(*this, "sinusoid period must be positive"));
        }
    }
    const Curves c = sample_curves(*this);
    const double bottom_limit = static_cast<double>(height) - 2.0;
    for (std::size_t x = 0; x < width; ++x) {
        const double li = c.li[x];
        const double th = c.thickness[x];
        if (!std::isfinite(li) || !std::isfinite(th) || th < 2.0 || li < 1.0 || li + th > bottom_limit) {
            std::ostringstream os;
            os << "band leaves the image or is thinner than 2 px at column " << x << " (li=" << li
               << ", thickness=" << th << ")";
            throw Error(ErrorKind::InvalidInput, invalid(*this, os.str()));
        }
    }
}

PhantomBundle generate(const PhantomSpec& spec)
{
    spec.validate();
    const Curves c = sample_curves(spec);
    const std::size_t w = spec.width;
    const std::size_t h = spec.height;

    PhantomBundle b;
    b.prob.image_id = spec.image_id;
    b.prob.width = w;
    b.prob.height = h;
    b.prob.values.resize(w * h);

    SplitMix64 rng(spec.rng_seed);
    const double s = spec.edge_softness;
    for (std::size_t y = 0; y < h; ++y) {
        const double center = static_cast<double>(y) + 0.5;
        for (std::size_t x = 0; x < w; ++x) {
            const double li = c.li[x];
            const double ma = li + c.thickness[x];
            double p = 0.0;
            if (s == 0.0) {
                p = row_in_band(li, ma, y) ? 1.0 : 0.0;
            } else {
                p = sigmoid((center - li) / s) * sigmoid((ma - center) / s);
            }
            p += spec.probability_offset;
            if (spec.noise_sd > 0.0) {
                p += spec.noise_sd * rng.normal();
            }
            b.prob.values[y * w + x] = std::clamp(p, 0.0, 1.0);
        }
    }

    std::vector<Point> li_points;
    std::vector<Point> ma_points;
    for (std::size_t x = 0; x < w; ++x) {
        const auto xd = static_cast<double>(x);
        li_points.push_back({xd, c.li[x]});
        ma_points.push_back({xd, c.li[x] + c.thickness[x]});
    }
    b.contours = ContourPair{spec.image_id, Polyline{std::move(li_points)}, Polyline{std::move(ma_points)}};
    b.calibration = CalibrationRecord{spec.image_id, spec.mm_per_pixel, w, h};
    b.analytic_profile_px = c.thickness;
    const WorkingScale identity = working_pixel_size(b.calibration, static_cast<long long>(h));
    b.analytic_cimt_um = px_to_um(compensated_mean(b.analytic_profile_px), identity);
    return b;
}

namespace {

std::string suite_image_id(std::size_t index)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "clin_%04zu_%c", index / 2 + 1, index % 2 == 0 ? 'L' : 'R');
    return buf;
}

PhantomSpec draw_spec(const PhantomSpec& base, SplitMix64& rng)
{
    PhantomSpec spec = base;
    const auto w = static_cast<double>(base.width);
    const auto h = static_cast<double>(base.height);

    const double li_base = rng.uniform(0.35, 0.55) * h;
    switch (rng.below(3)) {
    case 0:
        spec.li_curve = CurveSpec::constant(li_base);
        break;
    case 1:
        spec.li_curve = CurveSpec::linear(li_base, rng.uniform(-0.04, 0.04));
        break;
    default: {
        const double amplitude = rng.uniform(2.0, 8.0);
        const double period = rng.uniform(w / 3.0, 2.0 * w);
        const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        spec.li_curve = CurveSpec::sinusoidal(li_base, amplitude, period, phase);
        break;
    }
    }

    double thick = rng.uniform(12.0, 28.0);
    CurveSpec t = base.thickness_curve;
    if (t.kind == CurveKind::Constant) {
        spec.thickness_curve = CurveSpec::constant(std::round(thick));
    } else {
        t.base = thick;
        const double amp = rng.uniform(0.0, 0.2) * thick;
        if (t.kind == CurveKind::Linear) {
            t.slope = (rng.uniform() < 0.5 ? -amp : amp) / w;
        } else {
            t.amplitude = amp;
            t.period = rng.uniform(w / 3.0, 2.0 * w);
            t.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        }
        spec.thickness_curve = t;
    }
    spec.mm_per_pixel = base.mm_per_pixel * rng.uniform(0.8, 1.2);
    spec.rng_seed = rng.next();
    return spec;
}

}  // namespace

std::vector<PhantomBundle> generate_suite(std::size_t n, const PhantomSpec& base, std::uint64_t variation_seed)
{
    if (n == 0) {
        throw Error(ErrorKind::InvalidInput, "phantom suite size must be at least 1");
    }
    SplitMix64 rng(variation_seed);
    std::vector<PhantomBundle> out;
    out.reserve(n);
    constexpr int kMaxAttempts = 64;
    for (std::size_t i = 0; i < n; ++i) {
        for (int attempt = 0;; ++attempt) {
            PhantomSpec spec = draw_spec(base, rng);
            spec.image_id = suite_image_id(i);
            try {
                spec.validate();
            } catch (const Error&) {
                if (attempt + 1 >= kMaxAttempts) {
                    throw Error(ErrorKind::InvalidInput, "cannot fit a band into a " + std::to_string(base.width) +
                                                             "x" + std::to_string(base.height) + " phantom");
                }
                continue;
            }
            out.push_back(generate(spec));
            break;
        }
    }
    return out;
}

void write_suite(const std::filesystem::path& dir, std::span<const PhantomBundle> bundles)
{
    std::filesystem::create_directories(dir);
    std::vector<CalibrationRecord> records;
    for (const auto& b : bundles) {
        write_probability_pgm(dir / (b.prob.image_id + std::string(kProbabilitySuffix)), b.prob);
        save_contour_pair(dir, b.contours);
        records.push_back(b.calibration);
    }
    std::ofstream cal(dir / "calibration.csv");
    write_calibration_table(cal, records);
    std::ofstream analytic(dir / "analytic.csv");
    analytic << "image_id,analytic_cimt_um\n";
    for (const auto& b : bundles) {
        analytic << b.prob.image_id << ',' << text::format_fixed(b.analytic_cimt_um, 3) << '\n';
    }
    if (!cal || !analytic) {
        throw Error(ErrorKind::Io, "failed writing phantom tables in '" + dir.string() + "'");
    }
}

}  // namespace cimt
