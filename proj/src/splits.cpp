// SPDX-License-Identifier: Apache-2.0

#include "cimt/splits.hpp"

#include "cimt/error.hpp"
#include "cimt/random.hpp"
#include "cimt/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <ostream>

namespace cimt {

std::string_view to_string(Partition partition)
{
    switch (partition) {
    case Partition::Train:
        return "train";
    case Partition::Val:
        return "val";
    case Partition::Test:
        return "test";
    }
    return "train";
}

Partition parse_partition(std::string_view text)
{
    if (text == "train") {
        return Partition::Train;
    }
    if (text == "val" || text == "validation") {
        return Partition::Val;
    }
    if (text == "test") {
        return Partition::Test;
    }
    throw Error(ErrorKind::Parse, "unknown partition '" + std::string(text) + "'");
}

std::string extract_patient_id(std::string_view image_id)
{
    constexpr std::string_view token = "clin_";
    std::size_t pos = image_id.find(token);
    while (pos != std::string_view::npos) {
        std::size_t end = pos + token.size();
        while (end < image_id.size() && std::isdigit(static_cast<unsigned char>(image_id[end]))) {
            ++end;
        }
        const std::size_t digits = end - pos - token.size();
        if (digits > 0) {
            std::string number(image_id.substr(pos + token.size(), digits));
            if (number.size() < 4) {
                number.insert(0, 4 - number.size(), '0');
            }
            return std::string(token) + number;
        }
        pos = image_id.find(token, pos + 1);
    }
    throw Error(ErrorKind::UnparseableId, "no clin_<digits> token in image id '" + std::string(image_id) + "'");
}

SplitRatios SplitRatios::parse(std::string_view text)
{
    const auto fields = text::split_fields(text);
    if (fields.size() != 3) {
        throw Error(ErrorKind::InvalidConfig, "ratios need three comma-separated values, got '" +
                                                  std::string(text) + "'");
    }
    SplitRatios r;
    double* slots[] = {&r.train, &r.val, &r.test};
    for (std::size_t i = 0; i < 3; ++i) {
        const auto v = text::parse_double(fields[i]);
        if (!v) {
            throw Error(ErrorKind::InvalidConfig, "bad ratio '" + std::string(fields[i]) + "'");
        }
        *slots[i] = *v;
    }
    r.validate();
    return r;
}

void SplitRatios::validate() const
{
    for (double v : {train, val, test}) {
        if (!std::isfinite(v) || v <= 0.0) {
            throw Error(ErrorKind::InvalidConfig, "every split ratio must be positive");
        }
    }
    if (std::fabs(train + val + test - 1.0) > 1e-9) {
        throw Error(ErrorKind::InvalidConfig, "split ratios must sum to 1");
    }
}

std::array<std::size_t, 3> partition_sizes(std::size_t n, const SplitRatios& ratios)
{
    ratios.validate();
    const double quotas[3] = {static_cast<double>(n) * ratios.train, static_cast<double>(n) * ratios.val,
                              static_cast<double>(n) * ratios.test};
    std::array<std::size_t, 3> sizes{};
    std::array<double, 3> remainders{};
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        sizes[i] = static_cast<std::size_t>(std::floor(quotas[i] + 1e-9));
        remainders[i] = std::max(0.0, quotas[i] - static_cast<double>(sizes[i]));
        assigned += sizes[i];
    }
    // Tie order: test, val, train.
    std::array<std::size_t, 3> order{2, 1, 0};
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return remainders[a] > remainders[b] + 1e-9;
    });
    for (std::size_t k = 0; assigned < n; k = (k + 1) % 3) {
        ++sizes[order[k]];
        ++assigned;
    }
    for (std::size_t i = 0; i < 3; ++i) {
        if (sizes[i] == 0) {
            throw Error(ErrorKind::InvalidConfig, "split of " + std::to_string(n) + " patients leaves the " +
                                                      std::string(to_string(static_cast<Partition>(i))) +
                                                      " partition empty");
        }
    }
    return sizes;
}

std::vector<std::string> SplitManifest::images_in(Partition partition) const
{
    std::vector<std::string> out;
    for (const auto& [image, a] : image_assignment) {
        if (a.partition == partition) {
            out.push_back(image);
        }
    }
    return out;
}

std::size_t SplitManifest::patient_count(Partition partition) const
{
    return static_cast<std::size_t>(std::count_if(assignment.begin(), assignment.end(),
                                                  [&](const auto& kv) { return kv.second == partition; }));
}

SplitManifest make_split(std::vector<std::string> patients, std::uint64_t seed, const SplitRatios& ratios)
{
    std::sort(patients.begin(), patients.end());
    patients.erase(std::unique(patients.begin(), patients.end()), patients.end());
    if (patients.size() < 3) {
        throw Error(ErrorKind::InvalidConfig, "need at least 3 patients to split, got " +
                                                  std::to_string(patients.size()));
    }
    const auto sizes = partition_sizes(patients.size(), ratios);

    SplitMix64 rng(seed);
    for (std::size_t i = patients.size() - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i + 1));
        std::swap(patients[i], patients[j]);
    }

    SplitManifest m;
    m.seed = seed;
    m.ratios = ratios;
    std::size_t idx = 0;
    for (std::size_t part = 0; part < 3; ++part) {
        for (std::size_t k = 0; k < sizes[part]; ++k, ++idx) {
            m.assignment.emplace(patients[idx], static_cast<Partition>(part));
        }
    }
    return m;
}

SplitManifest make_image_split(std::span<const std::string> image_ids, std::uint64_t seed,
                               const SplitRatios& ratios)
{
    std::vector<std::string> patients;
    std::vector<std::pair<std::string, std::string>> images;
    for (const auto& id : image_ids) {
        std::string patient = extract_patient_id(id);
        patients.push_back(patient);
        images.emplace_back(id, std::move(patient));
    }
    SplitManifest m = make_split(std::move(patients), seed, ratios);
    for (auto& [image, patient] : images) {
        const Partition p = m.assignment.at(patient);
        m.image_assignment[image] = ImageAssignment{std::move(patient), p};
    }
    return m;
}

LeakageReport verify_no_leakage(const SplitManifest& manifest)
{
    LeakageReport report;
    for (const auto& [image, a] : manifest.image_assignment) {
        const auto it = manifest.assignment.find(a.patient_id);
        if (it == manifest.assignment.end() || it->second != a.partition) {
            report.violations.push_back(image);
        }
    }
    return report;
}

void write_manifest_csv(std::ostream& out, const SplitManifest& manifest)
{
    out << "image_id,patient_id,partition,seed\n";
    for (const auto& [image, a] : manifest.image_assignment) {
        out << image << ',' << a.patient_id << ',' << to_string(a.partition) << ',' << manifest.seed << '\n';
    }
}

SplitManifest read_manifest_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || text::trim(line) != "image_id,patient_id,partition,seed") {
        throw Error(ErrorKind::Parse, "line 1: expected header image_id,patient_id,partition,seed");
    }
    SplitManifest m;
    bool have_seed = false;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) {
            continue;
        }
        const auto f = text::split_fields(line);
        if (f.size() != 4) {
            throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": expected 4 fields");
        }
        const auto seed = text::parse_integer(f[3]);
        if (!seed || *seed < 0) {
            throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": bad seed");
        }
        if (have_seed && static_cast<std::uint64_t>(*seed) != m.seed) {
            throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": manifest mixes seeds");
        }
        m.seed = static_cast<std::uint64_t>(*seed);
        have_seed = true;
        const Partition p = parse_partition(f[2]);
        std::string image(f[0]);
        std::string patient(f[1]);
        m.assignment.emplace(patient, p);
        if (!m.image_assignment.emplace(image, ImageAssignment{patient, p}).second) {
            throw Error(ErrorKind::DuplicateId, "line " + std::to_string(line_no) + ": image '" + image +
                                                    "' listed twice");
        }
    }
    return m;
}

}  // namespace cimt
