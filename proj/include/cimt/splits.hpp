// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cimt {

enum class Partition { Train, Val, Test };

std::string_view to_string(Partition partition);
Partition parse_partition(std::string_view text);

/// "clin_0042_L" -> "clin_0042". Digits shorter than four are zero-padded.
std::string extract_patient_id(std::string_view image_id);

struct SplitRatios {
    double train = 0.7;
    double val = 0.1;
    double test = 0.2;

    /// "0.7,0.1,0.2"
    static SplitRatios parse(std::string_view text);
    void validate() const;
};

/// Largest-remainder apportionment of `n` patients. Fractional parts that
/// agree to 1e-9 are treated as tied and resolved in the order test, val,
/// train. Throws Error(InvalidConfig) if any partition ends up empty.
std::array<std::size_t, 3> partition_sizes(std::size_t n, const SplitRatios& ratios);

struct ImageAssignment {
    std::string patient_id;
    Partition partition = Partition::Train;
};

struct SplitManifest {
    std::uint64_t seed = 0;
    SplitRatios ratios;
    std::map<std::string, Partition> assignment;              // patient -> partition
    std::map<std::string, ImageAssignment> image_assignment;  // image -> patient, partition

    std::vector<std::string> images_in(Partition partition) const;
    std::size_t patient_count(Partition partition) const;
};

/// Patient-level split. Patients are de-duplicated and sorted, shuffled with
/// Fisher-Yates driven by SplitMix64(seed) (for i = n-1 .. 1, swap i with
/// next() % (i + 1)), then cut into contiguous train / val / test blocks.
SplitManifest make_split(std::vector<std::string> patients, std::uint64_t seed, const SplitRatios& ratios);

/// Derives patients from image ids, splits them, and assigns every image to
/// its patient's partition.
SplitManifest make_image_split(std::span<const std::string> image_ids, std::uint64_t seed,
                               const SplitRatios& ratios);

struct LeakageReport {
    std::vector<std::string> violations;  // offending image ids

    bool ok() const { return violations.empty(); }
};

LeakageReport verify_no_leakage(const SplitManifest& manifest);

/// CSV `image_id,patient_id,partition,seed`, rows ordered by image_id.
void write_manifest_csv(std::ostream& out, const SplitManifest& manifest);

/// Inverse of write_manifest_csv. Patient partitions are taken from each
/// patient's first row; conflicting later rows are kept as they are so that
/// verify_no_leakage can report them. Ratios are not stored and stay default.
SplitManifest read_manifest_csv(std::istream& in);

}  // namespace cimt
