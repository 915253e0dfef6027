// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>

namespace cimt {

/// Neumaier-compensated accumulator. Used for every reduction whose result is
/// written to a report so that outputs do not depend on summation order noise.
class CompensatedSum {
public:
    void add(double value) noexcept
    {
        const double t = sum_ + value;
        if (std::fabs(sum_) >= std::fabs(value)) {
            compensation_ += (sum_ - t) + value;
        } else {
            compensation_ += (value - t) + sum_;
        }
        sum_ = t;
    }

    double value() const noexcept { return sum_ + compensation_; }

private:
    double sum_ = 0.0;
    double compensation_ = 0.0;
};

double compensated_sum(std::span<const double> values) noexcept;
double compensated_mean(std::span<const double> values) noexcept;

/// Runs body(i) for i in [0, count) on up to `jobs` threads. Work is handed out
/// by an atomic counter; callers write results into per-index slots so the
/// outcome is independent of scheduling. If bodies throw, the exception from
/// the lowest index is rethrown after all workers join.
void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& body);

}  // namespace cimt
