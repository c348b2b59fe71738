#pragma once

// Per-window bodies shared by the parallel kernels and their serial
// references, so both paths perform identical arithmetic.

#include "bilin/analysis.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace bilin::detail {

struct WindowPlan {
    std::size_t window_samples = 0;
    std::vector<std::size_t> starts;
};

WindowPlan plan_pe_windows(const GramSeries& series, double window, std::span<const double> grid);

// Trapezoidal integral of samples[start .. start + count].
Matrix window_integral(const GramSeries& series, std::size_t start, std::size_t count);

struct EigenRange {
    double lo = 0.0;
    double hi = 0.0;
};

EigenRange window_eigen_range(const GramSeries& series, std::size_t start, std::size_t count);

PeReport reduce_pe(double window, std::span<const double> grid, std::span<const EigenRange> ranges);

std::optional<double> power_factor_at(std::span<const double> v, std::span<const double> i,
                                      std::size_t end, std::size_t window_samples);

void check_power_factor_inputs(std::span<const double> v, std::span<const double> i,
                               std::size_t window_samples);

}  // namespace bilin::detail
