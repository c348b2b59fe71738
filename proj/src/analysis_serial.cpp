#include "analysis_kernels.hpp"

namespace bilin::serial {

PeReport pe_level(const GramSeries& series, double window, std::span<const double> grid)
{
    const detail::WindowPlan plan = detail::plan_pe_windows(series, window, grid);
    std::vector<detail::EigenRange> ranges;
    ranges.reserve(plan.starts.size());
    for (const auto start : plan.starts) {
        ranges.push_back(detail::window_eigen_range(series, start, plan.window_samples));
    }
    return detail::reduce_pe(window, grid, ranges);
}

std::vector<std::optional<double>> sliding_power_factor(std::span<const double> v,
                                                        std::span<const double> i,
                                                        std::size_t window_samples)
{
    detail::check_power_factor_inputs(v, i, window_samples);
    std::vector<std::optional<double>> out;
    out.reserve(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) {
        out.push_back(detail::power_factor_at(v, i, k, window_samples));
    }
    return out;
}

}  // namespace bilin::serial
