// Serial vs OpenMP timings of the data-parallel kernels.
#include "bilin/analysis.hpp"

#include <fmt/core.h>
#include <omp.h>

#include <chrono>
#include <cmath>
#include <vector>

namespace {

template <class Fn>
double seconds(Fn&& fn, int reps)
{
    const auto start = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) {
        fn();
    }
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / reps;
}

}  // namespace

int main()
{
    const double w = 100.0 * M_PI;
    const double dt = 1e-5;
    const std::size_t n = 200000;

    bilin::GramSeries series;
    series.dt = dt;
    series.samples.reserve(n);
    std::vector<double> v(n);
    std::vector<double> i(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) * dt;
        bilin::Matrix g(2, 2);
        g << std::pow(std::sin(w * t), 2), 0.1 * std::sin(w * t), 0.1 * std::sin(w * t), 1.0;
        series.samples.push_back(g);
        v[k] = 150.0 * std::sin(w * t);
        i[k] = 6.0 * std::sin(w * t + 0.05);
    }
    const double window = 0.02;
    const auto grid = bilin::default_pe_grid(series, window);
    const auto pf_window = static_cast<std::size_t>(std::lround(2.0 * M_PI / w / dt));

    fmt::print("threads: {}\n", omp_get_max_threads());
    const double pe_serial = seconds([&] { bilin::serial::pe_level(series, window, grid); }, 3);
    const double pe_omp = seconds([&] { bilin::pe_level(series, window, grid); }, 3);
    fmt::print("pe_level              serial {:8.4f} s  omp {:8.4f} s  speedup {:5.2f}\n", pe_serial, pe_omp,
               pe_serial / pe_omp);
    const double pf_serial = seconds([&] { bilin::serial::sliding_power_factor(v, i, pf_window); }, 3);
    const double pf_omp = seconds([&] { bilin::sliding_power_factor(v, i, pf_window); }, 3);
    fmt::print("sliding_power_factor  serial {:8.4f} s  omp {:8.4f} s  speedup {:5.2f}\n", pf_serial, pf_omp,
               pf_serial / pf_omp);
    return 0;
}
