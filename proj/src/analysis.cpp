#include "bilin/analysis.hpp"

#include "analysis_kernels.hpp"
#include "bilin/errors.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace bilin {

double GramSeries::t_end() const
{
    return samples.empty() ? t0 : t0 + dt * static_cast<double>(samples.size() - 1);
}

namespace detail {

WindowPlan plan_pe_windows(const GramSeries& series, double window, std::span<const double> grid)
{
    if (!(window > 0.0) || !(series.dt > 0.0)) {
        throw DimensionError("pe_level: window and sampling step must be positive");
    }
    if (grid.empty()) {
        throw DimensionError("pe_level: empty evaluation grid");
    }
    WindowPlan plan;
    const double steps = window / series.dt;
    plan.window_samples = static_cast<std::size_t>(std::llround(steps));
    if (plan.window_samples == 0) {
        throw DimensionError("pe_level: window shorter than one sample");
    }
    for (const double t0 : grid) {
        const double offset = (t0 - series.t0) / series.dt;
        if (offset < -1e-6) {
            throw DimensionError(fmt::format("pe_level: window at t0={} starts before the series", t0));
        }
        const auto start = static_cast<std::size_t>(std::llround(std::max(offset, 0.0)));
        if (start + plan.window_samples >= series.samples.size()) {
            throw DimensionError(fmt::format(
                "pe_level: window [{}, {}] exceeds series coverage [{}, {}]", t0, t0 + window,
                series.t0, series.t_end()));
        }
        plan.starts.push_back(start);
    }
    return plan;
}

Matrix window_integral(const GramSeries& series, std::size_t start, std::size_t count)
{
    Matrix acc = 0.5 * (series.samples[start] + series.samples[start + count]);
    for (std::size_t k = start + 1; k < start + count; ++k) {
        acc += series.samples[k];
    }
    return series.dt * acc;
}

EigenRange window_eigen_range(const GramSeries& series, std::size_t start, std::size_t count)
{
    const Matrix integral = window_integral(series, start, count);
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (integral + integral.transpose()),
                                                   Eigen::EigenvaluesOnly);
    return {eig.eigenvalues().minCoeff(), eig.eigenvalues().maxCoeff()};
}

PeReport reduce_pe(double window, std::span<const double> grid, std::span<const EigenRange> ranges)
{
    PeReport report;
    report.window = window;
    report.grid.assign(grid.begin(), grid.end());
    report.alpha = std::numeric_limits<double>::infinity();
    report.beta = -std::numeric_limits<double>::infinity();
    for (const auto& r : ranges) {
        report.alpha = std::min(report.alpha, r.lo);
        report.beta = std::max(report.beta, r.hi);
    }
    return report;
}

void check_power_factor_inputs(std::span<const double> v, std::span<const double> i,
                               std::size_t window_samples)
{
    if (v.size() != i.size()) {
        throw DimensionError("power factor: voltage and current series differ in length");
    }
    if (window_samples == 0) {
        throw DimensionError("power factor: empty window");
    }
}

std::optional<double> power_factor_at(std::span<const double> v, std::span<const double> i,
                                      std::size_t end, std::size_t window_samples)
{
    if (end + 1 < window_samples) {
        return std::nullopt;
    }
    double vi = 0.0;
    double vv = 0.0;
    double ii = 0.0;
    for (std::size_t k = end + 1 - window_samples; k <= end; ++k) {
        vi += v[k] * i[k];
        vv += v[k] * v[k];
        ii += i[k] * i[k];
    }
    const double n = static_cast<double>(window_samples);
    const double rms_i = std::sqrt(ii / n);
    const double rms_v = std::sqrt(vv / n);
    if (rms_i < 1e-9 || rms_v == 0.0) {
        return std::nullopt;
    }
    return (vi / n) / (rms_v * rms_i);
}

}  // namespace detail

Matrix q_gram(const PassivityCertificate& cert, const Matrix& k_gain, const BilinearPlant& plant,
              const Vector& x_d, const Vector& s)
{
    require_shape(cert.p, plant.n, plant.n, "q_gram P");
    require_shape(k_gain, plant.m, plant.m, "q_gram K");
    const Matrix pb = cert.p * input_matrix(plant, x_d, s);
    const Matrix gram = cert.dfrak * cert.dfrak.transpose() + pb * k_gain * pb.transpose();
    return 0.5 * (gram + gram.transpose());
}

PeReport pe_level(const GramSeries& series, double window, std::span<const double> grid)
{
    const detail::WindowPlan plan = detail::plan_pe_windows(series, window, grid);
    std::vector<detail::EigenRange> ranges(plan.starts.size());
    const auto count = static_cast<std::ptrdiff_t>(plan.starts.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < count; ++k) {
        const auto idx = static_cast<std::size_t>(k);
        ranges[idx] = detail::window_eigen_range(series, plan.starts[idx], plan.window_samples);
    }
    return detail::reduce_pe(window, grid, ranges);
}

std::vector<double> default_pe_grid(const GramSeries& series, double window)
{
    const double last = series.t_end() - window;
    if (last < series.t0 - 1e-12) {
        throw DimensionError("pe grid: window longer than the series");
    }
    std::vector<double> grid;
    const double step = window / 4.0;
    for (int k = 0;; ++k) {
        const double t0 = series.t0 + step * k;
        if (t0 > last + 1e-9 * window) {
            break;
        }
        grid.push_back(t0);
    }
    return grid;
}

double v_c(const PassivityCertificate& cert, const Vector& x_tilde)
{
    require_size(x_tilde, cert.p.rows(), "v_c error");
    // 1/2 |Pfrak^T e|^2 = 1/2 e^T P e for any root with Pfrak Pfrak^T = P
    const Vector w = spd_sqrt(cert.p).transpose() * x_tilde;
    return 0.5 * w.squaredNorm();
}

double v_c_dot_analytic(const PassivityCertificate& cert, const Matrix& k_gain,
                        const BilinearPlant& plant, const Vector& x_tilde, const Vector& x_d,
                        const Vector& s)
{
    require_size(x_tilde, plant.n, "v_c_dot error");
    const Matrix k_root = spd_sqrt(k_gain);
    const Vector bp = input_matrix(plant, x_d, s).transpose() * (cert.p * x_tilde);
    return -(cert.dfrak.transpose() * x_tilde).squaredNorm() - (k_root.transpose() * bp).squaredNorm();
}

double v_o(const ObserverCertificate& ocert, const Vector& err)
{
    require_size(err, ocert.p_sigma.rows(), "v_o error");
    return 0.5 * err.dot(ocert.p_sigma * err);
}

double v_o_dot_analytic(const BilinearPlant& plant, const ObserverCertificate& ocert, const Vector& err,
                        const Vector& u)
{
    require_size(err, plant.n, "v_o_dot error");
    return -(ocert.d_sigma.transpose() * (plant.c(u).transpose() * err)).squaredNorm();
}

std::vector<double> det_sq_integral(std::span<const double> det_series, double dt)
{
    std::vector<double> out(det_series.size(), 0.0);
    for (std::size_t k = 1; k < det_series.size(); ++k) {
        const double a = det_series[k - 1] * det_series[k - 1];
        const double b = det_series[k] * det_series[k];
        out[k] = out[k - 1] + 0.5 * dt * (a + b);
    }
    return out;
}

DivergenceSurrogate det_sq_divergence(std::span<const double> integral, double early_fraction,
                                      double factor)
{
    DivergenceSurrogate out;
    if (integral.empty()) {
        return out;
    }
    const auto last = integral.size() - 1;
    const auto early_idx = static_cast<std::size_t>(std::llround(early_fraction * static_cast<double>(last)));
    out.early = integral[early_idx];
    out.final = integral[last];
    out.ratio = out.early > 0.0 ? out.final / out.early : std::numeric_limits<double>::infinity();
    out.diverging = out.final > 0.0 && out.ratio >= factor;
    return out;
}

Index detectability_rank(const PassivityCertificate& cert, const BilinearPlant& plant,
                         const Vector& x_d, const Vector& s, double rel_tol)
{
    const Matrix bp = input_matrix(plant, x_d, s).transpose() * cert.p;  // m x n
    Matrix stacked(cert.dfrak.cols() + bp.rows(), plant.n);
    stacked << cert.dfrak.transpose(), bp;
    Eigen::JacobiSVD<Matrix> svd(stacked);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) == 0.0) {
        return 0;
    }
    return (sv.array() > rel_tol * sv(0)).count();
}

std::vector<std::optional<double>> sliding_power_factor(std::span<const double> v,
                                                        std::span<const double> i,
                                                        std::size_t window_samples)
{
    detail::check_power_factor_inputs(v, i, window_samples);
    std::vector<std::optional<double>> out(v.size());
    const auto count = static_cast<std::ptrdiff_t>(v.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < count; ++k) {
        out[static_cast<std::size_t>(k)] =
            detail::power_factor_at(v, i, static_cast<std::size_t>(k), window_samples);
    }
    return out;
}

}  // namespace bilin
