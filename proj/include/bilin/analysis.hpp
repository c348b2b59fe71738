#pragma once

#include "bilin/model.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace bilin {

/// Windowed-Gram excitation level: alpha I <= int_{t0}^{t0+T} G dtau <= beta I
/// for every t0 in the grid.
struct PeReport {
    double window = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    std::vector<double> grid;

    bool persistently_exciting() const { return alpha > 0.0; }
};

// Uniformly sampled matrix-valued signal, samples[k] taken at t0 + k*dt.
struct GramSeries {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<Matrix> samples;

    double t_end() const;
};

/// Dfrak Dfrak^T + P B(x_d, s) K B(x_d, s)^T P, i.e. the Gram Q Q^T. Q itself
/// is never formed.
Matrix q_gram(const PassivityCertificate& cert, const Matrix& k_gain, const BilinearPlant& plant,
              const Vector& x_d, const Vector& s);

/// Trapezoidal window integrals of the series at every grid instant, reduced
/// to the extreme eigenvalues. Grid instants are snapped to the sample grid.
/// Windows are evaluated in parallel.
PeReport pe_level(const GramSeries& series, double window, std::span<const double> grid);

// t0 stepped by window/4 over [series.t0, t_end - window].
std::vector<double> default_pe_grid(const GramSeries& series, double window);

double v_c(const PassivityCertificate& cert, const Vector& x_tilde);
double v_c_dot_analytic(const PassivityCertificate& cert, const Matrix& k_gain,
                        const BilinearPlant& plant, const Vector& x_tilde, const Vector& x_d,
                        const Vector& s);

double v_o(const ObserverCertificate& ocert, const Vector& err);
double v_o_dot_analytic(const BilinearPlant& plant, const ObserverCertificate& ocert, const Vector& err,
                        const Vector& u);

// Cumulative trapezoidal integral of det^2; out[0] = 0.
std::vector<double> det_sq_integral(std::span<const double> det_series, double dt);

// Heuristic surrogate for det(Phi) not being square integrable: the final
// value of the running integral against its value after `early_fraction`
// of the horizon.
struct DivergenceSurrogate {
    double early = 0.0;
    double final = 0.0;
    double ratio = 0.0;
    bool diverging = false;
};

DivergenceSurrogate det_sq_divergence(std::span<const double> integral, double early_fraction = 0.01,
                                      double factor = 100.0);

/// Numerical rank of [Dfrak^T; B(x_d, s)^T P]. Full rank n means
/// Dfrak^T e = B^T P e = 0 forces e = 0 at that instant.
Index detectability_rank(const PassivityCertificate& cert, const BilinearPlant& plant,
                         const Vector& x_d, const Vector& s, double rel_tol = 1e-9);

/// mean(v i) / (rms(v) rms(i)) over the trailing `window_samples` samples
/// ending at each index. Absent before the first full window and where
/// rms(i) < 1e-9. Windows are evaluated in parallel.
std::vector<std::optional<double>> sliding_power_factor(std::span<const double> v,
                                                        std::span<const double> i,
                                                        std::size_t window_samples);

namespace serial {

// Single-threaded versions of the parallel kernels above; same arithmetic,
// kept as the reference the parallel kernels are tested against.
PeReport pe_level(const GramSeries& series, double window, std::span<const double> grid);
std::vector<std::optional<double>> sliding_power_factor(std::span<const double> v,
                                                        std::span<const double> i,
                                                        std::size_t window_samples);

}  // namespace serial

}  // namespace bilin
