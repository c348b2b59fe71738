#include "bilin/commands.hpp"

#include "bilin/csv_log.hpp"
#include "bilin/errors.hpp"

#include <fmt/core.h>
#include <fmt/ostream.h>

#include <cmath>
#include <fstream>

namespace bilin::cli {

namespace {

Vector vec(std::initializer_list<double> values)
{
    Vector v(static_cast<Index>(values.size()));
    Index k = 0;
    for (double x : values) {
        v(k++) = x;
    }
    return v;
}

// Maps exceptions onto the exit-code contract.
template <class Fn>
int guarded(std::ostream& err, Fn&& fn)
{
    try {
        return fn();
    } catch (const NumericError& e) {
        fmt::print(err, "numeric error: {}\n", e.what());
        return kExitNumeric;
    } catch (const std::exception& e) {
        fmt::print(err, "error: {}\n", e.what());
        return kExitFailure;
    }
}

void print_report(std::ostream& out, const std::string& title, const CertificateReport& report)
{
    fmt::print(out, "{}: {}\n", title, report.passed() ? "pass" : "FAIL");
    for (const auto& c : report.checks) {
        fmt::print(out, "  {:<36} residual {:.3e}  scale {:.3e}  {}\n", c.name, c.residual, c.scale,
                   c.passed ? "ok" : "FAIL");
    }
}

void print_pe(std::ostream& out, const std::string& title, const PeReport& r)
{
    fmt::print(out, "{:<10} T = {:.6g} s  alpha = {:.6e}  beta = {:.6e}  windows = {}  {}\n", title, r.window,
               r.alpha, r.beta, r.grid.size(), r.persistently_exciting() ? "PE" : "not PE");
}

GramSeries sample_series(double dt, double t_end, const std::function<Matrix(double)>& f)
{
    GramSeries series;
    series.dt = dt;
    const auto n = static_cast<std::size_t>(std::llround(t_end / dt));
    series.samples.reserve(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
        series.samples.push_back(f(static_cast<double>(k) * dt));
    }
    return series;
}

PeReport pe_of(const GramSeries& series, double window)
{
    const auto grid = default_pe_grid(series, window);
    return pe_level(series, window, grid);
}

}  // namespace

SimLog run(const RunConfig& config)
{
    config.validate();
    const pfp::LoopSpec spec = config.loop_spec();
    return simulate(pfp::make_components(spec), config.scenario, pfp::make_event_hook(spec));
}

bool VerifyResult::passed() const
{
    for (const auto& [name, report] : sections) {
        if (!report.passed()) {
            return false;
        }
    }
    return reference_passed;
}

std::vector<std::string> VerifyResult::failing() const
{
    std::vector<std::string> out;
    for (const auto& [name, report] : sections) {
        for (const auto& id : report.failing()) {
            out.push_back(name + ": " + id);
        }
    }
    if (!reference_passed) {
        out.emplace_back("reference: reference-dynamics");
    }
    return out;
}

VerifyResult verify(const RunConfig& config)
{
    config.plant.validate();
    const pfp::PfpParams design = config.loop_spec().design;
    const BilinearPlant plant = pfp::build_plant(design, false);
    const CertificateTamper& tamper = config.tamper;

    auto tampered = [&](int dflag) {
        pfp::Certificates c = pfp::certificates_unchecked(design, config.gains, dflag);
        if (tamper.p11) c.cert.p(0, 0) = *tamper.p11;
        if (tamper.p22) c.cert.p(1, 1) = *tamper.p22;
        if (tamper.dfrak22) c.cert.dfrak(1, 1) = *tamper.dfrak22;
        if (tamper.psigma11) c.ocert.p_sigma(0, 0) = *tamper.psigma11;
        if (tamper.psigma22) c.ocert.p_sigma(1, 1) = *tamper.psigma22;
        if (tamper.dsigma) c.ocert.d_sigma(0, 0) = *tamper.dsigma;
        if (tamper.omega_sign != 1.0) {
            const auto omega = c.regressor.omega;
            const double sign = tamper.omega_sign;
            c.regressor.omega = [omega, sign](const Vector& y, const Vector& u, const Vector& s) {
                return Matrix(sign * omega(y, u, s));
            };
        }
        return c;
    };

    const std::vector<Vector> u_samples = {vec({-1.0}), vec({-0.37}), vec({0.0}), vec({0.52}), vec({1.0}), vec({2.5})};
    const std::vector<Vector> x_samples = {vec({1.0, 0.0}), vec({0.0, 1.0}), vec({6.13, 200.0}), vec({-3.2, 151.0}),
                                           vec({12.0, -40.0})};
    std::vector<PlantSample> plant_samples;
    for (std::size_t k = 0; k < x_samples.size(); ++k) {
        plant_samples.push_back({x_samples[k], u_samples[k], 1.3e-3 * static_cast<double>(k + 1)});
    }

    VerifyResult result;
    const pfp::Certificates obs1 = tampered(1);
    const pfp::Certificates obs0 = tampered(0);
    result.sections.emplace_back("passivity", verify_passivity_certificate(plant, obs1.cert, u_samples, x_samples));
    result.sections.emplace_back("observer (damped)", verify_observer_certificate(plant, obs1.ocert, u_samples));
    result.sections.emplace_back("observer (parameter-free)", verify_observer_certificate(plant, obs0.ocert, u_samples));
    result.sections.emplace_back("regressor", verify_regressor_decomposition(plant, obs0.regressor, plant_samples));

    const double period = design.omega > 0.0 ? design.line_period() : 0.02;
    std::vector<double> ts;
    for (int k = 0; k < 400; ++k) {
        ts.push_back(period * k / 400.0);
    }
    const AdmissibleTrajectory traj = pfp::admissible_trajectory(design, design.g_load, config.reference);
    result.reference = trajectory_residual(plant, traj, ts);
    result.reference_passed = result.reference.dynamics <= kCertificateTolerance * result.reference.scale;
    result.output_ripple = result.reference.output;
    return result;
}

PeCheckResult pe_check(const RunConfig& config, bool with_regressor)
{
    config.validate();
    const double window = config.pe_window;
    const double horizon = config.scenario.t_end;
    if (window > horizon) {
        throw ConfigError(fmt::format("pe window {} s exceeds the horizon {} s", window, horizon));
    }
    const pfp::LoopSpec spec = config.loop_spec();
    const pfp::PfpParams& design = spec.design;
    const BilinearPlant plant = pfp::build_plant(design, false);
    const pfp::Certificates certs = pfp::certificates(design, spec.gains, 1);
    const AdmissibleTrajectory traj = pfp::admissible_trajectory(design, design.g_load, spec.reference);
    const Matrix k_gain = Matrix::Constant(1, 1, spec.gains.k_gain);
    const double dt = config.scenario.dt;

    PeCheckResult result;
    result.q_gram = pe_of(sample_series(dt, horizon,
                                        [&](double t) {
                                            return q_gram(certs.cert, k_gain, plant, traj.at(t).x_d,
                                                          plant.s_signal(t));
                                        }),
                          window);
    result.u_d = pe_of(sample_series(dt, horizon,
                                     [&](double t) {
                                         const Vector u = traj.at(t).u_d;
                                         return Matrix(u * u.transpose());
                                     }),
                       window);

    if (with_regressor) {
        RunConfig adaptive = config;
        adaptive.scenario.mode = ControlMode::adaptive;
        const SimLog log = run(adaptive);
        if (log.failed) {
            throw NumericError(log.failure);
        }
        GramSeries series;
        series.dt = log.dt * log.decimation;
        for (const auto& r : log.records) {
            const Matrix c = plant.c(r.u_plant);
            series.samples.push_back(r.y_filter.transpose() * c * c.transpose() * r.y_filter);
        }
        if (window > series.t_end()) {
            throw ConfigError("pe window exceeds the logged horizon");
        }
        result.regressor = pe_of(series, window);
    }
    return result;
}

SimLog repro_run(const RunConfig& config)
{
    RunConfig rc = config;
    rc.scenario.mode = ControlMode::adaptive;
    rc.scenario.t_end = 0.45;
    rc.scenario.events = pfp::benchmark_events(config.plant);
    return run(rc);
}

int cmd_simulate(const RunConfig& config, const std::filesystem::path& out_path, std::ostream& out,
                 std::ostream& err)
{
    return guarded(err, [&] {
        const SimLog log = run(config);
        std::ofstream file(out_path);
        if (!file) {
            throw ConfigError(fmt::format("cannot write '{}'", out_path.string()));
        }
        write_csv(file, log, config.plant);
        if (log.failed) {
            fmt::print(err, "numeric error: {} (log truncated at {} rows)\n", log.failure, log.records.size());
            return kExitNumeric;
        }
        fmt::print(out, "wrote {} rows to {}\n", log.records.size(), out_path.string());
        return kExitOk;
    });
}

int cmd_verify(const RunConfig& config, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        const VerifyResult result = verify(config);
        for (const auto& [name, report] : result.sections) {
            print_report(out, name, report);
        }
        fmt::print(out, "reference ({}): {}\n  {:<36} residual {:.3e}  scale {:.3e}\n  {:<36} {:.3e} (reported)\n",
                   pfp::to_string(config.reference), result.reference_passed ? "pass" : "FAIL", "reference-dynamics",
                   result.reference.dynamics, result.reference.scale, "output-ripple", result.output_ripple);
        if (!result.passed()) {
            for (const auto& f : result.failing()) {
                fmt::print(err, "failed: {}\n", f);
            }
            return kExitFailure;
        }
        return kExitOk;
    });
}

int cmd_pe_check(const RunConfig& config, bool with_regressor, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        const PeCheckResult r = pe_check(config, with_regressor);
        print_pe(out, "q-gram", r.q_gram);
        print_pe(out, "u_d", r.u_d);
        if (r.regressor) {
            print_pe(out, "regressor", *r.regressor);
        }
        if (!r.q_gram.persistently_exciting()) {
            fmt::print(err, "q-gram is not persistently exciting (alpha = {:.3e})\n", r.q_gram.alpha);
            return kExitFailure;
        }
        return kExitOk;
    });
}

int cmd_repro(const RunConfig& config, const std::filesystem::path& out_dir, std::ostream& out,
              std::ostream& err)
{
    return guarded(err, [&] {
        std::filesystem::create_directories(out_dir);
        const SimLog log = repro_run(config);
        struct Figure {
            const char* file;
            std::vector<std::string_view> columns;
            double t_max;
        };
        const double inf = std::numeric_limits<double>::infinity();
        const std::vector<Figure> figures = {
            {"fig2.csv", {"t", "v_i", "i", "v", "i_hat", "g_hat", "pf"}, 0.05},
            {"fig3.csv", {"t", "v", "v_d"}, inf},
            {"fig4.csv", {"t", "v_i", "i", "i_hat"}, inf},
            {"fig5.csv", {"t", "g_hat", "g"}, inf},
            {"fig6.csv", {"t", "pf"}, inf},
        };
        for (const auto& fig : figures) {
            const auto path = out_dir / fig.file;
            std::ofstream file(path);
            if (!file) {
                throw ConfigError(fmt::format("cannot write '{}'", path.string()));
            }
            write_csv(file, log, config.plant, fig.columns, fig.t_max);
        }
        if (log.failed) {
            fmt::print(err, "numeric error: {}\n", log.failure);
            return kExitNumeric;
        }
        fmt::print(out, "wrote fig2.csv .. fig6.csv ({} samples) to {}\n", log.records.size(), out_dir.string());
        return kExitOk;
    });
}

}  // namespace bilin::cli
