#include "bilin/pfp.hpp"

#include "bilin/analysis.hpp"
#include "bilin/errors.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>

namespace bilin::pfp {

namespace {

void require_positive(double value, const char* name)
{
    if (!(value > 0.0) || !std::isfinite(value)) {
        throw ConfigError(fmt::format("pfp: {} must be positive (got {})", name, value));
    }
}

Vector vec2(double a, double b)
{
    Vector v(2);
    v << a, b;
    return v;
}

}  // namespace

void PfpParams::validate() const
{
    require_positive(e_amp, "e_amp");
    require_positive(l_ind, "l_ind");
    require_positive(c_cap, "c_cap");
    require_positive(v_target, "v_target");
    require_positive(f_sw, "f_sw");
    if (!(omega >= 0.0) || !std::isfinite(omega)) {
        throw ConfigError("pfp: omega must be non-negative");
    }
    if (!(g_load >= 0.0) || !std::isfinite(g_load)) {
        throw ConfigError("pfp: g_load must be non-negative");
    }
    if (!(r_source >= 0.0) || !std::isfinite(r_source)) {
        throw ConfigError("pfp: r_source must be non-negative");
    }
}

double PfpParams::line_period() const
{
    if (omega <= 0.0) {
        throw ConfigError("pfp: line period undefined for a DC source");
    }
    return 2.0 * 3.14159265358979323846 / omega;
}

double PfpParams::i0(double g_effective) const { return 2.0 * g_effective * v_target * v_target / e_amp; }

PfpGains PfpGains::defaults_for(const PfpParams& params)
{
    PfpGains g;
    g.gamma1 = 3.0 * (1.0 / params.c_cap - 1.0 / params.l_ind);
    g.gamma2 = 2.0 / params.c_cap;
    g.lambda = 200.0 * params.c_cap;
    return g;
}

void PfpGains::validate(const PfpParams& params) const
{
    if (!(gamma2 > 0.0)) {
        throw ConfigError(fmt::format("pfp gains: gamma2 must be positive (got {})", gamma2));
    }
    if (!(gamma1 > -1.0 / params.l_ind)) {
        throw ConfigError(fmt::format("pfp gains: gamma1 must exceed -1/L = {} (got {})", -1.0 / params.l_ind, gamma1));
    }
    if (!(k_gain >= 0.0) || !std::isfinite(k_gain)) {
        throw ConfigError("pfp gains: k_gain must be non-negative");
    }
    require_positive(lambda, "lambda");
    require_positive(t_filter, "t_filter");
}

std::string_view to_string(ReferenceKind kind) { return kind == ReferenceKind::exact ? "exact" : "simplified"; }

ReferenceKind parse_reference_kind(std::string_view text)
{
    if (text == "exact") {
        return ReferenceKind::exact;
    }
    if (text == "simplified") {
        return ReferenceKind::simplified;
    }
    throw ConfigError(fmt::format("unknown reference '{}' (exact, simplified)", text));
}

BilinearPlant build_plant(const PfpParams& params, bool with_source_resistance)
{
    params.validate();
    const double l = params.l_ind;
    const double c = params.c_cap;
    const double e = params.e_amp;
    const double w = params.omega;

    BilinearPlant plant;
    plant.n = 2;
    plant.m = 1;
    plant.l = 1;
    plant.q = 1;
    plant.a0 = Matrix::Zero(2, 2);
    Matrix j1(2, 2);
    j1 << 0.0, -1.0 / l, 1.0 / c, 0.0;
    plant.j_list = {j1};
    plant.d = Matrix::Zero(2, 2);
    plant.d(0, 0) = with_source_resistance ? params.r_source / l : 0.0;
    plant.d(1, 1) = params.g_load / c;
    plant.b0 = [](const Vector&) { return Matrix::Zero(2, 1); };
    plant.e = Matrix(2, 1);
    plant.e << e / l, 0.0;
    plant.c = [](const Vector&) {
        Matrix ct(2, 1);
        ct << 0.0, 1.0;
        return ct;
    };
    plant.s_signal = [w](double t) { return Vector::Constant(1, std::sin(w * t)); };
    return plant;
}

AdmissibleTrajectory admissible_trajectory(const PfpParams& params, double g_effective, ReferenceKind kind)
{
    params.validate();
    if (!(g_effective > 0.0) || !std::isfinite(g_effective)) {
        throw ConfigError(fmt::format("pfp reference: conductance must be positive (got {})", g_effective));
    }
    if (!(params.omega > 0.0)) {
        // E sin(wt) vanishes identically, nothing can sustain v_d > 0 against the load
        throw ConfigError("pfp reference: no admissible trajectory for a DC (omega = 0) source");
    }
    const double e = params.e_amp;
    const double w = params.omega;
    const double l = params.l_ind;
    const double c = params.c_cap;
    const double vd = params.v_target;
    const double i0 = params.i0(g_effective);

    // v_d^2 = V_d^2 + A cos(2wt) + B sin(2wt) is the periodic solution of the
    // energy balance (C/2) d(v^2)/dt = i (E sin - L di/dt) - G v^2.
    double amp_c = 0.0;
    double amp_s = 0.0;
    if (kind == ReferenceKind::exact) {
        const double a = -e * i0 / 2.0;
        const double b = -l * i0 * i0 * w / 2.0;
        const double cw = c * w;
        const double den = g_effective * g_effective + cw * cw;
        amp_c = (g_effective * a - cw * b) / den;
        amp_s = (cw * a + g_effective * b) / den;
    }

    AdmissibleTrajectory traj;
    traj.at = [=](double t) {
        const double sn = std::sin(w * t);
        const double cs = std::cos(w * t);
        const double v2 = vd * vd + amp_c * std::cos(2.0 * w * t) + amp_s * std::sin(2.0 * w * t);
        const double v = std::sqrt(v2);
        const double v_dot = w * (-amp_c * std::sin(2.0 * w * t) + amp_s * std::cos(2.0 * w * t)) / v;
        ReferencePoint ref;
        ref.x_d = vec2(i0 * sn, v);
        ref.x_d_dot = vec2(i0 * w * cs, v_dot);
        ref.u_d = Vector::Constant(1, (e * sn - l * i0 * w * cs) / v);
        ref.y_d = Vector::Constant(1, vd);
        return ref;
    };
    return traj;
}

Certificates certificates_unchecked(const PfpParams& params, const PfpGains& gains, int dflag)
{
    const double l = params.l_ind;
    const double c = params.c_cap;
    const double g = params.g_load;
    const double e = params.e_amp;

    Certificates out;
    out.cert.p = Matrix::Zero(2, 2);
    out.cert.p.diagonal() << l, c;
    out.cert.dfrak = Matrix::Zero(2, 2);
    out.cert.dfrak(1, 1) = std::sqrt(g);

    const double g1 = gains.gamma1;
    const double g2 = gains.gamma2;
    out.ocert.gamma = [g1, g2](const Vector& u) {
        Matrix gm(2, 1);
        gm << g1 * u(0), g2;
        return gm;
    };
    out.ocert.p_sigma = Matrix::Zero(2, 2);
    out.ocert.p_sigma.diagonal() << l / (1.0 + g1 * l), c;
    out.ocert.d_sigma = Matrix::Constant(1, 1, std::sqrt(std::max(0.0, dflag * g + c * g2)));
    out.ocert.dflag = dflag;

    out.regressor.p = 1;
    out.regressor.theta_true = Vector::Constant(1, g);
    out.regressor.bfrak = [e, l](const Vector&, const Vector&, const Vector& s) { return vec2(e * s(0) / l, 0.0); };
    out.regressor.omega = [c](const Vector& y, const Vector&, const Vector&) {
        Matrix om(2, 1);
        om << 0.0, -y(0) / c;
        return om;
    };
    return out;
}

Certificates certificates(const PfpParams& params, const PfpGains& gains, int dflag)
{
    params.validate();
    gains.validate(params);
    if (dflag != 0 && dflag != 1) {
        throw ConfigError("pfp: dflag must be 0 or 1");
    }
    return certificates_unchecked(params, gains, dflag);
}

double pwm_switch(double u_avg, double t, double f_sw)
{
    const double duty = (std::clamp(u_avg, -1.0, 1.0) + 1.0) / 2.0;
    const double phase = t * f_sw - std::floor(t * f_sw);
    const double carrier = phase < 0.5 ? 2.0 * phase : 2.0 - 2.0 * phase;
    return carrier < duty ? 1.0 : -1.0;
}

std::vector<std::optional<double>> power_factor(const SimLog& log, const PfpParams& params)
{
    std::vector<double> vi;
    std::vector<double> cur;
    vi.reserve(log.records.size());
    cur.reserve(log.records.size());
    for (const auto& r : log.records) {
        vi.push_back(params.e_amp * r.s(0));
        cur.push_back(r.x(0));
    }
    const double sample_dt = log.dt * log.decimation;
    const auto window = static_cast<std::size_t>(std::llround(params.line_period() / sample_dt));
    return sliding_power_factor(vi, cur, std::max<std::size_t>(window, 1));
}

void apply_event(const Event& event, PfpParams& truth, PfpParams& design)
{
    if (!(event.value > 0.0) || !std::isfinite(event.value)) {
        throw ConfigError(fmt::format("event {} at t={}: value must be positive", event.key, event.time));
    }
    if (event.key == "G") {
        truth.g_load = event.value;
    } else if (event.key == "L") {
        truth.l_ind = event.value;
    } else if (event.key == "C") {
        truth.c_cap = event.value;
    } else if (event.key == "V_d") {
        truth.v_target = event.value;
        design.v_target = event.value;
    } else {
        throw ConfigError(fmt::format("unknown event key '{}' (G, L, C, V_d)", event.key));
    }
}

LoopSpec LoopSpec::nominal(ControlMode mode)
{
    LoopSpec spec;
    spec.mode = mode;
    spec.design.r_source = 0.0;
    spec.gains = PfpGains::defaults_for(spec.design);
    return spec;
}

namespace {

void install_references(LoopComponents& c, const LoopSpec& spec)
{
    const PfpParams design = spec.design;
    const ReferenceKind kind = spec.reference;
    c.traj = admissible_trajectory(design, design.g_load, kind);
    c.traj_of_theta = [design, kind](const Vector& theta) {
        return admissible_trajectory(design, std::max(theta(0), kMinConductance), kind);
    };
}

}  // namespace

LoopComponents make_components(const LoopSpec& spec)
{
    spec.truth.validate();
    const int dflag = spec.mode == ControlMode::adaptive ? 0 : 1;
    Certificates certs = certificates(spec.design, spec.gains, dflag);

    LoopComponents c;
    c.truth = std::make_shared<const BilinearPlant>(build_plant(spec.truth, true));
    c.design = std::make_shared<const BilinearPlant>(build_plant(spec.design, false));
    c.cert = std::make_shared<const PassivityCertificate>(certs.cert);
    c.ocert = certs.ocert;
    c.regressor = certs.regressor;
    c.drem_gains.lambda = Matrix::Constant(1, 1, spec.gains.lambda);
    c.drem_gains.t_filter = Matrix::Constant(1, 1, spec.gains.t_filter);
    c.k_gain = Matrix::Constant(1, 1, spec.gains.k_gain);
    if (spec.saturate) {
        c.bounds = InputBounds{Vector::Constant(1, spec.u_min), Vector::Constant(1, spec.u_max)};
    }
    install_references(c, spec);
    c.theta_true = Vector::Constant(1, spec.truth.g_load);
    const double f_sw = spec.truth.f_sw;
    c.modulator = [f_sw](const Vector& u, double t) { return Vector::Constant(1, pwm_switch(u(0), t, f_sw)); };
    return c;
}

EventHook make_event_hook(const LoopSpec& spec)
{
    auto state = std::make_shared<LoopSpec>(spec);
    return [state](const Event& event, LoopComponents& c) {
        const double old_vd = state->design.v_target;
        apply_event(event, state->truth, state->design);
        c.truth = std::make_shared<const BilinearPlant>(build_plant(state->truth, true));
        c.theta_true = Vector::Constant(1, state->truth.g_load);
        if (state->design.v_target != old_vd) {
            install_references(c, *state);
        }
    };
}

std::vector<Event> benchmark_events(const PfpParams& nominal)
{
    return {
        {0.05, "G", 1.25 * nominal.g_load},
        {0.10, "G", nominal.g_load},
        {0.15, "L", 1.25 * nominal.l_ind},
        {0.20, "L", nominal.l_ind},
        {0.25, "C", 1.25 * nominal.c_cap},
        {0.30, "C", nominal.c_cap},
        {0.35, "V_d", 210.0},
        {0.40, "V_d", nominal.v_target},
    };
}

}  // namespace bilin::pfp
