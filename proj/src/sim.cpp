#include "bilin/sim.hpp"

#include "bilin/analysis.hpp"
#include "bilin/errors.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

namespace bilin {

std::string_view to_string(ControlMode mode)
{
    switch (mode) {
    case ControlMode::full_info:
        return "full-info";
    case ControlMode::output_feedback:
        return "output-feedback";
    case ControlMode::adaptive:
        return "adaptive";
    }
    return "?";
}

std::string_view to_string(PwmModel pwm) { return pwm == PwmModel::averaged ? "averaged" : "switched"; }

ControlMode parse_control_mode(std::string_view text)
{
    for (auto mode : {ControlMode::full_info, ControlMode::output_feedback, ControlMode::adaptive}) {
        if (text == to_string(mode)) {
            return mode;
        }
    }
    throw ConfigError(fmt::format("unknown mode '{}' (full-info, output-feedback, adaptive)", text));
}

PwmModel parse_pwm_model(std::string_view text)
{
    if (text == "averaged") {
        return PwmModel::averaged;
    }
    if (text == "switched") {
        return PwmModel::switched;
    }
    throw ConfigError(fmt::format("unknown pwm model '{}' (averaged, switched)", text));
}

void Scenario::validate() const
{
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw ConfigError("scenario: dt must be positive");
    }
    if (!(t_end > 0.0) || !std::isfinite(t_end)) {
        throw ConfigError("scenario: t_end must be positive");
    }
    if (dt > t_end) {
        throw ConfigError("scenario: dt exceeds t_end");
    }
    if (log_decimation < 1) {
        throw ConfigError("scenario: log decimation must be >= 1");
    }
    if (!(phi0 > 0.0)) {
        throw ConfigError("scenario: initial mixing matrix scale must be positive");
    }
    double prev = -std::numeric_limits<double>::infinity();
    for (const auto& e : events) {
        if (e.time < prev) {
            throw ConfigError("scenario: events must be sorted by time");
        }
        if (e.time < 0.0 || e.time > t_end) {
            throw ConfigError(fmt::format("scenario: event at t={} outside [0, {}]", e.time, t_end));
        }
        prev = e.time;
    }
}

ControllerContext LoopComponents::context_for(const Vector& theta) const
{
    return ControllerContext{design, cert, k_gain, traj_of_theta(theta), bounds};
}

ControllerContext LoopComponents::nominal_context() const
{
    return ControllerContext{design, cert, k_gain, traj, bounds};
}

Vector rk4_step(const OdeRhs& f, double t, const Vector& state, double dt)
{
    auto checked = [&](double tau, const Vector& s) {
        Vector k = f(tau, s);
        if (!k.allFinite()) {
            throw NumericError(fmt::format("non-finite derivative at t={}", tau));
        }
        return k;
    };
    const Vector k1 = checked(t, state);
    const Vector k2 = checked(t + 0.5 * dt, state + 0.5 * dt * k1);
    const Vector k3 = checked(t + 0.5 * dt, state + 0.5 * dt * k2);
    const Vector k4 = checked(t + dt, state + dt * k3);
    return state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct ControlSample {
    Vector raw;
    Vector cmd;
};

// Monolithic state: plant x, then the observer block of the active mode.
//   output-feedback: x_hat
//   adaptive:        z_hat, vec(Y) (column-major), mix_vec, vec(Phi), theta_hat
class ClosedLoop {
public:
    ClosedLoop(LoopComponents components, const Scenario& scenario)
        : c_(std::move(components)), mode_(scenario.mode), pwm_(scenario.pwm)
    {
        if (!c_.truth || !c_.design || !c_.cert) {
            throw ConfigError("loop: truth plant, design plant and certificate are required");
        }
        c_.truth->validate();
        c_.design->validate();
        if (c_.truth->n != c_.design->n || c_.truth->m != c_.design->m || c_.truth->l != c_.design->l
            || c_.truth->q != c_.design->q) {
            throw DimensionError("loop: truth and design plants differ in dimensions");
        }
        n_ = c_.truth->n;
        if (mode_ == ControlMode::adaptive) {
            if (!c_.regressor || !c_.traj_of_theta) {
                throw ConfigError("loop: adaptive mode needs a regressor decomposition and a reference builder");
            }
            c_.drem_gains.validate();
            p_ = c_.regressor->p;
        }
        if (pwm_ == PwmModel::switched && !c_.modulator) {
            throw ConfigError("loop: switched mode needs a modulator");
        }
        nominal_ = c_.nominal_context();
        nominal_.validate();
    }

    LoopComponents& components() { return c_; }
    void refresh() { nominal_ = c_.nominal_context(); }

    Index size() const
    {
        switch (mode_) {
        case ControlMode::full_info:
            return n_;
        case ControlMode::output_feedback:
            return 2 * n_;
        case ControlMode::adaptive:
            return 2 * n_ + n_ * p_ + p_ + p_ * p_ + p_;
        }
        return n_;
    }

    Vector initial_state(const Scenario& sc) const
    {
        Vector s = Vector::Zero(size());
        if (sc.x0.size() > 0) {
            require_size(sc.x0, n_, "scenario x0");
            s.head(n_) = sc.x0;
        }
        if (mode_ == ControlMode::full_info) {
            return s;
        }
        if (sc.observer_x0.size() > 0) {
            require_size(sc.observer_x0, n_, "scenario observer x0");
            s.segment(n_, n_) = sc.observer_x0;
        }
        if (mode_ == ControlMode::adaptive) {
            const DremObserverState init = DremObserverState::initial(n_, p_, sc.phi0);
            Eigen::Map<Matrix>(s.data() + phi_off(), p_, p_) = init.mix_mat;
            if (sc.theta_hat0.size() > 0) {
                require_size(sc.theta_hat0, p_, "scenario theta_hat0");
                s.segment(theta_off(), p_) = sc.theta_hat0;
            }
        }
        return s;
    }

    ControlSample control(double t, const Vector& s) const
    {
        ControlSample out;
        const Vector x = s.head(n_);
        switch (mode_) {
        case ControlMode::full_info:
            out.raw = full_info_control(nominal_, x, t);
            break;
        case ControlMode::output_feedback:
            out.raw = output_feedback_control(nominal_, s.segment(n_, n_), t);
            break;
        case ControlMode::adaptive: {
            const ContextBuilder builder = [this](const Vector& th) { return c_.context_for(th); };
            out.raw = adaptive_control(builder, z_hat(s), y_filter(s), theta_hat(s), t);
            break;
        }
        }
        out.cmd = c_.bounds ? clamp_input(out.raw, *c_.bounds) : out.raw;
        return out;
    }

    Vector plant_input(const ControlSample& ctl, double t) const
    {
        return pwm_ == PwmModel::switched ? c_.modulator(ctl.cmd, t) : ctl.cmd;
    }

    Vector rhs(double t, const Vector& s, const Vector& u) const
    {
        Vector ds(size());
        const Vector x = s.head(n_);
        const BilinearPlant& truth = *c_.truth;
        const BilinearPlant& design = *c_.design;
        ds.head(n_) = state_derivative(truth, x, u, t);
        const Vector y = output(truth, x, u);
        if (mode_ == ControlMode::output_feedback) {
            ds.segment(n_, n_) = kalman_deriv(design, c_.ocert, s.segment(n_, n_), y, u, t);
        } else if (mode_ == ControlMode::adaptive) {
            const Vector zh = z_hat(s);
            const Matrix yf = y_filter(s);
            const Vector mv = mix_vec(s);
            const Matrix mm = mix_mat(s);
            ds.segment(n_, n_) = drem_z_deriv(design, c_.ocert, *c_.regressor, zh, y, u, t);
            const Matrix dy = drem_y_filter_deriv(design, c_.ocert, *c_.regressor, yf, y, u, t);
            Eigen::Map<Matrix>(ds.data() + y_off(), n_, p_) = dy;
            const MixingDerivs mix = drem_mixing_derivs(yf, mv, mm, design, zh, y, u, c_.drem_gains);
            ds.segment(mix_off(), p_) = mix.mix_vec;
            Eigen::Map<Matrix>(ds.data() + phi_off(), p_, p_) = mix.mix_mat;
            ds.segment(theta_off(), p_) = drem_theta_deriv(mv, mm, theta_hat(s), c_.drem_gains);
        }
        return ds;
    }

    LogRecord record(double t, const Vector& s, const ControlSample& ctl, const Vector& u_plant) const
    {
        LogRecord r;
        r.t = t;
        r.x = s.head(n_);
        r.s = c_.truth->s_signal(t);
        r.y = output(*c_.truth, r.x, u_plant);
        r.u_raw = ctl.raw;
        r.u_cmd = ctl.cmd;
        r.u_plant = u_plant;
        r.theta_true = c_.theta_true;
        r.v_o = kNaN;
        r.det_phi = kNaN;
        r.u_fi_mismatch = kNaN;

        ReferencePoint ref;
        if (mode_ == ControlMode::adaptive) {
            r.z_hat = z_hat(s);
            r.y_filter = y_filter(s);
            r.mix_vec = mix_vec(s);
            r.mix_mat = mix_mat(s);
            r.theta_hat = theta_hat(s);
            r.x_hat = reconstruct_state(r.z_hat, r.y_filter, r.theta_hat);
            ref = c_.traj_of_theta(r.theta_hat).at(t);
            r.det_phi = determinant(r.mix_mat);
            if (r.theta_true.size() == p_) {
                r.eps = consistency_residual(r.mix_vec, r.mix_mat, r.theta_true);
                const Vector z_err = r.x - r.y_filter * r.theta_true - r.z_hat;
                r.v_o = v_o(c_.ocert, z_err);
                const Vector u_true = full_info_control(c_.context_for(r.theta_true), r.x, t);
                const Vector u_est = full_info_control(c_.context_for(r.theta_hat), r.x_hat, t);
                r.u_fi_mismatch = (u_true - u_est).norm();
            }
        } else {
            ref = nominal_.traj.at(t);
            if (mode_ == ControlMode::output_feedback) {
                r.x_hat = s.segment(n_, n_);
                r.v_o = v_o(c_.ocert, r.x - r.x_hat);
            }
        }
        r.x_d = ref.x_d;
        r.u_d = ref.u_d;
    r.y_d = ref.y_d;
        r.v_c = v_c(*c_.cert, ref.x_d - r.x);
        return r;
    }

private:
    Index y_off() const { return 2 * n_; }
    Index mix_off() const { return y_off() + n_ * p_; }
    Index phi_off() const { return mix_off() + p_; }
    Index theta_off() const { return phi_off() + p_ * p_; }

    Vector z_hat(const Vector& s) const { return s.segment(n_, n_); }
    Matrix y_filter(const Vector& s) const { return Eigen::Map<const Matrix>(s.data() + y_off(), n_, p_); }
    Vector mix_vec(const Vector& s) const { return s.segment(mix_off(), p_); }
    Matrix mix_mat(const Vector& s) const { return Eigen::Map<const Matrix>(s.data() + phi_off(), p_, p_); }
    Vector theta_hat(const Vector& s) const { return s.segment(theta_off(), p_); }

    LoopComponents c_;
    ControlMode mode_;
    PwmModel pwm_;
    Index n_ = 0;
    Index p_ = 0;
    ControllerContext nominal_;
};

}  // namespace

SimLog simulate(const LoopComponents& components, const Scenario& scenario, EventHook on_event)
{
    scenario.validate();
    ClosedLoop loop(components, scenario);

    SimLog log;
    log.dt = scenario.dt;
    log.decimation = scenario.log_decimation;

    const auto steps = static_cast<long long>(std::llround(scenario.t_end / scenario.dt));
    const bool hold = scenario.hold_control || scenario.pwm == PwmModel::switched;
    std::size_t next_event = 0;
    Vector state = loop.initial_state(scenario);
    log.records.reserve(static_cast<std::size_t>(steps / scenario.log_decimation + 2));

    for (long long k = 0; k <= steps; ++k) {
        const double t = static_cast<double>(k) * scenario.dt;
        bool changed = false;
        while (next_event < scenario.events.size()
               && scenario.events[next_event].time <= t + 1e-9 * scenario.dt) {
            if (!on_event) {
                throw ConfigError("scenario has events but no event handler");
            }
            on_event(scenario.events[next_event], loop.components());
            ++next_event;
            changed = true;
        }
        if (changed) {
            loop.refresh();
        }

        try {
            const ControlSample ctl = loop.control(t, state);
            const Vector u_plant = loop.plant_input(ctl, t);
            if (k % scenario.log_decimation == 0) {
                log.records.push_back(loop.record(t, state, ctl, u_plant));
            }
            if (k == steps) {
                break;
            }
            OdeRhs f;
            if (hold) {
                f = [&loop, &u_plant](double tau, const Vector& s) { return loop.rhs(tau, s, u_plant); };
            } else {
                f = [&loop](double tau, const Vector& s) {
                    return loop.rhs(tau, s, loop.plant_input(loop.control(tau, s), tau));
                };
            }
            state = rk4_step(f, t, state, scenario.dt);
            if (!state.allFinite() || state.norm() > kBlowUpNorm) {
                throw NumericError(fmt::format("state blow-up at t={}", t + scenario.dt));
            }
        } catch (const NumericError& err) {
            log.failed = true;
            log.failure = err.what();
            break;
        }
    }
    return log;
}

std::vector<SimLog> simulate_batch(std::span<const BatchJob> jobs)
{
    std::vector<SimLog> logs(jobs.size());
    std::vector<std::exception_ptr> errors(jobs.size());
    const auto count = static_cast<std::ptrdiff_t>(jobs.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t k = 0; k < count; ++k) {
        const auto idx = static_cast<std::size_t>(k);
        try {
            logs[idx] = simulate(jobs[idx].components, jobs[idx].scenario, jobs[idx].on_event);
        } catch (...) {
            errors[idx] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    return logs;
}

}  // namespace bilin
