#pragma once

#include "bilin/controllers.hpp"
#include "bilin/model.hpp"
#include "bilin/observers.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bilin {

enum class ControlMode { full_info, output_feedback, adaptive };
enum class PwmModel { averaged, switched };

std::string_view to_string(ControlMode mode);
std::string_view to_string(PwmModel pwm);
ControlMode parse_control_mode(std::string_view text);  // throws ConfigError
PwmModel parse_pwm_model(std::string_view text);        // throws ConfigError

// Scheduled parameter change, applied at the first step boundary >= time.
struct Event {
    double time = 0.0;
    std::string key;
    double value = 0.0;

    bool operator==(const Event&) const = default;
};

struct Scenario {
    double t_end = 0.45;
    double dt = 1e-5;
    ControlMode mode = ControlMode::adaptive;
    PwmModel pwm = PwmModel::averaged;
    std::vector<Event> events;  // sorted by time
    int log_decimation = 10;
    // Zero-order hold of the control over each step. Switched mode always
    // holds the switch position.
    bool hold_control = false;
    Vector x0;           // empty: zero
    Vector observer_x0;  // initial x_hat / z_hat, empty: zero
    Vector theta_hat0;   // empty: zero
    double phi0 = 1e-6;

    void validate() const;  // throws ConfigError
};

/// Everything a closed loop needs. `truth` is integrated; controller and
/// observers only see `design`, so parameter events on the truth side
/// produce plant/model mismatch.
struct LoopComponents {
    std::shared_ptr<const BilinearPlant> truth;
    std::shared_ptr<const BilinearPlant> design;
    std::shared_ptr<const PassivityCertificate> cert;
    ObserverCertificate ocert;
    std::optional<RegressorDecomposition> regressor;  // required in adaptive mode
    DremGains drem_gains;
    Matrix k_gain;
    std::optional<InputBounds> bounds;
    AdmissibleTrajectory traj;  // non-adaptive reference
    std::function<AdmissibleTrajectory(const Vector& theta)> traj_of_theta;  // adaptive reference
    Vector theta_true;  // diagnostics only (eps, V_o of z-error, mismatch)
    // Maps the averaged control to the applied switched input.
    std::function<Vector(const Vector& u_avg, double t)> modulator;

    ControllerContext context_for(const Vector& theta) const;
    ControllerContext nominal_context() const;
};

using EventHook = std::function<void(const Event&, LoopComponents&)>;

struct LogRecord {
    double t = 0.0;
    Vector x;
    Vector y;
    Vector s;
    Vector x_hat;  // estimate fed to the controller; empty in full-info mode
    Vector z_hat;
    Matrix y_filter;
    Vector mix_vec;
    Matrix mix_mat;
    Vector theta_hat;
    Vector theta_true;
    Vector u_raw;    // control law output
    Vector u_cmd;    // after saturation
    Vector u_plant;  // applied to the plant (switch position in switched mode)
    Vector u_d;
    Vector x_d;
    Vector y_d;  // output setpoint
    double v_c = 0.0;
    double v_o = 0.0;      // NaN when no observer runs
    double det_phi = 0.0;  // NaN outside adaptive mode
    Vector eps;
    double u_fi_mismatch = 0.0;  // |u_FI(x, theta) - u_FI(x_hat, theta_hat)|, NaN outside adaptive
};

struct SimLog {
    double dt = 0.0;
    int decimation = 1;
    std::vector<LogRecord> records;
    bool failed = false;
    std::string failure;
};

using OdeRhs = std::function<Vector(double t, const Vector& state)>;

/// Classical fourth-order Runge-Kutta step. Throws NumericError when a stage
/// derivative is not finite.
Vector rk4_step(const OdeRhs& f, double t, const Vector& state, double dt);

inline constexpr double kBlowUpNorm = 1e9;

/// Fixed-step integration of plant + controller + observer. Events fire
/// atomically before the step that starts at or after their time. On blow-up
/// (non-finite or |state| > 1e9) the log is truncated and marked failed.
SimLog simulate(const LoopComponents& components, const Scenario& scenario, EventHook on_event = {});

struct BatchJob {
    LoopComponents components;
    Scenario scenario;
    EventHook on_event;
};

// Independent scenarios, run in parallel; results are in job order.
std::vector<SimLog> simulate_batch(std::span<const BatchJob> jobs);

}  // namespace bilin
