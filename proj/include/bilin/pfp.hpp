#pragma once

#include "bilin/sim.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace bilin::pfp {

/// Boost power factor precompensator, averaged model with state x = [i, v]:
///   L di/dt = -u v + E sin(wt) - r i
///   C dv/dt =  u i - G v
struct PfpParams {
    double e_amp = 150.0;
    double omega = 100.0 * 3.14159265358979323846;
    double l_ind = 2.13e-3;
    double c_cap = 1100e-6;
    double g_load = 1.0 / 87.0;
    double v_target = 200.0;
    double r_source = 0.02;
    double f_sw = 2e4;

    // Throws ConfigError. omega = 0 (DC source), r_source = 0 and a lossless
    // load g_load = 0 are allowed; the reference still needs a positive G.
    void validate() const;
    double line_period() const;  // 2 pi / omega
    double i0(double g_effective) const;  // 2 G V_d^2 / E
};

struct PfpGains {
    double k_gain = 3e-5;
    double gamma1 = 0.0;
    double gamma2 = 0.0;
    double lambda = 0.0;
    double t_filter = 100.0;

    static PfpGains defaults_for(const PfpParams& params);
    // gamma2 > 0, gamma1 > -1/L, K >= 0, lambda > 0, t_filter > 0.
    void validate(const PfpParams& params) const;
};

enum class ReferenceKind {
    exact,       // v_d^2 carries the second-harmonic ripple, satisfies the dynamics exactly
    simplified,  // v_d = V_d, ripple neglected in both state and output
};

std::string_view to_string(ReferenceKind kind);
ReferenceKind parse_reference_kind(std::string_view text);

/// The source resistance enters as the dissipation entry D_11 = r/L when
/// `with_source_resistance` is set.
BilinearPlant build_plant(const PfpParams& params, bool with_source_resistance = true);

/// Current reference I0 sin(wt) with I0 = 2 g V_d^2 / E and
/// u_d = (E sin(wt) - L I0 w cos(wt)) / v_d. Throws ConfigError for g <= 0.
AdmissibleTrajectory admissible_trajectory(const PfpParams& params, double g_effective,
                                           ReferenceKind kind = ReferenceKind::exact);

struct Certificates {
    PassivityCertificate cert;
    ObserverCertificate ocert;
    RegressorDecomposition regressor;
};

/// P = diag(L, C), Dfrak = diag(0, sqrt G), Gamma(u) = [g1 u, g2]^T,
/// P_sigma = diag(L / (1 + g1 L), C), D_sigma = sqrt(dflag G + C g2),
/// bfrak = [E sin(wt) / L, 0]^T, Omega = [0, -y/C]^T, theta = G.
/// Validates the gains first.
Certificates certificates(const PfpParams& params, const PfpGains& gains, int dflag);

// Same construction without gain validation, for verification reports.
Certificates certificates_unchecked(const PfpParams& params, const PfpGains& gains, int dflag);

/// Naturally sampled PWM against a unit triangle carrier at f_sw:
/// +1 while the carrier is below the duty (u+1)/2, -1 otherwise.
double pwm_switch(double u_avg, double t, double f_sw);

/// Sliding power factor of v_i = E sin(wt) against i over one line period,
/// aligned with the log records. Absent where undefined.
std::vector<std::optional<double>> power_factor(const SimLog& log, const PfpParams& params);

/// Applies a parameter event. Keys G, L, C act on the true plant only;
/// V_d retargets both (it is a design quantity). Throws ConfigError on an
/// unknown key or a non-positive value.
void apply_event(const Event& event, PfpParams& truth, PfpParams& design);

struct LoopSpec {
    PfpParams truth;   // integrated plant (r_source used here)
    PfpParams design;  // controller and observer model
    PfpGains gains;
    ControlMode mode = ControlMode::adaptive;
    ReferenceKind reference = ReferenceKind::exact;
    bool saturate = true;
    double u_min = -1.0;
    double u_max = 1.0;

    static LoopSpec nominal(ControlMode mode);
};

inline constexpr double kMinConductance = 1e-6;

LoopComponents make_components(const LoopSpec& spec);

/// Event hook that rebuilds the affected components. Owns its copy of the
/// parameters, so every simulate() call needs a fresh hook.
EventHook make_event_hook(const LoopSpec& spec);

// +25% G at 0.05 s, restored at 0.1 s; likewise L at 0.15/0.2 s and C at
// 0.25/0.3 s; V_d to 210 V at 0.35 s and back to 200 V at 0.4 s.
std::vector<Event> benchmark_events(const PfpParams& nominal);

}  // namespace bilin::pfp
