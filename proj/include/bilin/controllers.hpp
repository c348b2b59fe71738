#pragma once

#include "bilin/model.hpp"

#include <functional>
#include <memory>
#include <optional>

namespace bilin {

struct InputBounds {
    Vector lower;
    Vector upper;
};

struct ControllerContext {
    std::shared_ptr<const BilinearPlant> plant;
    std::shared_ptr<const PassivityCertificate> cert;  // supplies P
    Matrix k_gain;                                     // m x m, SPD
    AdmissibleTrajectory traj;
    std::optional<InputBounds> bounds;

    // Throws CertificateError for a non-SPD gain or inverted bounds.
    void validate() const;
};

// Rebuilds the parameter-dependent parts of the context (reference, ...)
// for a parameter estimate.
using ContextBuilder = std::function<ControllerContext(const Vector& theta_hat)>;

/// u_FI = u_d + K [B0(s)^T P x_d - B(x_d, s)^T P x], evaluated from x directly.
Vector full_info_control(const ControllerContext& ctx, const Vector& x, double t);

/// u_d + K B(x_d, s)^T P (x_d - x). Equal to full_info_control whenever
/// x^T P J(x) = 0 holds for the plant.
Vector full_info_control_error_form(const ControllerContext& ctx, const Vector& x, double t);

/// Certainty equivalence in the state: full_info_control at the estimate.
Vector output_feedback_control(const ControllerContext& ctx, const Vector& x_hat, double t);

/// Reconstructs x_hat = z_hat + Y theta_hat, rebuilds the context for
/// theta_hat and applies the full-information law there.
Vector adaptive_control(const ContextBuilder& builder, const Vector& z_hat, const Matrix& y_filter,
                        const Vector& theta_hat, double t);

Vector clamp_input(const Vector& u, const InputBounds& bounds);

}  // namespace bilin
