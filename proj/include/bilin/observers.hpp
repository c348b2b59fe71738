#pragma once

#include "bilin/model.hpp"

namespace bilin {

struct KalmanLikeState {
    Vector x_hat;
};

/// Filtered-transformation observer state: x_hat = z_hat + Y theta_hat, with
/// the mixed regression mix_vec = mix_mat * theta + eps.
struct DremObserverState {
    Vector z_hat;     // n
    Matrix y_filter;  // n x p
    Vector mix_vec;   // p
    Matrix mix_mat;   // p x p
    Vector theta_hat; // p

    // Zero everywhere except mix_mat = phi0 * I (must start positive definite).
    static DremObserverState initial(Index n, Index p, double phi0 = 1e-6);
};

struct DremGains {
    Matrix lambda;    // p x p diagonal, > 0
    Matrix t_filter;  // p x p diagonal, > 0

    void validate() const;
};

/// [A(u) - D - Gamma(u) C(u)^T] x_hat + Gamma(u) y + B0(s) u + E s
Vector kalman_deriv(const BilinearPlant& plant, const ObserverCertificate& ocert, const Vector& x_hat,
                    const Vector& y, const Vector& u, double t);

/// [A(u) - Gamma(u) C(u)^T] z_hat + Gamma(u) y + bfrak(y, u, s)
Vector drem_z_deriv(const BilinearPlant& plant, const ObserverCertificate& ocert,
                    const RegressorDecomposition& decomp, const Vector& z_hat, const Vector& y,
                    const Vector& u, double t);

/// [A(u) - Gamma(u) C(u)^T] Y + Omega(y, u, s)
Matrix drem_y_filter_deriv(const BilinearPlant& plant, const ObserverCertificate& ocert,
                           const RegressorDecomposition& decomp, const Matrix& y_filter,
                           const Vector& y, const Vector& u, double t);

struct MixingDerivs {
    Vector mix_vec;
    Matrix mix_mat;
};

/// d/dt mix_vec = -T mix_vec + Y^T C(u) (y - C(u)^T z_hat)
/// d/dt mix_mat = -T mix_mat + Y^T C(u) C(u)^T Y
MixingDerivs drem_mixing_derivs(const Matrix& y_filter, const Vector& mix_vec, const Matrix& mix_mat,
                                const BilinearPlant& plant, const Vector& z_hat, const Vector& y,
                                const Vector& u, const DremGains& gains);

/// Lambda adj(Phi^T Phi) Phi^T (mix_vec - Phi theta_hat). Polynomial in Phi,
/// so it never divides by det(Phi).
Vector drem_theta_deriv(const Vector& mix_vec, const Matrix& mix_mat, const Vector& theta_hat,
                        const DremGains& gains);

Vector reconstruct_state(const Vector& z_hat, const Matrix& y_filter, const Vector& theta_hat);

// eps = mix_vec - mix_mat * theta. Needs the true parameter: verification only.
Vector consistency_residual(const Vector& mix_vec, const Matrix& mix_mat, const Vector& theta_true);

// -Lambda adj(Phi^T Phi) Phi^T eps, the perturbation driving each decoupled
// parameter-error channel.
Vector mixed_perturbation(const Matrix& mix_mat, const Vector& eps, const DremGains& gains);

}  // namespace bilin
