#pragma once

#include "bilin/numerics.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace bilin {

/// Plant of the form
///
///     dx/dt = [A0 + sum_i J_i u_i - D] x + B0(s) u + E s,     y = C(u)^T x,
///
/// with x in R^n, u in R^m, y in R^l and an exogenous signal s(t) in R^q.
/// B0 and C are maps (globally Lipschitz by assumption); all other
/// coefficients are constant.
struct BilinearPlant {
    Index n = 0;
    Index m = 0;
    Index l = 0;
    Index q = 0;
    Matrix a0;
    std::vector<Matrix> j_list;
    Matrix d;
    std::function<Matrix(const Vector& s)> b0;  // n x m
    Matrix e;                                    // n x q
    std::function<Matrix(const Vector& u)> c;   // n x l
    std::function<Vector(double t)> s_signal;

    // Checks the coefficient shapes and m <= n. Throws DimensionError.
    void validate() const;
};

/// (P, Dfrak) with P D + D^T P = 2 Dfrak Dfrak^T and P A(u) = -A(u)^T P.
struct PassivityCertificate {
    Matrix p;
    Matrix dfrak;
};

/// Output-injection certificate. With M(u) = A(u) - dflag*D - Gamma(u) C(u)^T
/// it must satisfy P_sigma M(u) + M(u)^T P_sigma = -2 C(u) Ds Ds^T C(u)^T.
struct ObserverCertificate {
    std::function<Matrix(const Vector& u)> gamma;  // n x l
    Matrix p_sigma;
    Matrix d_sigma;  // l x r'
    int dflag = 0;
};

/// B0(s) u + E s - D x = bfrak(y, u, s) + omega(y, u, s) theta.
struct RegressorDecomposition {
    std::function<Vector(const Vector& y, const Vector& u, const Vector& s)> bfrak;
    std::function<Matrix(const Vector& y, const Vector& u, const Vector& s)> omega;  // n x p
    Index p = 0;
    Vector theta_true;
};

struct ReferencePoint {
    Vector x_d;
    Vector x_d_dot;
    Vector u_d;
    Vector y_d;
};

struct AdmissibleTrajectory {
    std::function<ReferencePoint(double t)> at;
};

// J(u) = sum_i J_i u_i
Matrix gyro_of_input(const BilinearPlant& plant, const Vector& u);
// J(x) = [J_1 x, ..., J_m x]
Matrix gyro_of_state(const BilinearPlant& plant, const Vector& x);
// A(u) = A0 + J(u)
Matrix drift_matrix(const BilinearPlant& plant, const Vector& u);
// B(x, s) = B0(s) + J(x)
Matrix input_matrix(const BilinearPlant& plant, const Vector& x, const Vector& s);

Vector state_derivative(const BilinearPlant& plant, const Vector& x, const Vector& u, double t);
Vector output(const BilinearPlant& plant, const Vector& x, const Vector& u);

struct IdentityCheck {
    std::string name;
    double residual = 0.0;
    double scale = 0.0;
    bool passed = false;
};

struct CertificateReport {
    std::vector<IdentityCheck> checks;

    bool passed() const;
    // nullptr when no check carries that name
    const IdentityCheck* find(std::string_view name) const;
    std::vector<std::string> failing() const;
};

inline constexpr double kCertificateTolerance = 1e-9;

CertificateReport verify_passivity_certificate(const BilinearPlant& plant,
                                               const PassivityCertificate& cert,
                                               std::span<const Vector> u_samples,
                                               std::span<const Vector> x_samples);

CertificateReport verify_observer_certificate(const BilinearPlant& plant,
                                              const ObserverCertificate& cert,
                                              std::span<const Vector> u_samples);

struct PlantSample {
    Vector x;
    Vector u;
    double t = 0.0;
};

CertificateReport verify_regressor_decomposition(const BilinearPlant& plant,
                                                 const RegressorDecomposition& decomp,
                                                 std::span<const PlantSample> samples);

struct TrajectoryResidual {
    double dynamics = 0.0;  // max |x_d_dot - [A(u_d) - D] x_d - B0(s) u_d - E s|
    double output = 0.0;    // max |y_d - C(u_d)^T x_d|
    double scale = 0.0;     // max |x_d_dot| + |[A(u_d) - D] x_d| + ... over samples
};

TrajectoryResidual trajectory_residual(const BilinearPlant& plant, const AdmissibleTrajectory& traj,
                                       std::span<const double> t_samples);

/// Largest sampled difference quotient |f(a) - f(b)| / |a - b| over all
/// pairs of `points`. A spot check of the Lipschitz assumption on B0 / C.
double sampled_lipschitz_bound(const std::function<Matrix(const Vector&)>& f,
                               std::span<const Vector> points);

}  // namespace bilin
