#include "bilin/model.hpp"

#include "bilin/errors.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace bilin {

void BilinearPlant::validate() const
{
    if (n <= 0 || m <= 0 || l <= 0 || q < 0) {
        throw DimensionError(fmt::format("plant: invalid dimensions n={} m={} l={} q={}", n, m, l, q));
    }
    if (m > n) {
        throw DimensionError(fmt::format("plant: input dimension {} exceeds state dimension {}", m, n));
    }
    require_shape(a0, n, n, "plant A0");
    require_shape(d, n, n, "plant D");
    require_shape(e, n, q, "plant E");
    if (static_cast<Index>(j_list.size()) != m) {
        throw DimensionError(fmt::format("plant: expected {} J matrices, got {}", m, j_list.size()));
    }
    for (const auto& j : j_list) {
        require_shape(j, n, n, "plant J_i");
    }
    if (!b0 || !c || !s_signal) {
        throw DimensionError("plant: B0, C and s(t) maps must be set");
    }
}

Matrix gyro_of_input(const BilinearPlant& plant, const Vector& u)
{
    require_size(u, plant.m, "gyro_of_input u");
    Matrix out = Matrix::Zero(plant.n, plant.n);
    for (Index i = 0; i < plant.m; ++i) {
        out += plant.j_list[static_cast<std::size_t>(i)] * u(i);
    }
    return out;
}

Matrix gyro_of_state(const BilinearPlant& plant, const Vector& x)
{
    require_size(x, plant.n, "gyro_of_state x");
    Matrix out(plant.n, plant.m);
    for (Index i = 0; i < plant.m; ++i) {
        out.col(i) = plant.j_list[static_cast<std::size_t>(i)] * x;
    }
    return out;
}

Matrix drift_matrix(const BilinearPlant& plant, const Vector& u)
{
    return plant.a0 + gyro_of_input(plant, u);
}

Matrix input_matrix(const BilinearPlant& plant, const Vector& x, const Vector& s)
{
    require_size(s, plant.q, "input_matrix s");
    Matrix b0 = plant.b0(s);
    require_shape(b0, plant.n, plant.m, "B0(s)");
    return b0 + gyro_of_state(plant, x);
}

Vector state_derivative(const BilinearPlant& plant, const Vector& x, const Vector& u, double t)
{
    require_size(x, plant.n, "state_derivative x");
    const Vector s = plant.s_signal(t);
    require_size(s, plant.q, "s(t)");
    const Matrix b0 = plant.b0(s);
    require_shape(b0, plant.n, plant.m, "B0(s)");
    return (drift_matrix(plant, u) - plant.d) * x + b0 * u + plant.e * s;
}

Vector output(const BilinearPlant& plant, const Vector& x, const Vector& u)
{
    require_size(x, plant.n, "output x");
    require_size(u, plant.m, "output u");
    const Matrix c = plant.c(u);
    require_shape(c, plant.n, plant.l, "C(u)");
    return c.transpose() * x;
}

bool CertificateReport::passed() const
{
    return std::all_of(checks.begin(), checks.end(), [](const IdentityCheck& c) { return c.passed; });
}

const IdentityCheck* CertificateReport::find(std::string_view name) const
{
    const auto it = std::find_if(checks.begin(), checks.end(),
                                 [&](const IdentityCheck& c) { return c.name == name; });
    return it == checks.end() ? nullptr : &*it;
}

std::vector<std::string> CertificateReport::failing() const
{
    std::vector<std::string> names;
    for (const auto& c : checks) {
        if (!c.passed) {
            names.push_back(c.name);
        }
    }
    return names;
}

namespace {

// Accumulates the worst residual/scale ratio of one named identity.
class WorstCase {
public:
    explicit WorstCase(std::string name) { check_.name = std::move(name); check_.passed = true; }

    void add(double residual, double scale)
    {
        const double floor = std::max(scale, std::numeric_limits<double>::min());
        const double ratio = residual / floor;
        const bool ok = std::isfinite(residual) && residual <= kCertificateTolerance * scale;
        if (!ok) {
            check_.passed = false;
        }
        if (!seen_ || ratio > worst_ratio_ || !std::isfinite(ratio)) {
            worst_ratio_ = ratio;
            check_.residual = residual;
            check_.scale = scale;
            seen_ = true;
        }
    }

    IdentityCheck result() const { return check_; }

private:
    IdentityCheck check_;
    double worst_ratio_ = 0.0;
    bool seen_ = false;
};

IdentityCheck positive_definite_check(std::string name, const Matrix& m)
{
    IdentityCheck check;
    check.name = std::move(name);
    check.scale = m.size() > 0 ? m.norm() : 0.0;
    if (m.rows() != m.cols() || m.rows() == 0 || !m.allFinite()) {
        check.residual = std::numeric_limits<double>::infinity();
        return check;
    }
    const double asym = (m - m.transpose()).norm();
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
    const double min_eig = eig.eigenvalues().minCoeff();
    check.residual = asym;
    check.passed = asym <= kCertificateTolerance * check.scale && min_eig > 0.0;
    if (!check.passed && asym <= kCertificateTolerance * check.scale) {
        // report how far from definite
        check.residual = -min_eig;
    }
    return check;
}

}  // namespace

CertificateReport verify_passivity_certificate(const BilinearPlant& plant,
                                               const PassivityCertificate& cert,
                                               std::span<const Vector> u_samples,
                                               std::span<const Vector> x_samples)
{
    plant.validate();
    require_shape(cert.p, plant.n, plant.n, "certificate P");
    if (cert.dfrak.rows() != plant.n) {
        throw DimensionError("certificate Dfrak: row count must equal state dimension");
    }
    const Matrix& p = cert.p;
    CertificateReport report;
    report.checks.push_back(positive_definite_check("p-positive-definite", p));

    {
        WorstCase split("dissipation-split");
        const Matrix lhs = p * plant.d + plant.d.transpose() * p;
        const Matrix rhs = 2.0 * cert.dfrak * cert.dfrak.transpose();
        split.add((lhs - rhs).norm(), std::max(2.0 * p.norm() * plant.d.norm(), rhs.norm()));
        report.checks.push_back(split.result());
    }

    {
        WorstCase skew("skew-symmetry");
        auto add_skew = [&](const Matrix& a) {
            skew.add((p * a + a.transpose() * p).norm(), 2.0 * p.norm() * a.norm());
        };
        add_skew(plant.a0);
        for (const auto& j : plant.j_list) {
            add_skew(j);
        }
        for (const auto& u : u_samples) {
            add_skew(drift_matrix(plant, u));
        }
        report.checks.push_back(skew.result());
    }

    {
        WorstCase orth("gyro-orthogonality");
        for (const auto& x : x_samples) {
            const Matrix jx = gyro_of_state(plant, x);
            const Eigen::RowVectorXd row = x.transpose() * p * jx;
            orth.add(row.norm(), x.norm() * p.norm() * jx.norm());
        }
        report.checks.push_back(orth.result());
    }
    return report;
}

CertificateReport verify_observer_certificate(const BilinearPlant& plant,
                                              const ObserverCertificate& cert,
                                              std::span<const Vector> u_samples)
{
    plant.validate();
    require_shape(cert.p_sigma, plant.n, plant.n, "observer P_sigma");
    if (cert.d_sigma.rows() != plant.l) {
        throw DimensionError("observer D_sigma: row count must equal output dimension");
    }
    if (cert.dflag != 0 && cert.dflag != 1) {
        throw DimensionError("observer dflag must be 0 or 1");
    }
    if (!cert.gamma) {
        throw DimensionError("observer Gamma map must be set");
    }
    CertificateReport report;
    report.checks.push_back(positive_definite_check("observer-p-positive-definite", cert.p_sigma));
    report.checks.push_back(positive_definite_check("observer-damping-positive-definite",
                                                    cert.d_sigma * cert.d_sigma.transpose()));

    WorstCase identity("observer-dissipation");
    for (const auto& u : u_samples) {
        const Matrix c = plant.c(u);
        const Matrix g = cert.gamma(u);
        require_shape(g, plant.n, plant.l, "Gamma(u)");
        const Matrix mu = drift_matrix(plant, u) - cert.dflag * plant.d - g * c.transpose();
        const Matrix lhs = cert.p_sigma * mu + mu.transpose() * cert.p_sigma;
        const Matrix rhs = -2.0 * c * cert.d_sigma * cert.d_sigma.transpose() * c.transpose();
        identity.add((lhs - rhs).norm(), std::max(2.0 * cert.p_sigma.norm() * mu.norm(), rhs.norm()));
    }
    report.checks.push_back(identity.result());
    return report;
}

CertificateReport verify_regressor_decomposition(const BilinearPlant& plant,
                                                 const RegressorDecomposition& decomp,
                                                 std::span<const PlantSample> samples)
{
    plant.validate();
    require_size(decomp.theta_true, decomp.p, "regressor theta");
    WorstCase identity("regressor-decomposition");
    for (const auto& sample : samples) {
        require_size(sample.x, plant.n, "regressor sample x");
        require_size(sample.u, plant.m, "regressor sample u");
        const Vector s = plant.s_signal(sample.t);
        const Vector y = output(plant, sample.x, sample.u);
        const Vector lhs_input = plant.b0(s) * sample.u;
        const Vector lhs_exo = plant.e * s;
        const Vector lhs_diss = plant.d * sample.x;
        const Vector bf = decomp.bfrak(y, sample.u, s);
        const Matrix om = decomp.omega(y, sample.u, s);
        require_size(bf, plant.n, "bfrak");
        require_shape(om, plant.n, decomp.p, "Omega");
        const Vector rhs_param = om * decomp.theta_true;
        const Vector residual = lhs_input + lhs_exo - lhs_diss - bf - rhs_param;
        identity.add(residual.norm(), lhs_input.norm() + lhs_exo.norm() + lhs_diss.norm() + bf.norm()
                                          + rhs_param.norm());
    }
    CertificateReport report;
    report.checks.push_back(identity.result());
    return report;
}

TrajectoryResidual trajectory_residual(const BilinearPlant& plant, const AdmissibleTrajectory& traj,
                                       std::span<const double> t_samples)
{
    plant.validate();
    TrajectoryResidual out;
    for (const double t : t_samples) {
        const ReferencePoint ref = traj.at(t);
        require_size(ref.x_d, plant.n, "trajectory x_d");
        require_size(ref.x_d_dot, plant.n, "trajectory x_d_dot");
        require_size(ref.u_d, plant.m, "trajectory u_d");
        require_size(ref.y_d, plant.l, "trajectory y_d");
        const Vector s = plant.s_signal(t);
        const Vector drift = (drift_matrix(plant, ref.u_d) - plant.d) * ref.x_d;
        const Vector forced = plant.b0(s) * ref.u_d + plant.e * s;
        out.dynamics = std::max(out.dynamics, (ref.x_d_dot - drift - forced).norm());
        out.output = std::max(out.output, (ref.y_d - output(plant, ref.x_d, ref.u_d)).norm());
        out.scale = std::max(out.scale, ref.x_d_dot.norm() + drift.norm() + forced.norm());
    }
    return out;
}

double sampled_lipschitz_bound(const std::function<Matrix(const Vector&)>& f,
                               std::span<const Vector> points)
{
    double bound = 0.0;
    std::vector<Matrix> values;
    values.reserve(points.size());
    for (const auto& p : points) {
        values.push_back(f(p));
    }
    for (std::size_t a = 0; a < points.size(); ++a) {
        for (std::size_t b = a + 1; b < points.size(); ++b) {
            const double dist = (points[a] - points[b]).norm();
            if (dist > 0.0) {
                bound = std::max(bound, (values[a] - values[b]).norm() / dist);
            }
        }
    }
    return bound;
}

}  // namespace bilin
