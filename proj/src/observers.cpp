#include "bilin/observers.hpp"

#include "bilin/errors.hpp"

namespace bilin {

DremObserverState DremObserverState::initial(Index n, Index p, double phi0)
{
    if (!(phi0 > 0.0)) {
        throw CertificateError("DREM: initial mixing matrix must be positive definite");
    }
    DremObserverState s;
    s.z_hat = Vector::Zero(n);
    s.y_filter = Matrix::Zero(n, p);
    s.mix_vec = Vector::Zero(p);
    s.mix_mat = phi0 * Matrix::Identity(p, p);
    s.theta_hat = Vector::Zero(p);
    return s;
}

namespace {

bool positive_diagonal(const Matrix& m)
{
    if (m.rows() != m.cols() || m.rows() == 0) {
        return false;
    }
    const Matrix off = m - Matrix(m.diagonal().asDiagonal());
    return off.cwiseAbs().maxCoeff() == 0.0 && (m.diagonal().array() > 0.0).all();
}

Matrix injected_drift(const BilinearPlant& plant, const ObserverCertificate& ocert, const Vector& u)
{
    const Matrix g = ocert.gamma(u);
    require_shape(g, plant.n, plant.l, "Gamma(u)");
    return drift_matrix(plant, u) - g * plant.c(u).transpose();
}

}  // namespace

void DremGains::validate() const
{
    if (!positive_diagonal(lambda) || !positive_diagonal(t_filter) || lambda.rows() != t_filter.rows()) {
        throw CertificateError("DREM gains Lambda and T must be positive diagonal p x p matrices");
    }
}

Vector kalman_deriv(const BilinearPlant& plant, const ObserverCertificate& ocert, const Vector& x_hat,
                    const Vector& y, const Vector& u, double t)
{
    require_size(x_hat, plant.n, "kalman x_hat");
    require_size(y, plant.l, "kalman y");
    const Vector s = plant.s_signal(t);
    return (injected_drift(plant, ocert, u) - plant.d) * x_hat + ocert.gamma(u) * y + plant.b0(s) * u
           + plant.e * s;
}

Vector drem_z_deriv(const BilinearPlant& plant, const ObserverCertificate& ocert,
                    const RegressorDecomposition& decomp, const Vector& z_hat, const Vector& y,
                    const Vector& u, double t)
{
    require_size(z_hat, plant.n, "drem z_hat");
    require_size(y, plant.l, "drem y");
    const Vector s = plant.s_signal(t);
    const Vector bf = decomp.bfrak(y, u, s);
    require_size(bf, plant.n, "bfrak");
    return injected_drift(plant, ocert, u) * z_hat + ocert.gamma(u) * y + bf;
}

Matrix drem_y_filter_deriv(const BilinearPlant& plant, const ObserverCertificate& ocert,
                           const RegressorDecomposition& decomp, const Matrix& y_filter,
                           const Vector& y, const Vector& u, double t)
{
    require_shape(y_filter, plant.n, decomp.p, "drem Y");
    const Vector s = plant.s_signal(t);
    const Matrix om = decomp.omega(y, u, s);
    require_shape(om, plant.n, decomp.p, "Omega");
    return injected_drift(plant, ocert, u) * y_filter + om;
}

MixingDerivs drem_mixing_derivs(const Matrix& y_filter, const Vector& mix_vec, const Matrix& mix_mat,
                                const BilinearPlant& plant, const Vector& z_hat, const Vector& y,
                                const Vector& u, const DremGains& gains)
{
    const Index p = y_filter.cols();
    require_shape(y_filter, plant.n, p, "drem Y");
    require_size(mix_vec, p, "drem mixed vector");
    require_shape(mix_mat, p, p, "drem mixing matrix");
    require_shape(gains.t_filter, p, p, "drem T");
    const Matrix c = plant.c(u);
    const Matrix yc = y_filter.transpose() * c;  // p x l
    MixingDerivs out;
    out.mix_vec = -gains.t_filter * mix_vec + yc * (y - c.transpose() * z_hat);
    out.mix_mat = -gains.t_filter * mix_mat + yc * yc.transpose();
    return out;
}

Vector drem_theta_deriv(const Vector& mix_vec, const Matrix& mix_mat, const Vector& theta_hat,
                        const DremGains& gains)
{
    const Index p = mix_mat.rows();
    require_shape(mix_mat, p, p, "drem mixing matrix");
    require_size(mix_vec, p, "drem mixed vector");
    require_size(theta_hat, p, "drem theta_hat");
    require_shape(gains.lambda, p, p, "drem Lambda");
    const Matrix gram = mix_mat.transpose() * mix_mat;
    return gains.lambda * (adjugate(gram) * (mix_mat.transpose() * (mix_vec - mix_mat * theta_hat)));
}

Vector reconstruct_state(const Vector& z_hat, const Matrix& y_filter, const Vector& theta_hat)
{
    require_shape(y_filter, z_hat.size(), theta_hat.size(), "reconstruct Y");
    return z_hat + y_filter * theta_hat;
}

Vector consistency_residual(const Vector& mix_vec, const Matrix& mix_mat, const Vector& theta_true)
{
    require_shape(mix_mat, mix_vec.size(), theta_true.size(), "consistency Phi");
    return mix_vec - mix_mat * theta_true;
}

Vector mixed_perturbation(const Matrix& mix_mat, const Vector& eps, const DremGains& gains)
{
    const Matrix gram = mix_mat.transpose() * mix_mat;
    return -gains.lambda * (adjugate(gram) * (mix_mat.transpose() * eps));
}

}  // namespace bilin
