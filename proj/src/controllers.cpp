#include "bilin/controllers.hpp"

#include "bilin/errors.hpp"
#include "bilin/observers.hpp"

namespace bilin {

void ControllerContext::validate() const
{
    if (!plant || !cert) {
        throw DimensionError("controller context: plant and certificate must be set");
    }
    require_shape(k_gain, plant->m, plant->m, "controller K");
    if (!is_symmetric(k_gain) || (k_gain.size() > 0 && sym_min_eig(k_gain) < 0.0)) {
        throw CertificateError("controller K must be symmetric positive semidefinite");
    }
    if (bounds) {
        require_size(bounds->lower, plant->m, "input lower bound");
        require_size(bounds->upper, plant->m, "input upper bound");
        if ((bounds->lower.array() >= bounds->upper.array()).any()) {
            throw CertificateError("input bounds must satisfy lower < upper");
        }
    }
}

Vector full_info_control(const ControllerContext& ctx, const Vector& x, double t)
{
    const BilinearPlant& plant = *ctx.plant;
    require_size(x, plant.n, "full_info_control x");
    const ReferencePoint ref = ctx.traj.at(t);
    const Vector s = plant.s_signal(t);
    const Matrix& p = ctx.cert->p;
    const Matrix b_ref = input_matrix(plant, ref.x_d, s);
    const Matrix b0 = plant.b0(s);
    return ref.u_d + ctx.k_gain * (b0.transpose() * (p * ref.x_d) - b_ref.transpose() * (p * x));
}

Vector full_info_control_error_form(const ControllerContext& ctx, const Vector& x, double t)
{
    const BilinearPlant& plant = *ctx.plant;
    require_size(x, plant.n, "full_info_control x");
    const ReferencePoint ref = ctx.traj.at(t);
    const Vector s = plant.s_signal(t);
    const Matrix b_ref = input_matrix(plant, ref.x_d, s);
    return ref.u_d + ctx.k_gain * (b_ref.transpose() * (ctx.cert->p * (ref.x_d - x)));
}

Vector output_feedback_control(const ControllerContext& ctx, const Vector& x_hat, double t)
{
    return full_info_control(ctx, x_hat, t);
}

Vector adaptive_control(const ContextBuilder& builder, const Vector& z_hat, const Matrix& y_filter,
                        const Vector& theta_hat, double t)
{
    if (!theta_hat.allFinite()) {
        throw NumericError("adaptive_control: non-finite parameter estimate");
    }
    const Vector x_hat = reconstruct_state(z_hat, y_filter, theta_hat);
    return full_info_control(builder(theta_hat), x_hat, t);
}

Vector clamp_input(const Vector& u, const InputBounds& bounds)
{
    require_size(bounds.lower, u.size(), "clamp lower");
    require_size(bounds.upper, u.size(), "clamp upper");
    return u.cwiseMax(bounds.lower).cwiseMin(bounds.upper);
}

}  // namespace bilin
