#include "bilin/numerics.hpp"

#include "bilin/errors.hpp"

#include <fmt/core.h>

#include <cmath>

namespace bilin {

void require_shape(const Matrix& m, Index rows, Index cols, std::string_view what)
{
    if (m.rows() != rows || m.cols() != cols) {
        throw DimensionError(fmt::format("{}: expected {}x{}, got {}x{}", what, rows, cols,
                                         m.rows(), m.cols()));
    }
}

void require_size(const Vector& v, Index size, std::string_view what)
{
    if (v.size() != size) {
        throw DimensionError(fmt::format("{}: expected length {}, got {}", what, size, v.size()));
    }
}

void require_square(const Matrix& m, std::string_view what)
{
    if (m.rows() != m.cols() || m.rows() == 0) {
        throw DimensionError(
            fmt::format("{}: expected a non-empty square matrix, got {}x{}", what, m.rows(), m.cols()));
    }
}

bool is_symmetric(const Matrix& m, double rel_tol)
{
    if (m.rows() != m.cols()) {
        return false;
    }
    const double scale = m.cwiseAbs().maxCoeff();
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

double determinant(const Matrix& m)
{
    require_square(m, "determinant");
    switch (m.rows()) {
    case 1:
        return m(0, 0);
    case 2:
        return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    default:
        return m.fullPivLu().determinant();
    }
}

namespace {

Matrix minor_of(const Matrix& m, Index skip_row, Index skip_col)
{
    const Index n = m.rows();
    Matrix out(n - 1, n - 1);
    for (Index i = 0, r = 0; i < n; ++i) {
        if (i == skip_row) {
            continue;
        }
        for (Index j = 0, c = 0; j < n; ++j) {
            if (j == skip_col) {
                continue;
            }
            out(r, c++) = m(i, j);
        }
        ++r;
    }
    return out;
}

Matrix adjugate_by_minors(const Matrix& m)
{
    const Index n = m.rows();
    Matrix adj(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            const double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
            // cofactor C_ij lands at adj(j, i)
            adj(j, i) = sign * determinant(minor_of(m, i, j));
        }
    }
    return adj;
}

Matrix adjugate3(const Matrix& m)
{
    Matrix adj(3, 3);
    adj(0, 0) = m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1);
    adj(0, 1) = m(0, 2) * m(2, 1) - m(0, 1) * m(2, 2);
    adj(0, 2) = m(0, 1) * m(1, 2) - m(0, 2) * m(1, 1);
    adj(1, 0) = m(1, 2) * m(2, 0) - m(1, 0) * m(2, 2);
    adj(1, 1) = m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0);
    adj(1, 2) = m(0, 2) * m(1, 0) - m(0, 0) * m(1, 2);
    adj(2, 0) = m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0);
    adj(2, 1) = m(0, 1) * m(2, 0) - m(0, 0) * m(2, 1);
    adj(2, 2) = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    return adj;
}

}  // namespace

Matrix adjugate(const Matrix& m)
{
    require_square(m, "adjugate");
    const Index n = m.rows();
    if (n == 1) {
        return Matrix::Identity(1, 1);
    }
    if (n == 2) {
        Matrix adj(2, 2);
        adj << m(1, 1), -m(0, 1), -m(1, 0), m(0, 0);
        return adj;
    }
    if (n == 3) {
        return adjugate3(m);
    }

    const Eigen::PartialPivLU<Matrix> lu(m);
    const double det = lu.determinant();
    const double scale = m.cwiseAbs().maxCoeff();
    // relative conditioning guard: LU inverse only when det is far from zero
    if (std::isfinite(det) && std::abs(det) > 1e-8 * std::pow(scale, static_cast<double>(n))) {
        return det * lu.inverse();
    }
    return adjugate_by_minors(m);
}

Matrix spd_sqrt(const Matrix& p)
{
    require_square(p, "spd_sqrt");
    if (!is_symmetric(p)) {
        throw CertificateError("spd_sqrt: matrix is not symmetric");
    }
    const bool diagonal = (p - Matrix(p.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
    if (diagonal) {
        if ((p.diagonal().array() <= 0.0).any()) {
            throw CertificateError("spd_sqrt: matrix is not positive definite");
        }
        return Matrix(p.diagonal().cwiseSqrt().asDiagonal());
    }
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(p);
    if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0.0) {
        throw CertificateError("spd_sqrt: matrix is not positive definite");
    }
    const Matrix& v = eig.eigenvectors();
    Matrix root = v * eig.eigenvalues().cwiseSqrt().asDiagonal() * v.transpose();
    return 0.5 * (root + root.transpose());
}

namespace {

Vector sym_eigenvalues(const Matrix& m, std::string_view what)
{
    require_square(m, what);
    if (!is_symmetric(m, 1e-10)) {
        throw DimensionError(fmt::format("{}: matrix is not symmetric", what));
    }
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
    return eig.eigenvalues();
}

}  // namespace

double sym_min_eig(const Matrix& m) { return sym_eigenvalues(m, "sym_min_eig").minCoeff(); }

double sym_max_eig(const Matrix& m) { return sym_eigenvalues(m, "sym_max_eig").maxCoeff(); }

}  // namespace bilin
