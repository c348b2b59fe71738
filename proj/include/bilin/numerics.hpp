#pragma once

#include <Eigen/Dense>

#include <string_view>

namespace bilin {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Throws DimensionError with `what` as context when the shape differs.
void require_shape(const Matrix& m, Index rows, Index cols, std::string_view what);
void require_size(const Vector& v, Index size, std::string_view what);
void require_square(const Matrix& m, std::string_view what);

bool is_symmetric(const Matrix& m, double rel_tol = 1e-12);

double determinant(const Matrix& m);

/// Transpose of the cofactor matrix, so that adjugate(m) * m == det(m) * I.
///
/// Dimensions 1..3 use closed-form cofactors. Larger matrices use
/// det(m) * inverse(m) from a partially pivoted LU when m is comfortably
/// nonsingular and fall back to minor determinants otherwise, so the result
/// stays well defined (and continuous) as det(m) -> 0.
Matrix adjugate(const Matrix& m);

/// Symmetric principal square root R of an SPD matrix: R = R^T, R * R = p.
/// Diagonal inputs give the entrywise square root exactly.
/// Throws CertificateError if p is not symmetric or not positive definite.
Matrix spd_sqrt(const Matrix& p);

double sym_min_eig(const Matrix& m);
double sym_max_eig(const Matrix& m);

}  // namespace bilin
