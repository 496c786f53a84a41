#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace covest {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Column-stacking vectorization: out[(j)*k + i] = A(i,j).
Vector vec(const Matrix& a);

/// Half-vectorization of a symmetric matrix: lower triangle (diagonal
/// included) stacked by column. Throws on non-square input.
Vector vech(const Matrix& a);

/// Inverse of vech for a k x k symmetric matrix.
Matrix unvech(const Vector& v);

/// The k^2 x k(k+1)/2 0/1 matrix D_k with D_k * vech(A) = vec(A) for
/// symmetric A. k >= 1.
Matrix duplication_matrix(int k);

/// Kronecker product, block (i,j) = A(i,j) * B.
Matrix kron(const Matrix& a, const Matrix& b);

/// Moore-Penrose pseudoinverse of a symmetric matrix via symmetric
/// eigendecomposition. Eigenvalues with |mu| <= rel_tol * max|mu| are
/// treated as exactly zero.
Matrix pseudo_inverse_sym(const Matrix& m, double rel_tol = 1e-12);

/// Orthogonal projector G (G^T G)^- G^T onto the column space of G.
/// Throws on an all-zero design (rank 0).
Matrix projector(const Matrix& g, double rel_tol = 1e-12);

/// Numerical rank of G, cutoff relative to the largest singular value.
int numerical_rank(const Matrix& g, double rel_tol = 1e-12);

double frobenius(const Matrix& a);

/// Largest eigenvalue magnitude of a symmetric matrix.
double spectral_norm_sym(const Matrix& a);

/// Largest eigenvalue (signed) of a symmetric matrix.
double lambda_max_sym(const Matrix& a);

inline void require_finite(const Matrix& a, const char* what) {
    if (!a.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite entries");
}

}  // namespace covest
