#include "covest/matrix_kernels.hpp"

#include <cmath>

namespace covest {

Vector vec(const Matrix& a) {
    require_finite(a, "vec");
    Vector out(a.size());
    Eigen::Index pos = 0;
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i) out(pos++) = a(i, j);
    return out;
}

Vector vech(const Matrix& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("vech: matrix must be square");
    require_finite(a, "vech");
    const Eigen::Index k = a.rows();
    Vector out(k * (k + 1) / 2);
    Eigen::Index pos = 0;
    for (Eigen::Index j = 0; j < k; ++j)
        for (Eigen::Index i = j; i < k; ++i) out(pos++) = a(i, j);
    return out;
}

Matrix unvech(const Vector& v) {
    const auto s = static_cast<double>(v.size());
    const auto k = static_cast<Eigen::Index>(std::lround((std::sqrt(8.0 * s + 1.0) - 1.0) / 2.0));
    if (k * (k + 1) / 2 != v.size()) throw std::invalid_argument("unvech: length is not triangular");
    Matrix m(k, k);
    Eigen::Index pos = 0;
    for (Eigen::Index j = 0; j < k; ++j)
        for (Eigen::Index i = j; i < k; ++i) {
            m(i, j) = v(pos);
            m(j, i) = v(pos);
            ++pos;
        }
    return m;
}

Matrix duplication_matrix(int k) {
    if (k < 1) throw std::invalid_argument("duplication_matrix: k must be >= 1");
    const Eigen::Index kk = k;
    Matrix d = Matrix::Zero(kk * kk, kk * (kk + 1) / 2);
    // vech slot of (i,j) with i >= j: column offset of j plus (i - j).
    auto slot = [kk](Eigen::Index i, Eigen::Index j) {
        if (i < j) std::swap(i, j);
        return j * kk - j * (j - 1) / 2 + (i - j);
    };
    for (Eigen::Index j = 0; j < kk; ++j)
        for (Eigen::Index i = 0; i < kk; ++i) d(j * kk + i, slot(i, j)) = 1.0;
    return d;
}

Matrix kron(const Matrix& a, const Matrix& b) {
    require_finite(a, "kron");
    require_finite(b, "kron");
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

namespace {

// Shared eigendecomposition with the relative zero cutoff. Eigenvalues
// within cutoff of zero are treated as exactly zero so rank decisions are
// deterministic.
struct SymEig {
    Matrix vectors;
    Vector values;  // small ones zeroed
    int rank = 0;
};

SymEig sym_eig_cut(const Matrix& m, double rel_tol) {
    if (m.rows() != m.cols()) throw std::invalid_argument("symmetric op: matrix must be square");
    require_finite(m, "symmetric op");
    if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw std::invalid_argument("rel_tol must be in (0,1)");
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()));
    SymEig r;
    r.vectors = es.eigenvectors();
    r.values = es.eigenvalues();
    const double scale = r.values.cwiseAbs().maxCoeff();
    const double cut = std::max(rel_tol * scale, 1e-300);
    for (Eigen::Index i = 0; i < r.values.size(); ++i) {
        if (std::abs(r.values(i)) <= cut)
            r.values(i) = 0.0;
        else
            ++r.rank;
    }
    return r;
}

}  // namespace

Matrix pseudo_inverse_sym(const Matrix& m, double rel_tol) {
    SymEig e = sym_eig_cut(m, rel_tol);
    Vector inv = e.values;
    for (Eigen::Index i = 0; i < inv.size(); ++i)
        if (inv(i) != 0.0) inv(i) = 1.0 / inv(i);
    Matrix out = e.vectors * inv.asDiagonal() * e.vectors.transpose();
    return 0.5 * (out + out.transpose());
}

Matrix projector(const Matrix& g, double rel_tol) {
    if (g.rows() < 1 || g.cols() < 1) throw std::invalid_argument("projector: empty design");
    require_finite(g, "projector");
    const Matrix gtg = g.transpose() * g;
    SymEig e = sym_eig_cut(gtg, rel_tol);
    if (e.rank == 0) throw std::invalid_argument("rank-zero design");
    Matrix pi = g * pseudo_inverse_sym(gtg, rel_tol) * g.transpose();
    return 0.5 * (pi + pi.transpose());
}

int numerical_rank(const Matrix& g, double rel_tol) {
    return sym_eig_cut(g.transpose() * g, rel_tol).rank;
}

double frobenius(const Matrix& a) { return a.norm(); }

double spectral_norm_sym(const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.transpose()),
                                             Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

double lambda_max_sym(const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.transpose()),
                                             Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

}  // namespace covest
