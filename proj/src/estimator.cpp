#include "covest/estimator.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace covest {

void ObservationSet::validate() const {
    if (data.rows() < 1 || data.cols() < 1)
        throw std::invalid_argument("ObservationSet: need N >= 1 and n >= 1");
    if (!data.allFinite()) throw std::invalid_argument("ObservationSet: non-finite entries");
    if (!points.empty() && static_cast<Eigen::Index>(points.size()) != data.cols())
        throw std::invalid_argument("ObservationSet: points/data size mismatch");
}

namespace {

// Fixed chunk layout, independent of the thread count, so the summation
// order (chunk-internal sequential, then chunks in index order) is the
// same for any number of workers.
constexpr int kChunks = 64;

inline std::pair<Eigen::Index, Eigen::Index> chunk_range(Eigen::Index total, int c) {
    const Eigen::Index lo = total * c / kChunks;
    const Eigen::Index hi = total * (c + 1) / kChunks;
    return {lo, hi};
}

}  // namespace

MomentEstimates sample_second_moment(const ObservationSet& obs, bool center) {
    obs.validate();
    const Eigen::Index n = obs.n(), N = obs.N();
    MomentEstimates out;
    out.xbar = obs.data.colwise().mean();
    out.centered = center;

    std::vector<Matrix> partial(kChunks, Matrix::Zero(n, n));
#pragma omp parallel for schedule(static)
    for (int c = 0; c < kChunks; ++c) {
        auto [lo, hi] = chunk_range(N, c);
        Vector xi(n);
        for (Eigen::Index i = lo; i < hi; ++i) {
            xi = obs.data.row(i).transpose();
            if (center) xi -= out.xbar;
            partial[c].selfadjointView<Eigen::Lower>().rankUpdate(xi, 1.0);
        }
    }
    Matrix s = Matrix::Zero(n, n);
    for (int c = 0; c < kChunks; ++c) s += partial[c];
    s = s.selfadjointView<Eigen::Lower>();
    out.S = s / static_cast<double>(N);
    return out;
}

namespace serial {

MomentEstimates sample_second_moment(const ObservationSet& obs, bool center) {
    obs.validate();
    const Eigen::Index n = obs.n(), N = obs.N();
    MomentEstimates out;
    out.xbar = obs.data.colwise().mean();
    out.centered = center;
    Matrix s = Matrix::Zero(n, n);
    Vector xi(n);
    for (Eigen::Index i = 0; i < N; ++i) {
        xi = obs.data.row(i).transpose();
        if (center) xi -= out.xbar;
        s += xi * xi.transpose();
    }
    out.S = s / static_cast<double>(N);
    return out;
}

}  // namespace serial

namespace {

// Clip tiny negative eigenvalues (floating-point noise on a matrix that is
// d.n.n. in exact arithmetic). A deficit beyond 1e-6 * lambda_max is a
// numerical failure, not rounding, and throws.
Matrix clip_dnn(const Matrix& a, double* clip_magnitude) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.transpose()));
    Vector vals = es.eigenvalues();
    const double lmax = std::max(vals.maxCoeff(), 0.0);
    const double lmin = vals.minCoeff();
    if (lmin >= 0.0) {
        *clip_magnitude = 0.0;
        return a;
    }
    if (lmin < -1e-6 * (lmax + 1e-300))
        throw std::runtime_error("fit_model: matrix is not d.n.n. beyond rounding tolerance");
    *clip_magnitude = -lmin;
    for (Eigen::Index i = 0; i < vals.size(); ++i) vals(i) = std::max(vals(i), 0.0);
    Matrix out = es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().transpose();
    return 0.5 * (out + out.transpose());
}

}  // namespace

CovarianceEstimate fit_model(const MomentEstimates& moments, const DesignMatrix& design,
                             std::optional<BasisFamily> family) {
    const Matrix& g = design.G;
    if (g.rows() != moments.S.rows())
        throw std::invalid_argument("fit_model: design rows and S dimension differ");

    CovarianceEstimate est;
    est.model = design.model;
    est.family = family;
    est.diag.design_rank = numerical_rank(g);
    if (est.diag.design_rank == 0) throw std::invalid_argument("rank-zero design");

    const Matrix gtg_pinv = pseudo_inverse_sym(g.transpose() * g);
    // S is already symmetric; the (Y + Y^T)/2 symmetrization is routed
    // anyway so the formula stays correct for arbitrary input.
    const Matrix ybar = 0.5 * (moments.S + moments.S.transpose());
    Matrix psi = gtg_pinv * g.transpose() * ybar * g * gtg_pinv;
    psi = 0.5 * (psi + psi.transpose());

    est.pi = projector(g);
    Matrix sigma = est.pi * ybar * est.pi;
    sigma = 0.5 * (sigma + sigma.transpose());

    est.psi_hat = clip_dnn(psi, &est.diag.psi_clip);
    est.sigma_hat = clip_dnn(sigma, &est.diag.sigma_clip);
    return est;
}

double empirical_contrast(const ObservationSet& obs, const Matrix& candidate) {
    obs.validate();
    if (candidate.rows() != obs.n() || candidate.cols() != obs.n())
        throw std::invalid_argument("empirical_contrast: candidate dimension mismatch");
    const Eigen::Index N = obs.N();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < N; ++i) {
        Vector xi = obs.data.row(i).transpose();
        acc += (xi * xi.transpose() - candidate).squaredNorm();
    }
    return acc / static_cast<double>(N);
}

double eval_cov_fn(const CovarianceEstimate& est, double s, double t) {
    if (!est.family) throw std::logic_error("eval_cov_fn: estimate carries no basis family");
    const Vector gs = basis_vector(*est.family, est.model, s);
    const Vector gt = basis_vector(*est.family, est.model, t);
    return gs.dot(est.psi_hat * gt);
}

double normal_equation_residual(const MomentEstimates& moments, const DesignMatrix& design,
                                const Matrix& psi_hat) {
    const Matrix& g = design.G;
    const Matrix gtg = g.transpose() * g;
    const Matrix ybar = moments.S;

    auto vech_sym_form = [](const Matrix& a) {
        // D^T vec(A) = vech(A + A^T - diag(A))
        Matrix t = a + a.transpose();
        t.diagonal() = a.diagonal();
        return vech(t);
    };

    const Matrix lhs_core = gtg * psi_hat * gtg;
    const Matrix rhs_core = g.transpose() * ybar * g;
    const Vector lhs = vech_sym_form(lhs_core);
    const Vector rhs = vech_sym_form(rhs_core);
    return (lhs - rhs).norm();
}

}  // namespace covest
