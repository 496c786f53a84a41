#pragma once

#include <optional>

#include "covest/basis.hpp"
#include "covest/matrix_kernels.hpp"

namespace covest {

/// N replications of the process observed at n fixed points.
/// data is N x n, one replication per row.
struct ObservationSet {
    std::vector<double> points;
    Matrix data;
    bool centered = false;

    Eigen::Index n() const { return data.cols(); }
    Eigen::Index N() const { return data.rows(); }
    void validate() const;
};

struct MomentEstimates {
    Matrix S;     // (1/N) sum x_i x_i^T (after centering if requested)
    Vector xbar;  // sample mean of the raw data
    bool centered = false;
};

/// Sample second moment. When center is true the mean is subtracted from
/// every replication before the outer products are accumulated.
/// Parallel over replications with a fixed chunk layout, so the result is
/// bit-identical for any thread count.
MomentEstimates sample_second_moment(const ObservationSet& obs, bool center = false);

namespace serial {
/// Plain sequential reference, kept for tests and the benchmark.
MomentEstimates sample_second_moment(const ObservationSet& obs, bool center = false);
}  // namespace serial

struct FitDiagnostics {
    double psi_clip = 0.0;    // magnitude of the most negative clipped eigenvalue
    double sigma_clip = 0.0;
    int design_rank = 0;
};

struct CovarianceEstimate {
    ModelSpec model;
    Matrix psi_hat;    // m x m
    Matrix sigma_hat;  // n x n
    Matrix pi;         // n x n projector
    std::optional<BasisFamily> family;  // needed for eval_cov_fn
    FitDiagnostics diag;
};

/// Least-squares fit for one design: Psi = (G^T G)^+ G^T S G (G^T G)^+,
/// Sigma = Pi S Pi. Small negative eigenvalues (rounding) are clipped to
/// zero; a deficit beyond 1e-6 * lambda_max throws.
CovarianceEstimate fit_model(const MomentEstimates& moments, const DesignMatrix& design,
                             std::optional<BasisFamily> family = std::nullopt);

/// (1/N) sum_i ||x_i x_i^T - candidate||^2.
double empirical_contrast(const ObservationSet& obs, const Matrix& candidate);

/// sigma_hat(s, t) = G_s^T Psi G_t.
double eval_cov_fn(const CovarianceEstimate& est, double s, double t);

/// Residual of the vech-form normal equation; a cross-check that the
/// closed-form Psi solves the least-squares problem.
double normal_equation_residual(const MomentEstimates& moments, const DesignMatrix& design,
                                const Matrix& psi_hat);

}  // namespace covest
