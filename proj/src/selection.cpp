#include "covest/selection.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>

namespace covest {

FourthMomentMatrix estimate_phi(const ObservationSet& obs) {
    obs.validate();
    const Eigen::Index n = obs.n(), N = obs.N();
    FourthMomentMatrix out;
    out.n = n;
    out.N = N;
    if (N == 1) {
        std::cerr << "warning: estimate_phi with N=1 is identically zero; "
                     "penalty degenerates\n";
        out.phi = Matrix::Zero(n * n, n * n);
        out.degenerate = true;
        return out;
    }
    const MomentEstimates mom = sample_second_moment(obs);
    const Vector vs = vec(mom.S);
    Matrix phi = Matrix::Zero(n * n, n * n);
    Vector vi(n * n);
    for (Eigen::Index i = 0; i < N; ++i) {
        const Vector xi = obs.data.row(i).transpose();
        vi = vec(xi * xi.transpose()) - vs;
        phi.selfadjointView<Eigen::Lower>().rankUpdate(vi, 1.0);
    }
    out.phi = Matrix(phi.selfadjointView<Eigen::Lower>()) / static_cast<double>(N);
    return out;
}

double trace_kron_projected(const Matrix& pi, const Matrix& phi) {
    const Eigen::Index n = pi.rows();
    if (phi.rows() != n * n || phi.cols() != n * n)
        throw std::invalid_argument("trace_kron_projected: dimension mismatch");
    double tr = 0.0;
    Matrix w(n, n);
    for (Eigen::Index c = 0; c < n * n; ++c) {
        // column c of Phi reshaped to n x n (column-major, matching vec)
        w = Eigen::Map<const Matrix>(phi.col(c).data(), n, n);
        const Matrix pwp = pi * w * pi;
        tr += pwp(c % n, c / n);
    }
    return tr;
}

double delta_sq(const Matrix& pi, const FourthMomentMatrix& phi) {
    const double d = pi.trace();
    if (d < 1.0 - 1e-6) throw std::invalid_argument("delta_sq: D_m must be >= 1");
    return std::max(trace_kron_projected(pi, phi.phi) / d, 0.0);
}

double delta_sq_from_data(const Matrix& pi, const ObservationSet& obs,
                          const MomentEstimates& moments) {
    const double d = pi.trace();
    if (d < 1.0 - 1e-6) throw std::invalid_argument("delta_sq: D_m must be >= 1");
    const Eigen::Index N = obs.N();
    // ||Pi (x x^T - S) Pi||^2 = ||u||^4 - 2 u^T (PiSPi) u + ||PiSPi||^2, u = Pi x
    const Matrix psp = pi * moments.S * pi;
    const double psp2 = psp.squaredNorm();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < N; ++i) {
        const Vector u = pi * obs.data.row(i).transpose();
        const double u2 = u.squaredNorm();
        acc += u2 * u2 - 2.0 * u.dot(psp * u) + psp2;
    }
    return std::max(acc / static_cast<double>(N) / d, 0.0);
}

double penalty(double D_m, double dsq, double theta, Eigen::Index N) {
    if (!(theta > 0.0)) throw std::invalid_argument("penalty: theta must be > 0");
    if (N < 1) throw std::invalid_argument("penalty: N must be >= 1");
    return (1.0 + theta) * dsq * D_m / static_cast<double>(N);
}

namespace {

// Largest eigenvalue of the empirical fourth-moment matrix through its
// action v -> (1/N) sum_i w_i (w_i^T v), w_i = vec(x_i x_i^T) - vec(S).
// Avoids forming the n^2 x n^2 matrix; deterministic start and schedule.
double lambda_max_phi_implicit(const ObservationSet& obs, const MomentEstimates& moments) {
    const Eigen::Index n = obs.n(), N = obs.N();
    if (N == 1) return 0.0;
    Matrix w(N, n * n);
    const Vector vs = vec(moments.S);
    for (Eigen::Index i = 0; i < N; ++i) {
        const Vector xi = obs.data.row(i).transpose();
        w.row(i) = (vec(xi * xi.transpose()) - vs).transpose();
    }
    Vector v = Vector::Ones(n * n).normalized();
    double lam = 0.0;
    for (int it = 0; it < 200; ++it) {
        Vector u = w.transpose() * (w * v) / static_cast<double>(N);
        const double norm = u.norm();
        if (norm == 0.0) return 0.0;
        u /= norm;
        if (std::abs(norm - lam) <= 1e-10 * norm && it > 2) return norm;
        lam = norm;
        v = u;
    }
    return lam;
}

}  // namespace

SelectionResult select(const ObservationSet& obs, const std::vector<DesignMatrix>& models,
                       double theta, PenaltyMode mode, std::optional<BasisFamily> family) {
    if (models.empty()) throw std::invalid_argument("select: empty model list");
    obs.validate();
    const Eigen::Index N = obs.N();
    const MomentEstimates moments = sample_second_moment(obs);

    // L_N(Gamma) = base + ||S - Gamma||^2 with base = (1/N) sum ||x x^T - S||^2.
    double base = -moments.S.squaredNorm();
    for (Eigen::Index i = 0; i < N; ++i) {
        const double q = obs.data.row(i).squaredNorm();
        base += q * q / static_cast<double>(N);
    }

    SelectionResult res;
    res.degenerate_penalty = (N == 1);
    if (res.degenerate_penalty)
        std::cerr << "warning: N=1 gives a zero penalty estimate; selection falls "
                     "back to the smallest model\n";
    const bool need_lambda_max = (mode == PenaltyMode::lambda_max);
    res.lambda_max_phi =
        (N > 1) ? lambda_max_phi_implicit(obs, moments) : 0.0;

    std::vector<CovarianceEstimate> fits(models.size());
    res.table.resize(models.size());
    for (std::size_t k = 0; k < models.size(); ++k) {
        fits[k] = fit_model(moments, models[k], family);
        SelectionEntry& e = res.table[k];
        e.model_id = models[k].model.id;
        e.m = models[k].model.size();
        e.D = fits[k].pi.trace();
        e.delta_sq = res.degenerate_penalty
                         ? 0.0
                         : (need_lambda_max ? res.lambda_max_phi
                                            : delta_sq_from_data(fits[k].pi, obs, moments));
        e.contrast = base + (moments.S - fits[k].sigma_hat).squaredNorm();
        e.pen = penalty(e.D, e.delta_sq, theta, N);
        e.criterion = e.contrast + e.pen;
    }

    int best = -1;
    for (std::size_t k = 0; k < res.table.size(); ++k) {
        if (best < 0) {
            best = static_cast<int>(k);
            continue;
        }
        const SelectionEntry& e = res.table[k];
        const SelectionEntry& b = res.table[best];
        if (e.criterion < b.criterion) {
            best = static_cast<int>(k);
        } else if (e.criterion == b.criterion) {
            res.tie_broken = true;
            if (e.D < b.D || (e.D == b.D && e.model_id < b.model_id))
                best = static_cast<int>(k);
        }
    }
    if (res.degenerate_penalty) {
        // Smallest D wins outright when the penalty carries no information.
        for (std::size_t k = 0; k < res.table.size(); ++k)
            if (res.table[k].D < res.table[best].D) best = static_cast<int>(k);
    }
    res.chosen_index = best;
    res.table[best].chosen = true;
    res.chosen = fits[best];
    return res;
}

GenericSelection generic_select(const Matrix& y, const std::vector<GenericModel>& models,
                                const Matrix& phi, double theta) {
    if (models.empty()) throw std::invalid_argument("generic_select: empty model list");
    const Eigen::Index N = y.rows(), d = y.cols();
    if (phi.rows() != d || phi.cols() != d)
        throw std::invalid_argument("generic_select: Phi must be d x d");

    // Stack rows into R^{Nd} (replication-major).
    Vector ystack(N * d);
    for (Eigen::Index i = 0; i < N; ++i) ystack.segment(i * d, d) = y.row(i).transpose();

    GenericSelection res;
    res.criteria.resize(models.size());
    int best = -1;
    Vector best_fit;
    for (std::size_t k = 0; k < models.size(); ++k) {
        const GenericModel& mod = models[k];
        if (mod.P.rows() != N * d || mod.P.cols() != N * d)
            throw std::invalid_argument("generic_select: projector dimension mismatch");
        const Vector fhat = mod.P * ystack;
        // Tr(P (I_N (x) Phi)) = sum_i Tr(P_ii Phi)
        double tr = 0.0;
        for (Eigen::Index i = 0; i < N; ++i)
            tr += (mod.P.block(i * d, i * d, d, d) * phi).trace();
        const double dsq = tr / mod.D;
        const double crit = (ystack - fhat).squaredNorm() / static_cast<double>(N) +
                            (1.0 + theta) * dsq * mod.D / static_cast<double>(N);
        res.criteria[k] = crit;
        if (best < 0 || crit < res.criteria[best] ||
            (crit == res.criteria[best] && mod.D < models[best].D)) {
            best = static_cast<int>(k);
            best_fit = fhat;
        }
    }
    res.chosen_index = best;
    res.f_tilde = best_fit;
    return res;
}

}  // namespace covest
