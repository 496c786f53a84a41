#include "covest/simlab.hpp"

#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

#include "covest/rng.hpp"

namespace covest {

ProcessKind process_kind_from_string(const std::string& s) {
    if (s == "gp_cholesky") return ProcessKind::gp_cholesky;
    if (s == "kl_process") return ProcessKind::kl_process;
    if (s == "non_gaussian_kl") return ProcessKind::non_gaussian_kl;
    throw std::invalid_argument("unknown process kind: " + s);
}

std::string to_string(ProcessKind k) {
    switch (k) {
        case ProcessKind::gp_cholesky: return "gp_cholesky";
        case ProcessKind::kl_process: return "kl_process";
        case ProcessKind::non_gaussian_kl: return "non_gaussian_kl";
    }
    return "?";
}

std::vector<double> process_spectrum(const TrueProcessSpec& spec) {
    if (!spec.gammas.empty()) return spec.gammas;
    std::vector<double> g(static_cast<std::size_t>(spec.truncation));
    for (std::size_t l = 0; l < g.size(); ++l)
        g[l] = std::pow(static_cast<double>(l + 1), -spec.alpha);
    return g;
}

namespace {

// Basis evaluation matrix B (L x n), B(l, j) = g_{l+1}(t_j).
Matrix kl_basis_matrix(const TrueProcessSpec& spec, const std::vector<double>& points,
                       std::size_t L) {
    Matrix b(static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(points.size()));
    for (std::size_t l = 0; l < L; ++l)
        for (std::size_t j = 0; j < points.size(); ++j)
            b(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(j)) =
                evaluate_basis(spec.family, static_cast<int>(l + 1), points[j]);
    return b;
}

Matrix cholesky_with_jitter(const Matrix& sigma) {
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    const double lmax = lambda_max_sym(sigma);
    const double jitter = 1e-12 * std::max(lmax, 1.0);
    std::cerr << "note: covariance factorization needed jitter " << jitter << "\n";
    llt.compute(sigma + jitter * Matrix::Identity(sigma.rows(), sigma.cols()));
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("sample_process: covariance is indefinite beyond jitter repair");
    return llt.matrixL();
}

}  // namespace

ObservationSet sample_process(const TrueProcessSpec& spec, const std::vector<double>& points,
                              Eigen::Index N, std::uint64_t stream) {
    if (N < 1) throw std::invalid_argument("sample_process: N must be >= 1");
    if (points.empty()) throw std::invalid_argument("sample_process: empty points");
    const Eigen::Index n = static_cast<Eigen::Index>(points.size());

    ObservationSet obs;
    obs.points = points;
    obs.data.resize(N, n);

    if (spec.kind == ProcessKind::gp_cholesky) {
        const Matrix chol = cholesky_with_jitter(spec.sigma);
#pragma omp parallel for schedule(static)
        for (Eigen::Index i = 0; i < N; ++i) {
            auto eng = make_engine(spec.seed, stream, static_cast<std::uint64_t>(i));
            std::normal_distribution<double> normal(0.0, 1.0);
            Vector z(n);
            for (Eigen::Index j = 0; j < n; ++j) z(j) = normal(eng);
            obs.data.row(i) = (chol * z).transpose();
        }
        return obs;
    }

    const std::vector<double> gam = process_spectrum(spec);
    const std::size_t L = gam.size();
    const Matrix b = kl_basis_matrix(spec, points, L);
    const bool student = (spec.kind == ProcessKind::non_gaussian_kl);
    if (student && !(spec.t_dof > 4.0))
        throw std::invalid_argument("non_gaussian_kl: dof must exceed 4 (finite fourth moment)");
    const double t_scale = student ? std::sqrt((spec.t_dof - 2.0) / spec.t_dof) : 1.0;

#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < N; ++i) {
        auto eng = make_engine(spec.seed, stream, static_cast<std::uint64_t>(i));
        std::normal_distribution<double> normal(0.0, 1.0);
        std::student_t_distribution<double> tdist(spec.t_dof);
        Vector coef(static_cast<Eigen::Index>(L));
        for (std::size_t l = 0; l < L; ++l) {
            const double zeta = student ? t_scale * tdist(eng) : normal(eng);
            coef(static_cast<Eigen::Index>(l)) = gam[l] * zeta;
        }
        obs.data.row(i) = coef.transpose() * b;
    }
    return obs;
}

Matrix true_sigma(const TrueProcessSpec& spec, const std::vector<double>& points) {
    if (spec.kind == ProcessKind::gp_cholesky) {
        if (spec.sigma.rows() != static_cast<Eigen::Index>(points.size()))
            throw std::invalid_argument("true_sigma: sigma/points size mismatch");
        return spec.sigma;
    }
    const std::vector<double> gam = process_spectrum(spec);
    const Matrix b = kl_basis_matrix(spec, points, gam.size());
    Vector g2(static_cast<Eigen::Index>(gam.size()));
    for (std::size_t l = 0; l < gam.size(); ++l)
        g2(static_cast<Eigen::Index>(l)) = gam[l] * gam[l];
    return b.transpose() * g2.asDiagonal() * b;
}

Matrix true_phi_gaussian(const Matrix& sigma) {
    const Eigen::Index n = sigma.rows();
    Matrix phi(n * n, n * n);
    for (Eigen::Index b2 = 0; b2 < n; ++b2)
        for (Eigen::Index a = 0; a < n; ++a)
            for (Eigen::Index d = 0; d < n; ++d)
                for (Eigen::Index c = 0; c < n; ++c)
                    phi(a + b2 * n, c + d * n) =
                        sigma(a, c) * sigma(b2, d) + sigma(a, d) * sigma(b2, c);
    return phi;
}

namespace {

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double se_of(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(v.size() - 1) /
                     static_cast<double>(v.size()));
}

}  // namespace

bool RiskReport::all_pass() const {
    for (const auto& r : rows)
        if (!r.identity_pass || !r.variance_identity_pass) return false;
    return true;
}

RiskReport risk_decomposition_check(const TrueProcessSpec& spec,
                                    const std::vector<DesignMatrix>& models, Eigen::Index N,
                                    int R, std::uint64_t seed) {
    if (models.empty()) throw std::invalid_argument("risk_decomposition_check: no models");
    const std::vector<double>& points = models.front().points;
    const Matrix sigma = true_sigma(spec, points);
    const Matrix phi = true_phi_gaussian(sigma);
    const Eigen::Index n = sigma.rows();
    const std::size_t M = models.size();

    std::vector<Matrix> pis(M);
    for (std::size_t k = 0; k < M; ++k) pis[k] = projector(models[k].G);

    // Per replication: risk per model, vec(Sigma_hat) per model, variance-bound ratio.
    std::vector<std::vector<double>> risks(M, std::vector<double>(R));
    std::vector<Matrix> sig_hats(M, Matrix(n * n, R));
    std::vector<double> ratios(R, 0.0);

    TrueProcessSpec draw = spec;
    draw.seed = seed;
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < R; ++r) {
        const ObservationSet obs = sample_process(draw, points, N, static_cast<std::uint64_t>(r));
        const MomentEstimates mom = sample_second_moment(obs);
        const FourthMomentMatrix phat = estimate_phi(obs);
        const double lmax_phat = lambda_max_sym(phat.phi);
        double ratio = 0.0;
        for (std::size_t k = 0; k < M; ++k) {
            const CovarianceEstimate est = fit_model(mom, models[k]);
            risks[k][r] = (sigma - est.sigma_hat).squaredNorm();
            sig_hats[k].col(r) = vec(est.sigma_hat);
            if (lmax_phat > 0.0)
                ratio = std::max(ratio, delta_sq(pis[k], phat) / lmax_phat);
        }
        ratios[r] = ratio;
    }

    RiskReport rep;
    rep.N = N;
    rep.R = R;
    for (double x : ratios) rep.variance_bound_max_ratio = std::max(rep.variance_bound_max_ratio, x);
    for (std::size_t k = 0; k < M; ++k) {
        ModelRiskRow row;
        row.model_id = models[k].model.id;
        row.D = pis[k].trace();
        row.mc_risk = mean_of(risks[k]);
        row.mc_se = se_of(risks[k], row.mc_risk);
        row.bias = (sigma - pis[k] * sigma * pis[k]).squaredNorm();
        row.gamma_sq_true = trace_kron_projected(pis[k], phi);
        row.variance_term = row.gamma_sq_true / static_cast<double>(N);
        row.identity_pass =
            std::abs(row.mc_risk - (row.bias + row.variance_term)) <= 3.0 * row.mc_se;

        // N * Tr(MC covariance of vec(Sigma_hat)) vs gamma^2.
        const Vector center = sig_hats[k].rowwise().mean();
        std::vector<double> sq(R);
        for (int r = 0; r < R; ++r) sq[r] = (sig_hats[k].col(r) - center).squaredNorm();
        const double trace_cov = mean_of(sq);
        row.trace_cov_scaled = static_cast<double>(N) * trace_cov;
        row.trace_cov_se = static_cast<double>(N) * se_of(sq, trace_cov);
        row.variance_identity_pass =
            std::abs(row.trace_cov_scaled - row.gamma_sq_true) <= 3.0 * row.trace_cov_se;
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

OracleReport oracle_inequality_check(const TrueProcessSpec& spec,
                                     const std::vector<DesignMatrix>& models, double theta,
                                     Eigen::Index N, int R, std::uint64_t seed) {
    const std::vector<double>& points = models.front().points;
    const Matrix sigma = true_sigma(spec, points);
    const std::size_t M = models.size();

    std::vector<double> sel(R);
    std::vector<std::vector<double>> per_model(M, std::vector<double>(R));
    std::vector<double> ratios(R, 0.0);

    TrueProcessSpec draw = spec;
    draw.seed = seed;
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < R; ++r) {
        const ObservationSet obs = sample_process(draw, points, N, static_cast<std::uint64_t>(r));
        const SelectionResult s = select(obs, models, theta);
        sel[r] = (sigma - s.chosen.sigma_hat).squaredNorm();
        const MomentEstimates mom = sample_second_moment(obs);
        double ratio = 0.0;
        for (std::size_t k = 0; k < M; ++k) {
            const CovarianceEstimate est = fit_model(mom, models[k]);
            per_model[k][r] = (sigma - est.sigma_hat).squaredNorm();
            if (s.lambda_max_phi > 0.0)
                ratio = std::max(ratio, s.table[k].delta_sq / s.lambda_max_phi);
        }
        ratios[r] = ratio;
    }

    OracleReport rep;
    rep.theta = theta;
    rep.k_theta = (2.0 + 8.0 / theta) * (1.0 + theta);
    rep.selected_risk = mean_of(sel);
    rep.selected_se = se_of(sel, rep.selected_risk);
    for (double x : ratios) rep.variance_bound_max_ratio = std::max(rep.variance_bound_max_ratio, x);

    rep.min_model_risk = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < M; ++k) {
        const double mk = mean_of(per_model[k]);
        const double sk = se_of(per_model[k], mk);
        rep.model_risks.push_back(mk);
        rep.model_ses.push_back(sk);
        if (mk < rep.min_model_risk) {
            rep.min_model_risk = mk;
            rep.min_model_se = sk;
        }
    }
    rep.empirical_ratio = rep.selected_risk / rep.min_model_risk;
    const double slack = 3.0 * std::sqrt(rep.selected_se * rep.selected_se +
                                         rep.k_theta * rep.k_theta * rep.min_model_se *
                                             rep.min_model_se);
    rep.pass = rep.selected_risk <= rep.k_theta * rep.min_model_risk + slack;
    return rep;
}

RateReport rate_check(const TrueProcessSpec& spec, const std::vector<double>& points,
                      const std::vector<Eigen::Index>& Ns, const std::vector<int>& m_max_per_N,
                      int R, double theta, double slope_lo, double slope_hi,
                      std::uint64_t seed) {
    if (Ns.size() != m_max_per_N.size() || Ns.size() < 2)
        throw std::invalid_argument("rate_check: need matching Ns and m_max lists");
    const Matrix sigma = true_sigma(spec, points);

    RateReport rep;
    int overall_mmax = 0;
    for (std::size_t q = 0; q < Ns.size(); ++q) {
        const Eigen::Index N = Ns[q];
        const int mmax = m_max_per_N[q];
        overall_mmax = std::max(overall_mmax, mmax);
        std::vector<int> sizes;
        for (int m = 1; m <= mmax; ++m) sizes.push_back(m);
        std::vector<DesignMatrix> designs;
        for (const ModelSpec& ms : nested_model_family(spec.family, sizes))
            designs.push_back(design_matrix(spec.family, ms, points));

        std::vector<double> risks(R);
        std::vector<double> ratios(R, 0.0);
        TrueProcessSpec draw = spec;
        draw.seed = splitmix64(seed + q);
#pragma omp parallel for schedule(dynamic)
        for (int r = 0; r < R; ++r) {
            const ObservationSet obs =
                sample_process(draw, points, N, static_cast<std::uint64_t>(r));
            const SelectionResult s = select(obs, designs, theta);
            risks[r] = (sigma - s.chosen.sigma_hat).squaredNorm();
            double ratio = 0.0;
            if (s.lambda_max_phi > 0.0)
                for (const auto& e : s.table)
                    ratio = std::max(ratio, e.delta_sq / s.lambda_max_phi);
            ratios[r] = ratio;
        }
        RatePoint pt;
        pt.N = N;
        pt.m_max = mmax;
        pt.mean_risk = mean_of(risks);
        pt.se = se_of(risks, pt.mean_risk);
        rep.points.push_back(pt);
        for (double x : ratios) rep.variance_bound_max_ratio = std::max(rep.variance_bound_max_ratio, x);
    }

    // Least-squares slope of log risk vs log N.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double cnt = static_cast<double>(rep.points.size());
    for (const RatePoint& pt : rep.points) {
        const double lx = std::log(static_cast<double>(pt.N));
        const double ly = std::log(pt.mean_risk);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    rep.slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    rep.target_slope = 0.5 * (slope_lo + slope_hi);
    rep.saturation_flag = (2 * overall_mmax > static_cast<int>(points.size()));
    rep.pass = rep.slope >= slope_lo && rep.slope <= slope_hi;
    return rep;
}

ConcentrationReport concentration_check(const Matrix& phi, const Matrix& a_tilde,
                                        Eigen::Index N, double p, int R,
                                        const std::vector<double>& xs, ErrorKind kind,
                                        double t_dof, std::uint64_t seed) {
    const Eigen::Index d = phi.rows();
    if (a_tilde.rows() != N * d) throw std::invalid_argument("concentration_check: A is not Nd x Nd");
    if (kind == ErrorKind::student_t && !(t_dof > p))
        throw std::invalid_argument("concentration_check: Student-t dof must exceed p");

    ConcentrationReport rep;
    rep.p = p;
    rep.trace_A = a_tilde.trace();
    double tr_blocks = 0.0;
    for (Eigen::Index i = 0; i < N; ++i)
        tr_blocks += (a_tilde.block(i * d, i * d, d, d) * phi).trace();
    rep.gamma_sq = tr_blocks;
    rep.delta_sq = tr_blocks / rep.trace_A;

    const Matrix chol = [&] {
        Eigen::LLT<Matrix> llt(phi + 1e-14 * phi.trace() * Matrix::Identity(d, d));
        if (llt.info() != Eigen::Success)
            throw std::invalid_argument("concentration_check: Phi not d.n.n.");
        return Matrix(llt.matrixL());
    }();
    const double t_scale =
        kind == ErrorKind::student_t ? std::sqrt((t_dof - 2.0) / t_dof) : 1.0;

    std::vector<double> zeta_sq(R);
#pragma omp parallel for schedule(static)
    for (int r = 0; r < R; ++r) {
        auto eng = make_engine(seed, 0xc0ffee, static_cast<std::uint64_t>(r));
        std::normal_distribution<double> normal(0.0, 1.0);
        std::student_t_distribution<double> tdist(t_dof > 2.0 ? t_dof : 5.0);
        Vector eps(N * d), z(d);
        for (Eigen::Index i = 0; i < N; ++i) {
            for (Eigen::Index j = 0; j < d; ++j)
                z(j) = kind == ErrorKind::student_t ? t_scale * tdist(eng) : normal(eng);
            eps.segment(i * d, d) = chol * z;
        }
        zeta_sq[r] = eps.dot(a_tilde * eps);
    }

    const double delta = std::sqrt(rep.delta_sq);
    for (double x : xs) {
        ConcentrationPoint pt;
        pt.x = x;
        pt.threshold = rep.delta_sq * rep.trace_A +
                       2.0 * rep.delta_sq * std::sqrt(rep.trace_A * delta * x) +
                       rep.delta_sq * rep.trace_A * x;
        int count = 0;
        for (double z : zeta_sq)
            if (z >= pt.threshold) ++count;
        pt.empirical_tail = static_cast<double>(count) / static_cast<double>(R);
        rep.points.push_back(pt);
    }

    // Slope over points with nonzero empirical mass.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (const auto& pt : rep.points) {
        if (pt.empirical_tail <= 0.0) continue;
        const double lx = std::log(pt.x), ly = std::log(pt.empirical_tail);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++cnt;
    }
    if (cnt >= 2)
        rep.tail_slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    rep.pass = cnt >= 2 && rep.tail_slope <= -0.5 * p + 0.3;
    return rep;
}

}  // namespace covest
