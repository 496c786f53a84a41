#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "covest/selection.hpp"

namespace covest {

enum class ProcessKind { gp_cholesky, kl_process, non_gaussian_kl };

ProcessKind process_kind_from_string(const std::string& s);
std::string to_string(ProcessKind k);

/// Ground-truth process at fixed design points. kl variants build
/// X(t) = sum_lambda gamma_lambda zeta_lambda g_lambda(t) with i.i.d.
/// standard-normal (or standardized Student-t) coefficients.
struct TrueProcessSpec {
    ProcessKind kind = ProcessKind::kl_process;
    Matrix sigma;                 // gp_cholesky: explicit covariance
    std::vector<double> gammas;   // kl: explicit sqrt-spectrum; wins over alpha
    double alpha = 1.0;           // kl: gamma_lambda = lambda^-alpha
    int truncation = 64;          // kl: number of modes L
    BasisFamily family;           // kl: basis carrying the modes
    double t_dof = 5.0;           // non_gaussian_kl: dof > 4
    std::uint64_t seed = 0;
};

/// sqrt-spectrum actually used (explicit gammas or lambda^-alpha).
std::vector<double> process_spectrum(const TrueProcessSpec& spec);

/// Draw N replications at the given points. Deterministic in
/// (spec.seed, stream); replication i uses substream i, so any parallel
/// schedule reproduces the serial draw.
ObservationSet sample_process(const TrueProcessSpec& spec, const std::vector<double>& points,
                              Eigen::Index N, std::uint64_t stream = 0);

/// Exact covariance at the design points implied by the spec.
Matrix true_sigma(const TrueProcessSpec& spec, const std::vector<double>& points);

/// Gaussian fourth-moment matrix from Wick pairings:
/// Phi[(a,b),(c,d)] = Sigma(a,c)Sigma(b,d) + Sigma(a,d)Sigma(b,c).
Matrix true_phi_gaussian(const Matrix& sigma);

struct ModelRiskRow {
    std::string model_id;
    double D = 0.0;
    double mc_risk = 0.0;      // MC mean of ||Sigma - Sigma_hat||^2
    double mc_se = 0.0;
    double bias = 0.0;         // ||Sigma - Pi Sigma Pi||^2
    double variance_term = 0.0;  // delta^2 D / N from true Phi
    bool identity_pass = false;  // |mc_risk - (bias + variance_term)| <= 3 SE
    // Scaled-variance identity: N Tr(MC-cov of vec(Sigma_hat)) vs Tr((Pi (x) Pi) Phi)
    double trace_cov_scaled = 0.0;
    double trace_cov_se = 0.0;
    double gamma_sq_true = 0.0;
    bool variance_identity_pass = false;
};

struct RiskReport {
    std::vector<ModelRiskRow> rows;
    Eigen::Index N = 0;
    int R = 0;
    double variance_bound_max_ratio = 0.0;  // max over datasets/models of delta^2 / lambda_max(Phi_hat)
    bool all_pass() const;
};

RiskReport risk_decomposition_check(const TrueProcessSpec& spec,
                                    const std::vector<DesignMatrix>& models, Eigen::Index N,
                                    int R, std::uint64_t seed);

struct OracleReport {
    double theta = 0.0;
    double k_theta = 0.0;  // (2 + 8/theta)(1 + theta)
    double selected_risk = 0.0;
    double selected_se = 0.0;
    std::vector<double> model_risks;
    std::vector<double> model_ses;
    double min_model_risk = 0.0;
    double min_model_se = 0.0;
    double empirical_ratio = 0.0;  // selected / min, informational
    double variance_bound_max_ratio = 0.0;
    bool pass = false;  // selected <= K * min + 3 SE slack
};

OracleReport oracle_inequality_check(const TrueProcessSpec& spec,
                                     const std::vector<DesignMatrix>& models, double theta,
                                     Eigen::Index N, int R, std::uint64_t seed);

struct RatePoint {
    Eigen::Index N = 0;
    int m_max = 0;
    double mean_risk = 0.0;
    double se = 0.0;
};

struct RateReport {
    std::vector<RatePoint> points;
    double slope = 0.0;
    double target_slope = 0.0;
    double variance_bound_max_ratio = 0.0;
    bool saturation_flag = false;
    bool pass = false;
};

/// Selection risk across a grid of N values with nested prefix models up
/// to m_max(N); fits the log-log slope of the MC risk.
RateReport rate_check(const TrueProcessSpec& spec, const std::vector<double>& points,
                      const std::vector<Eigen::Index>& Ns, const std::vector<int>& m_max_per_N,
                      int R, double theta, double slope_lo, double slope_hi,
                      std::uint64_t seed);

enum class ErrorKind { gaussian, student_t };

struct ConcentrationPoint {
    double x = 0.0;
    double threshold = 0.0;
    double empirical_tail = 0.0;
};

struct ConcentrationReport {
    double delta_sq = 0.0;
    double gamma_sq = 0.0;
    double trace_A = 0.0;
    std::vector<ConcentrationPoint> points;
    double tail_slope = 0.0;  // log tail vs log x over points with mass
    double p = 0.0;
    bool pass = false;  // tail_slope <= -p/2 + 0.3
};

/// Tail behavior of zeta^2 = eps^T A eps for stacked i.i.d. errors with
/// covariance Phi. Thresholds follow the stated quantile expression
/// exactly; the asserted property is the slope of the tail.
ConcentrationReport concentration_check(const Matrix& phi, const Matrix& a_tilde,
                                        Eigen::Index N, double p, int R,
                                        const std::vector<double>& xs, ErrorKind kind,
                                        double t_dof, std::uint64_t seed);

}  // namespace covest
