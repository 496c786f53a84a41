#pragma once

#include <string>
#include <vector>

#include "covest/estimator.hpp"

namespace covest {

/// Empirical covariance of vec(x_i x_i^T), an n^2 x n^2 matrix.
struct FourthMomentMatrix {
    Matrix phi;
    Eigen::Index n = 0;
    Eigen::Index N = 0;
    bool degenerate = false;  // N == 1: phi is identically zero
};

FourthMomentMatrix estimate_phi(const ObservationSet& obs);

/// Tr((Pi (x) Pi) Phi) without materializing the Kronecker product:
/// each column of (Pi (x) Pi) Phi is vec(Pi * mat(col) * Pi).
double trace_kron_projected(const Matrix& pi, const Matrix& phi);

/// delta_m^2 = Tr((Pi (x) Pi) Phi) / D_m. Requires D_m = Tr(Pi) >= 1.
double delta_sq(const Matrix& pi, const FourthMomentMatrix& phi);

/// Data-path variant of the same quantity:
/// Tr((Pi (x) Pi) Phi_hat) = (1/N) sum_i ||Pi (x_i x_i^T - S) Pi||^2.
double delta_sq_from_data(const Matrix& pi, const ObservationSet& obs,
                          const MomentEstimates& moments);

double penalty(double D_m, double delta_sq, double theta, Eigen::Index N);

enum class PenaltyMode { delta_m, lambda_max };

struct SelectionEntry {
    std::string model_id;
    int m = 0;
    double D = 0.0;
    double delta_sq = 0.0;
    double contrast = 0.0;
    double pen = 0.0;
    double criterion = 0.0;
    bool chosen = false;
};

struct SelectionResult {
    std::vector<SelectionEntry> table;
    int chosen_index = -1;
    CovarianceEstimate chosen;  // the final estimate Sigma-tilde
    bool tie_broken = false;
    double lambda_max_phi = 0.0;
    bool degenerate_penalty = false;  // N == 1 fallback
};

/// Penalized selection over a model collection. Fits every model,
/// computes L_N(Sigma_m) + pen(m) and takes the argmin; ties break toward
/// smaller D_m, then lexicographically smaller model id.
SelectionResult select(const ObservationSet& obs, const std::vector<DesignMatrix>& models,
                       double theta, PenaltyMode mode = PenaltyMode::delta_m,
                       std::optional<BasisFamily> family = std::nullopt);

/// Generic multidimensional regression layer: y_i in R^d, projectors P_m
/// on R^{Nd} with dimensions D_m, error covariance Phi (d x d).
struct GenericModel {
    std::string id;
    Matrix P;  // Nd x Nd projector
    double D = 0.0;
};

struct GenericSelection {
    int chosen_index = -1;
    Vector f_tilde;  // fitted vector in R^{Nd}
    std::vector<double> criteria;
};

GenericSelection generic_select(const Matrix& y, const std::vector<GenericModel>& models,
                                const Matrix& phi, double theta);

}  // namespace covest
