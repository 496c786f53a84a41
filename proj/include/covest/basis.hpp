#pragma once

#include <string>
#include <vector>

#include "covest/matrix_kernels.hpp"

namespace covest {

enum class BasisKind { fourier, polynomial, haar };

BasisKind basis_kind_from_string(const std::string& s);
std::string to_string(BasisKind k);

/// A family of orthonormal functions on the interval [a, b], indexed
/// lambda = 1..max_size.
struct BasisFamily {
    BasisKind kind = BasisKind::fourier;
    double a = 0.0;
    double b = 1.0;
    int max_size = 64;
};

struct ModelSpec {
    std::string id;
    std::vector<int> indices;  // distinct, nonempty, 1-based

    int size() const { return static_cast<int>(indices.size()); }
};

struct DesignMatrix {
    Matrix G;  // n x m, G(j, slot) = g_{indices[slot]}(points[j])
    std::vector<double> points;
    ModelSpec model;
};

/// g_lambda(t) for the family. Fourier: constant, then cos/sin pairs.
/// Polynomial: shifted Legendre. Haar: constant first, then wavelets in
/// dyadic (scale, location) order. All normalized to unit L2 norm on [a,b].
double evaluate_basis(const BasisFamily& family, int lambda, double t);

DesignMatrix design_matrix(const BasisFamily& family, const ModelSpec& model,
                           const std::vector<double>& points);

/// Evaluation vector G_t = (g_lambda(t), lambda in model).
Vector basis_vector(const BasisFamily& family, const ModelSpec& model, double t);

/// Nested prefix models {1..m} for each size in `sizes` (strictly increasing).
std::vector<ModelSpec> nested_model_family(const BasisFamily& family,
                                           const std::vector<int>& sizes);

}  // namespace covest
