#include "covest/basis.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace covest {

BasisKind basis_kind_from_string(const std::string& s) {
    if (s == "fourier") return BasisKind::fourier;
    if (s == "polynomial") return BasisKind::polynomial;
    if (s == "haar") return BasisKind::haar;
    throw std::invalid_argument("unknown basis kind: " + s);
}

std::string to_string(BasisKind k) {
    switch (k) {
        case BasisKind::fourier: return "fourier";
        case BasisKind::polynomial: return "polynomial";
        case BasisKind::haar: return "haar";
    }
    return "?";
}

namespace {

double legendre_p(int degree, double u) {
    // Bonnet recurrence on [-1, 1].
    if (degree == 0) return 1.0;
    if (degree == 1) return u;
    double pm2 = 1.0, pm1 = u, p = u;
    for (int k = 2; k <= degree; ++k) {
        p = ((2.0 * k - 1.0) * u * pm1 - (k - 1.0) * pm2) / k;
        pm2 = pm1;
        pm1 = p;
    }
    return p;
}

double haar_mother(double u) {
    if (u < 0.0 || u >= 1.0) return 0.0;
    return u < 0.5 ? 1.0 : -1.0;
}

}  // namespace

double evaluate_basis(const BasisFamily& family, int lambda, double t) {
    if (!(family.b > family.a)) throw std::invalid_argument("degenerate basis domain");
    if (lambda < 1 || lambda > family.max_size)
        throw std::out_of_range("basis index out of range");
    if (t < family.a || t > family.b)
        throw std::domain_error("point outside basis domain");

    const double len = family.b - family.a;
    const double u = (t - family.a) / len;  // in [0, 1]

    switch (family.kind) {
        case BasisKind::fourier: {
            if (lambda == 1) return 1.0 / std::sqrt(len);
            const int k = lambda / 2;
            const double arg = 2.0 * M_PI * k * u;
            const double amp = std::sqrt(2.0 / len);
            return (lambda % 2 == 0) ? amp * std::cos(arg) : amp * std::sin(arg);
        }
        case BasisKind::polynomial: {
            const int degree = lambda - 1;
            const double norm = std::sqrt((2.0 * degree + 1.0) / len);
            return norm * legendre_p(degree, 2.0 * u - 1.0);
        }
        case BasisKind::haar: {
            if (lambda == 1) return 1.0 / std::sqrt(len);
            // lambda >= 2: scale j = floor(log2(lambda - 1)), location k.
            const int idx = lambda - 1;
            int j = 0;
            while ((1 << (j + 1)) <= idx) ++j;
            const int k = idx - (1 << j);
            const double scale = std::pow(2.0, 0.5 * j);
            // u == 1 falls in the closing half of the last wavelet.
            const double arg = (u >= 1.0 && k == (1 << j) - 1) ? std::nextafter(1.0, 0.0)
                                                               : u;
            return scale * haar_mother(std::ldexp(arg, j) - k) / std::sqrt(len);
        }
    }
    throw std::logic_error("unreachable");
}

Vector basis_vector(const BasisFamily& family, const ModelSpec& model, double t) {
    Vector g(model.size());
    for (int s = 0; s < model.size(); ++s) g(s) = evaluate_basis(family, model.indices[s], t);
    return g;
}

DesignMatrix design_matrix(const BasisFamily& family, const ModelSpec& model,
                           const std::vector<double>& points) {
    if (points.empty()) throw std::invalid_argument("design_matrix: empty points list");
    if (model.indices.empty()) throw std::invalid_argument("design_matrix: empty model");
    std::set<int> uniq(model.indices.begin(), model.indices.end());
    if (static_cast<int>(uniq.size()) != model.size())
        throw std::invalid_argument("design_matrix: duplicate basis indices");

    DesignMatrix d;
    d.points = points;
    d.model = model;
    d.G.resize(static_cast<Eigen::Index>(points.size()), model.size());
    for (std::size_t j = 0; j < points.size(); ++j) {
        for (int s = 0; s < model.size(); ++s) {
            try {
                d.G(static_cast<Eigen::Index>(j), s) =
                    evaluate_basis(family, model.indices[s], points[j]);
            } catch (const std::domain_error&) {
                throw std::domain_error("point " + std::to_string(j + 1) +
                                        " outside basis domain");
            }
        }
    }
    return d;
}

std::vector<ModelSpec> nested_model_family(const BasisFamily& family,
                                           const std::vector<int>& sizes) {
    std::vector<ModelSpec> models;
    int prev = 0;
    for (int m : sizes) {
        if (m <= prev) throw std::invalid_argument("nested_model_family: sizes must be strictly increasing");
        if (m > family.max_size) throw std::invalid_argument("nested_model_family: size exceeds max_size");
        ModelSpec spec;
        spec.id = "m" + std::to_string(m);
        spec.indices.resize(m);
        for (int i = 0; i < m; ++i) spec.indices[i] = i + 1;
        models.push_back(std::move(spec));
        prev = m;
    }
    return models;
}

}  // namespace covest
