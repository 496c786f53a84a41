// Timing comparison of the OpenMP replication loops against the serial
// reference implementations, plus an agreement check.

#include <chrono>
#include <cstdio>
#include <functional>

#include "covest/estimator.hpp"
#include "covest/rng.hpp"
#include "covest/selection.hpp"

using namespace covest;

namespace {

double seconds(const std::function<void()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(t1 - t0).count();
}

}  // namespace

int main() {
    const Eigen::Index N = 200000, n = 24;
    ObservationSet obs;
    obs.points.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) obs.points[j] = (j + 0.5) / static_cast<double>(n);
    obs.data.resize(N, n);
    for (Eigen::Index i = 0; i < N; ++i) {
        auto eng = make_engine(7, 0, static_cast<std::uint64_t>(i));
        std::normal_distribution<double> normal(0.0, 1.0);
        for (Eigen::Index j = 0; j < n; ++j) obs.data(i, j) = normal(eng);
    }

    MomentEstimates par, ser;
    const double t_par = seconds([&] { par = sample_second_moment(obs); });
    const double t_ser = seconds([&] { ser = serial::sample_second_moment(obs); });
    const double diff = (par.S - ser.S).norm() / ser.S.norm();

    std::printf("sample_second_moment  N=%lld n=%lld\n", static_cast<long long>(N),
                static_cast<long long>(n));
    std::printf("  parallel: %8.4f s\n", t_par);
    std::printf("  serial:   %8.4f s  (speedup %.2fx)\n", t_ser, t_ser / t_par);
    std::printf("  relative difference: %.3e\n", diff);
    return diff < 1e-12 ? 0 : 1;
}
