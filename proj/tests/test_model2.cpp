#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "pairkin/model2_solver.hpp"

using namespace pairkin;

namespace {

Grid1D gaussian(double mean, double sd, double mass, std::size_t n, double lo, double hi) {
    return project_law(InitialLaw{InitialLaw::Kind::gaussian, mean, sd}, mass, lo, hi, n);
}

}  // namespace

TEST(GapExcessMoments, MatchesQuadrature) {
    // y = k + T with T triangular on [-1, 1]; y = |T| for k = 0.
    for (std::size_t k : {0u, 1u, 3u})
        for (double tau : {0.0, 0.3, 0.9, 1.7, 3.2}) {
            const auto e = detail::gap_excess_moments(k, tau);
            double m0 = 0.0, m1 = 0.0, m2 = 0.0;
            const int N = 200000;
            for (int q = 0; q < N; ++q) {
                const double t = -1.0 + (q + 0.5) * 2.0 / N;
                const double w = (1.0 - std::abs(t)) * 2.0 / N;
                const double y = k == 0 ? std::abs(t) : static_cast<double>(k) + t;
                const double x = y - tau;
                if (x <= 0.0) continue;
                m0 += w;
                m1 += w * x;
                m2 += w * x * x;
            }
            EXPECT_NEAR(e[0], m0, 1e-8) << k << " " << tau;
            EXPECT_NEAR(e[1], m1, 1e-8) << k << " " << tau;
            EXPECT_NEAR(e[2], m2, 1e-8) << k << " " << tau;
        }
}

TEST(TraceGbar, InitialTraceIsDiagonal) {
    const auto f = gaussian(0.0, 1.0, 1.0, 64, -5.0, 5.0);
    const auto g0 = tensor_square(gaussian(0.3, 0.8, 1.0, 64, -5.0, 5.0), 0.5);
    const auto tr = trace_gbar(g0, {f}, {0.0}, 0.0, Params{});
    for (std::size_t i = 0; i < f.n; ++i) EXPECT_DOUBLE_EQ(tr.values[i], g0.at(i, i));
}

TEST(TraceGbar, FreeTransportOfGaussian) {
    // g0 = N(0, s^2) (x) N(0, s^2): g0(t/2, -t/2) / g0(0, 0) = exp(-t^2 / (4 s^2)).
    const double s = 0.8;
    const std::size_t n = 256;
    const auto g0 = tensor_square(gaussian(0.0, s, 1.0, n, -5.0, 5.0));
    const Grid1D zero(-5.0, 5.0, n);
    const Params p{0.0, 1.0, 1.0};
    const std::size_t mid = n / 2;
    const auto t0 = trace_gbar(g0, {zero, zero}, {0.0, 2.0}, 0.0, p);
    const double base = 0.5 * (t0.values[mid] + t0.values[mid - 1]);
    for (double t : {0.5, 1.0, 1.5}) {
        const auto tr = trace_gbar(g0, {zero, zero}, {0.0, 2.0}, t, p);
        const double v = 0.5 * (tr.values[mid] + tr.values[mid - 1]);
        EXPECT_NEAR(v / base, std::exp(-t * t / (4.0 * s * s)), 5e-3) << t;
    }
}

TEST(TraceGbar, ConstantHistoryIntegral) {
    Grid1D f(-20.0, 20.0, 200);
    for (auto& v : f.values) v = 0.3;
    const Grid2D g0(-20.0, 20.0, 200);
    const Params p{2.0, 1.0, 1.0};
    std::vector<Grid1D> hist(11, f);
    std::vector<double> times;
    for (int k = 0; k <= 10; ++k) times.push_back(0.1 * k);
    const auto tr = trace_gbar(g0, hist, times, 1.0, p);
    for (std::size_t i = 50; i < 150; ++i) EXPECT_NEAR(tr.values[i], 2.0 * 1.0 * 0.09, 1e-12);
    // Off-node times interpolate the history linearly.
    const auto tr2 = trace_gbar(g0, hist, times, 0.55, p);
    EXPECT_NEAR(tr2.values[100], 2.0 * 0.55 * 0.09, 1e-12);
}

TEST(Model2Mild, NoCollisionsKeepFConstant) {
    const auto f0 = gaussian(0.0, 0.7, 1.0, 64, -5.0, 5.0);
    const Grid2D g0(-5.0, 5.0, 64);
    const auto run = solve_model2_mild(f0, g0, Params{0.0, 1.0, 1.0}, 1.0, 0.05);
    for (std::size_t i = 0; i < f0.n; ++i) EXPECT_NEAR(run.f.back().values[i], f0.values[i], 1e-15);
}

TEST(Model2Mild, MassConservationOrder) {
    auto drift = [](std::size_t n, double dt) {
        const auto f0 = gaussian(0.1, 0.6, 1.0, n, -5.0, 5.0);
        const Grid2D g0(-5.0, 5.0, n);
        const auto run = solve_model2_mild(f0, g0, Params{}, 1.0, dt, 1000000);
        double worst = 0.0;
        for (const auto& m : run.moments) worst = std::max(worst, std::abs(m.total_mass() - 1.0));
        return worst;
    };
    const double a = drift(64, 0.04), b = drift(128, 0.02);
    EXPECT_LT(b, 2e-3);
    EXPECT_GE(std::log2(a / b), 1.9) << a << " " << b;
}

TEST(Model2Mild, TotalVarianceNonincreasing) {
    const auto f0 = gaussian(0.0, 0.6, 1.0, 128, -5.0, 5.0);
    const Grid2D g0(-5.0, 5.0, 128);
    const auto run = solve_model2_mild(f0, g0, Params{}, 3.0, 0.02, 10);
    for (std::size_t k = 1; k < run.moments.size(); ++k)
        EXPECT_LE(run.moments[k].total_variance(), run.moments[k - 1].total_variance() + 1e-4);
    EXPECT_LT(run.moments.back().total_variance(), run.moments.front().total_variance());
}

TEST(Model2Mild, PairDensityAgreesWithMoments) {
    const auto f0 = gaussian(0.0, 0.6, 1.0, 96, -5.0, 5.0);
    const Grid2D g0(-5.0, 5.0, 96);
    const Params p;
    const auto run = solve_model2_mild(f0, g0, p, 0.5, 0.05);
    const auto g = model2_pair_density(run, g0, p, run.history_times.size() - 1);
    EXPECT_NEAR(g.mass(), run.moments.back().m_g, 5e-3);
    EXPECT_LE(g.asymmetry(), 1e-12);
}
