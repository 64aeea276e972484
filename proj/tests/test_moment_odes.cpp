#include <cmath>
#include <complex>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "pairkin/diagnostics.hpp"
#include "pairkin/moment_odes.hpp"

using namespace pairkin;

namespace {

MomentVector state(double mf, double mg, double i_f, double ig, double vf, double vg, double vb) {
    return {mf, mg, i_f, ig, vf, vg, vb};
}

// Root of 2 lambda m^2 / gamma + m = M by bisection.
double bisect_free_mass(double lambda, double gamma, double M) {
    double lo = 0.0, hi = M;
    for (int k = 0; k < 200; ++k) {
        const double mid = 0.5 * (lo + hi);
        (2.0 * lambda * mid * mid / gamma + mid > M ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

double max_eig_real(const StabilityReport& r) {
    Eigen::Matrix3d A;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) A(i, j) = r.matrix[i][j];
    Eigen::EigenSolver<Eigen::Matrix3d> es(A);
    return es.eigenvalues().real().maxCoeff();
}

}  // namespace

TEST(MomentRhs, EquilibriumIsFixedPoint) {
    const Params p;
    const auto d = moment_rhs_model1(state(0.5, 0.25, 0, 0, 0, 0, 0), p, 0.0);
    for (std::size_t k = 0; k < MomentVector::size; ++k) EXPECT_NEAR(d[k], 0.0, 1e-15);
}

TEST(MomentRhs, PureFreeMass) {
    const auto d = moment_rhs_model1(state(1, 0, 0, 0, 0, 0, 0), Params{}, 0.0);
    EXPECT_EQ(d.m_f, -2.0);
    EXPECT_EQ(d.m_g, 1.0);
    for (std::size_t k = 2; k < MomentVector::size; ++k) EXPECT_EQ(d[k], 0.0);
}

TEST(MomentRhs, VacuumIsFixedPoint) {
    const auto d = moment_rhs_model1(MomentVector{}, Params{}, 0.0);
    EXPECT_EQ(d, MomentVector{});
}

TEST(MomentRhs, ConservedCombinationsVanish) {
    const Params p{1.3, 0.7, 1.0};
    const auto x = state(0.8, 0.3, 0.2, -0.1, 0.9, 0.4, 0.6);
    const auto d = moment_rhs_model1(x, p, 0.1);
    EXPECT_NEAR(d.m_f + 2.0 * d.m_g, 0.0, 1e-15);
    EXPECT_NEAR(d.i_f + 2.0 * d.i_g, 0.0, 1e-15);
}

TEST(RescaledRhs, EpsilonOneMatchesPlain) {
    const Params p{1.3, 0.7, 1.0};
    const auto x = state(0.8, 0.3, 0.2, -0.1, 0.9, 0.4, 0.6);
    EXPECT_EQ(rescaled_moment_rhs(x, p, 0.1), moment_rhs_model1(x, p, 0.1));
}

TEST(RescaledRhs, FastPartScalesWithInverseEpsilon) {
    const Params p1{1.3, 0.7, 1.0};
    Params p2 = p1;
    p2.epsilon = 0.1;
    const auto x = state(0.8, 0.3, 0.2, -0.1, 0.9, 0.4, 0.6);
    const auto a = rescaled_moment_rhs(x, p1, 0.1);
    const auto b = rescaled_moment_rhs(x, p2, 0.1);
    for (std::size_t k : {0u, 2u, 4u}) EXPECT_EQ(a[k], b[k]);
    for (std::size_t k : {1u, 3u, 5u, 6u}) EXPECT_NEAR(b[k], 10.0 * a[k], 1e-13 * (1 + std::abs(b[k])));
}

TEST(RescaledRhs, QuasiSteadyFastVariables) {
    for (double eps : {1.0, 0.3, 0.01}) {
        const Params p{1.2, 0.8, eps};
        const double mf = 0.7, i_f = 0.15, vf = 0.9, phi = 0.05;
        const double lam = p.lambda, gam = p.gamma;
        const double c = i_f - phi * mf;
        MomentVector x;
        x.m_f = mf;
        x.i_f = i_f;
        x.v_f = vf;
        x.m_g = lam * mf * mf / gam;
        x.i_g = lam * i_f * mf / gam;
        x.vbar_g = (2.0 * lam * mf * vf - 2.0 * lam * c * c) / (2.0 + gam);
        x.v_g = (lam * mf * vf - 0.5 * x.vbar_g) / gam;
        const auto d = rescaled_moment_rhs(x, p, phi);
        for (std::size_t k : {1u, 3u, 5u, 6u}) EXPECT_NEAR(d[k], 0.0, 1e-13);
    }
}

TEST(IntegrateMoments, ConvergesToClosedForm) {
    const auto traj = integrate_moments(state(1, 0, 0, 0, 0, 0, 0), Params{}, 50.0, 1e-3, 1000);
    EXPECT_NEAR(traj.states.back().m_f, 0.5, 1e-8);
    EXPECT_NEAR(traj.states.back().m_g, 0.25, 1e-8);
    EXPECT_EQ(traj.times.back(), 50.0);
    for (std::size_t k = 1; k < traj.times.size(); ++k) EXPECT_GT(traj.times[k], traj.times[k - 1]);
}

TEST(IntegrateMoments, EquilibriumStaysConstant) {
    const auto x0 = state(0.5, 0.25, 0, 0, 0, 0, 0);
    const auto traj = integrate_moments(x0, Params{}, 5.0, 0.01);
    for (const auto& x : traj.states)
        for (std::size_t k = 0; k < MomentVector::size; ++k) EXPECT_NEAR(x[k], x0[k], 1e-15);
}

TEST(IntegrateMoments, VarianceDecaysAndIsMonotone) {
    const auto traj = integrate_moments(state(1, 0, 0, 0, 1, 0, 0), Params{}, 60.0, 1e-2, 10);
    EXPECT_LE(traj.states.back().total_variance(), 1e-4);
    for (std::size_t k = 1; k < traj.states.size(); ++k)
        EXPECT_LE(traj.states[k].total_variance(), traj.states[k - 1].total_variance() + 1e-15);
    std::vector<double> t, v;
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        t.push_back(traj.times[k]);
        const auto& x = traj.states[k];
        v.push_back(x.v_f + x.v_g + x.vbar_g);
    }
    // The tail decays at the slowest linearised rate around the equilibrium.
    const double slow = -max_eig_real(stability_matrix(Params{}, 0.5));
    EXPECT_NEAR(fit_decay_rate(t, v, 30.0, 60.0).rate, slow, 1e-2 * slow);
}

TEST(IntegrateMoments, ConservationToRoundoff) {
    const Params p{2.0, 0.5, 1.0};
    const auto x0 = state(0.6, 0.2, 0.3, -0.05, 1.1, 0.3, 0.4);
    const auto traj = integrate_moments(x0, p, 20.0, 1e-3, 100);
    for (const auto& x : traj.states) {
        EXPECT_NEAR(x.total_mass(), x0.total_mass(), 1e-12 * (1 + x0.total_mass()));
        EXPECT_NEAR(x.total_first_moment(), x0.total_first_moment(), 1e-12 * (1 + x0.total_mass()));
    }
}

TEST(IntegrateMoments, FourthOrderSelfConvergence) {
    const Params p{1.5, 0.8, 1.0};
    const auto x0 = state(1, 0, 0.4, 0, 1, 0, 0);
    auto final_state = [&](double dt) { return integrate_moments(x0, p, 2.0, dt).states.back(); };
    const auto a = final_state(0.1), b = final_state(0.05), c = final_state(0.025);
    double e1 = 0.0, e2 = 0.0;
    for (std::size_t k = 0; k < MomentVector::size; ++k) {
        e1 = std::max(e1, std::abs(a[k] - b[k]));
        e2 = std::max(e2, std::abs(b[k] - c[k]));
    }
    EXPECT_GE(std::log2(e1 / e2), 3.9);
}

TEST(IntegrateMoments, RejectsBadInputs) {
    EXPECT_THROW((void)integrate_moments(MomentVector{}, Params{}, 1.0, 0.0), Error);
    EXPECT_THROW((void)integrate_moments(state(std::nan(""), 0, 0, 0, 0, 0, 0), Params{}, 1.0, 0.1), Error);
}

TEST(EquilibriumModel1, ClosedFormExamples) {
    auto eq = equilibrium_model1(Params{}, 1.0, 0.0);
    EXPECT_DOUBLE_EQ(eq.m_f_inf, 0.5);
    EXPECT_DOUBLE_EQ(eq.m_g_inf, 0.25);
    EXPECT_EQ(eq.i_f_inf, 0.0);
    EXPECT_EQ(eq.i_g_inf, 0.0);
    EXPECT_EQ(eq.phi_inf, 0.0);
    eq = equilibrium_model1(Params{}, 1.0, 0.5);
    EXPECT_DOUBLE_EQ(eq.phi_inf, 0.5);
    EXPECT_DOUBLE_EQ(eq.i_f_inf, 0.25);
    EXPECT_DOUBLE_EQ(eq.i_g_inf, 0.125);
    EXPECT_THROW((void)equilibrium_model1(Params{}, 0.0, 0.0), Error);
}

TEST(EquilibriumModel1, InvariantsAgainstBisection) {
    for (double lam : {0.25, 1.0, 3.0})
        for (double gam : {0.3, 1.0, 4.0})
            for (double M : {0.5, 1.0, 2.5}) {
                const Params p{lam, gam, 1.0};
                const auto eq = equilibrium_model1(p, M, 0.3 * M);
                EXPECT_NEAR(eq.m_f_inf, bisect_free_mass(lam, gam, M), 1e-13);
                EXPECT_LE(std::abs(eq.m_f_inf + 2.0 * eq.m_g_inf - M), 8 * 2.2e-16 * M);
                EXPECT_NEAR(lam * eq.m_f_inf * eq.m_f_inf, gam * eq.m_g_inf, 1e-12 * gam * eq.m_g_inf);
                EXPECT_NEAR(eq.i_f_inf / eq.m_f_inf, eq.phi_inf, 1e-12);
                EXPECT_NEAR(eq.i_g_inf / eq.m_g_inf, eq.phi_inf, 1e-12);
            }
}

TEST(EquilibriumModel1, RescaledMatchesLongIntegration) {
    const Params p{1.0, 1.0, 0.2};
    const auto x0 = state(1, 0, 0.2, 0, 0, 0, 0);
    const auto traj = integrate_moments(x0, p, 40.0, 2e-3, 1000);
    const auto eq = equilibrium_model1(p, 1.0, 0.2);
    EXPECT_NEAR(traj.states.back().m_f, eq.m_f_inf, 1e-9);
    EXPECT_NEAR(traj.states.back().m_g, eq.m_g_inf, 1e-9);
}

TEST(EquilibriumModel2, ClosedForm) {
    auto s = equilibrium_masses_model2(Params{2.0, 1.0, 1.0}, 1.0);
    EXPECT_DOUBLE_EQ(s.m_f_inf, 0.5);
    EXPECT_DOUBLE_EQ(s.m_g_inf, 0.25);
    s = equilibrium_masses_model2(Params{0.75, 1.0, 1.0}, 1.0);
    EXPECT_NEAR(s.m_f_inf, 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(s.m_g_inf, 1.0 / 6.0, 1e-15);
    EXPECT_NEAR(2.0 * s.m_g_inf, 0.75 * s.m_f_inf * s.m_f_inf, 1e-15);
    s = equilibrium_masses_model2(Params{1e-12, 1.0, 1.0}, 1.0);
    EXPECT_NEAR(s.m_f_inf, 1.0, 1e-11);
    EXPECT_THROW((void)equilibrium_masses_model2(Params{}, -1.0), Error);
}

TEST(Layer, SteadyStateIsFixedPoint) {
    const Params p{1.4, 0.6, 1.0};
    const FrozenSlow s{0.8, 0.1, 0.7, 0.05};
    const auto y = layer_steady_state(s, p);
    const auto d = layer_rhs(y, s, p);
    EXPECT_NEAR(d.m_g_hat, 0.0, 1e-14);
    EXPECT_NEAR(d.i_g_hat, 0.0, 1e-14);
    EXPECT_NEAR(d.v_g_hat, 0.0, 1e-14);
    EXPECT_NEAR(d.vbar_g_hat, 0.0, 1e-14);
}

TEST(Layer, Examples) {
    auto d = layer_rhs(LayerState{}, FrozenSlow{1.0, 0.0, 0.0, 0.0}, Params{});
    EXPECT_EQ(d.m_g_hat, 1.0);
    d = layer_rhs(LayerState{}, FrozenSlow{}, Params{});
    EXPECT_EQ(d.m_g_hat, 0.0);
    EXPECT_EQ(d.i_g_hat, 0.0);
    EXPECT_EQ(d.v_g_hat, 0.0);
    EXPECT_EQ(d.vbar_g_hat, 0.0);
}

TEST(Stability, UnitParameters) {
    const auto r = stability_matrix(Params{}, 0.5);
    const double expected[3][3] = {{-1, 2, 0}, {0.5, -1, -0.5}, {1, 0, -3}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) EXPECT_EQ(r.matrix[i][j], expected[i][j]);
    EXPECT_DOUBLE_EQ(r.trace, -5.0);
    EXPECT_DOUBLE_EQ(r.determinant, -1.0);
    EXPECT_LT(r.max_real_part, 0.0);
    EXPECT_TRUE(r.routh_hurwitz);
    EXPECT_NEAR(r.max_real_part, max_eig_real(r), 1e-10);
    EXPECT_THROW((void)stability_matrix(Params{}, 0.0), Error);
}

TEST(Stability, SweepAgainstEigenOracle) {
    for (double lam = 0.25; lam <= 4.0; lam *= 2.0)
        for (double gam = 0.25; gam <= 4.0; gam *= 2.0) {
            const Params p{lam, gam, 1.0};
            const auto eq = equilibrium_model1(p, 1.0, 0.0);
            const auto r = stability_matrix(p, eq.m_f_inf);
            EXPECT_NEAR(r.max_real_part, max_eig_real(r), 1e-9);
            EXPECT_LT(r.max_real_part, -1e-6);
            EXPECT_TRUE(r.routh_hurwitz);
        }
}

TEST(Stability, LargeGammaSlowModeApproachesZero) {
    // With a fixed, the slow eigenvalue tends to zero from below as gamma grows.
    double previous = -1e300;
    for (double gam : {10.0, 100.0, 1000.0}) {
        const auto r = stability_matrix(Params{1.0, gam, 1.0}, 0.5);
        EXPECT_NEAR(r.max_real_part, max_eig_real(r), 1e-8 * gam);
        EXPECT_LT(r.max_real_part, 0.0);
        EXPECT_GT(r.max_real_part, previous);
        previous = r.max_real_part;
    }
}
