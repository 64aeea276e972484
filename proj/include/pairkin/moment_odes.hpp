#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "core.hpp"

namespace pairkin {

struct MomentTrajectory {
    std::vector<double> times;
    std::vector<MomentVector> states;
};

struct EquilibriumModel1 {
    double m_f_inf = 0.0;
    double m_g_inf = 0.0;
    double i_f_inf = 0.0;
    double i_g_inf = 0.0;
    double phi_inf = 0.0;
};

/// Fast pair moments on the layer time scale tau = t / epsilon.
struct LayerState {
    double m_g_hat = 0.0;
    double i_g_hat = 0.0;
    double v_g_hat = 0.0;
    double vbar_g_hat = 0.0;
};

/// Slow variables held fixed during the initial layer.
struct FrozenSlow {
    double m_f0 = 0.0;
    double i_f0 = 0.0;
    double v_f0 = 0.0;
    double phi_inf = 0.0;
};

/// Right-hand side of the rescaled moment system. The pair equations are
/// divided by epsilon; with epsilon = 1 this is the plain Model 1 system.
/// Variances are taken about `phi_inf`.
[[nodiscard]] inline MomentVector rescaled_moment_rhs(const MomentVector& x, const Params& p,
                                                      double phi_inf) {
    require(p.epsilon > 0.0, "epsilon must satisfy 0 < epsilon ≤ 1");
    const double lam = p.lambda;
    const double gam = p.gamma;
    const double inv_eps = 1.0 / p.epsilon;
    const double centred = x.i_f - phi_inf * x.m_f;

    MomentVector d;
    d.m_f = 2.0 * gam * x.m_g - 2.0 * lam * x.m_f * x.m_f;
    d.m_g = (lam * x.m_f * x.m_f - gam * x.m_g) * inv_eps;
    d.i_f = 2.0 * gam * x.i_g - 2.0 * lam * x.i_f * x.m_f;
    d.i_g = (lam * x.i_f * x.m_f - gam * x.i_g) * inv_eps;
    d.v_f = 2.0 * gam * x.v_g - 2.0 * lam * x.m_f * x.v_f;
    d.v_g = (lam * x.m_f * x.v_f - gam * x.v_g - 0.5 * x.vbar_g) * inv_eps;
    d.vbar_g = (2.0 * lam * x.m_f * x.v_f - (2.0 + gam) * x.vbar_g - 2.0 * lam * centred * centred) *
               inv_eps;
    return d;
}

[[nodiscard]] inline MomentVector moment_rhs_model1(const MomentVector& x, const Params& p,
                                                    double phi_inf) {
    Params unscaled = p;
    unscaled.epsilon = 1.0;
    return rescaled_moment_rhs(x, unscaled, phi_inf);
}

/// Conserved mean state of the rescaled system, where pairs carry mass epsilon * m_g.
[[nodiscard]] inline double rescaled_mean_state(const MomentVector& x, double epsilon) {
    const double m = x.m_f + 2.0 * epsilon * x.m_g;
    return m > 0.0 ? (x.i_f + 2.0 * epsilon * x.i_g) / m : 0.0;
}

/// Classical RK4 with n = ceil(t_end/dt) equal steps. Every `record_every`-th
/// state is stored, plus the final one.
[[nodiscard]] inline MomentTrajectory integrate_moments(const MomentVector& x0, const Params& p,
                                                        double t_end, double dt,
                                                        std::size_t record_every = 1) {
    p.validate();
    require(std::isfinite(dt) && dt > 0.0, "integrate_moments requires dt > 0");
    require(std::isfinite(t_end) && t_end >= 0.0, "integrate_moments requires t_end ≥ 0");
    for (std::size_t k = 0; k < MomentVector::size; ++k)
        require(std::isfinite(x0[k]), "integrate_moments requires finite initial moments");
    require(record_every >= 1, "record_every must be ≥ 1");

    const double phi_inf = rescaled_mean_state(x0, p.epsilon);
    const auto n = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-12));
    const double h = n > 0 ? t_end / static_cast<double>(n) : 0.0;

    MomentTrajectory traj;
    traj.times.push_back(0.0);
    traj.states.push_back(x0);
    MomentVector x = x0;
    for (std::size_t k = 1; k <= n; ++k) {
        const MomentVector k1 = rescaled_moment_rhs(x, p, phi_inf);
        const MomentVector k2 = rescaled_moment_rhs(x + (0.5 * h) * k1, p, phi_inf);
        const MomentVector k3 = rescaled_moment_rhs(x + (0.5 * h) * k2, p, phi_inf);
        const MomentVector k4 = rescaled_moment_rhs(x + h * k3, p, phi_inf);
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (k % record_every == 0 || k == n) {
            traj.times.push_back(k == n ? t_end : static_cast<double>(k) * h);
            traj.states.push_back(x);
        }
    }
    return traj;
}

/// Limits of the mass and first-moment components for total mass M and total
/// first moment I. For epsilon < 1 the pair moments are those of the rescaled
/// pair density, so m_f_inf + 2 epsilon m_g_inf = M.
[[nodiscard]] inline EquilibriumModel1 equilibrium_model1(const Params& p, double M, double I) {
    p.validate();
    require(std::isfinite(M) && M > 0.0, "equilibrium requires total mass M > 0");
    require(std::isfinite(I), "equilibrium requires a finite first moment");
    EquilibriumModel1 eq;
    eq.phi_inf = I / M;
    if (p.gamma == 0.0 && p.lambda > 0.0) {
        eq.m_f_inf = 0.0;
        eq.m_g_inf = 0.5 * M / p.epsilon;
    } else {
        const double kappa = p.lambda > 0.0 ? 2.0 * p.epsilon * p.lambda * M / p.gamma : 0.0;
        const double r = 1.0 + std::sqrt(1.0 + 4.0 * kappa);
        eq.m_f_inf = 2.0 * M / r;
        eq.m_g_inf = eq.m_f_inf * kappa / r / p.epsilon;
    }
    eq.i_f_inf = eq.phi_inf * eq.m_f_inf;
    eq.i_g_inf = eq.phi_inf * eq.m_g_inf;
    return eq;
}

struct MassSplit {
    double m_f_inf = 0.0;
    double m_g_inf = 0.0;
};

/// Conjectured Model 2 mass split 2 M_g = lambda M_f^2.
[[nodiscard]] inline MassSplit equilibrium_masses_model2(const Params& p, double M) {
    p.validate();
    require(std::isfinite(M) && M > 0.0, "equilibrium requires total mass M > 0");
    MassSplit s;
    s.m_f_inf = 2.0 * M / (1.0 + std::sqrt(1.0 + 4.0 * p.lambda * M));
    s.m_g_inf = 0.5 * (M - s.m_f_inf);
    return s;
}

[[nodiscard]] inline LayerState layer_rhs(const LayerState& y, const FrozenSlow& s,
                                          const Params& p) {
    const double lam = p.lambda;
    const double gam = p.gamma;
    const double centred = s.i_f0 - s.phi_inf * s.m_f0;
    LayerState d;
    d.m_g_hat = lam * s.m_f0 * s.m_f0 - gam * y.m_g_hat;
    d.i_g_hat = lam * s.i_f0 * s.m_f0 - gam * y.i_g_hat;
    d.v_g_hat = lam * s.m_f0 * s.v_f0 - gam * y.v_g_hat - 0.5 * y.vbar_g_hat;
    d.vbar_g_hat = 2.0 * lam * s.m_f0 * s.v_f0 - (2.0 + gam) * y.vbar_g_hat -
                   2.0 * lam * centred * centred;
    return d;
}

/// Steady state of the layer system.
[[nodiscard]] inline LayerState layer_steady_state(const FrozenSlow& s, const Params& p) {
    require(p.gamma > 0.0, "layer steady state requires gamma > 0");
    const double lam = p.lambda;
    const double gam = p.gamma;
    const double centred = s.i_f0 - s.phi_inf * s.m_f0;
    LayerState y;
    y.m_g_hat = lam * s.m_f0 * s.m_f0 / gam;
    y.i_g_hat = lam * s.i_f0 * s.m_f0 / gam;
    y.vbar_g_hat = (2.0 * lam * s.m_f0 * s.v_f0 - 2.0 * lam * centred * centred) / (2.0 + gam);
    y.v_g_hat = (lam * s.m_f0 * s.v_f0 - 0.5 * y.vbar_g_hat) / gam;
    return y;
}

struct StabilityReport {
    std::array<std::array<double, 3>, 3> matrix{};
    /// Monic characteristic polynomial s^3 + c[2] s^2 + c[1] s + c[0].
    std::array<double, 3> charpoly{};
    std::array<std::complex<double>, 3> eigenvalues{};
    double max_real_part = 0.0;
    double trace = 0.0;
    double determinant = 0.0;
    bool routh_hurwitz = false;
};

namespace detail {

inline double cubic_value(const std::array<double, 3>& c, double s) {
    return ((s + c[2]) * s + c[1]) * s + c[0];
}

/// One real root of the monic cubic via Cardano / trigonometric form,
/// polished with Newton steps.
inline double cubic_real_root(const std::array<double, 3>& c) {
    const double a = c[2], b = c[1], d = c[0];
    const double p = b - a * a / 3.0;
    const double q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + d;
    const double disc = 0.25 * q * q + p * p * p / 27.0;
    double t;
    if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        t = std::cbrt(-0.5 * q + sq) + std::cbrt(-0.5 * q - sq);
    } else {
        const double m = 2.0 * std::sqrt(-p / 3.0);
        const double arg = std::clamp(3.0 * q / (p * m), -1.0, 1.0);
        t = m * std::cos(std::acos(arg) / 3.0);
    }
    double s = t - a / 3.0;
    for (int it = 0; it < 8; ++it) {
        const double f = cubic_value(c, s);
        const double df = (3.0 * s + 2.0 * a) * s + b;
        if (df == 0.0) break;
        const double step = f / df;
        s -= step;
        if (std::abs(step) <= 1e-16 * (1.0 + std::abs(s))) break;
    }
    return s;
}

}  // namespace detail

/// Limiting coefficient matrix of the (V_f, V_g, Vbar_g) system at
/// M_f = m_f_inf, its eigenvalues and a Routh–Hurwitz check.
[[nodiscard]] inline StabilityReport stability_matrix(const Params& p, double m_f_inf) {
    p.validate();
    require(std::isfinite(m_f_inf) && m_f_inf > 0.0, "stability_matrix requires m_f_inf > 0");
    const double a = p.lambda * m_f_inf;
    const double g = p.gamma;

    StabilityReport r;
    r.matrix = {{{-2.0 * a, 2.0 * g, 0.0}, {a, -g, -0.5}, {2.0 * a, 0.0, -(2.0 + g)}}};
    const auto& A = r.matrix;
    r.trace = A[0][0] + A[1][1] + A[2][2];
    r.determinant = A[0][0] * (A[1][1] * A[2][2] - A[1][2] * A[2][1]) -
                    A[0][1] * (A[1][0] * A[2][2] - A[1][2] * A[2][0]) +
                    A[0][2] * (A[1][0] * A[2][1] - A[1][1] * A[2][0]);
    const double minors = (A[0][0] * A[1][1] - A[0][1] * A[1][0]) +
                          (A[0][0] * A[2][2] - A[0][2] * A[2][0]) +
                          (A[1][1] * A[2][2] - A[1][2] * A[2][1]);
    r.charpoly = {-r.determinant, minors, -r.trace};

    const double root = detail::cubic_real_root(r.charpoly);
    const double beta = r.charpoly[2] + root;
    const double delta = r.charpoly[1] + root * beta;
    const double disc = beta * beta - 4.0 * delta;
    r.eigenvalues[0] = root;
    if (disc >= 0.0) {
        const double q = -0.5 * (beta + std::copysign(std::sqrt(disc), beta));
        r.eigenvalues[1] = q;
        r.eigenvalues[2] = q != 0.0 ? delta / q : 0.0;
    } else {
        const double im = 0.5 * std::sqrt(-disc);
        r.eigenvalues[1] = {-0.5 * beta, im};
        r.eigenvalues[2] = {-0.5 * beta, -im};
    }
    r.max_real_part = std::max({r.eigenvalues[0].real(), r.eigenvalues[1].real(),
                                r.eigenvalues[2].real()});

    constexpr double margin = 1e-10;
    const auto& c = r.charpoly;
    r.routh_hurwitz = c[2] > margin && c[0] > margin && c[2] * c[1] - c[0] > margin;
    return r;
}

}  // namespace pairkin
