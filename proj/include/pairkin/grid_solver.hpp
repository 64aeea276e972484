#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <string>
#include <vector>

#include "core.hpp"
#include "detail/anti_diagonal.hpp"
#include "grid.hpp"
#include "moment_odes.hpp"

namespace pairkin {

/// e^{(1-gamma)t/eps} g(Phi^{-t/eps}, Phi_*^{-t/eps}): the flow runs at speed
/// 1/epsilon, so epsilon = 1 gives the unscaled semigroup.
[[nodiscard]] inline Grid2D transport_semigroup_model1(const Grid2D& g, double t, const Params& p) {
    p.validate();
    require(std::isfinite(t) && t >= 0.0, "transport requires t ≥ 0");
    if (t == 0.0) return g;
    const double tau = t / p.epsilon;
    return remap_model1(g, std::exp(-tau), std::exp(-p.gamma * tau));
}

struct Model1Trajectory {
    std::vector<double> times;
    std::vector<Grid1D> f;
    std::vector<Grid2D> g;
    std::vector<MomentVector> moments;
    double phi_inf = 0.0;
    std::size_t max_iterations = 0;
    std::vector<std::string> warnings;
};

namespace detail {

inline double l1_change(const std::vector<double>& a, const std::vector<double>& b, double w) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += std::abs(a[k] - b[k]);
    return s * w;
}

inline void check_boundary(const Grid1D& f, const Grid2D& g, double t, double total,
                           std::vector<std::string>& warnings) {
    const double edge = boundary_mass(f) + 2.0 * boundary_mass(g);
    if (total > 0.0 && edge > 1e-8 * total) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "boundary mass %.3e exceeds 1e-8 of the total at t = %.6g",
                      edge, t);
        if (warnings.empty() || warnings.back().rfind("boundary mass", 0) != 0)
            warnings.emplace_back(buf);
    }
}

}  // namespace detail

/// Model 1 on a grid through its mild formulation.
///
/// Per step h: g^n = S(h)(g^{n-1} + (lambda h / 2 eps) q^{n-1}) + (lambda h / 2 eps) q^n with
/// q = f (x) f; f^n = F(0, t_n) f0 + 2 gamma B^n where B accumulates the marginal of g
/// against F(s, t) by the trapezoid rule. The coupled update for step n is solved by
/// Picard iteration to 1e-10 in grid-L1 (cap 50).
[[nodiscard]] inline Model1Trajectory picard_solve_model1(const Grid1D& f0, const Grid2D& g0,
                                                          const Params& p, double t_end, double dt,
                                                          std::size_t record_every = 1) {
    p.validate();
    f0.validate();
    require(g0.n == f0.n && g0.lo == f0.lo && g0.hi == f0.hi,
            "f0 and g0 must share the grid layout");
    require(std::isfinite(dt) && dt > 0.0, "picard_solve_model1 requires dt > 0");
    require(std::isfinite(t_end) && t_end >= 0.0, "picard_solve_model1 requires t_end ≥ 0");
    require(record_every >= 1, "record_every must be ≥ 1");
    double gmax = 0.0;
    for (double v : g0.values) gmax = std::max(gmax, std::abs(v));
    require(g0.asymmetry() <= 1e-12 * std::max(1.0, gmax), "g0 must be symmetric");

    const std::size_t n = f0.n;
    const double h1 = f0.dx();
    const double h2 = h1 * h1;
    const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-12));
    const double h = steps > 0 ? t_end / static_cast<double>(steps) : 0.0;
    const double src = p.lambda * h / (2.0 * p.epsilon);
    const double tau = h / p.epsilon;
    const double scale = std::exp(-tau);
    const double decay = std::exp(-p.gamma * tau);

    Model1Trajectory out;
    const MomentVector m0 = moments_of(f0, g0, 0.0);
    const double total_mass = m0.m_f + 2.0 * p.epsilon * m0.m_g;
    out.phi_inf = rescaled_mean_state(m0, p.epsilon);
    auto record = [&](double t, const Grid1D& f, const Grid2D& g) {
        out.times.push_back(t);
        out.f.push_back(f);
        out.g.push_back(g);
        out.moments.push_back(moments_of(f, g, out.phi_inf));
        detail::check_boundary(f, g, t, total_mass, out.warnings);
    };

    Grid1D f = f0;
    Grid2D g = g0;
    Grid1D B(f0.lo, f0.hi, n);
    Grid1D marg = marginal(g);
    double m_f = f.mass();
    double F_cum = 1.0;
    record(0.0, f, g);

    Grid2D pred(f0.lo, f0.hi, n);
    for (std::size_t step = 1; step <= steps; ++step) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                pred.at(i, j) = g.at(i, j) + src * f.values[i] * f.values[j];
        const Grid2D transported = remap_model1(pred, scale, decay);

        Grid1D f_new = f;
        Grid2D g_new = transported;
        Grid1D marg_new(f0.lo, f0.hi, n);
        Grid1D B_new(f0.lo, f0.hi, n);
        double m_f_new = m_f;
        double F_step = 1.0;
        bool converged = false;
        for (std::size_t it = 1; it <= 50; ++it) {
            const Grid1D f_prev = f_new;
            const Grid2D g_prev = g_new;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    g_new.at(i, j) = transported.at(i, j) + src * f_new.values[i] * f_new.values[j];
            marg_new = marginal(g_new);
            m_f_new = f_new.mass();
            F_step = std::exp(-p.lambda * h * (m_f + m_f_new));
            for (std::size_t i = 0; i < n; ++i) {
                B_new.values[i] = F_step * (B.values[i] + 0.5 * h * marg.values[i]) +
                                  0.5 * h * marg_new.values[i];
                f_new.values[i] = F_cum * F_step * f0.values[i] + 2.0 * p.gamma * B_new.values[i];
            }
            const double change = detail::l1_change(f_new.values, f_prev.values, h1) +
                                  detail::l1_change(g_new.values, g_prev.values, h2);
            out.max_iterations = std::max(out.max_iterations, it);
            if (change < 1e-10) {
                converged = true;
                break;
            }
        }
        if (!converged)
            throw Error("Picard iteration did not converge within 50 iterations at step " +
                        std::to_string(step) + "; reduce dt");
        // Refresh the derived quantities from the converged f.
        m_f_new = f_new.mass();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                g_new.at(i, j) = transported.at(i, j) + src * f_new.values[i] * f_new.values[j];
        marg_new = marginal(g_new);

        F_cum *= F_step;
        f = std::move(f_new);
        g = std::move(g_new);
        B = std::move(B_new);
        marg = std::move(marg_new);
        m_f = m_f_new;
        if (step % record_every == 0 || step == steps)
            record(step == steps ? t_end : static_cast<double>(step) * h, f, g);
    }
    return out;
}

/// Quasi-stationary pair density lambda * int_0^inf e^{(1-gamma)s} f(Phi^{-s}) f(Phi_*^{-s}) ds.
///
/// Each cell of f (x) f is treated as a point source at its centre; its path
/// towards the diagonal is integrated exactly, depositing
/// lambda f_i f_j (u_hi^gamma - u_lo^gamma) / gamma into every cell it crosses,
/// where u = e^{-s} is the remaining gap fraction. The result has mass
/// lambda M_f^2 / gamma up to rounding; `tol` is validated but no truncation is needed.
[[nodiscard]] inline Grid2D quasistationary_g(const Grid1D& f, const Params& p, double tol = 1e-10) {
    p.validate();
    f.validate();
    require(tol > 0.0, "quasistationary_g requires tol > 0");
    require(p.gamma > 0.0, "quasistationary_g requires gamma > 0");
    const std::size_t n = f.n;
    Grid2D out(f.lo, f.hi, n);
    const double scale = p.lambda / p.gamma;
    detail::HalfLine half;
    std::vector<double> src, dep;
    for (std::size_t k = 0; k + 1 < 2 * n; ++k) {
        const auto geo = detail::line_geometry(n, k);
        detail::set_edges(half, geo);
        src.assign(geo.length, 0.0);
        for (std::size_t c = 0; c < geo.length; ++c) {
            const auto [i, j] = detail::cell_of(k, geo, c, false);
            src[c] = f.values[i] * f.values[j] * half.width(c);
        }
        dep.assign(geo.length, 0.0);
        for (std::size_t c = 0; c < geo.length; ++c) {
            if (src[c] == 0.0) continue;
            const double d = half.centre(c);
            double prev = 0.0;
            for (std::size_t t = 0; t <= c; ++t) {
                const double u_hi = std::min(1.0, half.edges[t + 1] / d);
                const double cdf = std::pow(u_hi, p.gamma);
                dep[t] += src[c] * (cdf - prev);
                prev = cdf;
                if (u_hi >= 1.0) break;
            }
        }
        // Both half-lines carry identical data since f (x) f is symmetric.
        for (std::size_t c = 0; c < geo.length; ++c) {
            const auto [i, j] = detail::cell_of(k, geo, c, false);
            if (geo.even && c == 0) {
                out.at(i, j) = scale * 2.0 * dep[0];
                continue;
            }
            out.at(i, j) = scale * dep[c];
            out.at(j, i) = scale * dep[c];
        }
    }
    return out;
}

namespace detail {

/// Cell offsets and weights of a particle moving from its own cell towards a
/// partner k cells away, with remaining gap fraction u distributed as u^gamma.
/// Pieces of the path are placed at their exact centroid and split between
/// neighbouring cells, so weights sum to one and the mean offset is exact.
inline std::vector<std::vector<double>> q1_tables(std::size_t n, double gamma) {
    std::vector<std::vector<double>> table(n);
    for (std::size_t k = 1; k < n; ++k) {
        const double kk = static_cast<double>(k);
        std::vector<double> w(k / 2 + 3, 0.0);
        auto deposit = [&](double offset, double mass) {
            const double fl = std::floor(offset);
            const auto a = static_cast<std::size_t>(fl);
            const double t = offset - fl;
            w[a] += (1.0 - t) * mass;
            if (t > 0.0) w[a + 1] += t * mass;
        };
        if (gamma == 0.0) {
            deposit(0.5 * kk, 1.0);
        } else {
            for (std::size_t r = 0;; ++r) {
                const double rr = static_cast<double>(r);
                const double u_hi = std::min(1.0, 1.0 - (2.0 * rr - 1.0) / kk);
                const double u_lo = std::max(0.0, 1.0 - (2.0 * rr + 1.0) / kk);
                if (u_hi <= 0.0) break;
                const double mass = std::pow(u_hi, gamma) - std::pow(u_lo, gamma);
                if (mass > 0.0) {
                    const double mean_u = gamma / (gamma + 1.0) *
                                          (std::pow(u_hi, gamma + 1.0) - std::pow(u_lo, gamma + 1.0)) /
                                          mass;
                    deposit(0.5 * kk * (1.0 - mean_u), mass);
                }
                if (u_lo <= 0.0) break;
            }
        }
        table[k] = std::move(w);
    }
    return table;
}

}  // namespace detail

/// Q1(f, f) as a density rate, from the weak form with cell indicator test
/// functions. Ordered pairs (i, j) lose 2 lambda f_i f_j dx^2 at i and regain it
/// along the segment from x_i to the midpoint.
[[nodiscard]] inline Grid1D apply_q1(const Grid1D& f, const Params& p) {
    p.validate();
    f.validate();
    const std::size_t n = f.n;
    const double h = f.dx();
    Grid1D q(f.lo, f.hi, n);
    const auto table = detail::q1_tables(n, p.gamma);
    std::vector<double> gain(n, 0.0);
    double m_f = 0.0;
    for (double v : f.values) m_f += v * h;
    for (std::size_t i = 0; i < n; ++i) {
        const double fi = f.values[i];
        if (fi == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i || f.values[j] == 0.0) continue;
            const double w = 2.0 * p.lambda * fi * f.values[j] * h * h;
            const std::size_t k = i > j ? i - j : j - i;
            const auto& tab = table[k];
            if (j < i) {
                for (std::size_t o = 0; o < tab.size() && o <= i; ++o) gain[i - o] += w * tab[o];
            } else {
                for (std::size_t o = 0; o < tab.size() && i + o < n; ++o) gain[i + o] += w * tab[o];
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double loss = 2.0 * p.lambda * f.values[i] * h * (m_f - f.values[i] * h);
        q.values[i] = (gain[i] - loss) / h;
    }
    return q;
}

/// Q2(f, f) as a density rate: ordered pairs move the first partner to the
/// midpoint cell, split half/half when the midpoint lies on a cell edge.
[[nodiscard]] inline Grid1D apply_q2(const Grid1D& f, const Params& p) {
    p.validate();
    f.validate();
    const std::size_t n = f.n;
    const double h = f.dx();
    std::vector<double> sums(2 * n - 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (f.values[i] == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j) sums[i + j] += f.values[i] * f.values[j];
    }
    double m_f = 0.0;
    for (double v : f.values) m_f += v * h;
    Grid1D q(f.lo, f.hi, n);
    for (std::size_t l = 0; l < n; ++l) {
        double s = sums[2 * l];
        if (l > 0) s += 0.5 * sums[2 * l - 1];
        if (2 * l + 1 < sums.size()) s += 0.5 * sums[2 * l + 1];
        const double gain = 2.0 * p.lambda * s * h * h;
        const double loss = 2.0 * p.lambda * f.values[l] * h * m_f;
        q.values[l] = (gain - loss) / h;
    }
    return q;
}

enum class LimitOperator { q1, q2 };

struct InstantaneousTrajectory {
    std::vector<double> times;
    std::vector<Grid1D> states;
    double clamped_mass = 0.0;
};

/// Explicit midpoint (RK2) stepping of df/dt = Q(f, f); negative undershoot
/// is clamped to zero and the removed mass accumulated in `clamped_mass`.
[[nodiscard]] inline InstantaneousTrajectory solve_instantaneous(const Grid1D& f0, const Params& p,
                                                                 LimitOperator op, double t_end,
                                                                 double dt,
                                                                 std::size_t record_every = 1) {
    p.validate();
    f0.validate();
    require(std::isfinite(dt) && dt > 0.0, "solve_instantaneous requires dt > 0");
    require(std::isfinite(t_end) && t_end >= 0.0, "solve_instantaneous requires t_end ≥ 0");
    require(record_every >= 1, "record_every must be ≥ 1");
    const double M = f0.mass();
    require(dt * 4.0 * p.lambda * M <= 0.5, "unstable step: dt*4*lambda*M must be ≤ 0.5");

    auto Q = [&](const Grid1D& f) { return op == LimitOperator::q1 ? apply_q1(f, p) : apply_q2(f, p); };
    const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-12));
    const double h = steps > 0 ? t_end / static_cast<double>(steps) : 0.0;
    InstantaneousTrajectory out;
    out.times.push_back(0.0);
    out.states.push_back(f0);
    Grid1D f = f0;
    Grid1D mid = f0;
    for (std::size_t step = 1; step <= steps; ++step) {
        const Grid1D k1 = Q(f);
        for (std::size_t i = 0; i < f.n; ++i) mid.values[i] = f.values[i] + 0.5 * h * k1.values[i];
        const Grid1D k2 = Q(mid);
        for (std::size_t i = 0; i < f.n; ++i) {
            f.values[i] += h * k2.values[i];
            if (f.values[i] < 0.0) {
                out.clamped_mass += -f.values[i] * f.dx();
                f.values[i] = 0.0;
            }
        }
        if (step % record_every == 0 || step == steps) {
            out.times.push_back(step == steps ? t_end : static_cast<double>(step) * h);
            out.states.push_back(f);
        }
    }
    return out;
}

}  // namespace pairkin
