#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <string>
#include <vector>

#include "core.hpp"
#include "grid.hpp"
#include "grid_solver.hpp"

namespace pairkin {

namespace detail {

/// Adds (lambda/eps) * sum_r w_r f_r(x + kappa (t - t_r)/2) f_r(x - kappa (t - t_r)/2)
/// to `out` for every cell centre x.
inline void add_history_trace(std::vector<double>& out, const Grid1D& layout,
                              const std::vector<const Grid1D*>& f_nodes,
                              const std::vector<double>& t_nodes, const std::vector<double>& weights,
                              double t, double kappa, double coef) {
    for (std::size_t r = 0; r < f_nodes.size(); ++r) {
        if (weights[r] == 0.0) continue;
        const double shift = 0.5 * kappa * (t - t_nodes[r]);
        const Grid1D& fr = *f_nodes[r];
        for (std::size_t i = 0; i < layout.n; ++i) {
            const double x = layout.center(i);
            out[i] += coef * weights[r] * interpolate(fr, x + shift) * interpolate(fr, x - shift);
        }
    }
}

/// E[(y - tau)_+^p] for p = 0, 1, 2 where y is the gap of a random point pair
/// drawn uniformly from two cells k apart (units of the cell width): y = k + T for
/// k >= 1 and y = |T| for k = 0, with T triangular on [-1, 1].
inline std::array<double, 3> gap_excess_moments(std::size_t k, double tau) {
    std::array<double, 3> out{0.0, 0.0, 0.0};
    // Integrate (y - tau)^p (c0 + c1 y) over [lo, hi] with y >= tau.
    auto piece = [&](double lo, double hi, double c0, double c1) {
        lo = std::max(lo, tau);
        if (hi <= lo) return;
        const double A = c0 + c1 * tau;
        const double zl = lo - tau, zh = hi - tau;
        const double l2 = zl * zl, h2 = zh * zh;
        const double l3 = l2 * zl, h3 = h2 * zh;
        const double l4 = l3 * zl, h4 = h3 * zh;
        out[0] += A * (zh - zl) + c1 * (h2 - l2) / 2.0;
        out[1] += A * (h2 - l2) / 2.0 + c1 * (h3 - l3) / 3.0;
        out[2] += A * (h3 - l3) / 3.0 + c1 * (h4 - l4) / 4.0;
    };
    if (k == 0) {
        piece(0.0, 1.0, 2.0, -2.0);
    } else {
        const double kk = static_cast<double>(k);
        piece(kk - 1.0, kk, 1.0 - kk, 1.0);
        piece(kk, kk + 1.0, kk + 1.0, -1.0);
    }
    return out;
}

/// Pair statistics of a symmetric product or pair density grouped by the
/// cell distance k = |i - j|: total weight, weight times midpoint and weight
/// times squared midpoint deviation from `centre`.
struct GapSums {
    std::vector<double> mass, mid, dev2;
};

template <typename Weight>
inline GapSums gap_sums(std::size_t n, double lo, double h, double centre, Weight w) {
    GapSums s{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double v = w(i, j);
            if (v == 0.0) continue;
            const std::size_t k = i > j ? i - j : j - i;
            const double m = lo + (0.5 * static_cast<double>(i + j) + 0.5) * h;
            s.mass[k] += v;
            s.mid[k] += v * m;
            s.dev2[k] += v * (m - centre) * (m - centre);
        }
    return s;
}

/// Adds weight * (surviving pair moments) after the gaps have closed by tau.
inline void accumulate_pair_moments(MomentVector& m, const GapSums& s, double tau, double h,
                                    double weight) {
    for (std::size_t k = 0; k < s.mass.size(); ++k) {
        if (s.mass[k] == 0.0) continue;
        const auto e = gap_excess_moments(k, tau / h);
        const double e2 = e[2] * h * h;
        m.m_g += weight * s.mass[k] * e[0];
        m.i_g += weight * s.mid[k] * e[0];
        m.v_g += weight * (s.dev2[k] * e[0] + 0.25 * s.mass[k] * e2);
        m.vbar_g += weight * s.mass[k] * e2;
    }
}

}  // namespace detail

/// Diagonal trace of the Model 2 pair density at time t:
/// g0(phi + kappa t/2, phi - kappa t/2) + (lambda/eps) int_0^t f(phi + kappa(t-r)/2, r) f(phi - kappa(t-r)/2, r) dr
/// with kappa = 1/epsilon. The history is integrated by the trapezoid rule on
/// its own nodes; f at t is interpolated linearly in time when t is not a node.
[[nodiscard]] inline TraceField trace_gbar(const Grid2D& g0, const std::vector<Grid1D>& f_history,
                                           const std::vector<double>& history_times, double t,
                                           const Params& p) {
    p.validate();
    require(f_history.size() == history_times.size() && !f_history.empty(),
            "trace_gbar requires one history time per f");
    require(history_times.front() <= 0.0 && history_times.back() >= t && t >= 0.0,
            "trace_gbar requires f_history to cover [0, t]");
    const Grid1D layout = f_history.front();
    require(g0.n == layout.n && g0.lo == layout.lo && g0.hi == layout.hi,
            "g0 and f_history must share the grid layout");
    const double kappa = 1.0 / p.epsilon;

    TraceField out(layout.lo, layout.hi, layout.n);
    for (std::size_t i = 0; i < layout.n; ++i) {
        const double x = layout.center(i);
        out.values[i] = interpolate(g0, x + 0.5 * kappa * t, x - 0.5 * kappa * t);
    }

    std::vector<const Grid1D*> nodes;
    std::vector<double> times;
    std::size_t r = 0;
    for (; r < history_times.size() && history_times[r] < t; ++r) {
        nodes.push_back(&f_history[r]);
        times.push_back(history_times[r]);
    }
    Grid1D f_end;
    if (r < history_times.size() && history_times[r] == t) {
        nodes.push_back(&f_history[r]);
    } else {
        const double a = history_times[r - 1], b = history_times[r];
        const double s = (t - a) / (b - a);
        f_end = f_history[r - 1];
        for (std::size_t i = 0; i < f_end.n; ++i)
            f_end.values[i] += s * (f_history[r].values[i] - f_end.values[i]);
        nodes.push_back(&f_end);
    }
    times.push_back(t);
    std::vector<double> w(times.size(), 0.0);
    for (std::size_t q = 0; q + 1 < times.size(); ++q) {
        const double h = times[q + 1] - times[q];
        w[q] += 0.5 * h;
        w[q + 1] += 0.5 * h;
    }
    detail::add_history_trace(out.values, layout, nodes, times, w, t, kappa, p.lambda / p.epsilon);
    return out;
}

struct Model2Trajectory {
    std::vector<double> times;
    std::vector<Grid1D> f;
    std::vector<TraceField> gbar;
    std::vector<MomentVector> moments;
    double phi_inf = 0.0;
    std::vector<double> history_times;
    std::vector<Grid1D> f_history;
    std::size_t max_iterations = 0;
    std::vector<std::string> warnings;
};

/// Model 2 on a grid through the mild formulation of f with g eliminated.
///
/// f^n = F(0, t_n) f0 + 4 B^n with B^n = F_step (B^{n-1} + h/2 gbar^{n-1}) + h/2 gbar^n,
/// the trace from trace_gbar on the step history. The step is solved by Picard
/// iteration to 1e-10 in grid-L1 (cap 50). Pair moments come from the mild form of g:
/// every product cell pair created at t_r survives while its gap exceeds kappa (t - t_r).
[[nodiscard]] inline Model2Trajectory solve_model2_mild(const Grid1D& f0, const Grid2D& g0,
                                                        const Params& p, double t_end, double dt,
                                                        std::size_t record_every = 1) {
    p.validate();
    f0.validate();
    require(g0.n == f0.n && g0.lo == f0.lo && g0.hi == f0.hi,
            "f0 and g0 must share the grid layout");
    require(std::isfinite(dt) && dt > 0.0, "solve_model2_mild requires dt > 0");
    require(std::isfinite(t_end) && t_end >= 0.0, "solve_model2_mild requires t_end ≥ 0");
    require(record_every >= 1, "record_every must be ≥ 1");

    const std::size_t n = f0.n;
    const double h1 = f0.dx();
    const double h2 = h1 * h1;
    const double kappa = 1.0 / p.epsilon;
    const double coef = p.lambda / p.epsilon;
    const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-12));
    const double h = steps > 0 ? t_end / static_cast<double>(steps) : 0.0;

    Model2Trajectory out;
    const MomentVector m0 = moments_of(f0, g0, 0.0);
    const double total_mass = m0.m_f + 2.0 * p.epsilon * m0.m_g;
    out.phi_inf = rescaled_mean_state(m0, p.epsilon);
    const double c = out.phi_inf;

    const auto g0_sums = detail::gap_sums(n, f0.lo, h1, c, [&](std::size_t i, std::size_t j) {
        return g0.at(i, j) * h2;
    });
    std::vector<detail::GapSums> f_sums;
    auto product_sums = [&](const Grid1D& f) {
        return detail::gap_sums(n, f0.lo, h1, c, [&](std::size_t i, std::size_t j) {
            return f.values[i] * f.values[j] * h2;
        });
    };

    auto pair_moments = [&](std::size_t step) {
        const double t = static_cast<double>(step) * h;
        MomentVector m;
        detail::accumulate_pair_moments(m, g0_sums, kappa * t, h1, 1.0);
        for (std::size_t r = 0; step > 0 && r <= step; ++r) {
            const double w = (r == 0 || r == step) ? 0.5 * h : h;
            detail::accumulate_pair_moments(m, f_sums[r], kappa * (t - static_cast<double>(r) * h), h1,
                                            coef * w);
        }
        return m;
    };

    auto record = [&](std::size_t step, const Grid1D& f, const TraceField& gbar) {
        MomentVector m = pair_moments(step);
        const MomentVector mf = moments_of(f, c);
        m.m_f = mf.m_f;
        m.i_f = mf.i_f;
        m.v_f = mf.v_f;
        out.times.push_back(step == steps ? t_end : static_cast<double>(step) * h);
        out.f.push_back(f);
        out.gbar.push_back(gbar);
        out.moments.push_back(m);
        const double edge = boundary_mass(f);
        if (total_mass > 0.0 && edge > 1e-8 * total_mass && out.warnings.empty()) {
            char buf[160];
            std::snprintf(buf, sizeof buf,
                          "boundary mass %.3e exceeds 1e-8 of the total at t = %.6g", edge,
                          out.times.back());
            out.warnings.emplace_back(buf);
        }
    };

    Grid1D f = f0;
    TraceField gbar(f0.lo, f0.hi, n);
    for (std::size_t i = 0; i < n; ++i) gbar.values[i] = g0.at(i, i);
    out.history_times.push_back(0.0);
    out.f_history.push_back(f0);
    f_sums.push_back(product_sums(f0));
    Grid1D B(f0.lo, f0.hi, n);
    double m_f = f.mass();
    double F_cum = 1.0;
    record(0, f, gbar);

    std::vector<const Grid1D*> nodes;
    std::vector<double> weights;
    std::vector<double> pre(n);
    for (std::size_t step = 1; step <= steps; ++step) {
        const double t = static_cast<double>(step) * h;
        for (std::size_t i = 0; i < n; ++i) {
            const double x = f0.center(i);
            pre[i] = interpolate(g0, x + 0.5 * kappa * t, x - 0.5 * kappa * t);
        }
        nodes.clear();
        weights.clear();
        for (std::size_t r = 0; r < step; ++r) {
            nodes.push_back(&out.f_history[r]);
            weights.push_back(r == 0 ? 0.5 * h : h);
        }
        detail::add_history_trace(pre, f0, nodes, out.history_times, weights, t, kappa, coef);

        Grid1D f_new = f;
        TraceField gbar_new(f0.lo, f0.hi, n);
        Grid1D B_new(f0.lo, f0.hi, n);
        double F_step = 1.0;
        bool converged = false;
        for (std::size_t it = 1; it <= 50; ++it) {
            const Grid1D f_prev = f_new;
            for (std::size_t i = 0; i < n; ++i)
                gbar_new.values[i] = pre[i] + coef * 0.5 * h * f_new.values[i] * f_new.values[i];
            F_step = std::exp(-p.lambda * h * (m_f + f_new.mass()));
            for (std::size_t i = 0; i < n; ++i) {
                B_new.values[i] = F_step * (B.values[i] + 0.5 * h * gbar.values[i]) +
                                  0.5 * h * gbar_new.values[i];
                f_new.values[i] = F_cum * F_step * f0.values[i] + 4.0 * B_new.values[i];
            }
            out.max_iterations = std::max(out.max_iterations, it);
            if (detail::l1_change(f_new.values, f_prev.values, h1) < 1e-10) {
                converged = true;
                break;
            }
        }
        if (!converged)
            throw Error("Picard iteration did not converge within 50 iterations at step " +
                        std::to_string(step) + "; reduce dt");
        for (std::size_t i = 0; i < n; ++i)
            gbar_new.values[i] = pre[i] + coef * 0.5 * h * f_new.values[i] * f_new.values[i];

        F_cum *= F_step;
        f = std::move(f_new);
        gbar = std::move(gbar_new);
        B = std::move(B_new);
        m_f = f.mass();
        out.history_times.push_back(t);
        out.f_history.push_back(f);
        f_sums.push_back(product_sums(f));
        if (step % record_every == 0 || step == steps) record(step, f, gbar);
    }
    return out;
}

/// Pair density of a Model 2 run at history index `step`, from the mild form of g.
/// Diagonal cells hold the trace.
[[nodiscard]] inline Grid2D model2_pair_density(const Model2Trajectory& run, const Grid2D& g0,
                                                const Params& p, std::size_t step) {
    require(step < run.history_times.size(), "history index out of range");
    const Grid1D& layout = run.f_history.front();
    const std::size_t n = layout.n;
    const double kappa = 1.0 / p.epsilon;
    const double coef = p.lambda / p.epsilon;
    const double t = run.history_times[step];
    Grid2D g(layout.lo, layout.hi, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double a = layout.center(i), b = layout.center(j);
            const double sgn = i > j ? 1.0 : (i < j ? -1.0 : 0.0);
            if (sgn == 0.0) continue;
            double v = interpolate(g0, a + 0.5 * sgn * kappa * t, b - 0.5 * sgn * kappa * t);
            for (std::size_t r = 0; r <= step && step > 0; ++r) {
                const double w = (r == 0 || r == step) ? 0.5 : 1.0;
                const double dtr = r == 0 ? run.history_times[1] - run.history_times[0]
                                          : run.history_times[r] - run.history_times[r - 1];
                const double shift = 0.5 * sgn * kappa * (t - run.history_times[r]);
                v += coef * w * dtr * interpolate(run.f_history[r], a + shift) *
                     interpolate(run.f_history[r], b - shift);
            }
            g.at(i, j) = v;
        }
    const TraceField diag = trace_gbar(g0, run.f_history, run.history_times, t, p);
    for (std::size_t i = 0; i < n; ++i) g.at(i, i) = diag.values[i];
    return g;
}

}  // namespace pairkin
