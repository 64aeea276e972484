#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "core.hpp"
#include "diagnostics.hpp"
#include "grid.hpp"
#include "grid_solver.hpp"
#include "particles.hpp"

namespace pairkin {

struct SweepSpec {
    Params params;
    double mass = 1.0;
    InitialLaw initial;
    std::size_t n_particles = 100000;
    std::uint32_t replicas = 16;
    std::uint64_t seed = 42;
    double grid_lo = -6.0;
    double grid_hi = 6.0;
    std::size_t grid_n = 512;
    /// Time step of the limit solver.
    double dt = 0.01;
    std::vector<double> epsilons{0.2, 0.1, 0.05};
    std::vector<double> compare_times{0.5, 1.0, 2.0};
    /// Budget for the step-guard count of one particle run.
    std::size_t max_steps = 1000000;
};

/// Per epsilon and comparison time: replica mean and standard error of
/// W1(f_eps / M_f, f / M) and of the mean pair gap E|phi - phi*| under g_eps.
struct DistanceReport {
    std::vector<double> epsilons;
    std::vector<double> compare_times;
    std::vector<std::vector<double>> w1_mean, w1_se;
    std::vector<std::vector<double>> gap_mean, gap_se;
    /// Mean gap under quasistationary_g of the limit solution.
    std::vector<double> gap_target;
    /// Replica-mean W1 at t = 0 for each epsilon.
    std::vector<double> w1_initial;
};

namespace detail {

inline double mean_pair_gap(const Ensemble& e) {
    if (e.pairs.empty()) return 0.0;
    double s = 0.0;
    for (const auto& p : e.pairs) s += std::abs(pair_state_at(e, p, e.time).gap());
    return s / static_cast<double>(e.pairs.size());
}

inline double mean_gap(const Grid2D& g) {
    double s = 0.0, m = 0.0;
    for (std::size_t i = 0; i < g.n; ++i)
        for (std::size_t j = 0; j < g.n; ++j) {
            s += g.at(i, j) * std::abs(g.center(i) - g.center(j));
            m += g.at(i, j);
        }
    return m > 0.0 ? s / m : 0.0;
}

inline void mean_and_se(const std::vector<double>& x, double& mean, double& se) {
    const auto R = static_cast<double>(x.size());
    mean = 0.0;
    for (double v : x) mean += v;
    mean /= R;
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    se = x.size() > 1 ? std::sqrt(var / (R - 1.0) / R) : 0.0;
}

}  // namespace detail

/// Number of guarded steps a rescaled particle run to `t_max` would need.
[[nodiscard]] inline double guarded_steps(const Params& p, double mass, double t_max) {
    const double pair_rate = 10.0 * p.lambda * mass;
    const double end_rate = 10.0 * p.gamma / p.epsilon;
    return std::ceil(t_max * std::max(pair_rate, end_rate));
}

/// Compares rescaled Model 1 particle runs with the instantaneous limit.
/// Particle runs start with no pairs; the limit solution is the q1 grid solver
/// from the projected initial law.
[[nodiscard]] inline DistanceReport epsilon_sweep(const SweepSpec& spec) {
    spec.params.validate();
    require(!spec.epsilons.empty() && !spec.compare_times.empty(),
            "epsilon_sweep needs epsilons and compare times");
    for (std::size_t k = 0; k < spec.epsilons.size(); ++k) {
        const double e = spec.epsilons[k];
        require(e > 0.0 && e <= 1.0, "epsilons must satisfy 0 < epsilon ≤ 1");
        require(k == 0 || e < spec.epsilons[k - 1], "epsilons must be strictly decreasing");
    }
    for (std::size_t k = 0; k < spec.compare_times.size(); ++k)
        require(spec.compare_times[k] > 0.0 && (k == 0 || spec.compare_times[k] > spec.compare_times[k - 1]),
                "compare times must be positive and increasing");
    const double t_max = spec.compare_times.back();
    for (double e : spec.epsilons) {
        Params p = spec.params;
        p.epsilon = e;
        require(guarded_steps(p, spec.mass, t_max) <= static_cast<double>(spec.max_steps),
                "epsilon too small: the step guard needs more than max_steps steps");
    }

    DistanceReport rep;
    rep.epsilons = spec.epsilons;
    rep.compare_times = spec.compare_times;

    const Grid1D f0 = project_law(spec.initial, spec.mass, spec.grid_lo, spec.grid_hi, spec.grid_n);
    std::vector<Grid1D> limit;
    Grid1D f = f0;
    double t_prev = 0.0;
    for (double t : spec.compare_times) {
        const auto seg = solve_instantaneous(f, spec.params, LimitOperator::q1, t - t_prev, spec.dt,
                                             1000000000);
        f = seg.states.back();
        limit.push_back(f);
        rep.gap_target.push_back(detail::mean_gap(quasistationary_g(f, spec.params)));
        t_prev = t;
    }

    for (double e : spec.epsilons) {
        SimSpec sim;
        sim.model = Model::model1;
        sim.params = spec.params;
        sim.params.epsilon = e;
        sim.n_particles = spec.n_particles;
        sim.mass = spec.mass;
        sim.t_end = t_max;
        sim.dt_report = t_max;
        sim.initial = spec.initial;
        sim.pair_fraction = 0.0;
        sim.seed = spec.seed;

        const std::size_t T = spec.compare_times.size();
        std::vector<std::vector<double>> w1(T), gaps(T);
        std::vector<double> w1_zero;
        for (std::uint32_t r = 0; r < spec.replicas; ++r) {
            Ensemble ens = init_ensemble(sim, r);
            w1_zero.push_back(w1_distance(unit_samples(ens.free), f0));
            for (std::size_t k = 0; k < T; ++k) {
                advance_to(ens, spec.compare_times[k]);
                w1[k].push_back(w1_distance(unit_samples(ens.free), limit[k]));
                gaps[k].push_back(detail::mean_pair_gap(ens));
            }
        }
        std::vector<double> wm(T), ws(T), gm(T), gs(T);
        for (std::size_t k = 0; k < T; ++k) {
            detail::mean_and_se(w1[k], wm[k], ws[k]);
            detail::mean_and_se(gaps[k], gm[k], gs[k]);
        }
        double z_mean = 0.0, z_se = 0.0;
        detail::mean_and_se(w1_zero, z_mean, z_se);
        rep.w1_mean.push_back(wm);
        rep.w1_se.push_back(ws);
        rep.gap_mean.push_back(gm);
        rep.gap_se.push_back(gs);
        rep.w1_initial.push_back(z_mean);
    }
    return rep;
}

}  // namespace pairkin
