#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "core.hpp"
#include "diagnostics.hpp"
#include "grid.hpp"
#include "grid_solver.hpp"
#include "model2_solver.hpp"
#include "moment_odes.hpp"
#include "particles.hpp"
#include "sweep.hpp"

namespace pairkin {

/// In-memory result of a run: the exact bytes of report.csv and the summary.
struct RunOutput {
    std::string report;
    nlohmann::ordered_json summary;
};

namespace detail {

inline std::string sci(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", x);
    return buf;
}

inline std::string csv_row(const std::vector<double>& v) {
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (k) s += ",";
        s += sci(v[k]);
    }
    return s + "\n";
}

inline std::string moment_header(bool with_se) {
    std::string s = "t";
    for (const char* name : moment_names) s += std::string(",") + name;
    if (with_se)
        for (const char* name : moment_names) s += std::string(",") + name + "_se";
    return s + "\n";
}

inline nlohmann::ordered_json moment_json(const MomentVector& m) {
    nlohmann::ordered_json j;
    for (std::size_t k = 0; k < MomentVector::size; ++k) j[moment_names[k]] = m[k];
    return j;
}

/// Mean and variance of the initial single-particle law.
inline std::pair<double, double> law_mean_variance(const InitialLaw& law) {
    switch (law.kind) {
        case InitialLaw::Kind::gaussian: return {law.a, law.b * law.b};
        case InitialLaw::Kind::uniform: return {0.5 * (law.a + law.b), (law.b - law.a) * (law.b - law.a) / 12.0};
        case InitialLaw::Kind::two_point: return {0.5 * (law.a + law.b), 0.25 * (law.b - law.a) * (law.b - law.a)};
    }
    return {0.0, 0.0};
}

/// Rescaled initial moments: free mass (1 - p) M, pairs drawn from the product
/// law holding physical mass p M.
inline MomentVector initial_moments(const RunConfig& c) {
    const auto [mu, var] = law_mean_variance(c.initial_law());
    const double eps = c.params.epsilon;
    MomentVector x;
    x.m_f = (1.0 - c.pair_fraction) * c.mass;
    x.i_f = x.m_f * mu;
    x.v_f = x.m_f * var;
    x.m_g = c.pair_fraction * c.mass / (2.0 * eps);
    x.i_g = x.m_g * mu;
    x.v_g = x.m_g * var;
    x.vbar_g = 2.0 * var * x.m_g;
    return x;
}

inline std::size_t record_stride(const RunConfig& c) {
    return static_cast<std::size_t>(std::max(1.0, std::round(c.dt_report / c.dt)));
}

/// Largest relative drift of M_f + 2 eps M_g and I_f + 2 eps I_g along a series.
inline std::pair<double, double> conservation_drift(const std::vector<MomentVector>& ms, double eps) {
    const double m0 = ms.front().m_f + 2.0 * eps * ms.front().m_g;
    const double i0 = ms.front().i_f + 2.0 * eps * ms.front().i_g;
    double dm = 0.0, di = 0.0;
    for (const auto& m : ms) {
        dm = std::max(dm, std::abs(m.m_f + 2.0 * eps * m.m_g - m0));
        di = std::max(di, std::abs(m.i_f + 2.0 * eps * m.i_g - i0));
    }
    return {dm / std::max(1.0, std::abs(m0)), di / std::max(1.0, std::abs(m0))};
}

inline nlohmann::ordered_json check(const std::string& name, double value, double limit) {
    return {{"name", name}, {"value", value}, {"limit", limit}, {"pass", value <= limit}};
}

inline SimSpec sim_spec(const RunConfig& c, Model model) {
    SimSpec s;
    s.model = model;
    s.params = c.params;
    s.n_particles = c.n_particles;
    s.mass = c.mass;
    s.t_end = c.t_end;
    s.dt_report = c.dt_report;
    s.initial = c.initial_law();
    s.pair_fraction = c.pair_fraction;
    s.seed = c.seed;
    return s;
}

inline Grid1D initial_f(const RunConfig& c) {
    return project_law(c.initial_law(), (1.0 - c.pair_fraction) * c.mass, c.grid_lo, c.grid_hi,
                       c.grid_n);
}

/// Rescaled initial pair density (p M / (2 eps)) fhat (x) fhat with fhat the normalised law.
inline Grid2D initial_g(const RunConfig& c) {
    const Grid1D unit = project_law(c.initial_law(), 1.0, c.grid_lo, c.grid_hi, c.grid_n);
    Grid2D g = tensor_square(unit, c.pair_fraction * c.mass / (2.0 * c.params.epsilon));
    // Exact symmetry of the outer product.
    for (std::size_t i = 0; i < g.n; ++i)
        for (std::size_t j = 0; j < i; ++j) g.at(i, j) = g.at(j, i);
    return g;
}

inline RunOutput run_moments(const RunConfig& c) {
    require(c.model == 1, "moments mode supports model 1 only");
    const MomentVector x0 = initial_moments(c);
    const auto traj = integrate_moments(x0, c.params, c.t_end, c.dt, record_stride(c));
    RunOutput out;
    out.report = moment_header(false);
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        std::vector<double> row{traj.times[k]};
        for (std::size_t m = 0; m < MomentVector::size; ++m) row.push_back(traj.states[k][m]);
        out.report += csv_row(row);
    }
    const double M = x0.m_f + 2.0 * c.params.epsilon * x0.m_g;
    const double I = x0.i_f + 2.0 * c.params.epsilon * x0.i_g;
    const auto eq = equilibrium_model1(c.params, M, I);
    const auto [dm, di] = conservation_drift(traj.states, c.params.epsilon);
    auto& s = out.summary;
    s["m_f_inf"] = eq.m_f_inf;
    s["m_g_inf"] = eq.m_g_inf;
    s["phi_inf"] = eq.phi_inf;
    s["final"] = moment_json(traj.states.back());
    s["checks"] = {check("mass_drift", dm, 1e-12), check("first_moment_drift", di, 1e-12)};
    return out;
}

inline RunOutput run_particle(const RunConfig& c) {
    const Model model = c.model == 1 ? Model::model1 : Model::model2;
    const auto sum = run_replicas(sim_spec(c, model), c.replicas);
    RunOutput out;
    out.report = moment_header(true);
    for (std::size_t k = 0; k < sum.times.size(); ++k) {
        std::vector<double> row{sum.times[k]};
        for (std::size_t m = 0; m < MomentVector::size; ++m) row.push_back(sum.mean[k][m]);
        for (std::size_t m = 0; m < MomentVector::size; ++m) row.push_back(sum.se[k][m]);
        out.report += csv_row(row);
    }
    // Mass is conserved exactly by particle count; the first moment up to summation roundoff.
    double count_drift = 0.0, di = 0.0;
    std::uint64_t pairings = 0, releases = 0, collisions = 0;
    for (const auto& r : sum.runs) {
        for (std::size_t n : r.counts)
            count_drift = std::max(count_drift, std::abs(static_cast<double>(n) - static_cast<double>(c.n_particles)));
        di = std::max(di, conservation_drift(r.moments, 1.0).second);
        pairings += r.pairings;
        releases += r.releases;
        collisions += r.collisions;
    }
    auto& s = out.summary;
    s["replicas"] = c.replicas;
    s["final_mean"] = moment_json(sum.mean.back());
    s["final_se"] = moment_json(sum.se.back());
    s["pairings"] = pairings;
    s["releases"] = releases;
    s["collisions"] = collisions;
    s["checks"] = {check("particle_count_drift", count_drift, 0.0),
                   check("first_moment_drift", di, 1e-10)};
    if (model == Model::model1) {
        const auto eq = equilibrium_model1(c.params, c.mass, c.mass * law_mean_variance(c.initial_law()).first);
        s["m_f_inf"] = eq.m_f_inf;
        s["m_g_inf"] = eq.m_g_inf * c.params.epsilon;
    }
    return out;
}

inline RunOutput run_grid(const RunConfig& c) {
    const Grid1D f0 = initial_f(c);
    const Grid2D g0 = initial_g(c);
    RunOutput out;
    auto& s = out.summary;
    std::vector<MomentVector> ms;
    std::vector<double> times;
    std::vector<std::string> warnings;
    if (c.model == 1) {
        const auto traj = picard_solve_model1(f0, g0, c.params, c.t_end, c.dt, record_stride(c));
        const bool with_entropy = c.params.lambda > 0.0 && c.params.gamma > 0.0;
        std::string header = moment_header(false);
        if (with_entropy) header.insert(header.size() - 1, ",entropy,dissipation");
        out.report = header;
        for (std::size_t k = 0; k < traj.times.size(); ++k) {
            std::vector<double> row{traj.times[k]};
            for (std::size_t m = 0; m < MomentVector::size; ++m) row.push_back(traj.moments[k][m]);
            if (with_entropy) {
                const auto e = entropy(traj.f[k], traj.g[k], c.params);
                row.push_back(e.h);
                row.push_back(e.dissipation);
            }
            out.report += csv_row(row);
        }
        ms = traj.moments;
        times = traj.times;
        warnings = traj.warnings;
        s["picard_max_iterations"] = traj.max_iterations;
        s["phi_inf"] = traj.phi_inf;
    } else {
        const auto traj = solve_model2_mild(f0, g0, c.params, c.t_end, c.dt, record_stride(c));
        out.report = moment_header(false);
        for (std::size_t k = 0; k < traj.times.size(); ++k) {
            std::vector<double> row{traj.times[k]};
            for (std::size_t m = 0; m < MomentVector::size; ++m) row.push_back(traj.moments[k][m]);
            out.report += csv_row(row);
        }
        ms = traj.moments;
        times = traj.times;
        warnings = traj.warnings;
        s["picard_max_iterations"] = traj.max_iterations;
        s["phi_inf"] = traj.phi_inf;
    }
    const auto [dm, di] = conservation_drift(ms, c.params.epsilon);
    s["final"] = moment_json(ms.back());
    s["warnings"] = warnings;
    // Second order in dt and the cell size; the limit is a sanity bound, not a rate.
    // Time stepping conserves to O(dt^2) only; this is a sanity bound, not an accuracy claim.
    s["checks"] = {check("mass_drift", dm, 1e-2), check("first_moment_drift", di, 1e-2)};
    return out;
}

inline RunOutput run_instantaneous(const RunConfig& c) {
    const LimitOperator op = c.op == "q1" ? LimitOperator::q1 : LimitOperator::q2;
    const Grid1D f0 = initial_f(c);
    const auto traj = solve_instantaneous(f0, c.params, op, c.t_end, c.dt, record_stride(c));
    const double phi = f0.first_moment() / f0.mass();
    std::vector<double> grid_v;
    for (const auto& f : traj.states) grid_v.push_back(moments_of(f, phi).v_f);

    const auto sum = run_replicas(sim_spec(c, op == LimitOperator::q1 ? Model::inst_q1 : Model::inst_q2),
                                  c.replicas);
    RunOutput out;
    out.report = "t,v_grid,v_particle,v_particle_se\n";
    // Particle reports use dt_report, the grid records every stride steps; they
    // coincide when dt_report is a multiple of dt.
    const std::size_t rows = std::min(traj.times.size(), sum.times.size());
    std::vector<double> pv;
    for (std::size_t k = 0; k < rows; ++k) {
        out.report += csv_row({traj.times[k], grid_v[k], sum.mean[k].v_f, sum.se[k].v_f});
    }
    for (const auto& m : sum.mean) pv.push_back(m.v_f);

    const double expected = op == LimitOperator::q1
                                ? 2.0 * c.params.lambda * c.mass / (2.0 + c.params.gamma)
                                : c.params.lambda * c.mass;
    auto positive_fit = [&](const std::vector<double>& t, const std::vector<double>& v) {
        std::vector<double> tt, vv;
        for (std::size_t k = 0; k < t.size(); ++k)
            if (v[k] > 0.0) {
                tt.push_back(t[k]);
                vv.push_back(v[k]);
            }
        return fit_decay_rate(tt, vv, 0.0, c.t_end);
    };
    const auto grid_fit = positive_fit(traj.times, grid_v);
    const auto part_fit = positive_fit(sum.times, pv);
    auto& s = out.summary;
    s["operator"] = c.op;
    s["expected_rate"] = expected;
    s["grid_rate"] = grid_fit.rate;
    s["particle_rate"] = part_fit.rate;
    s["clamped_mass"] = traj.clamped_mass;
    s["checks"] = {check("grid_rate_rel_error", std::abs(grid_fit.rate / expected - 1.0), 0.02),
                   check("particle_rate_rel_error", std::abs(part_fit.rate / expected - 1.0), 0.10)};
    return out;
}

inline RunOutput run_sweep(const RunConfig& c) {
    require(c.model == 1, "sweep mode supports model 1 only");
    SweepSpec spec;
    spec.params = c.params;
    spec.mass = c.mass;
    spec.initial = c.initial_law();
    spec.n_particles = c.n_particles;
    spec.replicas = c.replicas;
    spec.seed = c.seed;
    spec.grid_lo = c.grid_lo;
    spec.grid_hi = c.grid_hi;
    spec.grid_n = c.grid_n;
    spec.dt = c.dt;
    spec.epsilons = c.epsilons;
    spec.compare_times = c.compare_times;
    spec.max_steps = c.max_steps;
    const auto rep = epsilon_sweep(spec);

    RunOutput out;
    out.report = "epsilon,t,w1_mean,w1_se,gap_mean,gap_se,gap_target\n";
    for (std::size_t e = 0; e < rep.epsilons.size(); ++e)
        for (std::size_t k = 0; k < rep.compare_times.size(); ++k)
            out.report += csv_row({rep.epsilons[e], rep.compare_times[k], rep.w1_mean[e][k],
                                   rep.w1_se[e][k], rep.gap_mean[e][k], rep.gap_se[e][k],
                                   rep.gap_target[k]});
    // Strict decrease beyond three combined standard errors between successive epsilons.
    bool w1_decreasing = true, gap_approaching = true;
    for (std::size_t e = 0; e + 1 < rep.epsilons.size(); ++e)
        for (std::size_t k = 0; k < rep.compare_times.size(); ++k) {
            const double band = 3.0 * std::hypot(rep.w1_se[e][k], rep.w1_se[e + 1][k]);
            if (!(rep.w1_mean[e + 1][k] + band < rep.w1_mean[e][k])) w1_decreasing = false;
            const double d0 = std::abs(rep.gap_mean[e][k] - rep.gap_target[k]);
            const double d1 = std::abs(rep.gap_mean[e + 1][k] - rep.gap_target[k]);
            if (!(d1 < d0)) gap_approaching = false;
        }
    auto& s = out.summary;
    s["w1_initial"] = rep.w1_initial;
    s["w1_mean"] = rep.w1_mean;
    s["w1_se"] = rep.w1_se;
    s["gap_mean"] = rep.gap_mean;
    s["gap_target"] = rep.gap_target;
    s["checks"] = {{{"name", "w1_strictly_decreasing"}, {"pass", w1_decreasing}},
                   {{"name", "gap_approaches_target"}, {"pass", gap_approaching}}};
    return out;
}

inline RunOutput run_equilibrium(const RunConfig& c) {
    const double mu = law_mean_variance(c.initial_law()).first;
    RunOutput out;
    auto& s = out.summary;
    out.report = "quantity,value\n";
    auto row = [&](const std::string& name, double v) {
        out.report += name + "," + sci(v) + "\n";
        s[name] = v;
    };
    if (c.model == 1) {
        const auto eq = equilibrium_model1(c.params, c.mass, c.mass * mu);
        row("m_f_inf", eq.m_f_inf);
        row("m_g_inf", eq.m_g_inf);
        row("phi_inf", eq.phi_inf);
        const auto st = stability_matrix(c.params, eq.m_f_inf);
        row("trace", st.trace);
        row("determinant", st.determinant);
        row("max_real_part", st.max_real_part);
        s["routh_hurwitz"] = st.routh_hurwitz;
        s["checks"] = {{{"name", "stable"}, {"pass", st.max_real_part < 0.0}}};
    } else {
        const auto split = equilibrium_masses_model2(c.params, c.mass);
        row("m_f_inf", split.m_f_inf);
        row("m_g_inf", split.m_g_inf);
        row("phi_inf", mu);
        s["checks"] = nlohmann::ordered_json::array();
    }
    return out;
}

}  // namespace detail

/// Runs the configured mode and returns the report and summary without touching disk.
[[nodiscard]] inline RunOutput run_config(const RunConfig& cfg) {
    cfg.validate();
    RunOutput out;
    switch (cfg.mode) {
        case Mode::moments: out = detail::run_moments(cfg); break;
        case Mode::particle: out = detail::run_particle(cfg); break;
        case Mode::grid: out = detail::run_grid(cfg); break;
        case Mode::instantaneous: out = detail::run_instantaneous(cfg); break;
        case Mode::sweep: out = detail::run_sweep(cfg); break;
        case Mode::equilibrium: out = detail::run_equilibrium(cfg); break;
    }
    nlohmann::ordered_json head;
    head["mode"] = to_string(cfg.mode);
    head["model"] = cfg.model;
    bool all = true;
    for (const auto& chk : out.summary.value("checks", nlohmann::ordered_json::array()))
        all = all && chk.at("pass").get<bool>();
    head["checks_pass"] = all;
    head.update(out.summary);
    out.summary = std::move(head);
    return out;
}

/// Writes report.csv, config.echo and summary.json into cfg.output.
inline RunOutput execute(const RunConfig& cfg) {
    RunOutput out = run_config(cfg);
    const std::filesystem::path dir(cfg.output);
    std::filesystem::create_directories(dir);
    auto write = [&](const std::string& name, const std::string& text) {
        std::ofstream f(dir / name, std::ios::binary);
        require(static_cast<bool>(f), "cannot write " + (dir / name).string());
        f << text;
    };
    write("report.csv", out.report);
    write("config.echo", cfg.echo());
    write("summary.json", out.summary.dump(2) + "\n");
    return out;
}

}  // namespace pairkin
