#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "pairkin/pairkin.hpp"

using namespace pairkin;

namespace {

using Overrides = std::vector<std::pair<std::string, std::string>>;

const std::filesystem::path source_dir{PAIRKIN_SOURCE_DIR};
const std::filesystem::path scratch = std::filesystem::temp_directory_path() / "pairkin_acceptance";

std::string read_file(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    require(static_cast<bool>(f), "cannot read " + p.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

RunConfig load(const std::string& name, Overrides overrides = {}) {
    return parse_config(read_file(source_dir / "configs" / name), overrides);
}

std::string fmt(const char* f, double a) {
    char buf[96];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    require(EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) == 1, "SHA-256 failed");
    std::string hex;
    char buf[3];
    for (unsigned int k = 0; k < len; ++k) {
        std::snprintf(buf, sizeof buf, "%02x", md[k]);
        hex += buf;
    }
    return hex;
}

double max_drift(const std::vector<MomentVector>& ms, double eps) {
    return detail::conservation_drift(ms, eps).first;
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    std::string id;
    std::string title;
    double budget_s;
    std::function<Outcome()> body;
};

// AC1
Outcome model1_masses() {
    std::string d;
    bool ok = true;
    const auto ode_cfg = load("ac01_equilibrium_model1.cfg", {{"mode", "moments"}, {"dt", "0.01"}});
    const auto ode = run_config(ode_cfg).summary["final"];
    const double e_f = std::abs(ode["m_f"].get<double>() - 0.5);
    const double e_g = std::abs(ode["m_g"].get<double>() - 0.25);
    ok = ok && e_f <= 1e-8 && e_g <= 1e-8;
    d += "ode |dM_f|=" + fmt("%.2e", e_f) + " |dM_g|=" + fmt("%.2e", e_g);

    const auto part = run_config(load("ac01_equilibrium_model1.cfg")).summary;
    const auto& m = part["final_mean"];
    const auto& se = part["final_se"];
    const double z_f = std::abs(m["m_f"].get<double>() - 0.5) / se["m_f"].get<double>();
    const double z_g = std::abs(m["m_g"].get<double>() - 0.25) / se["m_g"].get<double>();
    ok = ok && z_f <= 3.0 && z_g <= 3.0;
    d += "; particles M_f=" + fmt("%.5f", m["m_f"].get<double>()) + " (" + fmt("%.2f", z_f) +
         " SE) M_g=" + fmt("%.5f", m["m_g"].get<double>()) + " (" + fmt("%.2f", z_g) + " SE)";
    return {ok, d};
}

// AC2
Outcome conservation() {
    std::string d;
    bool ok = true;

    const auto ode = run_config(load("ac02_conservation_grid.cfg", {{"mode", "moments"}, {"t_end", "20"}, {"dt", "0.01"}}));
    double worst_ode = 0.0;
    for (const auto& c : ode.summary["checks"]) worst_ode = std::max(worst_ode, c["value"].get<double>());
    ok = ok && worst_ode <= 1e-12;
    d += "moments drift " + fmt("%.1e", worst_ode);

    double count_drift = 0.0;
    for (const char* model : {"1", "2"}) {
        const auto r = run_config(load("ac10_determinism.cfg", {{"model", model}, {"n_particles", "4000"}}));
        count_drift = std::max(count_drift, r.summary["checks"][0]["value"].get<double>());
    }
    for (const char* op : {"q1", "q2"}) {
        const SimSpec s = detail::sim_spec(load("ac03_instantaneous_q1.cfg", {{"operator", op}, {"n_particles", "4000"}}),
                                     std::string(op) == "q1" ? Model::inst_q1 : Model::inst_q2);
        for (std::uint32_t k = 0; k < 4; ++k)
            for (std::size_t n : pairkin::run(s, k).counts)
                count_drift = std::max(count_drift, std::abs(static_cast<double>(n) - static_cast<double>(s.n_particles)));
    }
    ok = ok && count_drift == 0.0;
    d += "; particle count drift " + fmt("%.0f", count_drift);

    for (int model : {1, 2}) {
        auto drift = [&](int refine) {
            const auto base = load("ac02_conservation_grid.cfg", {{"model", std::to_string(model)}});
            RunConfig c = base;
            c.grid_n = base.grid_n * static_cast<std::size_t>(refine);
            c.dt = base.dt / refine;
            c.dt_report = c.dt;
            const auto f0 = detail::initial_f(c);
            const auto g0 = detail::initial_g(c);
            if (model == 1) return max_drift(picard_solve_model1(f0, g0, c.params, c.t_end, c.dt).moments, c.params.epsilon);
            return max_drift(solve_model2_mild(f0, g0, c.params, c.t_end, c.dt).moments, c.params.epsilon);
        };
        const double a = drift(1), b = drift(2);
        const double order = std::log2(a / b);
        ok = ok && order >= 1.9;
        d += "; model " + std::to_string(model) + " grid drift " + fmt("%.2e", a) + " -> " + fmt("%.2e", b) +
             " order " + fmt("%.2f", order);
    }
    return {ok, d};
}

// AC3 and AC4
Outcome variance_decay(const std::string& file) {
    const auto base = load(file);
    const auto r0 = run_config(base).summary;
    RunConfig fine = base;
    fine.grid_n *= 2;
    fine.dt /= 2.0;
    fine.replicas = 1;
    fine.n_particles = 1000;
    const auto r1 = run_config(fine).summary;
    const double expected = r0["expected_rate"].get<double>();
    const double g0 = r0["grid_rate"].get<double>(), g1 = r1["grid_rate"].get<double>();
    const double p = r0["particle_rate"].get<double>();
    const double e1 = std::abs(g1 / expected - 1.0), ep = std::abs(p / expected - 1.0);
    const bool ok = e1 <= 0.02 && ep <= 0.10;
    return {ok, "expected " + fmt("%.4f", expected) + ", grid " + fmt("%.4f", g0) + " -> refined " +
                    fmt("%.4f", g1) + " (" + fmt("%.2f%%", 100.0 * e1) + "), particles " + fmt("%.4f", p) +
                    " (" + fmt("%.2f%%", 100.0 * ep) + ")"};
}

// AC5
Outcome stability_sweep() {
    double worst = -1e300;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
            const double lam = 0.25 + 3.75 * i / 4.0, gam = 0.25 + 3.75 * j / 4.0;
            const auto r = run_config(load("ac05_stability.cfg",
                                           {{"lambda", fmt("%.17g", lam)}, {"gamma", fmt("%.17g", gam)}}));
            worst = std::max(worst, r.summary["max_real_part"].get<double>());
        }
    return {worst < -1e-6, "largest real part over 25 cells " + fmt("%.4e", worst)};
}

// AC6
Outcome entropy_identity() {
    auto residual = [](int refine) {
        const auto base = load("ac06_entropy.cfg");
        RunConfig c = base;
        c.grid_n = base.grid_n * static_cast<std::size_t>(refine);
        c.dt = base.dt / refine;
        const auto run = picard_solve_model1(detail::initial_f(c), detail::initial_g(c), c.params, c.t_end, c.dt);
        double worst = 0.0;
        for (std::size_t k = 1; k + 1 < run.times.size(); ++k) {
            const double dh = (entropy(run.f[k + 1], run.g[k + 1], c.params).h -
                               entropy(run.f[k - 1], run.g[k - 1], c.params).h) /
                              (run.times[k + 1] - run.times[k - 1]);
            const auto e = entropy(run.f[k], run.g[k], c.params);
            worst = std::max(worst, std::abs(dh + e.dissipation - e.m_g));
        }
        return worst;
    };
    const double a = residual(1), b = residual(2);
    const double order = std::log2(a / b);
    return {order >= 1.0, "residual " + fmt("%.3e", a) + " -> " + fmt("%.3e", b) + " order " + fmt("%.2f", order)};
}

// AC7
Outcome instantaneous_limit() {
    const auto s = run_config(load("ac07_sweep.cfg")).summary;
    bool ok = true;
    std::string d = "W1";
    for (const auto& c : s["checks"]) ok = ok && c["pass"].get<bool>();
    const auto& w = s["w1_mean"];
    for (std::size_t k = 0; k < w[0].size(); ++k) {
        d += k ? " |" : "";
        for (std::size_t e = 0; e < w.size(); ++e) d += " " + fmt("%.4f", w[e][k].get<double>());
    }
    for (const auto& c : s["checks"]) d += "; " + c["name"].get<std::string>() + (c["pass"].get<bool>() ? " yes" : " no");
    return {ok, d};
}

// AC8
Outcome model2_masses() {
    const auto cfg = load("ac08_equilibrium_model2.cfg");
    const auto sum = run_replicas(detail::sim_spec(cfg, Model::model2), cfg.replicas);
    const double target = 2.0 / (1.0 + std::sqrt(1.0 + 4.0 * cfg.params.lambda * cfg.mass));
    const double mf = sum.mean.back().m_f, se = sum.se.back().m_f;
    const double z = se > 0.0 ? std::abs(mf - target) / se : std::abs(mf - target) / 1e-300;
    auto total_v = [](const MomentVector& m) { return m.v_f + 2.0 * m.v_g; };
    const double ratio = total_v(sum.mean.back()) / total_v(sum.mean.front());
    const bool ok = z <= 3.0 && ratio < 1e-3;
    return {ok, "M_f=" + fmt("%.5f", mf) + " +- " + fmt("%.1e", se) + " vs " + fmt("%.5f", target) + " (" +
                    fmt("%.3g", z) + " SE); variance ratio " + fmt("%.2e", ratio)};
}

// AC9
Outcome oracle_cross_check() {
    const auto cfg = load("ac09_oracle_model1.cfg");
    const auto sum = run_replicas(detail::sim_spec(cfg, Model::model1), cfg.replicas);
    const auto ode = integrate_moments(detail::initial_moments(cfg), cfg.params, cfg.t_end, 1e-3,
                                       static_cast<std::size_t>(std::lround(cfg.dt_report / 1e-3)));
    require(ode.times.size() == sum.times.size(), "report grids differ");
    const double eps = cfg.params.epsilon;
    double worst = 0.0;
    std::string where;
    std::size_t misses = 0;
    for (std::size_t k = 0; k < sum.times.size(); ++k) {
        MomentVector o = ode.states[k];
        // Particle moments count pairs physically.
        o.m_g *= eps;
        o.i_g *= eps;
        o.v_g *= eps;
        o.vbar_g *= eps;
        for (std::size_t m = 0; m < MomentVector::size; ++m) {
            const double diff = std::abs(sum.mean[k][m] - o[m]);
            const double se = sum.se[k][m];
            // Deterministic quantities (e.g. initial masses) carry only roundoff as their SE.
            const double z = diff <= 1e-12 ? 0.0 : (se > 0.0 ? diff / se : 1e300);
            if (z > 3.0) ++misses;
            if (z > worst) {
                worst = z;
                where = std::string(moment_names[m]) + " at t=" + fmt("%g", sum.times[k]);
            }
        }
    }
    return {misses == 0, std::to_string(misses) + " of " + std::to_string(sum.times.size() * MomentVector::size) +
                             " comparisons beyond 3 SE; largest " + fmt("%.2f", worst) + " SE (" + where + ")"};
}

// AC10
Outcome determinism() {
    auto cfg = load("ac10_determinism.cfg");
    std::string hashes[2];
    for (int k = 0; k < 2; ++k) {
        cfg.output = (scratch / ("ac10_run" + std::to_string(k))).string();
        std::filesystem::remove_all(cfg.output);
        (void)execute(cfg);
        hashes[k] = sha256_hex(read_file(std::filesystem::path(cfg.output) / "report.csv"));
    }
    return {hashes[0] == hashes[1], "sha256 " + hashes[0].substr(0, 16) + "... vs " + hashes[1].substr(0, 16) + "..."};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {"AC1", "equilibrium masses, model 1", 30.0, model1_masses},
        {"AC2", "conservation in every mode", 120.0, conservation},
        {"AC3", "variance decay, instantaneous Q1", 60.0, [] { return variance_decay("ac03_instantaneous_q1.cfg"); }},
        {"AC4", "variance decay, sticky Q2", 60.0, [] { return variance_decay("ac04_instantaneous_q2.cfg"); }},
        {"AC5", "linear stability", 1.0, stability_sweep},
        {"AC6", "entropy identity", 120.0, entropy_identity},
        {"AC7", "instantaneous limit", 300.0, instantaneous_limit},
        {"AC8", "equilibrium, model 2", 60.0, model2_masses},
        {"AC9", "particle vs moment oracle", 60.0, oracle_cross_check},
        {"AC10", "determinism", 10.0, determinism},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.body();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs < c.budget_s;
        const bool pass = o.pass && in_time;
        failures += pass ? 0 : 1;
        std::printf("[%s] %s %s: %s (%.1f s of %.0f s%s)\n", pass ? "PASS" : "FAIL", c.id.c_str(), c.title.c_str(),
                    o.detail.c_str(), secs, c.budget_s, in_time ? "" : ", over budget");
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
