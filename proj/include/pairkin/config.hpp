#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"
#include "particles.hpp"

namespace pairkin {

enum class Mode { moments, particle, grid, instantaneous, sweep, equilibrium };

[[nodiscard]] inline std::string to_string(Mode m) {
    switch (m) {
        case Mode::moments: return "moments";
        case Mode::particle: return "particle";
        case Mode::grid: return "grid";
        case Mode::instantaneous: return "instantaneous";
        case Mode::sweep: return "sweep";
        case Mode::equilibrium: return "equilibrium";
    }
    return "moments";
}

/// Fully resolved run configuration. Defaults: lambda = gamma = epsilon = 1,
/// seed 42, 10^5 particles, grid [-6, 6] with 512 cells.
struct RunConfig {
    Mode mode = Mode::moments;
    /// 1 or 2.
    int model = 1;
    /// "q1" or "q2", used by the instantaneous mode.
    std::string op = "q1";
    Params params;
    double mass = 1.0;
    std::string initial = "gaussian(0,1)";
    double pair_fraction = 0.0;
    std::size_t n_particles = 100000;
    std::uint64_t seed = 42;
    std::uint32_t replicas = 16;
    double t_end = 10.0;
    double dt = 0.01;
    double dt_report = 0.5;
    double grid_lo = -6.0;
    double grid_hi = 6.0;
    std::size_t grid_n = 512;
    std::vector<double> epsilons{0.2, 0.1, 0.05};
    std::vector<double> compare_times{0.5, 1.0, 2.0};
    std::size_t max_steps = 1000000;
    std::string output = "out";

    [[nodiscard]] InitialLaw initial_law() const { return parse_initial_law(initial); }

    /// Key/value pairs in sorted key order, numbers with 17 significant digits.
    [[nodiscard]] std::vector<std::pair<std::string, std::string>> entries() const;
    [[nodiscard]] std::string echo() const;
    void validate() const;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline std::string fmt_number(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string fmt_list(const std::vector<double>& v) {
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (k) s += ",";
        s += fmt_number(v[k]);
    }
    return s;
}

inline double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double x = std::stod(value, &used);
        if (used == value.size() && std::isfinite(x)) return x;
    } catch (const std::exception&) {
    }
    throw Error("malformed value for " + key + ": '" + value + "' is not a finite number");
}

inline std::uint64_t parse_unsigned(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        if (!value.empty() && value[0] != '-') {
            const unsigned long long x = std::stoull(value, &used);
            if (used == value.size()) return x;
        }
    } catch (const std::exception&) {
    }
    // Accept integral values written in scientific notation, e.g. 1e5.
    try {
        std::size_t used = 0;
        const double x = std::stod(value, &used);
        if (used == value.size() && x >= 0.0 && x <= 1.8e19 && std::floor(x) == x)
            return static_cast<std::uint64_t>(x);
    } catch (const std::exception&) {
    }
    throw Error("malformed value for " + key + ": '" + value + "' is not a nonnegative integer");
}

inline std::vector<double> parse_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
    if (out.empty()) throw Error("malformed value for " + key + ": empty list");
    return out;
}

inline Mode parse_mode(const std::string& v) {
    for (Mode m : {Mode::moments, Mode::particle, Mode::grid, Mode::instantaneous, Mode::sweep,
                   Mode::equilibrium})
        if (to_string(m) == v) return m;
    throw Error("malformed value for mode: '" + v +
                "' (expected moments, particle, grid, instantaneous, sweep or equilibrium)");
}

inline void assign(RunConfig& c, const std::string& key, const std::string& value) {
    if (key == "mode") c.mode = parse_mode(value);
    else if (key == "model") {
        if (value == "1" || value == "model1") c.model = 1;
        else if (value == "2" || value == "model2") c.model = 2;
        else throw Error("malformed value for model: '" + value + "' (expected 1 or 2)");
    } else if (key == "operator") {
        if (value != "q1" && value != "q2")
            throw Error("malformed value for operator: '" + value + "' (expected q1 or q2)");
        c.op = value;
    } else if (key == "lambda") c.params.lambda = parse_double(key, value);
    else if (key == "gamma") c.params.gamma = parse_double(key, value);
    else if (key == "epsilon") c.params.epsilon = parse_double(key, value);
    else if (key == "mass") c.mass = parse_double(key, value);
    else if (key == "initial") c.initial = value;
    else if (key == "pair_fraction") c.pair_fraction = parse_double(key, value);
    else if (key == "n_particles") c.n_particles = parse_unsigned(key, value);
    else if (key == "seed") c.seed = parse_unsigned(key, value);
    else if (key == "replicas") {
        const auto r = parse_unsigned(key, value);
        if (r > 0xffffffffull) throw Error("malformed value for replicas: too large");
        c.replicas = static_cast<std::uint32_t>(r);
    } else if (key == "t_end") c.t_end = parse_double(key, value);
    else if (key == "dt") c.dt = parse_double(key, value);
    else if (key == "dt_report") c.dt_report = parse_double(key, value);
    else if (key == "grid_lo") c.grid_lo = parse_double(key, value);
    else if (key == "grid_hi") c.grid_hi = parse_double(key, value);
    else if (key == "grid_n") c.grid_n = parse_unsigned(key, value);
    else if (key == "epsilons") c.epsilons = parse_list(key, value);
    else if (key == "compare_times") c.compare_times = parse_list(key, value);
    else if (key == "max_steps") c.max_steps = parse_unsigned(key, value);
    else if (key == "output") c.output = value;
    else throw Error("unknown key '" + key + "'");
}

}  // namespace detail

inline std::vector<std::pair<std::string, std::string>> RunConfig::entries() const {
    using detail::fmt_number;
    std::map<std::string, std::string> m{
        {"mode", to_string(mode)},
        {"model", std::to_string(model)},
        {"operator", op},
        {"lambda", fmt_number(params.lambda)},
        {"gamma", fmt_number(params.gamma)},
        {"epsilon", fmt_number(params.epsilon)},
        {"mass", fmt_number(mass)},
        {"initial", initial},
        {"pair_fraction", fmt_number(pair_fraction)},
        {"n_particles", std::to_string(n_particles)},
        {"seed", std::to_string(seed)},
        {"replicas", std::to_string(replicas)},
        {"t_end", fmt_number(t_end)},
        {"dt", fmt_number(dt)},
        {"dt_report", fmt_number(dt_report)},
        {"grid_lo", fmt_number(grid_lo)},
        {"grid_hi", fmt_number(grid_hi)},
        {"grid_n", std::to_string(grid_n)},
        {"epsilons", detail::fmt_list(epsilons)},
        {"compare_times", detail::fmt_list(compare_times)},
        {"max_steps", std::to_string(max_steps)},
        {"output", output},
    };
    return {m.begin(), m.end()};
}

inline std::string RunConfig::echo() const {
    std::string s;
    for (const auto& [k, v] : entries()) s += k + " = " + v + "\n";
    return s;
}

inline void RunConfig::validate() const {
    params.validate();
    require(mass > 0.0, "mass must satisfy mass > 0");
    (void)initial_law();
    require(pair_fraction >= 0.0 && pair_fraction <= 1.0,
            "pair_fraction must satisfy 0 ≤ pair_fraction ≤ 1");
    require(n_particles >= 2, "n_particles must satisfy n_particles ≥ 2");
    require(replicas >= 1, "replicas must satisfy replicas ≥ 1");
    require(t_end > 0.0, "t_end must satisfy t_end > 0");
    require(dt > 0.0, "dt must satisfy dt > 0");
    require(dt_report > 0.0, "dt_report must satisfy dt_report > 0");
    require(grid_lo < grid_hi, "grid bounds must satisfy grid_lo < grid_hi");
    require(grid_n >= 8, "grid_n must satisfy grid_n ≥ 8");
    require(max_steps >= 1, "max_steps must satisfy max_steps ≥ 1");
    require(!output.empty(), "output must be a nonempty path");
    if (mode == Mode::instantaneous)
        require(pair_fraction == 0.0, "instantaneous mode requires pair_fraction = 0");
}

/// Parses flat `key = value` lines (`#` starts a comment), then applies the
/// overrides in order, then validates.
[[nodiscard]] inline RunConfig parse_config(
    const std::string& text, const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
    RunConfig c;
    std::stringstream ss(text);
    std::string line;
    int number = 0;
    while (std::getline(ss, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error("line " + std::to_string(number) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw Error("line " + std::to_string(number) + ": expected key = value");
        detail::assign(c, key, value);
    }
    for (const auto& [k, v] : overrides) detail::assign(c, k, detail::trim(v));
    c.validate();
    return c;
}

}  // namespace pairkin
