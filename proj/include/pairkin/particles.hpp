#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"

namespace pairkin {

enum class Model { model1, model2, inst_q1, inst_q2 };

[[nodiscard]] inline std::string to_string(Model m) {
    switch (m) {
        case Model::model1: return "model1";
        case Model::model2: return "model2";
        case Model::inst_q1: return "inst_q1";
        case Model::inst_q2: return "inst_q2";
    }
    return "model1";
}

[[nodiscard]] inline bool has_pairs(Model m) { return m == Model::model1 || m == Model::model2; }

/// Initial single-particle law: uniform(a,b), gaussian(mean,sd) or two_point(a,b).
struct InitialLaw {
    enum class Kind { uniform, gaussian, two_point };
    Kind kind = Kind::gaussian;
    double a = 0.0;
    double b = 1.0;

    [[nodiscard]] std::string describe() const;
};

/// Parses "uniform(a,b)", "gaussian(mean,sd)" or "two_point(a,b)" ("two-point" also accepted).
[[nodiscard]] inline InitialLaw parse_initial_law(const std::string& text) {
    std::string s;
    for (char c : text)
        if (c != ' ' && c != '\t') s.push_back(c);
    const auto open = s.find('(');
    const auto comma = s.find(',');
    const auto close = s.find(')');
    require(open != std::string::npos && comma != std::string::npos && close == s.size() - 1 &&
                open < comma && comma < close,
            "initial law must look like name(a,b), got '" + text + "'");
    const std::string name = s.substr(0, open);
    InitialLaw law;
    if (name == "uniform") law.kind = InitialLaw::Kind::uniform;
    else if (name == "gaussian") law.kind = InitialLaw::Kind::gaussian;
    else if (name == "two_point" || name == "two-point") law.kind = InitialLaw::Kind::two_point;
    else throw Error("unknown initial sampler '" + name + "'");
    try {
        std::size_t used = 0;
        const std::string sa = s.substr(open + 1, comma - open - 1);
        const std::string sb = s.substr(comma + 1, close - comma - 1);
        law.a = std::stod(sa, &used);
        require(used == sa.size(), "bad number");
        law.b = std::stod(sb, &used);
        require(used == sb.size(), "bad number");
    } catch (const std::exception&) {
        throw Error("initial law arguments must be numbers, got '" + text + "'");
    }
    require(std::isfinite(law.a) && std::isfinite(law.b), "initial law arguments must be finite");
    if (law.kind == InitialLaw::Kind::uniform)
        require(law.a < law.b, "uniform(a,b) requires a < b");
    if (law.kind == InitialLaw::Kind::gaussian)
        require(law.b > 0.0, "gaussian(mean,sd) requires sd > 0");
    return law;
}

inline std::string InitialLaw::describe() const {
    char buf[96];
    const char* name = kind == Kind::uniform    ? "uniform"
                       : kind == Kind::gaussian ? "gaussian"
                                                : "two_point";
    std::snprintf(buf, sizeof buf, "%s(%.17g,%.17g)", name, a, b);
    return buf;
}

/// Streams: replica r of a run with seed s draws from mt19937_64 seeded by
/// seed_seq{lo32(s), hi32(s), r}. Replicas never share a stream.
[[nodiscard]] inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint32_t replica) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                      static_cast<std::uint32_t>(seed >> 32), replica};
    return std::mt19937_64(seq);
}

struct SimSpec {
    Model model = Model::model1;
    Params params;
    std::size_t n_particles = 100000;
    double mass = 1.0;
    double t_end = 10.0;
    double dt_report = 0.5;
    InitialLaw initial;
    double pair_fraction = 0.0;
    std::uint64_t seed = 42;

    void validate() const {
        params.validate();
        require(n_particles >= 2, "n_particles must satisfy n_particles ≥ 2");
        require(std::isfinite(mass) && mass > 0.0, "mass must satisfy mass > 0");
        require(std::isfinite(t_end) && t_end > 0.0, "t_end must satisfy t_end > 0");
        require(std::isfinite(dt_report) && dt_report > 0.0, "dt_report must satisfy dt_report > 0");
        require(pair_fraction >= 0.0 && pair_fraction <= 1.0,
                "pair_fraction must satisfy 0 ≤ pair_fraction ≤ 1");
        require(has_pairs(model) || pair_fraction == 0.0,
                "instantaneous models require pair_fraction = 0");
    }
};

/// A colliding pair: the state at the start of the collision, the start time
/// and the scheduled end time. Current states are evaluated on demand.
struct Pair {
    PairState pre;
    double start = 0.0;
    double end = 0.0;
};

struct Ensemble {
    Model model = Model::model1;
    Params params;
    double weight = 0.0;
    std::vector<double> free;
    /// Min-heap on `end`.
    std::vector<Pair> pairs;
    std::mt19937_64 rng;
    double time = 0.0;
    std::uint64_t pairings = 0;
    std::uint64_t releases = 0;
    std::uint64_t collisions = 0;

    [[nodiscard]] std::size_t particle_count() const { return free.size() + 2 * pairs.size(); }
    [[nodiscard]] double total_mass() const {
        return weight * static_cast<double>(particle_count());
    }
};

namespace detail {

struct LaterEnd {
    bool operator()(const Pair& x, const Pair& y) const { return x.end > y.end; }
};

inline double sample_law(const InitialLaw& law, std::mt19937_64& rng) {
    switch (law.kind) {
        case InitialLaw::Kind::uniform:
            return std::uniform_real_distribution<double>(law.a, law.b)(rng);
        case InitialLaw::Kind::gaussian:
            return std::normal_distribution<double>(law.a, law.b)(rng);
        case InitialLaw::Kind::two_point:
            return std::bernoulli_distribution(0.5)(rng) ? law.b : law.a;
    }
    return 0.0;
}

inline double exponential(double rate, std::mt19937_64& rng) {
    if (rate <= 0.0) return std::numeric_limits<double>::infinity();
    return std::exponential_distribution<double>(rate)(rng);
}

inline double pair_end_time(Ensemble& e, const PairState& pre, double start) {
    if (e.model == Model::model2) return start + e.params.epsilon * collision_duration_model2(pre);
    return start + exponential(e.params.gamma / e.params.epsilon, e.rng);
}

}  // namespace detail

/// State of a pair at time `t` (between its start and end).
[[nodiscard]] inline PairState pair_state_at(const Ensemble& e, const Pair& p, double t) {
    const double s = (t - p.start) / e.params.epsilon;
    if (e.model == Model::model2) return flow_model2(p.pre, std::max(0.0, s));
    return flow_model1(p.pre, s);
}

[[nodiscard]] inline std::vector<PairState> pair_states(const Ensemble& e) {
    std::vector<PairState> out;
    out.reserve(e.pairs.size());
    for (const auto& p : e.pairs) out.push_back(pair_state_at(e, p, e.time));
    return out;
}

[[nodiscard]] inline Ensemble init_ensemble(const SimSpec& spec, std::uint32_t replica = 0) {
    spec.validate();
    Ensemble e;
    e.model = spec.model;
    e.params = spec.params;
    e.rng = make_stream(spec.seed, replica);
    e.weight = spec.mass / static_cast<double>(spec.n_particles);

    std::vector<double> states(spec.n_particles);
    for (auto& x : states) x = detail::sample_law(spec.initial, e.rng);

    const auto n_pairs = static_cast<std::size_t>(
        std::llround(spec.pair_fraction * static_cast<double>(spec.n_particles) / 2.0));
    e.pairs.reserve(n_pairs);
    for (std::size_t k = 0; k < n_pairs; ++k) {
        Pair p;
        p.pre = {states[2 * k], states[2 * k + 1]};
        p.start = 0.0;
        p.end = detail::pair_end_time(e, p.pre, 0.0);
        e.pairs.push_back(p);
    }
    std::make_heap(e.pairs.begin(), e.pairs.end(), detail::LaterEnd{});
    e.free.assign(states.begin() + static_cast<std::ptrdiff_t>(2 * n_pairs), states.end());
    return e;
}

namespace detail {

inline void release_next(Ensemble& e) {
    std::pop_heap(e.pairs.begin(), e.pairs.end(), LaterEnd{});
    const Pair p = e.pairs.back();
    e.pairs.pop_back();
    e.time = p.end;
    const PairState post = pair_state_at(e, p, p.end);
    e.free.push_back(post.phi);
    e.free.push_back(post.phi_star);
    ++e.releases;
}

inline std::pair<std::size_t, std::size_t> random_distinct_indices(Ensemble& e) {
    const std::size_t n = e.free.size();
    const std::size_t i = std::uniform_int_distribution<std::size_t>(0, n - 1)(e.rng);
    std::size_t j = std::uniform_int_distribution<std::size_t>(0, n - 2)(e.rng);
    if (j >= i) ++j;
    return {i, j};
}

/// Removes a uniformly chosen unordered pair of distinct free particles.
inline PairState take_random_pair(Ensemble& e) {
    const auto [i, j] = random_distinct_indices(e);
    const PairState out{e.free[i], e.free[j]};
    const std::size_t hi = std::max(i, j);
    const std::size_t lo = std::min(i, j);
    e.free[hi] = e.free.back();
    e.free.pop_back();
    e.free[lo] = e.free.back();
    e.free.pop_back();
    return out;
}

inline void collide_instantly(Ensemble& e, std::size_t i, std::size_t j) {
    const PairState pre{e.free[i], e.free[j]};
    PairState post;
    if (e.model == Model::inst_q1)
        post = flow_model1(pre, exponential(e.params.gamma, e.rng));
    else
        post = {pre.midpoint(), pre.midpoint()};
    e.free[i] = post.phi;
    e.free[j] = post.phi_star;
    ++e.collisions;
}

}  // namespace detail

/// Exact event-driven evolution to time `t_target`. Every unordered pair of
/// free particles meets at rate 2 lambda w, so the total encounter rate is
/// lambda w n_f (n_f - 1).
inline void advance_to(Ensemble& e, double t_target) {
    require(t_target >= e.time, "advance_to requires a target time not in the past");
    const double lam = e.params.lambda;
    const bool paired = has_pairs(e.model);
    while (true) {
        const double nf = static_cast<double>(e.free.size());
        const double rate = e.free.size() >= 2 ? lam * e.weight * nf * (nf - 1.0) : 0.0;
        const double t_meet = e.time + detail::exponential(rate, e.rng);
        const double t_release =
            paired && !e.pairs.empty() ? e.pairs.front().end : std::numeric_limits<double>::infinity();
        if (std::min(t_meet, t_release) > t_target) {
            e.time = t_target;
            return;
        }
        if (t_release <= t_meet) {
            detail::release_next(e);
            continue;
        }
        e.time = t_meet;
        if (paired) {
            Pair p;
            p.pre = detail::take_random_pair(e);
            p.start = e.time;
            p.end = detail::pair_end_time(e, p.pre, e.time);
            e.pairs.push_back(p);
            std::push_heap(e.pairs.begin(), e.pairs.end(), detail::LaterEnd{});
            ++e.pairings;
        } else {
            const auto [i, j] = detail::random_distinct_indices(e);
            detail::collide_instantly(e, i, j);
        }
    }
}

namespace detail {

inline void check_step(const Ensemble& e, Model expected, double dt) {
    require(e.model == expected, "ensemble model does not match the step function");
    require(std::isfinite(dt) && dt > 0.0, "step requires dt > 0");
    const double nf = static_cast<double>(e.free.size());
    require(e.params.lambda * e.weight * nf * dt <= 0.1,
            "step too large: lambda*w*n_f*dt must be ≤ 0.1");
    if (expected == Model::model1)
        require(e.params.gamma * dt / e.params.epsilon <= 0.1,
                "step too large: gamma*dt/epsilon must be ≤ 0.1");
}

}  // namespace detail

inline void step_model1(Ensemble& e, double dt) {
    detail::check_step(e, Model::model1, dt);
    advance_to(e, e.time + dt);
}

inline void step_model2(Ensemble& e, double dt) {
    detail::check_step(e, Model::model2, dt);
    advance_to(e, e.time + dt);
}

inline void step_instantaneous_q1(Ensemble& e, double dt) {
    detail::check_step(e, Model::inst_q1, dt);
    require(e.pairs.empty(), "instantaneous models carry no pairs");
    advance_to(e, e.time + dt);
}

inline void step_instantaneous_q2(Ensemble& e, double dt) {
    detail::check_step(e, Model::inst_q2, dt);
    require(e.pairs.empty(), "instantaneous models carry no pairs");
    advance_to(e, e.time + dt);
}

/// Weighted empirical moments. Pair moments are physical (w per pair member
/// counted once in m_g), variances about `phi_inf`.
[[nodiscard]] inline MomentVector moments_of(const Ensemble& e, double phi_inf) {
    MomentVector m;
    const double w = e.weight;
    for (double x : e.free) {
        m.m_f += w;
        m.i_f += w * x;
        m.v_f += w * (x - phi_inf) * (x - phi_inf);
    }
    for (const auto& p : e.pairs) {
        const PairState s = pair_state_at(e, p, e.time);
        const double a = s.phi - phi_inf;
        const double b = s.phi_star - phi_inf;
        m.m_g += w;
        m.i_g += w * 0.5 * (s.phi + s.phi_star);
        m.v_g += w * 0.5 * (a * a + b * b);
        m.vbar_g += w * (s.phi - s.phi_star) * (s.phi - s.phi_star);
    }
    return m;
}

/// Mean state of all particles, pair members included.
[[nodiscard]] inline double mean_state(const Ensemble& e) {
    double sum = 0.0;
    for (double x : e.free) sum += x;
    for (const auto& p : e.pairs) sum += p.pre.phi + p.pre.phi_star;
    const auto n = e.particle_count();
    return n > 0 ? sum / static_cast<double>(n) : 0.0;
}

struct RunReport {
    std::vector<double> times;
    std::vector<MomentVector> moments;
    /// Free particles plus two per pair, at each report time.
    std::vector<std::size_t> counts;
    double phi_inf = 0.0;
    std::uint64_t pairings = 0;
    std::uint64_t releases = 0;
    std::uint64_t collisions = 0;
};

[[nodiscard]] inline std::vector<double> report_times(double t_end, double dt_report) {
    std::vector<double> t{0.0};
    const auto n = static_cast<std::size_t>(std::floor(t_end / dt_report + 1e-9));
    for (std::size_t k = 1; k <= n; ++k) t.push_back(static_cast<double>(k) * dt_report);
    if (t_end - t.back() > 1e-9 * t_end) t.push_back(t_end);
    return t;
}

[[nodiscard]] inline RunReport run(const SimSpec& spec, std::uint32_t replica = 0) {
    Ensemble e = init_ensemble(spec, replica);
    RunReport r;
    r.phi_inf = mean_state(e);
    for (double t : report_times(spec.t_end, spec.dt_report)) {
        advance_to(e, t);
        r.times.push_back(t);
        r.moments.push_back(moments_of(e, r.phi_inf));
        r.counts.push_back(e.particle_count());
    }
    r.pairings = e.pairings;
    r.releases = e.releases;
    r.collisions = e.collisions;
    return r;
}

/// Replica mean and standard error of the mean per report time.
struct ReplicaSummary {
    std::vector<double> times;
    std::vector<MomentVector> mean;
    std::vector<MomentVector> se;
    std::vector<RunReport> runs;
};

[[nodiscard]] inline ReplicaSummary summarize(std::vector<RunReport> runs) {
    require(!runs.empty(), "summarize requires at least one run");
    ReplicaSummary s;
    s.times = runs.front().times;
    const auto R = static_cast<double>(runs.size());
    for (std::size_t t = 0; t < s.times.size(); ++t) {
        MomentVector mean, var;
        for (const auto& r : runs) mean += r.moments[t];
        mean *= 1.0 / R;
        for (const auto& r : runs)
            for (std::size_t k = 0; k < MomentVector::size; ++k) {
                const double d = r.moments[t][k] - mean[k];
                var[k] += d * d;
            }
        MomentVector se;
        for (std::size_t k = 0; k < MomentVector::size; ++k)
            se[k] = runs.size() > 1 ? std::sqrt(var[k] / (R - 1.0) / R) : 0.0;
        s.mean.push_back(mean);
        s.se.push_back(se);
    }
    s.runs = std::move(runs);
    return s;
}

[[nodiscard]] inline ReplicaSummary run_replicas(const SimSpec& spec, std::uint32_t replicas) {
    require(replicas >= 1, "replicas must satisfy replicas ≥ 1");
    std::vector<RunReport> runs;
    runs.reserve(replicas);
    for (std::uint32_t r = 0; r < replicas; ++r) runs.push_back(run(spec, r));
    return summarize(std::move(runs));
}

}  // namespace pairkin
