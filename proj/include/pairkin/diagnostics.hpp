#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "core.hpp"
#include "grid.hpp"
#include "moment_odes.hpp"
#include "particles.hpp"

namespace pairkin {

struct EntropyValue {
    double h = 0.0;
    double dissipation = 0.0;
    double m_g = 0.0;
};

/// H = sum f (log(lambda f) - 1) dx + sum g (log(gamma g) - 1) dx^2 with 0 log 0 = 0.
/// The dissipation sums (lambda f f* - gamma g) log(lambda f f* / (gamma g)) over
/// cells where both factors are positive. Along Model 1, dH/dt = m_g - dissipation.
[[nodiscard]] inline EntropyValue entropy(const Grid1D& f, const Grid2D& g, const Params& p) {
    p.validate();
    require(p.lambda > 0.0 && p.gamma > 0.0, "entropy requires lambda > 0 and gamma > 0");
    require(g.n == f.n && g.lo == f.lo && g.hi == f.hi, "f and g must share the grid layout");
    const double h1 = f.dx();
    const double h2 = h1 * h1;
    EntropyValue e;
    for (double v : f.values)
        if (v > 0.0) e.h += v * (std::log(p.lambda * v) - 1.0) * h1;
    for (std::size_t i = 0; i < g.n; ++i)
        for (std::size_t j = 0; j < g.n; ++j) {
            const double v = g.at(i, j);
            if (v > 0.0) {
                e.h += v * (std::log(p.gamma * v) - 1.0) * h2;
                e.m_g += v * h2;
            }
            const double a = p.lambda * f.values[i] * f.values[j];
            const double b = p.gamma * v;
            if (a > 0.0 && b > 0.0) e.dissipation += (a - b) * std::log(a / b) * h2;
        }
    return e;
}

struct WeightedSample {
    double x = 0.0;
    double w = 1.0;
};

[[nodiscard]] inline std::vector<WeightedSample> unit_samples(const std::vector<double>& xs) {
    std::vector<WeightedSample> out;
    out.reserve(xs.size());
    for (double x : xs) out.push_back({x, 1.0});
    return out;
}

namespace detail {

/// Integral over [0, len] of |a + (b - a) s / len|.
inline double abs_linear_integral(double a, double b, double len) {
    if (len <= 0.0) return 0.0;
    if ((a >= 0.0 && b >= 0.0) || (a <= 0.0 && b <= 0.0)) return 0.5 * (std::abs(a) + std::abs(b)) * len;
    return 0.5 * (a * a + b * b) / std::abs(a - b) * len;
}

/// Normalised CDF of a distribution that is either a set of atoms or a
/// piecewise-constant density on a grid; linear between breakpoints.
struct Cdf {
    std::vector<double> x;
    /// Value just right of x[k] (atoms make jumps).
    std::vector<double> right;
    /// Value just left of x[k].
    std::vector<double> left;
    bool atomic = false;

    [[nodiscard]] double eval(double t) const {
        if (t < x.front()) return 0.0;
        if (t >= x.back()) return 1.0;
        const auto it = std::upper_bound(x.begin(), x.end(), t);
        const auto k = static_cast<std::size_t>(it - x.begin()) - 1;
        if (atomic) return right[k];
        const double s = (t - x[k]) / (x[k + 1] - x[k]);
        return right[k] + s * (left[k + 1] - right[k]);
    }
};

inline Cdf make_cdf(std::vector<WeightedSample> a) {
    require(!a.empty(), "w1_distance rejects empty inputs");
    std::sort(a.begin(), a.end(), [](const auto& u, const auto& v) { return u.x < v.x; });
    double total = 0.0;
    for (const auto& s : a) {
        require(s.w >= 0.0 && std::isfinite(s.x), "samples need finite states and nonnegative weights");
        total += s.w;
    }
    require(total > 0.0, "w1_distance rejects inputs of zero mass");
    Cdf c;
    c.atomic = true;
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double before = acc;
        acc += a[k].w;
        if (!c.x.empty() && c.x.back() == a[k].x) {
            c.right.back() = acc / total;
            continue;
        }
        c.x.push_back(a[k].x);
        c.left.push_back(before / total);
        c.right.push_back(acc / total);
    }
    c.right.back() = 1.0;
    return c;
}

inline Cdf make_cdf(const Grid1D& f) {
    double total = 0.0;
    for (double v : f.values) {
        require(v >= 0.0, "w1_distance requires a nonnegative density");
        total += v;
    }
    require(total > 0.0, "w1_distance rejects inputs of zero mass");
    Cdf c;
    double acc = 0.0;
    const double h = f.dx();
    for (std::size_t k = 0; k <= f.n; ++k) {
        c.x.push_back(f.lo + static_cast<double>(k) * h);
        c.left.push_back(acc / total);
        c.right.push_back(acc / total);
        if (k < f.n) acc += f.values[k];
    }
    c.left.back() = c.right.back() = 1.0;
    return c;
}

/// Integral of |F_a - F_b| over the merged breakpoints; exact since both are
/// piecewise linear (or constant) between them.
inline double cdf_l1(const Cdf& a, const Cdf& b) {
    std::vector<double> pts(a.x);
    pts.insert(pts.end(), b.x.begin(), b.x.end());
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        const double lo = pts[k], hi = pts[k + 1];
        // Right limit at lo and left limit at hi.
        const double da = a.eval(lo) - b.eval(lo);
        const double mid_hi = std::nextafter(hi, lo);
        const double db = a.eval(mid_hi) - b.eval(mid_hi);
        s += abs_linear_integral(da, db, hi - lo);
    }
    return s;
}

}  // namespace detail

/// One-dimensional Wasserstein-1 distance between normalised distributions.
[[nodiscard]] inline double w1_distance(const std::vector<WeightedSample>& a,
                                        const std::vector<WeightedSample>& b) {
    return detail::cdf_l1(detail::make_cdf(a), detail::make_cdf(b));
}

[[nodiscard]] inline double w1_distance(const Grid1D& a, const Grid1D& b) {
    return detail::cdf_l1(detail::make_cdf(a), detail::make_cdf(b));
}

[[nodiscard]] inline double w1_distance(const std::vector<WeightedSample>& a, const Grid1D& b) {
    return detail::cdf_l1(detail::make_cdf(a), detail::make_cdf(b));
}

[[nodiscard]] inline double w1_distance(const Grid1D& a, const std::vector<WeightedSample>& b) {
    return w1_distance(b, a);
}

struct EquilibriumTarget {
    double m_f_inf = 0.0;
    double m_g_inf = 0.0;
    double phi_inf = 0.0;

    static EquilibriumTarget from(const EquilibriumModel1& eq) {
        return {eq.m_f_inf, eq.m_g_inf, eq.phi_inf};
    }
    static EquilibriumTarget from(const MassSplit& s, double phi_inf) {
        return {s.m_f_inf, s.m_g_inf, phi_inf};
    }
};

struct EquilibriumDistance {
    double mass_f = 0.0;
    double mass_g = 0.0;
    /// W1 between f / M_f and a point mass at phi_inf.
    double w1_f = 0.0;
    double sqrt_v_f = 0.0;
};

[[nodiscard]] inline EquilibriumDistance equilibrium_distance(const Grid1D& f, const Grid2D& g,
                                                              const EquilibriumTarget& eq) {
    const MomentVector m = moments_of(f, g, eq.phi_inf);
    EquilibriumDistance d;
    d.mass_f = std::abs(m.m_f - eq.m_f_inf);
    d.mass_g = std::abs(m.m_g - eq.m_g_inf);
    double abs_dev = 0.0;
    for (std::size_t i = 0; i < f.n; ++i) abs_dev += f.values[i] * std::abs(f.center(i) - eq.phi_inf);
    abs_dev *= f.dx();
    d.w1_f = m.m_f > 0.0 ? abs_dev / m.m_f : 0.0;
    d.sqrt_v_f = std::sqrt(std::max(0.0, m.v_f));
    return d;
}

[[nodiscard]] inline EquilibriumDistance equilibrium_distance(const Ensemble& e,
                                                              const EquilibriumTarget& eq) {
    const MomentVector m = moments_of(e, eq.phi_inf);
    EquilibriumDistance d;
    d.mass_f = std::abs(m.m_f - eq.m_f_inf);
    d.mass_g = std::abs(m.m_g - eq.m_g_inf);
    double abs_dev = 0.0;
    for (double x : e.free) abs_dev += std::abs(x - eq.phi_inf);
    d.w1_f = e.free.empty() ? 0.0 : abs_dev / static_cast<double>(e.free.size());
    d.sqrt_v_f = std::sqrt(std::max(0.0, m.v_f));
    return d;
}

struct DecayFit {
    /// Fitted rate mu in value ~ C exp(-mu t); positive for decay.
    double rate = 0.0;
    double log_prefactor = 0.0;
    std::size_t points = 0;
};

/// Least-squares fit of log(value) against t over samples with t in [t_lo, t_hi].
[[nodiscard]] inline DecayFit fit_decay_rate(const std::vector<double>& t,
                                             const std::vector<double>& value, double t_lo,
                                             double t_hi) {
    require(t.size() == value.size(), "fit_decay_rate requires matching lengths");
    double s1 = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (t[k] < t_lo || t[k] > t_hi) continue;
        require(value[k] > 0.0, "fit_decay_rate requires positive values");
        const double y = std::log(value[k]);
        s1 += 1;
        sx += t[k];
        sy += y;
        sxx += t[k] * t[k];
        sxy += t[k] * y;
    }
    require(s1 >= 2, "fit_decay_rate needs at least two points in the window");
    const double denom = s1 * sxx - sx * sx;
    require(denom > 0.0, "fit_decay_rate needs distinct times");
    DecayFit fit;
    const double slope = (s1 * sxy - sx * sy) / denom;
    fit.rate = -slope;
    fit.log_prefactor = (sy - slope * sx) / s1;
    fit.points = static_cast<std::size_t>(s1);
    return fit;
}

}  // namespace pairkin
