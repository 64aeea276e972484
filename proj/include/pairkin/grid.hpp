#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "core.hpp"
#include "particles.hpp"

namespace pairkin {

/// Cell-averaged density on a uniform grid of n cells over [lo, hi].
struct Grid1D {
    double lo = -6.0;
    double hi = 6.0;
    std::size_t n = 512;
    std::vector<double> values;

    Grid1D() = default;
    Grid1D(double lo_, double hi_, std::size_t n_) : lo(lo_), hi(hi_), n(n_), values(n_, 0.0) {
        validate();
    }

    void validate() const {
        require(std::isfinite(lo) && std::isfinite(hi) && lo < hi, "grid bounds must satisfy lo < hi");
        require(n >= 8, "grid size must satisfy n ≥ 8");
    }
    [[nodiscard]] double dx() const { return (hi - lo) / static_cast<double>(n); }
    [[nodiscard]] double center(std::size_t i) const {
        return lo + (static_cast<double>(i) + 0.5) * dx();
    }
    [[nodiscard]] double mass() const {
        double s = 0.0;
        for (double v : values) s += v;
        return s * dx();
    }
    [[nodiscard]] double first_moment() const {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += center(i) * values[i];
        return s * dx();
    }
    [[nodiscard]] bool same_layout(const Grid1D& o) const {
        return lo == o.lo && hi == o.hi && n == o.n;
    }
};

/// Diagonal trace of g: one value per cell of the state grid.
using TraceField = Grid1D;

/// Cell-averaged pair density on the square [lo, hi]^2, row-major in phi.
struct Grid2D {
    double lo = -6.0;
    double hi = 6.0;
    std::size_t n = 512;
    std::vector<double> values;

    Grid2D() = default;
    Grid2D(double lo_, double hi_, std::size_t n_)
        : lo(lo_), hi(hi_), n(n_), values(n_ * n_, 0.0) {
        require(std::isfinite(lo) && std::isfinite(hi) && lo < hi, "grid bounds must satisfy lo < hi");
        require(n >= 8, "grid size must satisfy n ≥ 8");
    }
    explicit Grid2D(const Grid1D& layout) : Grid2D(layout.lo, layout.hi, layout.n) {}

    [[nodiscard]] double dx() const { return (hi - lo) / static_cast<double>(n); }
    [[nodiscard]] double center(std::size_t i) const {
        return lo + (static_cast<double>(i) + 0.5) * dx();
    }
    [[nodiscard]] double& at(std::size_t i, std::size_t j) { return values[i * n + j]; }
    [[nodiscard]] double at(std::size_t i, std::size_t j) const { return values[i * n + j]; }
    [[nodiscard]] double mass() const {
        double s = 0.0;
        for (double v : values) s += v;
        return s * dx() * dx();
    }
    [[nodiscard]] Grid1D layout() const { return Grid1D(lo, hi, n); }

    /// Largest |g_ij - g_ji|.
    [[nodiscard]] double asymmetry() const {
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                worst = std::max(worst, std::abs(at(i, j) - at(j, i)));
        return worst;
    }
};

/// Marginal of g over the second variable, as a density on the 1D grid.
[[nodiscard]] inline Grid1D marginal(const Grid2D& g) {
    Grid1D m(g.lo, g.hi, g.n);
    const double h = g.dx();
    for (std::size_t i = 0; i < g.n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < g.n; ++j) s += g.at(i, j);
        m.values[i] = s * h;
    }
    return m;
}

/// scale * f(phi) f(phi_star).
[[nodiscard]] inline Grid2D tensor_square(const Grid1D& f, double scale = 1.0) {
    Grid2D g(f.lo, f.hi, f.n);
    for (std::size_t i = 0; i < f.n; ++i)
        for (std::size_t j = 0; j < f.n; ++j) g.at(i, j) = scale * f.values[i] * f.values[j];
    return g;
}

/// Piecewise-linear interpolation through cell centres, with zero ghost
/// values one cell outside the domain.
[[nodiscard]] inline double interpolate(const Grid1D& f, double x) {
    const double u = (x - f.lo) / f.dx() - 0.5;
    if (!(u > -1.0 && u < static_cast<double>(f.n))) return 0.0;
    const double fl = std::floor(u);
    const double t = u - fl;
    const auto i = static_cast<long>(fl);
    const long n = static_cast<long>(f.n);
    const double a = (i >= 0 && i < n) ? f.values[static_cast<std::size_t>(i)] : 0.0;
    const double b = (i + 1 >= 0 && i + 1 < n) ? f.values[static_cast<std::size_t>(i + 1)] : 0.0;
    return a + t * (b - a);
}

/// Bilinear interpolation through cell centres, zero outside.
[[nodiscard]] inline double interpolate(const Grid2D& g, double x, double y) {
    const double h = g.dx();
    const double u = (x - g.lo) / h - 0.5;
    const double v = (y - g.lo) / h - 0.5;
    const double limit = static_cast<double>(g.n);
    if (!(u > -1.0 && u < limit && v > -1.0 && v < limit)) return 0.0;
    const double fu = std::floor(u), fv = std::floor(v);
    const double tu = u - fu, tv = v - fv;
    const auto i = static_cast<long>(fu), j = static_cast<long>(fv);
    const long n = static_cast<long>(g.n);
    auto val = [&](long a, long b) {
        return (a >= 0 && a < n && b >= 0 && b < n)
                   ? g.values[static_cast<std::size_t>(a) * g.n + static_cast<std::size_t>(b)]
                   : 0.0;
    };
    return (1 - tu) * ((1 - tv) * val(i, j) + tv * val(i, j + 1)) +
           tu * ((1 - tv) * val(i + 1, j) + tv * val(i + 1, j + 1));
}

/// Cell averages of `mass` times the given law on the grid. Atoms of
/// two_point laws are placed in the cells containing them.
[[nodiscard]] inline Grid1D project_law(const InitialLaw& law, double mass, double lo, double hi,
                                        std::size_t n) {
    Grid1D f(lo, hi, n);
    const double h = f.dx();
    auto edge = [&](std::size_t k) { return lo + static_cast<double>(k) * h; };
    switch (law.kind) {
        case InitialLaw::Kind::gaussian: {
            auto cdf = [&](double x) { return 0.5 * std::erfc(-(x - law.a) / (law.b * std::sqrt(2.0))); };
            for (std::size_t i = 0; i < n; ++i)
                f.values[i] = mass * (cdf(edge(i + 1)) - cdf(edge(i))) / h;
            break;
        }
        case InitialLaw::Kind::uniform: {
            const double width = law.b - law.a;
            for (std::size_t i = 0; i < n; ++i) {
                const double overlap =
                    std::max(0.0, std::min(edge(i + 1), law.b) - std::max(edge(i), law.a));
                f.values[i] = mass * overlap / width / h;
            }
            break;
        }
        case InitialLaw::Kind::two_point: {
            for (double x : {law.a, law.b}) {
                require(x >= lo && x < hi, "two_point atoms must lie inside the grid");
                const auto i = std::min(n - 1, static_cast<std::size_t>((x - lo) / h));
                f.values[i] += 0.5 * mass / h;
            }
            break;
        }
    }
    return f;
}

/// Mass in the outermost `width` cells on each side.
[[nodiscard]] inline double boundary_mass(const Grid1D& f, std::size_t width = 2) {
    double s = 0.0;
    for (std::size_t k = 0; k < width && k < f.n; ++k) s += f.values[k] + f.values[f.n - 1 - k];
    return s * f.dx();
}

[[nodiscard]] inline double boundary_mass(const Grid2D& g, std::size_t width = 2) {
    double s = 0.0;
    for (std::size_t i = 0; i < g.n; ++i)
        for (std::size_t j = 0; j < g.n; ++j) {
            const bool edge = i < width || j < width || i + width >= g.n || j + width >= g.n;
            if (edge) s += g.at(i, j);
        }
    return s * g.dx() * g.dx();
}

inline void write_csv(const std::string& path, const Grid1D& f) {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), "cannot open " + path + " for writing");
    out << "phi,value\n";
    char buf[64];
    for (std::size_t i = 0; i < f.n; ++i) {
        std::snprintf(buf, sizeof buf, "%.16e,%.16e\n", f.center(i), f.values[i]);
        out << buf;
    }
}

inline void write_csv(const std::string& path, const Grid2D& g) {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), "cannot open " + path + " for writing");
    out << "phi,phi_star,value\n";
    char buf[96];
    for (std::size_t i = 0; i < g.n; ++i)
        for (std::size_t j = 0; j < g.n; ++j) {
            std::snprintf(buf, sizeof buf, "%.16e,%.16e,%.16e\n", g.center(i), g.center(j),
                          g.at(i, j));
            out << buf;
        }
}

/// Midpoint-rule moments of (f, g); variances about `phi_inf`.
[[nodiscard]] inline MomentVector moments_of(const Grid1D& f, const Grid2D& g, double phi_inf) {
    MomentVector m;
    const double h = f.dx();
    for (std::size_t i = 0; i < f.n; ++i) {
        const double x = f.center(i) - phi_inf;
        m.m_f += f.values[i];
        m.i_f += f.center(i) * f.values[i];
        m.v_f += x * x * f.values[i];
    }
    m.m_f *= h;
    m.i_f *= h;
    m.v_f *= h;
    if (g.values.empty()) return m;
    const double h2 = g.dx() * g.dx();
    for (std::size_t i = 0; i < g.n; ++i) {
        const double xi = g.center(i);
        double row = 0.0, gap2 = 0.0;
        for (std::size_t j = 0; j < g.n; ++j) {
            const double v = g.at(i, j);
            const double d = xi - g.center(j);
            row += v;
            gap2 += d * d * v;
        }
        m.m_g += row;
        m.i_g += xi * row;
        m.v_g += (xi - phi_inf) * (xi - phi_inf) * row;
        m.vbar_g += gap2;
    }
    m.m_g *= h2;
    m.i_g *= h2;
    m.v_g *= h2;
    m.vbar_g *= h2;
    return m;
}

/// Moments of a free-particle grid alone.
[[nodiscard]] inline MomentVector moments_of(const Grid1D& f, double phi_inf) {
    return moments_of(f, Grid2D{}, phi_inf);
}

}  // namespace pairkin
