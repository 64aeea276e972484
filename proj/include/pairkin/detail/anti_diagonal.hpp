#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "../grid.hpp"

// The Model 1 flow keeps phi + phi_star fixed, so cells (i, j) with equal
// i + j = k form an invariant line. Along a line the cell offset p = i - j
// gives the half-gap d = p/2 in units of the grid spacing, and cells are
// contiguous in d with unit width. Each line is split into the half-lines
// d >= 0 and d <= 0 (the even-line centre cell is shared half/half); the
// negative half-line is handled through its mirror image so that symmetric
// data give bitwise symmetric results.

namespace pairkin::detail {

struct HalfLine {
    /// Cell edges in units of the grid spacing: e[0] = 0 < e[1] < ...
    std::vector<double> edges;
    std::vector<double> values;

    [[nodiscard]] std::size_t size() const { return values.size(); }
    [[nodiscard]] double centre(std::size_t c) const { return 0.5 * (edges[c] + edges[c + 1]); }
    [[nodiscard]] double width(std::size_t c) const { return edges[c + 1] - edges[c]; }
};

struct LineGeometry {
    std::size_t i_min = 0;
    std::size_t i_max = 0;
    bool even = false;
    /// Number of half-line cells.
    std::size_t length = 0;
};

inline LineGeometry line_geometry(std::size_t n, std::size_t k) {
    LineGeometry g;
    g.i_min = k >= n ? k - (n - 1) : 0;
    g.i_max = std::min(k, n - 1);
    g.even = (k % 2) == 0;
    const std::size_t p_max = 2 * g.i_max - k;
    g.length = g.even ? p_max / 2 + 1 : (p_max + 1) / 2;
    return g;
}

inline void set_edges(HalfLine& h, const LineGeometry& geo) {
    h.edges.resize(geo.length + 1);
    h.edges[0] = 0.0;
    for (std::size_t c = 1; c <= geo.length; ++c)
        h.edges[c] = geo.even ? static_cast<double>(c) - 0.5 : static_cast<double>(c);
    h.values.resize(geo.length);
}

/// Grid indices (i, j) of half-line cell c; `negative` selects the mirrored side.
inline std::pair<std::size_t, std::size_t> cell_of(std::size_t k, const LineGeometry& geo,
                                                   std::size_t c, bool negative) {
    const std::size_t p = geo.even ? 2 * c : 2 * c + 1;
    const std::size_t i = (k + p) / 2;
    const std::size_t j = k - i;
    return negative ? std::pair{j, i} : std::pair{i, j};
}

inline void load(HalfLine& h, const Grid2D& g, std::size_t k, const LineGeometry& geo, bool negative) {
    for (std::size_t c = 0; c < geo.length; ++c) {
        const auto [i, j] = cell_of(k, geo, c, negative);
        h.values[c] = g.at(i, j);
    }
}

/// Monotonised-central slopes on the half-line, mirrored ghost at d = 0 and
/// zero ghost past the outer end; slopes are further capped so the linear
/// reconstruction stays nonnegative.
inline void limited_slopes(const HalfLine& h, std::vector<double>& slope) {
    const std::size_t L = h.size();
    slope.assign(L, 0.0);
    for (std::size_t c = 0; c < L; ++c) {
        const double x = h.centre(c);
        const double u = h.values[c];
        const double xl = c == 0 ? -x : h.centre(c - 1);
        const double ul = c == 0 ? u : h.values[c - 1];
        const double xr = c + 1 < L ? h.centre(c + 1) : x + h.width(c);
        const double ur = c + 1 < L ? h.values[c + 1] : 0.0;
        const double left = (u - ul) / (x - xl);
        const double right = (ur - u) / (xr - x);
        if (left * right <= 0.0) continue;
        const double central = (ur - ul) / (xr - xl);
        double s = std::min({2.0 * std::abs(left), 2.0 * std::abs(right), std::abs(central)});
        s = std::min(s, u / (0.5 * h.width(c)));
        slope[c] = std::copysign(s, central);
    }
}

/// Contracts the half-line by `scale` in (0, 1] (d -> scale * d), multiplying
/// all mass by `decay`. Returns cell masses on the same half-line cells.
inline void contract(const HalfLine& src, double scale, double decay, std::vector<double>& slope,
                     std::vector<double>& out_mass) {
    const std::size_t L = src.size();
    out_mass.assign(L, 0.0);
    limited_slopes(src, slope);
    std::size_t t = 0;
    for (std::size_t s = 0; s < L; ++s) {
        const double u = src.values[s];
        if (u == 0.0 && slope[s] == 0.0) continue;
        const double xs = src.centre(s);
        const double img_lo = scale * src.edges[s];
        const double img_hi = scale * src.edges[s + 1];
        while (t < L && src.edges[t + 1] <= img_lo) ++t;
        for (std::size_t tt = t; tt < L && src.edges[tt] < img_hi; ++tt) {
            const double lo = std::max(img_lo, src.edges[tt]);
            const double hi = std::min(img_hi, src.edges[tt + 1]);
            if (hi <= lo) continue;
            const double a = lo / scale - xs;
            const double b = hi / scale - xs;
            out_mass[tt] += decay * (u * (b - a) + 0.5 * slope[s] * (b * b - a * a));
        }
    }
}

}  // namespace pairkin::detail

namespace pairkin {

/// Conservative transport of g along the Model 1 flow: the gap contracts by
/// `scale` and all mass is multiplied by `decay`.
[[nodiscard]] inline Grid2D remap_model1(const Grid2D& g, double scale, double decay) {
    require(scale > 0.0 && scale <= 1.0, "remap scale must lie in (0, 1]");
    Grid2D out(g.lo, g.hi, g.n);
    detail::HalfLine half;
    std::vector<double> slope, pos_mass, neg_mass;
    for (std::size_t k = 0; k + 1 < 2 * g.n; ++k) {
        const auto geo = detail::line_geometry(g.n, k);
        detail::set_edges(half, geo);

        detail::load(half, g, k, geo, false);
        detail::contract(half, scale, decay, slope, pos_mass);
        detail::load(half, g, k, geo, true);
        detail::contract(half, scale, decay, slope, neg_mass);

        for (std::size_t c = 0; c < geo.length; ++c) {
            const auto [i, j] = detail::cell_of(k, geo, c, false);
            if (geo.even && c == 0) {
                out.at(i, j) = pos_mass[0] + neg_mass[0];
                continue;
            }
            out.at(i, j) = pos_mass[c];
            out.at(j, i) = neg_mass[c];
        }
    }
    return out;
}

}  // namespace pairkin
