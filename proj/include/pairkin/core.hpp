#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace pairkin {

/// Error raised for violated preconditions and failed numerical procedures.
/// The message names the violated constraint.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) throw Error(message);
}

/// Rate constants of the collision models.
///
/// `lambda` is the pairing rate constant (per unit time and unit mass),
/// `gamma` the collision-end rate used by Model 1, and `epsilon` the scale
/// parameter of the rescaled (near-instantaneous) runs; unscaled runs keep
/// `epsilon == 1`. Zero rates are accepted and switch the corresponding
/// process off.
struct Params {
    double lambda = 1.0;
    double gamma = 1.0;
    double epsilon = 1.0;

    void validate() const {
        require(std::isfinite(lambda) && lambda >= 0.0, "lambda must satisfy lambda ≥ 0");
        require(std::isfinite(gamma) && gamma >= 0.0, "gamma must satisfy gamma ≥ 0");
        require(std::isfinite(epsilon) && epsilon > 0.0 && epsilon <= 1.0,
                "epsilon must satisfy 0 < epsilon ≤ 1");
    }
};

/// States of the two partners of a colliding pair.
struct PairState {
    double phi = 0.0;
    double phi_star = 0.0;

    [[nodiscard]] double midpoint() const { return 0.5 * (phi + phi_star); }
    [[nodiscard]] double gap() const { return phi - phi_star; }
    [[nodiscard]] PairState swapped() const { return {phi_star, phi}; }

    friend bool operator==(const PairState&, const PairState&) = default;
};

/// Model 1 collision flow: the half-gap decays like e^{-s} around the fixed
/// midpoint. Negative `s` runs the flow backwards (post- to pre-collisional).
[[nodiscard]] inline PairState flow_model1(const PairState& p, double s) {
    const double mid = 0.5 * (p.phi + p.phi_star);
    const double half_gap = 0.5 * (p.phi - p.phi_star) * std::exp(-s);
    return {mid + half_gap, mid - half_gap};
}

/// Model 2 collision flow: the gap closes at unit rate and the pair stays at
/// its midpoint once aligned. Requires `s >= 0`.
[[nodiscard]] inline PairState flow_model2(const PairState& p, double s) {
    require(s >= 0.0, "flow_model2 requires s ≥ 0");
    const double mid = 0.5 * (p.phi + p.phi_star);
    const double gap = p.phi - p.phi_star;
    const double remaining = std::max(0.0, std::abs(gap) - s);
    const double half_gap = 0.5 * std::copysign(remaining, gap);
    return {mid + half_gap, mid - half_gap};
}

/// Time until complete alignment under the Model 2 flow at unit speed.
/// Rescaled runs (speed 1/epsilon) multiply by epsilon.
[[nodiscard]] inline double collision_duration_model2(const PairState& p) {
    return std::abs(p.phi - p.phi_star);
}

/// Volume factor of the inverse Model 1 collision map after duration `s`.
[[nodiscard]] inline double jacobian_model1(double s) {
    require(s >= 0.0, "jacobian_model1 requires s ≥ 0");
    return std::exp(s);
}

/// The seven closed moments of (f, g).
///
/// Masses, first moments and variance-type moments of the free-particle
/// density f and the pair density g. `vbar_g` is the mean squared gap of
/// colliding pairs weighted by g.
struct MomentVector {
    double m_f = 0.0;
    double m_g = 0.0;
    double i_f = 0.0;
    double i_g = 0.0;
    double v_f = 0.0;
    double v_g = 0.0;
    double vbar_g = 0.0;

    static constexpr std::size_t size = 7;

    [[nodiscard]] double& operator[](std::size_t k) {
        double* fields[] = {&m_f, &m_g, &i_f, &i_g, &v_f, &v_g, &vbar_g};
        return *fields[k];
    }
    [[nodiscard]] double operator[](std::size_t k) const {
        const double fields[] = {m_f, m_g, i_f, i_g, v_f, v_g, vbar_g};
        return fields[k];
    }

    [[nodiscard]] double total_mass() const { return m_f + 2.0 * m_g; }
    [[nodiscard]] double total_first_moment() const { return i_f + 2.0 * i_g; }
    [[nodiscard]] double total_variance() const { return v_f + 2.0 * v_g; }
    /// Mean state I / M; zero for vacuum.
    [[nodiscard]] double mean_state() const {
        const double m = total_mass();
        return m > 0.0 ? total_first_moment() / m : 0.0;
    }

    MomentVector& operator+=(const MomentVector& o) {
        for (std::size_t k = 0; k < size; ++k) (*this)[k] += o[k];
        return *this;
    }
    MomentVector& operator*=(double a) {
        for (std::size_t k = 0; k < size; ++k) (*this)[k] *= a;
        return *this;
    }
    friend MomentVector operator+(MomentVector a, const MomentVector& b) { return a += b; }
    friend MomentVector operator*(double a, MomentVector x) { return x *= a; }

    friend bool operator==(const MomentVector&, const MomentVector&) = default;
};

inline constexpr const char* moment_names[MomentVector::size] = {
    "m_f", "m_g", "i_f", "i_g", "v_f", "v_g", "vbar_g"};

}  // namespace pairkin
