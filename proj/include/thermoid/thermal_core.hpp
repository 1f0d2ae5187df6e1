#pragma once

// Lumped RC (bond-graph) heat-mass transfer model of a single thermal zone:
// one air node, one two-resistance/one-capacitance separator per neighbour,
// and a hydronic radiator loop with a water node. Air-side HVAC acts as a
// flow-dependent conductance towards the inlet air temperature.
//
// All rates are per second. Flows follow one convention throughout:
//   water: mass flow [kg/s],      1/R_w = c_w * mdot_w
//   air:   volume flow [m^3/s],   1/R_a = rho_a * c_a * vdot_a

#include "thermoid/errors.hpp"

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace thermoid {

inline constexpr double kSecondsPerHour = 3600.0;

namespace detail {

inline void require_positive(double v, const char* name) {
    if (!std::isfinite(v) || v <= 0.0)
        throw InvalidParameter(std::string(name) + " must be positive and finite, got " + std::to_string(v));
}

inline void require_finite(double v, const char* name) {
    if (!std::isfinite(v))
        throw InvalidParameter(std::string(name) + " must be finite");
}

} // namespace detail

struct SeparatorParams {
    double r_plus = 0.0;   ///< zone-side resistance [K/W]
    double r_minus = 0.0;  ///< neighbour-side resistance [K/W]
    double c_s = 0.0;      ///< separator capacitance [J/K]

    void validate() const {
        detail::require_positive(r_plus, "separator r_plus");
        detail::require_positive(r_minus, "separator r_minus");
        detail::require_positive(c_s, "separator c_s");
    }
};

/// Radiant (hydronic) heating loop.
struct RhParams {
    double c_w_medium = 0.0;  ///< specific heat [J/(kg K)]
    double rho_w = 0.0;       ///< density [kg/m^3]
    double v_w_volume = 0.0;  ///< medium volume [m^3]
    double r_c = 0.0;         ///< radiator-to-zone convection resistance [K/W]

    double capacitance() const { return c_w_medium * rho_w * v_w_volume; }

    void validate() const {
        detail::require_positive(c_w_medium, "rh c_w_medium");
        detail::require_positive(rho_w, "rh rho_w");
        detail::require_positive(v_w_volume, "rh v_w_volume");
        detail::require_positive(r_c, "rh r_c");
    }
};

struct HvacParams {
    double c_a = 0.0;    ///< specific heat of air [J/(kg K)]
    double rho_a = 0.0;  ///< air density [kg/m^3]

    void validate() const {
        detail::require_positive(c_a, "hvac c_a");
        detail::require_positive(rho_a, "hvac rho_a");
    }
};

struct Separator {
    std::string neighbor;
    SeparatorParams params;
};

struct ZoneParams {
    double c_r = 0.0;  ///< zone capacitance [J/K]
    std::vector<Separator> separators;  ///< one per neighbour, in column order
    RhParams rh;
    HvacParams hvac;

    std::size_t n_neighbors() const { return separators.size(); }

    void validate() const {
        detail::require_positive(c_r, "zone c_r");
        if (separators.empty()) throw InvalidParameter("zone needs at least one neighbour");
        for (const auto& s : separators) s.params.validate();
        rh.validate();
        hvac.validate();
    }
};

/// Zone, separator and water temperatures [degC]. Also used for rates [K/s].
struct PlantState {
    double t_r = 0.0;
    std::vector<double> t_s;
    double t_w = 0.0;

    std::size_t size() const { return t_s.size() + 2; }

    /// Flat view order: (T_r, T_s..., T_w).
    double operator[](std::size_t i) const {
        if (i == 0) return t_r;
        if (i <= t_s.size()) return t_s[i - 1];
        return t_w;
    }
    double& operator[](std::size_t i) {
        if (i == 0) return t_r;
        if (i <= t_s.size()) return t_s[i - 1];
        return t_w;
    }

    std::string component_name(std::size_t i) const {
        if (i == 0) return "T_r";
        if (i <= t_s.size()) return "T_s[" + std::to_string(i - 1) + "]";
        return "T_w";
    }

    static PlantState uniform(double temperature, std::size_t n_neighbors) {
        return {temperature, std::vector<double>(n_neighbors, temperature), temperature};
    }
};

using StateRate = PlantState;

struct ControlInput {
    double vdot_w = 0.0;  ///< water mass flow [kg/s]
    double vdot_a = 0.0;  ///< air volume flow [m^3/s]
};

struct Disturbance {
    double t_w_in = 0.0;                 ///< water inlet temperature [degC]
    double t_a_in = 0.0;                 ///< air inlet temperature [degC]
    std::vector<double> t_neighbors;     ///< neighbour temperatures [degC]
    double q_ext = 0.0;                  ///< aggregate external gains [W]

    static Disturbance uniform(double temperature, std::size_t n_neighbors) {
        return {temperature, temperature, std::vector<double>(n_neighbors, temperature), 0.0};
    }
};

struct SeparatorCoefficients {
    double a_rs_plus = 0.0;  ///< 1/(C_r R+)
    double a_s_plus = 0.0;   ///< 1/(C_s R+)
    double a_s_minus = 0.0;  ///< 1/(C_s R-)
    double a_s = 0.0;        ///< -a_s_plus - a_s_minus
};

/// Every coefficient of the bilinear state-space model at a given flow.
struct CoefficientSet {
    double a_r = 0.0;
    double a_ra = 0.0;
    double a_rw = 0.0;
    double a_ext = 0.0;
    double a_w = 0.0;
    double a_ww = 0.0;
    double a_wc = 0.0;
    double inv_r_w = 0.0;  ///< water-side conductance [W/K]
    double inv_r_a = 0.0;  ///< air-side conductance [W/K]
    std::vector<SeparatorCoefficients> separators;
};

inline CoefficientSet coefficients(const ZoneParams& params, const ControlInput& u) {
    params.validate();
    detail::require_finite(u.vdot_w, "vdot_w");
    detail::require_finite(u.vdot_a, "vdot_a");
    if (u.vdot_w < 0.0 || u.vdot_a < 0.0) throw InvalidParameter("flows must be non-negative");

    CoefficientSet c;
    const double c_r = params.c_r;
    const double c_w = params.rh.capacitance();

    c.inv_r_w = params.rh.c_w_medium * u.vdot_w;
    c.inv_r_a = params.hvac.rho_a * params.hvac.c_a * u.vdot_a;

    double a_r = 0.0;
    c.separators.reserve(params.separators.size());
    for (const auto& sep : params.separators) {
        const auto& p = sep.params;
        SeparatorCoefficients s;
        s.a_rs_plus = 1.0 / (c_r * p.r_plus);
        s.a_s_plus = 1.0 / (p.c_s * p.r_plus);
        s.a_s_minus = 1.0 / (p.c_s * p.r_minus);
        s.a_s = -s.a_s_plus - s.a_s_minus;
        a_r -= s.a_rs_plus;
        c.separators.push_back(s);
    }
    c.a_rw = 1.0 / (c_r * params.rh.r_c);
    c.a_ra = c.inv_r_a / c_r;
    c.a_r = a_r - c.a_rw - c.a_ra;
    c.a_ext = 1.0 / c_r;
    c.a_w = 1.0 / (c_w * params.rh.r_c);
    c.a_ww = c.inv_r_w / c_w;
    c.a_wc = -c.a_w - c.a_ww;
    return c;
}

inline void check_shapes(const ZoneParams& params, const PlantState& x, const Disturbance& d) {
    const auto n = params.n_neighbors();
    if (x.t_s.size() != n)
        throw ShapeError("state has " + std::to_string(x.t_s.size()) + " separator temperatures, zone has " +
                         std::to_string(n) + " neighbours");
    if (d.t_neighbors.size() != n)
        throw ShapeError("disturbance has " + std::to_string(d.t_neighbors.size()) +
                         " neighbour temperatures, zone has " + std::to_string(n) + " neighbours");
}

/// Time derivative of the state given precomputed coefficients [K/s].
inline StateRate derivative(const CoefficientSet& c, const PlantState& x, const Disturbance& d) {
    StateRate dx;
    dx.t_s.resize(x.t_s.size());
    double zone = c.a_r * x.t_r + c.a_rw * x.t_w + c.a_ra * d.t_a_in + c.a_ext * d.q_ext;
    for (std::size_t j = 0; j < x.t_s.size(); ++j) {
        const auto& s = c.separators[j];
        zone += s.a_rs_plus * x.t_s[j];
        dx.t_s[j] = s.a_s_plus * x.t_r + s.a_s * x.t_s[j] + s.a_s_minus * d.t_neighbors[j];
    }
    dx.t_r = zone;
    dx.t_w = c.a_w * x.t_r + c.a_wc * x.t_w + c.a_ww * d.t_w_in;
    return dx;
}

inline StateRate derivative(const ZoneParams& params, const PlantState& x, const ControlInput& u,
                            const Disturbance& d) {
    check_shapes(params, x, d);
    return derivative(coefficients(params, u), x, d);
}

} // namespace thermoid
