#pragma once

// Ground-truth plant: RK4 integration with zero-order-hold inputs, synthetic
// disturbances, the occupancy-gated hysteresis law for the water flow and the
// outdoor-compensated heating curve for the water inlet temperature.

#include "thermoid/errors.hpp"
#include "thermoid/thermal_core.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace thermoid {

/// One sinusoidal component; frequency in cycles per hour, phase in radians.
struct Harmonic {
    double frequency = 0.0;
    double amplitude = 0.0;
    double phase = 0.0;
};

/// offset + sum_i amplitude_i * sin(2 pi f_i t + phase_i), t in hours.
struct SignalRecipe {
    double offset = 0.0;
    std::vector<Harmonic> harmonics;

    double operator()(double t_hours) const {
        double v = offset;
        for (const auto& h : harmonics)
            v += h.amplitude * std::sin(2.0 * std::numbers::pi * h.frequency * t_hours + h.phase);
        return v;
    }

    /// Smallest value the recipe can take.
    double lower_bound() const {
        double v = offset;
        for (const auto& h : harmonics) v -= std::abs(h.amplitude);
        return v;
    }

    void validate(const std::string& name) const {
        detail::require_finite(offset, name.c_str());
        for (const auto& h : harmonics) {
            if (!std::isfinite(h.frequency) || h.frequency < 0.0 || !std::isfinite(h.amplitude) ||
                !std::isfinite(h.phase))
                throw InvalidParameter(name + ": harmonics need finite, non-negative frequencies");
        }
    }
};

/// Daily presence window [occupied_from, occupied_until) in hours of the
/// period, wrapping around midnight. Each edge is shifted per period by a
/// uniform jitter in [-jitter_hours, +jitter_hours].
struct OccupancySchedule {
    double period_hours = 24.0;
    double occupied_from = 15.0;
    double occupied_until = 9.0;
    double jitter_hours = 0.5;

    void validate() const {
        detail::require_positive(period_hours, "occupancy period_hours");
        if (occupied_from < 0.0 || occupied_from >= period_hours || occupied_until < 0.0 ||
            occupied_until >= period_hours)
            throw InvalidParameter("occupancy window must lie inside one period");
        if (jitter_hours < 0.0 || 2.0 * jitter_hours >= period_hours / 2.0)
            throw InvalidParameter("occupancy jitter_hours out of range");
    }

    /// Presence flag (0/1) per sample.
    std::vector<double> realize(std::size_t n_samples, double epsilon, std::mt19937_64& rng) const {
        std::uniform_real_distribution<double> jitter(-jitter_hours, jitter_hours);
        const double horizon = static_cast<double>(n_samples) * epsilon;
        const auto n_periods = static_cast<std::size_t>(std::ceil(horizon / period_hours)) + 2;
        // Absolute [start, end) intervals, one per period, starting one period early
        // so a window wrapping from the previous period is covered.
        std::vector<std::pair<double, double>> windows;
        windows.reserve(n_periods);
        for (std::size_t p = 0; p < n_periods; ++p) {
            const double base = (static_cast<double>(p) - 1.0) * period_hours;
            double start = base + occupied_from + jitter(rng);
            double end = base + occupied_until + jitter(rng);
            if (occupied_until <= occupied_from) end += period_hours;
            windows.emplace_back(start, end);
        }
        std::vector<double> occ(n_samples, 0.0);
        for (std::size_t k = 0; k < n_samples; ++k) {
            const double t = static_cast<double>(k) * epsilon;
            for (const auto& [s, e] : windows) {
                if (t >= s && t < e) {
                    occ[k] = 1.0;
                    break;
                }
            }
        }
        return occ;
    }
};

struct DisturbanceSpec {
    std::vector<SignalRecipe> neighbors;  ///< neighbour 0 is the outdoor air
    SignalRecipe solar;                   ///< solar gain [W]
    SignalRecipe air_inlet;               ///< HVAC inlet air temperature [degC]
    SignalRecipe air_flow;                ///< ventilation flow [m^3/s]
    OccupancySchedule occupancy;
    double occupant_gain = 0.0;           ///< internal gain while occupied [W]

    void validate(std::size_t n_neighbors) const {
        if (neighbors.size() != n_neighbors)
            throw ShapeError("disturbance spec has " + std::to_string(neighbors.size()) +
                             " neighbour recipes, zone has " + std::to_string(n_neighbors));
        for (std::size_t j = 0; j < neighbors.size(); ++j)
            neighbors[j].validate("neighbor " + std::to_string(j + 1));
        solar.validate("solar");
        air_inlet.validate("air_inlet");
        air_flow.validate("air_flow");
        if (air_flow.lower_bound() < 0.0) throw InvalidParameter("air_flow recipe can become negative");
        if (solar.lower_bound() < 0.0) throw InvalidParameter("solar recipe can become negative");
        occupancy.validate();
        detail::require_finite(occupant_gain, "occupant_gain");
    }
};

/// Disturbance trajectories sampled on the simulation grid.
struct Scenario {
    double epsilon = 1.0 / 12.0;
    std::vector<std::vector<double>> t_neighbors;  ///< [neighbour][k]
    std::vector<double> t_a_in;
    std::vector<double> v_a;
    std::vector<double> q_ext;
    std::vector<double> occupancy;

    std::size_t size() const { return occupancy.size(); }
    double t_out(std::size_t k) const { return t_neighbors.front()[k]; }

    Disturbance disturbance(std::size_t k, double t_w_in) const {
        Disturbance d;
        d.t_w_in = t_w_in;
        d.t_a_in = t_a_in[k];
        d.q_ext = q_ext[k];
        d.t_neighbors.reserve(t_neighbors.size());
        for (const auto& col : t_neighbors) d.t_neighbors.push_back(col[k]);
        return d;
    }
};

inline Scenario make_scenario(const DisturbanceSpec& spec, double epsilon, std::size_t n_samples,
                              std::uint64_t seed) {
    detail::require_positive(epsilon, "epsilon");
    Scenario sc;
    sc.epsilon = epsilon;
    std::mt19937_64 rng(seed);
    sc.occupancy = spec.occupancy.realize(n_samples, epsilon, rng);
    sc.t_neighbors.assign(spec.neighbors.size(), std::vector<double>(n_samples));
    sc.t_a_in.resize(n_samples);
    sc.v_a.resize(n_samples);
    sc.q_ext.resize(n_samples);
    for (std::size_t k = 0; k < n_samples; ++k) {
        const double t = static_cast<double>(k) * epsilon;
        for (std::size_t j = 0; j < spec.neighbors.size(); ++j) sc.t_neighbors[j][k] = spec.neighbors[j](t);
        sc.t_a_in[k] = spec.air_inlet(t);
        sc.v_a[k] = spec.air_flow(t);
        sc.q_ext[k] = spec.solar(t) + spec.occupant_gain * sc.occupancy[k];
    }
    return sc;
}

struct HysteresisSettings {
    double t_set = 21.0;
    double delta_t = 0.1;
    double vdot_max = 0.0787;

    void validate() const {
        detail::require_finite(t_set, "t_set");
        detail::require_positive(delta_t, "hysteresis delta_t");
        detail::require_positive(vdot_max, "hysteresis vdot_max");
    }
};

struct HeatingCurveParams {
    double rho0 = 29.30;
    double rho1 = 0.80;
    double zeta = 0.97;

    void validate() const {
        detail::require_positive(rho0, "heating curve rho0");
        detail::require_positive(rho1, "heating curve rho1");
        detail::require_positive(zeta, "heating curve zeta");
    }
};

/// Occupancy-gated hysteresis law, taken literally: heat when below the band,
/// or when inside/above it and not falling.
inline double hysteresis_control(double t_r_now, double t_r_prev, bool occupied, const HysteresisSettings& s) {
    if (!occupied) return 0.0;
    const double lower = s.t_set - s.delta_t;
    if (t_r_now < lower) return s.vdot_max;
    if (t_r_now >= lower && t_r_prev <= t_r_now) return s.vdot_max;
    return 0.0;
}

inline double heating_curve(double t_set, double t_out, const HeatingCurveParams& p) {
    if (t_set > t_out) return p.rho0 + p.rho1 * std::pow(t_set - t_out, p.zeta);
    return p.rho0;
}

namespace detail {

inline PlantState axpy(const PlantState& x, double a, const StateRate& k) {
    PlantState r = x;
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += a * k[i];
    return r;
}

} // namespace detail

/// Classical RK4 over one sampling interval with u and d held constant.
/// epsilon is in hours; the model rates are per second.
inline PlantState step(const ZoneParams& params, const PlantState& x, const ControlInput& u, const Disturbance& d,
                       double epsilon, std::size_t step_index = 0) {
    detail::require_positive(epsilon, "epsilon");
    check_shapes(params, x, d);
    const auto c = coefficients(params, u);
    const double h = epsilon * kSecondsPerHour;

    const auto k1 = derivative(c, x, d);
    const auto k2 = derivative(c, detail::axpy(x, 0.5 * h, k1), d);
    const auto k3 = derivative(c, detail::axpy(x, 0.5 * h, k2), d);
    const auto k4 = derivative(c, detail::axpy(x, h, k3), d);

    PlantState next = x;
    for (std::size_t i = 0; i < next.size(); ++i) {
        next[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        if (!std::isfinite(next[i])) throw DivergenceError(next.component_name(i), step_index);
    }
    return next;
}

struct SimConfig {
    double epsilon = 1.0 / 12.0;  ///< sampling period [h]
    double duration = 24.0 * 28;  ///< [h]
    double noise_std = 0.05;      ///< measurement noise on logged T_r and T_w [degC]
    double initial_temperature = 21.0;
    DisturbanceSpec disturbances;
    HysteresisSettings hysteresis;
    HeatingCurveParams heating_curve;
    std::uint64_t seed = 1;

    std::size_t n_samples() const { return static_cast<std::size_t>(std::llround(duration / epsilon)); }

    void validate(std::size_t n_neighbors) const {
        detail::require_positive(epsilon, "sim epsilon");
        detail::require_finite(duration, "sim duration");
        if (duration < epsilon) throw InvalidParameter("sim duration must be at least one sampling period");
        if (!std::isfinite(noise_std) || noise_std < 0.0) throw InvalidParameter("noise_std must be >= 0");
        detail::require_finite(initial_temperature, "initial_temperature");
        disturbances.validate(n_neighbors);
        hysteresis.validate();
        heating_curve.validate();
    }
};

/// Sampled records covering the full-information sensor set. Row k holds the
/// measurements at t_k and the inputs applied over [t_k, t_{k+1}).
struct TimeSeriesDataset {
    double epsilon = 1.0 / 12.0;
    std::vector<double> t_r;
    std::vector<std::vector<double>> t_rj;  ///< [neighbour][k]
    std::vector<double> t_w;
    std::vector<double> tw_in;
    std::vector<double> ta_in;
    std::vector<double> vw;
    std::vector<double> va;
    std::vector<double> qext;
    std::vector<double> occ;
    std::map<std::string, std::string> metadata;

    // Noise-free plant temperatures; kept in memory only, never persisted.
    std::vector<double> t_r_true;
    std::vector<double> t_w_true;

    std::size_t size() const { return t_r.size(); }
    std::size_t n_neighbors() const { return t_rj.size(); }
    double t_hours(std::size_t k) const { return static_cast<double>(k) * epsilon; }

    void reserve(std::size_t n, std::size_t n_neighbors) {
        t_rj.assign(n_neighbors, {});
        for (auto* col : {&t_r, &t_w, &tw_in, &ta_in, &vw, &va, &qext, &occ, &t_r_true, &t_w_true})
            col->reserve(n);
        for (auto& col : t_rj) col.reserve(n);
    }

    void validate() const {
        const auto n = size();
        for (const auto* col : {&t_w, &tw_in, &ta_in, &vw, &va, &qext, &occ}) {
            if (col->size() != n) throw ShapeError("dataset columns have unequal lengths");
        }
        for (const auto& col : t_rj) {
            if (col.size() != n) throw ShapeError("dataset columns have unequal lengths");
        }
        if (t_rj.empty()) throw ShapeError("dataset has no neighbour columns");
    }
};

/// Closed-loop data generation under the hysteresis law and heating curve.
/// The controller acts on the measured (noisy) zone temperature.
inline TimeSeriesDataset run_experiment(const ZoneParams& params, const SimConfig& cfg) {
    params.validate();
    const auto n_nb = params.n_neighbors();
    cfg.validate(n_nb);

    const auto n = cfg.n_samples();
    std::seed_seq seq{cfg.seed, std::uint64_t{0x5eed}};
    std::mt19937_64 seeder(seq);
    const auto scenario_seed = seeder();
    std::mt19937_64 noise_rng(seeder());
    std::normal_distribution<double> noise(0.0, 1.0);

    const auto sc = make_scenario(cfg.disturbances, cfg.epsilon, n, scenario_seed);

    TimeSeriesDataset ds;
    ds.epsilon = cfg.epsilon;
    ds.reserve(n, n_nb);
    ds.metadata["seed"] = std::to_string(cfg.seed);
    ds.metadata["noise_std"] = std::to_string(cfg.noise_std);

    auto x = PlantState::uniform(cfg.initial_temperature, n_nb);
    double prev_measured = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double meas_r = x.t_r + cfg.noise_std * noise(noise_rng);
        const double meas_w = x.t_w + cfg.noise_std * noise(noise_rng);
        if (k == 0) prev_measured = meas_r;

        const bool occupied = sc.occupancy[k] > 0.5;
        ControlInput u{hysteresis_control(meas_r, prev_measured, occupied, cfg.hysteresis), sc.v_a[k]};
        const double t_w_in = heating_curve(cfg.hysteresis.t_set, sc.t_out(k), cfg.heating_curve);
        const auto d = sc.disturbance(k, t_w_in);

        ds.t_r.push_back(meas_r);
        ds.t_w.push_back(meas_w);
        ds.t_r_true.push_back(x.t_r);
        ds.t_w_true.push_back(x.t_w);
        for (std::size_t j = 0; j < n_nb; ++j) ds.t_rj[j].push_back(d.t_neighbors[j]);
        ds.tw_in.push_back(t_w_in);
        ds.ta_in.push_back(d.t_a_in);
        ds.vw.push_back(u.vdot_w);
        ds.va.push_back(u.vdot_a);
        ds.qext.push_back(d.q_ext);
        ds.occ.push_back(sc.occupancy[k]);

        x = step(params, x, u, d, cfg.epsilon, k);
        prev_measured = meas_r;
    }
    return ds;
}

} // namespace thermoid
