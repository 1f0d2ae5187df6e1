#pragma once

// Receding-horizon predictive control over a discrete control set, solved by
// exhaustive enumeration of piecewise-constant plans.

#include "thermoid/errors.hpp"
#include "thermoid/identify.hpp"
#include "thermoid/regressors.hpp"
#include "thermoid/simulator.hpp"
#include "thermoid/thermal_core.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace thermoid {

struct MpcConfig {
    double alpha = 1.0e6;      ///< comfort weight
    double beta = 0.3333;      ///< heating weight [kW/(degC h)]
    double gamma = 0.5278e3;   ///< pump weight [kW s/(h m^3)]
    double t_sam = 1.0 / 12.0; ///< [h]
    double t_opt = 1.0;        ///< [h]
    double t_hor = 5.0;        ///< [h]
    std::vector<double> inlet_set{40.0, 45.0};
    std::vector<double> flow_set{0.0, 0.0787};
    double t_set = 21.0;
    bool heating_cost_gated_by_flow = false;
    std::size_t max_plans = 1u << 16;

    std::size_t samples_per_period() const { return static_cast<std::size_t>(std::llround(t_opt / t_sam)); }
    std::size_t n_periods() const { return static_cast<std::size_t>(std::llround(t_hor / t_opt)); }
    std::size_t n_hor() const { return samples_per_period() * n_periods(); }
    std::size_t n_options() const { return inlet_set.size() * flow_set.size(); }

    /// Number of admissible plans, saturating at max_plans + 1.
    std::size_t n_plans() const {
        std::size_t total = 1;
        for (std::size_t p = 0; p < n_periods(); ++p) {
            if (total > (max_plans + 1) / std::max<std::size_t>(n_options(), 1)) return max_plans + 1;
            total *= n_options();
        }
        return total;
    }

    void validate() const {
        for (auto [v, name] : {std::pair{alpha, "alpha"}, {beta, "beta"}, {gamma, "gamma"}})
            if (!std::isfinite(v) || v < 0.0) throw ConfigError(std::string("mpc ") + name + " must be >= 0");
        for (auto [v, name] : {std::pair{t_sam, "t_sam"}, {t_opt, "t_opt"}, {t_hor, "t_hor"}})
            if (!std::isfinite(v) || v <= 0.0) throw ConfigError(std::string("mpc ") + name + " must be positive");
        auto multiple = [](double big, double small) {
            const double r = big / small;
            return std::abs(r - std::round(r)) < 1e-9 * std::max(1.0, r) && std::round(r) >= 1.0;
        };
        if (!multiple(t_opt, t_sam)) throw ConfigError("mpc t_opt must be a multiple of t_sam");
        if (!multiple(t_hor, t_opt)) throw ConfigError("mpc t_hor must be a multiple of t_opt");
        if (inlet_set.empty() || flow_set.empty()) throw ConfigError("mpc control sets must be nonempty");
        for (double f : flow_set)
            if (!std::isfinite(f) || f < 0.0) throw ConfigError("mpc flow_set values must be >= 0");
        for (double t : inlet_set)
            if (!std::isfinite(t)) throw ConfigError("mpc inlet_set values must be finite");
        if (!std::isfinite(t_set)) throw ConfigError("mpc t_set must be finite");
    }

    void check_budget() const {
        if (n_plans() > max_plans)
            throw ConfigError("mpc enumeration of " + std::to_string(n_options()) + "^" +
                              std::to_string(n_periods()) + " plans exceeds max_plans = " +
                              std::to_string(max_plans));
    }
};

/// Piecewise-constant plan, one (inlet, flow) pair per optimization period.
struct ControlPlan {
    std::vector<double> inlet;
    std::vector<double> flow;
    std::size_t index = 0;

    std::size_t n_periods() const { return inlet.size(); }

    /// Plan with the given lexicographic index: option = inlet_idx*|flow| + flow_idx,
    /// earliest period most significant.
    static ControlPlan from_index(std::size_t index, const MpcConfig& cfg) {
        const std::size_t base = cfg.n_options();
        const std::size_t periods = cfg.n_periods();
        ControlPlan plan;
        plan.index = index;
        plan.inlet.resize(periods);
        plan.flow.resize(periods);
        std::size_t rest = index;
        for (std::size_t p = periods; p-- > 0;) {
            const std::size_t opt = rest % base;
            rest /= base;
            plan.inlet[p] = cfg.inlet_set[opt / cfg.flow_set.size()];
            plan.flow[p] = cfg.flow_set[opt % cfg.flow_set.size()];
        }
        return plan;
    }

    double inlet_at(std::size_t sample, std::size_t per_period) const { return inlet[sample / per_period]; }
    double flow_at(std::size_t sample, std::size_t per_period) const { return flow[sample / per_period]; }
};

/// Exogenous signals over the horizon, samples 0 .. N_hor (inclusive).
struct HorizonForecast {
    std::vector<double> occupancy;
    std::vector<std::vector<double>> t_neighbors;  ///< [neighbour][i]
    std::vector<double> ta_in;
    std::vector<double> va;
    std::vector<double> qext;

    std::size_t size() const { return occupancy.size(); }

    static HorizonForecast from_scenario(const Scenario& sc, std::size_t k0, std::size_t n_hor) {
        if (k0 + n_hor >= sc.size()) throw UnderflowError("scenario too short for the forecast horizon");
        HorizonForecast f;
        auto slice = [&](const std::vector<double>& v) {
            return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(k0),
                                       v.begin() + static_cast<std::ptrdiff_t>(k0 + n_hor + 1));
        };
        f.occupancy = slice(sc.occupancy);
        for (const auto& col : sc.t_neighbors) f.t_neighbors.push_back(slice(col));
        f.ta_in = slice(sc.t_a_in);
        f.va = slice(sc.v_a);
        f.qext = slice(sc.q_ext);
        return f;
    }
};

struct RolloutTraces {
    std::vector<double> t_r;  ///< zone temperature, N_hor + 1 values
    std::vector<double> t_w;  ///< water (outlet) temperature, N_hor + 1 values
};

struct PlanCost {
    double total = 0.0;
    double comfort = 0.0;
    double heating = 0.0;
    double pump = 0.0;
};

/// The two predictors driving a rollout: a zone model and the radiator model.
struct Predictors {
    RegressorSpec zone;
    ThetaVector theta_r;
    RegressorSpec water;
    ThetaVector theta_w;

    void validate() const {
        if (zone.targets_water()) throw ConfigError("zone predictor must target the zone temperature");
        if (!water.targets_water()) throw ConfigError("water predictor must target the water temperature");
        if (zone.n_neighbors != water.n_neighbors) throw ConfigError("predictors disagree on neighbour count");
        if (static_cast<std::size_t>(theta_r.size()) != regressor_length(zone))
            throw ShapeError("zone theta has the wrong length");
        if (static_cast<std::size_t>(theta_w.size()) != regressor_length(water))
            throw ShapeError("water theta has the wrong length");
    }

    std::size_t history_depth() const {
        return std::max({max_lag(zone), max_lag(water), zone.n_neighbors + 2}) + 1;
    }
};

namespace detail {

inline double comfort_term(double occupancy, double t_r, double t_set) {
    const double dev = t_r - t_set;
    return occupancy * dev * dev;
}

inline double heating_term(const MpcConfig& cfg, double inlet, double t_w, double flow) {
    if (cfg.heating_cost_gated_by_flow && !(flow > 0.0)) return 0.0;
    return cfg.beta * cfg.t_sam * (inlet - t_w);
}

inline double pump_term(const MpcConfig& cfg, double flow) { return cfg.gamma * cfg.t_sam * flow; }

inline PlanCost finish_cost(const MpcConfig& cfg, double comfort_sum, double heating, double pump) {
    PlanCost c;
    c.comfort = cfg.alpha * comfort_sum / static_cast<double>(cfg.n_hor());
    c.heating = heating;
    c.pump = pump;
    c.total = c.comfort + c.heating + c.pump;
    return c;
}

/// Rollout state: zone history (y_hat = zone) and water history (y_hat =
/// water). The newest sample of each is the current step i awaiting inputs.
struct Rollout {
    LaggedHistory zone;
    LaggedHistory water;
    std::size_t i = 0;
    double comfort_sum = 0.0;
    double heating = 0.0;
    double pump = 0.0;
};

inline Rollout start_rollout(const LaggedHistory& hist, const HorizonForecast& f,
                             const MpcConfig& cfg) {
    if (hist.size() == 0) throw UnderflowError("rollout needs a current sample");
    Rollout r{hist, hist};
    // Histories are anchored on measurements.
    for (std::size_t k = hist.oldest(); k < hist.size(); ++k) {
        r.zone.at(k).y_hat = r.zone.at(k).t_r;
        r.water.at(k).y_hat = r.water.at(k).t_w;
    }
    r.comfort_sum += comfort_term(f.occupancy.at(0), r.zone.back().y_hat, cfg.t_set);
    return r;
}

/// Applies inputs over step i, then predicts sample i + 1.
inline void advance(Rollout& r, const Predictors& pred, const HorizonForecast& f, const MpcConfig& cfg,
                    double inlet, double flow) {
    const std::size_t i = r.i;
    for (auto* h : {&r.zone, &r.water}) {
        auto& s = h->back();
        s.tw_in = inlet;
        s.vw = flow;
        s.ta_in = f.ta_in[i];
        s.va = f.va[i];
        s.qext = f.qext[i];
    }
    r.heating += heating_term(cfg, inlet, r.water.back().y_hat, flow);
    r.pump += pump_term(cfg, flow);

    const std::size_t k = r.zone.size();
    const double y_r = oe_predict(pred.theta_r, pred.zone, r.zone, k);
    const double y_w = oe_predict(pred.theta_w, pred.water, r.water, k);
    if (!std::isfinite(y_r)) throw DivergenceError("T_r prediction", k);
    if (!std::isfinite(y_w)) throw DivergenceError("T_w prediction", k);

    Sample s;
    s.t_r = y_r;
    s.t_w = y_w;
    s.t_rj.reserve(f.t_neighbors.size());
    for (const auto& col : f.t_neighbors) s.t_rj.push_back(col[i + 1]);
    s.y_hat = y_r;
    r.zone.push(s);
    s.y_hat = y_w;
    r.water.push(std::move(s));
    ++r.i;
    r.comfort_sum += comfort_term(f.occupancy[r.i], y_r, cfg.t_set);
}

inline void check_rollout_inputs(const Predictors& pred, const HorizonForecast& f, const MpcConfig& cfg) {
    pred.validate();
    if (f.size() < cfg.n_hor() + 1) throw ShapeError("forecast shorter than the horizon");
    if (f.t_neighbors.size() != pred.zone.n_neighbors) throw ShapeError("forecast neighbour count mismatch");
}

} // namespace detail

/// Multi-step rollout of both predictors under a plan. hist holds measured
/// samples up to the current instant k0; its last sample's inputs are
/// replaced by the plan and forecast.
inline RolloutTraces predict_horizon(const Predictors& pred, const LaggedHistory& hist, const ControlPlan& plan,
                                     const HorizonForecast& f, const MpcConfig& cfg) {
    RolloutTraces tr;
    if (cfg.n_hor() == 0) return tr;
    detail::check_rollout_inputs(pred, f, cfg);
    if (plan.n_periods() != cfg.n_periods()) throw ShapeError("plan length does not match the horizon");
    auto r = detail::start_rollout(hist, f, cfg);
    tr.t_r.push_back(r.zone.back().y_hat);
    tr.t_w.push_back(r.water.back().y_hat);
    const std::size_t spp = cfg.samples_per_period();
    for (std::size_t i = 0; i < cfg.n_hor(); ++i) {
        detail::advance(r, pred, f, cfg, plan.inlet_at(i, spp), plan.flow_at(i, spp));
        tr.t_r.push_back(r.zone.back().y_hat);
        tr.t_w.push_back(r.water.back().y_hat);
    }
    return tr;
}

/// Cost of a plan given its predicted traces.
inline PlanCost plan_cost(const RolloutTraces& tr, const ControlPlan& plan, const HorizonForecast& f,
                          const MpcConfig& cfg) {
    const std::size_t n = cfg.n_hor();
    if (tr.t_r.size() != n + 1 || tr.t_w.size() != n + 1) throw ShapeError("trace length must be N_hor + 1");
    if (f.size() < n + 1) throw ShapeError("forecast shorter than the horizon");
    const std::size_t spp = cfg.samples_per_period();
    double comfort = 0.0;
    for (std::size_t k = 0; k <= n; ++k) comfort += detail::comfort_term(f.occupancy[k], tr.t_r[k], cfg.t_set);
    double heating = 0.0;
    double pump = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double flow = plan.flow_at(k, spp);
        heating += detail::heating_term(cfg, plan.inlet_at(k, spp), tr.t_w[k], flow);
        pump += detail::pump_term(cfg, flow);
    }
    return detail::finish_cost(cfg, comfort, heating, pump);
}

struct SolveResult {
    ControlPlan plan;
    PlanCost cost;
    std::size_t evaluated = 0;
};

/// Exhaustive search. Plans sharing a prefix share its rollout, and plans are
/// visited in index order so the first strict minimum is the tie-break winner.
inline SolveResult solve(const Predictors& pred, const LaggedHistory& hist, const HorizonForecast& f,
                         const MpcConfig& cfg) {
    cfg.validate();
    cfg.check_budget();
    detail::check_rollout_inputs(pred, f, cfg);

    const std::size_t base = cfg.n_options();
    const std::size_t periods = cfg.n_periods();
    const std::size_t spp = cfg.samples_per_period();
    const std::size_t n_flow = cfg.flow_set.size();

    SolveResult best;
    best.cost.total = std::numeric_limits<double>::infinity();
    std::size_t best_index = 0;
    bool found = false;

    std::vector<detail::Rollout> stack;
    stack.reserve(periods + 1);
    stack.push_back(detail::start_rollout(hist, f, cfg));

    auto recurse = [&](auto&& self, std::size_t period, std::size_t prefix) -> void {
        for (std::size_t opt = 0; opt < base; ++opt) {
            const double inlet = cfg.inlet_set[opt / n_flow];
            const double flow = cfg.flow_set[opt % n_flow];
            stack.push_back(stack.back());
            auto& r = stack.back();
            for (std::size_t s = 0; s < spp; ++s) detail::advance(r, pred, f, cfg, inlet, flow);
            const std::size_t index = prefix * base + opt;
            if (period + 1 == periods) {
                const auto cost = detail::finish_cost(cfg, r.comfort_sum, r.heating, r.pump);
                ++best.evaluated;
                if (!found || cost.total < best.cost.total) {
                    best.cost = cost;
                    best_index = index;
                    found = true;
                }
            } else {
                self(self, period + 1, index);
            }
            stack.pop_back();
        }
    };
    if (periods == 0) {
        best.cost = detail::finish_cost(cfg, stack.back().comfort_sum, 0.0, 0.0);
        best.evaluated = 1;
    } else {
        recurse(recurse, 0, 0);
    }
    best.plan = ControlPlan::from_index(best_index, cfg);
    return best;
}

// ---------------------------------------------------------------------------
// Closed-loop evaluation

struct EpisodeSettings {
    double warmup_hours = 24.0;   ///< hysteresis operation before the controller takes over
    double duration_hours = 168.0;
};

struct EpisodeRow {
    double t_hours = 0.0;
    double t_r_plant = 0.0;
    double t_w_plant = 0.0;
    double occupancy = 0.0;
    double plan_inlet = 0.0;
    double plan_flow = 0.0;
    double run_avg_comfort = 0.0;
    double run_avg_heating = 0.0;
    double run_avg_pump = 0.0;
};

struct EpisodeReport {
    std::string controller;
    std::vector<EpisodeRow> rows;
    std::size_t solves = 0;

    double final_comfort() const { return rows.empty() ? 0.0 : rows.back().run_avg_comfort; }
    double final_heating() const { return rows.empty() ? 0.0 : rows.back().run_avg_heating; }
    double final_pump() const { return rows.empty() ? 0.0 : rows.back().run_avg_pump; }
    double final_energy() const { return final_heating() + final_pump(); }
};

namespace detail {

struct EpisodeContext {
    std::size_t k = 0;
    const Scenario* scenario = nullptr;
    const LaggedHistory* history = nullptr;  ///< measured samples up to k, inputs of k unset
    double meas_r = 0.0;
    double meas_r_prev = 0.0;
};

struct Decision {
    double inlet = 0.0;
    double flow = 0.0;
};

/// Runs warm-up under hysteresis, then the policy; realized costs are taken
/// against noise-free plant temperatures.
template <class Policy>
EpisodeReport run_episode(const ZoneParams& params, const SimConfig& sim, const MpcConfig& cfg,
                          const EpisodeSettings& ep, std::size_t history_depth, std::size_t lookahead,
                          Policy&& policy) {
    params.validate();
    const auto n_nb = params.n_neighbors();
    sim.validate(n_nb);
    cfg.validate();
    if (std::abs(cfg.t_sam - sim.epsilon) > 1e-12) throw ConfigError("mpc t_sam must equal the sim epsilon");
    if (!(ep.warmup_hours >= 0.0) || !(ep.duration_hours > 0.0)) throw ConfigError("invalid episode length");

    const auto warm = static_cast<std::size_t>(std::llround(ep.warmup_hours / sim.epsilon));
    const auto steps = static_cast<std::size_t>(std::llround(ep.duration_hours / sim.epsilon));
    std::seed_seq seq{sim.seed, std::uint64_t{0x5eed}};
    std::mt19937_64 seeder(seq);
    const auto scenario_seed = seeder();
    std::mt19937_64 noise_rng(seeder());
    std::normal_distribution<double> noise(0.0, 1.0);
    const auto sc = make_scenario(sim.disturbances, sim.epsilon, warm + steps + lookahead + 1, scenario_seed);

    EpisodeReport rep;
    rep.rows.reserve(steps);
    LaggedHistory hist(history_depth);
    auto x = PlantState::uniform(sim.initial_temperature, n_nb);
    double prev_meas = 0.0;
    double sum_comfort = 0.0, sum_heating = 0.0, sum_pump = 0.0;
    const double comfort_scale = cfg.alpha / static_cast<double>(std::max<std::size_t>(cfg.n_hor(), 1));

    for (std::size_t k = 0; k < warm + steps; ++k) {
        const double meas_r = x.t_r + sim.noise_std * noise(noise_rng);
        const double meas_w = x.t_w + sim.noise_std * noise(noise_rng);
        if (k == 0) prev_meas = meas_r;

        Sample s;
        s.t_r = meas_r;
        s.t_w = meas_w;
        for (const auto& col : sc.t_neighbors) s.t_rj.push_back(col[k]);
        s.y_hat = meas_r;
        hist.push(std::move(s));

        Decision dec;
        if (k < warm) {
            dec.flow = hysteresis_control(meas_r, prev_meas, sc.occupancy[k] > 0.5, sim.hysteresis);
            dec.inlet = heating_curve(sim.hysteresis.t_set, sc.t_out(k), sim.heating_curve);
        } else {
            dec = policy(EpisodeContext{k, &sc, &hist, meas_r, prev_meas});
        }
        const ControlInput u{dec.flow, sc.v_a[k]};
        const auto d = sc.disturbance(k, dec.inlet);
        auto& cur = hist.back();
        cur.tw_in = dec.inlet;
        cur.vw = dec.flow;
        cur.ta_in = d.t_a_in;
        cur.va = u.vdot_a;
        cur.qext = d.q_ext;

        if (k >= warm) {
            sum_comfort += comfort_scale * comfort_term(sc.occupancy[k], x.t_r, cfg.t_set);
            sum_heating += heating_term(cfg, dec.inlet, x.t_w, dec.flow);
            sum_pump += pump_term(cfg, dec.flow);
            const double n = static_cast<double>(k - warm + 1);
            EpisodeRow row;
            row.t_hours = static_cast<double>(k - warm) * sim.epsilon;
            row.t_r_plant = x.t_r;
            row.t_w_plant = x.t_w;
            row.occupancy = sc.occupancy[k];
            row.plan_inlet = dec.inlet;
            row.plan_flow = dec.flow;
            row.run_avg_comfort = sum_comfort / n;
            row.run_avg_heating = sum_heating / n;
            row.run_avg_pump = sum_pump / n;
            rep.rows.push_back(row);
        }
        x = step(params, x, u, d, sim.epsilon, k);
        prev_meas = meas_r;
    }
    return rep;
}

} // namespace detail

/// Receding-horizon control of the simulated plant: every t_opt the plan is
/// re-solved on the measured history and its first period applied.
inline EpisodeReport closed_loop_run(const ZoneParams& params, const SimConfig& sim, const MpcConfig& cfg,
                                     const EpisodeSettings& ep, const Predictors& pred) {
    pred.validate();
    cfg.check_budget();
    if (pred.zone.n_neighbors != params.n_neighbors()) throw ConfigError("predictor neighbour count mismatch");
    const std::size_t spp = cfg.samples_per_period();
    detail::Decision held;
    std::size_t solves = 0;
    std::size_t since = spp;
    auto policy = [&](const detail::EpisodeContext& ctx) {
        if (since >= spp) {
            const auto f = HorizonForecast::from_scenario(*ctx.scenario, ctx.k, cfg.n_hor());
            const auto res = solve(pred, *ctx.history, f, cfg);
            held = {res.plan.inlet.empty() ? 0.0 : res.plan.inlet[0], res.plan.flow.empty() ? 0.0 : res.plan.flow[0]};
            ++solves;
            since = 0;
        }
        ++since;
        return held;
    };
    auto rep = detail::run_episode(params, sim, cfg, ep, pred.history_depth(), cfg.n_hor(), policy);
    rep.controller = "mpc:" + std::string(to_string(pred.zone.structure));
    rep.solves = solves;
    return rep;
}

/// The same episode under the occupancy-gated hysteresis law and heating curve.
inline EpisodeReport baseline_run(const ZoneParams& params, const SimConfig& sim, const MpcConfig& cfg,
                                  const EpisodeSettings& ep) {
    auto policy = [&](const detail::EpisodeContext& ctx) {
        detail::Decision d;
        d.flow = hysteresis_control(ctx.meas_r, ctx.meas_r_prev, ctx.scenario->occupancy[ctx.k] > 0.5,
                                    sim.hysteresis);
        d.inlet = heating_curve(sim.hysteresis.t_set, ctx.scenario->t_out(ctx.k), sim.heating_curve);
        return d;
    };
    auto rep = detail::run_episode(params, sim, cfg, ep, 2, 0, policy);
    rep.controller = "hysteresis";
    return rep;
}

} // namespace thermoid
