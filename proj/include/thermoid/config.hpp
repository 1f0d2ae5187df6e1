#pragma once

// Experiment configuration in a sectioned key = value format. A config file
// must spell out every key; `defaults_text()` produces a complete one.

#include "thermoid/defaults.hpp"
#include "thermoid/errors.hpp"
#include "thermoid/identify.hpp"
#include "thermoid/mpc.hpp"
#include "thermoid/regressors.hpp"
#include "thermoid/simulator.hpp"
#include "thermoid/thermal_core.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

namespace thermoid {

struct ModelSettings {
    Structure structure = Structure::NrmMi;
    RlsConfig rls;
    std::size_t passes = 3;
};

struct ExperimentConfig {
    ZoneParams plant = defaults::zone();
    SimConfig sim = defaults::sim();
    ModelSettings model;
    MpcConfig mpc;
    EpisodeSettings episode;

    std::size_t n_neighbors() const { return plant.n_neighbors(); }

    void validate() const {
        try {
            plant.validate();
            sim.validate(plant.n_neighbors());
            model.rls.validate();
        } catch (const InvalidParameter& e) {
            throw ConfigError(e.what());
        } catch (const ShapeError& e) {
            throw ConfigError(e.what());
        }
        mpc.validate();
        if (std::abs(mpc.t_sam - sim.epsilon) > 1e-12 * sim.epsilon)
            throw ConfigError("mpc.t_sam must equal sim.epsilon");
        if (model.structure == Structure::NrmFiRh)
            throw ConfigError("model.structure must be a zone predictor");
    }
};

namespace config_detail {

using boost::property_tree::ptree;

inline std::string num(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::string list(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + num(v[i]);
    return s;
}

inline std::string harmonics(const std::vector<Harmonic>& hs) {
    std::string s;
    for (std::size_t i = 0; i < hs.size(); ++i)
        s += (i ? "; " : "") + num(hs[i].frequency) + " " + num(hs[i].amplitude) + " " + num(hs[i].phase);
    return s;
}

class Reader {
public:
    explicit Reader(const ptree& t) : t_(t) {}

    std::string str(const std::string& key) const {
        const auto v = t_.get_optional<std::string>(ptree::path_type(key, '.'));
        if (!v) throw ConfigError("missing required key '" + key + "'");
        return trim(*v);
    }

    double real(const std::string& key) const { return parse_real(str(key), key); }

    std::uint64_t uint(const std::string& key) const {
        const auto s = str(key);
        std::uint64_t v = 0;
        auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size())
            throw ConfigError("key '" + key + "': expected a non-negative integer, got '" + s + "'");
        return v;
    }

    bool flag(const std::string& key) const {
        const auto s = str(key);
        if (s == "true" || s == "1") return true;
        if (s == "false" || s == "0") return false;
        throw ConfigError("key '" + key + "': expected true or false, got '" + s + "'");
    }

    std::vector<double> reals(const std::string& key) const {
        std::vector<double> out;
        std::istringstream ss(str(key));
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(parse_real(trim(item), key));
        return out;
    }

    std::vector<Harmonic> harmonic_list(const std::string& key) const {
        std::vector<Harmonic> out;
        std::istringstream ss(str(key));
        std::string item;
        while (std::getline(ss, item, ';')) {
            if (trim(item).empty()) continue;
            std::istringstream parts(item);
            std::string f, a, p, extra;
            if (!(parts >> f >> a >> p) || (parts >> extra))
                throw ConfigError("key '" + key + "': each harmonic needs 'frequency amplitude phase'");
            out.push_back({parse_real(f, key), parse_real(a, key), parse_real(p, key)});
        }
        return out;
    }

    SignalRecipe signal(const std::string& section) const {
        return {real(section + ".offset"), harmonic_list(section + ".harmonics")};
    }

private:
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t");
        if (b == std::string::npos) return "";
        const auto e = s.find_last_not_of(" \t");
        return s.substr(b, e - b + 1);
    }

    static double parse_real(const std::string& s, const std::string& key) {
        double v = 0.0;
        auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size())
            throw ConfigError("key '" + key + "': expected a number, got '" + s + "'");
        return v;
    }

    const ptree& t_;
};

inline void put_signal(ptree& t, const std::string& section, const SignalRecipe& r) {
    t.put(ptree::path_type(section + ".offset", '.'), num(r.offset));
    t.put(ptree::path_type(section + ".harmonics", '.'), harmonics(r.harmonics));
}

} // namespace config_detail

inline boost::property_tree::ptree to_ptree(const ExperimentConfig& c) {
    using config_detail::num;
    boost::property_tree::ptree t;
    auto put = [&](const std::string& key, const std::string& v) {
        t.put(boost::property_tree::ptree::path_type(key, '.'), v);
    };
    put("zone.c_r", num(c.plant.c_r));
    put("zone.n_neighbors", std::to_string(c.plant.n_neighbors()));
    for (std::size_t j = 0; j < c.plant.n_neighbors(); ++j) {
        const auto sec = "separator_" + std::to_string(j + 1);
        const auto& s = c.plant.separators[j];
        put(sec + ".neighbor", s.neighbor);
        put(sec + ".r_plus", num(s.params.r_plus));
        put(sec + ".r_minus", num(s.params.r_minus));
        put(sec + ".c_s", num(s.params.c_s));
    }
    put("rh.c_w_medium", num(c.plant.rh.c_w_medium));
    put("rh.rho_w", num(c.plant.rh.rho_w));
    put("rh.v_w_volume", num(c.plant.rh.v_w_volume));
    put("rh.r_c", num(c.plant.rh.r_c));
    put("hvac.c_a", num(c.plant.hvac.c_a));
    put("hvac.rho_a", num(c.plant.hvac.rho_a));

    put("sim.epsilon", num(c.sim.epsilon));
    put("sim.duration", num(c.sim.duration));
    put("sim.noise_std", num(c.sim.noise_std));
    put("sim.initial_temperature", num(c.sim.initial_temperature));
    put("sim.seed", std::to_string(c.sim.seed));
    put("hysteresis.t_set", num(c.sim.hysteresis.t_set));
    put("hysteresis.delta_t", num(c.sim.hysteresis.delta_t));
    put("hysteresis.vdot_max", num(c.sim.hysteresis.vdot_max));
    put("heating_curve.rho0", num(c.sim.heating_curve.rho0));
    put("heating_curve.rho1", num(c.sim.heating_curve.rho1));
    put("heating_curve.zeta", num(c.sim.heating_curve.zeta));

    const auto& d = c.sim.disturbances;
    for (std::size_t j = 0; j < d.neighbors.size(); ++j)
        config_detail::put_signal(t, "signal_neighbor_" + std::to_string(j + 1), d.neighbors[j]);
    config_detail::put_signal(t, "signal_solar", d.solar);
    config_detail::put_signal(t, "signal_air_inlet", d.air_inlet);
    config_detail::put_signal(t, "signal_air_flow", d.air_flow);
    put("occupancy.period_hours", num(d.occupancy.period_hours));
    put("occupancy.occupied_from", num(d.occupancy.occupied_from));
    put("occupancy.occupied_until", num(d.occupancy.occupied_until));
    put("occupancy.jitter_hours", num(d.occupancy.jitter_hours));
    put("occupancy.occupant_gain", num(d.occupant_gain));

    put("model.structure", std::string(to_string(c.model.structure)));
    put("model.passes", std::to_string(c.model.passes));
    put("model.forgetting", num(c.model.rls.forgetting));
    put("model.reg_init", num(c.model.rls.reg_init));
    put("model.rmse_window", std::to_string(c.model.rls.rmse_window));

    put("mpc.alpha", num(c.mpc.alpha));
    put("mpc.beta", num(c.mpc.beta));
    put("mpc.gamma", num(c.mpc.gamma));
    put("mpc.t_sam", num(c.mpc.t_sam));
    put("mpc.t_opt", num(c.mpc.t_opt));
    put("mpc.t_hor", num(c.mpc.t_hor));
    put("mpc.inlet_set", config_detail::list(c.mpc.inlet_set));
    put("mpc.flow_set", config_detail::list(c.mpc.flow_set));
    put("mpc.t_set", num(c.mpc.t_set));
    put("mpc.heating_cost_gated_by_flow", c.mpc.heating_cost_gated_by_flow ? "true" : "false");
    put("mpc.max_plans", std::to_string(c.mpc.max_plans));
    put("episode.warmup_hours", num(c.episode.warmup_hours));
    put("episode.duration_hours", num(c.episode.duration_hours));
    return t;
}

inline ExperimentConfig from_ptree(const boost::property_tree::ptree& t) {
    const config_detail::Reader r(t);
    ExperimentConfig c;
    c.plant.c_r = r.real("zone.c_r");
    const auto n = r.uint("zone.n_neighbors");
    if (n == 0 || n > 64) throw ConfigError("zone.n_neighbors must lie in [1, 64]");
    c.plant.separators.clear();
    c.sim.disturbances.neighbors.clear();
    for (std::size_t j = 0; j < n; ++j) {
        const auto sec = "separator_" + std::to_string(j + 1);
        c.plant.separators.push_back(
            {r.str(sec + ".neighbor"), {r.real(sec + ".r_plus"), r.real(sec + ".r_minus"), r.real(sec + ".c_s")}});
        c.sim.disturbances.neighbors.push_back(r.signal("signal_neighbor_" + std::to_string(j + 1)));
    }
    c.plant.rh = {r.real("rh.c_w_medium"), r.real("rh.rho_w"), r.real("rh.v_w_volume"), r.real("rh.r_c")};
    c.plant.hvac = {r.real("hvac.c_a"), r.real("hvac.rho_a")};

    c.sim.epsilon = r.real("sim.epsilon");
    c.sim.duration = r.real("sim.duration");
    c.sim.noise_std = r.real("sim.noise_std");
    c.sim.initial_temperature = r.real("sim.initial_temperature");
    c.sim.seed = r.uint("sim.seed");
    c.sim.hysteresis = {r.real("hysteresis.t_set"), r.real("hysteresis.delta_t"), r.real("hysteresis.vdot_max")};
    c.sim.heating_curve = {r.real("heating_curve.rho0"), r.real("heating_curve.rho1"),
                           r.real("heating_curve.zeta")};
    auto& d = c.sim.disturbances;
    d.solar = r.signal("signal_solar");
    d.air_inlet = r.signal("signal_air_inlet");
    d.air_flow = r.signal("signal_air_flow");
    d.occupancy = {r.real("occupancy.period_hours"), r.real("occupancy.occupied_from"),
                   r.real("occupancy.occupied_until"), r.real("occupancy.jitter_hours")};
    d.occupant_gain = r.real("occupancy.occupant_gain");

    c.model.structure = parse_structure(r.str("model.structure"));
    c.model.passes = r.uint("model.passes");
    c.model.rls.forgetting = r.real("model.forgetting");
    c.model.rls.reg_init = r.real("model.reg_init");
    c.model.rls.rmse_window = r.uint("model.rmse_window");

    c.mpc.alpha = r.real("mpc.alpha");
    c.mpc.beta = r.real("mpc.beta");
    c.mpc.gamma = r.real("mpc.gamma");
    c.mpc.t_sam = r.real("mpc.t_sam");
    c.mpc.t_opt = r.real("mpc.t_opt");
    c.mpc.t_hor = r.real("mpc.t_hor");
    c.mpc.inlet_set = r.reals("mpc.inlet_set");
    c.mpc.flow_set = r.reals("mpc.flow_set");
    c.mpc.t_set = r.real("mpc.t_set");
    c.mpc.heating_cost_gated_by_flow = r.flag("mpc.heating_cost_gated_by_flow");
    c.mpc.max_plans = r.uint("mpc.max_plans");
    c.episode.warmup_hours = r.real("episode.warmup_hours");
    c.episode.duration_hours = r.real("episode.duration_hours");
    c.validate();
    return c;
}

inline ExperimentConfig parse_config(std::istream& in) {
    boost::property_tree::ptree t;
    try {
        boost::property_tree::read_ini(in, t);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    return from_ptree(t);
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    return parse_config(in);
}

inline std::string to_text(const ExperimentConfig& c) {
    std::ostringstream out;
    boost::property_tree::write_ini(out, to_ptree(c));
    return out.str();
}

inline std::string defaults_text() { return to_text(ExperimentConfig{}); }

} // namespace thermoid
