#pragma once

// Reference single-zone scenario: one neighbour (the outdoor air), a heavy
// envelope, a hydronic radiator loop and natural ventilation. These are
// inputs, not constants of the model; every value is overridable from the
// experiment config file.

#include "thermoid/simulator.hpp"
#include "thermoid/thermal_core.hpp"

#include <numbers>

namespace thermoid::defaults {

inline ZoneParams zone() {
    ZoneParams z;
    z.c_r = 4.0e7;
    z.separators.push_back({"outdoor", SeparatorParams{1.0 / 800.0, 1.0 / 180.0, 3.0e7}});
    z.rh = RhParams{4186.0, 1000.0, 0.1, 1.0 / 500.0};
    z.hvac = HvacParams{1005.0, 1.2};
    return z;
}

inline DisturbanceSpec disturbances() {
    constexpr double day = 1.0 / 24.0;
    constexpr double week = 1.0 / 168.0;
    constexpr double pi = std::numbers::pi;
    DisturbanceSpec d;
    d.neighbors.push_back(SignalRecipe{2.0, {{day, 2.5, -0.75 * pi}, {3 * week, 1.0, 0.3}, {week, 1.5, 1.1}}});
    d.solar = SignalRecipe{100.0, {{day, 80.0, -0.5 * pi}, {2 * day, 20.0, 0.5 * pi}}};
    d.air_inlet = SignalRecipe{4.0, {{day, 3.0, -0.7 * pi}, {2 * week, 2.0, 0.8}, {3 * day, 0.5, 0.0}}};
    d.air_flow = SignalRecipe{0.015, {{day, 0.006, 0.2}, {4 * day, 0.004, 1.3}, {4 * week, 0.003, 2.1}}};
    d.occupancy = OccupancySchedule{24.0, 13.0, 10.0, 0.5};
    d.occupant_gain = 150.0;
    return d;
}

inline SimConfig sim() {
    SimConfig s;
    s.disturbances = disturbances();
    return s;
}

} // namespace thermoid::defaults
