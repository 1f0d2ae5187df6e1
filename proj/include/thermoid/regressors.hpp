#pragma once

// Regression vectors for output-error predictors of zone and water
// temperatures, plus the delay-operator algebra the nonlinear regressors are
// derived from.

#include "thermoid/errors.hpp"
#include "thermoid/simulator.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace thermoid {

// ---------------------------------------------------------------------------
// Delay operators

/// Polynomial in the one-step delay q^-1 whose coefficients may vary with the
/// time index: op{x}(k) = sum_m tap_m(k) x(k - m).
class DelayOp {
public:
    using Tap = std::function<double(std::ptrdiff_t)>;

    DelayOp() : DelayOp(std::vector<double>{1.0}) {}

    explicit DelayOp(std::vector<Tap> taps) : taps_(std::move(taps)) {
        if (taps_.empty()) throw InvalidParameter("delay operator needs at least one tap");
    }

    explicit DelayOp(const std::vector<double>& coefficients) {
        if (coefficients.empty()) throw InvalidParameter("delay operator needs at least one tap");
        for (double c : coefficients) taps_.push_back([c](std::ptrdiff_t) { return c; });
    }

    static DelayOp identity() { return DelayOp(); }

    std::size_t order() const { return taps_.size() - 1; }

    double tap(std::size_t m, std::ptrdiff_t k) const { return taps_.at(m)(k); }

    /// Product outer * inner, i.e. outer{inner{x}}. Coefficient l at time k is
    /// sum_{m+n=l} outer_m(k) inner_n(k-m).
    friend DelayOp compose(const DelayOp& outer, const DelayOp& inner) {
        const std::size_t order = outer.order() + inner.order();
        std::vector<Tap> taps;
        taps.reserve(order + 1);
        for (std::size_t l = 0; l <= order; ++l) {
            taps.push_back([outer, inner, l](std::ptrdiff_t k) {
                double c = 0.0;
                for (std::size_t m = 0; m <= std::min(l, outer.order()); ++m) {
                    const std::size_t n = l - m;
                    if (n > inner.order()) continue;
                    c += outer.tap(m, k) * inner.tap(n, k - static_cast<std::ptrdiff_t>(m));
                }
                return c;
            });
        }
        return DelayOp(std::move(taps));
    }

private:
    std::vector<Tap> taps_;
};

inline double apply_op(const DelayOp& op, std::span<const double> signal, std::size_t k) {
    if (k < op.order())
        throw UnderflowError("delay operator of order " + std::to_string(op.order()) + " applied at k=" +
                             std::to_string(k));
    if (k >= signal.size()) throw UnderflowError("index past the end of the signal");
    double v = 0.0;
    const auto kk = static_cast<std::ptrdiff_t>(k);
    for (std::size_t m = 0; m <= op.order(); ++m) v += op.tap(m, kk) * signal[k - m];
    return v;
}

/// outer{inner{x}}(k) evaluated by nesting the two applications rather than
/// through the composed coefficients.
inline double apply_nested(const DelayOp& outer, const DelayOp& inner, std::span<const double> signal,
                           std::size_t k) {
    if (k < outer.order() + inner.order()) throw UnderflowError("insufficient history for nested operator");
    double v = 0.0;
    const auto kk = static_cast<std::ptrdiff_t>(k);
    for (std::size_t m = 0; m <= outer.order(); ++m) v += outer.tap(m, kk) * apply_op(inner, signal, k - m);
    return v;
}

/// Q_s = 1 - (1 + eps a_s) q^-1 for a separator with constant coefficient a_s.
inline DelayOp separator_op(double a_s, double epsilon) {
    return DelayOp(std::vector<double>{1.0, -(1.0 + epsilon * a_s)});
}

/// Affine flow dependence a_wc(V) = -a_w - gain * V of the water node.
struct WaterCoefficient {
    double a_w = 0.0;
    double gain = 0.0;  ///< c_w / C_w for mass flow

    double operator()(double flow) const { return -a_w - gain * flow; }

    static WaterCoefficient from(const ZoneParams& params) {
        const double c_w = params.rh.capacitance();
        return {1.0 / (c_w * params.rh.r_c), params.rh.c_w_medium / c_w};
    }
};

/// Q_wc(V(k)) = 1 - (1 + eps a_wc(V(k))) q^-1, time-varying through the flow.
inline DelayOp water_op(const WaterCoefficient& a_wc, std::vector<double> flows, double epsilon) {
    auto shared = std::make_shared<const std::vector<double>>(std::move(flows));
    return DelayOp(std::vector<DelayOp::Tap>{
        [](std::ptrdiff_t) { return 1.0; },
        [shared, a_wc, epsilon](std::ptrdiff_t k) {
            if (k < 0 || static_cast<std::size_t>(k) >= shared->size())
                throw UnderflowError("flow signal does not cover index " + std::to_string(k));
            return -(1.0 + epsilon * a_wc((*shared)[static_cast<std::size_t>(k)]));
        }});
}

/// max_k |Q1 Q2{x}(k) - Q2 Q1{x}(k)| over every admissible k.
inline double verify_property_1(const DelayOp& q1, const DelayOp& q2, std::span<const double> signal) {
    double worst = 0.0;
    for (std::size_t k = q1.order() + q2.order(); k < signal.size(); ++k)
        worst = std::max(worst, std::abs(apply_nested(q1, q2, signal, k) - apply_nested(q2, q1, signal, k)));
    return worst;
}

/// Correction (1 + eps a_s) eps (a_wc(V(k)) - a_wc(V(k-1))) x(k-2) by which
/// the separator and water operators fail to commute.
inline double property_2_correction(const WaterCoefficient& a_wc, std::span<const double> flows, double a_s,
                                    double epsilon, std::span<const double> signal, std::size_t k) {
    if (k < 2) throw UnderflowError("commutator correction needs k >= 2");
    return (1.0 + epsilon * a_s) * epsilon * (a_wc(flows[k]) - a_wc(flows[k - 1])) * signal[k - 2];
}

/// max_k |Q_s Q_wc{x} - (Q_wc Q_s{x} - correction)|.
inline double verify_property_2(const WaterCoefficient& a_wc, std::span<const double> flows, double a_s,
                                double epsilon, std::span<const double> signal) {
    if (signal.size() < 4 || flows.size() < signal.size())
        throw UnderflowError("commutator check needs signals of length >= 4 and a covering flow signal");
    const auto qs = separator_op(a_s, epsilon);
    const auto qw = water_op(a_wc, std::vector<double>(flows.begin(), flows.end()), epsilon);
    double worst = 0.0;
    for (std::size_t k = 2; k < signal.size(); ++k) {
        const double lhs = apply_nested(qs, qw, signal, k);
        const double rhs =
            apply_nested(qw, qs, signal, k) - property_2_correction(a_wc, flows, a_s, epsilon, signal, k);
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

/// Coefficients (1, alpha_1, ..., alpha_|A|) of a product of constant
/// separator operators, recovered from its responses to unit impulses.
inline std::vector<double> product_coefficients(const std::vector<DelayOp>& ops) {
    const std::size_t order = ops.size();
    std::vector<double> alpha(order + 1);
    for (std::size_t m = 0; m <= order; ++m) {
        // Zero-padded so every intermediate value read at index 2*order is exact.
        std::vector<double> cur(2 * order + 1, 0.0);
        cur[2 * order - m] = 1.0;
        for (const auto& op : ops) {
            std::vector<double> next(cur.size(), 0.0);
            for (std::size_t k = op.order(); k < cur.size(); ++k) next[k] = apply_op(op, cur, k);
            cur = std::move(next);
        }
        alpha[m] = cur[2 * order];
    }
    return alpha;
}

/// Residual of the finite-impulse form of a separator-operator product.
inline double verify_property_3(const std::vector<DelayOp>& ops, std::span<const double> signal) {
    const auto alpha = product_coefficients(ops);
    const std::size_t order = ops.size();
    std::vector<double> cur(signal.begin(), signal.end());
    std::size_t first_valid = 0;
    for (const auto& op : ops) {
        std::vector<double> next(cur.size(), 0.0);
        first_valid += op.order();
        for (std::size_t k = first_valid; k < cur.size(); ++k) next[k] = apply_op(op, cur, k);
        cur = std::move(next);
    }
    double worst = 0.0;
    for (std::size_t k = order; k < signal.size(); ++k) {
        double fir = 0.0;
        for (std::size_t m = 0; m <= order; ++m) fir += alpha[m] * signal[k - m];
        worst = std::max(worst, std::abs(cur[k] - fir));
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Model structures

enum class Structure { Lrm, NrmFiZone, NrmFiRh, NrmMi, NrmLi };

inline std::string_view to_string(Structure s) {
    switch (s) {
        case Structure::Lrm: return "LRM";
        case Structure::NrmFiZone: return "NRM_FI_ZONE";
        case Structure::NrmFiRh: return "NRM_FI_RH";
        case Structure::NrmMi: return "NRM_MI";
        case Structure::NrmLi: return "NRM_LI";
    }
    return "?";
}

inline Structure parse_structure(std::string_view name) {
    for (auto s : {Structure::Lrm, Structure::NrmFiZone, Structure::NrmFiRh, Structure::NrmMi, Structure::NrmLi})
        if (to_string(s) == name) return s;
    throw ConfigError("unknown model structure '" + std::string(name) + "'");
}

struct RegressorSpec {
    Structure structure = Structure::NrmMi;
    std::size_t n_neighbors = 1;

    /// The RH predictor targets the water temperature, every other structure the zone.
    bool targets_water() const { return structure == Structure::NrmFiRh; }
};

enum class Signal { YHat, Tr, Trj, Tw, TwIn, TaIn, Vw, Va, Qext, One };

inline std::string_view to_string(Signal s) {
    switch (s) {
        case Signal::YHat: return "yhat";
        case Signal::Tr: return "T_r";
        case Signal::Trj: return "T_rj";
        case Signal::Tw: return "T_w";
        case Signal::TwIn: return "Tw_in";
        case Signal::TaIn: return "Ta_in";
        case Signal::Vw: return "Vw";
        case Signal::Va: return "Va";
        case Signal::Qext: return "Qext";
        case Signal::One: return "1";
    }
    return "?";
}

/// Factor signal(k - m - extra_lag) of one regressor entry.
struct Factor {
    Signal signal;
    int extra_lag = 0;
};

/// A column of entries over lags m = first .. n_scale*|N| + last_offset.
struct Block {
    std::vector<Factor> factors;
    int first = 1;
    int n_scale = 1;
    int last_offset = 0;
    bool per_neighbor = false;

    int last(std::size_t n) const { return n_scale * static_cast<int>(n) + last_offset; }
    std::size_t lags(std::size_t n) const {
        const int count = last(n) - first + 1;
        return count > 0 ? static_cast<std::size_t>(count) : 0;
    }
};

namespace detail {

inline std::vector<Block> lrm_blocks() {
    return {
        {{{Signal::YHat}}, 1, 1, 2, false},
        {{{Signal::Trj}}, 1, 1, 2, true},
        {{{Signal::Va}}, 1, 1, 2, false},
        {{{Signal::TaIn}}, 1, 1, 2, false},
        {{{Signal::Vw}}, 1, 1, 2, false},
        // Printed as conditioned on theta; treated as the measured inlet temperature.
        {{{Signal::TwIn}}, 1, 1, 2, false},
        {{{Signal::Qext}}, 1, 1, 2, false},
    };
}

inline std::vector<Block> nrm_fi_rh_blocks() {
    return {
        {{{Signal::YHat}}, 1, 0, 1, false},
        {{{Signal::Vw}, {Signal::YHat}}, 1, 0, 1, false},
        {{{Signal::Vw}, {Signal::TwIn}}, 1, 0, 1, false},
        {{{Signal::Tr}}, 1, 0, 1, false},
    };
}

inline std::vector<Block> nrm_fi_zone_blocks() {
    return {
        {{{Signal::YHat}}, 1, 1, 1, false},
        {{{Signal::Trj}}, 2, 1, 1, true},
        {{{Signal::Va}, {Signal::YHat}}, 1, 1, 1, false},
        {{{Signal::Va}, {Signal::TaIn}}, 1, 1, 1, false},
        {{{Signal::Tw}}, 1, 1, 1, false},
        {{{Signal::Qext}}, 1, 1, 1, false},
    };
}

inline std::vector<Block> nrm_mi_blocks(Signal ta_in, Signal tw_in) {
    return {
        {{{Signal::YHat}}, 1, 1, 2, false},
        {{{Signal::Trj}}, 2, 1, 2, true},
        {{{Signal::Va}, {Signal::YHat}}, 1, 1, 2, false},
        {{{Signal::Va}, {ta_in}}, 1, 1, 2, false},
        {{{Signal::Va}, {Signal::Vw}, {ta_in}}, 2, 1, 2, false},
        // Flow lags one step behind the prediction in this block.
        {{{Signal::Vw, 1}, {Signal::YHat}}, 1, 1, 1, false},
        {{{Signal::Vw}, {Signal::YHat}}, 2, 1, 2, false},
        {{{Signal::Vw}, {Signal::Va}, {Signal::YHat}}, 2, 1, 2, false},
        {{{Signal::Vw}, {tw_in}}, 2, 1, 2, false},
        {{{Signal::Qext}}, 1, 1, 2, false},
        {{{Signal::Vw}, {Signal::Qext}}, 2, 1, 2, false},
    };
}

} // namespace detail

/// Declarative block layout of each structure.
inline const std::vector<Block>& blocks(Structure s) {
    static const std::vector<Block> lrm = detail::lrm_blocks();
    static const std::vector<Block> rh = detail::nrm_fi_rh_blocks();
    static const std::vector<Block> fi_zone = detail::nrm_fi_zone_blocks();
    static const std::vector<Block> mi = detail::nrm_mi_blocks(Signal::TaIn, Signal::TwIn);
    static const std::vector<Block> li = detail::nrm_mi_blocks(Signal::One, Signal::One);
    switch (s) {
        case Structure::Lrm: return lrm;
        case Structure::NrmFiRh: return rh;
        case Structure::NrmFiZone: return fi_zone;
        case Structure::NrmMi: return mi;
        case Structure::NrmLi: return li;
    }
    throw ConfigError("unknown model structure");
}

inline std::size_t regressor_length(const RegressorSpec& spec) {
    std::size_t len = 0;
    for (const auto& b : blocks(spec.structure))
        len += b.lags(spec.n_neighbors) * (b.per_neighbor ? spec.n_neighbors : 1);
    return len;
}

/// Deepest lag any entry of the structure reaches.
inline std::size_t max_lag(const RegressorSpec& spec) {
    int deepest = 0;
    for (const auto& b : blocks(spec.structure)) {
        if (b.lags(spec.n_neighbors) == 0) continue;
        int extra = 0;
        for (const auto& f : b.factors) extra = std::max(extra, f.extra_lag);
        deepest = std::max(deepest, b.last(spec.n_neighbors) + extra);
    }
    return static_cast<std::size_t>(deepest);
}

/// Human-readable name of every regressor entry, in layout order.
inline std::vector<std::string> regressor_labels(const RegressorSpec& spec) {
    std::vector<std::string> labels;
    for (const auto& b : blocks(spec.structure)) {
        const std::size_t reps = b.per_neighbor ? spec.n_neighbors : 1;
        for (std::size_t j = 0; j < reps; ++j) {
            for (int m = b.first; m <= b.last(spec.n_neighbors); ++m) {
                std::string label;
                for (const auto& f : b.factors) {
                    if (!label.empty()) label += '*';
                    label += to_string(f.signal);
                    if (f.signal == Signal::Trj) label += "_" + std::to_string(j + 1);
                    if (f.signal != Signal::One) label += "(k-" + std::to_string(m + f.extra_lag) + ")";
                }
                labels.push_back(std::move(label));
            }
        }
    }
    return labels;
}

// ---------------------------------------------------------------------------
// Lagged history

/// One sampling instant as seen by a predictor. During multi-step rollouts
/// the measurement slots of future samples carry predicted values.
struct Sample {
    double t_r = 0.0;
    std::vector<double> t_rj;
    double t_w = 0.0;  ///< water temperature fed to the zone predictor (measured or predicted)
    double tw_in = 0.0;
    double ta_in = 0.0;
    double vw = 0.0;
    double va = 0.0;
    double qext = 0.0;
    double y_hat = 0.0;  ///< the predictor's own output for this instant
};

inline Sample sample_at(const TimeSeriesDataset& ds, std::size_t k) {
    Sample s;
    s.t_r = ds.t_r[k];
    s.t_rj.reserve(ds.t_rj.size());
    for (const auto& col : ds.t_rj) s.t_rj.push_back(col[k]);
    s.t_w = ds.t_w[k];
    s.tw_in = ds.tw_in[k];
    s.ta_in = ds.ta_in[k];
    s.vw = ds.vw[k];
    s.va = ds.va[k];
    s.qext = ds.qext[k];
    return s;
}

/// Measured output of a structure: water temperature for the RH predictor,
/// zone temperature otherwise.
inline double target_of(const RegressorSpec& spec, const Sample& s) {
    return spec.targets_water() ? s.t_w : s.t_r;
}

/// Ring buffer over the most recent samples, addressed by absolute index.
class LaggedHistory {
public:
    explicit LaggedHistory(std::size_t depth) : depth_(std::max<std::size_t>(depth, 1)) {}

    LaggedHistory(const RegressorSpec& spec, std::size_t extra = 0)
        : LaggedHistory(std::max(max_lag(spec), spec.n_neighbors + 2) + extra) {}

    std::size_t depth() const { return depth_; }
    std::size_t size() const { return first_ + buf_.size(); }
    std::size_t oldest() const { return first_; }

    void push(Sample s) {
        buf_.push_back(std::move(s));
        if (buf_.size() > depth_) {
            buf_.pop_front();
            ++first_;
        }
    }

    const Sample& at(std::size_t k) const {
        if (k < first_ || k >= size())
            throw UnderflowError("sample " + std::to_string(k) + " not in history [" + std::to_string(first_) +
                                 ", " + std::to_string(size()) + ")");
        return buf_[k - first_];
    }
    Sample& at(std::size_t k) { return const_cast<Sample&>(std::as_const(*this).at(k)); }

    const Sample& back() const { return buf_.back(); }
    Sample& back() { return buf_.back(); }

    void clear() {
        buf_.clear();
        first_ = 0;
    }

private:
    std::size_t depth_;
    std::size_t first_ = 0;
    std::deque<Sample> buf_;
};

namespace detail {

inline double signal_value(const Sample& s, Signal sig, std::size_t neighbor) {
    switch (sig) {
        case Signal::YHat: return s.y_hat;
        case Signal::Tr: return s.t_r;
        case Signal::Trj:
            if (neighbor >= s.t_rj.size()) throw ShapeError("sample lacks neighbour " + std::to_string(neighbor));
            return s.t_rj[neighbor];
        case Signal::Tw: return s.t_w;
        case Signal::TwIn: return s.tw_in;
        case Signal::TaIn: return s.ta_in;
        case Signal::Vw: return s.vw;
        case Signal::Va: return s.va;
        case Signal::Qext: return s.qext;
        case Signal::One: return 1.0;
    }
    return 0.0;
}

} // namespace detail

/// Fills out with phi(k); samples k-1, k-2, ... must be in the history.
inline void build_regressor_into(const RegressorSpec& spec, const LaggedHistory& hist, std::size_t k,
                                 std::span<double> out) {
    if (out.size() != regressor_length(spec)) throw ShapeError("regressor buffer has the wrong length");
    const std::size_t deepest = max_lag(spec);
    if (k < deepest)
        throw UnderflowError("regressor at k=" + std::to_string(k) + " needs " + std::to_string(deepest) + " lags");
    std::size_t i = 0;
    for (const auto& b : blocks(spec.structure)) {
        const std::size_t reps = b.per_neighbor ? spec.n_neighbors : 1;
        for (std::size_t j = 0; j < reps; ++j) {
            for (int m = b.first; m <= b.last(spec.n_neighbors); ++m) {
                double v = 1.0;
                for (const auto& f : b.factors) {
                    const auto lag = static_cast<std::size_t>(m + f.extra_lag);
                    v *= detail::signal_value(hist.at(k - lag), f.signal, j);
                }
                out[i++] = v;
            }
        }
    }
}

inline Eigen::VectorXd build_regressor(const RegressorSpec& spec, const LaggedHistory& hist, std::size_t k) {
    Eigen::VectorXd phi(static_cast<Eigen::Index>(regressor_length(spec)));
    build_regressor_into(spec, hist, k, std::span<double>(phi.data(), static_cast<std::size_t>(phi.size())));
    return phi;
}

} // namespace thermoid
