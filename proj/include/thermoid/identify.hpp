#pragma once

// Output-error prediction and exponentially weighted, regularized recursive
// least squares.

#include "thermoid/errors.hpp"
#include "thermoid/regressors.hpp"
#include "thermoid/simulator.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

namespace thermoid {

using ThetaVector = Eigen::VectorXd;

struct RlsConfig {
    double forgetting = 0.999;  ///< lambda in (0, 1]
    double reg_init = 1.0e3;    ///< P_0 = reg_init * I
    std::size_t rmse_window = 2016;
    std::optional<ThetaVector> theta0;  ///< zero when unset

    void validate() const {
        if (!(forgetting > 0.0 && forgetting <= 1.0)) throw InvalidParameter("forgetting must lie in (0, 1]");
        if (!(reg_init > 0.0) || !std::isfinite(reg_init)) throw InvalidParameter("reg_init must be positive");
        if (rmse_window < 2) throw InvalidParameter("rmse_window must be at least 2");
    }
};

struct RlsState {
    ThetaVector theta;
    Eigen::MatrixXd p_matrix;
    double forgetting = 0.999;
    double reg_init = 1.0e3;
    std::size_t k = 0;

    static RlsState init(std::size_t dim, const RlsConfig& cfg) {
        cfg.validate();
        RlsState s;
        const auto n = static_cast<Eigen::Index>(dim);
        if (cfg.theta0) {
            if (cfg.theta0->size() != n) throw ShapeError("theta0 length does not match the regressor");
            s.theta = *cfg.theta0;
        } else {
            s.theta = ThetaVector::Zero(n);
        }
        s.p_matrix = cfg.reg_init * Eigen::MatrixXd::Identity(n, n);
        s.forgetting = cfg.forgetting;
        s.reg_init = cfg.reg_init;
        return s;
    }
};

/// In-place RLS step. Returns the a-priori error y - phi' theta_old.
inline double rls_update_inplace(RlsState& s, const Eigen::Ref<const Eigen::VectorXd>& phi, double y) {
    if (phi.size() != s.theta.size()) throw ShapeError("regressor and theta lengths differ");
    const double err = y - phi.dot(s.theta);
    const Eigen::VectorXd p_phi = s.p_matrix * phi;
    const double denom = s.forgetting + phi.dot(p_phi);
    const Eigen::VectorXd gain = p_phi / denom;
    s.theta += gain * err;
    s.p_matrix -= gain * p_phi.transpose();
    s.p_matrix /= s.forgetting;
    s.p_matrix = 0.5 * (s.p_matrix + s.p_matrix.transpose()).eval();
    if (!std::isfinite(err) || !s.theta.allFinite() || !std::isfinite(denom))
        throw NumericalError("non-finite recursive least-squares update", s.k);
    ++s.k;
    return err;
}

inline RlsState rls_update(RlsState s, const Eigen::VectorXd& phi, double y) {
    rls_update_inplace(s, phi, y);
    return s;
}

/// One-step output-error prediction phi(k, theta)' theta.
inline double oe_predict(const ThetaVector& theta, const RegressorSpec& spec, const LaggedHistory& hist,
                         std::size_t k) {
    const auto phi = build_regressor(spec, hist, k);
    if (phi.size() != theta.size()) throw ShapeError("theta length does not match the regressor");
    return phi.dot(theta);
}

/// Fixed-parameter output-error simulation over a dataset. The first
/// max_lag samples use the measured output in place of predictions.
inline std::vector<double> simulate(const ThetaVector& theta, const RegressorSpec& spec,
                                    const TimeSeriesDataset& ds) {
    const std::size_t warm = max_lag(spec);
    LaggedHistory hist(spec);
    std::vector<double> out;
    out.reserve(ds.size());
    for (std::size_t k = 0; k < ds.size(); ++k) {
        Sample s = sample_at(ds, k);
        if (k < warm) {
            s.y_hat = target_of(spec, s);
        } else {
            s.y_hat = oe_predict(theta, spec, hist, k);
            if (!std::isfinite(s.y_hat)) throw NumericalError("output-error simulation diverged", k);
        }
        out.push_back(s.y_hat);
        hist.push(std::move(s));
    }
    return out;
}

struct TrainReport {
    std::size_t window = 2016;
    std::vector<double> errors;         ///< a-priori one-step errors, accumulated over passes
    std::vector<double> rolling_rmse;   ///< RMSE over the trailing window
    std::vector<double> pass_end_rmse;  ///< rolling RMSE at the end of each pass
    ThetaVector theta;
    Eigen::MatrixXd p_matrix;

    double final_rmse() const { return rolling_rmse.empty() ? 0.0 : rolling_rmse.back(); }
};

namespace detail {

class RollingRmse {
public:
    explicit RollingRmse(std::size_t window) : window_(window), buf_(window, 0.0) {}

    double push(double e) {
        const double sq = e * e;
        if (count_ >= window_) sum_ -= buf_[count_ % window_];
        buf_[count_ % window_] = sq;
        sum_ += sq;
        ++count_;
        // Recompute periodically to shed accumulated cancellation error.
        if (count_ % (4 * window_) == 0) {
            sum_ = 0.0;
            for (double v : buf_) sum_ += v;
        }
        const auto n = static_cast<double>(std::min(count_, window_));
        return std::sqrt(std::max(sum_, 0.0) / n);
    }

private:
    std::size_t window_;
    std::vector<double> buf_;
    std::size_t count_ = 0;
    double sum_ = 0.0;
};

} // namespace detail

/// Sequential RLS over the dataset, repeated `passes` times. Histories are
/// reset at the start of each pass while theta and P carry over. Predictions
/// fed back into the regressors are a-posteriori outputs phi' theta_new.
inline TrainReport train(const TimeSeriesDataset& ds, const RegressorSpec& spec, std::size_t passes,
                         const RlsConfig& cfg) {
    ds.validate();
    if (ds.n_neighbors() != spec.n_neighbors)
        throw ShapeError("dataset has " + std::to_string(ds.n_neighbors()) + " neighbour columns, model expects " +
                         std::to_string(spec.n_neighbors));
    const std::size_t dim = regressor_length(spec);
    auto rls = RlsState::init(dim, cfg);
    const std::size_t warm = max_lag(spec);

    TrainReport rep;
    rep.window = cfg.rmse_window;
    detail::RollingRmse rmse(cfg.rmse_window);
    Eigen::VectorXd phi(static_cast<Eigen::Index>(dim));
    std::span<double> phi_span(phi.data(), dim);

    for (std::size_t pass = 0; pass < passes; ++pass) {
        LaggedHistory hist(spec);
        for (std::size_t k = 0; k < ds.size(); ++k) {
            Sample s = sample_at(ds, k);
            const double y = target_of(spec, s);
            if (k < warm) {
                s.y_hat = y;
                hist.push(std::move(s));
                continue;
            }
            build_regressor_into(spec, hist, k, phi_span);
            const double err = rls_update_inplace(rls, phi, y);
            rep.errors.push_back(err);
            rep.rolling_rmse.push_back(rmse.push(err));
            s.y_hat = phi.dot(rls.theta);
            if (!std::isfinite(s.y_hat)) throw NumericalError("prediction diverged during training", k);
            hist.push(std::move(s));
        }
        rep.pass_end_rmse.push_back(rep.final_rmse());
    }
    rep.theta = rls.theta;
    rep.p_matrix = rls.p_matrix;
    return rep;
}

} // namespace thermoid
