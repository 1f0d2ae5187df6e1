#include "thermoid/defaults.hpp"
#include "thermoid/excitation.hpp"
#include "thermoid/identify.hpp"

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace thermoid;

namespace {

// Euler-derived water-node coefficients for (yhat, Vw*yhat, Vw*Tw_in, T_r), rates per second.
ThetaVector physical_rh_theta(const ZoneParams& z, double eps_hours) {
    const double h = eps_hours * kSecondsPerHour;
    const auto a = WaterCoefficient::from(z);
    ThetaVector th(4);
    th << 1.0 - h * a.a_w, -h * a.gain, h * a.gain, h * a.a_w;
    return th;
}

// Dataset with random inputs whose water temperature follows the RH predictor exactly.
TimeSeriesDataset rh_dataset(const ThetaVector& theta, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> tr(18.0, 23.0), tin(30.0, 50.0);
    std::bernoulli_distribution on(0.5);
    TimeSeriesDataset ds;
    ds.reserve(n, 1);
    double tw = 30.0;
    for (std::size_t k = 0; k < n; ++k) {
        ds.t_r.push_back(tr(rng));
        ds.t_rj[0].push_back(5.0);
        ds.tw_in.push_back(tin(rng));
        ds.ta_in.push_back(10.0);
        ds.vw.push_back(on(rng) ? 0.0787 : 0.0);
        ds.va.push_back(0.01);
        ds.qext.push_back(0.0);
        ds.occ.push_back(1.0);
        if (k > 0) {
            Eigen::Vector4d phi(tw, ds.vw[k - 1] * tw, ds.vw[k - 1] * ds.tw_in[k - 1], ds.t_r[k - 1]);
            tw = phi.dot(theta);
        }
        ds.t_w.push_back(tw);
    }
    return ds;
}

TimeSeriesDataset short_sim(double hours, double noise = 0.05) {
    auto cfg = defaults::sim();
    cfg.duration = hours;
    cfg.noise_std = noise;
    return run_experiment(defaults::zone(), cfg);
}

double min_eigenvalue(const Eigen::MatrixXd& p) {
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(p).eigenvalues().minCoeff();
}

} // namespace

TEST(Rls, ZeroRegressorOnlyAdvancesCounter) {
    RlsConfig cfg;
    cfg.theta0 = ThetaVector::Constant(3, 0.7);
    const auto s0 = RlsState::init(3, cfg);
    const auto s1 = rls_update(s0, Eigen::VectorXd::Zero(3), 5.0);
    EXPECT_EQ(s1.theta, s0.theta);
    EXPECT_EQ(s1.k, 1u);
    // With forgetting the covariance is only rescaled by 1/lambda.
    EXPECT_LT((s1.p_matrix - s0.p_matrix / cfg.forgetting).cwiseAbs().maxCoeff(), 1e-12);

    cfg.forgetting = 1.0;
    const auto u0 = RlsState::init(3, cfg);
    EXPECT_EQ(rls_update(u0, Eigen::VectorXd::Zero(3), 5.0).p_matrix, u0.p_matrix);
}

TEST(Rls, ScalarMatchesClosedFormLeastSquares) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    for (double delta : {1.0, 1e3, 1e9}) {
        RlsConfig cfg;
        cfg.forgetting = 1.0;
        cfg.reg_init = delta;
        auto s = RlsState::init(1, cfg);
        double sxx = 0.0, sxy = 0.0;
        for (int i = 0; i < 200; ++i) {
            const double x = g(rng), y = 1.7 * x + 0.3 * g(rng);
            rls_update_inplace(s, Eigen::VectorXd::Constant(1, x), y);
            sxx += x * x;
            sxy += x * y;
        }
        // P_0 = delta regularizes the normal equations by 1/delta.
        EXPECT_NEAR(s.theta[0], sxy / (sxx + 1.0 / delta), 1e-12);
        if (delta == 1e9) {
            EXPECT_NEAR(s.theta[0], sxy / sxx, 1e-10);
        }
        EXPECT_NEAR(s.p_matrix(0, 0), 1.0 / (sxx + 1.0 / delta), 1e-15);
    }
}

TEST(Rls, WeightedBatchEquivalence) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    const int dim = 4, n = 500;
    for (double lambda : {1.0, 0.99}) {
        RlsConfig cfg;
        cfg.forgetting = lambda;
        cfg.reg_init = 10.0;
        auto s = RlsState::init(dim, cfg);
        Eigen::MatrixXd r = Eigen::MatrixXd::Identity(dim, dim) * std::pow(lambda, n) / cfg.reg_init;
        Eigen::VectorXd b = Eigen::VectorXd::Zero(dim);
        for (int i = 0; i < n; ++i) {
            Eigen::VectorXd phi(dim);
            for (int j = 0; j < dim; ++j) phi[j] = g(rng);
            const double y = phi.sum() + 0.1 * g(rng);
            rls_update_inplace(s, phi, y);
            const double w = std::pow(lambda, n - 1 - i);
            r += w * phi * phi.transpose();
            b += w * phi * y;
        }
        const Eigen::VectorXd batch = r.ldlt().solve(b);
        EXPECT_LT((s.theta - batch).cwiseAbs().maxCoeff(), 1e-9) << lambda;
    }
}

TEST(Rls, CovarianceStaysSymmetricPositiveDefinite) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    const int dim = 6;
    auto s = RlsState::init(dim, RlsConfig{});
    Eigen::VectorXd truth = Eigen::VectorXd::LinSpaced(dim, -1.0, 1.0);
    for (int i = 1; i <= 100000; ++i) {
        Eigen::VectorXd phi(dim);
        for (int j = 0; j < dim; ++j) phi[j] = g(rng) * (j + 1);
        rls_update_inplace(s, phi, phi.dot(truth) + 0.01 * g(rng));
        if (i % 10000 == 0) {
            EXPECT_LT((s.p_matrix - s.p_matrix.transpose()).cwiseAbs().maxCoeff(), 1e-10);
            EXPECT_GT(min_eigenvalue(s.p_matrix), 0.0) << i;
        }
    }
    EXPECT_LT((s.theta - truth).norm(), 1e-2);
}

TEST(Rls, RejectsBadInput) {
    auto s = RlsState::init(2, RlsConfig{});
    EXPECT_THROW(rls_update_inplace(s, Eigen::VectorXd::Ones(3), 1.0), ShapeError);
    s.k = 17;
    try {
        rls_update_inplace(s, Eigen::VectorXd::Ones(2), std::nan(""));
        FAIL();
    } catch (const NumericalError& e) {
        EXPECT_EQ(e.step(), 17u);
    }
    RlsConfig bad;
    bad.forgetting = 1.5;
    EXPECT_THROW(RlsState::init(2, bad), InvalidParameter);
    bad = RlsConfig{};
    bad.reg_init = 0.0;
    EXPECT_THROW(RlsState::init(2, bad), InvalidParameter);
    bad = RlsConfig{};
    bad.rmse_window = 1;
    EXPECT_THROW(RlsState::init(2, bad), InvalidParameter);
    bad = RlsConfig{};
    bad.theta0 = ThetaVector::Zero(3);
    EXPECT_THROW(RlsState::init(2, bad), ShapeError);
}

TEST(OePredict, ZeroThetaPredictsZero) {
    const auto ds = short_sim(12.0);
    const RegressorSpec spec{Structure::NrmMi, 1};
    const auto y = simulate(ThetaVector::Zero(static_cast<Eigen::Index>(regressor_length(spec))), spec, ds);
    for (std::size_t k = max_lag(spec); k < y.size(); ++k) EXPECT_EQ(y[k], 0.0);
    for (std::size_t k = 0; k < max_lag(spec); ++k) EXPECT_EQ(y[k], ds.t_r[k]);
}

TEST(OePredict, PersistenceModel) {
    const auto ds = short_sim(12.0);
    const RegressorSpec spec{Structure::Lrm, 1};
    ThetaVector th = ThetaVector::Zero(21);
    th[0] = 1.0;  // yhat(k-1)
    const auto y = simulate(th, spec, ds);
    for (std::size_t k = max_lag(spec); k < y.size(); ++k) EXPECT_EQ(y[k], y[k - 1]);
    EXPECT_EQ(y.back(), ds.t_r[max_lag(spec) - 1]);
}

TEST(OePredict, PhysicalWaterPredictorIsSecondOrderAccurate) {
    const auto z = defaults::zone();
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> t(15.0, 45.0);
    auto worst_error = [&](double eps) {
        const auto th = physical_rh_theta(z, eps);
        std::mt19937_64 r2(5);
        double worst = 0.0;
        for (int i = 0; i < 50; ++i) {
            const PlantState x{t(r2), {t(r2)}, t(r2)};
            const Disturbance d{t(r2), t(r2), {t(r2)}, 200.0};
            const ControlInput u{(i % 2) ? 0.0787 : 0.0, 0.01};
            const auto next = step(z, x, u, d, eps);
            LaggedHistory h(RegressorSpec{Structure::NrmFiRh, 1});
            Sample s;
            s.t_r = x.t_r;
            s.t_w = x.t_w;
            s.y_hat = x.t_w;
            s.vw = u.vdot_w;
            s.tw_in = d.t_w_in;
            s.t_rj = d.t_neighbors;
            h.push(s);
            worst = std::max(worst, std::abs(oe_predict(th, {Structure::NrmFiRh, 1}, h, 1) - next.t_w));
        }
        return worst;
    };
    const double ratio = worst_error(1.0 / 12.0) / worst_error(1.0 / 24.0);
    EXPECT_GE(ratio, 3.0);
    EXPECT_LE(ratio, 5.0);
}

TEST(OePredict, OutputErrorPurity) {
    const auto ds = short_sim(48.0);
    for (auto st : {Structure::Lrm, Structure::NrmMi, Structure::NrmFiZone}) {
        const RegressorSpec spec{st, 1};
        std::mt19937_64 rng(6);
        std::normal_distribution<double> g;
        ThetaVector th(static_cast<Eigen::Index>(regressor_length(spec)));
        for (auto& v : th) v = 0.01 * g(rng);
        th[0] = 0.9;
        auto corrupted = ds;
        for (std::size_t k = max_lag(spec); k < ds.size(); ++k) corrupted.t_r[k] += 5.0 * g(rng);
        EXPECT_EQ(simulate(th, spec, ds), simulate(th, spec, corrupted)) << to_string(st);
    }
}

TEST(Train, ZeroPassesReturnsInitialTheta) {
    const auto ds = short_sim(12.0);
    RlsConfig cfg;
    cfg.theta0 = ThetaVector::Constant(26, 0.25);
    const auto rep = train(ds, {Structure::NrmMi, 1}, 0, cfg);
    EXPECT_EQ(rep.theta, *cfg.theta0);
    EXPECT_TRUE(rep.errors.empty());
    EXPECT_TRUE(rep.rolling_rmse.empty());
    EXPECT_EQ(rep.final_rmse(), 0.0);
}

TEST(Train, RecoversWaterPredictorFromSelfGeneratedData) {
    const auto theta = physical_rh_theta(defaults::zone(), 1.0 / 12.0);
    const auto ds = rh_dataset(theta, 5000, 7);
    RlsConfig cfg;
    cfg.rmse_window = 500;
    const auto rep = train(ds, {Structure::NrmFiRh, 1}, 3, cfg);
    EXPECT_LT((rep.theta - theta).norm() / theta.norm(), 1e-6);
    ASSERT_EQ(rep.pass_end_rmse.size(), 3u);
    for (std::size_t p = 1; p < rep.pass_end_rmse.size(); ++p)
        EXPECT_LE(rep.pass_end_rmse[p], rep.pass_end_rmse[p - 1] + 1e-9);
    EXPECT_EQ(rep.errors.size(), 3u * (ds.size() - max_lag({Structure::NrmFiRh, 1})));
}

TEST(Train, RollingRmseMatchesDirectWindow) {
    const auto ds = short_sim(72.0);
    RlsConfig cfg;
    cfg.rmse_window = 50;
    const auto rep = train(ds, {Structure::Lrm, 1}, 2, cfg);
    ASSERT_EQ(rep.errors.size(), rep.rolling_rmse.size());
    for (std::size_t k : {std::size_t{0}, std::size_t{10}, std::size_t{49}, std::size_t{50}, rep.errors.size() - 1}) {
        const std::size_t lo = k + 1 >= 50 ? k + 1 - 50 : 0;
        double sum = 0.0;
        for (std::size_t i = lo; i <= k; ++i) sum += rep.errors[i] * rep.errors[i];
        EXPECT_NEAR(rep.rolling_rmse[k], std::sqrt(sum / static_cast<double>(k + 1 - lo)), 1e-12) << k;
    }
    for (double r : rep.rolling_rmse) EXPECT_GE(r, 0.0);
}

TEST(Train, IsDeterministic) {
    const auto ds = short_sim(48.0);
    const auto a = train(ds, {Structure::NrmMi, 1}, 2, RlsConfig{});
    const auto b = train(ds, {Structure::NrmMi, 1}, 2, RlsConfig{});
    EXPECT_EQ(a.theta, b.theta);
    EXPECT_EQ(a.errors, b.errors);
}

TEST(Train, NeighbourMismatchIsShapeError) {
    const auto ds = short_sim(12.0);
    EXPECT_THROW(train(ds, {Structure::NrmMi, 2}, 1, RlsConfig{}), ShapeError);
}

TEST(Identifiability, InformationMatrixHasFullRankOnExcitedData) {
    const auto ds = short_sim(24.0 * 28);
    for (auto st : {Structure::NrmMi, Structure::Lrm}) {
        const RegressorSpec spec{st, 1};
        ASSERT_TRUE(informativity_check(ds, spec).pass);
        const auto dim = static_cast<Eigen::Index>(regressor_length(spec));
        Eigen::MatrixXd info = Eigen::MatrixXd::Zero(dim, dim);
        LaggedHistory h(spec);
        for (std::size_t k = 0; k < ds.size(); ++k) {
            if (k >= max_lag(spec)) {
                const auto phi = build_regressor(spec, h, k);
                info += phi * phi.transpose();
            }
            Sample s = sample_at(ds, k);
            s.y_hat = s.t_r;
            h.push(std::move(s));
        }
        // Rank is invariant to column scaling; equilibrate so flows (~1e-2) and
        // gains (~1e2) do not masquerade as near-dependence.
        const Eigen::VectorXd d = info.diagonal().cwiseSqrt().cwiseInverse();
        const Eigen::MatrixXd scaled = d.asDiagonal() * info * d.asDiagonal();
        const Eigen::JacobiSVD<Eigen::MatrixXd> svd(scaled);
        const auto& sv = svd.singularValues();
        EXPECT_GT(sv.minCoeff(), 0.0) << to_string(st);
        EXPECT_TRUE(std::isfinite(sv.maxCoeff() / sv.minCoeff()));
        // LRM's three Tw_in lags are nearly collinear: the inlet temperature is
        // smooth at this sampling rate, so its second difference is almost zero.
        if (st == Structure::NrmMi) {
            EXPECT_GT(sv.minCoeff() / sv.maxCoeff(), 1e-10);
        }
    }
}
