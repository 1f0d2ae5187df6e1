#include "thermoid/defaults.hpp"
#include "thermoid/regressors.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <map>

using namespace thermoid;

namespace {

std::vector<double> random_signal(std::mt19937_64& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> x(n);
    for (auto& v : x) v = u(rng);
    return x;
}

std::vector<double> convolve(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> c(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
    return c;
}

// History of random samples 0..n-1 with distinct values everywhere.
LaggedHistory random_history(std::mt19937_64& rng, std::size_t n_nb, std::size_t n, std::size_t depth) {
    std::uniform_real_distribution<double> u(0.5, 2.0);
    LaggedHistory h(depth);
    for (std::size_t k = 0; k < n; ++k) {
        Sample s;
        s.t_r = u(rng);
        for (std::size_t j = 0; j < n_nb; ++j) s.t_rj.push_back(u(rng));
        s.t_w = u(rng);
        s.tw_in = u(rng);
        s.ta_in = u(rng);
        s.vw = u(rng);
        s.va = u(rng);
        s.qext = u(rng);
        s.y_hat = u(rng);
        h.push(s);
    }
    return h;
}

std::size_t brute_force_length(Structure st, std::size_t n) {
    // Entries of each printed block, counted one by one.
    std::size_t count = 0;
    for (const auto& b : blocks(st))
        for (std::size_t j = 0; j < (b.per_neighbor ? n : 1); ++j)
            for (int m = b.first; m <= b.last(n); ++m) ++count;
    return count;
}

} // namespace

TEST(DelayOp, IdentityReturnsSample) {
    const std::vector<double> x{3.0, -1.0, 4.0, 1.5};
    for (std::size_t k = 0; k < x.size(); ++k) EXPECT_EQ(apply_op(DelayOp::identity(), x, k), x[k]);
}

TEST(DelayOp, SeparatorOperatorDefinition) {
    std::mt19937_64 rng(1);
    const auto x = random_signal(rng, 16);
    const double a_s = -3e-4, eps = 300.0;
    const auto q = separator_op(a_s, eps);
    for (std::size_t k = 1; k < x.size(); ++k)
        EXPECT_DOUBLE_EQ(apply_op(q, x, k), x[k] - (1.0 + eps * a_s) * x[k - 1]);
}

TEST(DelayOp, CompositionConvolvesCoefficients) {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 50; ++t) {
        const auto a = random_signal(rng, 1 + t % 4);
        const auto b = random_signal(rng, 1 + t % 3);
        const auto x = random_signal(rng, 32);
        const auto c = convolve(a, b);
        const DelayOp single(c);
        const auto composed = compose(DelayOp(a), DelayOp(b));
        ASSERT_EQ(composed.order(), single.order());
        for (std::size_t k = single.order(); k < x.size(); ++k) {
            EXPECT_NEAR(apply_op(composed, x, k), apply_op(single, x, k), 1e-13);
            EXPECT_NEAR(apply_nested(DelayOp(a), DelayOp(b), x, k), apply_op(single, x, k), 1e-13);
        }
    }
}

TEST(DelayOp, TimeVaryingCompositionMatchesNesting) {
    std::mt19937_64 rng(3);
    const auto flows = random_signal(rng, 40, 0.0, 0.08);
    const auto x = random_signal(rng, 40);
    const auto qw = water_op(WaterCoefficient::from(defaults::zone()), flows, 300.0);
    const auto qs = separator_op(-2e-4, 300.0);
    const auto c = compose(qs, qw);
    for (std::size_t k = 2; k < x.size(); ++k) EXPECT_NEAR(apply_op(c, x, k), apply_nested(qs, qw, x, k), 1e-13);
}

TEST(DelayOp, UnderflowIsReported) {
    const std::vector<double> x{1.0, 2.0, 3.0};
    EXPECT_THROW(apply_op(DelayOp(std::vector<double>{1.0, 0.5, 0.25}), x, 1), UnderflowError);
    EXPECT_THROW(apply_op(DelayOp::identity(), x, 3), UnderflowError);
    EXPECT_THROW(apply_nested(separator_op(1.0, 1.0), separator_op(2.0, 1.0), x, 1), UnderflowError);
    EXPECT_THROW(DelayOp(std::vector<double>{}), InvalidParameter);
}

TEST(SeparatorCommutation, SeparatorOperatorsCommute) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> a(-5.0, 0.0), eps(1e-3, 0.2);
    for (int t = 0; t < 100; ++t) {
        const double e = eps(rng);
        const auto x = random_signal(rng, 64);
        EXPECT_LT(verify_property_1(separator_op(a(rng), e), separator_op(a(rng), e), x), 1e-12);
    }
}

TEST(SeparatorCommutation, SameOperatorIsExactlyZero) {
    std::mt19937_64 rng(5);
    const auto q = separator_op(-1.7, 0.13);
    EXPECT_EQ(verify_property_1(q, q, random_signal(rng, 64)), 0.0);
}

TEST(SeparatorCommutation, WaterOperatorDiscrepancyIsTheCommutatorCorrection) {
    std::mt19937_64 rng(6);
    const auto flows = random_signal(rng, 64, 0.0, 0.08);
    const auto x = random_signal(rng, 64);
    const WaterCoefficient a_wc{2e-3, 0.01};
    const double a_s = -4e-4, eps = 300.0;
    const auto qs = separator_op(a_s, eps);
    const auto qw = water_op(a_wc, flows, eps);
    double worst = 0.0;
    for (std::size_t k = 2; k < x.size(); ++k) {
        const double commutator = apply_nested(qs, qw, x, k) - apply_nested(qw, qs, x, k);
        const double corr = property_2_correction(a_wc, flows, a_s, eps, x, k);
        EXPECT_NEAR(commutator, -corr, 1e-12 * std::max(1.0, std::abs(corr)));
        worst = std::max(worst, std::abs(commutator));
    }
    EXPECT_GT(worst, 1e-6);
    EXPECT_NEAR(verify_property_1(qs, qw, x), worst, 1e-15);
}

TEST(WaterCommutator, ConstantFlowHasNoCorrection) {
    std::mt19937_64 rng(7);
    const std::vector<double> flows(32, 0.05);
    const auto x = random_signal(rng, 32);
    const WaterCoefficient a_wc{1e-3, 0.02};
    for (std::size_t k = 2; k < x.size(); ++k) EXPECT_EQ(property_2_correction(a_wc, flows, -1e-4, 300.0, x, k), 0.0);
    const auto qs = separator_op(-1e-4, 300.0);
    const auto qw = water_op(a_wc, flows, 300.0);
    EXPECT_LT(verify_property_1(qs, qw, x), 1e-15);
}

TEST(WaterCommutator, RandomInstancesHold) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> a(-5.0, 0.0), eps(1e-3, 0.2), pos(0.1, 5.0);
    for (int t = 0; t < 100; ++t) {
        const auto flows = random_signal(rng, 64, 0.0, 1.0);
        const auto x = random_signal(rng, 64);
        EXPECT_LT(verify_property_2({pos(rng), pos(rng)}, flows, a(rng), eps(rng), x), 1e-12);
    }
}

TEST(WaterCommutator, StepFlowCorrectionAppearsOnlyWhereFlowJumps) {
    // Direct expansion: Q_s Q_wc x - Q_wc Q_s x = c (w(k-1) - w(k)) x(k-2) with
    // c = 1 + eps a_s and w(k) = 1 + eps a_wc(V(k)); for a flow step between
    // samples k0-1 and k0 it is nonzero at k = k0 alone.
    std::mt19937_64 rng(9);
    const std::size_t k0 = 10;
    std::vector<double> flows(32, 0.0);
    std::fill(flows.begin() + k0, flows.end(), 0.0787);
    const auto x = random_signal(rng, 32, 1.0, 2.0);
    const WaterCoefficient a_wc = WaterCoefficient::from(defaults::zone());
    const double a_s = -3e-4, eps = 300.0;
    for (std::size_t k = 2; k < x.size(); ++k) {
        const double corr = property_2_correction(a_wc, flows, a_s, eps, x, k);
        const double c = 1.0 + eps * a_s;
        const double expansion =
            -c * ((1.0 + eps * a_wc(flows[k - 1])) - (1.0 + eps * a_wc(flows[k]))) * x[k - 2];
        EXPECT_NEAR(corr, expansion, 1e-14);
        if (k == k0) {
            EXPECT_NE(corr, 0.0);
        } else {
            EXPECT_EQ(corr, 0.0) << k;
        }
    }
    EXPECT_LT(verify_property_2(a_wc, flows, a_s, eps, x), 1e-12);
    EXPECT_THROW(verify_property_2(a_wc, flows, a_s, eps, std::vector<double>{1.0, 2.0, 3.0}), UnderflowError);
}

TEST(ProductExpansion, ProductIsFiniteImpulse) {
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> a(-5.0, 0.0), eps(1e-3, 0.2);
    for (int t = 0; t < 100; ++t) {
        const double e = eps(rng);
        std::vector<DelayOp> ops;
        std::vector<double> poly{1.0};
        for (int j = 0; j < 1 + t % 5; ++j) {
            const double as = a(rng);
            ops.push_back(separator_op(as, e));
            poly = convolve(poly, {1.0, -(1.0 + e * as)});
        }
        const auto alpha = product_coefficients(ops);
        ASSERT_EQ(alpha.size(), poly.size());
        EXPECT_EQ(alpha[0], 1.0);
        for (std::size_t m = 0; m < poly.size(); ++m) EXPECT_NEAR(alpha[m], poly[m], 1e-12);
        EXPECT_LT(verify_property_3(ops, random_signal(rng, 64)), 1e-12);
    }
}

TEST(Structures, NamesRoundTrip) {
    for (auto s : {Structure::Lrm, Structure::NrmFiZone, Structure::NrmFiRh, Structure::NrmMi, Structure::NrmLi})
        EXPECT_EQ(parse_structure(to_string(s)), s);
    EXPECT_THROW(parse_structure("ARMAX"), ConfigError);
}

TEST(RegressorLength, KnownValues) {
    EXPECT_EQ(regressor_length({Structure::NrmFiRh, 1}), 4u);
    EXPECT_EQ(regressor_length({Structure::NrmFiRh, 3}), 4u);
    EXPECT_EQ(regressor_length({Structure::Lrm, 1}), 21u);
    EXPECT_EQ(regressor_length({Structure::NrmFiZone, 1}), 11u);
    EXPECT_EQ(regressor_length({Structure::NrmMi, 1}), 26u);
    EXPECT_EQ(regressor_length({Structure::NrmLi, 1}), 26u);
    // Seven blocks of n+2 lags with the neighbour block repeated per neighbour.
    EXPECT_EQ(regressor_length({Structure::Lrm, 2}), 32u);
}

TEST(RegressorLength, MatchesEnumerationAndLabels) {
    for (auto s : {Structure::Lrm, Structure::NrmFiZone, Structure::NrmFiRh, Structure::NrmMi, Structure::NrmLi}) {
        for (std::size_t n = 1; n <= 4; ++n) {
            const RegressorSpec spec{s, n};
            EXPECT_EQ(regressor_length(spec), brute_force_length(s, n));
            EXPECT_EQ(regressor_labels(spec).size(), regressor_length(spec));
            if (s == Structure::Lrm) {
                EXPECT_EQ(regressor_length(spec), (6 + n) * (n + 2));
            }
        }
    }
}

TEST(RegressorLength, MiBlockSums) {
    // 3+2+3+3+2+2+2+2+2+3+2 at one neighbour.
    std::vector<std::size_t> lens;
    for (const auto& b : blocks(Structure::NrmMi)) lens.push_back(b.lags(1));
    EXPECT_EQ(lens, (std::vector<std::size_t>{3, 2, 3, 3, 2, 2, 2, 2, 2, 3, 2}));
}

TEST(BuildRegressor, WaterPredictorLayout) {
    std::mt19937_64 rng(11);
    const RegressorSpec spec{Structure::NrmFiRh, 1};
    const auto h = random_history(rng, 1, 5, 8);
    const auto phi = build_regressor(spec, h, 5);
    const auto& p = h.at(4);
    ASSERT_EQ(phi.size(), 4);
    EXPECT_EQ(phi[0], p.y_hat);
    EXPECT_EQ(phi[1], p.vw * p.y_hat);
    EXPECT_EQ(phi[2], p.vw * p.tw_in);
    EXPECT_EQ(phi[3], p.t_r);
    EXPECT_EQ(regressor_labels(spec),
              (std::vector<std::string>{"yhat(k-1)", "Vw(k-1)*yhat(k-1)", "Vw(k-1)*Tw_in(k-1)", "T_r(k-1)"}));
}

TEST(BuildRegressor, MiLayoutFollowsLabels) {
    std::mt19937_64 rng(12);
    for (std::size_t n : {1u, 2u}) {
        const RegressorSpec spec{Structure::NrmMi, n};
        const auto h = random_history(rng, n, 12, 12);
        const std::size_t k = 12;
        const auto phi = build_regressor(spec, h, k);
        const auto labels = regressor_labels(spec);
        // Re-evaluate each label by hand.
        for (std::size_t i = 0; i < labels.size(); ++i) {
            double v = 1.0;
            std::size_t pos = 0;
            const auto& lab = labels[i];
            while (pos < lab.size()) {
                const auto star = lab.find('*', pos);
                const auto term = lab.substr(pos, star == std::string::npos ? std::string::npos : star - pos);
                pos = star == std::string::npos ? lab.size() : star + 1;
                const auto open = term.find("(k-");
                const auto name = term.substr(0, open);
                const auto lag = std::stoul(term.substr(open + 3));
                const auto& s = h.at(k - lag);
                if (name.rfind("T_rj_", 0) == 0) {
                    v *= s.t_rj[std::stoul(name.substr(5)) - 1];
                    continue;
                }
                const std::map<std::string, double> values{{"yhat", s.y_hat}, {"Vw", s.vw},       {"Va", s.va},
                                                           {"Ta_in", s.ta_in}, {"Tw_in", s.tw_in}, {"Qext", s.qext}};
                ASSERT_TRUE(values.count(name)) << "unexpected factor " << name;
                v *= values.at(name);
            }
            EXPECT_DOUBLE_EQ(phi[static_cast<Eigen::Index>(i)], v) << labels[i];
        }
    }
}

TEST(BuildRegressor, MiSixthBlockLagsFlowOneExtraStep) {
    const auto labels = regressor_labels({Structure::NrmMi, 1});
    EXPECT_NE(std::find(labels.begin(), labels.end(), "Vw(k-2)*yhat(k-1)"), labels.end());
    EXPECT_NE(std::find(labels.begin(), labels.end(), "Vw(k-3)*yhat(k-2)"), labels.end());
    EXPECT_NE(std::find(labels.begin(), labels.end(), "Vw(k-2)*Va(k-2)*yhat(k-2)"), labels.end());
    EXPECT_EQ(max_lag({Structure::NrmMi, 1}), 3u);
}

TEST(BuildRegressor, LimitedInformationReplacesInletsByOne) {
    std::mt19937_64 rng(13);
    const auto h = random_history(rng, 1, 6, 8);
    const auto mi = build_regressor({Structure::NrmMi, 1}, h, 6);
    const auto li = build_regressor({Structure::NrmLi, 1}, h, 6);
    const auto mi_labels = regressor_labels({Structure::NrmMi, 1});
    for (std::size_t i = 0; i < mi_labels.size(); ++i) {
        const auto& lab = mi_labels[i];
        const auto idx = static_cast<Eigen::Index>(i);
        if (lab.find("Ta_in") == std::string::npos && lab.find("Tw_in") == std::string::npos) {
            EXPECT_EQ(li[idx], mi[idx]) << lab;
            continue;
        }
        // Divide out the inlet temperature factor.
        const auto lag = std::stoul(lab.substr(lab.rfind("(k-") + 3));
        const auto& s = h.at(6 - lag);
        const double inlet = lab.find("Ta_in") != std::string::npos ? s.ta_in : s.tw_in;
        EXPECT_NEAR(li[idx], mi[idx] / inlet, 1e-14) << lab;
    }
    for (const auto& lab : regressor_labels({Structure::NrmLi, 1})) {
        EXPECT_EQ(lab.find("Ta_in"), std::string::npos);
        EXPECT_EQ(lab.find("Tw_in"), std::string::npos);
    }
}

TEST(BuildRegressor, EntriesAreAtMostTrilinear) {
    std::size_t deepest = 0;
    for (auto s : {Structure::Lrm, Structure::NrmFiZone, Structure::NrmFiRh, Structure::NrmMi, Structure::NrmLi})
        for (const auto& b : blocks(s)) {
            EXPECT_GE(b.factors.size(), 1u);
            EXPECT_LE(b.factors.size(), 3u);
            deepest = std::max(deepest, b.factors.size());
        }
    EXPECT_EQ(deepest, 3u);
}

TEST(BuildRegressor, ZoneModelsIgnoreMeasuredOutput) {
    std::mt19937_64 rng(14);
    for (auto s : {Structure::Lrm, Structure::NrmFiZone, Structure::NrmMi, Structure::NrmLi}) {
        const RegressorSpec spec{s, 2};
        auto h = random_history(rng, 2, 10, 10);
        const auto before = build_regressor(spec, h, 10);
        for (std::size_t k = h.oldest(); k < h.size(); ++k) h.at(k).t_r += 100.0;
        EXPECT_EQ(build_regressor(spec, h, 10), before) << to_string(s);
    }
    const RegressorSpec rh{Structure::NrmFiRh, 1};
    auto h = random_history(rng, 1, 4, 4);
    const auto before = build_regressor(rh, h, 4);
    for (std::size_t k = h.oldest(); k < h.size(); ++k) h.at(k).t_w += 100.0;
    EXPECT_EQ(build_regressor(rh, h, 4), before);
}

TEST(BuildRegressor, UnitFlowsReduceMiToLrmEntries) {
    std::mt19937_64 rng(15);
    auto h = random_history(rng, 1, 8, 8);
    for (std::size_t k = h.oldest(); k < h.size(); ++k) h.at(k).vw = h.at(k).va = 1.0;
    const auto mi = build_regressor({Structure::NrmMi, 1}, h, 8);
    const auto lrm = build_regressor({Structure::Lrm, 1}, h, 8);
    for (Eigen::Index i = 0; i < mi.size(); ++i) {
        bool found = false;
        for (Eigen::Index j = 0; j < lrm.size(); ++j) found = found || mi[i] == lrm[j];
        EXPECT_TRUE(found) << regressor_labels({Structure::NrmMi, 1})[static_cast<std::size_t>(i)];
    }
}

TEST(BuildRegressor, ShallowHistoryUnderflows) {
    std::mt19937_64 rng(16);
    const RegressorSpec spec{Structure::NrmMi, 1};
    const auto h = random_history(rng, 1, 10, 2);  // keeps samples 8 and 9
    EXPECT_THROW(build_regressor(spec, h, 2), UnderflowError);
    EXPECT_THROW(build_regressor(spec, h, 10), UnderflowError);
    EXPECT_NO_THROW(build_regressor({Structure::NrmFiRh, 1}, h, 10));
}

TEST(LaggedHistory, DepthCoversDeepestLag) {
    for (auto s : {Structure::Lrm, Structure::NrmFiZone, Structure::NrmFiRh, Structure::NrmMi, Structure::NrmLi})
        for (std::size_t n = 1; n <= 3; ++n) {
            const RegressorSpec spec{s, n};
            const LaggedHistory h(spec);
            EXPECT_GE(h.depth(), max_lag(spec));
            EXPECT_GE(h.depth(), n + 2);
        }
}
