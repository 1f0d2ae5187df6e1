#pragma once

// Periodogram and persistence-of-excitation order of sampled signals.

#include "thermoid/errors.hpp"
#include "thermoid/regressors.hpp"
#include "thermoid/simulator.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace thermoid {

inline constexpr double kDefaultLineThreshold = 1.0e-4;

struct SpectrumReport {
    std::vector<double> frequency;  ///< cycles/sample, bins 0 .. N/2
    std::vector<double> power;      ///< one-sided, sums to the signal energy
    std::vector<std::size_t> lines; ///< bins detected as distinct spectral lines
    bool has_dc = false;
    double threshold = 0.0;         ///< absolute power threshold used
    double relative_threshold = kDefaultLineThreshold;

    std::size_t line_count() const { return lines.size(); }

    /// Frequency grid in cycles per hour for a sampling period in hours.
    std::vector<double> frequency_per_hour(double epsilon) const {
        std::vector<double> f(frequency);
        for (auto& v : f) v /= epsilon;
        return f;
    }
};

namespace detail {

struct FftwPlanDeleter {
    void operator()(fftw_plan_s* p) const { fftw_destroy_plan(p); }
};

inline std::vector<std::complex<double>> real_dft(std::span<const double> x) {
    const auto n = static_cast<int>(x.size());
    std::vector<double> in(x.begin(), x.end());
    std::vector<std::complex<double>> out(x.size() / 2 + 1);
    std::unique_ptr<fftw_plan_s, FftwPlanDeleter> plan(fftw_plan_dft_r2c_1d(
        n, in.data(), reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE));
    if (!plan) throw NumericalError("could not create FFT plan", 0);
    fftw_execute(plan.get());
    return out;
}

} // namespace detail

/// Rectangular-window periodogram over [0, pi]. Lines are every local
/// maximum above threshold, the DC bin included; leakage skirts of one line
/// are therefore not counted twice.
inline SpectrumReport spectrum(std::span<const double> signal, double relative_threshold = kDefaultLineThreshold) {
    if (signal.size() < 8) throw InvalidParameter("spectrum needs at least 8 samples");
    if (!(relative_threshold > 0.0 && relative_threshold < 1.0))
        throw InvalidParameter("relative line threshold must lie in (0, 1)");
    for (double v : signal)
        if (!std::isfinite(v)) throw InvalidParameter("spectrum of a non-finite signal");

    const std::size_t n = signal.size();
    const auto dft = detail::real_dft(signal);
    const std::size_t bins = dft.size();
    SpectrumReport rep;
    rep.relative_threshold = relative_threshold;
    rep.frequency.resize(bins);
    rep.power.resize(bins);
    const double nd = static_cast<double>(n);
    for (std::size_t b = 0; b < bins; ++b) {
        rep.frequency[b] = static_cast<double>(b) / nd;
        const bool unpaired = b == 0 || (n % 2 == 0 && b == n / 2);
        rep.power[b] = (unpaired ? 1.0 : 2.0) * std::norm(dft[b]) / nd;
    }

    const double peak = *std::max_element(rep.power.begin(), rep.power.end());
    rep.threshold = relative_threshold * peak;
    if (peak <= 0.0) return rep;

    const auto& p = rep.power;
    // Bin 0 must itself be a peak; leakage skirts of a nearby tone do not count as DC.
    if (p[0] > rep.threshold && (bins == 1 || p[0] >= p[1])) {
        rep.has_dc = true;
        rep.lines.push_back(0);
    }
    for (std::size_t b = 1; b < bins; ++b) {
        if (p[b] <= rep.threshold) continue;
        const bool rises = b == 1 || p[b] > p[b - 1];
        const bool holds = b + 1 == bins || p[b] >= p[b + 1];
        if (rises && holds) rep.lines.push_back(b);
    }
    return rep;
}

inline int pe_order(const SpectrumReport& rep) {
    return 2 * static_cast<int>(rep.line_count()) - (rep.has_dc ? 1 : 0);
}

struct ColumnExcitation {
    std::string name;
    int order = 0;
    bool has_dc = false;
    int required = 0;
    bool pass = false;
};

struct InformativityReport {
    int required_order = 0;
    std::vector<ColumnExcitation> columns;
    bool pass = false;
};

/// PE check of every input and disturbance column against order 2(|N|+2),
/// relaxed by one when one of the lines sits at DC.
inline InformativityReport informativity_check(const TimeSeriesDataset& ds, const RegressorSpec& spec,
                                               double relative_threshold = kDefaultLineThreshold) {
    if (ds.size() == 0) throw InvalidParameter("informativity check of an empty dataset");
    ds.validate();
    InformativityReport rep;
    rep.required_order = 2 * static_cast<int>(spec.n_neighbors + 2);

    auto check = [&](std::string name, const std::vector<double>& col) {
        const auto s = spectrum(col, relative_threshold);
        ColumnExcitation c;
        c.name = std::move(name);
        c.order = pe_order(s);
        c.has_dc = s.has_dc;
        c.required = rep.required_order - (s.has_dc ? 1 : 0);
        c.pass = c.order >= c.required;
        rep.columns.push_back(std::move(c));
    };
    for (std::size_t j = 0; j < ds.t_rj.size(); ++j) check("T_rj_" + std::to_string(j + 1), ds.t_rj[j]);
    check("Tw_in", ds.tw_in);
    check("Ta_in", ds.ta_in);
    check("Vw", ds.vw);
    check("Va", ds.va);
    check("Qext", ds.qext);

    rep.pass = std::all_of(rep.columns.begin(), rep.columns.end(), [](const auto& c) { return c.pass; });
    return rep;
}

} // namespace thermoid
