#pragma once

// Plain-text exchange formats: datasets, training traces, parameter vectors,
// spectra and closed-loop episodes. Numbers are written with 9 significant
// digits except where exact reloading matters (theta, sampling period).

#include "thermoid/errors.hpp"
#include "thermoid/excitation.hpp"
#include "thermoid/identify.hpp"
#include "thermoid/mpc.hpp"
#include "thermoid/simulator.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace thermoid::io {

inline std::string fmt(double v, int digits = 9) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, sep)) out.push_back(cur);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

inline double to_double(const std::string& s, std::size_t line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("line " + std::to_string(line) + ": cannot parse number '" + s + "'");
    }
}

template <class Fn>
void with_output(const std::string& path, Fn&& fn) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    fn(out);
    if (!out) throw ConfigError("write to '" + path + "' failed");
}

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    return in;
}

} // namespace detail

inline std::vector<std::string> dataset_columns(std::size_t n_neighbors) {
    std::vector<std::string> cols{"k", "t_hours", "T_r"};
    for (std::size_t j = 0; j < n_neighbors; ++j) cols.push_back("T_rj_" + std::to_string(j + 1));
    for (const char* c : {"T_w", "Tw_in", "Ta_in", "Vw", "Va", "Qext", "occ"}) cols.emplace_back(c);
    return cols;
}

/// Metadata lines ("# key=value") precede the header; the sampling period is
/// always among them.
inline void write_dataset(std::ostream& out, const TimeSeriesDataset& ds) {
    ds.validate();
    out << "# epsilon=" << fmt(ds.epsilon, 17) << '\n';
    for (const auto& [key, value] : ds.metadata)
        if (key != "epsilon") out << "# " << key << '=' << value << '\n';
    const auto cols = dataset_columns(ds.n_neighbors());
    for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
    out << '\n';
    for (std::size_t k = 0; k < ds.size(); ++k) {
        out << k << ',' << fmt(ds.t_hours(k)) << ',' << fmt(ds.t_r[k]);
        for (const auto& col : ds.t_rj) out << ',' << fmt(col[k]);
        for (const auto* col : {&ds.t_w, &ds.tw_in, &ds.ta_in, &ds.vw, &ds.va, &ds.qext, &ds.occ})
            out << ',' << fmt((*col)[k]);
        out << '\n';
    }
}

inline TimeSeriesDataset read_dataset(std::istream& in) {
    TimeSeriesDataset ds;
    bool have_eps = false;
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto body = line.substr(line.find_first_not_of("# "));
            const auto eq = body.find('=');
            if (eq == std::string::npos) continue;
            const auto key = body.substr(0, eq);
            const auto value = body.substr(eq + 1);
            if (key == "epsilon") {
                ds.epsilon = detail::to_double(value, lineno);
                have_eps = true;
            } else {
                ds.metadata[key] = value;
            }
            continue;
        }
        if (header.empty()) {
            header = detail::split(line, ',');
            if (header.size() < 11) throw ConfigError("dataset header has too few columns");
            const std::size_t n_nb = header.size() - 10;
            if (header != dataset_columns(n_nb)) throw ConfigError("dataset header does not match the column list");
            ds.t_rj.assign(n_nb, {});
            continue;
        }
        const auto f = detail::split(line, ',');
        if (f.size() != header.size())
            throw ConfigError("line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                              " fields");
        std::size_t c = 2;
        ds.t_r.push_back(detail::to_double(f[c++], lineno));
        for (auto& col : ds.t_rj) col.push_back(detail::to_double(f[c++], lineno));
        for (auto* col : {&ds.t_w, &ds.tw_in, &ds.ta_in, &ds.vw, &ds.va, &ds.qext, &ds.occ})
            col->push_back(detail::to_double(f[c++], lineno));
    }
    if (header.empty()) throw ConfigError("dataset has no header");
    if (!have_eps) throw ConfigError("dataset lacks the '# epsilon=' metadata line");
    ds.validate();
    return ds;
}

inline void save_dataset(const std::string& path, const TimeSeriesDataset& ds) {
    detail::with_output(path, [&](std::ostream& o) { write_dataset(o, ds); });
}

inline TimeSeriesDataset load_dataset(const std::string& path) {
    auto in = detail::open_input(path);
    return read_dataset(in);
}

/// k counts update steps across all passes.
inline void write_train_report(std::ostream& out, const TrainReport& rep) {
    out << "k,e,rolling_rmse\n";
    for (std::size_t k = 0; k < rep.errors.size(); ++k)
        out << k << ',' << fmt(rep.errors[k]) << ',' << fmt(rep.rolling_rmse[k]) << '\n';
}

inline void write_theta(std::ostream& out, const ThetaVector& theta) {
    for (Eigen::Index i = 0; i < theta.size(); ++i) out << fmt(theta[i], 17) << '\n';
}

inline ThetaVector read_theta(std::istream& in) {
    std::vector<double> v;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        v.push_back(detail::to_double(line, lineno));
    }
    return Eigen::Map<ThetaVector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline void write_spectrum(std::ostream& out, const SpectrumReport& rep, double epsilon) {
    out << "freq,freq_per_hour,power\n";
    for (std::size_t b = 0; b < rep.power.size(); ++b)
        out << fmt(rep.frequency[b]) << ',' << fmt(rep.frequency[b] / epsilon) << ',' << fmt(rep.power[b]) << '\n';
}

inline void write_episode(std::ostream& out, const EpisodeReport& rep) {
    out << "t_hours,T_r_plant,plan_inlet,plan_flow,run_avg_comfort,run_avg_heating,run_avg_pump\n";
    for (const auto& r : rep.rows)
        out << fmt(r.t_hours) << ',' << fmt(r.t_r_plant) << ',' << fmt(r.plan_inlet) << ',' << fmt(r.plan_flow)
            << ',' << fmt(r.run_avg_comfort) << ',' << fmt(r.run_avg_heating) << ',' << fmt(r.run_avg_pump) << '\n';
}

/// Generic numeric CSV reader: header plus rows of numbers.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t c = 0; c < header.size(); ++c)
            if (header[c] == name) return c;
        throw ConfigError("table has no column '" + name + "'");
    }
};

inline Table read_table(std::istream& in) {
    Table t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        auto f = detail::split(line, ',');
        if (t.header.empty()) {
            t.header = std::move(f);
            continue;
        }
        std::vector<double> row;
        for (const auto& s : f) row.push_back(detail::to_double(s, lineno));
        t.rows.push_back(std::move(row));
    }
    return t;
}

} // namespace thermoid::io
