// Command-line front end: simulate -> identify -> excite-check -> mpc-run -> compare.
//
// Exit codes: 0 ok, 2 configuration or input error, 3 numerical failure.

#include "thermoid/config.hpp"
#include "thermoid/excitation.hpp"
#include "thermoid/identify.hpp"
#include "thermoid/io.hpp"
#include "thermoid/mpc.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace thermoid;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Options {
    std::string config;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::vector<std::string> specs;
    std::string dataset;
    bool baseline = false;
};

ExperimentConfig load(const Options& o) {
    ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
    if (o.seed) cfg.sim.seed = *o.seed;
    return cfg;
}

fs::path out_path(const Options& o, const std::string& name) {
    fs::create_directories(o.out_dir);
    return fs::path(o.out_dir) / name;
}

template <class Fn>
void write_file(const fs::path& path, Fn&& fn) {
    io::detail::with_output(path.string(), fn);
    std::cerr << "wrote " << path.string() << '\n';
}

TimeSeriesDataset dataset_for(const Options& o, const ExperimentConfig& cfg) {
    if (!o.dataset.empty()) {
        auto ds = io::load_dataset(o.dataset);
        if (ds.n_neighbors() != cfg.n_neighbors())
            throw ConfigError("dataset has " + std::to_string(ds.n_neighbors()) + " neighbours, config has " +
                              std::to_string(cfg.n_neighbors()));
        return ds;
    }
    return run_experiment(cfg.plant, cfg.sim);
}

std::vector<Structure> zone_specs(const Options& o, const ExperimentConfig& cfg, std::vector<Structure> fallback) {
    if (o.specs.empty()) return fallback.empty() ? std::vector<Structure>{cfg.model.structure} : fallback;
    std::vector<Structure> out;
    for (const auto& s : o.specs) {
        const auto st = parse_structure(s);
        if (st == Structure::NrmFiRh) throw ConfigError("--spec NRM_FI_RH is the water predictor, not a zone model");
        out.push_back(st);
    }
    return out;
}

struct Trained {
    Structure structure;
    TrainReport report;
};

Trained train_one(const Options& o, const TimeSeriesDataset& ds, const ExperimentConfig& cfg, Structure st) {
    const RegressorSpec spec{st, ds.n_neighbors()};
    auto rep = train(ds, spec, cfg.model.passes, cfg.model.rls);
    const std::string name(to_string(st));
    write_file(out_path(o, "train_" + name + ".csv"), [&](std::ostream& out) { io::write_train_report(out, rep); });
    write_file(out_path(o, "theta_" + name + ".txt"), [&](std::ostream& out) { io::write_theta(out, rep.theta); });
    std::cout << name << ": " << regressor_length(spec) << " parameters, final rolling RMSE "
              << io::fmt(rep.final_rmse()) << " (window " << rep.window << ")\n";
    return {st, std::move(rep)};
}

EpisodeReport episode_for(const Options& o, const ExperimentConfig& cfg, const Trained& zone, const Trained& water,
                          std::size_t n_neighbors) {
    const Predictors pred{{zone.structure, n_neighbors}, zone.report.theta, {Structure::NrmFiRh, n_neighbors},
                          water.report.theta};
    auto ep = closed_loop_run(cfg.plant, cfg.sim, cfg.mpc, cfg.episode, pred);
    write_file(out_path(o, "episode_" + std::string(to_string(zone.structure)) + ".csv"),
               [&](std::ostream& out) { io::write_episode(out, ep); });
    return ep;
}

void print_costs(const EpisodeReport& ep) {
    std::cout << ep.controller << ": run-avg comfort " << io::fmt(ep.final_comfort()) << ", heating "
              << io::fmt(ep.final_heating()) << ", pump " << io::fmt(ep.final_pump()) << '\n';
}

int cmd_simulate(const Options& o) {
    const auto cfg = load(o);
    const auto ds = run_experiment(cfg.plant, cfg.sim);
    write_file(out_path(o, "dataset.csv"), [&](std::ostream& out) { io::write_dataset(out, ds); });
    return 0;
}

int cmd_identify(const Options& o) {
    const auto cfg = load(o);
    const auto ds = dataset_for(o, cfg);
    std::vector<Structure> specs;
    if (o.specs.empty()) {
        specs = {cfg.model.structure};
    } else {
        for (const auto& s : o.specs) specs.push_back(parse_structure(s));
    }
    for (auto st : specs) train_one(o, ds, cfg, st);
    return 0;
}

int cmd_excite_check(const Options& o) {
    const auto cfg = load(o);
    const auto ds = dataset_for(o, cfg);
    const RegressorSpec spec{cfg.model.structure, ds.n_neighbors()};
    const auto rep = informativity_check(ds, spec);
    auto dump = [&](const std::string& name, const std::vector<double>& col) {
        const auto s = spectrum(col);
        write_file(out_path(o, "spectrum_" + name + ".csv"),
                   [&](std::ostream& out) { io::write_spectrum(out, s, ds.epsilon); });
    };
    for (std::size_t j = 0; j < ds.t_rj.size(); ++j) dump("T_rj_" + std::to_string(j + 1), ds.t_rj[j]);
    dump("Tw_in", ds.tw_in);
    dump("Ta_in", ds.ta_in);
    dump("Vw", ds.vw);
    dump("Va", ds.va);
    dump("Qext", ds.qext);
    write_file(out_path(o, "informativity.csv"), [&](std::ostream& out) {
        out << "column,pe_order,has_dc,required,pass\n";
        for (const auto& c : rep.columns)
            out << c.name << ',' << c.order << ',' << c.has_dc << ',' << c.required << ',' << c.pass << '\n';
    });
    for (const auto& c : rep.columns)
        std::cout << c.name << ": order " << c.order << (c.has_dc ? " (with DC)" : "") << ", required "
                  << c.required << (c.pass ? " ok" : " FAIL") << '\n';
    std::cout << "informative: " << (rep.pass ? "yes" : "no") << '\n';
    return 0;
}

int cmd_mpc_run(const Options& o) {
    const auto cfg = load(o);
    const auto ds = dataset_for(o, cfg);
    const auto water = train_one(o, ds, cfg, Structure::NrmFiRh);
    for (auto st : zone_specs(o, cfg, {})) {
        const auto zone = train_one(o, ds, cfg, st);
        print_costs(episode_for(o, cfg, zone, water, ds.n_neighbors()));
    }
    if (o.baseline) {
        const auto ep = baseline_run(cfg.plant, cfg.sim, cfg.mpc, cfg.episode);
        write_file(out_path(o, "episode_hysteresis.csv"), [&](std::ostream& out) { io::write_episode(out, ep); });
        print_costs(ep);
    }
    return 0;
}

int cmd_compare(const Options& o) {
    const auto cfg = load(o);
    const auto ds = dataset_for(o, cfg);
    const auto water = train_one(o, ds, cfg, Structure::NrmFiRh);
    struct Row {
        std::string spec;
        double rmse;
        EpisodeReport ep;
    };
    std::vector<Row> rows;
    for (auto st : zone_specs(o, cfg, {Structure::Lrm, Structure::NrmMi})) {
        const auto zone = train_one(o, ds, cfg, st);
        auto ep = episode_for(o, cfg, zone, water, ds.n_neighbors());
        print_costs(ep);
        rows.push_back({std::string(to_string(st)), zone.report.final_rmse(), std::move(ep)});
    }
    if (o.baseline) {
        auto ep = baseline_run(cfg.plant, cfg.sim, cfg.mpc, cfg.episode);
        write_file(out_path(o, "episode_hysteresis.csv"), [&](std::ostream& out) { io::write_episode(out, ep); });
        print_costs(ep);
    }
    write_file(out_path(o, "summary.csv"), [&](std::ostream& out) {
        out << "spec,final_rmse,run_avg_comfort,run_avg_heating,run_avg_pump\n";
        for (const auto& r : rows)
            out << r.spec << ',' << io::fmt(r.rmse) << ',' << io::fmt(r.ep.final_comfort()) << ','
                << io::fmt(r.ep.final_heating()) << ',' << io::fmt(r.ep.final_pump()) << '\n';
    });
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Thermal-zone identification and predictive-control workbench"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "Experiment config file (all keys required)");
        sub->add_option("--out-dir", o.out_dir, "Directory for output files");
        sub->add_option("--seed", o.seed, "Override sim.seed");
    };
    auto add_dataset = [&](CLI::App* sub) {
        sub->add_option("--dataset", o.dataset, "Dataset CSV (default: simulate from the config)");
    };
    auto add_specs = [&](CLI::App* sub) {
        sub->add_option("--spec", o.specs, "Model structure (repeatable): LRM, NRM_FI_ZONE, NRM_FI_RH, NRM_MI, NRM_LI")
            ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    };

    auto* sim = app.add_subcommand("simulate", "Generate a closed-loop hysteresis dataset");
    add_common(sim);
    auto* ident = app.add_subcommand("identify", "Train predictors on a dataset");
    add_common(ident);
    add_dataset(ident);
    add_specs(ident);
    auto* excite = app.add_subcommand("excite-check", "Spectra and persistence-of-excitation orders");
    add_common(excite);
    add_dataset(excite);
    auto* mpc = app.add_subcommand("mpc-run", "Train and run the receding-horizon controller");
    add_common(mpc);
    add_dataset(mpc);
    add_specs(mpc);
    mpc->add_flag("--baseline", o.baseline, "Also run the hysteresis baseline");
    auto* cmp = app.add_subcommand("compare", "Train and control with each structure, write a summary");
    add_common(cmp);
    add_dataset(cmp);
    add_specs(cmp);
    cmp->add_flag("--baseline", o.baseline, "Also run the hysteresis baseline");
    auto* defaults = app.add_subcommand("print-defaults", "Print a complete default config");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (defaults->parsed()) {
            std::cout << defaults_text();
            return 0;
        }
        if (sim->parsed()) return cmd_simulate(o);
        if (ident->parsed()) return cmd_identify(o);
        if (excite->parsed()) return cmd_excite_check(o);
        if (mpc->parsed()) return cmd_mpc_run(o);
        if (cmp->parsed()) return cmd_compare(o);
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    return 0;
}
