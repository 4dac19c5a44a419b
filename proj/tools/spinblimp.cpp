// spinblimp: run experiments, linearization reports and calibrations from a
// config file.

#include <spinblimp/config.hpp>
#include <spinblimp/experiments.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <future>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

using namespace spinblimp;

namespace {

struct CommonFlags {
    std::string config;
    std::optional<std::string> out;
    std::optional<long long> seed;
    std::optional<double> dt;
    std::optional<double> duration;
    std::optional<std::string> model;
    std::vector<std::string> set;
};

void add_common(CLI::App *cmd, CommonFlags &f) {
    cmd->add_option("--config", f.config, "configuration file (section.key = value lines)");
    cmd->add_option("--out", f.out, "output path prefix");
    cmd->add_option("--seed", f.seed, "random seed")->check(CLI::NonNegativeNumber);
    cmd->add_option("--dt", f.dt, "integration step [s]");
    cmd->add_option("--duration", f.duration, "simulated time [s]");
    cmd->add_option("--model", f.model, "dynamics model")->check(CLI::IsMember({"full", "simplified"}));
    cmd->add_option("--set", f.set, "extra key=value assignment, applied after the file");
}

void apply_assignment(RunConfig &c, const std::string &kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
        throw ConfigError("--set expects key=value, got '" + kv + "'");
    }
    set_config_value(c, kv.substr(0, eq), kv.substr(eq + 1));
}

RunConfig build_config(const CommonFlags &f) {
    RunConfig c = f.config.empty() ? parse_config(std::string_view{}) : load_config(f.config);
    for (const std::string &kv : f.set) {
        apply_assignment(c, kv);
    }
    if (f.out) {
        c.out = *f.out;
    }
    if (f.seed) {
        c.sim.seed = static_cast<std::uint64_t>(*f.seed);
    }
    if (f.dt) {
        c.sim.dt = *f.dt;
    }
    if (f.duration) {
        c.sim.duration = *f.duration;
        c.duration_given = true;
    }
    if (f.model) {
        apply_assignment(c, "sim.model=" + *f.model);
    }
    c.validate();
    return c;
}

void print_pairs(std::ostream &os, const std::vector<std::pair<std::string, double>> &pairs) {
    os << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto &[k, v] : pairs) {
        os << k << " = " << v << '\n';
    }
}

int report(const std::string &label, const ExperimentResult &r) {
    std::cout << label << ": " << to_string(r.experiment);
    if (r.blew_up) {
        std::cout << " BLOW-UP " << r.error << '\n';
    } else {
        std::cout << (r.passed() ? " ok" : " FAILED") << '\n';
    }
    for (const Check &c : r.checks) {
        std::cout << "  check " << c.name << ": " << (c.passed ? "pass" : "fail") << " (" << c.value
                  << " vs " << c.limit << ")\n";
    }
    for (const char *key : {"mean_e", "max_e", "bounces", "min_clearance"}) {
        if (const auto v = r.metric(key)) {
            std::cout << "  " << key << " = " << *v << '\n';
        }
    }
    return r.exit_code();
}

int run_one(const RunConfig &cfg) {
    const ExperimentResult r = run_experiment(cfg);
    write_artifacts(r, cfg.out, cfg.plot_points);
    return report(cfg.out, r);
}

/// `key=v1,v2,...`: one run per value, each written to `<out>_<index>`.
int run_sweep(const RunConfig &base, const std::string &sweep) {
    const auto eq = sweep.find('=');
    if (eq == std::string::npos) {
        throw ConfigError("--sweep expects key=v1,v2,...");
    }
    const std::string key = sweep.substr(0, eq);
    std::vector<RunConfig> configs;
    std::string values = sweep.substr(eq + 1);
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = values.find(',', start);
        RunConfig c = base;
        set_config_value(c, key, values.substr(start, comma == std::string::npos ? comma : comma - start));
        c.out = base.out + "_" + std::to_string(configs.size());
        c.validate();
        configs.push_back(std::move(c));
        if (comma == std::string::npos) {
            break;
        }
        start = comma + 1;
    }
    std::vector<std::future<ExperimentResult>> jobs;
    for (const RunConfig &c : configs) {
        jobs.push_back(std::async(std::launch::async, [&c] { return run_experiment(c); }));
    }
    int worst = exit_ok;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        const ExperimentResult r = jobs[i].get();
        write_artifacts(r, configs[i].out, configs[i].plot_points);
        worst = std::max(worst, report(configs[i].out, r));
    }
    return worst;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Spinning blimp simulator"};
    app.require_subcommand(1);

    CommonFlags run_flags;
    std::optional<std::string> sweep;
    CLI::App *run = app.add_subcommand("run", "run the configured experiment and write its files");
    add_common(run, run_flags);
    run->add_option("--sweep", sweep, "key=v1,v2,... runs one experiment per value");

    CommonFlags analyze_flags;
    bool linearize = false;
    CLI::App *analyze = app.add_subcommand("analyze", "equilibrium and linearization report");
    add_common(analyze, analyze_flags);
    analyze->add_flag("--linearize", linearize, "include the planar partials and finite-difference check");

    CommonFlags calibrate_flags;
    CLI::App *calibrate = app.add_subcommand("calibrate", "bisection for k_lift and the Lissajous speed scale");
    add_common(calibrate, calibrate_flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return exit_config_error;
    }

    try {
        if (*run) {
            const RunConfig cfg = build_config(run_flags);
            return sweep ? run_sweep(cfg, *sweep) : run_one(cfg);
        }
        if (*analyze) {
            RunConfig cfg = build_config(analyze_flags);
            cfg.experiment = Experiment::analyze;
            const ExperimentResult r = run_experiment(cfg);
            std::vector<std::pair<std::string, double>> shown;
            for (const auto &[k, v] : r.metrics) {
                const bool planar = k.rfind("d", 0) == 0 || k.rfind("fd_", 0) == 0;
                if (linearize || !planar) {
                    shown.emplace_back(k, v);
                }
            }
            print_pairs(std::cout, shown);
            if (analyze_flags.out) {
                write_artifacts(r, cfg.out, cfg.plot_points);
            }
            return linearize ? r.exit_code() : exit_ok;
        }
        if (*calibrate) {
            const RunConfig cfg = build_config(calibrate_flags);
            print_pairs(std::cout, run_calibration(cfg));
            return exit_ok;
        }
    } catch (const ConfigError &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config_error;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_check_failed;
    }
    return exit_ok;
}
