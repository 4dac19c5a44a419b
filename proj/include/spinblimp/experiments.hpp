// Spinning blimp experiments
// Runs a configured experiment, evaluates its pass/fail checks, and writes the
// log, metrics and plot files.
#pragma once

#include <spinblimp/analysis.hpp>
#include <spinblimp/behavior.hpp>
#include <spinblimp/config.hpp>
#include <spinblimp/control.hpp>
#include <spinblimp/sim.hpp>
#include <spinblimp/trajectory.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace spinblimp {

enum ExitCode : int { exit_ok = 0, exit_check_failed = 1, exit_blow_up = 2, exit_config_error = 64 };

struct Check {
    std::string name;
    bool passed = false;
    double value = 0.0;
    double limit = 0.0;
};

struct ExperimentResult {
    Experiment experiment = Experiment::hover;
    SimLog log;
    std::vector<std::pair<std::string, double>> metrics;
    std::vector<Check> checks;
    bool blew_up = false;
    std::string error;

    bool passed() const {
        return !blew_up && std::all_of(checks.begin(), checks.end(), [](const Check &c) { return c.passed; });
    }

    int exit_code() const {
        if (blew_up) {
            return exit_blow_up;
        }
        return passed() ? exit_ok : exit_check_failed;
    }

    std::optional<double> metric(std::string_view key) const {
        for (const auto &[k, v] : metrics) {
            if (k == key) {
                return v;
            }
        }
        return std::nullopt;
    }
};

/// Relative rounding allowance on the scan angular gap bound.
inline constexpr double kScanGapSlack = 1e-9;

namespace detail {

inline void add_tracking_metrics(ExperimentResult &r, bool lyapunov) {
    const TrackingMetrics m = tracking_metrics(r.log);
    r.metrics.emplace_back("samples", static_cast<double>(r.log.size()));
    r.metrics.emplace_back("mean_e", m.mean_e);
    r.metrics.emplace_back("max_e", m.max_e);
    r.metrics.emplace_back("rmse", m.rmse);
    r.metrics.emplace_back("final_e", r.log.back().e);
    if (!lyapunov) {
        return;
    }
    std::vector<double> vz;
    std::vector<double> vxy;
    for (const LogRow &row : r.log) {
        vz.push_back(row.V_z.value_or(0.0));
        vxy.push_back(row.V_xy.value_or(0.0));
    }
    r.metrics.emplace_back("V_z_initial", vz.front());
    r.metrics.emplace_back("V_z_max", *std::max_element(vz.begin(), vz.end()));
    r.metrics.emplace_back("V_z_ultimate_bound", ultimate_bound(vz));
    r.metrics.emplace_back("V_xy_initial", vxy.front());
    r.metrics.emplace_back("V_xy_max", *std::max_element(vxy.begin(), vxy.end()));
    r.metrics.emplace_back("V_xy_ultimate_bound", ultimate_bound(vxy));
}

inline void check_below(ExperimentResult &r, const std::string &name, double value, double limit) {
    r.checks.push_back({name, value < limit, value, limit});
}

template <ControlPolicy P>
bool run_sim(ExperimentResult &r, const State &initial, P &policy, const SimConfig &sim,
             const RunConfig &cfg) {
    const Monitor monitor = cfg.monitor.lyapunov ? lyapunov_monitor(cfg.vehicle, cfg.gains) : Monitor{};
    try {
        r.log = simulate(initial, policy, sim, cfg.vehicle, monitor);
    } catch (const SimulationError &e) {
        r.log = e.partial_log();
        r.blew_up = true;
        r.error = e.what();
        return false;
    }
    return true;
}

inline void run_hover(ExperimentResult &r, const RunConfig &cfg) {
    SimConfig sim = cfg.sim;
    if (!cfg.duration_given) {
        sim.duration = cfg.hover.duration;
    }
    const double w = hover_omega(cfg.vehicle);
    const Reference ref = Reference::hold({cfg.hover.start.x(), cfg.hover.start.y(), cfg.hover.z_d});
    TrackingController policy([ref](double) { return ref; }, cfg.vehicle, cfg.gains);
    r.metrics.emplace_back("hover_omega", w);
    if (!run_sim(r, hover_state(cfg.hover.start, w), policy, sim, cfg)) {
        return;
    }
    add_tracking_metrics(r, cfg.monitor.lyapunov);
    double band = 0.0;
    for (const LogRow &row : r.log) {
        if (row.t >= cfg.hover.settle_time) {
            band = std::max(band, std::abs(row.pos.z() - cfg.hover.z_d));
        }
    }
    r.metrics.emplace_back("max_abs_dz", band);
    if (cfg.monitor.enabled) {
        check_below(r, "hover_band", band, cfg.hover.tolerance);
    }
}

inline void run_triangle(ExperimentResult &r, const RunConfig &cfg) {
    const TriangleSetup &ts = cfg.triangle;
    const TriangleParams tri = equilateral_triangle(
        ts.side, {ts.center.x(), ts.center.y(), ts.z_d}, ts.speed, ts.direction);
    SimConfig sim = cfg.sim;
    if (!cfg.duration_given) {
        sim.duration = ts.loops * tri.loop_time();
    }
    TrackingController policy([tri](double t) { return triangle_ref(t, tri); }, cfg.vehicle, cfg.gains);
    r.metrics.emplace_back("loop_time", tri.loop_time());
    if (!run_sim(r, hover_state(tri.vertices[0], hover_omega(cfg.vehicle)), policy, sim, cfg)) {
        return;
    }
    add_tracking_metrics(r, cfg.monitor.lyapunov);
    const double closure = (r.log.back().pos - triangle_ref(r.log.back().t, tri).pos).norm();
    r.metrics.emplace_back("closure", closure);
    if (cfg.monitor.enabled) {
        check_below(r, "mean_e", *r.metric("mean_e"), ts.max_mean_e);
        check_below(r, "max_e", *r.metric("max_e"), ts.max_e);
        check_below(r, "closure", closure, ts.closure);
    }
}

inline void run_lissajous(ExperimentResult &r, const RunConfig &cfg) {
    const LissajousSetup &ls = cfg.lissajous;
    LissajousParams curve = ls.curve;
    if (ls.speed) {
        curve.speed_scale = calibrate_speed_scale(curve, *ls.speed).root;
    }
    SimConfig sim = cfg.sim;
    if (!cfg.duration_given) {
        sim.duration = ls.periods * lissajous_period(curve);
    }
    auto ref = [curve](double t) { return lissajous_ref(t, curve); };
    TrackingController policy(ref, cfg.vehicle, cfg.gains);
    r.metrics.emplace_back("speed_scale", curve.speed_scale);
    r.metrics.emplace_back("period", lissajous_period(curve));
    r.metrics.emplace_back("average_speed", lissajous_average_speed(curve));
    if (!run_sim(r, hover_state(ref(0.0).pos, hover_omega(cfg.vehicle)), policy, sim, cfg)) {
        return;
    }
    add_tracking_metrics(r, cfg.monitor.lyapunov);
    const CrossTrackStats c = cross_track_by_turn(r.log, ref);
    r.metrics.emplace_back("cross_track_ccw", c.mean_ccw);
    r.metrics.emplace_back("cross_track_cw", c.mean_cw);
    r.metrics.emplace_back("cross_track_ccw_samples", static_cast<double>(c.n_ccw));
    r.metrics.emplace_back("cross_track_cw_samples", static_cast<double>(c.n_cw));
    if (cfg.monitor.enabled) {
        check_below(r, "mean_e", *r.metric("mean_e"), ls.max_mean_e);
        check_below(r, "max_e", *r.metric("max_e"), ls.max_e);
    }
}

inline void run_random_walk(ExperimentResult &r, const RunConfig &cfg) {
    const RandomWalkSetup &rs = cfg.randomwalk;
    SimConfig sim = cfg.sim;
    if (!cfg.duration_given) {
        sim.duration = rs.duration;
    }
    RandomWalkController policy(rs.environment(), rs.walk, cfg.vehicle, cfg.gains, sim.seed, rs.start);
    const State initial = hover_state({rs.start.x(), rs.start.y(), rs.walk.z_d}, hover_omega(cfg.vehicle));
    const bool finished = run_sim(r, initial, policy, sim, cfg);

    double specular = 0.0;
    for (const Bounce &b : policy.bounces()) {
        const Vec2 expected = b.dir_in - 2.0 * b.dir_in.dot(b.normal) * b.normal;
        specular = std::max(specular, (b.dir_out - expected).norm());
        specular = std::max(specular, std::abs(b.dir_out.norm() - b.dir_in.norm()));
    }
    // one sensor period at the fastest observed spin
    const double gap_bound = policy.max_spin() / rs.walk.sensor_rate * (1.0 + kScanGapSlack);

    r.metrics.emplace_back("bounces", static_cast<double>(policy.bounces().size()));
    r.metrics.emplace_back("penetrations", static_cast<double>(policy.penetrations()));
    r.metrics.emplace_back("min_clearance", policy.min_clearance());
    r.metrics.emplace_back("max_specular_error", specular);
    r.metrics.emplace_back("max_scan_gap", policy.scan().max_gap());
    r.metrics.emplace_back("scan_gap_bound", gap_bound);
    if (!finished) {
        return;
    }
    add_tracking_metrics(r, cfg.monitor.lyapunov);
    if (cfg.monitor.enabled) {
        r.checks.push_back({"no_penetration", policy.penetrations() == 0,
                            static_cast<double>(policy.penetrations()), 0.0});
        r.checks.push_back({"specular", specular <= 1e-9, specular, 1e-9});
        r.checks.push_back({"scan_gap", policy.scan().max_gap() <= gap_bound, policy.scan().max_gap(),
                            gap_bound});
    }
}

inline void run_analysis(ExperimentResult &r, const RunConfig &cfg) {
    const VehicleParams &p = cfg.vehicle;
    r.metrics.emplace_back("net_buoyancy", p.net_buoyancy());
    if (p.net_buoyancy() < 0.0) {
        r.metrics.emplace_back("hover_omega", hover_omega(p));
    }
    r.metrics.emplace_back("spin_time_constant", spin_time_constant(p, cfg.gains));

    OperatingPoint op = cfg.analyze.op;
    op.net_buoyancy = p.net_buoyancy();
    const FiniteDifferenceReport fd = finite_difference_check(op, cfg.analyze.h);
    r.metrics.emplace_back("dxy_dtheta", fd.analytic.dxy_dtheta);
    r.metrics.emplace_back("dxy_dpsi", fd.analytic.dxy_dpsi);
    r.metrics.emplace_back("dxy_dv", fd.analytic.dxy_dv);
    r.metrics.emplace_back("dz_dpsidot", fd.analytic.dz_dpsidot);
    r.metrics.emplace_back("fd_dxy_dtheta", fd.numeric.dxy_dtheta);
    r.metrics.emplace_back("fd_dxy_dpsi", fd.numeric.dxy_dpsi);
    r.metrics.emplace_back("fd_dxy_dv", fd.numeric.dxy_dv);
    r.metrics.emplace_back("fd_dz_dpsidot", fd.numeric.dz_dpsidot);
    r.metrics.emplace_back("fd_h", cfg.analyze.h);
    r.metrics.emplace_back("fd_max_rel_error", fd.max_rel_error);
    if (cfg.monitor.enabled) {
        check_below(r, "fd_max_rel_error", fd.max_rel_error, 1e-6);
    }
}

} // namespace detail

/// Runs the configured experiment. Simulation blow-ups are reported in the
/// result together with the partial log; they do not throw.
inline ExperimentResult run_experiment(const RunConfig &cfg) {
    cfg.validate();
    ExperimentResult r;
    r.experiment = cfg.experiment;
    switch (cfg.experiment) {
    case Experiment::hover:
        detail::run_hover(r, cfg);
        break;
    case Experiment::triangle:
        detail::run_triangle(r, cfg);
        break;
    case Experiment::lissajous:
        detail::run_lissajous(r, cfg);
        break;
    case Experiment::randomwalk:
        detail::run_random_walk(r, cfg);
        break;
    case Experiment::analyze:
        detail::run_analysis(r, cfg);
        break;
    }
    return r;
}

/// k_lift by bisection at the configured spin rate, and the Lissajous
/// speed_scale when a target speed is configured.
inline std::vector<std::pair<std::string, double>> run_calibration(const RunConfig &cfg) {
    std::vector<std::pair<std::string, double>> out;
    const CalibrateSetup &c = cfg.calibrate;
    const double w = c.omega ? *c.omega : hover_omega(cfg.vehicle);
    const KLiftCalibration k = calibrate_k_lift(cfg.vehicle, w, c.k_lo, c.k_hi, c.tol);
    out.emplace_back("omega", w);
    out.emplace_back("k_lift", k.k_lift);
    out.emplace_back("k_lift_closed_form", -cfg.vehicle.net_buoyancy() / (w * w));
    out.emplace_back("residual_accel", k.residual_accel);
    out.emplace_back("k_lift_iterations", k.iterations);
    out.emplace_back("k_lift_iteration_bound", std::ceil(std::log2((c.k_hi - c.k_lo) / c.tol)));
    if (cfg.lissajous.speed) {
        LissajousParams curve = cfg.lissajous.curve;
        const BisectionResult s = calibrate_speed_scale(curve, *cfg.lissajous.speed);
        curve.speed_scale = s.root;
        out.emplace_back("speed_scale", s.root);
        out.emplace_back("speed_scale_iterations", s.iterations);
        out.emplace_back("average_speed", lissajous_average_speed(curve));
        out.emplace_back("period", lissajous_period(curve));
    }
    return out;
}

// =============================================================================
// Output files
// =============================================================================

/// `key = value` lines with enough digits to round-trip every double.
inline void write_metrics(std::ostream &os, const std::vector<std::pair<std::string, double>> &metrics,
                          const std::vector<Check> &checks = {}) {
    os.imbue(std::locale::classic());
    os << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto &[k, v] : metrics) {
        os << k << " = " << v << '\n';
    }
    for (const Check &c : checks) {
        os << "check." << c.name << " = " << (c.passed ? "pass" : "fail") << '\n';
    }
}

/// Plot-ready subset: time, position and reference in the plane, at most
/// `points` rows spread evenly over the log.
inline void write_plot_csv(std::ostream &os, const SimLog &log, int points) {
    os.imbue(std::locale::classic());
    os << std::setprecision(std::numeric_limits<double>::max_digits10);
    os << "t,x,y,xd,yd\n";
    if (log.empty()) {
        return;
    }
    const std::size_t n = log.size();
    const std::size_t step = std::max<std::size_t>(1, (n + static_cast<std::size_t>(points) - 1) /
                                                          static_cast<std::size_t>(points));
    for (std::size_t i = 0; i < n; i += step) {
        const LogRow &r = log[i];
        os << r.t << ',' << r.pos.x() << ',' << r.pos.y() << ',' << r.ref.x() << ',' << r.ref.y() << '\n';
    }
    if ((n - 1) % step != 0) {
        const LogRow &r = log.back();
        os << r.t << ',' << r.pos.x() << ',' << r.pos.y() << ',' << r.ref.x() << ',' << r.ref.y() << '\n';
    }
}

/// Writes `<out>.metrics.txt`, and for simulated experiments `<out>.csv` and
/// `<out>.plot.csv`. Parent directories are created.
inline void write_artifacts(const ExperimentResult &r, const std::string &out, int plot_points) {
    const std::filesystem::path base(out);
    if (base.has_parent_path()) {
        std::filesystem::create_directories(base.parent_path());
    }
    auto open = [&](const std::string &suffix) {
        std::ofstream f(out + suffix, std::ios::binary);
        if (!f) {
            throw std::runtime_error("cannot write '" + out + suffix + "'");
        }
        return f;
    };
    if (r.experiment != Experiment::analyze) {
        std::ofstream csv = open(".csv");
        write_csv(csv, r.log);
        std::ofstream plot = open(".plot.csv");
        write_plot_csv(plot, r.log, plot_points);
    }
    std::ofstream metrics = open(".metrics.txt");
    metrics << "experiment = " << to_string(r.experiment) << '\n';
    write_metrics(metrics, r.metrics, r.checks);
    if (r.blew_up) {
        metrics << "error = " << r.error << '\n';
    }
}

} // namespace spinblimp
