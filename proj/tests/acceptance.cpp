// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <spinblimp/analysis.hpp>
#include <spinblimp/behavior.hpp>
#include <spinblimp/config.hpp>
#include <spinblimp/control.hpp>
#include <spinblimp/experiments.hpp>
#include <spinblimp/sim.hpp>
#include <spinblimp/trajectory.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace spinblimp;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string &what) {
        if (!ok) {
            pass = false;
        }
        if (!detail.empty()) {
            detail += "; ";
        }
        detail += what + (ok ? "" : " [x]");
    }
};

std::string fmt(const char *f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string fmt(const char *f, double a, double b) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

// 1. hover rate and a 60 s hover
Outcome hover_equilibrium() {
    Outcome o;
    const VehicleParams p;
    const Gains g;
    const double w = hover_omega(p);
    o.require(std::abs(w - 10.0) < 1e-9, fmt("hover_omega = %.12g", w));

    const auto t0 = Clock::now();
    const Reference ref = Reference::hold({0.0, 0.0, 1.0});
    TrackingController policy([ref](double) { return ref; }, p, g);
    SimConfig cfg;
    cfg.duration = 60.0;
    cfg.log_stride = 1;
    const SimLog log = simulate(hover_state(ref.pos, w), policy, cfg, p);
    const double elapsed = seconds_since(t0);
    double band = 0.0;
    for (const LogRow &r : log) {
        band = std::max(band, std::abs(r.pos.z() - 1.0));
    }
    o.require(band < 0.01, fmt("max |z - z_d| = %.3g m", band));
    o.require(elapsed < 5.0, fmt("runtime %.2f s", elapsed));
    return o;
}

// 2. spin rate against the closed-form exponential
Outcome spin_convergence() {
    Outcome o;
    const VehicleParams p;
    const Gains g;
    const double w0 = 5.0;
    const double w_star = 10.0;
    const double tau = spin_time_constant(p, g);
    SpinRateController policy(w_star, p, g);
    SimConfig cfg;
    cfg.duration = 5.0 * tau;
    cfg.log_stride = 1;
    cfg.hold = ControlHold::stage;
    const SimLog log = simulate(hover_state({0, 0, 1}, w0), policy, cfg, p);
    double worst = 0.0;
    bool unclamped = true;
    for (const LogRow &r : log) {
        const double exact = omega_convergence_analytic(r.t, w0, w_star, g.k, p.l_m, p.inertia.z());
        worst = std::max(worst, std::abs(r.omega.z() - exact) / std::abs(exact));
        const ControlInput raw = height_control_input_raw(r.omega.z(), w_star, p, g);
        unclamped = unclamped && raw.f1 >= 0.0 && raw.f1 <= p.f_max;
    }
    o.require(unclamped, "thrust inside [0, f_max] throughout");
    o.require(worst < 1e-6, fmt("max relative error %.3g over 5 time constants", worst));
    return o;
}

// 3. height Lyapunov function along a 0 -> 1 m step
Outcome lyapunov_decrease() {
    Outcome o;
    const VehicleParams p;
    const Gains g;
    const double dt = 1e-3;
    const std::vector<ZAxisSample> run = simulate_z_axis(0.0, 0.0, 1.0, p, g, dt, 30.0);
    double worst_rise = 0.0;
    double worst_rate = 0.0;
    bool saturated = false;
    for (std::size_t i = 1; i < run.size(); ++i) {
        worst_rise = std::max(worst_rise, run[i].V - run[i - 1].V);
        saturated = saturated || run[i].descent_saturated;
        if (i + 1 < run.size()) {
            const double fd = (run[i + 1].V - run[i - 1].V) / (2.0 * dt);
            worst_rate = std::max(worst_rate, std::abs(fd - run[i].Vdot));
        }
    }
    o.require(!saturated, "lift never clamped");
    o.require(worst_rise <= 1e-6, fmt("largest V increase %.3g", worst_rise));
    o.require(worst_rate <= 1e-4, fmt("max |dV/dt - Vdot| = %.3g", worst_rate));
    return o;
}

// 4. planar linearization against central differences
Outcome linearization() {
    Outcome o;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> ang(-kPi, kPi);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst = 0.0;
    double coarse = 0.0;
    double fine = 0.0;
    for (int i = 0; i < 1000; ++i) {
        OperatingPoint op;
        op.theta_xy0 = ang(rng);
        op.psi0 = ang(rng);
        op.v_xy0 = 2.0 * unit(rng);
        op.psidot0 = 20.0 * unit(rng);
        op.F_xy_des = 0.05 + 2.0 * unit(rng);
        op.K_D = 0.1 * unit(rng);
        op.k_F = 1e-3 * unit(rng);
        op.net_buoyancy = -0.04905;
        worst = std::max(worst, finite_difference_check(op, 1e-6).max_rel_error);
        // v and psidot enter quadratically, so central differences are exact
        // there; the order shows in the trigonometric partials
        const FiniteDifferenceReport a = finite_difference_check(op, 1e-2);
        const FiniteDifferenceReport b = finite_difference_check(op, 5e-3);
        coarse += a.rel_error[0] + a.rel_error[1];
        fine += b.rel_error[0] + b.rel_error[1];
    }
    const double order = std::log2(coarse / fine);
    o.require(worst < 1e-6, fmt("max relative error %.3g at h = 1e-6", worst));
    o.require(std::abs(order - 2.0) <= 0.1, fmt("observed order %.4f", order));
    return o;
}

// 5. triangle, both turning directions
Outcome triangle_tracking() {
    Outcome o;
    const VehicleParams p;
    const Gains g;
    for (Direction dir : {Direction::ccw, Direction::cw}) {
        const auto t0 = Clock::now();
        const TriangleParams tri = equilateral_triangle(2.0, {0, 0, 1}, 0.10, dir);
        TrackingController policy([tri](double t) { return triangle_ref(t, tri); }, p, g);
        SimConfig cfg;
        cfg.duration = tri.loop_time();
        const SimLog log = simulate(hover_state(tri.vertices[0], hover_omega(p)), policy, cfg, p);
        const double elapsed = seconds_since(t0);
        const TrackingMetrics m = tracking_metrics(log);
        const double closure = (log.back().pos - tri.vertices[0]).norm();
        const std::string name = dir == Direction::ccw ? "ccw" : "cw";
        o.require(m.mean_e < 0.3, name + fmt(" mean_e %.3f m", m.mean_e));
        o.require(m.max_e < 1.0, name + fmt(" max_e %.3f m", m.max_e));
        o.require(closure < 0.3, name + fmt(" closure %.3f m", closure));
        o.require(elapsed < 30.0, name + fmt(" runtime %.2f s", elapsed));
    }
    return o;
}

// 6. Lissajous at two speeds
Outcome lissajous_tracking() {
    Outcome o;
    const VehicleParams p;
    const Gains g;
    std::vector<double> mean_e;
    for (double v : {0.13, 0.42}) {
        LissajousParams curve;
        curve.speed_scale = calibrate_speed_scale(curve, v).root;
        auto ref = [curve](double t) { return lissajous_ref(t, curve); };
        TrackingController policy(ref, p, g);
        SimConfig cfg;
        cfg.duration = lissajous_period(curve);
        const SimLog log = simulate(hover_state(ref(0.0).pos, hover_omega(p)), policy, cfg, p);
        const TrackingMetrics m = tracking_metrics(log);
        const CrossTrackStats c = cross_track_by_turn(log, ref);
        mean_e.push_back(m.mean_e);
        o.require(std::abs(lissajous_average_speed(curve) - v) < 0.01 * v, fmt("v %.2f calibrated", v));
        o.require(m.mean_e < 0.5 && m.max_e < 1.5, fmt("v %.2f mean_e %.3f m", v, m.mean_e));
        o.require(c.n_ccw > 0 && c.n_cw > 0 && (c.mean_ccw > 0.0) != (c.mean_cw > 0.0),
                  fmt("v %.2f cross-track ccw %+.4f", v, c.mean_ccw) + fmt(" cw %+.4f m", c.mean_cw));
    }
    o.require(mean_e[1] >= mean_e[0], "mean_e grows with speed");
    return o;
}

// 7. bang-bang properties
Outcome bang_bang() {
    Outcome o;
    o.require(bang_bang_sign(0.0) == 1 && bang_bang_sign(kPi / 2.0) == 1 &&
                  bang_bang_sign(-kPi / 2.0) == -1 && bang_bang_sign(kPi) == -1,
              "truth table at 0, +-pi/2, pi");
    const VehicleParams p;
    const Gains g;
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> ang(-kPi, kPi);
    std::uniform_real_distribution<double> x(-3.0, 3.0);
    std::uniform_real_distribution<double> w(0.0, 20.0);
    long sum_bad = 0;
    long push_bad = 0;
    for (int i = 0; i < 100000; ++i) {
        State s;
        s.pos = {x(rng), x(rng), x(rng)};
        s.vel = {x(rng), x(rng), x(rng)};
        s.att = Attitude::from_yaw(ang(rng));
        s.omega = {0, 0, w(rng)};
        const Reference ref = Reference::hold({x(rng), x(rng), x(rng)});
        const PositionCommand c = position_control(s, ref, p, g);
        if (std::abs(c.unclamped.f1 + c.unclamped.f2 - (c.hover.f1 + c.hover.f2)) > 1e-15) {
            ++sum_bad;
        }
        const Vec2 to_goal = (ref.pos - s.pos).head<2>();
        if (to_goal.norm() > g.goal_epsilon &&
            motor_force_world(s, c.unclamped).head<2>().dot(to_goal) < 0.0) {
            ++push_bad;
        }
    }
    o.require(sum_bad == 0, fmt("thrust sum changed in %.0f of 1e5 cases", static_cast<double>(sum_bad)));
    o.require(push_bad == 0, fmt("force away from goal in %.0f of 1e5 cases", static_cast<double>(push_bad)));
    return o;
}

// 8. ten-minute random walk in a 6 x 4 m room
Outcome random_walk() {
    Outcome o;
    const Gains g;
    const RandomWalkParams rw;
    for (const double spin : {10.0, 4.0 * kPi}) {
        VehicleParams p;
        p.k_lift = calibrate_k_lift(p, spin, 1e-6, 1e-2).k_lift;
        RandomWalkController policy(Environment::rectangle(6.0, 4.0), rw, p, g, 42, {0, 0});
        SimConfig cfg;
        cfg.duration = 600.0;
        cfg.seed = 42;
        const SimLog log = simulate(hover_state({0, 0, rw.z_d}, hover_omega(p)), policy, cfg, p);
        double specular = 0.0;
        for (const Bounce &b : policy.bounces()) {
            specular = std::max(specular, (b.dir_out - (b.dir_in - 2.0 * b.dir_in.dot(b.normal) * b.normal)).norm());
        }
        const std::string name = fmt("w %.2f", spin);
        o.require(policy.penetrations() == 0 && policy.min_clearance() > 0.0,
                  name + fmt(" penetrations %.0f, min clearance %.3f m",
                             static_cast<double>(policy.penetrations()), policy.min_clearance()));
        o.require(!policy.bounces().empty() && specular <= 1e-9,
                  name + fmt(" %.0f bounces, specular error %.2g", static_cast<double>(policy.bounces().size()),
                             specular));
        if (spin > 10.0) {
            const double bound = policy.max_spin() / rw.sensor_rate;
            o.require(policy.scan().max_gap() <= bound * (1.0 + kScanGapSlack) && policy.scan().max_gap() <= 0.126,
                      fmt("scan gap %.4f rad (bound %.4f)", policy.scan().max_gap(), bound));
        }
    }
    return o;
}

// 9. determinism and integrator order
Outcome determinism_and_order() {
    Outcome o;
    RunConfig cfg = parse_config("run.experiment = randomwalk\nsim.duration = 120\nsim.seed = 7\n");
    auto csv = [](const RunConfig &c) {
        std::ostringstream os;
        write_csv(os, run_experiment(c).log);
        return os.str();
    };
    const std::string a = csv(cfg);
    const std::string b = csv(cfg);
    cfg.sim.seed = 8;
    const std::string c = csv(cfg);
    o.require(a == b, "same seed, identical CSV");
    o.require(a != c, "different seed, different CSV");

    const VehicleParams p;
    const Gains g;
    const Reference ref = Reference::hold({0.0, 0.0, 1.1});
    TrackingController policy([ref](double) { return ref; }, p, g);
    // closed-loop climb that keeps v_z > 0, so the |v|v drag term stays smooth
    State start = hover_state({0, 0, 1.0}, hover_omega(p));
    start.vel.z() = 0.05;
    auto final_state = [&](double dt) {
        SimConfig sc;
        sc.dt = dt;
        sc.duration = 2.0;
        sc.hold = ControlHold::stage;
        const SimLog log = simulate(start, policy, sc, p);
        return Eigen::Vector3d(log.back().pos.z(), log.back().vel.z(), log.back().omega.z());
    };
    const Eigen::Vector3d x1 = final_state(0.01);
    const Eigen::Vector3d x2 = final_state(0.005);
    const Eigen::Vector3d x3 = final_state(0.0025);
    const double order = std::log2((x1 - x2).norm() / (x2 - x3).norm());
    o.require(order >= 3.9, fmt("RK4 self-convergence order %.3f", order));
    return o;
}

} // namespace

int main() {
    struct Criterion {
        const char *name;
        Outcome (*run)();
    };
    const Criterion criteria[] = {
        {"1 hover equilibrium", hover_equilibrium},
        {"2 spin-rate convergence", spin_convergence},
        {"3 height Lyapunov decrease", lyapunov_decrease},
        {"4 planar linearization", linearization},
        {"5 triangle tracking", triangle_tracking},
        {"6 Lissajous tracking", lissajous_tracking},
        {"7 bang-bang properties", bang_bang},
        {"8 random walk", random_walk},
        {"9 determinism and RK4 order", determinism_and_order},
    };
    int failed = 0;
    for (const Criterion &c : criteria) {
        const auto t0 = Clock::now();
        const Outcome o = c.run();
        std::printf("%s  %-30s (%.2f s)  %s\n", o.pass ? "PASS" : "FAIL", c.name, seconds_since(t0),
                    o.detail.c_str());
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    std::printf("SKIP  %-30s  hover endurance and wind resilience are hardware results\n",
                "10 endurance and wind");
    std::printf("%d of 9 criteria failed\n", failed);
    return failed == 0 ? 0 : 1;
}
