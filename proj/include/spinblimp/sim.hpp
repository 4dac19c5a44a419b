// Spinning blimp simulator
// Fixed-step RK4 integration under a pluggable control policy, with CSV logs.
#pragma once

#include <spinblimp/core.hpp>
#include <spinblimp/dynamics.hpp>

#include <charconv>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace spinblimp {

/// When the control law is evaluated.
///
/// `step` samples the policy once per step and holds the thrusts constant over
/// the step (zero-order hold). `stage` re-evaluates the pure command at every
/// Runge-Kutta stage, which integrates the continuous-time closed loop.
enum class ControlHold { step, stage };

struct SimConfig {
    double dt = 1e-3;
    double duration = 10.0;
    Model model = Model::simplified;
    std::uint64_t seed = 0;
    int log_stride = 10;
    int control_stride = 1;
    ControlHold hold = ControlHold::step;

    void validate() const {
        if (!(dt > 0.0) || !std::isfinite(dt)) {
            throw std::invalid_argument("sim.dt: must be > 0");
        }
        if (!(duration >= dt) || !std::isfinite(duration)) {
            throw std::invalid_argument("sim.duration: must be >= dt");
        }
        if (log_stride < 1) {
            throw std::invalid_argument("sim.log_stride: must be >= 1");
        }
        if (control_stride < 1) {
            throw std::invalid_argument("sim.control_stride: must be >= 1");
        }
        if (hold == ControlHold::stage && control_stride != 1) {
            throw std::invalid_argument("sim.control_stride: must be 1 with stage-evaluated control");
        }
    }

    long long steps() const { return std::max(1LL, std::llround(duration / dt)); }
};

/// What a policy reports back each time it is queried.
struct ControlOutput {
    ControlInput u;
    Reference ref;
    std::optional<double> beta;
    std::optional<double> omega_z_star;
};

struct MonitorValues {
    double V_z = 0.0;
    double V_xy = 0.0;
};

/// Optional per-row monitor, evaluated on the logged state and command.
using Monitor = std::function<MonitorValues(const State &, const ControlOutput &)>;

struct LogRow {
    double t = 0.0;
    Vec3 pos = Vec3::Zero();
    Vec3 vel = Vec3::Zero();
    double roll = 0.0;
    double pitch = 0.0;
    double yaw = 0.0;
    Vec3 omega = Vec3::Zero();
    double f1 = 0.0;
    double f2 = 0.0;
    Vec3 ref = Vec3::Zero();
    std::optional<double> beta;
    std::optional<double> omega_z_star;
    double e = 0.0; ///< |x_d - x|
    std::optional<double> V_z;
    std::optional<double> V_xy;
};

using SimLog = std::vector<LogRow>;

/// A control policy returns a command for (t, state). Commands must not
/// mutate the policy; per-step side effects such as sensor sampling go in an
/// optional observe(t, state), called once per step before command().
template <class P>
concept ControlPolicy = requires(const P &p, double t, const State &s) {
    { p.command(t, s) } -> std::convertible_to<ControlOutput>;
};

template <class P>
concept ObservingPolicy = requires(P &p, double t, const State &s) { p.observe(t, s); };

/// Integration produced a non-finite state.
class SimulationError : public std::runtime_error {
  public:
    SimulationError(long long step, double t, SimLog partial)
        : std::runtime_error("integration blow-up at step " + std::to_string(step) +
                             " (t = " + std::to_string(t) + " s)"),
          step_(step), t_(t), partial_(std::move(partial)) {}

    long long step() const { return step_; }
    double time() const { return t_; }
    const SimLog &partial_log() const { return partial_; }

  private:
    long long step_;
    double t_;
    SimLog partial_;
};

// =============================================================================
// Runge-Kutta 4
// =============================================================================

namespace detail {

using StateVector = Eigen::Matrix<double, 13, 1>;

inline StateVector pack(Model model, const State &s) {
    StateVector x;
    x.segment<3>(0) = s.pos;
    x.segment<3>(3) = s.vel;
    if (model == Model::full) {
        const Quat &q = s.att.quaternion();
        x.segment<4>(6) << q.w(), q.x(), q.y(), q.z();
    } else {
        x.segment<4>(6) << s.att.yaw(), 0.0, 0.0, 0.0;
    }
    x.segment<3>(10) = s.omega;
    return x;
}

inline State unpack(Model model, const StateVector &x) {
    State s;
    s.pos = x.segment<3>(0);
    s.vel = x.segment<3>(3);
    if (model == Model::full) {
        s.att = Attitude::from_quaternion(Quat(x(6), x(7), x(8), x(9)));
    } else {
        s.att = Attitude::from_yaw(x(6));
    }
    s.omega = x.segment<3>(10);
    return s;
}

inline StateVector pack_dot(Model model, const StateDot &d) {
    StateVector x;
    x.segment<3>(0) = d.dpos;
    x.segment<3>(3) = d.dvel;
    if (model == Model::full) {
        x.segment<4>(6) = d.dquat;
    } else {
        x.segment<4>(6) << d.dyaw, 0.0, 0.0, 0.0;
    }
    x.segment<3>(10) = d.domega;
    return x;
}

} // namespace detail

/// One classical RK4 step with the input re-evaluated at each stage by
/// input(t, state). The attitude is renormalized after the step.
template <class InputFn>
    requires std::invocable<InputFn &, double, const State &>
State step_rk4(const State &s, double t, double dt, Model model, const VehicleParams &p,
               InputFn &&input) {
    using detail::pack;
    using detail::pack_dot;
    using detail::unpack;
    if (!(dt > 0.0)) {
        throw std::invalid_argument("step_rk4: dt must be > 0");
    }
    auto f = [&](double ts, const detail::StateVector &x) {
        const State st = unpack(model, x);
        return pack_dot(model, derivative(model, st, input(ts, st), p));
    };
    const detail::StateVector x0 = pack(model, s);
    const detail::StateVector k1 = pack_dot(model, derivative(model, s, input(t, s), p));
    const detail::StateVector k2 = f(t + 0.5 * dt, x0 + 0.5 * dt * k1);
    const detail::StateVector k3 = f(t + 0.5 * dt, x0 + 0.5 * dt * k2);
    const detail::StateVector k4 = f(t + dt, x0 + dt * k3);
    return unpack(model, x0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

/// RK4 step with the input held constant.
inline State step_rk4(const State &s, const ControlInput &u, double dt, Model model,
                      const VehicleParams &p) {
    return step_rk4(s, 0.0, dt, model, p, [&u](double, const State &) { return u; });
}

// =============================================================================
// Simulation loop
// =============================================================================

namespace detail {

inline LogRow make_row(double t, const State &s, const ControlOutput &out, const Monitor &monitor) {
    LogRow r;
    r.t = t;
    r.pos = s.pos;
    r.vel = s.vel;
    r.roll = s.att.roll();
    r.pitch = s.att.pitch();
    r.yaw = s.att.yaw();
    r.omega = s.omega;
    r.f1 = out.u.f1;
    r.f2 = out.u.f2;
    r.ref = out.ref.pos;
    r.beta = out.beta;
    r.omega_z_star = out.omega_z_star;
    r.e = (out.ref.pos - s.pos).norm();
    if (monitor) {
        const MonitorValues m = monitor(s, out);
        r.V_z = m.V_z;
        r.V_xy = m.V_xy;
    }
    return r;
}

} // namespace detail

/// Run one closed-loop simulation.
///
/// The policy is observed and queried once per step (every control_stride
/// steps for the command); thrusts are clamped to [0, f_max] before they reach
/// the dynamics. Rows are logged every log_stride steps and at the final step.
/// Throws SimulationError carrying the partial log if the state blows up.
template <ControlPolicy P>
SimLog simulate(const State &initial, P &policy, const SimConfig &cfg, const VehicleParams &params,
                const Monitor &monitor = {}) {
    cfg.validate();
    params.validate(false);
    if (!initial.finite()) {
        throw std::invalid_argument("simulate: initial state must be finite");
    }
    if (cfg.model == Model::simplified) {
        require_planar(initial);
    }

    const long long n = cfg.steps();
    SimLog log;
    log.reserve(static_cast<std::size_t>(n / cfg.log_stride + 2));

    auto query = [&](double t, const State &s) {
        ControlOutput out = policy.command(t, s);
        out.u = saturate(out.u, params.f_max);
        return out;
    };

    State s = initial;
    ControlOutput out;
    for (long long k = 0;; ++k) {
        const double t = static_cast<double>(k) * cfg.dt;
        if constexpr (ObservingPolicy<P>) {
            policy.observe(t, s);
        }
        if (k % cfg.control_stride == 0 || cfg.hold == ControlHold::stage) {
            out = query(t, s);
        }
        if (k % cfg.log_stride == 0 || k == n) {
            log.push_back(detail::make_row(t, s, out, monitor));
        }
        if (k == n) {
            break;
        }
        bool ok = true;
        try {
            if (cfg.hold == ControlHold::stage) {
                s = step_rk4(s, t, cfg.dt, cfg.model, params,
                             [&](double ts, const State &st) { return query(ts, st).u; });
            } else {
                s = step_rk4(s, out.u, cfg.dt, cfg.model, params);
            }
        } catch (const std::invalid_argument &) {
            // a non-finite quaternion stage
            ok = false;
        }
        if (!ok || !s.finite()) {
            throw SimulationError(k + 1, t + cfg.dt, std::move(log));
        }
    }
    return log;
}

// =============================================================================
// CSV
// =============================================================================

inline constexpr const char *kLogColumns =
    "t,x,y,z,vx,vy,vz,roll,pitch,yaw,wx,wy,wz,f1,f2,xd,yd,zd,beta,omega_z_star,e,V_z,V_xy";

namespace detail {

inline void put(std::ostream &os, double v) { os << v; }

inline void put(std::ostream &os, const std::optional<double> &v) {
    if (v) {
        os << *v;
    }
}

inline void put(std::ostream &os, const Vec3 &v) { os << v.x() << ',' << v.y() << ',' << v.z(); }

} // namespace detail

/// Writes the header and one line per row. Values are printed with 17
/// significant digits so they parse back to the same doubles; absent optional
/// values are empty fields.
inline void write_csv(std::ostream &os, const SimLog &log) {
    os.imbue(std::locale::classic());
    const auto flags = os.flags();
    const auto prec = os.precision();
    os << std::setprecision(std::numeric_limits<double>::max_digits10);
    os << kLogColumns << '\n';
    for (const LogRow &r : log) {
        using detail::put;
        put(os, r.t);
        os << ',';
        put(os, r.pos);
        os << ',';
        put(os, r.vel);
        os << ',';
        put(os, r.roll);
        os << ',';
        put(os, r.pitch);
        os << ',';
        put(os, r.yaw);
        os << ',';
        put(os, r.omega);
        os << ',';
        put(os, r.f1);
        os << ',';
        put(os, r.f2);
        os << ',';
        put(os, r.ref);
        os << ',';
        put(os, r.beta);
        os << ',';
        put(os, r.omega_z_star);
        os << ',';
        put(os, r.e);
        os << ',';
        put(os, r.V_z);
        os << ',';
        put(os, r.V_xy);
        os << '\n';
    }
    os.flags(flags);
    os.precision(prec);
}

/// Parses a log written by write_csv. Throws std::runtime_error on a header
/// mismatch or malformed line.
inline SimLog read_csv(std::istream &is) {
    std::string line;
    if (!std::getline(is, line) || line != kLogColumns) {
        throw std::runtime_error("log csv: unexpected header");
    }
    SimLog log;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        std::vector<std::optional<double>> f;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            const std::string cell = line.substr(start, comma == std::string::npos ? std::string::npos
                                                                                   : comma - start);
            if (cell.empty()) {
                f.emplace_back();
            } else {
                double v = 0.0;
                const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
                if (ec != std::errc() || end != cell.data() + cell.size()) {
                    throw std::runtime_error("log csv: bad number on line " + std::to_string(line_no));
                }
                f.emplace_back(v);
            }
            if (comma == std::string::npos) {
                break;
            }
            start = comma + 1;
        }
        if (f.size() != 23) {
            throw std::runtime_error("log csv: wrong field count on line " + std::to_string(line_no));
        }
        auto req = [&](std::size_t i) {
            if (!f[i]) {
                throw std::runtime_error("log csv: missing value on line " + std::to_string(line_no));
            }
            return *f[i];
        };
        LogRow r;
        r.t = req(0);
        r.pos = {req(1), req(2), req(3)};
        r.vel = {req(4), req(5), req(6)};
        r.roll = req(7);
        r.pitch = req(8);
        r.yaw = req(9);
        r.omega = {req(10), req(11), req(12)};
        r.f1 = req(13);
        r.f2 = req(14);
        r.ref = {req(15), req(16), req(17)};
        r.beta = f[18];
        r.omega_z_star = f[19];
        r.e = req(20);
        r.V_z = f[21];
        r.V_xy = f[22];
        log.push_back(r);
    }
    return log;
}

} // namespace spinblimp
