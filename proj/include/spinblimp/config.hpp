// Spinning blimp run configuration
// Flat `section.key = value` files with `#` comments. Every key has a default,
// so an empty file describes a complete run.
#pragma once

#include <spinblimp/analysis.hpp>
#include <spinblimp/behavior.hpp>
#include <spinblimp/control.hpp>
#include <spinblimp/core.hpp>
#include <spinblimp/sim.hpp>
#include <spinblimp/trajectory.hpp>

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace spinblimp {

/// Malformed file, unknown key or out-of-range value. The message carries the
/// line number or the key.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class Experiment { hover, triangle, lissajous, randomwalk, analyze };

inline const char *to_string(Experiment e) {
    switch (e) {
    case Experiment::hover:
        return "hover";
    case Experiment::triangle:
        return "triangle";
    case Experiment::lissajous:
        return "lissajous";
    case Experiment::randomwalk:
        return "randomwalk";
    case Experiment::analyze:
        return "analyze";
    }
    return "?";
}

struct HoverSetup {
    Vec3 start{0.0, 0.0, 1.0};
    double z_d = 1.0;
    double tolerance = 0.01;   ///< allowed |z - z_d| after settle_time [m]
    double settle_time = 0.0;  ///< [s]
    double duration = 60.0;    ///< used unless sim.duration is given [s]
};

struct TriangleSetup {
    double side = 2.0;
    Vec2 center = Vec2::Zero();
    double z_d = 1.0;
    double speed = 0.10;
    Direction direction = Direction::ccw;
    int loops = 1;
    double max_mean_e = 0.3;   ///< [m]
    double max_e = 1.0;        ///< divergence bound [m]
    double closure = 0.3;      ///< final distance to the start vertex [m]
};

struct LissajousSetup {
    LissajousParams curve;
    std::optional<double> speed; ///< average path speed; calibrates speed_scale when set
    int periods = 1;
    double max_mean_e = 0.5;     ///< [m]
    double max_e = 1.5;          ///< [m]
};

struct RandomWalkSetup {
    RandomWalkParams walk;
    Vec2 start = Vec2::Zero();
    double duration = 600.0;     ///< used unless sim.duration is given [s]
    double room_width = 6.0;     ///< rectangle used when no env.wall lines are given [m]
    double room_height = 4.0;
    std::map<int, std::array<double, 4>> walls;

    Environment environment() const {
        if (walls.empty()) {
            return Environment::rectangle(room_width, room_height);
        }
        Environment env;
        for (const auto &[index, w] : walls) {
            env.add_wall({w[0], w[1]}, {w[2], w[3]});
        }
        return env;
    }
};

struct CalibrateSetup {
    std::optional<double> omega; ///< spin rate to hover at, default the current hover rate
    double k_lo = 1e-6;
    double k_hi = 1e-2;
    double tol = 1e-13;
};

struct AnalyzeSetup {
    OperatingPoint op;
    double h = 1e-6;             ///< finite-difference step
};

struct MonitorSetup {
    bool enabled = true;         ///< evaluate pass/fail checks
    bool lyapunov = true;        ///< log V_z and V_xy
};

struct RunConfig {
    VehicleParams vehicle;
    Gains gains;
    SimConfig sim;
    bool duration_given = false;
    Experiment experiment = Experiment::hover;
    std::string out = "run";
    int plot_points = 2000;

    HoverSetup hover;
    TriangleSetup triangle;
    LissajousSetup lissajous;
    RandomWalkSetup randomwalk;
    CalibrateSetup calibrate;
    AnalyzeSetup analyze;
    MonitorSetup monitor;

    /// Checks every section the run touches. Throws ConfigError naming the key.
    void validate() const;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_double(std::string_view v) {
    v = trim(v);
    if (!v.empty() && v.front() == '+') {
        v.remove_prefix(1);
    }
    double x = 0.0;
    const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (v.empty() || ec != std::errc() || end != v.data() + v.size()) {
        throw ConfigError("expected a number, got '" + std::string(v) + "'");
    }
    return x;
}

inline long long parse_int(std::string_view v) {
    v = trim(v);
    long long x = 0;
    const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (v.empty() || ec != std::errc() || end != v.data() + v.size()) {
        throw ConfigError("expected an integer, got '" + std::string(v) + "'");
    }
    return x;
}

inline std::vector<double> parse_list(std::string_view v, std::size_t n) {
    std::vector<double> out;
    while (true) {
        const auto comma = v.find(',');
        out.push_back(parse_double(v.substr(0, comma)));
        if (comma == std::string_view::npos) {
            break;
        }
        v.remove_prefix(comma + 1);
    }
    if (out.size() != n) {
        throw ConfigError("expected " + std::to_string(n) + " comma-separated numbers");
    }
    return out;
}

inline bool parse_bool(std::string_view v) {
    v = trim(v);
    if (v == "true" || v == "1" || v == "yes" || v == "on") {
        return true;
    }
    if (v == "false" || v == "0" || v == "no" || v == "off") {
        return false;
    }
    throw ConfigError("expected true or false, got '" + std::string(v) + "'");
}

inline Vec3 parse_vec3(std::string_view v) {
    const auto x = parse_list(v, 3);
    return {x[0], x[1], x[2]};
}

inline Vec2 parse_vec2(std::string_view v) {
    const auto x = parse_list(v, 2);
    return {x[0], x[1]};
}

using Setter = std::function<void(RunConfig &, std::string_view)>;

template <class F>
Setter num(F field) {
    return [field](RunConfig &c, std::string_view v) { field(c) = parse_double(v); };
}

inline const std::map<std::string, Setter, std::less<>> &setters() {
    static const std::map<std::string, Setter, std::less<>> table = [] {
        std::map<std::string, Setter, std::less<>> t;
        // vehicle
        t["vehicle.m"] = num([](RunConfig &c) -> double & { return c.vehicle.m; });
        t["vehicle.g"] = num([](RunConfig &c) -> double & { return c.vehicle.g; });
        t["vehicle.f_b"] = num([](RunConfig &c) -> double & { return c.vehicle.f_b; });
        t["vehicle.l_m"] = num([](RunConfig &c) -> double & { return c.vehicle.l_m; });
        t["vehicle.k_lift"] = num([](RunConfig &c) -> double & { return c.vehicle.k_lift; });
        t["vehicle.d_x"] = num([](RunConfig &c) -> double & { return c.vehicle.d_x; });
        t["vehicle.d_y"] = num([](RunConfig &c) -> double & { return c.vehicle.d_y; });
        t["vehicle.d_z"] = num([](RunConfig &c) -> double & { return c.vehicle.d_z; });
        t["vehicle.d_w"] = num([](RunConfig &c) -> double & { return c.vehicle.d_w; });
        t["vehicle.f_max"] = num([](RunConfig &c) -> double & { return c.vehicle.f_max; });
        t["vehicle.inertia"] = [](RunConfig &c, std::string_view v) { c.vehicle.inertia = parse_vec3(v); };
        t["vehicle.p_b"] = [](RunConfig &c, std::string_view v) { c.vehicle.p_b = parse_vec3(v); };
        t["vehicle.p_g"] = [](RunConfig &c, std::string_view v) { c.vehicle.p_g = parse_vec3(v); };
        // gram and gram-force inputs, converted to SI here
        t["vehicle.m_grams"] = [](RunConfig &c, std::string_view v) { c.vehicle.m = 1e-3 * parse_double(v); };
        t["vehicle.f_b_grams"] = [](RunConfig &c, std::string_view v) {
            c.vehicle.f_b = 1e-3 * parse_double(v) * kStandardGravity;
        };
        t["vehicle.f_max_grams"] = [](RunConfig &c, std::string_view v) {
            c.vehicle.f_max = 1e-3 * parse_double(v) * kStandardGravity;
        };
        // gains
        t["gains.K_p"] = num([](RunConfig &c) -> double & { return c.gains.K_p; });
        t["gains.K_d"] = num([](RunConfig &c) -> double & { return c.gains.K_d; });
        t["gains.k"] = num([](RunConfig &c) -> double & { return c.gains.k; });
        t["gains.tau"] = num([](RunConfig &c) -> double & { return c.gains.tau; });
        t["gains.hover_deadband"] = num([](RunConfig &c) -> double & { return c.gains.hover_deadband; });
        t["gains.goal_epsilon"] = num([](RunConfig &c) -> double & { return c.gains.goal_epsilon; });
        // sim
        t["sim.dt"] = num([](RunConfig &c) -> double & { return c.sim.dt; });
        t["sim.duration"] = [](RunConfig &c, std::string_view v) {
            c.sim.duration = parse_double(v);
            c.duration_given = true;
        };
        t["sim.model"] = [](RunConfig &c, std::string_view v) {
            v = trim(v);
            if (v == "full") {
                c.sim.model = Model::full;
            } else if (v == "simplified") {
                c.sim.model = Model::simplified;
            } else {
                throw ConfigError("expected full or simplified");
            }
        };
        t["sim.seed"] = [](RunConfig &c, std::string_view v) {
            const long long s = parse_int(v);
            if (s < 0) {
                throw ConfigError("must be >= 0");
            }
            c.sim.seed = static_cast<std::uint64_t>(s);
        };
        t["sim.log_stride"] = [](RunConfig &c, std::string_view v) {
            c.sim.log_stride = static_cast<int>(parse_int(v));
        };
        t["sim.control_stride"] = [](RunConfig &c, std::string_view v) {
            c.sim.control_stride = static_cast<int>(parse_int(v));
        };
        t["sim.hold"] = [](RunConfig &c, std::string_view v) {
            v = trim(v);
            if (v == "step") {
                c.sim.hold = ControlHold::step;
            } else if (v == "stage") {
                c.sim.hold = ControlHold::stage;
            } else {
                throw ConfigError("expected step or stage");
            }
        };
        // run
        t["run.experiment"] = [](RunConfig &c, std::string_view v) {
            v = trim(v);
            for (Experiment e : {Experiment::hover, Experiment::triangle, Experiment::lissajous,
                                 Experiment::randomwalk, Experiment::analyze}) {
                if (v == to_string(e)) {
                    c.experiment = e;
                    return;
                }
            }
            throw ConfigError("expected hover, triangle, lissajous, randomwalk or analyze");
        };
        t["run.out"] = [](RunConfig &c, std::string_view v) { c.out = std::string(trim(v)); };
        t["run.plot_points"] = [](RunConfig &c, std::string_view v) {
            c.plot_points = static_cast<int>(parse_int(v));
        };
        // hover
        t["hover.start"] = [](RunConfig &c, std::string_view v) { c.hover.start = parse_vec3(v); };
        t["hover.z_d"] = num([](RunConfig &c) -> double & { return c.hover.z_d; });
        t["hover.tolerance"] = num([](RunConfig &c) -> double & { return c.hover.tolerance; });
        t["hover.settle_time"] = num([](RunConfig &c) -> double & { return c.hover.settle_time; });
        t["hover.duration"] = num([](RunConfig &c) -> double & { return c.hover.duration; });
        // triangle
        t["triangle.side"] = num([](RunConfig &c) -> double & { return c.triangle.side; });
        t["triangle.center"] = [](RunConfig &c, std::string_view v) { c.triangle.center = parse_vec2(v); };
        t["triangle.z_d"] = num([](RunConfig &c) -> double & { return c.triangle.z_d; });
        t["triangle.speed"] = num([](RunConfig &c) -> double & { return c.triangle.speed; });
        t["triangle.direction"] = [](RunConfig &c, std::string_view v) {
            v = trim(v);
            if (v == "ccw") {
                c.triangle.direction = Direction::ccw;
            } else if (v == "cw") {
                c.triangle.direction = Direction::cw;
            } else {
                throw ConfigError("expected ccw or cw");
            }
        };
        t["triangle.loops"] = [](RunConfig &c, std::string_view v) {
            c.triangle.loops = static_cast<int>(parse_int(v));
        };
        t["triangle.max_mean_e"] = num([](RunConfig &c) -> double & { return c.triangle.max_mean_e; });
        t["triangle.max_e"] = num([](RunConfig &c) -> double & { return c.triangle.max_e; });
        t["triangle.closure"] = num([](RunConfig &c) -> double & { return c.triangle.closure; });
        // lissajous
        t["lissajous.A"] = num([](RunConfig &c) -> double & { return c.lissajous.curve.A; });
        t["lissajous.B"] = num([](RunConfig &c) -> double & { return c.lissajous.curve.B; });
        t["lissajous.a"] = num([](RunConfig &c) -> double & { return c.lissajous.curve.a; });
        t["lissajous.b"] = num([](RunConfig &c) -> double & { return c.lissajous.curve.b; });
        t["lissajous.delta_x"] = num([](RunConfig &c) -> double & { return c.lissajous.curve.delta_x; });
        t["lissajous.delta_y"] = num([](RunConfig &c) -> double & { return c.lissajous.curve.delta_y; });
        t["lissajous.z_d"] = num([](RunConfig &c) -> double & { return c.lissajous.curve.z_d; });
        t["lissajous.speed_scale"] = num([](RunConfig &c) -> double & { return c.lissajous.curve.speed_scale; });
        t["lissajous.speed"] = [](RunConfig &c, std::string_view v) { c.lissajous.speed = parse_double(v); };
        t["lissajous.periods"] = [](RunConfig &c, std::string_view v) {
            c.lissajous.periods = static_cast<int>(parse_int(v));
        };
        t["lissajous.max_mean_e"] = num([](RunConfig &c) -> double & { return c.lissajous.max_mean_e; });
        t["lissajous.max_e"] = num([](RunConfig &c) -> double & { return c.lissajous.max_e; });
        // random walk
        t["randomwalk.threshold"] = num([](RunConfig &c) -> double & { return c.randomwalk.walk.threshold; });
        t["randomwalk.speed"] = num([](RunConfig &c) -> double & { return c.randomwalk.walk.speed; });
        t["randomwalk.sensor_rate"] = num([](RunConfig &c) -> double & { return c.randomwalk.walk.sensor_rate; });
        t["randomwalk.max_range"] = num([](RunConfig &c) -> double & { return c.randomwalk.walk.max_range; });
        t["randomwalk.sensor_yaw_offset"] =
            num([](RunConfig &c) -> double & { return c.randomwalk.walk.sensor_yaw_offset; });
        t["randomwalk.z_d"] = num([](RunConfig &c) -> double & { return c.randomwalk.walk.z_d; });
        t["randomwalk.restart_offset"] =
            num([](RunConfig &c) -> double & { return c.randomwalk.walk.restart_offset; });
        t["randomwalk.start"] = [](RunConfig &c, std::string_view v) { c.randomwalk.start = parse_vec2(v); };
        t["randomwalk.duration"] = num([](RunConfig &c) -> double & { return c.randomwalk.duration; });
        t["env.width"] = num([](RunConfig &c) -> double & { return c.randomwalk.room_width; });
        t["env.height"] = num([](RunConfig &c) -> double & { return c.randomwalk.room_height; });
        // calibrate
        t["calibrate.omega"] = [](RunConfig &c, std::string_view v) { c.calibrate.omega = parse_double(v); };
        t["calibrate.k_lo"] = num([](RunConfig &c) -> double & { return c.calibrate.k_lo; });
        t["calibrate.k_hi"] = num([](RunConfig &c) -> double & { return c.calibrate.k_hi; });
        t["calibrate.tol"] = num([](RunConfig &c) -> double & { return c.calibrate.tol; });
        // linearization operating point
        t["op.theta_xy0"] = num([](RunConfig &c) -> double & { return c.analyze.op.theta_xy0; });
        t["op.psi0"] = num([](RunConfig &c) -> double & { return c.analyze.op.psi0; });
        t["op.v_xy0"] = num([](RunConfig &c) -> double & { return c.analyze.op.v_xy0; });
        t["op.psidot0"] = num([](RunConfig &c) -> double & { return c.analyze.op.psidot0; });
        t["op.F_xy_des"] = num([](RunConfig &c) -> double & { return c.analyze.op.F_xy_des; });
        t["op.K_D"] = num([](RunConfig &c) -> double & { return c.analyze.op.K_D; });
        t["op.k_F"] = num([](RunConfig &c) -> double & { return c.analyze.op.k_F; });
        t["op.h"] = num([](RunConfig &c) -> double & { return c.analyze.h; });
        // monitors
        t["monitor.enabled"] = [](RunConfig &c, std::string_view v) { c.monitor.enabled = parse_bool(v); };
        t["monitor.lyapunov"] = [](RunConfig &c, std::string_view v) { c.monitor.lyapunov = parse_bool(v); };
        return t;
    }();
    return table;
}

/// `env.wall.N = x1,y1,x2,y2`
inline bool set_wall(RunConfig &c, std::string_view key, std::string_view value) {
    constexpr std::string_view prefix = "env.wall.";
    if (key.substr(0, prefix.size()) != prefix) {
        return false;
    }
    const long long index = parse_int(key.substr(prefix.size()));
    if (index < 0) {
        throw ConfigError("wall index must be >= 0");
    }
    const auto w = parse_list(value, 4);
    c.randomwalk.walls[static_cast<int>(index)] = {w[0], w[1], w[2], w[3]};
    return true;
}

} // namespace detail

/// Applies one `key = value` assignment. Throws ConfigError for unknown keys
/// or unparsable values.
inline void set_config_value(RunConfig &c, std::string_view key, std::string_view value) {
    key = detail::trim(key);
    try {
        const auto &table = detail::setters();
        if (const auto it = table.find(key); it != table.end()) {
            it->second(c, value);
            return;
        }
        if (detail::set_wall(c, key, value)) {
            return;
        }
    } catch (const ConfigError &e) {
        throw ConfigError(std::string(key) + ": " + e.what());
    }
    throw ConfigError("unknown key '" + std::string(key) + "'");
}

/// Parses configuration text and validates the result.
inline RunConfig parse_config(std::istream &is) {
    RunConfig c;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        std::string_view s = line;
        if (const auto hash = s.find('#'); hash != std::string_view::npos) {
            s = s.substr(0, hash);
        }
        s = detail::trim(s);
        if (s.empty()) {
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected 'section.key = value'");
        }
        try {
            set_config_value(c, s.substr(0, eq), s.substr(eq + 1));
        } catch (const ConfigError &e) {
            throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    c.validate();
    return c;
}

inline RunConfig parse_config(std::string_view text) {
    std::istringstream is{std::string(text)};
    return parse_config(is);
}

inline RunConfig load_config(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config file '" + path + "'");
    }
    return parse_config(in);
}

inline void RunConfig::validate() const {
    auto require = [](bool ok, const char *key, const char *what) {
        if (!ok) {
            throw ConfigError(std::string(key) + ": " + what);
        }
    };
    try {
        vehicle.validate(experiment != Experiment::analyze);
        gains.validate(vehicle.f_max);
        sim.validate();
    } catch (const std::invalid_argument &e) {
        throw ConfigError(e.what());
    }
    require(!out.empty(), "run.out", "must not be empty");
    require(plot_points >= 2, "run.plot_points", "must be >= 2");

    require(hover.start.allFinite(), "hover.start", "must be finite");
    require(std::isfinite(hover.z_d), "hover.z_d", "must be finite");
    require(hover.tolerance > 0.0, "hover.tolerance", "must be > 0");
    require(hover.settle_time >= 0.0, "hover.settle_time", "must be >= 0");
    require(hover.duration > 0.0 && std::isfinite(hover.duration), "hover.duration", "must be > 0");

    require(triangle.side > 0.0 && std::isfinite(triangle.side), "triangle.side", "must be > 0");
    require(triangle.center.allFinite(), "triangle.center", "must be finite");
    require(triangle.speed > 0.0 && std::isfinite(triangle.speed), "triangle.speed", "must be > 0");
    require(triangle.loops >= 1, "triangle.loops", "must be >= 1");
    require(triangle.max_mean_e > 0.0, "triangle.max_mean_e", "must be > 0");
    require(triangle.max_e > 0.0, "triangle.max_e", "must be > 0");
    require(triangle.closure > 0.0, "triangle.closure", "must be > 0");

    try {
        lissajous.curve.validate();
        lissajous_base_period(lissajous.curve);
    } catch (const std::invalid_argument &e) {
        throw ConfigError(e.what());
    }
    require(!lissajous.speed || (*lissajous.speed > 0.0 && std::isfinite(*lissajous.speed)),
            "lissajous.speed", "must be > 0");
    require(lissajous.periods >= 1, "lissajous.periods", "must be >= 1");
    require(lissajous.max_mean_e > 0.0, "lissajous.max_mean_e", "must be > 0");
    require(lissajous.max_e > 0.0, "lissajous.max_e", "must be > 0");

    try {
        randomwalk.walk.validate();
    } catch (const std::invalid_argument &e) {
        throw ConfigError(e.what());
    }
    require(randomwalk.duration > 0.0, "randomwalk.duration", "must be > 0");
    require(randomwalk.room_width > 0.0, "env.width", "must be > 0");
    require(randomwalk.room_height > 0.0, "env.height", "must be > 0");
    if (experiment == Experiment::randomwalk) {
        Environment env;
        try {
            env = randomwalk.environment();
        } catch (const std::invalid_argument &e) {
            throw ConfigError(std::string("env.wall: ") + e.what());
        }
        require(env.contains(randomwalk.start), "randomwalk.start", "must lie inside the walls");
    }

    require(!calibrate.omega || *calibrate.omega > 0.0, "calibrate.omega", "must be > 0");
    require(calibrate.k_lo < calibrate.k_hi, "calibrate.k_lo", "must be below calibrate.k_hi");
    require(calibrate.tol > 0.0, "calibrate.tol", "must be > 0");

    const OperatingPoint &op = analyze.op;
    require(std::isfinite(op.theta_xy0) && std::isfinite(op.psi0) && std::isfinite(op.v_xy0) &&
                std::isfinite(op.psidot0) && std::isfinite(op.F_xy_des) && std::isfinite(op.K_D) &&
                std::isfinite(op.k_F),
            "op", "operating point must be finite");
    require(analyze.h > 0.0, "op.h", "must be > 0");
}

} // namespace spinblimp
