// Spinning blimp reference trajectories
// Lissajous and triangle generators, speed calibration and tracking metrics.
#pragma once

#include <spinblimp/bisection.hpp>
#include <spinblimp/core.hpp>
#include <spinblimp/sim.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <array>
#include <cmath>
#include <stdexcept>

namespace spinblimp {

// =============================================================================
// Lissajous
// =============================================================================

/// x = [A sin(a s t + dx), B sin(b s t + dy), z_d] with s = speed_scale.
struct LissajousParams {
    double A = 4.0;
    double B = 2.0;
    double a = 1.0;
    double b = 2.0;
    double delta_x = kPi / 2.0;
    double delta_y = 0.0;
    double z_d = 1.0;
    double speed_scale = 1.0;

    void validate() const {
        if (!(A >= 0.0) || !(B >= 0.0)) {
            throw std::invalid_argument("lissajous: amplitudes must be >= 0");
        }
        if (!(a > 0.0) || !(b > 0.0)) {
            throw std::invalid_argument("lissajous: frequencies must be > 0");
        }
        if (!(speed_scale > 0.0) || !std::isfinite(speed_scale)) {
            throw std::invalid_argument("lissajous: speed_scale must be > 0");
        }
    }
};

inline Reference lissajous_ref(double t, const LissajousParams &p) {
    const double s = p.speed_scale;
    const double px = p.a * s * t + p.delta_x;
    const double py = p.b * s * t + p.delta_y;
    const double wx = p.a * s;
    const double wy = p.b * s;
    Reference r;
    r.pos = {p.A * std::sin(px), p.B * std::sin(py), p.z_d};
    r.vel = {p.A * wx * std::cos(px), p.B * wy * std::cos(py), 0.0};
    r.acc = {-p.A * wx * wx * std::sin(px), -p.B * wy * wy * std::sin(py), 0.0};
    return r;
}

/// Period of the closed curve in unscaled time. Requires b/a to be a ratio of
/// small integers.
inline double lissajous_base_period(const LissajousParams &p) {
    const double ratio = p.b / p.a;
    for (int n = 1; n <= 1000; ++n) {
        const double m = ratio * n;
        if (std::abs(m - std::round(m)) < 1e-9 * std::max(1.0, m)) {
            return kTwoPi * n / p.a;
        }
    }
    throw std::invalid_argument("lissajous: b/a is not a ratio of small integers");
}

/// Period in simulation time.
inline double lissajous_period(const LissajousParams &p) {
    return lissajous_base_period(p) / p.speed_scale;
}

/// Length of one closed loop, independent of speed_scale.
inline double lissajous_arc_length(const LissajousParams &p) {
    LissajousParams unit = p;
    unit.speed_scale = 1.0;
    auto speed = [&unit](double t) { return lissajous_ref(t, unit).vel.head<2>().norm(); };
    const double period = lissajous_base_period(unit);
    // Split per half-cycle of the faster axis so each panel is smooth.
    const int panels = static_cast<int>(std::ceil(2.0 * std::max(unit.a, unit.b) * period / kTwoPi));
    double total = 0.0;
    for (int i = 0; i < panels; ++i) {
        const double t0 = period * i / panels;
        const double t1 = period * (i + 1) / panels;
        total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(speed, t0, t1, 15,
                                                                               1e-13);
    }
    return total;
}

/// Mean path speed over one period.
inline double lissajous_average_speed(const LissajousParams &p) {
    return lissajous_arc_length(p) / lissajous_period(p);
}

/// speed_scale giving the requested average path speed, by bisection on the
/// arc-length average.
inline BisectionResult calibrate_speed_scale(const LissajousParams &p, double target_speed,
                                             double rel_tol = 1e-12) {
    if (!(target_speed > 0.0)) {
        throw std::invalid_argument("calibrate_speed_scale: target speed must be > 0");
    }
    const double length = lissajous_arc_length(p);
    const double base = lissajous_base_period(p);
    auto excess = [&](double s) {
        return length * s / base - target_speed;
    };
    double hi = 1.0;
    while (excess(hi) < 0.0) {
        hi *= 2.0;
    }
    return bisect(excess, 0.0, hi, rel_tol * hi);
}

// =============================================================================
// Triangle
// =============================================================================

enum class Direction { ccw, cw };

struct TriangleParams {
    std::array<Vec3, 3> vertices; ///< listed counter-clockwise
    double speed = 0.10;
    Direction direction = Direction::ccw;

    void validate() const {
        const Vec2 u = (vertices[1] - vertices[0]).head<2>();
        const Vec2 v = (vertices[2] - vertices[0]).head<2>();
        const double area2 = u.x() * v.y() - u.y() * v.x();
        if (!(std::abs(area2) > 1e-12)) {
            throw std::invalid_argument("triangle: vertices are collinear");
        }
        if (!(speed > 0.0)) {
            throw std::invalid_argument("triangle: speed must be > 0");
        }
    }

    double perimeter() const {
        return (vertices[1] - vertices[0]).norm() + (vertices[2] - vertices[1]).norm() +
               (vertices[0] - vertices[2]).norm();
    }

    double loop_time() const { return perimeter() / speed; }
};

/// Equilateral triangle centered at `center`, one vertex straight up (+y).
inline TriangleParams equilateral_triangle(double side = 2.0, const Vec3 &center = {0.0, 0.0, 1.0},
                                           double speed = 0.10, Direction dir = Direction::ccw) {
    TriangleParams p;
    const double r = side / std::sqrt(3.0);
    for (int i = 0; i < 3; ++i) {
        const double ang = kPi / 2.0 + i * kTwoPi / 3.0;
        p.vertices[i] = center + Vec3(r * std::cos(ang), r * std::sin(ang), 0.0);
    }
    p.speed = speed;
    p.direction = dir;
    return p;
}

/// Constant-speed loop over the vertices starting at vertices[0].
inline Reference triangle_ref(double t, const TriangleParams &p) {
    const std::array<Vec3, 3> &v = p.vertices;
    const std::array<Vec3, 4> path = p.direction == Direction::ccw
                                         ? std::array<Vec3, 4>{v[0], v[1], v[2], v[0]}
                                         : std::array<Vec3, 4>{v[0], v[2], v[1], v[0]};
    double d = std::fmod(p.speed * std::max(t, 0.0), p.perimeter());
    for (int i = 0; i < 3; ++i) {
        const Vec3 seg = path[i + 1] - path[i];
        const double len = seg.norm();
        if (d <= len || i == 2) {
            d = std::min(d, len);
            Reference r;
            r.pos = path[i] + seg * (d / len);
            r.vel = seg * (p.speed / len);
            return r;
        }
        d -= len;
    }
    return Reference::hold(v[0]); // unreachable
}

// =============================================================================
// Metrics
// =============================================================================

struct TrackingMetrics {
    double mean_e = 0.0;
    double max_e = 0.0;
    double rmse = 0.0;
};

/// Statistics of e = |x_d - x| over every logged row.
inline TrackingMetrics tracking_metrics(const SimLog &log) {
    if (log.empty()) {
        throw std::invalid_argument("tracking_metrics: empty log");
    }
    TrackingMetrics m;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (const LogRow &r : log) {
        sum += r.e;
        sum_sq += r.e * r.e;
        m.max_e = std::max(m.max_e, r.e);
    }
    const double n = static_cast<double>(log.size());
    m.mean_e = sum / n;
    m.rmse = std::sqrt(sum_sq / n);
    return m;
}

/// Mean signed cross-track error split by the turning direction of the
/// reference. Positive means the vehicle sits outside the curve.
struct CrossTrackStats {
    double mean_ccw = 0.0; ///< where the reference turns left
    double mean_cw = 0.0;  ///< where the reference turns right
    std::size_t n_ccw = 0;
    std::size_t n_cw = 0;
};

/// `ref_at` maps log time to the Reference (with acceleration) that was
/// tracked. Rows where the reference curvature is below `min_curvature`
/// [1/m] are skipped.
template <class RefFn>
CrossTrackStats cross_track_by_turn(const SimLog &log, RefFn &&ref_at, double min_curvature = 0.05) {
    CrossTrackStats c;
    for (const LogRow &row : log) {
        const Reference r = ref_at(row.t);
        const Vec2 v = r.vel.head<2>();
        const Vec2 a = r.acc.head<2>();
        const double speed = v.norm();
        if (speed <= 0.0) {
            continue;
        }
        const double turn = v.x() * a.y() - v.y() * a.x();
        if (std::abs(turn) < min_curvature * speed * speed * speed) {
            continue;
        }
        const Vec2 left(-v.y() / speed, v.x() / speed);
        const Vec2 outward = turn > 0.0 ? Vec2(-left) : left;
        const double signed_cross = (row.pos - r.pos).head<2>().dot(outward);
        if (turn > 0.0) {
            c.mean_ccw += signed_cross;
            ++c.n_ccw;
        } else {
            c.mean_cw += signed_cross;
            ++c.n_cw;
        }
    }
    if (c.n_ccw > 0) {
        c.mean_ccw /= static_cast<double>(c.n_ccw);
    }
    if (c.n_cw > 0) {
        c.mean_cw /= static_cast<double>(c.n_cw);
    }
    return c;
}

} // namespace spinblimp
