// Spinning blimp random-walk exploration
// A spinning time-of-flight sensor swept by the vehicle's own rotation, and a
// bounce policy that reflects the walk direction off the nearest wall.
#pragma once

#include <spinblimp/control.hpp>
#include <spinblimp/core.hpp>
#include <spinblimp/sim.hpp>

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

namespace spinblimp {

// =============================================================================
// Environment and raycasting
// =============================================================================

struct Wall {
    Vec2 a = Vec2::Zero();
    Vec2 b = Vec2::Zero();
    Vec2 normal = Vec2::Zero(); ///< unit right-hand normal of a -> b
};

/// Planar walls. Rooms listed counter-clockwise get outward-facing normals.
class Environment {
  public:
    Environment() = default;

    void add_wall(const Vec2 &a, const Vec2 &b) {
        const Vec2 d = b - a;
        if (!a.allFinite() || !b.allFinite() || !(d.norm() > 0.0)) {
            throw std::invalid_argument("environment: wall must be a finite, non-degenerate segment");
        }
        walls_.push_back({a, b, Vec2(d.y(), -d.x()).normalized()});
    }

    /// Axis-aligned width x height room centered at `center`.
    static Environment rectangle(double width, double height, const Vec2 &center = Vec2::Zero()) {
        const double hx = 0.5 * width;
        const double hy = 0.5 * height;
        const Vec2 c0 = center + Vec2(-hx, -hy);
        const Vec2 c1 = center + Vec2(hx, -hy);
        const Vec2 c2 = center + Vec2(hx, hy);
        const Vec2 c3 = center + Vec2(-hx, hy);
        Environment env;
        env.add_wall(c0, c1);
        env.add_wall(c1, c2);
        env.add_wall(c2, c3);
        env.add_wall(c3, c0);
        return env;
    }

    const std::vector<Wall> &walls() const { return walls_; }
    bool empty() const { return walls_.empty(); }

    /// Crossing-number test treating the walls as polygon edges.
    bool contains(const Vec2 &p) const {
        bool inside = false;
        for (const Wall &w : walls_) {
            const bool straddles = (w.a.y() > p.y()) != (w.b.y() > p.y());
            if (straddles) {
                const double x_cross =
                    w.a.x() + (p.y() - w.a.y()) * (w.b.x() - w.a.x()) / (w.b.y() - w.a.y());
                if (p.x() < x_cross) {
                    inside = !inside;
                }
            }
        }
        return inside;
    }

    /// Shortest distance from p to any wall.
    double clearance(const Vec2 &p) const {
        double best = std::numeric_limits<double>::infinity();
        for (const Wall &w : walls_) {
            const Vec2 d = w.b - w.a;
            const double s = std::clamp((p - w.a).dot(d) / d.squaredNorm(), 0.0, 1.0);
            best = std::min(best, (w.a + s * d - p).norm());
        }
        return best;
    }

  private:
    std::vector<Wall> walls_;
};

struct RayHit {
    double distance = 0.0;
    int wall = -1;
};

/// Nearest wall along the ray from `origin` at world angle `yaw`. Returns
/// nullopt (no return) when nothing lies within max_range. Rays parallel to a
/// wall do not hit it. Throws std::domain_error if origin is outside.
inline std::optional<RayHit> tof_raycast(const Environment &env, const Vec2 &origin, double yaw,
                                         double max_range) {
    if (!env.contains(origin)) {
        throw std::domain_error("tof_raycast: origin is outside the environment");
    }
    const Vec2 d(std::cos(yaw), std::sin(yaw));
    auto cross = [](const Vec2 &u, const Vec2 &v) { return u.x() * v.y() - u.y() * v.x(); };
    std::optional<RayHit> best;
    const auto &walls = env.walls();
    for (std::size_t i = 0; i < walls.size(); ++i) {
        const Vec2 e = walls[i].b - walls[i].a;
        const double denom = cross(d, e);
        if (std::abs(denom) <= 1e-15 * e.norm()) {
            continue;
        }
        const Vec2 w = walls[i].a - origin;
        const double t = cross(w, e) / denom;
        const double s = cross(w, d) / denom;
        if (t > 0.0 && s >= 0.0 && s <= 1.0 && (!best || t < best->distance)) {
            best = RayHit{t, static_cast<int>(i)};
        }
    }
    if (best && best->distance > max_range) {
        return std::nullopt;
    }
    return best;
}

// =============================================================================
// Scan buffer
// =============================================================================

struct ToFSample {
    double yaw = 0.0;       ///< world ray angle, wrapped
    double unwrapped = 0.0; ///< continuous angle, for coverage
    std::optional<double> distance;
    int wall = -1;
    double t = 0.0;
};

/// Samples from the most recent full revolution of the sensor.
class ToFScan {
  public:
    explicit ToFScan(double max_range = 2.5) : max_range_(max_range) {
        if (!(max_range > 0.0)) {
            throw std::invalid_argument("ToFScan: max_range must be > 0");
        }
    }

    void push(double t, double yaw, const std::optional<RayHit> &hit) {
        ToFSample s;
        s.t = t;
        s.yaw = wrap_angle(yaw);
        if (hit && hit->distance > 0.0 && hit->distance <= max_range_) {
            s.distance = hit->distance;
            s.wall = hit->wall;
        }
        if (samples_.empty()) {
            s.unwrapped = s.yaw;
        } else {
            const double step = wrap_angle(s.yaw - samples_.back().yaw);
            max_gap_ = std::max(max_gap_, std::abs(step));
            s.unwrapped = samples_.back().unwrapped + step;
        }
        samples_.push_back(s);
        while (samples_.size() > 2 &&
               std::abs(samples_.back().unwrapped - samples_[1].unwrapped) >= kTwoPi) {
            samples_.pop_front();
        }
    }

    /// True once the buffer spans at least one revolution.
    bool ready() const { return coverage() >= kTwoPi; }

    double coverage() const {
        return samples_.empty() ? 0.0 : std::abs(samples_.back().unwrapped - samples_.front().unwrapped);
    }

    /// Largest angular step between consecutive samples seen so far.
    double max_gap() const { return max_gap_; }

    double max_range() const { return max_range_; }
    const std::deque<ToFSample> &samples() const { return samples_; }

  private:
    double max_range_;
    std::deque<ToFSample> samples_;
    double max_gap_ = 0.0;
};

enum class ScanStatus { ok, not_ready, no_return };

struct ScanMinimum {
    ScanStatus status = ScanStatus::not_ready;
    double yaw = 0.0;
    double distance = 0.0;
    int wall = -1;
};

/// Closest return in the scan; ties go to the most recent sample. If
/// `forward` is given, only rays with a positive component along it count.
inline ScanMinimum min_distance_heading(const ToFScan &scan,
                                        const std::optional<Vec2> &forward = std::nullopt) {
    if (!scan.ready()) {
        return {};
    }
    ScanMinimum m;
    m.status = ScanStatus::no_return;
    for (const ToFSample &s : scan.samples()) {
        if (!s.distance) {
            continue;
        }
        if (forward && forward->dot(Vec2(std::cos(s.yaw), std::sin(s.yaw))) <= 0.0) {
            continue;
        }
        if (m.status != ScanStatus::ok || *s.distance <= m.distance) {
            m = {ScanStatus::ok, s.yaw, *s.distance, s.wall};
        }
    }
    return m;
}

/// Specular reflection v' = v - 2 (v . n) n for unit n.
inline Vec2 reflect_velocity(const Vec2 &v, const Vec2 &n) { return v - 2.0 * v.dot(n) * n; }

// =============================================================================
// Random walk policy
// =============================================================================

struct RandomWalkParams {
    double threshold = 0.5;         ///< bounce distance [m]
    double speed = 0.15;            ///< walk speed [m/s]
    double sensor_rate = 100.0;     ///< ToF samples per second
    double max_range = 2.5;         ///< ToF range [m]
    double sensor_yaw_offset = 0.0; ///< sensor direction relative to body +x [rad]
    double z_d = 1.0;               ///< cruise altitude [m]
    /// After a bounce the goal restarts this far from the vehicle along the new
    /// direction. Keeping it outside the hover dead-band makes the vehicle
    /// brake at once instead of coasting toward the wall.
    double restart_offset = 0.1;    ///< [m]

    void validate() const {
        if (!(threshold > 0.0)) {
            throw std::invalid_argument("randomwalk.threshold: must be > 0");
        }
        if (!(speed > 0.0)) {
            throw std::invalid_argument("randomwalk.speed: must be > 0");
        }
        if (!(sensor_rate > 0.0)) {
            throw std::invalid_argument("randomwalk.sensor_rate: must be > 0");
        }
        if (!(max_range > threshold)) {
            throw std::invalid_argument("randomwalk.max_range: must exceed the threshold");
        }
        if (!(restart_offset >= 0.0) || !(restart_offset < threshold)) {
            throw std::invalid_argument("randomwalk.restart_offset: must be in [0, threshold)");
        }
    }
};

struct Bounce {
    double t = 0.0;
    Vec2 dir_in = Vec2::Zero();
    Vec2 normal = Vec2::Zero();
    Vec2 dir_out = Vec2::Zero();
    double distance = 0.0;
    int wall = -1;
};

/// Walks at constant speed by dragging a goal point along the walk direction
/// and tracking it with position_control. When the closest forward return is
/// inside the threshold, the direction is reflected off the wall that ray
/// struck and the goal restarts next to the vehicle.
class RandomWalkController {
  public:
    RandomWalkController(Environment env, RandomWalkParams rw, VehicleParams vehicle, Gains gains,
                         std::uint64_t seed, const Vec2 &start)
        : env_(std::move(env)), rw_(rw), vehicle_(std::move(vehicle)), gains_(gains),
          scan_(rw.max_range), goal_(start) {
        rw_.validate();
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> heading(-kPi, kPi);
        const double h = heading(rng);
        dir_ = Vec2(std::cos(h), std::sin(h));
    }

    void observe(double t, const State &s) {
        const Vec2 here = s.pos.head<2>();
        if (last_t_) {
            goal_ += rw_.speed * (t - *last_t_) * dir_;
        }
        last_t_ = t;
        max_spin_ = std::max(max_spin_, std::abs(s.omega.z()));

        const bool inside = env_.contains(here);
        if (!inside) {
            ++penetrations_;
        }
        min_clearance_ = std::min(min_clearance_, inside ? env_.clearance(here) : 0.0);
        if (!inside) {
            return; // no ranging from inside a wall
        }

        if (t + 1e-12 >= static_cast<double>(samples_taken_) / rw_.sensor_rate) {
            const double ray_yaw = s.att.yaw() + rw_.sensor_yaw_offset;
            scan_.push(t, ray_yaw, tof_raycast(env_, here, ray_yaw, rw_.max_range));
            ++samples_taken_;
        }

        const ScanMinimum m = nearest_approached_return();
        if (m.status == ScanStatus::ok && m.distance < rw_.threshold) {
            Bounce b;
            b.t = t;
            b.dir_in = dir_;
            b.normal = env_.walls()[static_cast<std::size_t>(m.wall)].normal;
            b.dir_out = reflect_velocity(dir_, b.normal);
            b.distance = m.distance;
            b.wall = m.wall;
            bounces_.push_back(b);
            dir_ = b.dir_out;
            goal_ = here + rw_.restart_offset * dir_;
        }
    }

    ControlOutput command(double, const State &s) const {
        Reference r;
        r.pos = {goal_.x(), goal_.y(), rw_.z_d};
        r.vel = {rw_.speed * dir_.x(), rw_.speed * dir_.y(), 0.0};
        const PositionCommand c = position_control(s, r, vehicle_, gains_);
        return {c.u, r, c.beta, c.spin.omega_star};
    }

    const Vec2 &direction() const { return dir_; }
    const Vec2 &goal() const { return goal_; }
    const ToFScan &scan() const { return scan_; }
    const std::vector<Bounce> &bounces() const { return bounces_; }
    const Environment &environment() const { return env_; }
    /// Observed states that were not strictly inside the walls.
    long long penetrations() const { return penetrations_; }
    /// Smallest wall distance over the observed states.
    double min_clearance() const { return min_clearance_; }
    /// Largest |spin rate| over the observed states.
    double max_spin() const { return max_spin_; }

  private:
    /// Closest forward return off a wall the walk is heading into. Walls the
    /// direction already points away from are ignored, so one reflection is
    /// not undone by the samples that triggered it.
    ScanMinimum nearest_approached_return() const {
        if (!scan_.ready()) {
            return {};
        }
        ScanMinimum m;
        m.status = ScanStatus::no_return;
        for (const ToFSample &s : scan_.samples()) {
            if (!s.distance || dir_.dot(Vec2(std::cos(s.yaw), std::sin(s.yaw))) <= 0.0) {
                continue;
            }
            if (dir_.dot(env_.walls()[static_cast<std::size_t>(s.wall)].normal) <= 0.0) {
                continue;
            }
            if (m.status != ScanStatus::ok || *s.distance <= m.distance) {
                m = {ScanStatus::ok, s.yaw, *s.distance, s.wall};
            }
        }
        return m;
    }

    Environment env_;
    RandomWalkParams rw_;
    VehicleParams vehicle_;
    Gains gains_;
    ToFScan scan_;
    Vec2 goal_;
    Vec2 dir_ = Vec2::UnitX();
    std::optional<double> last_t_;
    long long samples_taken_ = 0;
    std::vector<Bounce> bounces_;
    long long penetrations_ = 0;
    double max_spin_ = 0.0;
    double min_clearance_ = std::numeric_limits<double>::infinity();
};

} // namespace spinblimp
