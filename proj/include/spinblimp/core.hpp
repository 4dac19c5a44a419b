// Spinning blimp core types
// Frames, attitude, angle helpers and the vehicle parameter set
#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

namespace spinblimp {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kStandardGravity = 9.81;

// =============================================================================
// Angles and rotations
// =============================================================================

/// Wrap an angle into (-pi, pi].
inline double wrap_angle(double theta) {
    double r = std::remainder(theta, kTwoPi);
    if (r <= -kPi) {
        r += kTwoPi;
    }
    return r;
}

/// Counter-clockwise rotation about the z-axis.
inline Mat3 rot_z(double psi) {
    const double c = std::cos(psi);
    const double s = std::sin(psi);
    Mat3 r;
    r << c, -s, 0.0, //
        s, c, 0.0,   //
        0.0, 0.0, 1.0;
    return r;
}

inline bool all_finite(const Vec3 &v) { return v.allFinite(); }

// =============================================================================
// Attitude
// =============================================================================

/// Body-to-world orientation.
///
/// Stored as a unit quaternion. Planar (yaw-only) attitudes keep the yaw as a
/// scalar so that roll and pitch read back as exactly zero; the simplified
/// model integrates that scalar directly.
class Attitude {
  public:
    Attitude() = default;

    static Attitude from_yaw(double psi) {
        Attitude a;
        a.yaw_ = wrap_angle(psi);
        a.q_ = Quat(std::cos(0.5 * *a.yaw_), 0.0, 0.0, std::sin(0.5 * *a.yaw_));
        return a;
    }

    /// ZYX (yaw, then pitch, then roll) Euler angles.
    static Attitude from_euler(double roll, double pitch, double yaw) {
        if (roll == 0.0 && pitch == 0.0) {
            return from_yaw(yaw);
        }
        const Quat q = Eigen::AngleAxisd(yaw, Vec3::UnitZ()) *
                       Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
                       Eigen::AngleAxisd(roll, Vec3::UnitX());
        return from_quaternion(q);
    }

    static Attitude from_quaternion(const Quat &q) {
        const double n = q.norm();
        if (!(n > 0.0) || !std::isfinite(n)) {
            throw std::invalid_argument("attitude quaternion must be finite and non-zero");
        }
        Attitude a;
        a.yaw_.reset();
        a.q_ = q.normalized();
        // Keep a canonical sign so logs do not flip between q and -q.
        if (a.q_.w() < 0.0) {
            a.q_.coeffs() *= -1.0;
        }
        return a;
    }

    bool is_planar() const { return yaw_.has_value(); }

    const Quat &quaternion() const { return q_; }

    double roll() const {
        if (yaw_) {
            return 0.0;
        }
        return std::atan2(2.0 * (q_.w() * q_.x() + q_.y() * q_.z()),
                          1.0 - 2.0 * (q_.x() * q_.x() + q_.y() * q_.y()));
    }

    double pitch() const {
        if (yaw_) {
            return 0.0;
        }
        const double s = 2.0 * (q_.w() * q_.y() - q_.z() * q_.x());
        return std::asin(std::clamp(s, -1.0, 1.0));
    }

    double yaw() const {
        if (yaw_) {
            return *yaw_;
        }
        return std::atan2(2.0 * (q_.w() * q_.z() + q_.x() * q_.y()),
                          1.0 - 2.0 * (q_.y() * q_.y() + q_.z() * q_.z()));
    }

    /// Rotation matrix taking body-frame vectors to the world frame.
    Mat3 body_to_world() const {
        if (yaw_) {
            return rot_z(*yaw_);
        }
        return q_.toRotationMatrix();
    }

    Mat3 world_to_body() const { return body_to_world().transpose(); }

  private:
    Quat q_ = Quat::Identity();
    std::optional<double> yaw_ = 0.0;
};

inline Vec3 body_to_world(const Attitude &att, const Vec3 &v) { return att.body_to_world() * v; }

inline Vec3 world_to_body(const Attitude &att, const Vec3 &v) { return att.world_to_body() * v; }

// =============================================================================
// State, inputs, parameters
// =============================================================================

struct State {
    Vec3 pos = Vec3::Zero();   ///< world frame [m]
    Vec3 vel = Vec3::Zero();   ///< world frame [m/s]
    Attitude att;              ///< body to world
    Vec3 omega = Vec3::Zero(); ///< body frame [rad/s]

    bool finite() const {
        return pos.allFinite() && vel.allFinite() && omega.allFinite() &&
               att.quaternion().coeffs().allFinite() && std::isfinite(att.yaw());
    }
};

/// Motor thrusts u = [f1, f2] in newtons.
struct ControlInput {
    double f1 = 0.0;
    double f2 = 0.0;

    bool operator==(const ControlInput &) const = default;
};

inline ControlInput saturate(const ControlInput &u, double f_max) {
    return {std::clamp(u.f1, 0.0, f_max), std::clamp(u.f2, 0.0, f_max)};
}

/// Desired position, velocity and acceleration (world frame).
struct Reference {
    Vec3 pos = Vec3::Zero();
    Vec3 vel = Vec3::Zero();
    Vec3 acc = Vec3::Zero(); ///< acc.z() is the desired vertical acceleration

    static Reference hold(const Vec3 &p) { return {p, Vec3::Zero(), Vec3::Zero()}; }
};

/// Physical constants of one vehicle. SI units throughout.
struct VehicleParams {
    double m = 0.065;                         ///< mass [kg]
    double g = kStandardGravity;              ///< gravity [m/s^2]
    double f_b = 0.060 * kStandardGravity;    ///< buoyant force [N] (60 g)
    double l_m = 0.35;                        ///< motor arm, half axle [m]
    double k_lift = 4.905e-4;                 ///< lift coefficient [N s^2/rad^2]
    double d_x = 0.02;                        ///< translational drag [N s^2/m^2]
    double d_y = 0.02;
    double d_z = 0.03;
    double d_w = 1e-4;                        ///< rotational drag [N m s^2/rad^2]
    Vec3 inertia{2.0e-3, 2.0e-3, 3.5e-3};     ///< diagonal inertia [kg m^2]
    Vec3 p_b{0.0, 0.0, 0.20};                 ///< center of pressure, body [m]
    Vec3 p_g{0.0, 0.0, -0.02};                ///< center of mass, body [m]
    double f_max = 0.015 * kStandardGravity;  ///< per-motor thrust limit [N] (15 g)

    /// 0.7 m axle vehicle.
    static VehicleParams short_wing() { return {}; }

    /// 1.3 m axle vehicle; only the arm changes unless overridden.
    static VehicleParams long_wing() {
        VehicleParams p;
        p.l_m = 0.65;
        return p;
    }

    /// f_b - m g, negative for a vehicle that sinks without lift.
    double net_buoyancy() const { return f_b - m * g; }

    /// Throws std::invalid_argument naming the first offending field. The
    /// dynamics stay well defined for neutral or positive buoyancy, so that
    /// check can be skipped.
    void validate(bool require_negative_buoyancy = true) const {
        auto require = [](bool ok, const char *field, const char *what) {
            if (!ok) {
                throw std::invalid_argument(std::string("vehicle.") + field + ": " + what);
            }
        };
        require(std::isfinite(m) && m > 0.0, "m", "must be > 0");
        require(std::isfinite(g) && g > 0.0, "g", "must be > 0");
        require(std::isfinite(f_b) && f_b >= 0.0, "f_b", "must be >= 0");
        require(std::isfinite(l_m) && l_m > 0.0, "l_m", "must be > 0");
        require(std::isfinite(k_lift) && k_lift > 0.0, "k_lift", "must be > 0");
        require(std::isfinite(d_x) && d_x >= 0.0, "d_x", "must be >= 0");
        require(std::isfinite(d_y) && d_y >= 0.0, "d_y", "must be >= 0");
        require(std::isfinite(d_z) && d_z >= 0.0, "d_z", "must be >= 0");
        require(std::isfinite(d_w) && d_w >= 0.0, "d_w", "must be >= 0");
        require(inertia.allFinite() && (inertia.array() > 0.0).all(), "inertia",
                "entries must be > 0");
        require(p_b.allFinite(), "p_b", "must be finite");
        require(p_g.allFinite(), "p_g", "must be finite");
        require(std::isfinite(f_max) && f_max > 0.0, "f_max", "must be > 0");
        if (require_negative_buoyancy) {
            require(net_buoyancy() < 0.0, "f_b", "f_b - m*g must be negative");
        }
    }
};

} // namespace spinblimp
