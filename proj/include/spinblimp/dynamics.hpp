// Spinning blimp dynamics
// Forces, torques and state derivatives for the full rigid-body model and the
// planar (roll = pitch = 0) simplified model.
#pragma once

#include <spinblimp/core.hpp>

#include <cmath>
#include <stdexcept>

namespace spinblimp {

enum class Model { full, simplified };

inline const char *to_string(Model m) { return m == Model::full ? "full" : "simplified"; }

/// Time derivative of State.
///
/// The full model fills dquat (w, x, y, z order); the simplified model fills
/// dyaw. The unused member is zero.
struct StateDot {
    Vec3 dpos = Vec3::Zero();
    Vec3 dvel = Vec3::Zero();
    Eigen::Vector4d dquat = Eigen::Vector4d::Zero();
    double dyaw = 0.0;
    Vec3 domega = Vec3::Zero();
};

/// Individual force (world frame) and torque (body frame) contributions.
struct ForceBreakdown {
    Vec3 f_m = Vec3::Zero();
    Vec3 f_bg = Vec3::Zero();
    Vec3 f_l = Vec3::Zero();
    Vec3 f_d = Vec3::Zero();
    Vec3 tau_m = Vec3::Zero();
    Vec3 tau_bg = Vec3::Zero();
    Vec3 tau_d = Vec3::Zero();

    Vec3 total_force() const { return f_m + f_bg + f_l + f_d; }
    Vec3 total_torque() const { return tau_m + tau_bg + tau_d; }
};

// =============================================================================
// Force and torque terms
// =============================================================================

/// A u with A = [[0,0],[1,-1],[0,0]]: motor 1 pushes along body +y, motor 2 along -y.
inline Vec3 motor_force_body(const ControlInput &u) { return {0.0, u.f1 - u.f2, 0.0}; }

/// l_m B u with B = [[0,0],[0,0],[1,1]]. Motors sit at (+l_m, 0, 0) and (-l_m, 0, 0).
inline Vec3 motor_torque_body(const ControlInput &u, double l_m) {
    return {0.0, 0.0, l_m * (u.f1 + u.f2)};
}

inline Vec3 lift_force_body(double k_lift, double omega_z) {
    return {0.0, 0.0, k_lift * omega_z * omega_z};
}

/// Quadratic drag on world-frame velocity, -d_i v_i |v_i| per axis.
inline Vec3 drag_force_world(const VehicleParams &p, const Vec3 &vel_world) {
    return {-p.d_x * vel_world.x() * std::abs(vel_world.x()),
            -p.d_y * vel_world.y() * std::abs(vel_world.y()),
            -p.d_z * vel_world.z() * std::abs(vel_world.z())};
}

inline Vec3 buoyancy_gravity_force_world(const VehicleParams &p) {
    return {0.0, 0.0, p.f_b - p.m * p.g};
}

/// Buoyant couple: buoyancy acts at p_b, weight at p_g.
inline Vec3 buoyancy_gravity_torque_body(const VehicleParams &p, const Attitude &att) {
    const Vec3 up_body = att.world_to_body() * Vec3::UnitZ();
    return p.p_b.cross(p.f_b * up_body) + p.p_g.cross(-p.m * p.g * up_body);
}

/// Sign-aware rotational drag about body z.
inline Vec3 rotational_drag_body(double d_w, double omega_z) {
    return {0.0, 0.0, -d_w * omega_z * std::abs(omega_z)};
}

// =============================================================================
// State derivatives
// =============================================================================

struct Derivative {
    StateDot dot;
    ForceBreakdown forces;
};

/// Quaternion kinematics q_dot = 0.5 q (x) (0, omega_body), as (w, x, y, z).
inline Eigen::Vector4d quaternion_rate(const Quat &q, const Vec3 &omega_body) {
    const Quat w(0.0, omega_body.x(), omega_body.y(), omega_body.z());
    const Quat r = q * w;
    return 0.5 * Eigen::Vector4d(r.w(), r.x(), r.y(), r.z());
}

/// Newton-Euler equations including the gyroscopic term.
inline Derivative full_derivative(const State &s, const ControlInput &u, const VehicleParams &p) {
    Derivative d;
    const Mat3 r_wb = s.att.body_to_world();
    ForceBreakdown &f = d.forces;
    f.f_m = r_wb * motor_force_body(u);
    f.f_bg = buoyancy_gravity_force_world(p);
    f.f_l = r_wb * lift_force_body(p.k_lift, s.omega.z());
    f.f_d = drag_force_world(p, s.vel);
    f.tau_m = motor_torque_body(u, p.l_m);
    f.tau_bg = buoyancy_gravity_torque_body(p, s.att);
    f.tau_d = rotational_drag_body(p.d_w, s.omega.z());

    const Vec3 i_omega = p.inertia.cwiseProduct(s.omega);
    d.dot.dpos = s.vel;
    d.dot.dvel = f.total_force() / p.m;
    d.dot.dquat = quaternion_rate(s.att.quaternion(), s.omega);
    d.dot.domega = (f.total_torque() - s.omega.cross(i_omega)).cwiseQuotient(p.inertia);
    return d;
}

/// Throws std::invalid_argument unless roll = pitch = 0 and omega = [0, 0, w_z].
inline void require_planar(const State &s) {
    if (s.att.roll() != 0.0 || s.att.pitch() != 0.0) {
        throw std::invalid_argument("simplified model requires roll = pitch = 0");
    }
    if (s.omega.x() != 0.0 || s.omega.y() != 0.0) {
        throw std::invalid_argument("simplified model requires omega_x = omega_y = 0");
    }
}

/// Horizontal-body model: the body-to-world rotation is R_z(yaw), the buoyant
/// couple vanishes and the gyroscopic term is dropped.
inline StateDot simplified_derivative(const State &s, const ControlInput &u,
                                      const VehicleParams &p) {
    require_planar(s);
    const double wz = s.omega.z();
    const Vec3 force = rot_z(s.att.yaw()) * motor_force_body(u) + buoyancy_gravity_force_world(p) +
                       lift_force_body(p.k_lift, wz) + drag_force_world(p, s.vel);
    StateDot dot;
    dot.dpos = s.vel;
    dot.dvel = force / p.m;
    dot.dyaw = wz;
    dot.domega = {0.0, 0.0,
                  (motor_torque_body(u, p.l_m).z() + rotational_drag_body(p.d_w, wz).z()) /
                      p.inertia.z()};
    return dot;
}

inline StateDot derivative(Model model, const State &s, const ControlInput &u,
                           const VehicleParams &p) {
    if (model == Model::full) {
        return full_derivative(s, u, p).dot;
    }
    return simplified_derivative(s, u, p);
}

} // namespace spinblimp
