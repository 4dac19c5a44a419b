// Spinning blimp controllers
// Height control through the spin-rate setpoint, and the bang-bang planar
// position controller built on top of it.
#pragma once

#include <spinblimp/core.hpp>
#include <spinblimp/dynamics.hpp>
#include <spinblimp/sim.hpp>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace spinblimp {

struct Gains {
    double K_p = 0.4;             ///< height stiffness [N/m]
    double K_d = 0.6;             ///< height damping [N s/m]
    double k = 0.02;              ///< spin-rate tracking gain [N s/rad]
    double tau = 0.02;            ///< bang-bang differential thrust [N]
    double hover_deadband = 0.05; ///< planar distance below which only hover thrust is applied [m]
    double goal_epsilon = 1e-6;   ///< planar distance below which beta is undefined [m]

    void validate(double f_max) const {
        auto require = [](bool ok, const char *field, const char *what) {
            if (!ok) {
                throw std::invalid_argument(std::string("gains.") + field + ": " + what);
            }
        };
        require(std::isfinite(K_p) && K_p > 0.0, "K_p", "must be > 0");
        require(std::isfinite(K_d) && K_d > 0.0, "K_d", "must be > 0");
        require(std::isfinite(k) && k > 0.0, "k", "must be > 0");
        require(std::isfinite(tau) && tau > 0.0 && tau <= 0.5 * f_max, "tau",
                "must be in (0, f_max/2]");
        require(std::isfinite(hover_deadband) && hover_deadband >= 0.0, "hover_deadband",
                "must be >= 0");
        require(std::isfinite(goal_epsilon) && goal_epsilon > 0.0, "goal_epsilon", "must be > 0");
    }
};

// =============================================================================
// Height control
// =============================================================================

struct SpinSetpoint {
    double omega_star = 0.0;
    /// The PD law asked for less than zero lift; the vehicle can only sink
    /// passively, so the setpoint is clamped to zero.
    bool descent_saturated = false;
};

/// Spin rate whose lift realizes the PD height law,
/// w*^2 = (mg - f_b + K_p e_z + K_d de_z + z_dd_ref) / k_lift.
inline SpinSetpoint omega_z_setpoint(double z, double dz, const Reference &ref,
                                     const VehicleParams &p, const Gains &g) {
    const double lift = -p.net_buoyancy() + g.K_p * (ref.pos.z() - z) + g.K_d * (ref.vel.z() - dz) +
                        ref.acc.z();
    if (lift < 0.0) {
        return {0.0, true};
    }
    return {std::sqrt(lift / p.k_lift), false};
}

/// Equal thrust on both motors: proportional spin-rate tracking plus
/// feed-forward that cancels rotational drag. Not clamped.
inline ControlInput height_control_input_raw(double omega_z, double omega_star,
                                             const VehicleParams &p, const Gains &g) {
    const double f = g.k * (omega_star - omega_z) + p.d_w / (2.0 * p.l_m) * omega_z * omega_z;
    return {f, f};
}

inline ControlInput height_control_input(double omega_z, double omega_star, const VehicleParams &p,
                                         const Gains &g) {
    return saturate(height_control_input_raw(omega_z, omega_star, p, g), p.f_max);
}

// =============================================================================
// Bang-bang planar control
// =============================================================================

/// Signed angle from the body y-axis to the goal direction, both projected on
/// the world xy-plane. Zero when the goal lies along body +y, positive toward
/// body +x. Returns nullopt when the goal is within `epsilon` of the vehicle.
inline std::optional<double> compute_beta(const State &s, const Vec3 &goal, double epsilon = 1e-6) {
    const Vec2 to_goal = (goal - s.pos).head<2>();
    if (to_goal.norm() <= epsilon) {
        return std::nullopt;
    }
    const Vec2 y_axis = (s.att.body_to_world() * Vec3::UnitY()).head<2>();
    const double along = y_axis.dot(to_goal);
    const double across = y_axis.y() * to_goal.x() - y_axis.x() * to_goal.y();
    const double beta = std::atan2(across, along);
    return beta == -kPi ? kPi : beta;
}

/// Switching function: +1 when -pi/2 < beta <= pi/2, otherwise -1.
inline int bang_bang_sign(double beta) { return (beta > -kPi / 2.0 && beta <= kPi / 2.0) ? 1 : -1; }

struct PositionCommand {
    ControlInput hover;       ///< u_h after its own clamp
    ControlInput unclamped;   ///< u_h plus the differential, before the final clamp
    ControlInput u;           ///< what goes to the motors
    SpinSetpoint spin;
    std::optional<double> beta;
    int g = 0;                ///< switching value applied, 0 when holding
    bool at_goal = false;
    bool in_deadband = false;
};

/// Height control plus the bang-bang differential.
///
/// The differential is added as +tau g(beta) on motor 1 and -tau g(beta) on
/// motor 2, so the net planar motor force 2 tau g(beta) along body +y always
/// has a non-negative component toward the goal. The sum f1 + f2 is that of
/// u_h before the final clamp, leaving the spin dynamics untouched.
inline PositionCommand position_control(const State &s, const Reference &ref,
                                        const VehicleParams &p, const Gains &g) {
    PositionCommand c;
    c.spin = omega_z_setpoint(s.pos.z(), s.vel.z(), ref, p, g);
    c.hover = height_control_input(s.omega.z(), c.spin.omega_star, p, g);
    c.unclamped = c.hover;
    c.beta = compute_beta(s, ref.pos, g.goal_epsilon);
    c.at_goal = !c.beta.has_value();
    c.in_deadband = (ref.pos - s.pos).head<2>().norm() < g.hover_deadband;
    if (!c.at_goal && !c.in_deadband) {
        c.g = bang_bang_sign(*c.beta);
        c.unclamped.f1 += g.tau * c.g;
        c.unclamped.f2 -= g.tau * c.g;
    }
    c.u = saturate(c.unclamped, p.f_max);
    return c;
}

/// World-frame motor force R A u, the planar push the controller produces.
inline Vec3 motor_force_world(const State &s, const ControlInput &u) {
    return s.att.body_to_world() * motor_force_body(u);
}

// =============================================================================
// Policies for simulate()
// =============================================================================

/// Tracks a reference trajectory with position_control. `RefFn` maps time to
/// a Reference.
template <class RefFn>
class TrackingController {
  public:
    TrackingController(RefFn ref, VehicleParams params, Gains gains)
        : ref_(std::move(ref)), params_(std::move(params)), gains_(gains) {}

    ControlOutput command(double t, const State &s) const {
        const Reference r = ref_(t);
        const PositionCommand c = position_control(s, r, params_, gains_);
        return {c.u, r, c.beta, c.spin.omega_star};
    }

    const Gains &gains() const { return gains_; }

  private:
    RefFn ref_;
    VehicleParams params_;
    Gains gains_;
};

/// Holds a fixed spin-rate setpoint with height_control_input only.
class SpinRateController {
  public:
    SpinRateController(double omega_star, VehicleParams params, Gains gains)
        : omega_star_(omega_star), params_(std::move(params)), gains_(gains) {}

    ControlOutput command(double, const State &s) const {
        const ControlInput u = height_control_input_raw(s.omega.z(), omega_star_, params_, gains_);
        return {u, Reference::hold(s.pos), std::nullopt, omega_star_};
    }

  private:
    double omega_star_;
    VehicleParams params_;
    Gains gains_;
};

/// Zero thrust; the reference is the current position.
struct ZeroThrustController {
    ControlOutput command(double, const State &s) const {
        return {ControlInput{}, Reference::hold(s.pos), std::nullopt, std::nullopt};
    }
};

} // namespace spinblimp
