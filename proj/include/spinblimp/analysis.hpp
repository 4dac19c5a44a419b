// Spinning blimp analysis
// Hover equilibrium, k_lift calibration, the planar linearization with its
// finite-difference check, closed-form spin convergence and Lyapunov monitors.
#pragma once

#include <spinblimp/bisection.hpp>
#include <spinblimp/control.hpp>
#include <spinblimp/core.hpp>
#include <spinblimp/dynamics.hpp>
#include <spinblimp/sim.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace spinblimp {

// =============================================================================
// Hover
// =============================================================================

/// Spin rate whose lift cancels the net negative buoyancy,
/// w = sqrt((mg - f_b) / k_lift).
inline double hover_omega(const VehicleParams &p) {
    const double deficit = -p.net_buoyancy();
    if (!(deficit > 0.0)) {
        throw std::domain_error("hover_omega: vehicle is not negatively buoyant");
    }
    return std::sqrt(deficit / p.k_lift);
}

/// Level, at rest, spinning at `omega_z` about body z.
inline State hover_state(const Vec3 &pos, double omega_z, double yaw = 0.0) {
    State s;
    s.pos = pos;
    s.att = Attitude::from_yaw(yaw);
    s.omega = {0.0, 0.0, omega_z};
    return s;
}

/// Equal thrusts whose torque exactly balances rotational drag at omega_z.
inline ControlInput drag_balancing_input(const VehicleParams &p, double omega_z) {
    const double f = p.d_w * omega_z * omega_z / (2.0 * p.l_m);
    return {f, f};
}

struct KLiftCalibration {
    double k_lift = 0.0;
    double residual_accel = 0.0; ///< z acceleration at the returned k_lift [m/s^2]
    int iterations = 0;
};

/// Bisection on the vertical acceleration of a level vehicle spinning steadily
/// at `omega_z` with drag-balancing thrust. `p.k_lift` is ignored.
inline KLiftCalibration calibrate_k_lift(const VehicleParams &p, double omega_z, double k_lo,
                                         double k_hi, double tol = 1e-13) {
    if (!(-p.net_buoyancy() > 0.0)) {
        throw std::domain_error("calibrate_k_lift: vehicle is not negatively buoyant");
    }
    if (!(omega_z > 0.0)) {
        throw std::invalid_argument("calibrate_k_lift: spin rate must be > 0");
    }
    VehicleParams trial = p;
    const State s = hover_state(Vec3::Zero(), omega_z);
    const ControlInput u = drag_balancing_input(p, omega_z);
    auto accel = [&](double k) {
        trial.k_lift = k;
        return full_derivative(s, u, trial).dot.dvel.z();
    };
    const BisectionResult r = bisect(accel, k_lo, k_hi, tol);
    return {r.root, accel(r.root), r.iterations};
}

// =============================================================================
// Planar linearization
// =============================================================================

/// Point about which the auxiliary planar force model is linearized.
struct OperatingPoint {
    double theta_xy0 = 0.0; ///< [rad]
    double psi0 = 0.0;      ///< [rad]
    double v_xy0 = 0.0;     ///< [m/s]
    double psidot0 = 0.0;   ///< [rad/s]
    double F_xy_des = 1.0;  ///< |F_xy,des| [N]
    double K_D = 0.0;       ///< [N s^2/m^2]
    double k_F = 0.0;       ///< [N s^2/rad^2]
    double net_buoyancy = 0.0; ///< f_b - m g [N], constant offset of the z residual
};

struct PlanarJacobian {
    double dxy_dtheta = 0.0;
    double dxy_dpsi = 0.0;
    double dxy_dv = 0.0;
    double dz_dpsidot = 0.0;
};

/// The nonlinear residuals
///   dxy = |F| (sin(theta) cos(psi) + cos(theta) sin(psi)) - K_D v^2
///   dz  = 2 k_F psidot^2 + f_b - m g
inline std::array<double, 2> planar_residuals(const OperatingPoint &op, double theta, double psi,
                                              double v, double psidot) {
    return {op.F_xy_des * (std::sin(theta) * std::cos(psi) + std::cos(theta) * std::sin(psi)) -
                op.K_D * v * v,
            2.0 * op.k_F * psidot * psidot + op.net_buoyancy};
}

inline PlanarJacobian linearize_planar(const OperatingPoint &op) {
    const double st = std::sin(op.theta_xy0);
    const double ct = std::cos(op.theta_xy0);
    const double sp = std::sin(op.psi0);
    const double cp = std::cos(op.psi0);
    PlanarJacobian j;
    j.dxy_dtheta = op.F_xy_des * (ct * cp - st * sp);
    j.dxy_dpsi = op.F_xy_des * (-st * sp + ct * cp);
    j.dxy_dv = -2.0 * op.K_D * op.v_xy0;
    j.dz_dpsidot = 4.0 * op.k_F * op.psidot0;
    return j;
}

/// Central differences of planar_residuals with step h.
inline PlanarJacobian central_difference_jacobian(const OperatingPoint &op, double h) {
    const double th = op.theta_xy0;
    const double ps = op.psi0;
    const double v = op.v_xy0;
    const double pd = op.psidot0;
    auto R = [&](double a, double b, double c, double d) { return planar_residuals(op, a, b, c, d); };
    const double inv = 1.0 / (2.0 * h);
    PlanarJacobian j;
    j.dxy_dtheta = (R(th + h, ps, v, pd)[0] - R(th - h, ps, v, pd)[0]) * inv;
    j.dxy_dpsi = (R(th, ps + h, v, pd)[0] - R(th, ps - h, v, pd)[0]) * inv;
    j.dxy_dv = (R(th, ps, v + h, pd)[0] - R(th, ps, v - h, pd)[0]) * inv;
    j.dz_dpsidot = (R(th, ps, v, pd + h)[1] - R(th, ps, v, pd - h)[1]) * inv;
    return j;
}

struct FiniteDifferenceReport {
    PlanarJacobian analytic;
    PlanarJacobian numeric;
    /// |numeric - analytic| / max(|analytic|, 1), per partial
    std::array<double, 4> rel_error{};
    double max_rel_error = 0.0;
};

inline FiniteDifferenceReport finite_difference_check(const OperatingPoint &op, double h) {
    if (!(h > 0.0)) {
        throw std::invalid_argument("finite_difference_check: h must be > 0");
    }
    FiniteDifferenceReport r;
    r.analytic = linearize_planar(op);
    r.numeric = central_difference_jacobian(op, h);
    const std::array<double, 4> a{r.analytic.dxy_dtheta, r.analytic.dxy_dpsi, r.analytic.dxy_dv,
                                  r.analytic.dz_dpsidot};
    const std::array<double, 4> n{r.numeric.dxy_dtheta, r.numeric.dxy_dpsi, r.numeric.dxy_dv,
                                  r.numeric.dz_dpsidot};
    for (std::size_t i = 0; i < 4; ++i) {
        r.rel_error[i] = std::abs(n[i] - a[i]) / std::max(std::abs(a[i]), 1.0);
        r.max_rel_error = std::max(r.max_rel_error, r.rel_error[i]);
    }
    return r;
}

// =============================================================================
// Spin-rate convergence
// =============================================================================

/// Solution of w' = (2 k l_m / I_z)(w* - w): w* + (w0 - w*) exp(-2 k l_m t / I_z).
inline double omega_convergence_analytic(double t, double omega0, double omega_star, double k,
                                         double l_m, double I_z) {
    if (!(I_z > 0.0)) {
        throw std::invalid_argument("omega_convergence_analytic: I_z must be > 0");
    }
    return omega_star + (omega0 - omega_star) * std::exp(-2.0 * k * l_m * t / I_z);
}

/// Time constant I_z / (2 k l_m) of the closed spin loop.
inline double spin_time_constant(const VehicleParams &p, const Gains &g) {
    return p.inertia.z() / (2.0 * g.k * p.l_m);
}

// =============================================================================
// Lyapunov monitors
// =============================================================================

struct LyapunovZ {
    double V = 0.0;
    double Vdot = 0.0;
};

/// V = K_p e^2 / 2 + m de^2 / 2 and its derivative along the closed height loop,
/// Vdot = -K_d de^2 - d_z de^2 |de|.
inline LyapunovZ lyapunov_z(double e_z, double de_z, const VehicleParams &p, const Gains &g) {
    return {0.5 * g.K_p * e_z * e_z + 0.5 * p.m * de_z * de_z,
            -g.K_d * de_z * de_z - p.d_z * de_z * de_z * std::abs(de_z)};
}

/// V = |e|^2 / 2 + |de|^2 / 2 on the plane.
inline double lyapunov_xy(const Vec2 &e, const Vec2 &de) {
    return 0.5 * e.squaredNorm() + 0.5 * de.squaredNorm();
}

/// Supremum over the trailing fraction of a sampled signal.
inline double ultimate_bound(std::span<const double> values, double trailing_fraction = 0.2) {
    if (values.empty()) {
        throw std::invalid_argument("ultimate_bound: no samples");
    }
    const auto n = values.size();
    const auto tail = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(trailing_fraction * static_cast<double>(n))));
    return *std::max_element(values.end() - static_cast<std::ptrdiff_t>(tail), values.end());
}

/// Monitor for simulate(): V_z and V_xy from the logged state and reference.
inline Monitor lyapunov_monitor(const VehicleParams &p, const Gains &g) {
    return [p, g](const State &s, const ControlOutput &out) {
        const Vec3 e = out.ref.pos - s.pos;
        const Vec3 de = out.ref.vel - s.vel;
        return MonitorValues{lyapunov_z(e.z(), de.z(), p, g).V,
                             lyapunov_xy(e.head<2>(), de.head<2>())};
    };
}

struct ZAxisSample {
    double t = 0.0;
    double z = 0.0;
    double dz = 0.0;
    double V = 0.0;
    double Vdot = 0.0;
    bool descent_saturated = false;
};

/// Height loop with the spin rate equal to its setpoint,
/// m z'' = f_b - m g - d_z z'|z'| + k_lift w*(z, z')^2, integrated with RK4
/// toward a constant altitude z_d. Every `stride`-th step is returned.
inline std::vector<ZAxisSample> simulate_z_axis(double z0, double dz0, double z_d,
                                                const VehicleParams &p, const Gains &g, double dt,
                                                double duration, int stride = 1) {
    if (!(dt > 0.0) || !(duration > 0.0) || stride < 1) {
        throw std::invalid_argument("simulate_z_axis: need dt > 0, duration > 0, stride >= 1");
    }
    const Reference ref = Reference::hold({0.0, 0.0, z_d});
    auto accel = [&](double z, double dz) {
        const SpinSetpoint sp = omega_z_setpoint(z, dz, ref, p, g);
        return (p.net_buoyancy() - p.d_z * dz * std::abs(dz) +
                p.k_lift * sp.omega_star * sp.omega_star) /
               p.m;
    };
    std::vector<ZAxisSample> out;
    const long long n = std::max(1LL, std::llround(duration / dt));
    double z = z0;
    double dz = dz0;
    for (long long k = 0;; ++k) {
        if (k % stride == 0 || k == n) {
            const LyapunovZ l = lyapunov_z(z_d - z, -dz, p, g);
            const bool sat = omega_z_setpoint(z, dz, ref, p, g).descent_saturated;
            out.push_back({static_cast<double>(k) * dt, z, dz, l.V, l.Vdot, sat});
        }
        if (k == n) {
            break;
        }
        const double k1z = dz;
        const double k1v = accel(z, dz);
        const double k2z = dz + 0.5 * dt * k1v;
        const double k2v = accel(z + 0.5 * dt * k1z, dz + 0.5 * dt * k1v);
        const double k3z = dz + 0.5 * dt * k2v;
        const double k3v = accel(z + 0.5 * dt * k2z, dz + 0.5 * dt * k2v);
        const double k4z = dz + dt * k3v;
        const double k4v = accel(z + dt * k3z, dz + dt * k3v);
        z += dt / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z);
        dz += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }
    return out;
}

} // namespace spinblimp
