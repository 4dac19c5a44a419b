#include <spinblimp/analysis.hpp>
#include <spinblimp/control.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace spinblimp;

TEST(HeightControl, SetpointAtRestOnTargetIsHoverRate) {
    const VehicleParams p;
    const Gains g;
    const SpinSetpoint sp = omega_z_setpoint(1.0, 0.0, Reference::hold({0, 0, 1}), p, g);
    EXPECT_NEAR(sp.omega_star, 10.0, 1e-9);
    EXPECT_FALSE(sp.descent_saturated);
}

TEST(HeightControl, SetpointSquaredIsTheRequestedLift) {
    const VehicleParams p;
    const Gains g;
    Reference ref = Reference::hold({0, 0, 1.5});
    ref.vel.z() = 0.1;
    ref.acc.z() = 0.02;
    const SpinSetpoint sp = omega_z_setpoint(1.0, -0.05, ref, p, g);
    const double lift = 0.04905 + g.K_p * 0.5 + g.K_d * 0.15 + 0.02;
    EXPECT_NEAR(sp.omega_star * sp.omega_star * p.k_lift, lift, 1e-12);
}

TEST(HeightControl, LargeDescentRequestClampsToZero) {
    const SpinSetpoint sp = omega_z_setpoint(3.0, 0.0, Reference::hold({0, 0, 1}), VehicleParams{}, Gains{});
    EXPECT_EQ(sp.omega_star, 0.0);
    EXPECT_TRUE(sp.descent_saturated);
}

TEST(HeightControl, ThrustAtSetpointOnlyCancelsRotationalDrag) {
    const VehicleParams p;
    const ControlInput u = height_control_input(10.0, 10.0, p, Gains{});
    EXPECT_NEAR(u.f1, 1e-4 * 100.0 / 0.7, 1e-15);
    EXPECT_EQ(u.f1, u.f2);
    EXPECT_NEAR(u.f1, 0.0142857, 1e-7);
}

TEST(HeightControl, ClampedInputStaysInRange) {
    const VehicleParams p;
    const ControlInput hi = height_control_input(0.0, 100.0, p, Gains{});
    EXPECT_EQ(hi.f1, p.f_max);
    const ControlInput lo = height_control_input(20.0, 0.0, p, Gains{});
    EXPECT_EQ(lo.f1, 0.0);
    EXPECT_LT(height_control_input_raw(20.0, 0.0, p, Gains{}).f1, 0.0);
}

TEST(BangBang, SwitchingTruthTable) {
    EXPECT_EQ(bang_bang_sign(0.0), 1);
    EXPECT_EQ(bang_bang_sign(kPi / 2.0), 1);
    EXPECT_EQ(bang_bang_sign(-kPi / 2.0), -1);
    EXPECT_EQ(bang_bang_sign(kPi), -1);
    EXPECT_EQ(bang_bang_sign(std::nextafter(-kPi / 2.0, 0.0)), 1);
}

TEST(Beta, CardinalGoalsAtZeroYaw) {
    const State s;
    EXPECT_NEAR(*compute_beta(s, {0, 1, 0}), 0.0, 1e-15);
    EXPECT_NEAR(*compute_beta(s, {1, 0, 0}), kPi / 2.0, 1e-15);
    EXPECT_NEAR(*compute_beta(s, {-1, 0, 0}), -kPi / 2.0, 1e-15);
    EXPECT_EQ(*compute_beta(s, {0, -1, 0}), kPi);
    EXPECT_FALSE(compute_beta(s, {1e-7, 0, 3.0}).has_value());
}

TEST(Beta, MatchesAngleFromBodyYToGoal) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> ang(-kPi, kPi);
    std::uniform_real_distribution<double> x(-5.0, 5.0);
    for (int i = 0; i < 10000; ++i) {
        State s;
        s.pos = {x(rng), x(rng), x(rng)};
        const double psi = ang(rng);
        s.att = Attitude::from_yaw(psi);
        const Vec3 goal(x(rng), x(rng), x(rng));
        const Vec2 d = (goal - s.pos).head<2>();
        // body +y points at world angle psi + pi/2; beta grows toward body +x
        const double oracle = wrap_angle(psi + kPi / 2.0 - std::atan2(d.y(), d.x()));
        EXPECT_NEAR(wrap_angle(*compute_beta(s, goal) - oracle), 0.0, 1e-9);
    }
}

TEST(Beta, InvariantUnderRotatingTheWholeScene) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> ang(-kPi, kPi);
    std::uniform_real_distribution<double> x(-5.0, 5.0);
    for (int i = 0; i < 1000; ++i) {
        State s;
        s.pos = {x(rng), x(rng), 1.0};
        s.att = Attitude::from_yaw(ang(rng));
        const Vec3 goal(x(rng), x(rng), 1.0);
        const double rot = ang(rng);
        State r = s;
        r.pos = rot_z(rot) * s.pos;
        r.att = Attitude::from_yaw(s.att.yaw() + rot);
        EXPECT_NEAR(wrap_angle(*compute_beta(s, goal) - *compute_beta(r, rot_z(rot) * goal)), 0.0, 1e-9);
    }
}

TEST(PositionControl, RandomCasesPreserveSumAndPushTowardGoal) {
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> ang(-kPi, kPi);
    std::uniform_real_distribution<double> x(-3.0, 3.0);
    std::uniform_real_distribution<double> w(0.0, 20.0);
    const VehicleParams p;
    const Gains g;
    int pushed = 0;
    for (int i = 0; i < 100000; ++i) {
        State s;
        s.pos = {x(rng), x(rng), x(rng)};
        s.vel = {x(rng), x(rng), x(rng)};
        s.att = Attitude::from_yaw(ang(rng));
        s.omega = {0, 0, w(rng)};
        const Reference ref = Reference::hold({x(rng), x(rng), x(rng)});
        const PositionCommand c = position_control(s, ref, p, g);
        ASSERT_NEAR(c.unclamped.f1 + c.unclamped.f2, c.hover.f1 + c.hover.f2, 1e-15);
        const Vec2 to_goal = (ref.pos - s.pos).head<2>();
        ASSERT_GE(motor_force_world(s, c.unclamped).head<2>().dot(to_goal), 0.0);
        ASSERT_GE(c.u.f1, 0.0);
        ASSERT_LE(c.u.f2, p.f_max);
        if (c.g != 0) {
            ++pushed;
        }
    }
    EXPECT_GT(pushed, 90000);
}

TEST(PositionControl, DeadbandAppliesHoverThrustOnly) {
    const VehicleParams p;
    const Gains g;
    const State s = hover_state({0, 0, 1}, 10.0);
    const PositionCommand c = position_control(s, Reference::hold({0.03, 0.0, 1.0}), p, g);
    EXPECT_TRUE(c.in_deadband);
    EXPECT_EQ(c.g, 0);
    EXPECT_EQ(c.u, c.hover);
    const PositionCommand at = position_control(s, Reference::hold({0, 0, 1}), p, g);
    EXPECT_TRUE(at.at_goal);
    EXPECT_FALSE(at.beta.has_value());
    EXPECT_EQ(at.u, at.hover);
}

TEST(PositionControl, DifferentialFollowsTheSwitch) {
    const VehicleParams p;
    const Gains g;
    const State s = hover_state({0, 0, 1}, 10.0);
    // goal along body +y: motor 1 gets the extra thrust
    const PositionCommand c = position_control(s, Reference::hold({0, 2, 1}), p, g);
    EXPECT_EQ(c.g, 1);
    EXPECT_NEAR(c.unclamped.f1 - c.hover.f1, g.tau, 1e-15);
    EXPECT_NEAR(c.unclamped.f2 - c.hover.f2, -g.tau, 1e-15);
    const PositionCommand d = position_control(s, Reference::hold({0, -2, 1}), p, g);
    EXPECT_EQ(d.g, -1);
}

TEST(Gains, TauMustFitUnderTheThrustLimit) {
    Gains g;
    g.tau = 0.1;
    EXPECT_THROW(g.validate(0.14715), std::invalid_argument);
    g.tau = 0.02;
    EXPECT_NO_THROW(g.validate(0.14715));
    g.K_p = 0.0;
    EXPECT_THROW(g.validate(0.14715), std::invalid_argument);
}

TEST(SpinRateController, ReportsItsSetpoint) {
    const VehicleParams p;
    const SpinRateController c(12.0, p, Gains{});
    const ControlOutput out = c.command(0.0, hover_state({1, 2, 3}, 10.0));
    EXPECT_EQ(*out.omega_z_star, 12.0);
    EXPECT_EQ(out.ref.pos, Vec3(1, 2, 3));
    EXPECT_NEAR(out.u.f1, Gains{}.k * 2.0 + p.d_w * 100.0 / (2.0 * p.l_m), 1e-15);
}
