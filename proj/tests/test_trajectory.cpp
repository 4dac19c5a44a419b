#include <spinblimp/bisection.hpp>
#include <spinblimp/trajectory.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace spinblimp;

TEST(Bisection, FindsSquareRootWithinBound) {
    const BisectionResult r = bisect([](double x) { return x * x - 2.0; }, 0.0, 2.0, 1e-12);
    EXPECT_NEAR(r.root, std::sqrt(2.0), 1e-12);
    EXPECT_LE(r.iterations, static_cast<int>(std::ceil(std::log2(2.0 / 1e-12))));
}

TEST(Bisection, ErrorsWithoutSignChange) {
    EXPECT_THROW(bisect([](double x) { return x * x + 1.0; }, -1.0, 1.0, 1e-9), std::domain_error);
    EXPECT_THROW(bisect([](double x) { return x; }, 1.0, -1.0, 1e-9), std::invalid_argument);
    EXPECT_THROW(bisect([](double x) { return x; }, -1.0, 1.0, 0.0), std::invalid_argument);
}

TEST(Bisection, RootAtEndpointReturnsImmediately) {
    const BisectionResult r = bisect([](double x) { return x - 1.0; }, 1.0, 3.0, 1e-9);
    EXPECT_EQ(r.root, 1.0);
    EXPECT_EQ(r.iterations, 0);
}

TEST(Lissajous, StartsAtDefaultPhase) {
    const LissajousParams p;
    const Reference r = lissajous_ref(0.0, p);
    EXPECT_NEAR(r.pos.x(), 4.0, 1e-15);
    EXPECT_NEAR(r.pos.y(), 0.0, 1e-15);
    EXPECT_EQ(r.pos.z(), 1.0);
}

TEST(Lissajous, VelocityAndAccelerationAreDerivatives) {
    LissajousParams p;
    p.speed_scale = 0.07;
    const double h = 1e-4;
    for (double t : {0.0, 3.3, 17.0, 60.5}) {
        const Vec3 dv = (lissajous_ref(t + h, p).pos - lissajous_ref(t - h, p).pos) / (2.0 * h);
        const Vec3 da = (lissajous_ref(t + h, p).vel - lissajous_ref(t - h, p).vel) / (2.0 * h);
        EXPECT_LT((dv - lissajous_ref(t, p).vel).norm(), 1e-8);
        EXPECT_LT((da - lissajous_ref(t, p).acc).norm(), 1e-8);
    }
}

TEST(Lissajous, ClosesAfterOnePeriod) {
    LissajousParams p;
    p.speed_scale = 0.05;
    EXPECT_NEAR(lissajous_base_period(p), kTwoPi, 1e-15);
    const double T = lissajous_period(p);
    EXPECT_LT((lissajous_ref(T, p).pos - lissajous_ref(0.0, p).pos).norm(), 1e-12);
    p.b = std::sqrt(2.0);
    EXPECT_THROW(lissajous_base_period(p), std::invalid_argument);
}

TEST(Lissajous, ArcLengthMatchesFinePolyline) {
    const LissajousParams p;
    const int n = 400000;
    double poly = 0.0;
    Vec3 prev = lissajous_ref(0.0, p).pos;
    for (int i = 1; i <= n; ++i) {
        const Vec3 cur = lissajous_ref(kTwoPi * i / n, p).pos;
        poly += (cur - prev).norm();
        prev = cur;
    }
    EXPECT_NEAR(lissajous_arc_length(p), poly, 1e-8 * poly);
}

TEST(Lissajous, CalibratedScaleHitsTargetSpeed) {
    const LissajousParams p;
    const double length = lissajous_arc_length(p);
    for (double v : {0.13, 0.21, 0.42}) {
        LissajousParams q = p;
        q.speed_scale = calibrate_speed_scale(p, v).root;
        EXPECT_NEAR(lissajous_average_speed(q), v, 0.01 * v);
        // average speed is linear in the scale
        EXPECT_NEAR(q.speed_scale, v * kTwoPi / length, 1e-9);
    }
    EXPECT_THROW(calibrate_speed_scale(p, 0.0), std::invalid_argument);
}

TEST(Triangle, EquilateralWithTopVertexUp) {
    const TriangleParams t = equilateral_triangle();
    EXPECT_NEAR(t.perimeter(), 6.0, 1e-12);
    EXPECT_NEAR(t.loop_time(), 60.0, 1e-10);
    EXPECT_NEAR(t.vertices[0].x(), 0.0, 1e-15);
    EXPECT_GT(t.vertices[0].y(), 0.0);
    EXPECT_NO_THROW(t.validate());
    TriangleParams flat = t;
    flat.vertices[2] = 0.5 * (flat.vertices[0] + flat.vertices[1]);
    EXPECT_THROW(flat.validate(), std::invalid_argument);
}

TEST(Triangle, ReferenceWalksThePerimeterAtConstantSpeed) {
    for (Direction dir : {Direction::ccw, Direction::cw}) {
        const TriangleParams t = equilateral_triangle(2.0, {0, 0, 1}, 0.1, dir);
        EXPECT_LT((triangle_ref(0.0, t).pos - t.vertices[0]).norm(), 1e-12);
        EXPECT_LT((triangle_ref(t.loop_time(), t).pos - t.vertices[0]).norm(), 1e-9);
        const Vec3 second = dir == Direction::ccw ? t.vertices[1] : t.vertices[2];
        EXPECT_LT((triangle_ref(20.0, t).pos - second).norm(), 1e-9);
        double turning = 0.0;
        for (double s = 0.5; s < 60.0; s += 0.5) {
            const Reference r = triangle_ref(s, t);
            EXPECT_NEAR(r.vel.norm(), 0.1, 1e-12);
            const Vec3 d = triangle_ref(s + 0.5, t).vel;
            turning += r.vel.x() * d.y() - r.vel.y() * d.x();
        }
        EXPECT_EQ(turning > 0.0, dir == Direction::ccw);
    }
}

TEST(Metrics, MeanMaxAndRms) {
    SimLog log(4);
    const double e[] = {0.0, 1.0, 2.0, 3.0};
    for (int i = 0; i < 4; ++i) {
        log[i].e = e[i];
    }
    const TrackingMetrics m = tracking_metrics(log);
    EXPECT_DOUBLE_EQ(m.mean_e, 1.5);
    EXPECT_DOUBLE_EQ(m.max_e, 3.0);
    EXPECT_DOUBLE_EQ(m.rmse, std::sqrt(14.0 / 4.0));
    EXPECT_THROW(tracking_metrics(SimLog{}), std::invalid_argument);
}

TEST(Metrics, CrossTrackSignIsOutsideOfTheTurn) {
    const double R = 1.0;
    const double delta = 0.05;
    for (double turn : {1.0, -1.0}) {
        auto ref = [&](double t) {
            Reference r;
            const double a = turn * t;
            r.pos = {R * std::cos(a), R * std::sin(a), 1.0};
            r.vel = {-turn * R * std::sin(a), turn * R * std::cos(a), 0.0};
            r.acc = {-R * std::cos(a), -R * std::sin(a), 0.0};
            return r;
        };
        SimLog log;
        for (int i = 0; i < 100; ++i) {
            LogRow row;
            row.t = 0.1 * i;
            row.pos = ref(row.t).pos * (R + delta) / R;
            row.pos.z() = 1.0;
            log.push_back(row);
        }
        const CrossTrackStats c = cross_track_by_turn(log, ref);
        if (turn > 0) {
            EXPECT_EQ(c.n_cw, 0u);
            EXPECT_NEAR(c.mean_ccw, delta, 1e-12);
        } else {
            EXPECT_EQ(c.n_ccw, 0u);
            EXPECT_NEAR(c.mean_cw, delta, 1e-12);
        }
    }
}
