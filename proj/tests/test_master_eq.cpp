#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mfg/master_eq.hpp"
#include "mfg/rng.hpp"
#include "oracles.hpp"

using namespace mfg;

namespace {

Vec vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

Grid box2(double lo, double hi, int n) {
    return build_grid(vec2(lo, lo), vec2(hi, hi), {n, n});
}

// monotone affine initial data U0 = x - center
ValueField affine_u0(const Grid& g) {
    Vec c = 0.5 * (g.lower + g.upper);
    return ValueField::from_function(g, g.dim(), [c](const Vec& x) -> Vec { return x - c; });
}

} // namespace

TEST_CASE("AffineJump operator norm agrees with an SVD estimate") {
    Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        int d = 2 + static_cast<int>(rng.next_u64() % 2);
        Mat S(d, d);
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c) S(r, c) = 2.0 * rng.next_unit() - 1.0;
        AffineJump J = AffineJump::make(S, Vec::Zero(d));
        Eigen::JacobiSVD<Mat> svd(S);
        CHECK(J.op_norm_S == doctest::Approx(svd.singularValues().maxCoeff()).epsilon(1e-8));
    }
}

TEST_CASE("jump_pullback identity and constants") {
    Grid g = box2(0, 2, 9);
    ValueField U = ValueField::from_function(
        g, 2, [](const Vec& x) { return vec2(std::sin(x[0]), x[1] * x[0]); });
    ValueField same = jump_pullback(U, AffineJump::identity(2));
    CHECK(sup_distance(U, same) == 0.0);

    // constants are translation-blind: result is S^T u0 everywhere
    Mat S(2, 2);
    S << 0.5, 0.25, -0.1, 0.8;
    Vec e = vec2(0.3, -0.4);
    Vec u0 = vec2(1.5, -2.0);
    ValueField C = ValueField::constant(g, u0);
    ValueField pulled = jump_pullback(C, AffineJump::make(S, e));
    Vec expect = S.transpose() * u0;
    for (long i = 0; i < g.node_count(); ++i)
        CHECK((pulled.at(i) - expect).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("jump_pullback of the coordinate swap on U(x)=x is the identity") {
    Grid g = box2(-1, 1, 11);
    Mat S(2, 2);
    S << 0, 1, 1, 0;
    ValueField U = ValueField::from_function(g, 2, [](const Vec& x) -> Vec { return x; });
    ValueField pulled = jump_pullback(U, AffineJump::make(S, Vec::Zero(2)));
    // S^T (S x) = x for the orthogonal involution
    CHECK(sup_distance(pulled, U) < 1e-14);
}

TEST_CASE("step_master trivial regimes") {
    Grid g = box2(0, 2, 9);
    ValueField U = affine_u0(g);

    // all terms vanish
    Coupling none = Coupling::zero(2);
    ValueField stepped = step_master(U, none, NoiseNone{}, 0.0, 0.01, 0.0);
    CHECK(sup_distance(stepped, U) == 0.0);

    // G(x,u) = -u is plain exponential decay (not block-monotone)
    Mat Z = Mat::Zero(2, 2);
    Coupling decay = Coupling::linear_unverified(Z, -Mat::Identity(2, 2), Z, Z);
    double dt = 0.01;
    ValueField dec = step_master(U, decay, NoiseNone{}, 0.0, dt, 0.0);
    for (long i = 0; i < g.node_count(); ++i)
        CHECK((dec.at(i) - (1.0 - dt) * U.at(i)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("identity jump cancels the relaxation term for any rate") {
    Grid g = box2(0, 2, 9);
    ValueField U = ValueField::from_function(
        g, 2, [](const Vec& x) { return vec2(std::sin(x[0] + x[1]), std::cos(x[0])); });
    Coupling none = Coupling::zero(2);
    ValueField a = step_master(U, none, NoiseNone{}, 0.0, 0.01, 0.0);
    ValueField b = step_master(U, none, CommonPoisson{5.0, AffineJump::identity(2)}, 0.0,
                               0.01, 0.0);
    CHECK(sup_distance(a, b) < 1e-12);
}

TEST_CASE("step_master rejects CFL violations reporting the drift") {
    Grid g = box2(0, 2, 9);
    ValueField U = affine_u0(g);
    Mat Z = Mat::Zero(2, 2);
    Mat C = 10.0 * Mat::Identity(2, 2); // drift up to 20 per axis, h = 0.25
    Coupling fast = Coupling::linear_unverified(Z, Z, C, Z);
    CHECK_THROWS_WITH_AS(step_master(U, fast, NoiseNone{}, 0.0, 0.1, 0.0),
                         doctest::Contains("CFL"), std::invalid_argument);
}

TEST_CASE("solve_master stationary and transport oracles") {
    // F = 0 and G = 0 keeps U0 exactly
    Grid g = box2(0, 4, 21);
    ValueField U0 = ValueField::from_function(
        g, 2, [](const Vec& x) { return vec2(std::sin(x[0]), std::cos(x[1])); });
    Trajectory traj = solve_master(U0, Coupling::zero(2), NoiseNone{}, 0.5, 0.05, 0.0);
    for (const auto& f : traj.fields) CHECK(sup_distance(f, U0) == 0.0);

    // d=1 unit transport: U(t,x) = U0(x-t), error O(h+dt) with refinement
    auto transport_error = [](int n, double dt) {
        Grid g1 = build_grid(Vec::Constant(1, -4.0), Vec::Constant(1, 4.0), {n});
        auto u0 = [](double x) { return std::exp(-x * x); };
        ValueField U0 = ValueField::from_function(
            g1, 1, [&](const Vec& x) { return Vec::Constant(1, u0(x[0])); });
        Coupling c;
        c.F = [](const Vec&, const Vec&) { return Vec::Constant(1, 1.0); };
        c.G = [](const Vec&, const Vec&) { return Vec::Zero(1); };
        double t_f = 1.0;
        Trajectory traj = solve_master(U0, c, NoiseNone{}, t_f, dt, 0.0);
        double err = 0.0;
        const Grid& gg = traj.grid();
        for (long i = 0; i < gg.node_count(); ++i) {
            double x = gg.node_coordinate(i)[0];
            if (x < -2.5 || x > 3.5) continue; // stay clear of the clamped edges
            err = std::max(err, std::abs(traj.fields.back().values(i, 0) - u0(x - t_f)));
        }
        return err;
    };
    double e1 = transport_error(81, 0.05);
    double e2 = transport_error(161, 0.025);
    CHECK(e1 < 1.0 * (8.0 / 80 + 0.05)); // C(h+dt) with C = 1
    CHECK(e1 / e2 > 1.5);
    CHECK(e1 / e2 < 3.0);
}

TEST_CASE("deterministic jump equals the compositional oracle") {
    Grid g = box2(0, 2, 13);
    ValueField U0 = affine_u0(g);
    Mat A = 0.3 * Mat::Identity(2, 2), B = 0.1 * Mat::Identity(2, 2);
    Coupling coupling = Coupling::linear(A, B, B, A);
    Mat S(2, 2);
    S << 0.9, 0.05, 0.05, 0.9;
    AffineJump J = AffineJump::make(S, vec2(0.05, -0.05));
    double t1 = 0.4, t_f = 1.0, dt = 0.02;

    Trajectory jumped =
        solve_master(U0, coupling, DeterministicJump{t1, J}, t_f, dt, 0.0);

    // oracle: noiseless to t1, pull back, noiseless to t_f
    Trajectory part1 = solve_master(U0, coupling, NoiseNone{}, t1, dt, 0.0);
    ValueField mid = jump_pullback(part1.fields.back(), J);
    Trajectory part2 = solve_master(mid, coupling, NoiseNone{}, t_f - t1, dt, 0.0);

    CHECK(sup_distance(jumped.fields.back(), part2.fields.back()) < 1e-13);

    // both sides of t1 recorded
    std::size_t hits = 0;
    for (std::size_t j = 0; j + 1 < jumped.times.size(); ++j)
        if (jumped.times[j] == t1 && jumped.times[j + 1] == t1) ++hits;
    CHECK(hits == 1);
}

TEST_CASE("noise equivalences") {
    Grid g = box2(0, 2, 13);
    ValueField U0 = affine_u0(g);
    Mat A = 0.3 * Mat::Identity(2, 2), B = 0.1 * Mat::Identity(2, 2);
    Coupling coupling = Coupling::linear(A, B, B, A);
    Mat S(2, 2);
    S << 0.9, 0.05, 0.05, 0.9;
    AffineJump J = AffineJump::make(S, vec2(0.05, -0.05));

    // single-atom mixture == common Poisson, node for node
    Trajectory common =
        solve_master(U0, coupling, CommonPoisson{2.0, J}, 1.0, 0.02, 0.0);
    Trajectory mixture =
        solve_master(U0, coupling, Mixture{2.0, {{J, 1.0}}}, 1.0, 0.02, 0.0);
    REQUIRE(common.times.size() == mixture.times.size());
    for (std::size_t j = 0; j < common.times.size(); ++j)
        CHECK(sup_distance(common.fields[j], mixture.fields[j]) == 0.0);

    // rate 0 == no noise
    Trajectory zero_rate =
        solve_master(U0, coupling, CommonPoisson{0.0, J}, 1.0, 0.02, 0.0);
    Trajectory none = solve_master(U0, coupling, NoiseNone{}, 1.0, 0.02, 0.0);
    for (std::size_t j = 0; j < none.times.size(); ++j)
        CHECK(sup_distance(zero_rate.fields[j], none.fields[j]) == 0.0);

    // t1 >= t_f == no noise
    Trajectory late =
        solve_master(U0, coupling, DeterministicJump{5.0, J}, 1.0, 0.02, 0.0);
    REQUIRE(late.times.size() == none.times.size());
    for (std::size_t j = 0; j < none.times.size(); ++j)
        CHECK(sup_distance(late.fields[j], none.fields[j]) == 0.0);
}

TEST_CASE("mixture weight validation") {
    AffineJump J = AffineJump::identity(2);
    CHECK_THROWS_AS(validate_noise(Mixture{1.0, {{J, 0.6}, {J, 0.6}}}),
                    std::invalid_argument);
    CHECK_NOTHROW(validate_noise(Mixture{1.0, {{J, 0.25}, {J, 0.75}}}));
    CHECK_THROWS_AS(validate_noise(CommonPoisson{-1.0, J}), std::invalid_argument);
    CHECK_THROWS_AS(validate_noise(DeterministicJump{-0.5, J}), std::invalid_argument);
}

TEST_CASE("upwind steps create no new extrema without source terms") {
    Grid g = box2(-2, 2, 17);
    ValueField U0 = ValueField::from_function(
        g, 2, [](const Vec& x) { return vec2(std::sin(x[0]), std::cos(x[1])); });
    Coupling c;
    c.F = [](const Vec& x, const Vec&) -> Vec { return 0.3 * x; };
    c.G = [](const Vec&, const Vec&) { return Vec::Zero(2); };
    Trajectory traj = solve_master(U0, c, NoiseNone{}, 1.0, 0.05, 0.0);
    double lo = U0.values.minCoeff(), hi = U0.values.maxCoeff();
    for (const auto& f : traj.fields) {
        CHECK(f.values.maxCoeff() <= hi + 1e-12);
        CHECK(f.values.minCoeff() >= lo - 1e-12);
    }
}

TEST_CASE("blow-up detection aborts with the failure time") {
    Grid g = box2(0, 1, 5);
    ValueField U0 = affine_u0(g);
    Mat Z = Mat::Zero(2, 2);
    Coupling growth = Coupling::linear_unverified(Z, 60.0 * Mat::Identity(2, 2), Z, Z);
    MasterOptions opts;
    opts.blowup_cap = 10.0;
    CHECK_THROWS_WITH_AS(
        solve_master(U0, growth, NoiseNone{}, 2.0, 0.01, 0.0, opts),
        doctest::Contains("blow-up"), std::runtime_error);
}

TEST_CASE("solve_asymptotic with S=0 matches the noiseless master solve exactly") {
    Grid g = box2(-1, 1, 9);
    ValueField U0 = ValueField::from_function(
        g, 2, [](const Vec& x) { return vec2(std::sin(x[0]), x[1] * x[1] * 0.3); });
    Mat A = 0.2 * Mat::Identity(2, 2), B = 0.1 * Mat::Identity(2, 2);
    Coupling coupling = Coupling::linear(A, B, B, A);
    Trajectory master = solve_master(U0, coupling, NoiseNone{}, 0.5, 0.01, 0.0);
    Mat Z = Mat::Zero(2, 2);
    Trajectory first = solve_asymptotic(U0, coupling, Z, AsymptoticOrder::First, 0.5, 0.01);
    Trajectory second =
        solve_asymptotic(U0, coupling, Z, AsymptoticOrder::Second, 0.5, 0.01);
    REQUIRE(master.times.size() == first.times.size());
    for (std::size_t j = 0; j < master.times.size(); ++j) {
        CHECK(sup_distance(master.fields[j], first.fields[j]) == 0.0);
        CHECK(sup_distance(master.fields[j], second.fields[j]) == 0.0);
    }
}

TEST_CASE("first-order operator reproduces the d=1 analytic characteristics") {
    // dU/dt - (s x) dU/dx - s U = 0 with U0(x) = x has solution e^{2 s t} x.
    // s < 0 makes the drift -s x outflowing, so the clamped box never feeds
    // boundary data into the interior.
    const double s = -0.4, t_f = 0.5;
    auto run = [&](int n, double dt) {
        Grid g1 = build_grid(Vec::Constant(1, -2.0), Vec::Constant(1, 2.0), {n});
        ValueField U0 =
            ValueField::from_function(g1, 1, [](const Vec& x) -> Vec { return x; });
        Mat S = Mat::Constant(1, 1, s);
        Trajectory traj =
            solve_asymptotic(U0, Coupling::zero(1), S, AsymptoticOrder::First, t_f, dt);
        double err = 0.0;
        for (long i = 0; i < g1.node_count(); ++i) {
            double x = g1.node_coordinate(i)[0];
            double exact = std::exp(2.0 * s * t_f) * x;
            err = std::max(err, std::abs(traj.fields.back().values(i, 0) - exact));
        }
        return err;
    };
    double err = run(41, 0.005);
    CHECK(err < 2.0 * (4.0 / 40 + 0.005)); // C(h+dt), affine-exact in space
    // drift -Sx points outward, so the scheme is exact on affine data: the
    // whole error is the O(dt) time discretization
    CHECK(run(41, 0.0025) < err);
}

TEST_CASE("asymptotic consistency: Poisson(1/eps, Id+eps S) approaches first order") {
    Grid g = box2(-2, 2, 21);
    ValueField U0 = ValueField::from_function(g, 2, [](const Vec& x) -> Vec { return x; });
    Coupling coupling = Coupling::zero(2);
    Mat S = -0.3 * Mat::Identity(2, 2);
    double t_f = 1.0, dt = 0.005;
    Trajectory limit = solve_asymptotic(U0, coupling, S, AsymptoticOrder::First, t_f, dt);

    std::vector<double> gaps;
    for (double eps : {0.2, 0.1, 0.05}) {
        AffineJump J = AffineJump::make(Mat::Identity(2, 2) + eps * S, Vec::Zero(2));
        Trajectory traj =
            solve_master(U0, coupling, CommonPoisson{1.0 / eps, J}, t_f, dt, 0.0);
        gaps.push_back(sup_distance(traj.fields.back(), limit.fields.back()));
    }
    CHECK(gaps[0] / gaps[1] > 1.4);
    CHECK(gaps[0] / gaps[1] < 3.0);
    CHECK(gaps[1] / gaps[2] > 1.4);
    CHECK(gaps[1] / gaps[2] < 3.0);
}

TEST_CASE("second-order operator self-converges under grid refinement") {
    Mat S(2, 2);
    S << 0.25, 0.1, 0.0, 0.2;
    Coupling coupling = Coupling::zero(2);
    double t_f = 0.2;
    auto run = [&](int n) {
        Grid g = box2(-2, 2, n);
        ValueField U0 = ValueField::from_function(g, 2, [](const Vec& x) {
            Vec v(2);
            v << std::sin(0.8 * x[0]) + 0.3 * x[1], std::cos(0.5 * x[1]);
            return v;
        });
        double h = g.min_spacing();
        double max_bn = 0.0;
        for (long i = 0; i < g.node_count(); ++i)
            max_bn = std::max(max_bn, (S * g.node_coordinate(i)).norm());
        double dt = 0.9 * h * h / (4.0 * max_bn * max_bn);
        return solve_asymptotic(U0, coupling, S, AsymptoticOrder::Second, t_f, dt);
    };
    Trajectory c1 = run(11), c2 = run(21), ref = run(41);

    auto err_against_ref = [&](const Trajectory& t) {
        double err = 0.0;
        const Grid& g = t.grid();
        for (long i = 0; i < g.node_count(); ++i) {
            Vec x = g.node_coordinate(i);
            err = std::max(err,
                           (t.fields.back().at(i) - ref.eval(t_f, x)).cwiseAbs().maxCoeff());
        }
        return err;
    };
    double e1 = err_against_ref(c1), e2 = err_against_ref(c2);
    CHECK(e1 / e2 >= 1.5);
}

TEST_CASE("second-order parabolic CFL is enforced") {
    Grid g = box2(-2, 2, 21);
    ValueField U0 = ValueField::from_function(g, 2, [](const Vec& x) -> Vec { return x; });
    Mat S = 0.5 * Mat::Identity(2, 2);
    CHECK_THROWS_WITH_AS(
        solve_asymptotic(U0, Coupling::zero(2), S, AsymptoticOrder::Second, 0.5, 0.1),
        doctest::Contains("parabolic CFL"), std::invalid_argument);
}

TEST_CASE("derivation variant differs from the displayed second-order operator") {
    Grid g = box2(-2, 2, 15);
    ValueField U0 = ValueField::from_function(g, 2, [](const Vec& x) {
        Vec v(2);
        v << std::sin(x[0]), std::cos(x[1]);
        return v;
    });
    Mat S = 0.3 * Mat::Identity(2, 2);
    double h = g.min_spacing();
    double max_bn = 0.0;
    for (long i = 0; i < g.node_count(); ++i)
        max_bn = std::max(max_bn, (S * g.node_coordinate(i)).norm());
    double dt = 0.9 * h * h / (4.0 * max_bn * max_bn);
    AsymptoticOptions alt;
    alt.derivation_variant = true;
    Trajectory displayed =
        solve_asymptotic(U0, Coupling::zero(2), S, AsymptoticOrder::Second, 0.2, dt);
    Trajectory derived =
        solve_asymptotic(U0, Coupling::zero(2), S, AsymptoticOrder::Second, 0.2, dt, alt);
    CHECK(sup_distance(displayed.fields.back(), derived.fields.back()) > 1e-6);
}
