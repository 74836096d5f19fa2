#include <cmath>

#include "boundary.hpp"
#include "catch_amalgamated.hpp"
#include "error.hpp"

using namespace charstrip;
using Catch::Matchers::WithinAbs;

namespace {

Expr T(const char* s) { return Expr::parse(s, kMaskT); }

// Row 1 of the loss-of-smoothness problem: u1(0,t) = r1(t) u2(0,t).
BoundaryOperator r1_row(const char* r1) {
    ReflectionTerm a;
    a.k = 1;
    a.r = T(r1);
    ReflectionTerm b;
    b.k = 0;
    b.r = Expr(0.9);
    return BoundaryOperator::general(2, {{a}, {b}});
}

TraceFn traces() {
    return [](int k, double t) { return k == 0 ? std::cos(t) : 2.0 + std::sin(3.0 * t); };
}

}  // namespace

TEST_CASE("periodic operator is the identity") {
    auto R = BoundaryOperator::periodic(2);
    CHECK(R.is_periodic());
    auto out = R.apply(traces(), 0.7, 0.01);
    CHECK(out[0] == std::cos(0.7));
    CHECK(out[1] == 2.0 + std::sin(2.1));
    TimeGrid g(Periodic{1.0}, 16);
    CHECK(R.row_norm(0, g) == 1.0);
}

TEST_CASE("pointwise reflection row") {
    auto R = r1_row("0.8 + 0.05*sin(t - 1/4)");
    for (double t : {0.0, 0.25, 2.0}) {
        auto out = R.apply(traces(), t, 0.01);
        CHECK_THAT(out[0], WithinAbs((0.8 + 0.05 * std::sin(t - 0.25)) * (2.0 + std::sin(3.0 * t)), 1e-14));
        CHECK_THAT(out[1], WithinAbs(0.9 * std::cos(t), 1e-14));
    }
}

TEST_CASE("constant kernel over a unit horizon") {
    ReflectionTerm term;
    term.k = 0;
    term.p = Expr(1.0);
    term.horizon = Expr(1.0);
    auto R = BoundaryOperator::general(1, {{term}});
    auto out = R.apply([](int, double) { return 2.5; }, 3.0, 0.01);
    CHECK_THAT(out[0], WithinAbs(2.5, 1e-13));
}

TEST_CASE("derived operators of an autonomous reflection") {
    auto R = r1_row("0.7");
    for (double t : {0.1, 1.4}) {
        auto base = R.apply(traces(), t, 0.01);
        auto prime = R.derived(Derived::Rprime).apply(traces(), t, 0.01);
        auto tilde = R.derived(Derived::Rtilde).apply(traces(), t, 0.01);
        auto hat = R.derived(Derived::Rhat).apply(traces(), t, 0.01);
        for (int j = 0; j < 2; ++j) {
            CHECK(prime[j] == 0.0);
            CHECK_THAT(tilde[j], WithinAbs(base[j], 1e-15));
            CHECK_THAT(hat[j], WithinAbs(base[j], 1e-15));
        }
    }
}

TEST_CASE("derived operators of a time-dependent reflection") {
    auto R = r1_row("0.8 + 0.05*sin(t - 1/4)");
    for (double t : {0.0, 0.25, 2.0}) {
        auto prime = R.derived(Derived::Rprime).apply(traces(), t, 0.01);
        auto tilde = R.derived(Derived::Rtilde).apply(traces(), t, 0.01);
        const double z2 = 2.0 + std::sin(3.0 * t);
        CHECK_THAT(prime[0], WithinAbs(0.05 * std::cos(t - 0.25) * z2, 1e-14));
        CHECK_THAT(tilde[0], WithinAbs((0.8 + 0.05 * std::sin(t - 0.25)) * z2, 1e-14));
    }
}

TEST_CASE("pure delay: R~ carries the factor 1 - theta'") {
    ReflectionTerm term;
    term.k = 0;
    term.r = Expr(1.0);
    term.theta = T("0.1*sin(t)");
    auto R = BoundaryOperator::general(1, {{term}});
    auto Z = [](int, double t) { return std::exp(std::sin(t)); };
    for (double t : {0.0, 0.9, 2.2}) {
        auto tilde = R.derived(Derived::Rtilde).apply(Z, t, 0.01);
        CHECK_THAT(tilde[0], WithinAbs(Z(0, t - 0.1 * std::sin(t)) * (1.0 - 0.1 * std::cos(t)), 1e-13));
    }
}

TEST_CASE("differentiating R Z matches R' Z + R~ Z'") {
    ReflectionTerm term;
    term.k = 0;
    term.r = T("0.5 + 0.1*cos(t)");
    term.theta = T("0.2 + 0.1*sin(t)");
    term.p = Expr::parse("0.3*exp(-tau)*(1 + 0.5*sin(t))", kMaskTTau);
    term.horizon = T("1 + 0.2*cos(t)");
    auto R = BoundaryOperator::general(1, {{term}});
    auto Z = [](int, double t) { return std::sin(2.0 * t) + 0.5 * std::cos(t); };
    auto dZ = [](int, double t) { return 2.0 * std::cos(2.0 * t) - 0.5 * std::sin(t); };
    const double h = 1e-4, dt = 1e-4;
    for (double t : {0.3, 1.9}) {
        double fd = (R.apply(Z, t + h, dt)[0] - R.apply(Z, t - h, dt)[0]) / (2 * h);
        double split = R.derived(Derived::Rprime).apply(Z, t, dt)[0] + R.derived(Derived::Rtilde).apply(dZ, t, dt)[0];
        CHECK_THAT(split, WithinAbs(fd, 1e-6));
    }
}

TEST_CASE("row norms") {
    TimeGrid g(Periodic{2.0 * M_PI}, 256);
    auto R = r1_row("0.8 + 0.05*sin(t - 1/4)");
    CHECK_THAT(R.row_norm(0, g), WithinAbs(0.85, 1e-4));
    CHECK(R.row_norm(0, g) <= 0.85);
    CHECK_THAT(R.row_norm(1, g), WithinAbs(0.9, 1e-15));

    ReflectionTerm a;
    a.k = 0;
    a.r = Expr(0.5);
    ReflectionTerm b;
    b.k = 0;
    b.p = Expr(0.25);
    b.horizon = Expr(1.0);
    auto K = BoundaryOperator::general(1, {{a, b}});
    CHECK_THAT(K.row_norm(0, g), WithinAbs(0.75, 1e-12));
    CHECK_THAT(K.max_lookback(g), WithinAbs(1.0, 1e-15));
}

TEST_CASE("grid plan matches the direct application") {
    TimeGrid g(Periodic{2.0 * M_PI}, 128);
    ReflectionTerm a;
    a.k = 1;
    a.r = T("0.4 + 0.1*sin(t)");
    a.theta = T("0.3");
    ReflectionTerm b;
    b.k = 0;
    b.p = Expr::parse("0.2*exp(-tau)", kMaskTTau);
    b.horizon = Expr(0.5);
    auto R = BoundaryOperator::general(2, {{a, b}, {}});
    std::vector<std::vector<double>> z(2, std::vector<double>(128));
    for (int k = 0; k < 128; ++k) {
        z[0][k] = std::cos(g.time(k));
        z[1][k] = std::sin(2.0 * g.time(k));
    }
    BoundaryPlan plan(R, g);
    std::vector<std::vector<double>> out;
    plan.apply({z[0], z[1]}, out);
    auto Z = sampled_traces(z, g, false);
    CHECK(plan.empty_row(1));
    for (int k : {0, 17, 127}) {
        auto direct = R.apply(Z, g.time(k), g.step());
        CHECK_THAT(out[0][k], WithinAbs(direct[0], 1e-12));
        CHECK(out[1][k] == 0.0);
    }
}

TEST_CASE("strict window lookups refuse to look before the window") {
    TimeGrid g(Window{0.0, 1.0, 0.0}, 11);
    std::vector<std::vector<double>> z{std::vector<double>(11, 1.0)};
    auto Z = sampled_traces(z, g, true);
    CHECK(Z(0, 0.5) == 1.0);
    try {
        Z(0, -0.5);
        FAIL("looked before the window");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::LookbackOutOfWindow);
    }
}
