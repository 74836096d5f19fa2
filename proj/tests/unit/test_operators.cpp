#include <cmath>

#include "catch_amalgamated.hpp"
#include "error.hpp"
#include "operators.hpp"

using namespace charstrip;
using Catch::Matchers::WithinAbs;

namespace {

std::vector<std::vector<Expr>> zeros(int n) { return std::vector<std::vector<Expr>>(n, std::vector<Expr>(n, Expr(0.0))); }

Grid periodic_grid(int nx, int nt) { return Grid(nx, TimeGrid(Periodic{2.0 * M_PI}, nt)); }

GridField sample(int n, const Grid& g, double (*fn)(int, double, double)) {
    GridField f(n, g);
    for (int c = 0; c < n; ++c)
        for (int i = 0; i <= g.nx; ++i)
            for (int k = 0; k < g.nt(); ++k) f(c, i, k) = fn(c, g.x(i), g.time.time(k));
    return f;
}

double max_abs_diff(const GridField& a, const GridField& b) { return a.sup_diff(b); }

}  // namespace

TEST_CASE("C for a unit-speed periodic problem shifts the far trace") {
    auto sys = make_diagonal_system(1, {Expr(1.0)}, zeros(1));
    Grid g = periodic_grid(32, 512);
    OperatorAssembly A(sys, BoundaryOperator::periodic(1), g);
    GridField u = sample(1, g, [](int, double x, double t) { return std::sin(t) * (1.0 + x); });
    GridField Cu = A.apply_C(u);
    const double dt = g.time.step();
    for (int i : {0, 10, 32})
        for (int k : {0, 100, 511})
            CHECK_THAT(Cu(0, i, k), WithinAbs(2.0 * std::sin(g.time.time(k) - g.x(i)), dt * dt));
    CHECK(A.apply_C(GridField(1, g)).sup_norm() == 0.0);
}

TEST_CASE("C for the first row of the loss-of-smoothness problem") {
    auto sys = make_diagonal_system(1, {Expr::parse("2/(4*pi-1)"), Expr::parse("-(2+sin(t))")}, zeros(2));
    ReflectionTerm a;
    a.k = 1;
    a.r = Expr::parse("0.8 + 0.05*sin(t - 1/4)", kMaskT);
    ReflectionTerm b;
    b.k = 0;
    b.r = Expr(0.9);
    Grid g = periodic_grid(16, 1024);
    OperatorAssembly A(sys, BoundaryOperator::general(2, {{a}, {b}}), g);
    GridField u = sample(2, g, [](int c, double x, double t) { return c == 0 ? x : std::cos(t) + x * x; });
    GridField Cu = A.apply_C(u);
    const double L = (4.0 * M_PI - 1.0) / 2.0;
    for (int i : {0, 3, 16})
        for (int k : {0, 400}) {
            const double s = g.time.time(k) - L * g.x(i);
            CHECK_THAT(Cu(0, i, k), WithinAbs((0.8 + 0.05 * std::sin(s - 0.25)) * std::cos(s), 1e-5));
        }
}

TEST_CASE("D vanishes without off-diagonal coupling") {
    auto sys = make_diagonal_system(1, {Expr(1.0), Expr(-1.0)}, {{Expr(0.5), Expr(0.0)}, {Expr(0.0), Expr(2.0)}});
    Grid g = periodic_grid(16, 32);
    OperatorAssembly A(sys, BoundaryOperator::periodic(2), g);
    GridField u = sample(2, g, [](int c, double x, double t) { return c + x * std::sin(t); });
    CHECK(A.apply_D(u).sup_norm() == 0.0);
    CHECK_FALSE(A.has_coupling());
}

TEST_CASE("D with constant symmetric coupling") {
    auto sys = make_diagonal_system(1, {Expr(1.0), Expr(-1.0)}, {{Expr(0.0), Expr(0.5)}, {Expr(0.5), Expr(0.0)}});
    Grid g = periodic_grid(32, 32);
    ReflectionTerm a;
    a.k = 1;
    a.r = Expr(0.5);
    ReflectionTerm b;
    b.k = 0;
    b.r = Expr(0.5);
    OperatorAssembly A(sys, BoundaryOperator::general(2, {{a}, {b}}), g);
    GridField u(2, g, 1.0);
    GridField Du = A.apply_D(u);
    for (int i = 0; i <= 32; i += 4)
        for (int k : {0, 17}) {
            CHECK_THAT(Du(0, i, k), WithinAbs(-g.x(i) / 2.0, 1e-13));
            CHECK_THAT(Du(1, i, k), WithinAbs(-(1.0 - g.x(i)) / 2.0, 1e-13));
        }
}

TEST_CASE("F integrates the source along characteristics") {
    auto sys = make_diagonal_system(1, {Expr(1.0)}, zeros(1));
    Grid g = periodic_grid(32, 64);
    OperatorAssembly A(sys, BoundaryOperator::general(1, {{}}), g);
    GridField F = A.apply_F([](int, double, double) { return 1.0; }, [](int, double) { return 0.0; });
    for (int i = 0; i <= 32; ++i) CHECK_THAT(F(0, i, 5), WithinAbs(g.x(i), 1e-13));
    GridField H = A.apply_F([](int, double, double) { return 0.0; }, [](int, double t) { return std::cos(t); });
    for (int i : {0, 16, 32})
        CHECK_THAT(H(0, i, 7), WithinAbs(std::cos(g.time.time(7) - g.x(i)), 1e-3));
}

TEST_CASE("C, D and G are linear") {
    auto sys = make_diagonal_system(1, {Expr::parse("1 + 0.3*sin(t + x)"), Expr::parse("-(2+sin(t))")},
                                    {{Expr::parse("0.5"), Expr::parse("0.2*cos(t)")},
                                     {Expr::parse("x"), Expr::parse("0.4")}});
    ReflectionTerm a;
    a.k = 1;
    a.r = Expr::parse("0.5 + 0.1*sin(t)", kMaskT);
    a.theta = Expr(0.2);
    ReflectionTerm b;
    b.k = 0;
    b.r = Expr(0.6);
    Grid g = periodic_grid(16, 64);
    OperatorAssembly A(sys, BoundaryOperator::general(2, {{a}, {b}}), g);
    GridField u = sample(2, g, [](int c, double x, double t) { return std::sin(t + c) * (1 + x); });
    GridField v = sample(2, g, [](int c, double x, double t) { return std::cos(2 * t) * x * x - c; });
    const double al = 1.7, be = -0.3;
    GridField w(2, g);
    for (std::size_t p = 0; p < w.data().size(); ++p) w.data()[p] = al * u.data()[p] + be * v.data()[p];
    for (int level : {0, 1}) {
        GridField Cu = A.apply_C(u, level), Cv = A.apply_C(v, level), Cw = A.apply_C(w, level);
        GridField Du = A.apply_D(u, level), Dv = A.apply_D(v, level), Dw = A.apply_D(w, level);
        double ec = 0.0, ed = 0.0;
        for (std::size_t p = 0; p < w.data().size(); ++p) {
            ec = std::max(ec, std::fabs(Cw.data()[p] - al * Cu.data()[p] - be * Cv.data()[p]));
            ed = std::max(ed, std::fabs(Dw.data()[p] - al * Du.data()[p] - be * Dv.data()[p]));
        }
        CHECK(ec <= 1e-12);
        CHECK(ed <= 1e-12);
    }
    std::vector<std::vector<double>> y1(2, std::vector<double>(64)), y2 = y1, y3 = y1;
    for (int k = 0; k < 64; ++k)
        for (int j = 0; j < 2; ++j) {
            y1[j][k] = std::sin(g.time.time(k) + j);
            y2[j][k] = std::cos(3.0 * g.time.time(k));
            y3[j][k] = al * y1[j][k] + be * y2[j][k];
        }
    for (int level : {0, 1, 2}) {
        auto G1 = A.apply_G(level, y1), G2 = A.apply_G(level, y2), G3 = A.apply_G(level, y3);
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 64; ++k) CHECK(std::fabs(G3[j][k] - al * G1[j][k] - be * G2[j][k]) <= 1e-12);
    }
}

TEST_CASE("autonomous systems share one estimate across levels") {
    auto sys = make_diagonal_system(1, {Expr(1.0), Expr::parse("-(1 + x)")}, {{Expr(0.3), Expr(0.0)}, {Expr(0.0), Expr(0.2)}});
    ReflectionTerm a;
    a.k = 1;
    a.r = Expr(0.7);
    ReflectionTerm b;
    b.k = 0;
    b.r = Expr(0.5);
    OperatorAssembly A(sys, BoundaryOperator::general(2, {{a}, {b}}), periodic_grid(32, 64));
    NormReport nr = A.estimate_operator_norms();
    REQUIRE(nr.ops.size() == 3);
    CHECK_THAT(nr.ops[1].max, WithinAbs(nr.ops[0].max, 1e-12));
    CHECK_THAT(nr.ops[2].max, WithinAbs(nr.ops[0].max, 1e-12));
    CHECK(nr.ops[0].name == "G0");
}

TEST_CASE("periodic row bound with unit damping is e^-1") {
    auto sys = make_diagonal_system(1, {Expr(1.0), Expr(-1.0)}, {{Expr(1.0), Expr(0.0)}, {Expr(0.0), Expr(1.0)}});
    OperatorAssembly A(sys, BoundaryOperator::periodic(2), periodic_grid(32, 64));
    NormReport nr = A.estimate_operator_norms();
    CHECK(nr.periodic);
    CHECK(nr.ops[0].name == "H0");
    for (const auto& row : nr.ops[0].rows) CHECK_THAT(row.bound, WithinAbs(std::exp(-1.0), 1e-9));
}

TEST_CASE("periodic rows with negative damping are integrated from the outflow end") {
    auto sys = make_diagonal_system(1, {Expr(1.0), Expr(-1.0)}, {{Expr(-1.0), Expr(0.0)}, {Expr(0.0), Expr(1.0)}});
    OperatorAssembly A(sys, BoundaryOperator::periodic(2), periodic_grid(32, 64));
    CHECK(A.flipped(0));
    CHECK_FALSE(A.flipped(1));
    CHECK(A.source_col(0) == 32);
    NormReport nr = A.estimate_operator_norms();
    CHECK_THAT(nr.ops[0].rows[0].bound, WithinAbs(std::exp(-1.0), 1e-9));
}

TEST_CASE("mixed-sign damping has no periodic estimate") {
    auto sys = make_diagonal_system(1, {Expr(1.0)}, {{Expr::parse("sin(t)")}});
    OperatorAssembly A(sys, BoundaryOperator::periodic(1), periodic_grid(16, 64));
    try {
        A.estimate_operator_norms();
        FAIL("estimated a mixed-sign row");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MixedSignB);
    }
}

TEST_CASE("fields from another grid are refused") {
    auto sys = make_diagonal_system(1, {Expr(1.0)}, zeros(1));
    OperatorAssembly A(sys, BoundaryOperator::periodic(1), periodic_grid(16, 32));
    try {
        A.apply_C(GridField(1, periodic_grid(16, 64)));
        FAIL("accepted a foreign field");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::VersionMismatch);
    }
}
