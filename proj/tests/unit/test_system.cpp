#include <array>
#include <cmath>

#include "catch_amalgamated.hpp"
#include "error.hpp"
#include "system.hpp"

using namespace charstrip;
using Catch::Matchers::WithinAbs;

namespace {

std::vector<std::vector<Expr>> zeros(int n) { return std::vector<std::vector<Expr>>(n, std::vector<Expr>(n, Expr(0.0))); }

Grid periodic_grid(int nx, int nt) { return Grid(nx, TimeGrid(Periodic{2.0 * M_PI}, nt)); }

ErrorCode validation_code(const DiagonalSystem& sys, const Grid& g, double lambda0) {
    try {
        validate_hyperbolicity(sys, g, lambda0);
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::ResourceLimit;  // stands for "no error"
}

}  // namespace

TEST_CASE("hyperbolicity of the loss-of-smoothness speeds") {
    auto sys = make_diagonal_system(1, {Expr::parse("2/(4*pi-1)"), Expr::parse("-(2+sin(t))")}, zeros(2));
    auto rep = validate_hyperbolicity(sys, periodic_grid(16, 256), 0.1);
    CHECK(rep.passed);
    CHECK_THAT(rep.min_speed_margin, WithinAbs(2.0 / (4.0 * M_PI - 1.0), 1e-12));
    CHECK(rep.min_gap >= 1.17);
}

TEST_CASE("hyperbolicity of constant opposite speeds") {
    auto sys = make_diagonal_system(1, {Expr(1.0), Expr(-1.0)}, zeros(2));
    auto rep = validate_hyperbolicity(sys, periodic_grid(8, 8), 0.5);
    CHECK(rep.passed);
    CHECK(rep.min_gap == 2.0);
}

TEST_CASE("a speed that changes sign fails validation") {
    auto sys = make_diagonal_system(1, {Expr::parse("sin(t)"), Expr(-1.0)}, zeros(2));
    CHECK(validation_code(sys, periodic_grid(8, 64), 0.1) == ErrorCode::ValidationFailed);
    auto rep = measure_hyperbolicity(sys, periodic_grid(8, 64), 0.1);
    CHECK_FALSE(rep.passed);
    CHECK_FALSE(rep.issues.empty());
}

TEST_CASE("expression coefficients carry symbolic time derivatives") {
    auto sys = make_diagonal_system(1, {Expr::parse("1 + x*sin(t)/4")}, {{Expr::parse("t*x")}});
    CHECK_THAT(sys.model().dt_speed(0, 0.5, 1.0), WithinAbs(0.5 * std::cos(1.0) / 4, 1e-15));
    CHECK_THAT(sys.model().dt_coupling(0, 0, 0.5, 1.0), WithinAbs(0.5, 1e-15));
    CHECK_FALSE(sys.model().speeds_autonomous());
    auto aut = make_diagonal_system(1, {Expr::parse("1 + x")}, {{Expr(0.0)}});
    CHECK(aut.model().speeds_autonomous());
    CHECK_FALSE(aut.model().coupling_present(0, 0));
}

TEST_CASE("linearization at zero with identity Q reproduces A and B") {
    QuasilinearSystem qs;
    qs.n = 2;
    qs.m = 1;
    const VarMask mask = kMaskXT | state_mask(2);
    qs.A = {Expr::parse("1 + V1 + x", mask), Expr(0.0), Expr(0.0), Expr::parse("-2 + V2*t", mask)};
    qs.eigen = {qs.A[0], qs.A[3]};
    qs.B = {Expr::parse("0.3 + V1", mask), Expr::parse("sin(t)", mask), Expr(0.0), Expr::parse("x", mask)};
    qs.Q = {Expr(1.0), Expr(0.0), Expr(0.0), Expr(1.0)};
    Grid g = periodic_grid(8, 16);
    GridField z(2, g);
    auto sys = diagonalize_at_state(qs, z, z, z, {});
    CHECK(sys.q);
    for (double x : {0.0, 0.5, 1.0})
        for (int k : {0, 5}) {
            double t = g.time.time(k);
            CHECK_THAT(sys.model().speed(0, x, t), WithinAbs(1.0 + x, 1e-14));
            CHECK_THAT(sys.model().speed(1, x, t), WithinAbs(-2.0, 1e-14));
            CHECK_THAT(sys.model().coupling(0, 0, x, t), WithinAbs(0.3, 1e-14));
            CHECK_THAT(sys.model().coupling(0, 1, x, t), WithinAbs(std::sin(t), 1e-14));
            CHECK_THAT(sys.model().coupling(1, 1, x, t), WithinAbs(x, 1e-14));
        }
}

TEST_CASE("scalar state-dependent speed frozen at a constant state") {
    QuasilinearSystem qs;
    qs.n = 1;
    qs.m = 1;
    qs.A = {Expr::parse("1 + V1", state_mask(1))};
    qs.eigen = qs.A;
    qs.B = {Expr(0.0)};
    qs.Q = {Expr(1.0)};
    Grid g = periodic_grid(8, 16);
    GridField V(1, g, 0.5), z(1, g);
    auto sys = diagonalize_at_state(qs, V, z, z, {});
    CHECK_THAT(sys.model().speed(0, 0.3, 0.7), WithinAbs(1.5, 1e-14));
    CHECK_THAT(sys.model().coupling(0, 0, 0.3, 0.7), WithinAbs(0.0, 1e-14));
}

TEST_CASE("rotating eigenbasis: b equals Q^-1 (Q_t + A Q_x) against finite differences") {
    QuasilinearSystem qs;
    qs.n = 2;
    qs.m = 1;
    qs.A = {Expr(1.0), Expr(0.0), Expr(0.0), Expr(-2.0)};
    qs.eigen = {Expr(1.0), Expr(-2.0)};
    qs.B = {Expr(0.0), Expr(0.0), Expr(0.0), Expr(0.0)};
    qs.Q = {Expr::parse("cos(0.1*x)"), Expr::parse("-sin(0.1*x)"), Expr::parse("sin(0.1*x)"), Expr::parse("cos(0.1*x)")};
    Grid g = periodic_grid(16, 16);
    GridField z(2, g);
    auto sys = diagonalize_at_state(qs, z, z, z, {});
    auto Q = [](double x) {
        double c = std::cos(0.1 * x), s = std::sin(0.1 * x);
        return std::array<double, 4>{c, -s, s, c};
    };
    const double h = 1e-5;
    for (int i : {0, 5, 16}) {
        const double x = g.x(i);
        auto qp = Q(x + h), qm = Q(x - h), q = Q(x);
        double dq[4];
        for (int c = 0; c < 4; ++c) dq[c] = (qp[c] - qm[c]) / (2 * h);
        const double A[2] = {1.0, -2.0};
        double m[4];  // A dQ/dx
        for (int c = 0; c < 4; ++c) m[c] = A[c / 2] * dq[c];
        const double det = q[0] * q[3] - q[1] * q[2];
        const double inv[4] = {q[3] / det, -q[1] / det, -q[2] / det, q[0] / det};
        for (int r = 0; r < 2; ++r)
            for (int s = 0; s < 2; ++s) {
                double want = inv[r * 2] * m[s] + inv[r * 2 + 1] * m[2 + s];
                CHECK_THAT(sys.model().coupling(r, s, x, 0.3), WithinAbs(want, 1e-6));
            }
    }
}

TEST_CASE("states outside the box and singular Q are rejected") {
    QuasilinearSystem qs;
    qs.n = 1;
    qs.m = 1;
    qs.A = {Expr(1.0)};
    qs.eigen = qs.A;
    qs.B = {Expr(0.0)};
    qs.Q = {Expr::parse("V1", state_mask(1))};
    Grid g = periodic_grid(8, 8);
    GridField z(1, g), big(1, g, 2.0), tiny(1, g, 1e-6);
    try {
        diagonalize_at_state(qs, big, z, z, {1e-3, 1.0});
        FAIL("accepted a state outside the box");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::StateOutOfBox);
    }
    try {
        diagonalize_at_state(qs, tiny, z, z, {1e-3, 1.0});
        FAIL("accepted a singular Q");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SingularQ);
    }
}

TEST_CASE("central differences are second order") {
    Grid g = periodic_grid(32, 64);
    GridField f(1, g);
    for (int i = 0; i <= 32; ++i)
        for (int k = 0; k < 64; ++k) f(0, i, k) = std::sin(g.time.time(k)) * g.x(i) * g.x(i);
    GridField ft = dt_central(f), fx = dx_central(f);
    const double dt = g.time.step();
    for (int i : {0, 7, 32})
        for (int k : {0, 13, 63}) {
            double x = g.x(i), t = g.time.time(k);
            CHECK_THAT(ft(0, i, k), WithinAbs(std::cos(t) * x * x, dt * dt));
            CHECK_THAT(fx(0, i, k), WithinAbs(2 * x * std::sin(t), 1e-12));
        }
}
