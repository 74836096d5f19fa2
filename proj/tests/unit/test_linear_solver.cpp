#include <cmath>

#include "catch_amalgamated.hpp"
#include "error.hpp"
#include "linear_solver.hpp"

using namespace charstrip;
using Catch::Matchers::WithinAbs;

namespace {

constexpr double kKappa = 1.28232856117749552;

Grid periodic_grid(int nx, int nt) { return Grid(nx, TimeGrid(Periodic{2.0 * M_PI}, nt)); }

BoundaryOperator reflect(double r) {
    ReflectionTerm term;
    term.k = 0;
    term.r = Expr(r);
    return BoundaryOperator::general(1, {{term}});
}

// u_t + u_x + u = g, u(0,t) = 0.5 u(1,t) + h, exact solution x sin t.
struct Manufactured {
    DiagonalSystem sys = make_diagonal_system(1, {Expr(1.0)}, {{Expr(1.0)}});
    LinearData data = expression_data({Expr::parse("x*cos(t) + sin(t) + x*sin(t)")}, {Expr::parse("-0.5*sin(t)")});

    double error(const GridField& u) const {
        const Grid& g = u.grid();
        double e = 0.0;
        for (int i = 0; i <= g.nx; ++i)
            for (int k = 0; k < g.nt(); ++k) e = std::max(e, std::fabs(u(0, i, k) - g.x(i) * std::sin(g.time.time(k))));
        return e;
    }
};

DiagonalSystem loss_of_smoothness() {
    return make_diagonal_system(1, {Expr::parse("2/(4*pi-1)"), Expr::parse("-(2+sin(t))")},
                                {{Expr(0.0), Expr(0.0)}, {Expr(0.0), Expr(0.0)}});
}

BoundaryOperator critical_reflections(double r2, double product) {
    ReflectionTerm a;
    a.k = 1;
    a.r = Expr(product / (r2 * kKappa)) + Expr(0.05) * sin(Expr::variable(var::t) - Expr(0.25));
    ReflectionTerm b;
    b.k = 0;
    b.r = Expr(r2);
    return BoundaryOperator::general(2, {{a}, {b}});
}

}  // namespace

TEST_CASE("zero data gives the zero solution at once") {
    Manufactured m;
    OperatorAssembly A(m.sys, reflect(0.5), periodic_grid(16, 16));
    auto rep = solve_linear(A, zero_data());
    CHECK(rep.u.sup_norm() == 0.0);
    CHECK(rep.log.iterations == 1);
    auto d = solve_derivative_field(A, zero_data(), rep.u);
    CHECK(d.w.sup_norm() == 0.0);
}

TEST_CASE("manufactured solution converges at second order") {
    Manufactured m;
    SolveOptions so;
    so.tol = 1e-13;
    double err[3];
    int idx = 0;
    for (int n : {64, 128, 256}) {
        OperatorAssembly A(m.sys, reflect(0.5), periodic_grid(n, n));
        auto rep = solve_linear(A, m.data, so);
        err[idx++] = m.error(rep.u);
        CHECK(rep.route == "picard");
        CHECK(rep.conditions.B1);
        CHECK(rep.log.contraction_ratio <= rep.conditions.B1_lhs_max + 0.05);
        CHECK(rep.apriori_ok);
    }
    INFO("errors " << err[0] << " " << err[1] << " " << err[2]);
    CHECK(std::log2(err[0] / err[1]) >= 1.8);
    CHECK(std::log2(err[1] / err[2]) >= 1.8);
}

TEST_CASE("derivative field matches finite differences of u") {
    Manufactured m;
    SolveOptions so;
    so.tol = 1e-12;
    Grid g = periodic_grid(512, 512);
    OperatorAssembly A(m.sys, reflect(0.5), g);
    auto rep = solve_linear(A, m.data, so);
    auto d = solve_derivative_field(A, m.data, rep.u, so, &rep.conditions);
    CHECK(d.certified);
    GridField fd = dt_central(rep.u);
    CHECK(d.w.sup_diff(fd) <= 5e-2);
    double exact = 0.0;
    for (int i = 0; i <= g.nx; i += 8)
        for (int k = 0; k < g.nt(); ++k)
            exact = std::max(exact, std::fabs(d.w(0, i, k) - g.x(i) * std::cos(g.time.time(k))));
    CHECK(exact <= 1e-3);
}

TEST_CASE("trace value of the critical loss-of-smoothness problem") {
    const double r2 = 0.9;
    const double r1 = 1.0 / (r2 * kKappa);
    const double exact = r2 * (4.0 * M_PI - 1.0) / (2.0 * (1.0 - r2 * r1));
    CHECK_THAT(exact, WithinAbs(23.6403617712, 1e-9));
    OperatorAssembly A(loss_of_smoothness(), critical_reflections(r2, 1.0), periodic_grid(256, 4096));
    SolveOptions so;
    so.tol = 1e-12;
    auto rep = solve_linear(A, expression_data({Expr(1.0), Expr(0.0)}, {Expr(0.0), Expr(0.0)}), so);
    const double u2 = interp_linear(rep.u.column(1, 0), A.grid().time.locate(0.25));
    CHECK_THAT(u2, WithinAbs(exact, 1e-4));
}

TEST_CASE("the critical derivative system does not contract") {
    OperatorAssembly A(loss_of_smoothness(), critical_reflections(0.9, 1.0), periodic_grid(32, 1024));
    LinearData data = expression_data({Expr(1.0), Expr(0.0)}, {Expr(0.0), Expr(0.0)});
    SolveOptions so;
    so.tol = 1e-12;
    auto rep = solve_linear(A, data, so);
    try {
        auto d = solve_derivative_field(A, data, rep.u, so, &rep.conditions);
        FAIL("derivative solve finished after " << d.log.iterations << " sweeps, ratio " << d.log.contraction_ratio);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonContraction);
    }
}

TEST_CASE("iteration limits raise ToleranceNotReached") {
    Manufactured m;
    OperatorAssembly A(m.sys, reflect(0.5), periodic_grid(16, 16));
    SolveOptions so;
    so.tol = 1e-15;
    so.max_iter = 3;
    try {
        solve_linear(A, m.data, so);
        FAIL("converged in three sweeps");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ToleranceNotReached);
    }
}

TEST_CASE("an expanding reflection is refused before iterating") {
    auto sys = make_diagonal_system(1, {Expr(1.0)}, {{Expr(0.0)}});
    OperatorAssembly A(sys, reflect(1.5), periodic_grid(16, 16));
    try {
        solve_linear(A, expression_data({Expr::parse("sin(t)")}, {Expr(0.0)}));
        FAIL("solved without a certificate");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ValidationFailed);
    }
}

TEST_CASE("periodicity defect") {
    Manufactured m;
    OperatorAssembly P(m.sys, reflect(0.5), periodic_grid(16, 32));
    auto pr = verify_periodicity(solve_linear(P, m.data).u, 2.0 * M_PI);
    CHECK(pr.skipped);
    CHECK(pr.defect == 0.0);

    auto sys = make_diagonal_system(1, {Expr::parse("1 + 0.2*sin(t)")}, {{Expr::parse("3 + 0.5*cos(t)")}});
    Grid win(64, TimeGrid(Window{0.0, 6.0 * M_PI, 2.0 * M_PI}, 1537));
    OperatorAssembly W(sys, reflect(0.5), win);
    SolveOptions so;
    so.tol = 1e-12;
    auto per = solve_linear(W, expression_data({Expr::parse("0.3*cos(t)")}, {Expr::parse("sin(t)")}), so);
    auto d = verify_periodicity(per.u, 2.0 * M_PI);
    CHECK_FALSE(d.skipped);
    CHECK(d.defect <= 10.0 * so.tol);

    auto aper = solve_linear(W, expression_data({Expr(0.0)}, {Expr::parse("sin(t) + sin(sqrt(2)*t)")}), so);
    CHECK(verify_periodicity(aper.u, 2.0 * M_PI).defect > 0.1);
}
