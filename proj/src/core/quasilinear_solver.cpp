#include "quasilinear_solver.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "error.hpp"
#include "parallel.hpp"

namespace charstrip {

namespace {

// Matrices of the quasilinear system evaluated on the grid at the state V.
struct FrozenMatrices {
    GridField A, B;  // n*n components, row-major
};

FrozenMatrices freeze(const QuasilinearSystem& qs, const GridField& V) {
    const int n = qs.n;
    const Grid& g = V.grid();
    FrozenMatrices fm{GridField(n * n, g), GridField(n * n, g)};
    parallel_for(0, g.nx + 1, [&](int i) {
        double slots[var::count] = {};
        slots[var::x] = g.x(i);
        for (int k = 0; k < g.nt(); ++k) {
            slots[var::t] = g.time.time(k);
            for (int l = 0; l < n; ++l) slots[var::V(l + 1)] = V(l, i, k);
            for (int c = 0; c < n * n; ++c) {
                fm.A(c, i, k) = qs.A[c].eval_unchecked(slots);
                fm.B(c, i, k) = qs.B[c].eval_unchecked(slots);
            }
        }
    });
    return fm;
}

GridField eval_on_grid(const std::vector<Expr>& es, const Grid& g) {
    GridField out(static_cast<int>(es.size()), g);
    for (int c = 0; c < out.components(); ++c)
        for (int i = 0; i <= g.nx; ++i)
            for (int k = 0; k < g.nt(); ++k) {
                double s[2] = {g.x(i), g.time.time(k)};
                out(c, i, k) = es[c].eval_unchecked(s);
            }
    return out;
}

// out_r = sum_s M_rs v_s per node, M with n*n components
GridField matvec(const GridField& M, const GridField& v) {
    const int n = v.components();
    const std::size_t N = v.grid().nodes();
    GridField out(n, v.grid());
    for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s) {
            const double* m = M.data().data() + (r * n + s) * N;
            const double* x = v.data().data() + s * N;
            double* o = out.data().data() + r * N;
            for (std::size_t p = 0; p < N; ++p) o[p] += m[p] * x[p];
        }
    return out;
}

SourceFn field_source(std::shared_ptr<const GridField> f) {
    return [f](int j, double x, double t) { return f->at(j, x, t); };
}

// Grid times outside the spin-up region of a window.
bool diagnostic_time(const TimeGrid& tg, int k) {
    return tg.periodic() || tg.time(k) >= tg.t_lo() + tg.spin_up() - 1e-12;
}

double data_norm(const QuasilinearProblem& p) {
    double fs = 0.0, hs = 0.0;
    const Grid& g = p.grid;
    for (int k = 0; k < g.nt(); ++k) {
        const double t = g.time.time(k);
        for (std::size_t j = 0; j < p.h.size(); ++j) {
            double s[2] = {0.0, t};
            hs = std::max(hs, std::fabs(p.h[j].eval_unchecked(s)));
        }
        for (int i = 0; i <= g.nx; ++i)
            for (std::size_t j = 0; j < p.f.size(); ++j) {
                double s[2] = {g.x(i), t};
                fs = std::max(fs, std::fabs(p.f[j].eval_unchecked(s)));
            }
    }
    return fs + hs;
}

}  // namespace

double c1_distance(const GridField& a, const GridField& b) {
    if (a.components() != b.components() || !(a.grid() == b.grid()))
        fail(ErrorCode::VersionMismatch, "fields do not conform");
    const Grid& g = a.grid();
    const int nt = g.nt(), nx = g.nx;
    const bool per = g.time.periodic();
    double s0 = 0.0, st = 0.0, sx = 0.0;
    for (int c = 0; c < a.components(); ++c)
        for (int i = 0; i <= nx; ++i)
            for (int k = 0; k < nt; ++k) {
                const double d = a(c, i, k) - b(c, i, k);
                s0 = std::max(s0, std::fabs(d));
                if (k + 1 < nt || per) {
                    const int kn = (k + 1) % nt;
                    st = std::max(st, std::fabs(a(c, i, kn) - b(c, i, kn) - d) / g.time.step());
                }
                if (i < nx) sx = std::max(sx, std::fabs(a(c, i + 1, k) - b(c, i + 1, k) - d) / g.dx());
            }
    return s0 + st + sx;
}

QuasilinearReport solve_quasilinear(const QuasilinearProblem& P, const QuasilinearOptions& opts) {
    const QuasilinearSystem& qs = P.system;
    const int n = qs.n;
    if (n < 1 || static_cast<int>(qs.A.size()) != n * n || static_cast<int>(qs.B.size()) != n * n ||
        static_cast<int>(qs.Q.size()) != n * n || static_cast<int>(qs.eigen.size()) != n)
        fail(ErrorCode::InvalidArgument, "quasilinear system matrices have the wrong size");
    if (static_cast<int>(P.f.size()) != n || static_cast<int>(P.h.size()) != n)
        fail(ErrorCode::InvalidArgument, "f and h need n components");
    if (P.boundary.n() != n) fail(ErrorCode::InvalidArgument, "boundary operator and system disagree on n");
    const Grid& grid = P.grid;

    QuasilinearReport rep;
    rep.data_norm = data_norm(P);
    const double gate = opts.smallness * opts.lambda0;
    if (rep.data_norm > gate) {
        char buf[200];
        std::snprintf(buf, sizeof buf, "sup|f| + sup|h| = %.6g exceeds the smallness gate %.6g", rep.data_norm, gate);
        if (!opts.override_gate) fail(ErrorCode::SmallnessGate, buf);
        rep.warnings.push_back(std::string(buf) + " (gate overridden)");
    }

    const GridField fgrid = eval_on_grid(P.f, grid);
    std::vector<Expr> dtf_expr;
    for (auto& e : P.f) dtf_expr.push_back(e.derivative(var::t));
    const GridField dtf = eval_on_grid(dtf_expr, grid);

    DiagonalizeOptions dopts{opts.lambda0, opts.delta0};
    GridField V(n, grid), dtV(n, grid), dxV(n, grid);
    int growing = 0;
    for (int k = 0; k < opts.max_outer; ++k) {
        DiagonalSystem sys = diagonalize_at_state(qs, V, dtV, dxV, dopts);
        validate_hyperbolicity(sys, grid, opts.lambda0);
        OperatorAssembly A(sys, P.boundary, grid, opts.assembly);

        // g = Q^{-1} f and d_t g = Q^{-1} (d_t f - (d_t Q) Q^{-1} f)
        auto g = std::make_shared<GridField>(matvec(*sys.q_inv, fgrid));
        GridField tmp = matvec(*sys.dt_q, *g);
        for (std::size_t p = 0; p < tmp.data().size(); ++p) tmp.data()[p] = dtf.data()[p] - tmp.data()[p];
        auto dtg = std::make_shared<GridField>(matvec(*sys.q_inv, tmp));
        LinearData hdata = expression_data(std::vector<Expr>(n, Expr(0.0)), P.h);
        LinearData data{field_source(g), hdata.h, field_source(dtg), hdata.dt_h};

        ConditionReport cond = check_conditions(A, opts.linear.margin);
        if (k == 0) rep.linearized = cond;
        SolveReport lin = solve_linear(A, data, opts.linear, &cond);

        OuterStep step;
        step.k = k + 1;
        step.inner_iterations = lin.log.iterations;
        GridField Vn = lin.v ? std::move(*lin.v) : lin.u;
        step.sup_V = Vn.sup_norm();
        if (!(step.sup_V <= opts.delta0)) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "outer iterate %d has sup|V| = %.6g > delta0 = %.6g", k + 1, step.sup_V,
                          opts.delta0);
            fail(ErrorCode::StateLeftBox, buf);
        }

        // d_t V^{k+1} = (d_t Q) U + Q w
        GridField dtVn;
        bool from_w = false;
        if (opts.use_derivative_system && cond.norm1) {
            try {
                DerivativeReport d = solve_derivative_field(A, data, lin.u, opts.linear, &cond);
                dtVn = matvec(*sys.dt_q, lin.u);
                GridField qw = matvec(*sys.q, d.w);
                for (std::size_t p = 0; p < qw.data().size(); ++p) dtVn.data()[p] += qw.data()[p];
                from_w = true;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::NonContraction && e.code() != ErrorCode::ToleranceNotReached) throw;
                rep.warnings.push_back(std::string("outer ") + std::to_string(k + 1) +
                                       ": derivative system failed, using central differences: " + e.what());
            }
        }
        if (!from_w) dtVn = dt_central(Vn);
        step.derivative_source = from_w ? "w-system" : "central differences";

        // d_x V^{k+1} from the frozen equation: A d_x V = f - B V - d_t V
        FrozenMatrices fm = freeze(qs, V);
        GridField dxVn(n, grid);
        {
            GridField BV = matvec(fm.B, Vn);
            const std::size_t N = grid.nodes();
            parallel_for(0, static_cast<int>(N), [&](int pi) {
                const std::size_t p = static_cast<std::size_t>(pi);
                Eigen::MatrixXd Am(n, n);
                Eigen::VectorXd rhs(n);
                for (int r = 0; r < n; ++r) {
                    for (int s = 0; s < n; ++s) Am(r, s) = fm.A.data()[(r * n + s) * N + p];
                    rhs(r) = fgrid.data()[r * N + p] - BV.data()[r * N + p] - dtVn.data()[r * N + p];
                }
                Eigen::VectorXd sol = Am.partialPivLu().solve(rhs);
                for (int r = 0; r < n; ++r) dxVn.data()[r * N + p] = sol(r);
            });
        }

        step.c0_increment = Vn.sup_diff(V);
        step.c1_increment = c1_distance(Vn, V);
        if (!rep.steps.empty()) {
            const double prev = rep.steps.back().c1_increment;
            rep.ratios.push_back(prev > 0.0 ? step.c1_increment / prev : 0.0);
            growing = step.c1_increment > prev ? growing + 1 : 0;
        }
        V = std::move(Vn);
        dtV = std::move(dtVn);
        dxV = std::move(dxVn);
        rep.U = std::move(lin.u);
        rep.steps.push_back(step);
        if (opts.progress) opts.progress(step);
        if (!V.all_finite()) fail(ErrorCode::OuterDivergence, "outer iterate is not finite");
        if (step.c1_increment < opts.tol) {
            rep.converged = true;
            break;
        }
        if (growing >= opts.divergence_patience)
            fail(ErrorCode::OuterDivergence, "C1 increments grew for " + std::to_string(growing) +
                                                 " consecutive outer iterations");
    }
    rep.V = std::move(V);
    rep.dtV = std::move(dtV);
    rep.dxV = std::move(dxV);
    if (!rep.converged) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "outer iteration: C1 increment %.3e after %d iterations",
                      rep.steps.empty() ? 0.0 : rep.steps.back().c1_increment, opts.max_outer);
        fail(ErrorCode::ToleranceNotReached, buf);
    }
    if (opts.period) rep.periodicity = verify_periodicity(rep.V, *opts.period);
    return rep;
}

double pde_residual(const QuasilinearProblem& P, const GridField& V) {
    const int n = P.system.n;
    const Grid& g = V.grid();
    GridField Vt = dt_central(V), Vx = dx_central(V);
    FrozenMatrices fm = freeze(P.system, V);
    GridField f = eval_on_grid(P.f, g);
    GridField AVx = matvec(fm.A, Vx), BV = matvec(fm.B, V);
    double r = 0.0;
    for (int c = 0; c < n; ++c)
        for (int i = 0; i <= g.nx; ++i)
            for (int k = 0; k < g.nt(); ++k) {
                if (!diagnostic_time(g.time, k)) continue;
                r = std::max(r, std::fabs(Vt(c, i, k) + AVx(c, i, k) + BV(c, i, k) - f(c, i, k)));
            }
    return r;
}

double boundary_residual(const QuasilinearProblem& P, const GridField& V) {
    const QuasilinearSystem& qs = P.system;
    const int n = qs.n;
    const Grid& g = V.grid();
    const int nt = g.nt();
    // U at the two ends
    std::vector<std::vector<double>> U0(n, std::vector<double>(nt)), U1(n, std::vector<double>(nt));
    Eigen::MatrixXd Qm(n, n);
    Eigen::VectorXd v(n);
    double slots[var::count] = {};
    for (int end = 0; end < 2; ++end) {
        const int i = end == 0 ? 0 : g.nx;
        slots[var::x] = g.x(i);
        for (int k = 0; k < nt; ++k) {
            slots[var::t] = g.time.time(k);
            for (int l = 0; l < n; ++l) {
                slots[var::V(l + 1)] = V(l, i, k);
                v(l) = V(l, i, k);
            }
            for (int c = 0; c < n * n; ++c) Qm(c / n, c % n) = qs.Q[c].eval_unchecked(slots);
            Eigen::VectorXd u = Qm.partialPivLu().solve(v);
            for (int l = 0; l < n; ++l) (end == 0 ? U0 : U1)[l][k] = u(l);
        }
    }
    std::vector<std::span<const double>> Z;
    for (int j = 0; j < n; ++j) Z.push_back(j < qs.m ? std::span<const double>(U1[j]) : std::span<const double>(U0[j]));
    BoundaryPlan plan(P.boundary, g.time);
    std::vector<std::vector<double>> RZ;
    plan.apply(Z, RZ);
    double r = 0.0;
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < nt; ++k) {
            if (!diagnostic_time(g.time, k)) continue;
            double s[2] = {0.0, g.time.time(k)};
            const double inflow = j < qs.m ? U0[j][k] : U1[j][k];
            r = std::max(r, std::fabs(inflow - RZ[j][k] - P.h[j].eval_unchecked(s)));
        }
    return r;
}

PerturbationReport perturbation_experiment(const std::function<GridField(double)>& solve, double eps) {
    PerturbationReport r;
    r.eps = eps;
    GridField base = solve(0.0);
    if (eps == 0.0) return r;
    r.delta = solve(eps).sup_diff(base);
    r.delta_tenth = solve(eps / 10.0).sup_diff(base);
    r.ratio = r.delta_tenth > 0.0 ? r.delta / r.delta_tenth : INFINITY;
    return r;
}

std::vector<Expr> perturb_speeds(const std::vector<Expr>& speeds, double eps) {
    std::vector<Expr> out;
    const Expr bump = Expr(eps) * sin(Expr::variable(var::t));
    for (auto& a : speeds) out.push_back(eps == 0.0 ? a : a + bump);
    return out;
}

QuasilinearProblem perturb_speeds(const QuasilinearProblem& problem, double eps) {
    QuasilinearProblem p = problem;
    if (eps == 0.0) return p;
    const Expr bump = Expr(eps) * sin(Expr::variable(var::t));
    const int n = p.system.n;
    for (int j = 0; j < n; ++j) {
        p.system.A[j * n + j] = p.system.A[j * n + j] + bump;
        p.system.eigen[j] = p.system.eigen[j] + bump;
    }
    return p;
}

}  // namespace charstrip
