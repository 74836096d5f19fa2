#include "linear_solver.hpp"

#include <cmath>

#include "error.hpp"
#include "parallel.hpp"

namespace charstrip {

LinearData expression_data(const std::vector<Expr>& g, const std::vector<Expr>& h) {
    for (auto& e : g)
        if (e.free_vars() & ~kMaskXT) fail(ErrorCode::InvalidArgument, "source terms may only use x and t: " + e.render());
    for (auto& e : h)
        if (e.free_vars() & ~kMaskT) fail(ErrorCode::InvalidArgument, "boundary data may only use t: " + e.render());
    std::vector<Expr> dg, dh;
    for (auto& e : g) dg.push_back(e.derivative(var::t));
    for (auto& e : h) dh.push_back(e.derivative(var::t));
    auto src = [](std::vector<Expr> es) {
        return SourceFn([es = std::move(es)](int j, double x, double t) {
            double s[2] = {x, t};
            return es[j].eval_unchecked(s);
        });
    };
    auto bnd = [](std::vector<Expr> es) {
        return BoundaryDataFn([es = std::move(es)](int j, double t) {
            double s[2] = {0.0, t};
            return es[j].eval_unchecked(s);
        });
    };
    return {src(g), bnd(h), src(dg), bnd(dh)};
}

LinearData zero_data() {
    auto z3 = [](int, double, double) { return 0.0; };
    auto z2 = [](int, double) { return 0.0; };
    return {z3, z2, z3, z2};
}

namespace {

// The first ratio compares against the zero initial guess and is skipped when
// later ones exist.
double measured_ratio(const std::vector<double>& res, double scale) {
    double r = 0.0;
    for (std::size_t k = res.size() > 2 ? 1 : 0; k + 1 < res.size(); ++k)
        if (res[k] > 0.0 && res[k + 1] > 1e-13 * scale) r = std::max(r, res[k + 1] / res[k]);
    return r;
}

/// Tracks residuals and raises NonContraction / ToleranceNotReached.
struct Monitor {
    const SolveOptions& opts;
    const char* what;
    std::vector<double>& res;
    int rising = 0;

    bool done(double r) {
        res.push_back(r);
        if (!std::isfinite(r)) fail(ErrorCode::NonContraction, std::string(what) + ": residual is not finite");
        if (r < opts.tol) return true;
        const std::size_t k = res.size() - 1;
        if (k >= 1 && r >= res[k - 1]) ++rising;
        else rising = 0;
        if (rising >= opts.patience)
            fail(ErrorCode::NonContraction, std::string(what) + ": residual ratio >= 1 for " +
                                                std::to_string(opts.patience) + " consecutive iterations");
        if (static_cast<int>(res.size()) >= opts.max_iter) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "%s: residual %.3e after %d iterations", what, r, opts.max_iter);
            fail(ErrorCode::ToleranceNotReached, buf);
        }
        return false;
    }
};

double sup_traces_diff(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
    double m = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j)
        for (std::size_t k = 0; k < a[j].size(); ++k) m = std::max(m, std::fabs(a[j][k] - b[j][k]));
    return m;
}

/// Fixed point of u = C_l u + D_l u + F.
IterationLog fixed_point(const OperatorAssembly& A, int level, const GridField& F, bool trace_route,
                         const SolveOptions& opts, GridField& u) {
    IterationLog log;
    Monitor mon{opts, level == 0 ? "solve" : "derivative solve", log.residuals};
    u = GridField(A.n(), A.grid());
    SolveOptions inner_opts = opts;
    inner_opts.tol = 0.1 * opts.tol;
    std::vector<std::vector<double>> y;  // trace iterate, reused across outer steps
    for (;;) {
        GridField next = F;
        if (!trace_route) {
            A.add_D(u, level, next);
            GridField cu = A.apply_C(u, level);
            for (std::size_t p = 0; p < next.data().size(); ++p) next.data()[p] += cu.data()[p];
        } else {
            A.add_D(u, level, next);  // next = D u + F = r
            std::vector<std::vector<double>> rt(A.n());
            for (int j = 0; j < A.n(); ++j) {
                auto c = next.column(j, A.far_col(j));
                rt[j].assign(c.begin(), c.end());
            }
            if (y.empty()) y = rt;
            std::vector<double> inner_res;
            Monitor inner{inner_opts, "boundary-trace solve", inner_res};
            for (;;) {
                auto gy = A.apply_G(level, y);
                for (int j = 0; j < A.n(); ++j)
                    for (std::size_t k = 0; k < gy[j].size(); ++k) gy[j][k] += rt[j][k];
                double r = sup_traces_diff(gy, y);
                y = std::move(gy);
                ++log.inner_iterations;
                if (inner.done(r)) break;
            }
            std::vector<std::span<const double>> ys(y.begin(), y.end());
            GridField cy = A.apply_C_values(A.boundary_values(level, ys), level);
            for (std::size_t p = 0; p < next.data().size(); ++p) next.data()[p] += cy.data()[p];
        }
        double r = next.sup_diff(u);
        u = std::move(next);
        ++log.iterations;
        if (opts.progress) opts.progress(log.iterations, r);
        if (mon.done(r)) break;
    }
    log.contraction_ratio = measured_ratio(log.residuals, 1.0 + u.sup_norm());
    return log;
}

GridField multiply_q(const GridField& q, const GridField& u) {
    const int n = u.components();
    GridField v(n, u.grid());
    for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s)
            for (std::size_t p = 0; p < u.grid().nodes(); ++p)
                v.data()[r * u.grid().nodes() + p] += q.data()[(r * n + s) * u.grid().nodes() + p] *
                                                      u.data()[s * u.grid().nodes() + p];
    return v;
}

}  // namespace

SolveReport solve_linear(const OperatorAssembly& A, const LinearData& data, const SolveOptions& opts,
                         const ConditionReport* conditions) {
    SolveReport rep;
    rep.conditions = conditions ? *conditions : check_conditions(A, opts.margin);
    const auto& cond = rep.conditions;
    if (!cond.bc_solvable) {
        if (!opts.allow_unverified)
            fail(ErrorCode::ValidationFailed, "none of the dissipativity conditions holds; solve refused");
        rep.warnings.push_back("dissipativity conditions fail; solving without a contraction certificate");
    }
    const bool trace_route = !cond.B1 && (cond.B2 || cond.B3);
    rep.route = trace_route ? "trace-presolve" : "picard";
    GridField F = A.apply_F(data.g, data.h, 0);
    rep.log = fixed_point(A, 0, F, trace_route, opts, rep.u);
    if (!rep.u.all_finite()) fail(ErrorCode::NonContraction, "solution contains non-finite values");

    const Grid& g = A.grid();
    for (int j = 0; j < A.n(); ++j)
        for (int k = 0; k < g.nt(); ++k) {
            const double t = g.time.time(k);
            rep.h_sup = std::max(rep.h_sup, std::fabs(data.h(j, t)));
            for (int i = 0; i <= g.nx; ++i) rep.g_sup = std::max(rep.g_sup, std::fabs(data.g(j, g.x(i), t)));
        }
    rep.u_sup = rep.u.sup_norm();
    rep.F_bound = A.F_bound();
    double factor = 1.0;
    if (trace_route && cond.norms) {
        double g0 = cond.norms->ops[0].max;
        factor = g0 < 1.0 ? 1.0 + cond.R_max / (1.0 - g0) : INFINITY;
    }
    const double ratio = rep.log.contraction_ratio;
    rep.K = ratio < 1.0 ? rep.F_bound * factor / (1.0 - ratio) : INFINITY;
    rep.apriori_ok = rep.u_sup <= rep.K * (rep.g_sup + rep.h_sup) * (1.0 + 1e-9) + 1e-14;
    if (A.system().q) rep.v = multiply_q(*A.system().q, rep.u);
    return rep;
}

DerivativeReport solve_derivative_field(const OperatorAssembly& A, const LinearData& data, const GridField& u,
                                        const SolveOptions& opts, const ConditionReport* conditions) {
    A.require_conforming(u);
    if (!data.dt_g || !data.dt_h) fail(ErrorCode::InvalidArgument, "derivative solve needs d/dt of g and h");
    ConditionReport local;
    if (!conditions) {
        local = check_conditions(A, opts.margin);
        conditions = &local;
    }
    DerivativeReport rep;
    rep.certified = conditions->norm1;
    if (!rep.certified) rep.flags.push_back("RegularityUncertified");

    const int n = A.n();
    const auto& model = A.system().model();
    // h1 = R' z + h' on the time grid
    const TimeGrid& tg = A.grid().time;
    BoundaryPlan prime_plan(A.boundary().derived(Derived::Rprime), tg);
    std::vector<std::vector<double>> h1;
    prime_plan.apply(A.far_traces(u), h1);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < tg.size(); ++k) h1[j][k] += data.dt_h(j, tg.time(k));
    BoundaryDataFn h1fn = [&](int j, double t) { return interp_linear(h1[j], tg.locate(t)); };
    // g1 = d_t g - (d_t b) u - (d_t a / a)(g - b u)
    SourceFn g1 = [&](int j, double x, double t) {
        double bu = 0.0, dbu = 0.0;
        for (int k = 0; k < n; ++k) {
            if (!model.coupling_present(j, k)) continue;
            double uk = u.at(k, x, t);
            bu += model.coupling(j, k, x, t) * uk;
            dbu += model.dt_coupling(j, k, x, t) * uk;
        }
        double a = model.speed(j, x, t);
        return data.dt_g(j, x, t) - dbu - model.dt_speed(j, x, t) / a * (data.g(j, x, t) - bu);
    };
    GridField F1 = A.apply_F(g1, h1fn, 1);
    const bool trace_route = !conditions->B1 && (conditions->B2 || conditions->B3);
    rep.log = fixed_point(A, 1, F1, trace_route, opts, rep.w);
    if (A.system().q && A.system().q_inv && A.system().dt_q) {
        GridField qdq(n * n, A.grid());
        const auto& qi = *A.system().q_inv;
        const auto& dq = *A.system().dt_q;
        const std::size_t N = A.grid().nodes();
        for (int r = 0; r < n; ++r)
            for (int s = 0; s < n; ++s)
                for (int l = 0; l < n; ++l)
                    for (std::size_t p = 0; p < N; ++p)
                        qdq.data()[(r * n + s) * N + p] += qi.data()[(r * n + l) * N + p] * dq.data()[(l * n + s) * N + p];
        GridField wq = multiply_q(qdq, u);
        for (std::size_t p = 0; p < wq.data().size(); ++p) wq.data()[p] += rep.w.data()[p];
        rep.w_q = std::move(wq);
    }
    return rep;
}

PeriodicityResult verify_periodicity(const GridField& u, double T) {
    PeriodicityResult r;
    const TimeGrid& tg = u.grid().time;
    if (tg.periodic()) {
        r.skipped = true;
        return r;
    }
    if (!(T > 0.0)) fail(ErrorCode::InvalidArgument, "period must be positive");
    r.t_from = tg.t_lo() + tg.spin_up();
    r.t_to = tg.t_hi() - T;
    if (tg.t_hi() - tg.t_lo() < 2.0 * T - 1e-12 || r.t_to < r.t_from)
        fail(ErrorCode::WindowTooShort, "window must span two periods beyond the spin-up margin");
    const double eps = 1e-9 * tg.step();
    for (int c = 0; c < u.components(); ++c)
        for (int i = 0; i <= u.grid().nx; ++i) {
            auto col = u.column(c, i);
            for (int k = 0; k < tg.size(); ++k) {
                double t = tg.time(k);
                if (t < r.t_from - eps || t > r.t_to + eps) continue;
                double shifted = interp_linear(col, tg.locate(t + T));
                r.defect = std::max(r.defect, std::fabs(shifted - col[k]));
            }
        }
    return r;
}

}  // namespace charstrip
