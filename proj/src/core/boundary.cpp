#include "boundary.hpp"

#include <cmath>

#include "error.hpp"

namespace charstrip {

namespace {

bool is_zero(const Expr& e) { return e.is_constant() && e.constant_value() == 0.0; }

double eval_t(const Expr& e, double t, double tau = 0.0) {
    double s[3] = {0.0, t, tau};
    return e.eval_unchecked(s);
}

int panels(double horizon, double dt) { return std::max(1, static_cast<int>(std::ceil(horizon / dt - 1e-9))); }

}  // namespace

TraceFn sampled_traces(const std::vector<std::vector<double>>& z, const TimeGrid& grid, bool strict) {
    return [&z, grid, strict](int k, double t) {
        if (strict && !grid.periodic() && (t < grid.t_lo() - 1e-12 || t > grid.t_hi() + 1e-12)) {
            char buf[128];
            std::snprintf(buf, sizeof buf, "trace lookup at t = %.6g outside the window [%.6g, %.6g]", t, grid.t_lo(),
                          grid.t_hi());
            fail(ErrorCode::LookbackOutOfWindow, buf);
        }
        return interp_linear(z[k], grid.locate(t));
    };
}

BoundaryOperator BoundaryOperator::periodic(int n) {
    BoundaryOperator op;
    op.n_ = n;
    op.periodic_ = true;
    op.terms_.resize(n);
    for (int j = 0; j < n; ++j) {
        ReflectionTerm term;
        term.k = j;
        term.r = Expr(1.0);
        op.terms_[j].push_back(term);
    }
    op.build_rows();
    return op;
}

BoundaryOperator BoundaryOperator::general(int n, std::vector<std::vector<ReflectionTerm>> rows) {
    if (static_cast<int>(rows.size()) != n) fail(ErrorCode::InvalidArgument, "boundary operator needs n rows");
    for (auto& row : rows)
        for (auto& term : row) {
            if (term.k < 0 || term.k >= n) fail(ErrorCode::InvalidArgument, "boundary term column out of range");
            for (const Expr* e : {&term.r, &term.theta, &term.horizon})
                if (e->free_vars() & ~kMaskT)
                    fail(ErrorCode::InvalidArgument, "boundary coefficients may only use t: " + e->render());
            if (term.p.free_vars() & ~kMaskTTau)
                fail(ErrorCode::InvalidArgument, "boundary kernels may only use t and tau: " + term.p.render());
        }
    BoundaryOperator op;
    op.n_ = n;
    op.terms_ = std::move(rows);
    op.build_rows();
    return op;
}

void BoundaryOperator::build_rows() {
    rows_.assign(n_, {});
    for (int j = 0; j < n_; ++j)
        for (const auto& term : terms_[j]) {
            if (!is_zero(term.r)) rows_[j].points.push_back({term.k, term.r, term.theta});
            if (!is_zero(term.p) && !is_zero(term.horizon)) rows_[j].kernels.push_back({term.k, term.p, term.horizon});
        }
}

BoundaryOperator BoundaryOperator::prime() const {
    if (!family_) fail(ErrorCode::InvalidArgument, "R' is only defined for the reflection family");
    BoundaryOperator op;
    op.n_ = n_;
    op.periodic_ = false;
    op.family_ = false;
    op.rows_.assign(n_, {});
    const Expr tvar = Expr::variable(var::t);
    for (int j = 0; j < n_; ++j)
        for (const auto& term : terms_[j]) {
            Expr dr = term.r.derivative(var::t);
            if (!is_zero(dr)) op.rows_[j].points.push_back({term.k, dr, term.theta});
            if (is_zero(term.p) || is_zero(term.horizon)) continue;
            Expr edge = term.p.substitute(var::tau, term.horizon) * term.horizon.derivative(var::t);
            if (!is_zero(edge)) op.rows_[j].points.push_back({term.k, edge, term.horizon});
            Expr dp = term.p.derivative(var::t);
            if (!is_zero(dp)) op.rows_[j].kernels.push_back({term.k, dp, term.horizon});
        }
    return op;
}

BoundaryOperator BoundaryOperator::tilde() const {
    if (!family_) fail(ErrorCode::InvalidArgument, "R~ is only defined for the reflection family");
    BoundaryOperator op = *this;
    for (auto& row : op.terms_)
        for (auto& term : row) term.r = term.r * (Expr(1.0) - term.theta.derivative(var::t));
    op.build_rows();
    return op;
}

BoundaryOperator BoundaryOperator::derived(Derived which) const {
    switch (which) {
        case Derived::R: return *this;
        case Derived::Rprime: return prime();
        case Derived::Rtilde: return tilde();
        case Derived::RtildePrime: return tilde().prime();
        case Derived::Rhat: return tilde().tilde();
    }
    return *this;
}

std::vector<double> BoundaryOperator::apply(const TraceFn& Z, double t, double dt) const {
    std::vector<double> out(n_, 0.0);
    for (int j = 0; j < n_; ++j) {
        double acc = 0.0;
        for (const auto& pt : rows_[j].points) acc += eval_t(pt.coef, t) * Z(pt.k, t - eval_t(pt.delay, t));
        for (const auto& kt : rows_[j].kernels) {
            double hz = eval_t(kt.horizon, t);
            if (hz <= 0.0) continue;
            int np = panels(hz, dt);
            double h = hz / np, s = 0.0;
            for (int q = 0; q <= np; ++q) {
                double tau = q * h;
                double w = (q == 0 || q == np) ? 0.5 : 1.0;
                s += w * eval_t(kt.kernel, t, tau) * Z(kt.k, t - tau);
            }
            acc += h * s;
        }
        out[j] = acc;
    }
    return out;
}

double BoundaryOperator::row_norm(int j, const TimeGrid& grid) const {
    double sup = 0.0;
    for (int kk = 0; kk < grid.size(); ++kk) {
        double t = grid.time(kk), acc = 0.0;
        for (const auto& pt : rows_[j].points) acc += std::fabs(eval_t(pt.coef, t));
        for (const auto& kt : rows_[j].kernels) {
            double hz = eval_t(kt.horizon, t);
            if (hz <= 0.0) continue;
            int np = panels(hz, grid.step());
            double h = hz / np, s = 0.0;
            for (int q = 0; q <= np; ++q) s += ((q == 0 || q == np) ? 0.5 : 1.0) * std::fabs(eval_t(kt.kernel, t, q * h));
            acc += h * s;
        }
        sup = std::max(sup, acc);
    }
    return sup;
}

double BoundaryOperator::max_lookback(const TimeGrid& grid) const {
    double mx = 0.0;
    for (int kk = 0; kk < grid.size(); ++kk) {
        double t = grid.time(kk);
        for (const auto& row : rows_) {
            for (const auto& pt : row.points) mx = std::max(mx, eval_t(pt.delay, t));
            for (const auto& kt : row.kernels) mx = std::max(mx, eval_t(kt.horizon, t));
        }
    }
    return mx;
}

BoundaryPlan::BoundaryPlan(const BoundaryOperator& op, const TimeGrid& grid) : nt_(grid.size()) {
    const int n = op.n();
    rows_.resize(n);
    for (int j = 0; j < n; ++j) {
        Row& row = rows_[j];
        row.offsets.assign(nt_ + 1, 0);
        const auto& br = op.rows()[j];
        for (int kk = 0; kk < nt_; ++kk) {
            const double t = grid.time(kk);
            auto add = [&](int k, double coef, double at) {
                auto l = grid.locate(at);
                row.entries.push_back({k, l.k0, l.k1, coef * (1.0 - l.w), coef * l.w});
            };
            for (const auto& pt : br.points) {
                double delay = eval_t(pt.delay, t);
                if (delay < 0.0) fail(ErrorCode::InvalidArgument, "negative boundary delay");
                add(pt.k, eval_t(pt.coef, t), t - delay);
            }
            for (const auto& kt : br.kernels) {
                double hz = eval_t(kt.horizon, t);
                if (hz < 0.0) fail(ErrorCode::InvalidArgument, "negative kernel horizon");
                if (hz == 0.0) continue;
                int np = panels(hz, grid.step());
                double h = hz / np;
                for (int q = 0; q <= np; ++q) {
                    double w = ((q == 0 || q == np) ? 0.5 : 1.0) * h;
                    add(kt.k, w * eval_t(kt.kernel, t, q * h), t - q * h);
                }
            }
            row.offsets[kk + 1] = row.entries.size();
        }
    }
}

void BoundaryPlan::apply(const std::vector<std::span<const double>>& y, std::vector<std::vector<double>>& out) const {
    out.resize(rows_.size());
    for (std::size_t j = 0; j < rows_.size(); ++j) {
        const Row& row = rows_[j];
        out[j].assign(nt_, 0.0);
        for (int kk = 0; kk < nt_; ++kk) {
            double acc = 0.0;
            for (std::size_t e = row.offsets[kk]; e < row.offsets[kk + 1]; ++e) {
                const Entry& en = row.entries[e];
                acc += en.w0 * y[en.k][en.t0] + en.w1 * y[en.k][en.t1];
            }
            out[j][kk] = acc;
        }
    }
}

}  // namespace charstrip
