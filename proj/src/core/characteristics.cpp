#include "characteristics.hpp"

#include <cmath>

#include "error.hpp"
#include "parallel.hpp"

namespace charstrip {

Marcher::Marcher(const CoefficientModel& model, int j, double x, double t) : m_(model), j_(j), xi_(x), om_(t) {
    load_endpoint();
}

double Marcher::inv_speed(double xi, double om) const {
    double a = m_.speed(j_, xi, om);
    if (!(m_.sign(j_) * a > 0.0)) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "speed a_%d = %.6g left its sign class at (x, t) = (%.6g, %.6g)", j_ + 1, a, xi, om);
        fail(ErrorCode::StepFailure, buf);
    }
    return 1.0 / a;
}

void Marcher::load_endpoint() {
    double inv = inv_speed(xi_, om_);
    a_ = 1.0 / inv;
    fb_ = m_.coupling(j_, j_, xi_, om_) * inv;
    fa_ = m_.dt_speed(j_, xi_, om_) * inv * inv;
}

void Marcher::step(double h) {
    const double k1 = 1.0 / a_;
    const double k2 = inv_speed(xi_ + 0.5 * h, om_ + 0.5 * h * k1);
    const double k3 = inv_speed(xi_ + 0.5 * h, om_ + 0.5 * h * k2);
    const double k4 = inv_speed(xi_ + h, om_ + h * k3);
    const double fb0 = fb_, fa0 = fa_;
    om_ += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    xi_ += h;
    load_endpoint();
    ib_ += 0.5 * h * (fb0 + fb_);
    ia_ += 0.5 * h * (fa0 + fa_);
}

Characteristic trace(const CoefficientModel& model, int j, double x, double t, const TraceOptions& opts,
                     std::optional<double> end) {
    if (j < 0 || j >= model.n()) fail(ErrorCode::InvalidArgument, "family index out of range");
    if (opts.oversample < 1 || opts.nx < 1) fail(ErrorCode::InvalidArgument, "oversample and nx must be positive");
    Characteristic ch;
    ch.family = j;
    ch.x = x;
    ch.t = t;
    ch.end = end.value_or(model.inflow(j));
    const double span = ch.end - x;
    const double hmax = 1.0 / (static_cast<double>(opts.oversample) * opts.nx);
    const int steps = span == 0.0 ? 0 : static_cast<int>(std::ceil(std::fabs(span) / hmax - 1e-9));
    Marcher mk(model, j, x, t);
    auto record = [&] {
        CharacteristicSample s;
        s.xi = mk.xi();
        s.omega = mk.omega();
        for (int l = 0; l < 3; ++l) s.c[l] = std::exp(mk.log_c(l));
        s.d = s.c[0] / mk.speed();
        s.dt_omega = std::exp(-mk.int_a());
        ch.samples.push_back(s);
    };
    record();
    for (int s = 1; s <= steps; ++s) {
        mk.step(span / steps);
        record();
    }
    if (steps > 0) ch.samples.back().xi = ch.end;
    return ch;
}

double dt_omega(const CoefficientModel& model, int j, double xi, double x, double t, const TraceOptions& opts) {
    return trace(model, j, x, t, opts, xi).exit().dt_omega;
}

CharacteristicCache::CharacteristicCache(const CoefficientModel& model, const Grid& grid, std::vector<int> source,
                                         int oversample)
    : model_(model), grid_(grid), source_(std::move(source)), oversample_(oversample) {
    const int n = model.n();
    if (static_cast<int>(source_.size()) != n) fail(ErrorCode::InvalidArgument, "one source end per family");
    if (oversample < 1) fail(ErrorCode::InvalidArgument, "oversample must be positive");
    const int nx = grid_.nx, nt = grid_.nt();
    const std::size_t total = grid_.nodes();
    exit_.assign(n, std::vector<double>(total));
    logc0_.assign(n, std::vector<double>(total));
    logc1_.assign(n, std::vector<double>(total));
    std::vector<double> off(nt);
    for (int j = 0; j < n; ++j) {
        auto& E = exit_[j];
        auto& L0 = logc0_[j];
        auto& L1 = logc1_[j];
        const int c0 = col_at(j, 0);
        for (int k = 0; k < nt; ++k) {
            E[idx(c0, k)] = grid_.time.time(k);
            L0[idx(c0, k)] = L1[idx(c0, k)] = 0.0;
        }
        for (int d = 1; d <= nx; ++d) {
            const int i = col_at(j, d), prev = col_at(j, d - 1);
            const double h = (grid_.x(prev) - grid_.x(i)) / oversample_;
            for (int k = 0; k < nt; ++k) off[k] = E[idx(prev, k)] - grid_.time.time(k);
            std::span<const double> P0(L0.data() + idx(prev, 0), nt), P1(L1.data() + idx(prev, 0), nt);
            parallel_for(0, nt, [&](int k) {
                Marcher mk(model_, j, grid_.x(i), grid_.time.time(k));
                for (int s = 0; s < oversample_; ++s) mk.step(h);
                const double tp = mk.omega();
                if (grid_.time.contains(tp)) {
                    auto st = grid_.time.locate_cubic(tp);
                    E[idx(i, k)] = tp + interp_cubic(off, st);
                    L0[idx(i, k)] = mk.log_c(0) + interp_cubic(P0, st);
                    L1[idx(i, k)] = mk.log_c(1) + interp_cubic(P1, st);
                } else {
                    // left the window: finish this characteristic directly
                    for (int s = 0; s < (d - 1) * oversample_; ++s) mk.step(h);
                    E[idx(i, k)] = mk.omega();
                    L0[idx(i, k)] = mk.log_c(0);
                    L1[idx(i, k)] = mk.log_c(1);
                }
            });
        }
    }
}

double CharacteristicCache::log_c(int l, int j, int i, int k) const {
    const std::size_t p = idx(i, k);
    switch (l) {
        case 0: return logc0_[j][p];
        case 1: return logc1_[j][p];
        default: return 2.0 * logc1_[j][p] - logc0_[j][p];
    }
}

std::vector<double> CharacteristicCache::integrate(int j, int level, const std::function<double(double, double)>& g) const {
    const int nx = grid_.nx, nt = grid_.nt();
    std::vector<double> G(grid_.nodes(), 0.0);
    for (int d = 1; d <= nx; ++d) {
        const int i = col_at(j, d), prev = col_at(j, d - 1);
        const double h = (grid_.x(prev) - grid_.x(i)) / oversample_;
        std::span<const double> P(G.data() + idx(prev, 0), nt);
        parallel_for(0, nt, [&](int k) {
            Marcher mk(model_, j, grid_.x(i), grid_.time.time(k));
            double f = g(mk.xi(), mk.omega()) / mk.speed();
            double S = 0.0;
            auto advance = [&] {
                mk.step(h);
                double fn = std::exp(mk.log_c(level)) * g(mk.xi(), mk.omega()) / mk.speed();
                S += 0.5 * h * (f + fn);
                f = fn;
            };
            for (int s = 0; s < oversample_; ++s) advance();
            const double tp = mk.omega();
            if (grid_.time.contains(tp)) {
                G[idx(i, k)] = std::exp(mk.log_c(level)) * interp_cubic(P, grid_.time.locate_cubic(tp)) - S;
            } else {
                for (int s = 0; s < (d - 1) * oversample_; ++s) advance();
                G[idx(i, k)] = -S;
            }
        });
    }
    return G;
}

void CharacteristicCache::march_to_source(int j, int i, double t,
                                          const std::function<void(int, const Marcher&)>& visit) const {
    const int target = source_col(j);
    const int dir = target > i ? 1 : -1;
    const double h = dir * grid_.dx() / oversample_;
    Marcher mk(model_, j, grid_.x(i), t);
    visit(i, mk);
    for (int col = i; col != target;) {
        for (int s = 0; s < oversample_; ++s) mk.step(h);
        col += dir;
        visit(col, mk);
    }
}

}  // namespace charstrip
