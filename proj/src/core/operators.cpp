#include "operators.hpp"

#include <cmath>

#include "error.hpp"
#include "parallel.hpp"

namespace charstrip {

OperatorAssembly::OperatorAssembly(DiagonalSystem sys, BoundaryOperator boundary, Grid grid, AssemblyOptions opts)
    : sys_(std::move(sys)), boundary_(std::move(boundary)), grid_(std::move(grid)), opts_(opts) {
    const int n = sys_.n();
    if (boundary_.n() != n) fail(ErrorCode::InvalidArgument, "boundary operator and system disagree on n");
    const auto& model = sys_.model();
    if (!grid_.time.periodic()) {
        double lb = boundary_.max_lookback(grid_.time);
        if (lb > grid_.time.spin_up() + 1e-12)
            fail(ErrorCode::InvalidArgument, "boundary delays/horizons exceed the window's spin-up margin");
    }
    inf_b_.assign(n, INFINITY);
    sup_b_.assign(n, -INFINITY);
    for (int i = 0; i <= grid_.nx; ++i)
        for (int k = 0; k < grid_.nt(); ++k)
            for (int j = 0; j < n; ++j) {
                double b = model.coupling(j, j, grid_.x(i), grid_.time.time(k));
                inf_b_[j] = std::min(inf_b_[j], b);
                sup_b_[j] = std::max(sup_b_[j], b);
            }
    std::vector<int> source(n);
    for (int j = 0; j < n; ++j) {
        class_.push_back(inf_b_[j] > opts_.sign_deadband    ? SignClass::Positive
                         : sup_b_[j] < -opts_.sign_deadband ? SignClass::Negative
                                                            : SignClass::Zero);
        bool flip = boundary_.is_periodic() && class_[j] == SignClass::Negative;
        flipped_.push_back(flip);
        int inflow = model.inflow(j) == 0.0 ? 0 : 1;
        source[j] = flip ? 1 - inflow : inflow;
        for (int k = 0; k < n; ++k)
            if (k != j && model.coupling_present(j, k)) coupled_ = true;
    }
    cache_ = std::make_unique<CharacteristicCache>(model, grid_, source, opts_.oversample);
    stencils_.resize(2 * n);
    exits_.resize(2 * n);
}

void OperatorAssembly::require_conforming(const GridField& u) const {
    if (u.components() != n() || !(u.grid() == grid_))
        fail(ErrorCode::VersionMismatch, "field does not conform to the assembly's grid or component count");
}

std::vector<std::span<const double>> OperatorAssembly::far_traces(const GridField& u) const {
    require_conforming(u);
    std::vector<std::span<const double>> y;
    for (int j = 0; j < n(); ++j) y.push_back(u.column(j, far_col(j)));
    return y;
}

const BoundaryPlan& OperatorAssembly::plan(int level) const {
    if (level < 0 || level > 2) fail(ErrorCode::InvalidArgument, "boundary levels are 0, 1 and 2");
    std::lock_guard<std::mutex> lock(lazy_mu_);
    if (!plans_[level]) {
        static constexpr Derived kind[3] = {Derived::R, Derived::Rtilde, Derived::Rhat};
        BoundaryOperator op = boundary_.derived(kind[level]);
        plans_[level] = std::make_unique<BoundaryPlan>(op, grid_.time);
    }
    return *plans_[level];
}

std::vector<std::vector<double>> OperatorAssembly::boundary_values(int level,
                                                                   const std::vector<std::span<const double>>& y) const {
    std::vector<std::vector<double>> B;
    plan(level).apply(y, B);
    return B;
}

const OperatorAssembly::ExitTable& OperatorAssembly::exit_table(int j, int level) const {
    if (level < 0 || level > 1) fail(ErrorCode::InvalidArgument, "C is assembled for levels 0 and 1 only");
    std::lock_guard<std::mutex> lock(lazy_mu_);
    auto& slot = exits_[2 * j + level];
    if (slot) return *slot;
    auto tab = std::make_unique<ExitTable>();
    const int nt = grid_.nt();
    tab->at.resize(grid_.nodes());
    tab->weight.resize(grid_.nodes());
    for (int i = 0; i <= grid_.nx; ++i)
        for (int k = 0; k < nt; ++k) {
            std::size_t p = static_cast<std::size_t>(i) * nt + k;
            tab->at[p] = grid_.time.locate(cache_->exit_time(j, i, k));
            tab->weight[p] = std::exp(cache_->log_c(level, j, i, k));
        }
    slot = std::move(tab);
    return *slot;
}

GridField OperatorAssembly::apply_C_values(const std::vector<std::vector<double>>& B, int level) const {
    GridField out(n(), grid_);
    const int nt = grid_.nt();
    for (int j = 0; j < n(); ++j) {
        const ExitTable& tab = exit_table(j, level);
        std::span<const double> Bj(B[j]);
        parallel_for(0, grid_.nx + 1, [&](int i) {
            auto o = out.column(j, i);
            const std::size_t base = static_cast<std::size_t>(i) * nt;
            for (int k = 0; k < nt; ++k) o[k] = tab.weight[base + k] * interp_linear(Bj, tab.at[base + k]);
        });
    }
    return out;
}

GridField OperatorAssembly::apply_C(const GridField& u, int level) const {
    return apply_C_values(boundary_values(level, far_traces(u)), level);
}

const OperatorAssembly::Stencil& OperatorAssembly::stencil(int j, int level) const {
    std::lock_guard<std::mutex> lock(lazy_mu_);
    auto& slot = stencils_[2 * j + level];
    if (slot) return *slot;
    const int nx = grid_.nx, nt = grid_.nt(), nn = n();
    const auto& model = sys_.model();
    auto st = std::make_unique<Stencil>();
    // sample count: node at distance d from the source has d+1 samples (none when d = 0)
    std::size_t samples = 0;
    for (int d = 1; d <= nx; ++d) samples += static_cast<std::size_t>(d + 1) * nt;
    std::size_t bytes = samples * (sizeof(int) + sizeof(TimeGrid::Linear) + nn * sizeof(double));
    if (bytes > opts_.stencil_budget_bytes)
        fail(ErrorCode::ResourceLimit, "coupling stencils would need " + std::to_string(bytes >> 20) +
                                           " MiB; reduce nx or nt");
    st->offsets.assign(grid_.nodes() + 1, 0);
    const int src = source_col(j);
    for (int i = 0; i <= nx; ++i)
        for (int k = 0; k < nt; ++k) {
            std::size_t node = static_cast<std::size_t>(i) * nt + k;
            st->offsets[node + 1] = static_cast<std::size_t>(i == src ? 0 : std::abs(i - src) + 1);
        }
    for (std::size_t p = 0; p < grid_.nodes(); ++p) st->offsets[p + 1] += st->offsets[p];
    st->col.resize(samples);
    st->at.resize(samples);
    st->coef.assign(samples * nn, 0.0);
    const double dir = src == 0 ? 1.0 : -1.0;
    const double dx = grid_.dx();
    parallel_for(0, nx + 1, [&](int i) {
        if (i == src) return;
        for (int k = 0; k < nt; ++k) {
            std::size_t s = st->offsets[static_cast<std::size_t>(i) * nt + k];
            cache_->march_to_source(j, i, grid_.time.time(k), [&](int col, const Marcher& mk) {
                double w = (col == i || col == src) ? 0.5 * dx : dx;
                double d = std::exp(mk.log_c(level)) / mk.speed();
                st->col[s] = col;
                st->at[s] = grid_.time.locate(mk.omega());
                for (int kk = 0; kk < nn; ++kk)
                    if (kk != j && model.coupling_present(j, kk))
                        st->coef[s * nn + kk] = -dir * w * d * model.coupling(j, kk, mk.xi(), mk.omega());
                ++s;
            });
        }
    });
    slot = std::move(st);
    return *slot;
}

void OperatorAssembly::add_D(const GridField& u, int level, GridField& out) const {
    require_conforming(u);
    if (!coupled_) return;
    const int nt = grid_.nt(), nn = n();
    for (int j = 0; j < nn; ++j) {
        const Stencil& st = stencil(j, level);
        parallel_for(0, grid_.nx + 1, [&](int i) {
            for (int k = 0; k < nt; ++k) {
                std::size_t node = static_cast<std::size_t>(i) * nt + k;
                double acc = 0.0;
                for (std::size_t s = st.offsets[node]; s < st.offsets[node + 1]; ++s) {
                    const auto& l = st.at[s];
                    for (int kk = 0; kk < nn; ++kk) {
                        double c = st.coef[s * nn + kk];
                        if (c != 0.0) acc += c * interp_linear(u.column(kk, st.col[s]), l);
                    }
                }
                out(j, i, k) += acc;
            }
        });
    }
}

GridField OperatorAssembly::apply_D(const GridField& u, int level) const {
    GridField out(n(), grid_);
    add_D(u, level, out);
    return out;
}

GridField OperatorAssembly::apply_F(const SourceFn& g, const BoundaryDataFn& h, int level) const {
    GridField out(n(), grid_);
    const int nt = grid_.nt();
    for (int j = 0; j < n(); ++j) {
        std::vector<double> G = cache_->integrate(j, level, [&](double x, double t) { return g(j, x, t); });
        const double sigma = flipped_[j] ? -1.0 : 1.0;
        parallel_for(0, grid_.nx + 1, [&](int i) {
            auto o = out.column(j, i);
            for (int k = 0; k < nt; ++k)
                o[k] = G[static_cast<std::size_t>(i) * nt + k] +
                       std::exp(cache_->log_c(level, j, i, k)) * sigma * h(j, cache_->exit_time(j, i, k));
        });
    }
    return out;
}

std::vector<std::vector<double>> OperatorAssembly::apply_G(int level, const std::vector<std::vector<double>>& y) const {
    std::vector<std::span<const double>> ys(y.begin(), y.end());
    auto B = boundary_values(level, ys);
    std::vector<std::vector<double>> out(n(), std::vector<double>(grid_.nt()));
    for (int j = 0; j < n(); ++j) {
        const int f = far_col(j);
        for (int k = 0; k < grid_.nt(); ++k)
            out[j][k] = std::exp(cache_->log_c(level, j, f, k)) *
                        interp_linear(B[j], grid_.time.locate(cache_->exit_time(j, f, k)));
    }
    return out;
}

NormReport OperatorAssembly::estimate_operator_norms(double margin) const {
    NormReport rep;
    rep.periodic = boundary_.is_periodic();
    rep.resolution_nx = grid_.nx;
    rep.resolution_nt = grid_.nt();
    rep.margin = margin;
    if (rep.periodic)
        for (int j = 0; j < n(); ++j)
            if (class_[j] == SignClass::Zero)
                fail(ErrorCode::MixedSignB, "periodic boundary with b_" + std::to_string(j + 1) + std::to_string(j + 1) +
                                                " not bounded away from zero");
    const Derived paired[3] = {Derived::R, Derived::Rtilde, Derived::Rhat};
    for (int l = 0; l < 3; ++l) {
        NormEstimate est;
        est.name = std::string(rep.periodic ? "H" : "G") + std::to_string(l);
        BoundaryOperator op = boundary_.derived(paired[l]);
        for (int j = 0; j < n(); ++j) {
            const int f = far_col(j);
            double sup = 0.0;
            for (int k = 0; k < grid_.nt(); ++k) sup = std::max(sup, std::exp(cache_->log_c(l, j, f, k)));
            double rn = op.row_norm(j, grid_.time);
            est.rows.push_back({sup, rn, sup * rn});
            est.max = std::max(est.max, sup * rn);
        }
        rep.ops.push_back(std::move(est));
    }
    return rep;
}

double OperatorAssembly::F_bound() const {
    {
        std::lock_guard<std::mutex> lock(lazy_mu_);
        if (f_bound_ >= 0.0) return f_bound_;
    }
    double gmax = 0.0, cmax = 0.0;
    for (int j = 0; j < n(); ++j) {
        auto G = cache_->integrate(j, 0, [](double, double) { return 1.0; });
        for (double v : G) gmax = std::max(gmax, std::fabs(v));
        for (int i = 0; i <= grid_.nx; ++i)
            for (int k = 0; k < grid_.nt(); ++k) cmax = std::max(cmax, std::exp(cache_->log_c(0, j, i, k)));
    }
    std::lock_guard<std::mutex> lock(lazy_mu_);
    f_bound_ = std::max(gmax, cmax);
    return f_bound_;
}

}  // namespace charstrip
