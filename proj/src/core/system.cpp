#include "system.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "error.hpp"

namespace charstrip {

namespace {
std::atomic<std::uint64_t> g_version{1};

void require_vars(const Expr& e, VarMask allowed, const char* what) {
    if (e.free_vars() & ~allowed) fail(ErrorCode::InvalidArgument, std::string(what) + " uses variables outside its slot: " + e.render());
}
}  // namespace

CoefficientModel::CoefficientModel(int n, int m) : n_(n), m_(m), version_(g_version.fetch_add(1)) {
    if (n < 1 || m < 0 || m > n) fail(ErrorCode::InvalidArgument, "need n >= 1 and 0 <= m <= n");
}

ExpressionCoefficients::ExpressionCoefficients(int m, std::vector<Expr> speeds, std::vector<std::vector<Expr>> coupling)
    : CoefficientModel(static_cast<int>(speeds.size()), m), a_(std::move(speeds)), b_(std::move(coupling)) {
    if (static_cast<int>(b_.size()) != n()) fail(ErrorCode::InvalidArgument, "coupling matrix must be n x n");
    for (auto& row : b_)
        if (static_cast<int>(row.size()) != n()) fail(ErrorCode::InvalidArgument, "coupling matrix must be n x n");
    for (auto& e : a_) {
        require_vars(e, kMaskXT, "speed");
        dta_.push_back(e.derivative(var::t));
    }
    dtb_.resize(n());
    for (int j = 0; j < n(); ++j)
        for (auto& e : b_[j]) {
            require_vars(e, kMaskXT, "coupling");
            dtb_[j].push_back(e.derivative(var::t));
        }
}

namespace {
inline double eval_xt(const Expr& e, double x, double t) {
    double s[3] = {x, t, 0.0};
    return e.eval_unchecked(s);
}
}  // namespace

double ExpressionCoefficients::speed(int j, double x, double t) const { return eval_xt(a_[j], x, t); }
double ExpressionCoefficients::dt_speed(int j, double x, double t) const { return eval_xt(dta_[j], x, t); }
double ExpressionCoefficients::coupling(int j, int k, double x, double t) const { return eval_xt(b_[j][k], x, t); }
double ExpressionCoefficients::dt_coupling(int j, int k, double x, double t) const {
    return eval_xt(dtb_[j][k], x, t);
}
bool ExpressionCoefficients::coupling_present(int j, int k) const {
    return !(b_[j][k].is_constant() && b_[j][k].constant_value() == 0.0);
}
bool ExpressionCoefficients::speeds_autonomous() const {
    for (auto& e : a_)
        if (e.depends_on(var::t)) return false;
    return true;
}

SnapshotCoefficients::SnapshotCoefficients(int m, GridField a, GridField dta, GridField b, GridField dtb)
    : CoefficientModel(a.components(), m), a_(std::move(a)), dta_(std::move(dta)), b_(std::move(b)), dtb_(std::move(dtb)) {
    if (b_.components() != n() * n() || dtb_.components() != n() * n() || dta_.components() != n())
        fail(ErrorCode::InvalidArgument, "snapshot component counts do not match n");
    present_.assign(n() * n(), 0);
    for (int c = 0; c < n() * n(); ++c) {
        double mx = 0.0;
        for (int i = 0; i <= b_.grid().nx; ++i)
            for (double v : b_.column(c, i)) mx = std::max(mx, std::fabs(v));
        present_[c] = mx > 0.0;
    }
    autonomous_ = dta_.sup_norm() == 0.0;
}

DiagonalSystem make_diagonal_system(int m, std::vector<Expr> speeds, std::vector<std::vector<Expr>> coupling) {
    DiagonalSystem s;
    s.coeffs = std::make_shared<ExpressionCoefficients>(m, std::move(speeds), std::move(coupling));
    return s;
}

HyperbolicityReport measure_hyperbolicity(const DiagonalSystem& sys, const Grid& g, double lambda0) {
    if (!(lambda0 > 0.0)) fail(ErrorCode::InvalidArgument, "lambda0 must be positive");
    const auto& model = sys.model();
    const int n = model.n();
    HyperbolicityReport r;
    r.lambda0 = lambda0;
    r.min_speed_margin = INFINITY;
    r.min_gap = n > 1 ? INFINITY : NAN;
    std::vector<double> a(n);
    auto note = [&](double x, double t, std::string q, double v) {
        if (r.issues.size() < 8) r.issues.push_back({x, t, std::move(q), v});
    };
    for (int i = 0; i <= g.nx; ++i) {
        double x = g.x(i);
        for (int k = 0; k < g.nt(); ++k) {
            double t = g.time.time(k);
            for (int j = 0; j < n; ++j) {
                a[j] = model.speed(j, x, t);
                double margin = model.sign(j) * a[j];
                r.min_speed_margin = std::min(r.min_speed_margin, margin);
                if (!(margin >= lambda0)) note(x, t, "a_" + std::to_string(j + 1), a[j]);
            }
            for (int j = 0; j < n; ++j)
                for (int l = j + 1; l < n; ++l) {
                    double gap = std::fabs(a[j] - a[l]);
                    r.min_gap = std::min(r.min_gap, gap);
                    if (!(gap >= lambda0))
                        note(x, t, "|a_" + std::to_string(j + 1) + " - a_" + std::to_string(l + 1) + "|", gap);
                }
        }
    }
    if (sys.q) {
        const GridField& q = *sys.q;
        const Grid& qg = q.grid();
        double mind = INFINITY;
        Eigen::MatrixXd Q(n, n);
        for (int i = 0; i <= qg.nx; ++i)
            for (int k = 0; k < qg.nt(); ++k) {
                for (int c = 0; c < n * n; ++c) Q(c / n, c % n) = q(c, i, k);
                double d = std::fabs(Q.determinant());
                mind = std::min(mind, d);
                if (!(d >= lambda0)) note(qg.x(i), qg.time.time(k), "|det q|", d);
            }
        r.min_det_q = mind;
    }
    r.passed = r.issues.empty();
    return r;
}

HyperbolicityReport validate_hyperbolicity(const DiagonalSystem& sys, const Grid& g, double lambda0) {
    auto r = measure_hyperbolicity(sys, g, lambda0);
    if (!r.passed) {
        const auto& is = r.issues.front();
        char buf[256];
        std::snprintf(buf, sizeof buf, "hyperbolicity check failed: %s = %.6g < lambda0 = %.6g at (x, t) = (%.6g, %.6g)",
                      is.quantity.c_str(), is.value, lambda0, is.x, is.t);
        fail(ErrorCode::ValidationFailed, buf);
    }
    return r;
}

GridField dt_central(const GridField& f) {
    GridField out(f.components(), f.grid());
    const auto& tg = f.grid().time;
    const int nt = tg.size();
    const double h = tg.step();
    for (int c = 0; c < f.components(); ++c)
        for (int i = 0; i <= f.grid().nx; ++i) {
            auto in = f.column(c, i);
            auto o = out.column(c, i);
            if (tg.periodic()) {
                for (int k = 0; k < nt; ++k) o[k] = (in[(k + 1) % nt] - in[(k + nt - 1) % nt]) / (2 * h);
            } else {
                for (int k = 1; k < nt - 1; ++k) o[k] = (in[k + 1] - in[k - 1]) / (2 * h);
                o[0] = (-3 * in[0] + 4 * in[1] - in[2]) / (2 * h);
                o[nt - 1] = (3 * in[nt - 1] - 4 * in[nt - 2] + in[nt - 3]) / (2 * h);
            }
        }
    return out;
}

GridField dx_central(const GridField& f) {
    GridField out(f.components(), f.grid());
    const int nx = f.grid().nx;
    const int nt = f.grid().nt();
    const double h = f.grid().dx();
    for (int c = 0; c < f.components(); ++c)
        for (int k = 0; k < nt; ++k) {
            if (nx < 2) {
                out(c, 0, k) = out(c, nx, k) = (f(c, nx, k) - f(c, 0, k)) / h;
                continue;
            }
            for (int i = 1; i < nx; ++i) out(c, i, k) = (f(c, i + 1, k) - f(c, i - 1, k)) / (2 * h);
            out(c, 0, k) = (-3 * f(c, 0, k) + 4 * f(c, 1, k) - f(c, 2, k)) / (2 * h);
            out(c, nx, k) = (3 * f(c, nx, k) - 4 * f(c, nx - 1, k) + f(c, nx - 2, k)) / (2 * h);
        }
    return out;
}

DiagonalSystem diagonalize_at_state(const QuasilinearSystem& qs, const GridField& V, const GridField& dtV,
                                    const GridField& dxV, const DiagonalizeOptions& opts) {
    const int n = qs.n;
    if (V.components() != n || dtV.components() != n || dxV.components() != n)
        fail(ErrorCode::InvalidArgument, "state fields must have n components");
    const Grid& g = V.grid();
    if (!(dtV.grid() == g) || !(dxV.grid() == g)) fail(ErrorCode::VersionMismatch, "state fields live on different grids");

    // partial derivatives needed by the chain rule
    std::vector<Expr> Qt(n * n), Qx(n * n), eigt(n);
    std::vector<std::vector<Expr>> QV(n, std::vector<Expr>(n * n)), eigV(n, std::vector<Expr>(n));
    for (int c = 0; c < n * n; ++c) {
        Qt[c] = qs.Q[c].derivative(var::t);
        Qx[c] = qs.Q[c].derivative(var::x);
        for (int i = 0; i < n; ++i) QV[i][c] = qs.Q[c].derivative(var::V(i + 1));
    }
    for (int j = 0; j < n; ++j) {
        eigt[j] = qs.eigen[j].derivative(var::t);
        for (int i = 0; i < n; ++i) eigV[i][j] = qs.eigen[j].derivative(var::V(i + 1));
    }

    GridField a(n, g), dta(n, g), b(n * n, g), q(n * n, g), qinv(n * n, g), dtq(n * n, g);
    Eigen::MatrixXd Qm(n, n), Bm(n, n), Am(n, n), Dt(n, n), Dx(n, n);
    double slots[var::count] = {};
    for (int i = 0; i <= g.nx; ++i)
        for (int k = 0; k < g.nt(); ++k) {
            slots[var::x] = g.x(i);
            slots[var::t] = g.time.time(k);
            for (int l = 0; l < n; ++l) {
                double v = V(l, i, k);
                if (!(std::fabs(v) <= opts.delta0)) {
                    char buf[160];
                    std::snprintf(buf, sizeof buf, "state |V_%d| = %.6g exceeds delta0 = %.6g at (x, t) = (%.6g, %.6g)",
                                  l + 1, std::fabs(v), opts.delta0, slots[var::x], slots[var::t]);
                    fail(ErrorCode::StateOutOfBox, buf);
                }
                slots[var::V(l + 1)] = v;
            }
            for (int c = 0; c < n * n; ++c) {
                int r = c / n, s = c % n;
                Qm(r, s) = qs.Q[c].eval_unchecked(slots);
                Bm(r, s) = qs.B[c].eval_unchecked(slots);
                Am(r, s) = qs.A[c].eval_unchecked(slots);
                double dt = Qt[c].eval_unchecked(slots), dx = Qx[c].eval_unchecked(slots);
                for (int l = 0; l < n; ++l) {
                    double qv = QV[l][c].eval_unchecked(slots);
                    dt += qv * dtV(l, i, k);
                    dx += qv * dxV(l, i, k);
                }
                Dt(r, s) = dt;
                Dx(r, s) = dx;
            }
            Eigen::PartialPivLU<Eigen::MatrixXd> lu(Qm);
            double det = lu.determinant();
            if (!(std::fabs(det) >= opts.lambda0)) {
                char buf[160];
                std::snprintf(buf, sizeof buf, "|det Q| = %.6g < lambda0 at (x, t) = (%.6g, %.6g)", std::fabs(det),
                              slots[var::x], slots[var::t]);
                fail(ErrorCode::SingularQ, buf);
            }
            Eigen::MatrixXd bh = lu.solve(Bm * Qm + Dt + Am * Dx);
            Eigen::MatrixXd qi = lu.inverse();
            for (int c = 0; c < n * n; ++c) {
                b(c, i, k) = bh(c / n, c % n);
                q(c, i, k) = Qm(c / n, c % n);
                qinv(c, i, k) = qi(c / n, c % n);
                dtq(c, i, k) = Dt(c / n, c % n);
            }
            for (int j = 0; j < n; ++j) {
                a(j, i, k) = qs.eigen[j].eval_unchecked(slots);
                double d = eigt[j].eval_unchecked(slots);
                for (int l = 0; l < n; ++l) d += eigV[l][j].eval_unchecked(slots) * dtV(l, i, k);
                dta(j, i, k) = d;
            }
        }
    GridField dtb = dt_central(b);
    DiagonalSystem s;
    s.coeffs = std::make_shared<SnapshotCoefficients>(qs.m, std::move(a), std::move(dta), std::move(b), std::move(dtb));
    s.q = std::make_shared<GridField>(std::move(q));
    s.q_inv = std::make_shared<GridField>(std::move(qinv));
    s.dt_q = std::make_shared<GridField>(std::move(dtq));
    return s;
}

}  // namespace charstrip
