#pragma once

#include <functional>
#include <span>
#include <vector>

#include "expr.hpp"
#include "grid.hpp"

namespace charstrip {

/// One (j, k) entry of the reflection/delay/integral family:
///   r(t) Z_k(t - theta(t)) + int_0^{horizon(t)} p(t, tau) Z_k(t - tau) dtau.
struct ReflectionTerm {
    int k = 0;
    Expr r{0.0};
    Expr theta{0.0};
    Expr p{0.0};
    Expr horizon{0.0};
};

/// coef(t) * Z_k(t - delay(t))
struct PointTerm {
    int k;
    Expr coef, delay;
};

/// int_0^{horizon(t)} kernel(t, tau) Z_k(t - tau) dtau
struct KernelTerm {
    int k;
    Expr kernel, horizon;
};

struct BoundaryRow {
    std::vector<PointTerm> points;
    std::vector<KernelTerm> kernels;
};

/// Boundary traces as functions of (component, time).
using TraceFn = std::function<double(int, double)>;

/// Traces sampled on a time grid with linear interpolation. With `strict`, lookups
/// before the start of a window throw LookbackOutOfWindow instead of clamping.
TraceFn sampled_traces(const std::vector<std::vector<double>>& z, const TimeGrid& grid, bool strict);

enum class Derived { R, Rprime, Rtilde, RtildePrime, Rhat };

class BoundaryOperator {
public:
    /// R = identity.
    static BoundaryOperator periodic(int n);
    /// rows[j] lists the terms of row j. Expressions may use t; kernels also tau.
    static BoundaryOperator general(int n, std::vector<std::vector<ReflectionTerm>> rows);

    int n() const { return n_; }
    bool is_periodic() const { return periodic_; }
    const std::vector<BoundaryRow>& rows() const { return rows_; }

    BoundaryOperator derived(Derived which) const;

    /// (RZ)_j(t) for every row; kernel integrals use the trapezoid rule with step <= dt.
    std::vector<double> apply(const TraceFn& Z, double t, double dt) const;

    /// sup over the grid times of sum_k |coef| + int |kernel|.
    double row_norm(int j, const TimeGrid& grid) const;
    /// Largest delay or horizon over the grid times.
    double max_lookback(const TimeGrid& grid) const;

private:
    BoundaryOperator prime() const;
    BoundaryOperator tilde() const;
    void build_rows();

    int n_ = 0;
    bool periodic_ = false;
    bool family_ = true;  // false once R' has been taken (no longer in family form)
    std::vector<std::vector<ReflectionTerm>> terms_;
    std::vector<BoundaryRow> rows_;
};

/// R applied on a fixed time grid with precomputed interpolation stencils.
class BoundaryPlan {
public:
    BoundaryPlan() = default;
    BoundaryPlan(const BoundaryOperator& op, const TimeGrid& grid);

    /// y[k] is the trace of component k on the grid; out[j] receives row j.
    void apply(const std::vector<std::span<const double>>& y, std::vector<std::vector<double>>& out) const;
    bool empty_row(int j) const { return rows_[j].offsets.back() == 0; }

private:
    struct Entry {
        int k;
        int t0, t1;
        double w0, w1;
    };
    struct Row {
        std::vector<std::size_t> offsets;  // nt + 1
        std::vector<Entry> entries;
    };
    int nt_ = 0;
    std::vector<Row> rows_;
};

}  // namespace charstrip
