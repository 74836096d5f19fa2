#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "expr.hpp"
#include "grid.hpp"

namespace charstrip {

/// Coefficients of the diagonal system u_t + a u_x + b u = g. Families j < m have
/// positive speeds and enter at x = 0; the rest enter at x = 1.
class CoefficientModel {
public:
    CoefficientModel(int n, int m);
    virtual ~CoefficientModel() = default;

    int n() const { return n_; }
    int m() const { return m_; }
    /// +1 for the positive families, -1 for the others.
    int sign(int j) const { return j < m_ ? 1 : -1; }
    /// Abscissa where the family's characteristics enter the strip.
    double inflow(int j) const { return j < m_ ? 0.0 : 1.0; }
    std::uint64_t version() const { return version_; }

    virtual double speed(int j, double x, double t) const = 0;
    virtual double dt_speed(int j, double x, double t) const = 0;
    virtual double coupling(int j, int k, double x, double t) const = 0;
    virtual double dt_coupling(int j, int k, double x, double t) const = 0;
    /// False only when b_jk is known to vanish identically.
    virtual bool coupling_present(int j, int k) const = 0;
    /// True when no speed depends on t.
    virtual bool speeds_autonomous() const = 0;

private:
    int n_, m_;
    std::uint64_t version_;
};

/// Coefficients given as expressions in (x, t).
class ExpressionCoefficients final : public CoefficientModel {
public:
    ExpressionCoefficients(int m, std::vector<Expr> speeds, std::vector<std::vector<Expr>> coupling);

    double speed(int j, double x, double t) const override;
    double dt_speed(int j, double x, double t) const override;
    double coupling(int j, int k, double x, double t) const override;
    double dt_coupling(int j, int k, double x, double t) const override;
    bool coupling_present(int j, int k) const override;
    bool speeds_autonomous() const override;

    const std::vector<Expr>& speeds() const { return a_; }
    const std::vector<std::vector<Expr>>& coupling_matrix() const { return b_; }

private:
    std::vector<Expr> a_, dta_;
    std::vector<std::vector<Expr>> b_, dtb_;
};

/// Coefficients frozen on a grid and read back by bilinear interpolation.
class SnapshotCoefficients final : public CoefficientModel {
public:
    /// a, dta: n components. b, dtb: n*n components, row-major.
    SnapshotCoefficients(int m, GridField a, GridField dta, GridField b, GridField dtb);

    double speed(int j, double x, double t) const override { return a_.at(j, x, t); }
    double dt_speed(int j, double x, double t) const override { return dta_.at(j, x, t); }
    double coupling(int j, int k, double x, double t) const override { return b_.at(j * n() + k, x, t); }
    double dt_coupling(int j, int k, double x, double t) const override { return dtb_.at(j * n() + k, x, t); }
    bool coupling_present(int j, int k) const override { return present_[j * n() + k]; }
    bool speeds_autonomous() const override { return autonomous_; }

    const GridField& speeds() const { return a_; }
    const GridField& coupling_field() const { return b_; }

private:
    GridField a_, dta_, b_, dtb_;
    std::vector<char> present_;
    bool autonomous_;
};

/// A diagonal system plus, optionally, the change of variables v = q u.
struct DiagonalSystem {
    std::shared_ptr<const CoefficientModel> coeffs;
    /// n*n components, row-major, on the solver grid. Empty when q = I.
    std::shared_ptr<const GridField> q;
    std::shared_ptr<const GridField> q_inv;
    std::shared_ptr<const GridField> dt_q;

    int n() const { return coeffs->n(); }
    int m() const { return coeffs->m(); }
    const CoefficientModel& model() const { return *coeffs; }
};

DiagonalSystem make_diagonal_system(int m, std::vector<Expr> speeds, std::vector<std::vector<Expr>> coupling);

/// Quasilinear data: V_t + A V_x + B V = f, with user-supplied eigenvalues A_j and
/// diagonalizer Q (columns are eigenvectors) in the variables x, t, V1..Vn.
struct QuasilinearSystem {
    int n = 0;
    int m = 0;
    std::vector<Expr> A, B, Q;  // n*n, row-major
    std::vector<Expr> eigen;    // n
};

struct HyperbolicityIssue {
    double x, t;
    std::string quantity;
    double value;
};

struct HyperbolicityReport {
    double min_speed_margin = 0.0;  // min over j of sign_j * a_j
    double min_gap = 0.0;           // min over j != k of |a_j - a_k|
    std::optional<double> min_det_q;
    double lambda0 = 0.0;
    bool passed = false;
    std::vector<HyperbolicityIssue> issues;  // first few offending samples
};

HyperbolicityReport measure_hyperbolicity(const DiagonalSystem& sys, const Grid& sampling, double lambda0);
/// Throws ValidationFailed naming the first offending sample.
HyperbolicityReport validate_hyperbolicity(const DiagonalSystem& sys, const Grid& sampling, double lambda0);

/// Evaluation of a quasilinear system's matrices at one point.
struct PointState {
    double x, t;
    std::vector<double> V, dtV, dxV;
};

struct DiagonalizeOptions {
    double lambda0 = 1e-3;
    double delta0 = 1.0;
};

/// Freezes the quasilinear system at the state V. The result's coefficients are
/// a_j = A_j(x,t,V) and b = Q^{-1}(B Q + dQ/dt + A dQ/dx), the total derivatives of
/// Q taken through V with dtV and dxV.
DiagonalSystem diagonalize_at_state(const QuasilinearSystem& qs, const GridField& V, const GridField& dtV,
                                    const GridField& dxV, const DiagonalizeOptions& opts);

/// Central differences in t (wrapping for periodic grids, one-sided at window ends).
GridField dt_central(const GridField& f);
/// Central differences in x, second-order one-sided at the ends.
GridField dx_central(const GridField& f);

}  // namespace charstrip
