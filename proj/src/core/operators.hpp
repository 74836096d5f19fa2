#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "boundary.hpp"
#include "characteristics.hpp"
#include "grid.hpp"
#include "system.hpp"

namespace charstrip {

/// g_j(x, t) for the right-hand side.
using SourceFn = std::function<double(int, double, double)>;
/// h_j(t) for the boundary data.
using BoundaryDataFn = std::function<double(int, double)>;

struct AssemblyOptions {
    int oversample = 4;
    double sign_deadband = 1e-9;
    /// Upper bound on the memory used by the coupling stencils.
    std::size_t stencil_budget_bytes = std::size_t{1} << 30;
};

/// Sign class of inf/sup b_jj with the dead-band applied.
enum class SignClass { Positive, Negative, Zero };

struct NormRow {
    double weight_sup;  // sup over boundary times of c^l at the far end
    double row_norm;    // norm of the paired boundary row
    double bound;       // product of the two
};

struct NormEstimate {
    std::string name;  // "G0".."G2" or "H0".."H2"
    std::vector<NormRow> rows;
    double max = 0.0;
};

struct NormReport {
    bool periodic = false;
    std::vector<NormEstimate> ops;  // levels 0, 1, 2
    int resolution_nx = 0, resolution_nt = 0;
    double margin = 0.01;
};

/// Precomputed data for the operators C, D, F and the boundary-trace operators on
/// one coefficient snapshot and grid.
class OperatorAssembly {
public:
    OperatorAssembly(DiagonalSystem sys, BoundaryOperator boundary, Grid grid, AssemblyOptions opts = {});

    const Grid& grid() const { return grid_; }
    const DiagonalSystem& system() const { return sys_; }
    const BoundaryOperator& boundary() const { return boundary_; }
    const CharacteristicCache& cache() const { return *cache_; }
    const AssemblyOptions& options() const { return opts_; }
    std::uint64_t version() const { return sys_.coeffs->version(); }
    int n() const { return sys_.n(); }

    /// Column where family j's representation starts, and the opposite one.
    int source_col(int j) const { return cache_->source_col(j); }
    int far_col(int j) const { return cache_->far_col(j); }
    /// True for periodic rows with negative damping, integrated from the outflow end.
    bool flipped(int j) const { return flipped_[j]; }
    SignClass diag_class(int j) const { return class_[j]; }
    double inf_bjj(int j) const { return inf_b_[j]; }
    double sup_bjj(int j) const { return sup_b_[j]; }
    bool has_coupling() const { return coupled_; }

    /// Far-end traces y_j(t) = u_j(far end, t).
    std::vector<std::span<const double>> far_traces(const GridField& u) const;
    /// Boundary values B = R y, R~ y or R^ y (levels 0, 1, 2) on the time grid.
    std::vector<std::vector<double>> boundary_values(int level, const std::vector<std::span<const double>>& y) const;
    /// (C y)_j(x, t) = c^l(source, x, t) B_j(omega_j(source, x, t)) given boundary values B.
    GridField apply_C_values(const std::vector<std::vector<double>>& B, int level = 0) const;
    GridField apply_C(const GridField& u, int level = 0) const;
    GridField apply_D(const GridField& u, int level = 0) const;
    /// Accumulates D u into out (out += D u).
    void add_D(const GridField& u, int level, GridField& out) const;
    GridField apply_F(const SourceFn& g, const BoundaryDataFn& h, int level = 0) const;
    /// Boundary-trace operator G_l (H_l for periodic R) on far-end traces y.
    std::vector<std::vector<double>> apply_G(int level, const std::vector<std::vector<double>>& y) const;

    /// Row bounds for G_0..G_2 (or H_0..H_2). Throws MixedSignB for periodic R with
    /// a diagonal entry that does not keep one sign.
    NormReport estimate_operator_norms(double margin = 0.01) const;

    /// Bound K_F with |F(g, h)| <= K_F (|g| + |h|).
    double F_bound() const;

    void require_conforming(const GridField& u) const;

private:
    struct Stencil {
        std::vector<std::size_t> offsets;  // per node (nx+1)*nt + 1
        std::vector<int> col;
        std::vector<TimeGrid::Linear> at;
        std::vector<double> coef;  // n per sample
    };
    struct ExitTable {
        std::vector<TimeGrid::Linear> at;  // exit time located on the grid
        std::vector<double> weight;        // c^l(source, x, t)
    };
    const Stencil& stencil(int j, int level) const;
    const ExitTable& exit_table(int j, int level) const;
    const BoundaryPlan& plan(int level) const;

    DiagonalSystem sys_;
    BoundaryOperator boundary_;
    Grid grid_;
    AssemblyOptions opts_;
    std::vector<SignClass> class_;
    std::vector<double> inf_b_, sup_b_;
    std::vector<char> flipped_;
    bool coupled_ = false;
    std::unique_ptr<CharacteristicCache> cache_;

    mutable std::mutex lazy_mu_;
    mutable std::vector<std::unique_ptr<Stencil>> stencils_;  // 2 per family
    mutable std::vector<std::unique_ptr<ExitTable>> exits_;   // 2 per family
    mutable std::unique_ptr<BoundaryPlan> plans_[3];  // R, R~, R^
    mutable double f_bound_ = -1.0;
};

}  // namespace charstrip
