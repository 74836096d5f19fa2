#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "conditions.hpp"
#include "operators.hpp"

namespace charstrip {

/// Right-hand side of the diagonal problem together with the time derivatives the
/// derivative system needs.
struct LinearData {
    SourceFn g;
    BoundaryDataFn h;
    SourceFn dt_g;        // may be empty when no derivative solve is requested
    BoundaryDataFn dt_h;
};

/// g_j(x, t) and h_j(t) from expressions; derivatives are symbolic.
LinearData expression_data(const std::vector<Expr>& g, const std::vector<Expr>& h);
LinearData zero_data();

struct SolveOptions {
    double tol = 1e-10;
    int max_iter = 10000;
    int patience = 50;
    double margin = 0.01;
    bool allow_unverified = false;
    std::function<void(int, double)> progress;
};

struct IterationLog {
    int iterations = 0;
    std::vector<double> residuals;
    double contraction_ratio = 0.0;
    int inner_iterations = 0;
};

struct SolveReport {
    GridField u;
    std::optional<GridField> v;  // q u when the system carries q
    std::string route;           // "picard" or "trace-presolve"
    IterationLog log;
    double u_sup = 0.0, g_sup = 0.0, h_sup = 0.0;
    double F_bound = 0.0, K = 0.0;
    bool apriori_ok = false;
    ConditionReport conditions;
    std::vector<std::string> warnings;
};

SolveReport solve_linear(const OperatorAssembly& asm_, const LinearData& data, const SolveOptions& opts = {},
                         const ConditionReport* conditions = nullptr);

struct DerivativeReport {
    GridField w;                   // d_t u in the diagonal variables
    std::optional<GridField> w_q;  // q^{-1} d_t v = d_t u + q^{-1} (d_t q) u, when q is present
    bool certified = false;        // the i = 1 norm condition passed
    std::vector<std::string> flags;
    IterationLog log;
};

/// Solves the system satisfied by w = d_t u by the same fixed-point scheme, with the
/// weights c^1, d^1 and boundary operator R~. Throws NonContraction when the
/// iteration does not contract.
DerivativeReport solve_derivative_field(const OperatorAssembly& asm_, const LinearData& data, const GridField& u,
                                        const SolveOptions& opts = {}, const ConditionReport* conditions = nullptr);

struct PeriodicityResult {
    double defect = 0.0;
    bool skipped = false;  // periodic topology: zero by construction
    double t_from = 0.0, t_to = 0.0;
};

/// max over nodes of |u(x, t+T) - u(x, t)| for t in [t_lo + spin_up, t_hi - T].
PeriodicityResult verify_periodicity(const GridField& u, double T);

}  // namespace charstrip
