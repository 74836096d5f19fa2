#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "boundary.hpp"
#include "linear_solver.hpp"
#include "system.hpp"

namespace charstrip {

/// V_t + A(x,t,V) V_x + B(x,t,V) V = f(x,t) with U = Q^{-1}(x,t,V) V and
/// U_j(x_j, t) = (R Z)_j(t) + h_j(t).
struct QuasilinearProblem {
    QuasilinearSystem system;
    std::vector<Expr> f;  // in x, t
    std::vector<Expr> h;  // in t
    BoundaryOperator boundary;
    Grid grid;
};

struct OuterStep {
    int k = 0;
    double c0_increment = 0.0;
    double c1_increment = 0.0;
    double sup_V = 0.0;
    int inner_iterations = 0;
    std::string derivative_source;  // "w-system" or "central differences"
};

struct QuasilinearOptions {
    double tol = 1e-8;
    int max_outer = 60;
    /// Consecutive growing C^1 increments tolerated before OuterDivergence.
    int divergence_patience = 5;
    double lambda0 = 1e-3;
    double delta0 = 1.0;
    /// Gate: sup|f| + sup|h| <= smallness * lambda0 unless overridden.
    double smallness = 0.05;
    bool override_gate = false;
    /// Take d_t V from the derivative system when its certificate holds.
    bool use_derivative_system = true;
    SolveOptions linear;
    AssemblyOptions assembly;
    std::optional<double> period;  // checked with verify_periodicity when set
    std::function<void(const OuterStep&)> progress;
};

struct QuasilinearReport {
    GridField V, U, dtV, dxV;
    std::vector<OuterStep> steps;
    bool converged = false;
    double data_norm = 0.0;
    ConditionReport linearized;  // conditions of the problem frozen at V = 0
    /// c1 increment ratios between consecutive outer iterations.
    std::vector<double> ratios;
    std::optional<PeriodicityResult> periodicity;
    std::vector<std::string> warnings;
};

/// Outer iteration: freeze V^k, diagonalize, solve the linear problem for U^{k+1},
/// set V^{k+1} = Q(V^k) U^{k+1}; stop when the C^1 increment drops below tol.
QuasilinearReport solve_quasilinear(const QuasilinearProblem& problem, const QuasilinearOptions& opts = {});

/// sup|D| + sup|forward differences of D in t| + sup|same in x|, D = a - b.
double c1_distance(const GridField& a, const GridField& b);

/// Residual of V_t + A V_x + B V - f by central differences on the grid.
double pde_residual(const QuasilinearProblem& problem, const GridField& V);

/// sup_t |U_j(x_j, t) - (R Z)_j(t) - h_j(t)| with U = Q^{-1}(V) V.
double boundary_residual(const QuasilinearProblem& problem, const GridField& V);

struct PerturbationReport {
    double eps = 0.0;
    double delta = 0.0;       // sup change at eps
    double delta_tenth = 0.0; // sup change at eps / 10
    double ratio = 0.0;       // delta / delta_tenth
};

/// Runs solve(0), solve(eps), solve(eps/10) and compares the solutions.
PerturbationReport perturbation_experiment(const std::function<GridField(double)>& solve, double eps);

/// The same problem with A + eps sin(t) I and eigenvalues shifted by eps sin(t).
QuasilinearProblem perturb_speeds(const QuasilinearProblem& problem, double eps);

/// The same diagonal speeds shifted by eps sin(t).
std::vector<Expr> perturb_speeds(const std::vector<Expr>& speeds, double eps);

}  // namespace charstrip
