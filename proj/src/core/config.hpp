#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "boundary.hpp"
#include "expr.hpp"
#include "grid.hpp"
#include "system.hpp"

namespace charstrip {

enum class SystemMode { Linear, Quasilinear };

struct SystemBlock {
    SystemMode mode = SystemMode::Linear;
    int n = 0, m = 0;
    double lambda0 = 1e-3;
    double delta0 = 1.0;
    // linear mode
    std::vector<Expr> speeds;
    std::vector<std::vector<Expr>> coupling;
    // quasilinear mode
    QuasilinearSystem quasilinear;
};

struct SolverBlock {
    double tol = 1e-10;
    int max_iter = 10000;
    int patience = 50;
    double margin = 0.01;
    bool allow_unverified = false;
    bool derivative = false;
    int oversample = 4;
    double outer_tol = 1e-8;
    int max_outer = 60;
    double smallness = 0.05;
    bool override_gate = false;
    std::optional<double> period_check;
};

struct OutputBlock {
    std::string dir;
    std::vector<std::pair<double, double>> probes;
    std::vector<std::string> require;  // verdict names that decide the exit status
};

enum class RegularityMode { Critical, Subcritical };

struct CounterexampleConfig {
    double r2 = 0.9;
    double beta = 0.05;
    RegularityMode mode = RegularityMode::Critical;
    double s = 0.9;  // product r2 r1(1/4) kappa in subcritical mode
    std::vector<int> nt_list{1024, 2048, 4096};
    int nx = 32;
    std::vector<double> steps{1e-1, 1e-2, 1e-3};
    double tol = 1e-12;
};

struct RunConfig {
    std::string origin;   // file path or "<string>"
    std::string command;  // may be empty when the CLI supplies it
    std::optional<SystemBlock> system;
    std::optional<BoundaryOperator> boundary;
    std::vector<Expr> source;         // g (linear) or f (quasilinear)
    std::vector<Expr> boundary_data;  // h
    std::optional<Grid> grid;
    SolverBlock solver;
    OutputBlock output;
    std::optional<CounterexampleConfig> counterexample;
};

/// Throws ConfigError naming the file and the offending block or field.
RunConfig parse_config(const std::string& text, const std::string& origin = "<string>");
RunConfig load_config(const std::string& path);

/// Checks that the blocks needed by `command` are present and consistent.
void require_blocks(const RunConfig& cfg, const std::string& command);

}  // namespace charstrip
