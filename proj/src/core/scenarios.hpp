#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "config.hpp"
#include "error.hpp"
#include "linear_solver.hpp"

namespace charstrip {

inline constexpr int kExitOk = 0;
inline constexpr int kExitVerdictFailed = 1;
inline constexpr int kExitUsage = 2;
/// Library errors exit with 10 + their position in ErrorCode.
int exit_code(ErrorCode code);

struct RunOptions {
    std::string out_dir;  // overrides [output].dir when non-empty
    std::optional<int> nx, nt;
    std::function<void(const std::string&)> progress;
};

struct RunResult {
    std::string command;
    std::string json;     // report, pretty-printed
    std::string summary;  // human-readable table
    bool verdict = true;
    std::vector<std::string> failed_verdicts;
    std::map<std::string, GridField> fields;
    std::vector<std::string> files;  // written artifacts
};

/// Dispatches check / solve-linear / solve-quasilinear / counterexample. An empty
/// command falls back to the config's own.
RunResult run(const RunConfig& cfg, const std::string& command, const RunOptions& opts = {});

/// Diagonal system of the config at V = 0 (the linearization in quasilinear mode).
DiagonalSystem config_system(const RunConfig& cfg, const Grid& grid);

/// CSV of one traced characteristic: xi, omega, c0, c1, c2, d, dt_omega.
std::string characteristic_csv(const RunConfig& cfg, int family, double x, double t);

// ---------------------------------------------------------------- counterexample

/// (2 + sin 1/4) / (2 - sin 1/4).
double kappa_closed_form();
/// d_t omega_2(1, 0, 1/4) traced numerically, and omega_2(1, 0, 1/4).
struct Amplification {
    double kappa = 0.0;
    double omega = 0.0;
};
Amplification counterexample_amplification();

struct CounterexampleSetup {
    DiagonalSystem system;
    BoundaryOperator boundary;
    Grid grid;
    LinearData data;
    double alpha = 0.0, beta = 0.0, r2 = 0.0;
    double product = 0.0;     // r2 r1(1/4) kappa
    double trace_exact = 0.0; // r2 (4 pi - 1) / (2 (1 - r2 r1(1/4)))
};

/// u1_t + 2/(4pi-1) u1_x = 1, u2_t - (2 + sin t) u2_x = 0, 2pi-periodic, with
/// u1(0,t) = r1(t) u2(0,t), u2(1,t) = r2 u1(1,t), r1(t) = alpha + beta sin(t - 1/4).
CounterexampleSetup counterexample_setup(const CounterexampleConfig& cfg, int nx, int nt, double kappa);

/// Centred divided difference (f(t+h) - f(t-h)) / 2h of a trace read with cubic
/// interpolation.
double divided_difference(std::span<const double> trace, const TimeGrid& grid, double t, double h);

struct DividedDifference {
    double h;
    double at_t0;
    double at_control;
};

struct CounterexampleRun {
    int nx = 0, nt = 0;
    int iterations = 0;
    double contraction_ratio = 0.0;
    double u2_t0 = 0.0;
    double error = 0.0;  // against the closed form
    std::vector<DividedDifference> dd;
    double change_t0 = 0.0;       // relative change between the last two steps
    double change_control = 0.0;
};

struct CounterexampleReport {
    CounterexampleConfig config;
    Amplification amp;
    double kappa_closed = 0.0;
    double alpha = 0.0, beta = 0.0, product = 0.0, trace_exact = 0.0;
    std::vector<CounterexampleRun> runs;
    bool B1 = false;
    double G0 = 0.0, G1 = 0.0, G2 = 0.0;
    bool norm1 = false;
    bool kappa_ok = false, trace_ok = false, regularity_ok = false;
};

CounterexampleReport counterexample_scenario(const CounterexampleConfig& cfg,
                                             const std::function<void(const std::string&)>& progress = {});

}  // namespace charstrip
