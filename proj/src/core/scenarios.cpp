#include "scenarios.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>

#include "json.hpp"
#include "quasilinear_solver.hpp"

namespace charstrip {

using nlohmann::json;

int exit_code(ErrorCode code) { return 10 + static_cast<int>(code); }

namespace {

constexpr double kT0 = 0.25;

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json norms_json(const NormReport& nr) {
    json ops = json::array();
    for (const auto& op : nr.ops) {
        json rows = json::array();
        for (const auto& r : op.rows)
            rows.push_back({{"weight_sup", r.weight_sup}, {"row_norm", r.row_norm}, {"bound", r.bound}});
        ops.push_back({{"name", op.name}, {"rows", rows}, {"max", op.max}});
    }
    return {{"periodic", nr.periodic},
            {"operators", ops},
            {"resolution", {{"nx", nr.resolution_nx}, {"nt", nr.resolution_nt}}},
            {"margin", nr.margin}};
}

json conditions_json(const ConditionReport& c) {
    json rows = json::array();
    for (const auto& r : c.rows)
        rows.push_back({{"gamma", r.gamma},
                        {"gamma_tilde", r.gamma_t},
                        {"beta", r.beta},
                        {"inf_b", r.inf_b},
                        {"sup_b", r.sup_b},
                        {"R_norm", r.R_norm},
                        {"B1", {{"branch", branch_name(r.b1.branch)}, {"lhs", r.b1.lhs}, {"pass", r.b1.pass}}},
                        {"B2", {{"first_lhs", r.b2_first}, {"composite_lhs", finite_or_null(r.b2_composite)}}},
                        {"B3", {{"applicable", r.b3_applicable}, {"lhs", finite_or_null(r.b3_lhs)}, {"pass", r.b3}}}});
    json j{{"periodic", c.periodic},
           {"rows", rows},
           {"R_max", c.R_max},
           {"B1", c.B1},
           {"B1_lhs_max", c.B1_lhs_max},
           {"B2", c.B2},
           {"B2_sign", c.B2_sign},
           {"B3", c.B3},
           {"norm1", c.norm1},
           {"norm2", c.norm2},
           {"margin", c.margin},
           {"verdicts", {{"bc_solvable", c.bc_solvable}, {"c1_regular", c.c1_regular}, {"c2_regular", c.c2_regular}}}};
    if (c.norms) j["norms"] = norms_json(*c.norms);
    if (!c.norm_error.empty()) j["norm_error"] = c.norm_error;
    return j;
}

std::string conditions_table(const ConditionReport& c) {
    std::ostringstream os;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-4s %11s %11s %11s %11s %9s %-9s %11s %6s\n", "row", "gamma", "gamma~", "beta",
                  "inf b_jj", "|R_j|", "B1", "B1 lhs", "B3");
    os << buf;
    for (std::size_t j = 0; j < c.rows.size(); ++j) {
        const auto& r = c.rows[j];
        std::snprintf(buf, sizeof buf, "%-4zu %11.5g %11.5g %11.5g %11.5g %9.5g %-9s %11.5g %6s\n", j + 1, r.gamma,
                      r.gamma_t, r.beta, r.inf_b, r.R_norm, branch_name(r.b1.branch), r.b1.lhs,
                      !r.b3_applicable ? "n/a" : r.b3 ? "pass" : "fail");
        os << buf;
    }
    os << "B1 " << (c.B1 ? "pass" : "fail") << "   B2 " << (c.B2 ? "pass" : "fail") << "   B3 "
       << (c.periodic ? (c.B3 ? "pass" : "fail") : "n/a") << "\n";
    if (c.norms)
        for (const auto& op : c.norms->ops) os << "|" << op.name << "| estimate " << fmt("%.6g", op.max) << "\n";
    if (!c.norm_error.empty()) os << "norm estimates unavailable: " << c.norm_error << "\n";
    os << "bc_solvable " << (c.bc_solvable ? "yes" : "no") << "   c1_regular " << (c.c1_regular ? "yes" : "no")
       << "   c2_regular " << (c.c2_regular ? "yes" : "no") << "\n";
    return os.str();
}

json log_json(const IterationLog& log) {
    return {{"iterations", log.iterations},
            {"inner_iterations", log.inner_iterations},
            {"contraction_ratio", log.contraction_ratio},
            {"residuals", log.residuals}};
}

json probes_json(const GridField& u, const std::vector<std::pair<double, double>>& probes) {
    json out = json::array();
    for (auto [x, t] : probes) {
        std::vector<double> v;
        for (int c = 0; c < u.components(); ++c) v.push_back(u.at(c, x, t));
        out.push_back({{"x", x}, {"t", t}, {"u", v}});
    }
    return out;
}

struct Outputs {
    std::string dir;
    std::vector<std::string>* files;

    void text(const std::string& name, const std::string& content) const {
        if (dir.empty()) return;
        auto p = (std::filesystem::path(dir) / name).string();
        write_file_atomic(p, content);
        files->push_back(p);
    }
    void field(const std::string& stem, const GridField& f, const std::vector<std::string>& names) const {
        if (dir.empty()) return;
        text(stem + ".csv", field_to_csv(f, names));
        auto bytes = field_to_checkpoint(f);
        auto p = (std::filesystem::path(dir) / (stem + ".bin")).string();
        write_file_atomic(p, bytes);
        files->push_back(p);
    }
};

Outputs open_outputs(const std::string& dir, std::vector<std::string>& files) {
    if (!dir.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec) fail(ErrorCode::IoError, "cannot create output directory " + dir + ": " + ec.message());
    }
    return {dir, &files};
}

std::vector<std::string> names(const char* stem, int n) {
    std::vector<std::string> v;
    for (int j = 1; j <= n; ++j) v.push_back(stem + std::to_string(j));
    return v;
}

Grid effective_grid(const RunConfig& cfg, const RunOptions& opts) {
    Grid g = *cfg.grid;
    if (opts.nx || opts.nt) {
        int nx = opts.nx.value_or(g.nx), nt = opts.nt.value_or(g.nt());
        if (nx < 8 || nt < 8) fail(ErrorCode::ConfigError, "--nx and --nt must be at least 8");
        g = Grid(nx, TimeGrid(g.time.topology(), nt));
    }
    return g;
}

SolveOptions linear_options(const SolverBlock& s) {
    SolveOptions o;
    o.tol = s.tol;
    o.max_iter = s.max_iter;
    o.patience = s.patience;
    o.margin = s.margin;
    o.allow_unverified = s.allow_unverified;
    return o;
}

AssemblyOptions assembly_options(const SolverBlock& s) {
    AssemblyOptions a;
    a.oversample = s.oversample;
    return a;
}

// Decide the exit verdict from the requested names and the available values.
void decide(RunResult& res, const RunConfig& cfg, const std::map<std::string, bool>& available,
            std::vector<std::string> defaults) {
    std::vector<std::string> req = cfg.output.require.empty() ? std::move(defaults) : cfg.output.require;
    json verdicts = json::object();
    for (const auto& name : req) {
        auto it = available.find(name);
        if (it == available.end())
            fail(ErrorCode::ConfigError, cfg.origin + ": output.require: verdict \"" + name +
                                             "\" is not produced by " + res.command);
        verdicts[name] = it->second;
        if (!it->second) {
            res.verdict = false;
            res.failed_verdicts.push_back(name);
        }
    }
    json j = json::parse(res.json);
    j["requested_verdicts"] = verdicts;
    j["verdict"] = res.verdict;
    res.json = j.dump(2);
}

RunResult run_check(const RunConfig& cfg, const RunOptions& opts) {
    RunResult res;
    res.command = "check";
    const Grid grid = effective_grid(cfg, opts);
    DiagonalSystem sys = config_system(cfg, grid);
    HyperbolicityReport hyp = validate_hyperbolicity(sys, grid, cfg.system->lambda0);
    OperatorAssembly A(sys, *cfg.boundary, grid, assembly_options(cfg.solver));
    ConditionReport c = check_conditions(A, cfg.solver.margin);
    json j{{"schema", "charstrip.check/1"},
           {"hyperbolicity",
            {{"min_speed_margin", hyp.min_speed_margin}, {"min_gap", finite_or_null(hyp.min_gap)}, {"lambda0", hyp.lambda0}}},
           {"conditions", conditions_json(c)}};
    if (hyp.min_det_q) j["hyperbolicity"]["min_det_q"] = *hyp.min_det_q;
    res.json = j.dump(2);
    res.summary = conditions_table(c);
    decide(res, cfg, {{"bc_solvable", c.bc_solvable}, {"c1_regular", c.c1_regular}, {"c2_regular", c.c2_regular}},
           {"bc_solvable"});
    Outputs out = open_outputs(opts.out_dir.empty() ? cfg.output.dir : opts.out_dir, res.files);
    out.text("conditions.json", res.json);
    return res;
}

RunResult run_linear(const RunConfig& cfg, const RunOptions& opts) {
    RunResult res;
    res.command = "solve-linear";
    const Grid grid = effective_grid(cfg, opts);
    DiagonalSystem sys = config_system(cfg, grid);
    validate_hyperbolicity(sys, grid, cfg.system->lambda0);
    OperatorAssembly A(sys, *cfg.boundary, grid, assembly_options(cfg.solver));
    SolveOptions so = linear_options(cfg.solver);
    if (opts.progress)
        so.progress = [&](int it, double r) {
            if (it % 25 == 0) opts.progress("iteration " + std::to_string(it) + "  residual " + fmt("%.3e", r));
        };
    LinearData data = expression_data(cfg.source, cfg.boundary_data);
    SolveReport rep = solve_linear(A, data, so);
    const int n = sys.n();
    json j{{"schema", "charstrip.solve-linear/1"},
           {"conditions", conditions_json(rep.conditions)},
           {"solve",
            {{"route", rep.route},
             {"log", log_json(rep.log)},
             {"u_sup", rep.u_sup},
             {"g_sup", rep.g_sup},
             {"h_sup", rep.h_sup},
             {"F_bound", rep.F_bound},
             {"K", finite_or_null(rep.K)},
             {"apriori_ok", rep.apriori_ok}}},
           {"warnings", rep.warnings},
           {"grid", {{"nx", grid.nx}, {"nt", grid.nt()}}},
           {"probes", probes_json(rep.u, cfg.output.probes)}};
    std::map<std::string, bool> avail{{"bc_solvable", rep.conditions.bc_solvable},
                                      {"c1_regular", rep.conditions.c1_regular},
                                      {"c2_regular", rep.conditions.c2_regular},
                                      {"converged", true}};
    std::vector<std::string> defaults{"converged"};
    std::optional<DerivativeReport> d;
    if (cfg.solver.derivative) {
        d = solve_derivative_field(A, data, rep.u, so, &rep.conditions);
        j["derivative"] = {{"certified", d->certified}, {"flags", d->flags}, {"log", log_json(d->log)}};
    }
    if (cfg.solver.period_check) {
        PeriodicityResult p = verify_periodicity(rep.u, *cfg.solver.period_check);
        const bool ok = p.skipped || p.defect <= 10.0 * cfg.solver.tol;
        j["periodicity"] = {{"defect", p.defect}, {"skipped", p.skipped}, {"t_from", p.t_from}, {"t_to", p.t_to}, {"pass", ok}};
        avail["periodic"] = ok;
        defaults.push_back("periodic");
    }
    res.json = j.dump(2);
    std::ostringstream s;
    s << conditions_table(rep.conditions) << "solve: route " << rep.route << ", " << rep.log.iterations
      << " iterations, final residual " << fmt("%.3e", rep.log.residuals.empty() ? 0.0 : rep.log.residuals.back())
      << ", measured ratio " << fmt("%.4f", rep.log.contraction_ratio) << ", sup|u| " << fmt("%.6g", rep.u_sup) << "\n";
    if (d) s << "derivative: " << d->log.iterations << " iterations" << (d->certified ? "" : " (uncertified)") << "\n";
    res.summary = s.str();
    decide(res, cfg, avail, defaults);

    Outputs out = open_outputs(opts.out_dir.empty() ? cfg.output.dir : opts.out_dir, res.files);
    out.field("solution", rep.u, names("u", n));
    if (rep.v) out.field("solution_v", *rep.v, names("v", n));
    if (d) out.field("derivative", d->w, names("w", n));
    out.text("report.json", res.json);
    res.fields.emplace("solution", std::move(rep.u));
    if (rep.v) res.fields.emplace("solution_v", std::move(*rep.v));
    if (d) res.fields.emplace("derivative", std::move(d->w));
    return res;
}

RunResult run_quasilinear(const RunConfig& cfg, const RunOptions& opts) {
    RunResult res;
    res.command = "solve-quasilinear";
    const SystemBlock& sb = *cfg.system;
    QuasilinearProblem P{sb.quasilinear, cfg.source, cfg.boundary_data, *cfg.boundary, effective_grid(cfg, opts)};
    QuasilinearOptions qo;
    qo.tol = cfg.solver.outer_tol;
    qo.max_outer = cfg.solver.max_outer;
    qo.lambda0 = sb.lambda0;
    qo.delta0 = sb.delta0;
    qo.smallness = cfg.solver.smallness;
    qo.override_gate = cfg.solver.override_gate;
    qo.linear = linear_options(cfg.solver);
    qo.assembly = assembly_options(cfg.solver);
    qo.period = cfg.solver.period_check;
    if (opts.progress)
        qo.progress = [&](const OuterStep& s) {
            char buf[200];
            std::snprintf(buf, sizeof buf, "outer %3d  C0 inc %.3e  C1 inc %.3e  inner %d  (%s)", s.k, s.c0_increment,
                          s.c1_increment, s.inner_iterations, s.derivative_source.c_str());
            opts.progress(buf);
        };
    QuasilinearReport rep = solve_quasilinear(P, qo);
    const int n = sb.n;
    json steps = json::array();
    for (const auto& s : rep.steps)
        steps.push_back({{"k", s.k},
                         {"c0_increment", s.c0_increment},
                         {"c1_increment", s.c1_increment},
                         {"sup_V", s.sup_V},
                         {"inner_iterations", s.inner_iterations},
                         {"derivative_source", s.derivative_source}});
    const double pde = pde_residual(P, rep.V), bnd = boundary_residual(P, rep.V);
    json j{{"schema", "charstrip.solve-quasilinear/1"},
           {"linearized_conditions", conditions_json(rep.linearized)},
           {"data_norm", rep.data_norm},
           {"steps", steps},
           {"ratios", rep.ratios},
           {"converged", rep.converged},
           {"pde_residual", pde},
           {"boundary_residual", bnd},
           {"warnings", rep.warnings},
           {"grid", {{"nx", P.grid.nx}, {"nt", P.grid.nt()}}},
           {"probes", probes_json(rep.V, cfg.output.probes)}};
    std::map<std::string, bool> avail{{"bc_solvable", rep.linearized.bc_solvable},
                                      {"c1_regular", rep.linearized.c1_regular},
                                      {"c2_regular", rep.linearized.c2_regular},
                                      {"converged", rep.converged}};
    std::vector<std::string> defaults{"converged"};
    if (rep.periodicity) {
        const auto& p = *rep.periodicity;
        const bool ok = p.skipped || p.defect <= 10.0 * qo.tol;
        j["periodicity"] = {{"defect", p.defect}, {"skipped", p.skipped}, {"pass", ok}};
        avail["periodic"] = ok;
        defaults.push_back("periodic");
    }
    res.json = j.dump(2);
    std::ostringstream s;
    s << "outer iterations " << rep.steps.size() << (rep.converged ? " (converged)" : "") << ", sup|V| "
      << fmt("%.6g", rep.V.sup_norm()) << ", PDE residual " << fmt("%.3e", pde) << ", boundary residual "
      << fmt("%.3e", bnd) << "\n";
    res.summary = s.str();
    decide(res, cfg, avail, defaults);
    Outputs out = open_outputs(opts.out_dir.empty() ? cfg.output.dir : opts.out_dir, res.files);
    out.field("V", rep.V, names("V", n));
    out.field("U", rep.U, names("U", n));
    out.text("report.json", res.json);
    res.fields.emplace("V", std::move(rep.V));
    res.fields.emplace("U", std::move(rep.U));
    return res;
}

RunResult run_counterexample(const RunConfig& cfg, const RunOptions& opts) {
    RunResult res;
    res.command = "counterexample";
    CounterexampleConfig cc = *cfg.counterexample;
    if (opts.nx) cc.nx = *opts.nx;
    if (opts.nt) cc.nt_list = {*opts.nt};
    CounterexampleReport r = counterexample_scenario(cc, opts.progress);
    json runs = json::array();
    for (const auto& run : r.runs) {
        json dd = json::array();
        for (const auto& d : run.dd) dd.push_back({{"h", d.h}, {"t0", d.at_t0}, {"control", d.at_control}});
        runs.push_back({{"nx", run.nx},
                        {"nt", run.nt},
                        {"iterations", run.iterations},
                        {"contraction_ratio", run.contraction_ratio},
                        {"u2_t0", run.u2_t0},
                        {"error", run.error},
                        {"divided_differences", dd},
                        {"relative_change", {{"t0", run.change_t0}, {"control", run.change_control}}}});
    }
    json j{{"schema", "charstrip.counterexample/1"},
           {"mode", cc.mode == RegularityMode::Critical ? "critical" : "subcritical"},
           {"t0", kT0},
           {"control_point", kT0 + 1.0},
           {"kappa", {{"computed", r.amp.kappa}, {"closed_form", r.kappa_closed}, {"error", r.amp.kappa - r.kappa_closed}}},
           {"omega2", {{"computed", r.amp.omega}, {"expected", -kT0}, {"error", r.amp.omega + kT0}}},
           {"r1", {{"alpha", r.alpha}, {"beta", r.beta}}},
           {"r2", cc.r2},
           {"product", r.product},
           {"trace_closed_form", r.trace_exact},
           {"runs", runs},
           {"conditions", {{"B1", r.B1}, {"G0", r.G0}, {"G1", r.G1}, {"G2", r.G2}, {"norm1", r.norm1}}},
           {"checks", {{"kappa", r.kappa_ok}, {"trace_value", r.trace_ok}, {"regularity", r.regularity_ok}}}};
    res.json = j.dump(2);
    std::ostringstream s;
    s << "kappa " << fmt("%.10f", r.amp.kappa) << " (closed form " << fmt("%.10f", r.kappa_closed) << ")\n";
    s << "mode " << j["mode"].get<std::string>() << ", alpha " << fmt("%.9f", r.alpha) << ", beta " << fmt("%g", r.beta)
      << ", r2 " << fmt("%g", cc.r2) << ", product " << fmt("%.12f", r.product) << "\n";
    s << "|G1| estimate " << fmt("%.6f", r.G1) << "  (i=1 condition " << (r.norm1 ? "passes" : "fails") << ")\n";
    char buf[200];
    std::snprintf(buf, sizeof buf, "%7s %14s %11s", "nt", "u2(0,1/4)", "error");
    s << buf;
    for (double h : cc.steps) {
        std::snprintf(buf, sizeof buf, " %12s", ("DD h=" + fmt("%g", h)).c_str());
        s << buf;
    }
    s << " " << "change t0" << "  " << "change t0+1" << "\n";
    for (const auto& run : r.runs) {
        std::snprintf(buf, sizeof buf, "%7d %14.9f %11.3e", run.nt, run.u2_t0, run.error);
        s << buf;
        for (const auto& d : run.dd) {
            std::snprintf(buf, sizeof buf, " %12.6g", d.at_t0);
            s << buf;
        }
        std::snprintf(buf, sizeof buf, " %9.4f  %11.4f\n", run.change_t0, run.change_control);
        s << buf;
    }
    res.summary = s.str();
    res.verdict = r.kappa_ok && r.trace_ok && r.regularity_ok;
    if (!r.kappa_ok) res.failed_verdicts.push_back("kappa");
    if (!r.trace_ok) res.failed_verdicts.push_back("trace_value");
    if (!r.regularity_ok) res.failed_verdicts.push_back("regularity");
    j["verdict"] = res.verdict;
    res.json = j.dump(2);
    Outputs out = open_outputs(opts.out_dir.empty() ? cfg.output.dir : opts.out_dir, res.files);
    out.text("counterexample.json", res.json);
    return res;
}

}  // namespace

DiagonalSystem config_system(const RunConfig& cfg, const Grid& grid) {
    const SystemBlock& sb = *cfg.system;
    if (sb.mode == SystemMode::Linear) return make_diagonal_system(sb.m, sb.speeds, sb.coupling);
    GridField zero(sb.n, grid);
    return diagonalize_at_state(sb.quasilinear, zero, zero, zero, DiagonalizeOptions{sb.lambda0, sb.delta0});
}

std::string characteristic_csv(const RunConfig& cfg, int family, double x, double t) {
    if (!cfg.system || !cfg.grid) fail(ErrorCode::ConfigError, cfg.origin + ": [system] and [grid] are needed to trace");
    if (family < 1 || family > cfg.system->n) fail(ErrorCode::InvalidArgument, "family index out of range");
    if (!(x >= 0.0 && x <= 1.0)) fail(ErrorCode::InvalidArgument, "x must lie in [0, 1]");
    DiagonalSystem sys = config_system(cfg, *cfg.grid);
    TraceOptions to{cfg.solver.oversample, cfg.grid->nx};
    Characteristic ch = trace(sys.model(), family - 1, x, t, to);
    std::string out = "xi,omega,c0,c1,c2,d,dt_omega\n";
    char buf[256];
    for (const auto& s : ch.samples) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.xi, s.omega, s.c[0], s.c[1],
                      s.c[2], s.d, s.dt_omega);
        out += buf;
    }
    return out;
}

RunResult run(const RunConfig& cfg, const std::string& command, const RunOptions& opts) {
    const std::string cmd = command.empty() ? cfg.command : command;
    if (cmd.empty()) fail(ErrorCode::ConfigError, cfg.origin + ": command: none given in the config or on the command line");
    require_blocks(cfg, cmd);
    if (cmd == "check") return run_check(cfg, opts);
    if (cmd == "solve-linear") return run_linear(cfg, opts);
    if (cmd == "solve-quasilinear") return run_quasilinear(cfg, opts);
    return run_counterexample(cfg, opts);
}

// ---------------------------------------------------------------- counterexample

double kappa_closed_form() { return (2.0 + std::sin(kT0)) / (2.0 - std::sin(kT0)); }

Amplification counterexample_amplification() {
    auto sys = make_diagonal_system(1, {Expr::parse("2/(4*pi-1)"), Expr::parse("-(2+sin(t))")},
                                    {{Expr(0.0), Expr(0.0)}, {Expr(0.0), Expr(0.0)}});
    Characteristic ch = trace(sys.model(), 1, 0.0, kT0, TraceOptions{16, 1024});
    return {ch.exit().dt_omega, ch.exit_time()};
}

CounterexampleSetup counterexample_setup(const CounterexampleConfig& cfg, int nx, int nt, double kappa) {
    CounterexampleSetup s;
    const double target = cfg.mode == RegularityMode::Critical ? 1.0 : cfg.s;
    s.r2 = cfg.r2;
    s.beta = cfg.beta;
    s.alpha = target / (cfg.r2 * kappa);
    if (!(s.alpha - std::fabs(s.beta) > 0.0 && s.alpha + std::fabs(s.beta) < 1.0)) {
        char buf[200];
        std::snprintf(buf, sizeof buf, "r1(t) = %.6g + %.6g sin(t - 1/4) must stay inside (0, 1)", s.alpha, s.beta);
        fail(ErrorCode::ConfigError, buf);
    }
    s.product = s.r2 * s.alpha * kappa;
    s.trace_exact = s.r2 * (4.0 * M_PI - 1.0) / (2.0 * (1.0 - s.r2 * s.alpha));
    s.system = make_diagonal_system(1, {Expr::parse("2/(4*pi-1)"), Expr::parse("-(2+sin(t))")},
                                    {{Expr(0.0), Expr(0.0)}, {Expr(0.0), Expr(0.0)}});
    ReflectionTerm row1;
    row1.k = 1;
    row1.r = Expr(s.alpha) + Expr(s.beta) * sin(Expr::variable(var::t) - Expr(kT0));
    ReflectionTerm row2;
    row2.k = 0;
    row2.r = Expr(s.r2);
    s.boundary = BoundaryOperator::general(2, {{row1}, {row2}});
    s.grid = Grid(nx, TimeGrid(Periodic{2.0 * M_PI}, nt));
    s.data = expression_data({Expr(1.0), Expr(0.0)}, {Expr(0.0), Expr(0.0)});
    return s;
}

double divided_difference(std::span<const double> trace, const TimeGrid& grid, double t, double h) {
    const double fp = interp_cubic(trace, grid.locate_cubic(t + h));
    const double fm = interp_cubic(trace, grid.locate_cubic(t - h));
    return (fp - fm) / (2.0 * h);
}

CounterexampleReport counterexample_scenario(const CounterexampleConfig& cfg,
                                             const std::function<void(const std::string&)>& progress) {
    CounterexampleReport r;
    r.config = cfg;
    r.amp = counterexample_amplification();
    r.kappa_closed = kappa_closed_form();
    r.kappa_ok = std::fabs(r.amp.kappa - r.kappa_closed) <= 1e-6 && std::fabs(r.amp.omega + kT0) <= 1e-8;
    std::vector<int> nts = cfg.nt_list;
    std::sort(nts.begin(), nts.end());
    for (std::size_t idx = 0; idx < nts.size(); ++idx) {
        const int nt = nts[idx];
        CounterexampleSetup s = counterexample_setup(cfg, cfg.nx, nt, r.amp.kappa);
        r.alpha = s.alpha;
        r.beta = s.beta;
        r.product = s.product;
        r.trace_exact = s.trace_exact;
        OperatorAssembly A(s.system, s.boundary, s.grid);
        ConditionReport cond = check_conditions(A);
        SolveOptions so;
        so.tol = cfg.tol;
        SolveReport rep = solve_linear(A, s.data, so, &cond);
        CounterexampleRun run;
        run.nx = cfg.nx;
        run.nt = nt;
        run.iterations = rep.log.iterations;
        run.contraction_ratio = rep.log.contraction_ratio;
        auto trace = rep.u.column(1, 0);
        run.u2_t0 = interp_linear(trace, s.grid.time.locate(kT0));
        run.error = run.u2_t0 - s.trace_exact;
        for (double h : cfg.steps)
            run.dd.push_back({h, divided_difference(trace, s.grid.time, kT0, h),
                              divided_difference(trace, s.grid.time, kT0 + 1.0, h)});
        if (run.dd.size() >= 2) {
            const auto& a = run.dd[run.dd.size() - 2];
            const auto& b = run.dd.back();
            run.change_t0 = std::fabs(b.at_t0 - a.at_t0) / std::fabs(a.at_t0);
            run.change_control = std::fabs(b.at_control - a.at_control) / std::fabs(a.at_control);
        }
        if (idx + 1 == nts.size()) {
            r.B1 = cond.B1;
            if (cond.norms) {
                r.G0 = cond.norms->ops[0].max;
                r.G1 = cond.norms->ops[1].max;
                r.G2 = cond.norms->ops[2].max;
            }
            r.norm1 = cond.norm1;
        }
        if (progress) {
            char buf[200];
            std::snprintf(buf, sizeof buf, "nt %d: %d iterations, u2(0,1/4) = %.9f (error %.3e), DD change %.4f",
                          nt, run.iterations, run.u2_t0, run.error, run.change_t0);
            progress(buf);
        }
        r.runs.push_back(std::move(run));
    }
    const CounterexampleRun& fin = r.runs.back();
    r.trace_ok = std::fabs(fin.error) <= 1e-4;
    r.regularity_ok = cfg.mode == RegularityMode::Critical ? (fin.change_t0 > 0.10 && !r.norm1)
                                                           : (fin.change_t0 < 0.01);
    return r;
}

}  // namespace charstrip
