#include "config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include "toml.hpp"

#include "error.hpp"

namespace charstrip {

namespace {

class Reader {
public:
    explicit Reader(std::string origin) : origin_(std::move(origin)) {}

    [[noreturn]] void error(const std::string& field, const std::string& msg) const {
        fail(ErrorCode::ConfigError, origin_ + ": " + field + ": " + msg);
    }

    void check_keys(const toml::table& t, const std::string& path, std::initializer_list<const char*> allowed) const {
        std::set<std::string> ok(allowed.begin(), allowed.end());
        for (auto&& [k, v] : t) {
            (void)v;
            if (!ok.count(std::string(k.str())))
                error(path.empty() ? std::string(k.str()) : path + "." + std::string(k.str()), "unknown key");
        }
    }

    const toml::table* table(const toml::table& t, const char* key, const std::string& path, bool required) const {
        const toml::node* n = t.get(key);
        if (!n) {
            if (required) error("[" + path + "]", "missing block");
            return nullptr;
        }
        if (!n->is_table()) error("[" + path + "]", "must be a table");
        return n->as_table();
    }

    double number(const toml::node& n, const std::string& field) const {
        if (auto v = n.value<double>()) return *v;
        if (auto s = n.value<std::string>()) {
            Expr e = expr_from(*s, 0, field);
            return e.eval(Env{});
        }
        error(field, "expected a number or a constant expression");
    }

    std::optional<double> opt_number(const toml::table& t, const char* key, const std::string& path) const {
        if (const toml::node* n = t.get(key)) return number(*n, path + "." + key);
        return std::nullopt;
    }

    std::optional<long long> opt_int(const toml::table& t, const char* key, const std::string& path) const {
        const toml::node* n = t.get(key);
        if (!n) return std::nullopt;
        if (auto v = n->value_exact<int64_t>()) return *v;
        error(path + "." + key, "expected an integer");
    }

    std::optional<bool> opt_bool(const toml::table& t, const char* key, const std::string& path) const {
        const toml::node* n = t.get(key);
        if (!n) return std::nullopt;
        if (auto v = n->value_exact<bool>()) return *v;
        error(path + "." + key, "expected true or false");
    }

    std::optional<std::string> opt_string(const toml::table& t, const char* key, const std::string& path) const {
        const toml::node* n = t.get(key);
        if (!n) return std::nullopt;
        if (auto v = n->value_exact<std::string>()) return *v;
        error(path + "." + key, "expected a string");
    }

    Expr expr_from(const std::string& text, VarMask allowed, const std::string& field) const {
        try {
            return Expr::parse(text, allowed);
        } catch (const Error& e) {
            error(field, std::string(error_name(e.code())) + ": " + e.what());
        }
    }

    Expr expr(const toml::node& n, VarMask allowed, const std::string& field) const {
        if (auto s = n.value_exact<std::string>()) return expr_from(*s, allowed, field);
        if (auto v = n.value<double>()) return Expr(*v);
        error(field, "expected an expression string or a number");
    }

    std::vector<Expr> expr_list(const toml::node* n, std::size_t count, VarMask allowed, const std::string& field) const {
        if (!n) error(field, "missing");
        const toml::array* a = n->as_array();
        if (!a) error(field, "expected an array");
        if (a->size() != count) error(field, "expected " + std::to_string(count) + " entries, got " + std::to_string(a->size()));
        std::vector<Expr> out;
        for (std::size_t i = 0; i < a->size(); ++i) out.push_back(expr(*a->get(i), allowed, field + "[" + std::to_string(i + 1) + "]"));
        return out;
    }

    /// n x n matrix as an array of row arrays, flattened row-major.
    std::vector<Expr> expr_matrix(const toml::node* n, int size, VarMask allowed, const std::string& field) const {
        if (!n) error(field, "missing");
        const toml::array* a = n->as_array();
        if (!a || static_cast<int>(a->size()) != size) error(field, "expected " + std::to_string(size) + " rows");
        std::vector<Expr> out;
        for (int r = 0; r < size; ++r) {
            auto row = expr_list(a->get(r), size, allowed, field + "[" + std::to_string(r + 1) + "]");
            out.insert(out.end(), row.begin(), row.end());
        }
        return out;
    }

    const std::string& origin() const { return origin_; }

private:
    std::string origin_;
};

SystemBlock read_system(const Reader& rd, const toml::table& t) {
    rd.check_keys(t, "system", {"mode", "n", "m", "lambda0", "delta0", "speeds", "coupling", "A", "B", "Q", "eigenvalues"});
    SystemBlock s;
    std::string mode = rd.opt_string(t, "mode", "system").value_or("linear");
    if (mode == "linear") s.mode = SystemMode::Linear;
    else if (mode == "quasilinear") s.mode = SystemMode::Quasilinear;
    else rd.error("system.mode", "expected \"linear\" or \"quasilinear\"");
    auto n = rd.opt_int(t, "n", "system");
    auto m = rd.opt_int(t, "m", "system");
    if (!n) rd.error("system.n", "missing");
    if (!m) rd.error("system.m", "missing");
    if (*n < 1 || *n > var::max_state) rd.error("system.n", "must lie in [1, " + std::to_string(var::max_state) + "]");
    if (*m < 0 || *m > *n) rd.error("system.m", "must lie in [0, n]");
    s.n = static_cast<int>(*n);
    s.m = static_cast<int>(*m);
    s.lambda0 = rd.opt_number(t, "lambda0", "system").value_or(1e-3);
    s.delta0 = rd.opt_number(t, "delta0", "system").value_or(1.0);
    if (!(s.lambda0 > 0.0)) rd.error("system.lambda0", "must be positive");
    if (!(s.delta0 > 0.0)) rd.error("system.delta0", "must be positive");
    if (s.mode == SystemMode::Linear) {
        for (const char* k : {"A", "B", "Q", "eigenvalues"})
            if (t.get(k)) rd.error(std::string("system.") + k, "only allowed in quasilinear mode");
        s.speeds = rd.expr_list(t.get("speeds"), s.n, kMaskXT, "system.speeds");
        if (t.get("coupling")) {
            auto flat = rd.expr_matrix(t.get("coupling"), s.n, kMaskXT, "system.coupling");
            s.coupling.assign(s.n, {});
            for (int j = 0; j < s.n; ++j) s.coupling[j].assign(flat.begin() + j * s.n, flat.begin() + (j + 1) * s.n);
        } else {
            s.coupling.assign(s.n, std::vector<Expr>(s.n, Expr(0.0)));
        }
    } else {
        for (const char* k : {"speeds", "coupling"})
            if (t.get(k)) rd.error(std::string("system.") + k, "only allowed in linear mode");
        const VarMask mask = kMaskXT | state_mask(s.n);
        auto& q = s.quasilinear;
        q.n = s.n;
        q.m = s.m;
        q.A = rd.expr_matrix(t.get("A"), s.n, mask, "system.A");
        q.Q = rd.expr_matrix(t.get("Q"), s.n, mask, "system.Q");
        q.B = t.get("B") ? rd.expr_matrix(t.get("B"), s.n, mask, "system.B") : std::vector<Expr>(s.n * s.n, Expr(0.0));
        q.eigen = rd.expr_list(t.get("eigenvalues"), s.n, mask, "system.eigenvalues");
    }
    return s;
}

BoundaryOperator read_boundary(const Reader& rd, const toml::table& t, int n) {
    rd.check_keys(t, "boundary", {"type", "term"});
    std::string type = rd.opt_string(t, "type", "boundary").value_or("");
    if (type == "periodic") {
        if (t.get("term")) rd.error("boundary.term", "periodic boundaries take no terms");
        return BoundaryOperator::periodic(n);
    }
    if (type != "general") rd.error("boundary.type", "expected \"periodic\" or \"general\"");
    std::vector<std::vector<ReflectionTerm>> rows(n);
    if (const toml::node* terms = t.get("term")) {
        const toml::array* a = terms->as_array();
        if (!a) rd.error("boundary.term", "expected an array of tables ([[boundary.term]])");
        for (std::size_t i = 0; i < a->size(); ++i) {
            const std::string path = "boundary.term[" + std::to_string(i + 1) + "]";
            const toml::table* tt = a->get(i)->as_table();
            if (!tt) rd.error(path, "expected a table");
            rd.check_keys(*tt, path, {"row", "col", "r", "theta", "kernel", "horizon"});
            auto row = rd.opt_int(*tt, "row", path);
            auto col = rd.opt_int(*tt, "col", path);
            if (!row || *row < 1 || *row > n) rd.error(path + ".row", "must lie in [1, n]");
            if (!col || *col < 1 || *col > n) rd.error(path + ".col", "must lie in [1, n]");
            ReflectionTerm term;
            term.k = static_cast<int>(*col - 1);
            if (auto* e = tt->get("r")) term.r = rd.expr(*e, kMaskT, path + ".r");
            if (auto* e = tt->get("theta")) term.theta = rd.expr(*e, kMaskT, path + ".theta");
            if (auto* e = tt->get("kernel")) term.p = rd.expr(*e, kMaskTTau, path + ".kernel");
            if (auto* e = tt->get("horizon")) term.horizon = rd.expr(*e, kMaskT, path + ".horizon");
            rows[*row - 1].push_back(term);
        }
    }
    return BoundaryOperator::general(n, std::move(rows));
}

Grid read_grid(const Reader& rd, const toml::table& t) {
    rd.check_keys(t, "grid", {"nx", "nt", "topology", "period", "t_lo", "t_hi", "spin_up"});
    auto nx = rd.opt_int(t, "nx", "grid");
    auto nt = rd.opt_int(t, "nt", "grid");
    if (!nx) rd.error("grid.nx", "missing");
    if (!nt) rd.error("grid.nt", "missing");
    if (*nx < 8) rd.error("grid.nx", "must be at least 8");
    if (*nt < 8) rd.error("grid.nt", "must be at least 8");
    std::string topo = rd.opt_string(t, "topology", "grid").value_or("");
    TimeTopology tt;
    if (topo == "periodic") {
        auto T = rd.opt_number(t, "period", "grid");
        if (!T || !(*T > 0.0)) rd.error("grid.period", "periodic topology needs a positive period");
        for (const char* k : {"t_lo", "t_hi", "spin_up"})
            if (t.get(k)) rd.error(std::string("grid.") + k, "only allowed for window topology");
        tt = Periodic{*T};
    } else if (topo == "window") {
        auto lo = rd.opt_number(t, "t_lo", "grid");
        auto hi = rd.opt_number(t, "t_hi", "grid");
        if (!lo) rd.error("grid.t_lo", "missing");
        if (!hi) rd.error("grid.t_hi", "missing");
        if (!(*hi > *lo)) rd.error("grid.t_hi", "must exceed t_lo");
        double L = rd.opt_number(t, "spin_up", "grid").value_or(0.0);
        if (!(L >= 0.0) || L >= *hi - *lo) rd.error("grid.spin_up", "must lie in [0, t_hi - t_lo)");
        if (t.get("period")) rd.error("grid.period", "only allowed for periodic topology");
        tt = Window{*lo, *hi, L};
    } else {
        rd.error("grid.topology", "expected \"periodic\" or \"window\"");
    }
    try {
        return Grid(static_cast<int>(*nx), TimeGrid(tt, static_cast<int>(*nt)));
    } catch (const Error& e) {
        rd.error("[grid]", e.what());
    }
}

SolverBlock read_solver(const Reader& rd, const toml::table& t) {
    rd.check_keys(t, "solver", {"tol", "max_iter", "patience", "margin", "allow_unverified", "derivative", "oversample",
                                "outer_tol", "max_outer", "smallness", "override_gate", "period_check"});
    SolverBlock s;
    auto pos = [&](const char* key, double& dst) {
        if (auto v = rd.opt_number(t, key, "solver")) {
            if (!(*v > 0.0)) rd.error(std::string("solver.") + key, "must be positive");
            dst = *v;
        }
    };
    auto posint = [&](const char* key, int& dst) {
        if (auto v = rd.opt_int(t, key, "solver")) {
            if (*v < 1 || *v > 100000000) rd.error(std::string("solver.") + key, "must be a positive integer");
            dst = static_cast<int>(*v);
        }
    };
    pos("tol", s.tol);
    posint("max_iter", s.max_iter);
    posint("patience", s.patience);
    if (auto v = rd.opt_number(t, "margin", "solver")) {
        if (!(*v >= 0.0 && *v < 1.0)) rd.error("solver.margin", "must lie in [0, 1)");
        s.margin = *v;
    }
    s.allow_unverified = rd.opt_bool(t, "allow_unverified", "solver").value_or(false);
    s.derivative = rd.opt_bool(t, "derivative", "solver").value_or(false);
    posint("oversample", s.oversample);
    pos("outer_tol", s.outer_tol);
    posint("max_outer", s.max_outer);
    pos("smallness", s.smallness);
    s.override_gate = rd.opt_bool(t, "override_gate", "solver").value_or(false);
    if (auto v = rd.opt_number(t, "period_check", "solver")) {
        if (!(*v > 0.0)) rd.error("solver.period_check", "must be positive");
        s.period_check = *v;
    }
    return s;
}

OutputBlock read_output(const Reader& rd, const toml::table& t) {
    rd.check_keys(t, "output", {"dir", "probes", "require"});
    OutputBlock o;
    o.dir = rd.opt_string(t, "dir", "output").value_or("");
    if (const toml::node* p = t.get("probes")) {
        const toml::array* a = p->as_array();
        if (!a) rd.error("output.probes", "expected an array of [x, t] pairs");
        for (std::size_t i = 0; i < a->size(); ++i) {
            const std::string path = "output.probes[" + std::to_string(i + 1) + "]";
            const toml::array* pr = a->get(i)->as_array();
            if (!pr || pr->size() != 2) rd.error(path, "expected [x, t]");
            double x = rd.number(*pr->get(0), path);
            double tt = rd.number(*pr->get(1), path);
            if (!(x >= 0.0 && x <= 1.0)) rd.error(path, "x must lie in [0, 1]");
            o.probes.emplace_back(x, tt);
        }
    }
    if (const toml::node* r = t.get("require")) {
        const toml::array* a = r->as_array();
        if (!a) rd.error("output.require", "expected an array of verdict names");
        static const std::set<std::string> known{"bc_solvable", "c1_regular", "c2_regular", "converged", "periodic"};
        for (std::size_t i = 0; i < a->size(); ++i) {
            auto s = a->get(i)->value_exact<std::string>();
            if (!s || !known.count(*s))
                rd.error("output.require[" + std::to_string(i + 1) + "]",
                         "expected one of bc_solvable, c1_regular, c2_regular, converged, periodic");
            o.require.push_back(*s);
        }
    }
    return o;
}

CounterexampleConfig read_counterexample(const Reader& rd, const toml::table& t) {
    rd.check_keys(t, "counterexample", {"r2", "beta", "mode", "s", "nt_list", "nx", "steps", "tol"});
    CounterexampleConfig c;
    c.r2 = rd.opt_number(t, "r2", "counterexample").value_or(c.r2);
    c.beta = rd.opt_number(t, "beta", "counterexample").value_or(c.beta);
    c.s = rd.opt_number(t, "s", "counterexample").value_or(c.s);
    c.tol = rd.opt_number(t, "tol", "counterexample").value_or(c.tol);
    std::string mode = rd.opt_string(t, "mode", "counterexample").value_or("critical");
    if (mode == "critical") c.mode = RegularityMode::Critical;
    else if (mode == "subcritical") c.mode = RegularityMode::Subcritical;
    else rd.error("counterexample.mode", "expected \"critical\" or \"subcritical\"");
    if (auto v = rd.opt_int(t, "nx", "counterexample")) {
        if (*v < 8) rd.error("counterexample.nx", "must be at least 8");
        c.nx = static_cast<int>(*v);
    }
    if (const toml::node* n = t.get("nt_list")) {
        const toml::array* a = n->as_array();
        if (!a || a->empty()) rd.error("counterexample.nt_list", "expected a non-empty array of integers");
        c.nt_list.clear();
        for (std::size_t i = 0; i < a->size(); ++i) {
            auto v = a->get(i)->value_exact<int64_t>();
            if (!v || *v < 8 || *v > (1 << 24)) rd.error("counterexample.nt_list", "entries must be integers >= 8");
            c.nt_list.push_back(static_cast<int>(*v));
        }
    }
    if (const toml::node* n = t.get("steps")) {
        const toml::array* a = n->as_array();
        if (!a || a->empty()) rd.error("counterexample.steps", "expected a non-empty array of numbers");
        c.steps.clear();
        for (std::size_t i = 0; i < a->size(); ++i) {
            double h = rd.number(*a->get(i), "counterexample.steps");
            if (!(h > 0.0 && h < 1.0)) rd.error("counterexample.steps", "steps must lie in (0, 1)");
            c.steps.push_back(h);
        }
    }
    if (!(c.r2 > 0.0 && c.r2 < 1.0)) rd.error("counterexample.r2", "must lie in (0, 1)");
    if (c.mode == RegularityMode::Subcritical && !(c.s > 0.0 && c.s < 1.0))
        rd.error("counterexample.s", "must lie in (0, 1)");
    if (c.mode == RegularityMode::Critical && c.beta == 0.0)
        rd.error("counterexample.beta", "critical mode needs a nonzero slope");
    return c;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& origin) {
    Reader rd(origin);
    toml::table root;
    try {
        root = toml::parse(text, origin);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << e.description() << " (line " << e.source().begin.line << ", column " << e.source().begin.column << ")";
        rd.error("syntax", os.str());
    }
    rd.check_keys(root, "", {"command", "system", "boundary", "rhs", "grid", "solver", "output", "counterexample"});
    RunConfig cfg;
    cfg.origin = origin;
    cfg.command = rd.opt_string(root, "command", "").value_or("");

    if (auto* t = rd.table(root, "system", "system", false)) cfg.system = read_system(rd, *t);
    if (auto* t = rd.table(root, "boundary", "boundary", false)) {
        if (!cfg.system) rd.error("[boundary]", "needs a [system] block for n");
        cfg.boundary = read_boundary(rd, *t, cfg.system->n);
    }
    if (auto* t = rd.table(root, "rhs", "rhs", false)) {
        if (!cfg.system) rd.error("[rhs]", "needs a [system] block for n");
        rd.check_keys(*t, "rhs", {"f", "h"});
        const int n = cfg.system->n;
        cfg.source = t->get("f") ? rd.expr_list(t->get("f"), n, kMaskXT, "rhs.f") : std::vector<Expr>(n, Expr(0.0));
        cfg.boundary_data = t->get("h") ? rd.expr_list(t->get("h"), n, kMaskT, "rhs.h") : std::vector<Expr>(n, Expr(0.0));
    } else if (cfg.system) {
        cfg.source.assign(cfg.system->n, Expr(0.0));
        cfg.boundary_data.assign(cfg.system->n, Expr(0.0));
    }
    if (auto* t = rd.table(root, "grid", "grid", false)) cfg.grid = read_grid(rd, *t);
    if (auto* t = rd.table(root, "solver", "solver", false)) cfg.solver = read_solver(rd, *t);
    if (auto* t = rd.table(root, "output", "output", false)) cfg.output = read_output(rd, *t);
    if (auto* t = rd.table(root, "counterexample", "counterexample", false))
        cfg.counterexample = read_counterexample(rd, *t);
    if (!cfg.command.empty()) require_blocks(cfg, cfg.command);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::ConfigError, path + ": cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

void require_blocks(const RunConfig& cfg, const std::string& command) {
    Reader rd(cfg.origin);
    if (command == "counterexample") {
        if (!cfg.counterexample) rd.error("[counterexample]", "missing block");
        return;
    }
    if (command != "check" && command != "solve-linear" && command != "solve-quasilinear")
        rd.error("command", "unknown command \"" + command + "\"");
    if (!cfg.system) rd.error("[system]", "missing block");
    if (!cfg.boundary) rd.error("[boundary]", "missing block");
    if (!cfg.grid) rd.error("[grid]", "missing block");
    if (command == "solve-linear" && cfg.system->mode != SystemMode::Linear)
        rd.error("system.mode", "solve-linear needs mode = \"linear\"");
    if (command == "solve-quasilinear" && cfg.system->mode != SystemMode::Quasilinear)
        rd.error("system.mode", "solve-quasilinear needs mode = \"quasilinear\"");
}

}  // namespace charstrip
