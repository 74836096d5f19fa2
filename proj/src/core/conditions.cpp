#include "conditions.hpp"

#include <cmath>

#include "error.hpp"

namespace charstrip {

const char* branch_name(B1Branch b) {
    switch (b) {
        case B1Branch::Positive: return "positive";
        case B1Branch::Negative: return "negative";
        case B1Branch::Zero: return "zero";
    }
    return "?";
}

GammaBeta compute_gamma_beta(const DiagonalSystem& sys, const Grid& g) {
    const auto& model = sys.model();
    const int n = model.n();
    GammaBeta r;
    r.gamma.assign(n, INFINITY);
    r.gamma_t.assign(n, INFINITY);
    r.beta.assign(n, 0.0);
    r.inf_b.assign(n, INFINITY);
    r.sup_b.assign(n, -INFINITY);
    r.inf_abs_b.assign(n, INFINITY);
    for (int i = 0; i <= g.nx; ++i)
        for (int k = 0; k < g.nt(); ++k) {
            const double x = g.x(i), t = g.time.time(k);
            for (int j = 0; j < n; ++j) {
                const double a = model.speed(j, x, t);
                const double b = model.coupling(j, j, x, t);
                r.gamma[j] = std::min(r.gamma[j], b / std::fabs(a));
                r.gamma_t[j] = std::min(r.gamma_t[j], std::fabs(b / a));
                r.inf_b[j] = std::min(r.inf_b[j], b);
                r.sup_b[j] = std::max(r.sup_b[j], b);
                r.inf_abs_b[j] = std::min(r.inf_abs_b[j], std::fabs(b));
                double s = 0.0;
                for (int l = 0; l < n; ++l)
                    if (l != j && model.coupling_present(j, l)) s += std::fabs(model.coupling(j, l, x, t) / a);
                r.beta[j] = std::max(r.beta[j], s);
            }
        }
    return r;
}

namespace {
// beta/gamma (1 - e^{-gamma}), continuous through gamma = 0
double damped(double beta, double gamma) {
    if (beta == 0.0) return 0.0;
    if (std::fabs(gamma) < 1e-12) return beta;
    return beta / gamma * (-std::expm1(-gamma));
}
}  // namespace

B1Row check_B1_row(double inf_b, double gamma, double beta, double R_norm, double deadband) {
    B1Row r;
    if (inf_b > deadband) {
        r.branch = B1Branch::Positive;
        r.lhs = R_norm + damped(beta, gamma);
    } else if (inf_b < -deadband) {
        r.branch = B1Branch::Negative;
        r.lhs = std::exp(-gamma) * R_norm + damped(beta, gamma);
    } else {
        r.branch = B1Branch::Zero;
        r.lhs = R_norm + beta;
    }
    r.pass = r.lhs < 1.0;
    return r;
}

B2Result check_B2(const std::vector<double>& inf_b, const std::vector<double>& gamma, const std::vector<double>& beta,
                  const std::vector<double>& R_norm, double deadband) {
    const std::size_t n = inf_b.size();
    B2Result r;
    r.sign_ok = true;
    double Rmax = 0.0, first_max = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        if (!(inf_b[j] > deadband)) r.sign_ok = false;
        Rmax = std::max(Rmax, R_norm[j]);
        r.first_lhs.push_back(std::exp(-gamma[j]) * R_norm[j]);
        first_max = std::max(first_max, r.first_lhs.back());
    }
    bool ok = r.sign_ok && first_max < 1.0;
    for (std::size_t j = 0; j < n; ++j) {
        double comp = first_max < 1.0 ? (1.0 + Rmax / (1.0 - first_max)) * damped(beta[j], gamma[j]) : INFINITY;
        r.composite_lhs.push_back(comp);
        if (!(comp < 1.0)) ok = false;
    }
    r.pass = ok;
    return r;
}

double B3_lhs(double inf_abs_b, double gamma_t, double beta, double deadband) {
    if (!(inf_abs_b > deadband)) fail(ErrorCode::B3Inapplicable, "inf |b_jj| = 0, the periodic condition does not apply");
    return beta * (2.0 - std::exp(-gamma_t)) / gamma_t;
}

ConditionReport check_conditions(const OperatorAssembly& asm_, double margin) {
    const double db = asm_.options().sign_deadband;
    const int n = asm_.n();
    ConditionReport rep;
    rep.periodic = asm_.boundary().is_periodic();
    rep.margin = margin;
    GammaBeta gb = compute_gamma_beta(asm_.system(), asm_.grid());
    std::vector<double> Rn(n);
    for (int j = 0; j < n; ++j) {
        Rn[j] = asm_.boundary().row_norm(j, asm_.grid().time);
        rep.R_max = std::max(rep.R_max, Rn[j]);
    }
    B2Result b2 = check_B2(gb.inf_b, gb.gamma, gb.beta, Rn, db);
    rep.B1 = true;
    rep.B3 = rep.periodic;
    for (int j = 0; j < n; ++j) {
        RowConditions row{};
        row.gamma = gb.gamma[j];
        row.gamma_t = gb.gamma_t[j];
        row.beta = gb.beta[j];
        row.inf_b = gb.inf_b[j];
        row.sup_b = gb.sup_b[j];
        row.R_norm = Rn[j];
        row.b1 = check_B1_row(gb.inf_b[j], gb.gamma[j], gb.beta[j], Rn[j], db);
        row.b2_first = b2.first_lhs[j];
        row.b2_composite = b2.composite_lhs[j];
        row.b3_applicable = gb.inf_abs_b[j] > db;
        row.b3_lhs = row.b3_applicable ? B3_lhs(gb.inf_abs_b[j], gb.gamma_t[j], gb.beta[j], db) : NAN;
        row.b3 = row.b3_applicable && row.b3_lhs < 1.0;
        rep.B1 = rep.B1 && row.b1.pass;
        rep.B3 = rep.B3 && row.b3;
        rep.B1_lhs_max = std::max(rep.B1_lhs_max, row.b1.lhs);
        rep.rows.push_back(row);
    }
    rep.B2 = b2.pass;
    rep.B2_sign = b2.sign_ok;
    rep.bc_solvable = rep.B1 || rep.B2 || rep.B3;
    try {
        rep.norms = asm_.estimate_operator_norms(margin);
        rep.norm1 = norm_condition_passes(rep.norms->ops[1].max, margin);
        rep.norm2 = norm_condition_passes(rep.norms->ops[2].max, margin);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::MixedSignB) throw;
        rep.norm_error = e.what();
    }
    rep.c1_regular = rep.bc_solvable && rep.norm1;
    rep.c2_regular = rep.c1_regular && rep.norm2;
    return rep;
}

}  // namespace charstrip
