#pragma once

#include <optional>
#include <string>
#include <vector>

#include "operators.hpp"

namespace charstrip {

struct GammaBeta {
    std::vector<double> gamma;    // inf b_jj / |a_j|
    std::vector<double> gamma_t;  // inf |b_jj / a_j|
    std::vector<double> beta;     // sup sum_{k != j} |b_jk / a_j|
    std::vector<double> inf_b, sup_b, inf_abs_b;
};

GammaBeta compute_gamma_beta(const DiagonalSystem& sys, const Grid& sampling);

enum class B1Branch { Positive, Negative, Zero };
const char* branch_name(B1Branch b);

struct B1Row {
    B1Branch branch;
    double lhs;
    bool pass;
};

/// The three-way split on inf b_jj (dead-band `deadband` counts as zero).
B1Row check_B1_row(double inf_b, double gamma, double beta, double R_norm, double deadband = 1e-9);

struct B2Result {
    bool sign_ok = false;                  // inf b_jj > 0 for all j
    std::vector<double> first_lhs;         // e^{-gamma_j} |R_j|
    std::vector<double> composite_lhs;     // (1 + |R| / (1 - max_i e^{-gamma_i}|R_i|)) beta_j/gamma_j (1 - e^{-gamma_j})
    bool pass = false;
};

B2Result check_B2(const std::vector<double>& inf_b, const std::vector<double>& gamma, const std::vector<double>& beta,
                  const std::vector<double>& R_norm, double deadband = 1e-9);

/// Throws B3Inapplicable when inf |b_jj| lies in the dead-band.
double B3_lhs(double inf_abs_b, double gamma_t, double beta, double deadband = 1e-9);

struct RowConditions {
    double gamma, gamma_t, beta, inf_b, sup_b, R_norm;
    B1Row b1;
    double b2_first, b2_composite;
    bool b3_applicable;
    double b3_lhs;
    bool b3;
};

struct ConditionReport {
    bool periodic = false;
    std::vector<RowConditions> rows;
    double R_max = 0.0;
    bool B1 = false, B2 = false, B2_sign = false, B3 = false;
    double B1_lhs_max = 0.0;
    std::optional<NormReport> norms;
    std::string norm_error;
    bool norm1 = false, norm2 = false;
    double margin = 0.01;
    bool bc_solvable = false, c1_regular = false, c2_regular = false;
};

ConditionReport check_conditions(const OperatorAssembly& asm_, double margin = 0.01);

/// Checks one operator estimate against 1 - margin.
inline bool norm_condition_passes(double estimate, double margin) { return estimate < 1.0 - margin; }

}  // namespace charstrip
