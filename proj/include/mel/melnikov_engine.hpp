#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "mel/reversible_systems.hpp"

namespace mel {

enum class Derivative { dv_dalpha, dv2, dv3 };
std::string to_string(Derivative d);
Derivative derivative_from_string(const std::string& s);

enum class BifurcationKind { transcritical, pitchfork };
enum class BranchSide { alpha_positive, alpha_negative };
std::string to_string(BifurcationKind b);
std::string to_string(BranchSide b);

// n = 2k (even) or n = 2k - 1 (odd)
unsigned k_of(unsigned n);

VariationTriple second_variation(const PerturbedSystem& s);

// Polynomial factor p(t) of a Melnikov derivative: the derivative equals the
// full-line integral of exp(-t^2/2) p(t). Prefactors and the half-line halving are included.
HermiteSeries integrand(const PerturbedSystem& s, Derivative which);
// Folded node, n even: the same third derivative after integrating by parts with z1 = z3'/2.
HermiteSeries dv3_integrand_by_parts(const PerturbedSystem& s);

RadicalValue d2_dv_dalpha(const PerturbedSystem& s);
RadicalValue d2_dv2(const PerturbedSystem& s);
RadicalValue d3_dv3(const PerturbedSystem& s);
RadicalValue d3_dv3_by_parts(const PerturbedSystem& s);
RadicalValue derivative(const PerturbedSystem& s, Derivative which);

// Printed closed forms, evaluated directly from their factorial expressions.
RadicalValue closed_form_oracle(const PerturbedSystem& s, Derivative which);
bool has_closed_form(const PerturbedSystem& s, Derivative which);

struct CoefficientTable {
    SystemKind system = SystemKind::folded_node;
    unsigned k = 0;
    std::vector<Rational> c;
    std::vector<Rational> d;  // Nose odd only
    bool sign_pattern_holds = false;
    bool ratio_bound_holds = false;
    bool sum_positive = false;
    bool halved_bound_positive = false;  // folded node: negative terms halved
};
CoefficientTable coefficient_table(SystemKind system, unsigned k);
std::string coefficient_table_csv(const CoefficientTable& t, unsigned digits);

struct MelnikovReport {
    std::string system;
    unsigned n = 0;
    std::string parity;
    int sigma_v = 0, sigma_w = 0;
    RadicalValue d2_dv_dalpha;
    std::optional<RadicalValue> d2_dv2;  // empty: identically zero by parity
    std::optional<RadicalValue> d3_dv3;  // empty: not computed
    BifurcationKind bifurcation = BifurcationKind::transcritical;
    int orientation_sign = 0;
    int normal_form_sign = 0;  // sign expected from the published normal form, 0 if none
    std::optional<BranchSide> branch_side;
    std::map<std::string, std::optional<bool>> oracle_agreement;
};

MelnikovReport classify_bifurcation(const PerturbedSystem& s);
BranchSide branch_side(const PerturbedSystem& s);

nlohmann::json report_to_json(const MelnikovReport& r, unsigned digits = 10);
MelnikovReport report_from_json(const nlohmann::json& j);

}  // namespace mel
