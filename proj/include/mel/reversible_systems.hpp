#pragma once

#include <array>
#include <string>

#include "json.hpp"

#include "mel/hermite_algebra.hpp"

namespace mel {

using Mat3 = std::array<std::array<Rational, 3>, 3>;
using Vec3 = std::array<RadicalValue, 3>;
// One symmetric matrix per component: component i of the quadratic part is z^T Q[i] z.
using QuadForm = std::array<Mat3, 3>;
using SeriesVec = std::array<HermiteSeries, 3>;

enum class SystemKind { folded_node, falkner_skan, nose, generic };
std::string to_string(SystemKind k);
SystemKind system_kind_from_string(const std::string& s);

// Rectified about the symmetric orbit: z' = (A0 + t A1) z + quad(z) + alpha (alpha_lin + t alpha_lin_t) z
// + alpha alpha_quad(z) + O(alpha^2).
struct PerturbedSystem {
    SystemKind kind = SystemKind::generic;
    unsigned n = 0;
    Rational mu0;  // parameter value at alpha = 0 (0 for generic)
    Mat3 A0{}, A1{};
    QuadForm quad{};
    Mat3 alpha_lin{}, alpha_lin_t{};
    QuadForm alpha_quad{};
    std::array<int, 3> sigma{1, 1, 1};
    Vec3 e_u, e_v, e_w;
    int sigma_v = 1, sigma_w = 1;

    std::string name() const { return to_string(kind); }
};

struct GenericCoefficients {
    Rational a2, a12, b1, b11, b22, c1, c11, c22, c23;
};

PerturbedSystem build_folded_node(unsigned n);
PerturbedSystem build_falkner_skan(unsigned n);
PerturbedSystem build_nose(unsigned n);
// `at_zero` are the coefficient values at alpha = 0, `d_alpha` their alpha-derivatives.
PerturbedSystem build_generic(const GenericCoefficients& at_zero, const GenericCoefficients& d_alpha = {});
PerturbedSystem build_system(SystemKind kind, unsigned n);

// Row carrying the t z_r term; the variational equation reduces to L_beta on it.
unsigned designated_row(const PerturbedSystem& s);
Rational beta_candidate(const PerturbedSystem& s);
unsigned beta_of(const PerturbedSystem& s);

struct VariationTriple {
    SeriesVec z;
    const HermiteSeries& operator[](size_t i) const { return z[i]; }
};

// Components carry the implicit weight exp(-t^2/2).
struct AdjointSolution {
    SeriesVec psi;
    const HermiteSeries& operator[](size_t i) const { return psi[i]; }
};

enum class InitialCondition {
    equals_e_v,  // z(0) = e_v, kernel multiple free
    along_e_w,   // z(0) in span(e_w), zero kernel component
};

// Polynomial solution of z' = A(t) z + forcing.
SeriesVec solve_variational(const PerturbedSystem& s, const SeriesVec& forcing, InitialCondition ic);

VariationTriple first_variation(const PerturbedSystem& s);
AdjointSolution adjoint_solution(const PerturbedSystem& s);

SeriesVec apply_A(const PerturbedSystem& s, const SeriesVec& z);
// Q(u, v) with the symmetric bilinear forms in `q`.
SeriesVec apply_bilinear(const QuadForm& q, const SeriesVec& u, const SeriesVec& v);
SeriesVec apply_matrix(const Mat3& m, const SeriesVec& z);
// z' - A z - forcing
SeriesVec variational_residual(const PerturbedSystem& s, const SeriesVec& z, const SeriesVec& forcing);
// Residual of psi' + A^T psi = 0 for psi = exp(-t^2/2) phi, expressed on phi.
SeriesVec adjoint_residual(const PerturbedSystem& s, const SeriesVec& phi);
// sum_i a_i b_i
HermiteSeries pairing(const SeriesVec& a, const SeriesVec& b);
Vec3 value_at_zero(const SeriesVec& z);

nlohmann::json system_to_json(const PerturbedSystem& s);

}  // namespace mel
