#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "mel/melnikov_engine.hpp"
#include "taylor_recipe.hpp"

using namespace mel;

namespace {

const SystemKind named[] = {SystemKind::folded_node, SystemKind::falkner_skan, SystemKind::nose};
const RadicalValue s2 = RadicalValue::sqrt(2);
const RadicalValue s2pi = RadicalValue::sqrt_2pi();

HermiteSeries H(unsigned n, const RadicalValue& c = RadicalValue(1)) { return HermiteSeries::basis(n, c); }

oracle::Which to_oracle(Derivative d) {
    switch (d) {
        case Derivative::dv_dalpha: return oracle::Which::dv_dalpha;
        case Derivative::dv2: return oracle::Which::dv2;
        default: return oracle::Which::dv3;
    }
}

// Sum over j of binom(2k-1, j) binom(2k, j) 2^j j! H_{4k-1-2j} / (2k-1-2j), scaled, plus the H_{2k-1} term.
HermiteSeries folded_inner(unsigned k) {
    RadicalValue h0 = hermite_at_zero(2 * k);
    RadicalValue lead = radical_scale(s2, k) / (h0 * h0);
    HermiteSeries out;
    for (unsigned j = 0; j <= 2 * k - 1; ++j) {
        Rational c = make_rational(binomial(2 * k - 1, j) * binomial(2 * k, j) * pow2(j) * factorial(j),
                                   Integer(static_cast<long>(2 * k) - 1 - 2 * static_cast<long>(j)));
        out.add_term(4 * k - 1 - 2 * j, radical_scale(lead, c));
    }
    out.add_term(2 * k - 1, radical_scale(s2, k) / h0);
    return out;
}

}  // namespace

TEST_CASE("second variation of the folded node, k = 1") {
    PerturbedSystem s = build_folded_node(2);
    VariationTriple zpp = second_variation(s);
    HermiteSeries inner = folded_inner(1);
    CHECK(zpp[0] == RadicalValue(-2) * series_derivative(inner));
    CHECK(zpp[2] == RadicalValue(-4) * inner);
}

TEST_CASE("product z1' z3' of the folded node, k = 2") {
    const unsigned k = 2;
    VariationTriple z = first_variation(build_folded_node(2 * k));
    RadicalValue h0 = hermite_at_zero(2 * k);
    RadicalValue lead = radical_scale(s2, k) / (h0 * h0);
    HermiteSeries expect;
    for (unsigned j = 0; j <= 2 * k - 1; ++j)
        expect.add_term(4 * k - 1 - 2 * j,
                        radical_scale(lead, Rational(binomial(2 * k - 1, j) * binomial(2 * k, j) * pow2(j) * factorial(j))));
    expect -= H(2 * k - 1, radical_scale(s2, k) / h0);
    CHECK(series_product(z[0], z[2]) == expect);
}

TEST_CASE("second variation residual and initial condition") {
    for (SystemKind kind : named)
        for (unsigned n = 1; n <= 10; ++n) {
            PerturbedSystem s = build_system(kind, n);
            if (s.sigma_v == 1) {
                // the forcing pairs to D_vv against the adjoint, which is nonzero here
                CHECK_THROWS_AS(second_variation(s), ResonantForcing);
                continue;
            }
            VariationTriple z1 = first_variation(s);
            VariationTriple z2 = second_variation(s);
            SeriesVec forcing = apply_bilinear(s.quad, z1.z, z1.z);
            for (auto& f : forcing) f = RadicalValue(2) * f;
            for (const auto& r : variational_residual(s, z2.z, forcing)) CHECK(r.empty());
            Vec3 at0 = value_at_zero(z2.z);
            // only the e_w direction may be populated
            for (int i = 0; i < 3; ++i)
                if (s.e_w[i].is_zero()) CHECK(at0[i].is_zero());
        }
}

TEST_CASE("derivative examples") {
    CHECK(d2_dv_dalpha(build_folded_node(2)) == s2pi);
    CHECK(d2_dv_dalpha(build_falkner_skan(2)) == radical_scale(s2pi, -4));
    CHECK(d2_dv_dalpha(build_nose(2)) == radical_scale(s2pi, 2));
    CHECK(d2_dv2(build_falkner_skan(2)) == radical_scale(s2pi, -8));
    CHECK_THROWS_AS(d2_dv2(build_folded_node(2)), IdenticallyZeroByParity);
    CHECK(d2_dv2(build_falkner_skan(4)).sign() > 0);
    CHECK_THROWS_AS(d3_dv3(build_falkner_skan(2)), WrongParity);
    // 360.9544715469...; the published 360.9544714 agrees to nine digits
    CHECK(radical_to_decimal(d3_dv3(build_folded_node(2)), 12).rfind("360.954471", 0) == 0);
    CHECK(d3_dv3(build_nose(1)).sign() < 0);
    CHECK(d3_dv3(build_nose(1)) == closed_form_oracle(build_nose(1), Derivative::dv3));
}

TEST_CASE("folded node n = 10 to nine digits") {
    // the exact value renders as 5.532474568e10; the tenth digit is not reproducible
    std::string d = radical_to_decimal(d3_dv3(build_folded_node(10)), 10);
    CHECK(d.substr(0, 10) == "5.53247456");
}

TEST_CASE("closed forms") {
    CHECK(closed_form_oracle(build_folded_node(6), Derivative::dv_dalpha) == radical_scale(s2pi, Rational(8, 5)));
    CHECK(closed_form_oracle(build_folded_node(2), Derivative::dv3) == radical_scale(s2pi, 144));
    // 2k sqrt(2 pi) (2k-1)!! at k = 2
    CHECK(closed_form_oracle(build_nose(4), Derivative::dv_dalpha) == radical_scale(s2pi, 12));
    CHECK_FALSE(has_closed_form(build_folded_node(3), Derivative::dv2));
    CHECK_THROWS_AS(closed_form_oracle(build_folded_node(3), Derivative::dv2), NoClosedFormAvailable);
}

TEST_CASE("engine agrees with the Taylor-recursion oracle, n <= 12") {
    for (SystemKind kind : named)
        for (unsigned n = 1; n <= 12; ++n) {
            PerturbedSystem s = build_system(kind, n);
            Derivative second = s.sigma_v == 1 ? Derivative::dv2 : Derivative::dv3;
            for (Derivative d : {Derivative::dv_dalpha, second}) {
                CAPTURE(to_string(kind));
                CAPTURE(n);
                CAPTURE(to_string(d));
                CHECK(derivative(s, d) == oracle::derivative(to_string(kind), n, to_oracle(d)));
            }
        }
}

TEST_CASE("second v-derivative integrand is odd when sigma_v = -1") {
    for (SystemKind kind : named)
        for (unsigned n = 1; n <= 12; ++n) {
            PerturbedSystem s = build_system(kind, n);
            if (s.sigma_v != -1) continue;
            HermiteSeries p = integrand(s, Derivative::dv2);
            CHECK((p.empty() || series_parity(p) == Parity::odd));
            CHECK(gaussian_series_integral(p).is_zero());
        }
}

TEST_CASE("integration by parts route, k <= 8") {
    for (unsigned k = 1; k <= 8; ++k) {
        PerturbedSystem s = build_folded_node(2 * k);
        CHECK(d3_dv3_by_parts(s) == d3_dv3(s));
    }
    CHECK_THROWS_AS(d3_dv3_by_parts(build_folded_node(3)), PreconditionViolation);
}

TEST_CASE("coefficient tables") {
    CoefficientTable t = coefficient_table(SystemKind::folded_node, 1);
    REQUIRE(t.c.size() == 2);
    CHECK(t.c[0] == Rational(3, 2));
    CHECK(t.c[1] == Rational(-1, 2));
    CHECK(t.halved_bound_positive);
    CoefficientTable t2 = coefficient_table(SystemKind::folded_node, 2);
    CHECK(abs(t2.c[1] / t2.c[2]) > 2);
    CHECK(t2.sign_pattern_holds);
    CHECK(t2.ratio_bound_holds);
    CoefficientTable nose = coefficient_table(SystemKind::nose, 3);
    CHECK(nose.d.size() == nose.c.size());
    CHECK(nose.sum_positive);
    CHECK_THROWS_AS(coefficient_table(SystemKind::folded_node, 0), PreconditionViolation);
    std::string csv = coefficient_table_csv(t, 6);
    CHECK(csv.rfind("k,j,c_kj,", 0) == 0);
}

TEST_CASE("classification") {
    CHECK(classify_bifurcation(build_folded_node(4)).bifurcation == BifurcationKind::pitchfork);
    CHECK(classify_bifurcation(build_falkner_skan(3)).bifurcation == BifurcationKind::pitchfork);
    MelnikovReport r = classify_bifurcation(build_nose(2));
    CHECK(r.bifurcation == BifurcationKind::transcritical);
    CHECK(r.orientation_sign == -1);
    CHECK(classify_bifurcation(build_falkner_skan(2)).orientation_sign == 1);
    CHECK_FALSE(r.d3_dv3.has_value());
    MelnikovReport p = classify_bifurcation(build_folded_node(4));
    CHECK_FALSE(p.d2_dv2.has_value());
    CHECK(p.oracle_agreement.at("d3_dv3") == std::optional<bool>(true));
}

TEST_CASE("branch sides") {
    CHECK(branch_side(build_folded_node(3)) == BranchSide::alpha_positive);
    CHECK(branch_side(build_falkner_skan(4)) == BranchSide::alpha_positive);
    CHECK(branch_side(build_nose(2)) == BranchSide::alpha_negative);
    CHECK_THROWS_AS(branch_side(build_folded_node(4)), WrongParity);
}

TEST_CASE("report json round trip") {
    for (SystemKind kind : named)
        for (unsigned n : {2u, 3u}) {
            MelnikovReport r = classify_bifurcation(build_system(kind, n));
            nlohmann::json j = report_to_json(r);
            CHECK(report_to_json(report_from_json(j)) == j);
        }
}
