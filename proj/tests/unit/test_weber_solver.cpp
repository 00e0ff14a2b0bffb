#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "mel/weber_solver.hpp"

using namespace mel;

namespace {

HermiteSeries H(unsigned n, const RadicalValue& c = RadicalValue(1)) { return HermiteSeries::basis(n, c); }

HermiteSeries L_by_definition(unsigned beta, const HermiteSeries& q) {
    return series_derivative(series_derivative(q)) - series_mul_t(series_derivative(q)) +
           RadicalValue(static_cast<long>(beta)) * q;
}

HermiteSeries random_rhs(std::mt19937& rng, unsigned beta) {
    std::uniform_int_distribution<long> num(-30, 30), den(1, 11);
    std::uniform_int_distribution<unsigned> deg(0, 30);
    HermiteSeries s;
    for (int i = 0; i < 6; ++i) {
        unsigned d = deg(rng);
        if (d != beta) s.add_term(d, RadicalValue(make_rational(num(rng), den(rng))));
    }
    return s;
}

}  // namespace

TEST_CASE("apply_L") {
    CHECK(apply_L(3, H(5)) == H(5, -2));
    CHECK(apply_L(3, H(3)).empty());
    CHECK(apply_L(2, H(0, 4)) == H(0, 8));
}

TEST_CASE("diagonal rule matches the defining expression") {
    for (unsigned beta = 0; beta <= 30; beta += 3)
        for (unsigned l = 0; l <= 30; ++l) CHECK(apply_L(beta, H(l)) == L_by_definition(beta, H(l)));
}

TEST_CASE("solve_weber") {
    CHECK(solve_weber({2, H(0), KernelPolicy::zero_kernel()}) == H(0, Rational(1, 2)));
    CHECK_THROWS_AS(solve_weber({2, H(2), KernelPolicy::zero_kernel()}), ResonantForcing);
    CHECK_THROWS_AS(solve_weber({3, H(0), KernelPolicy::match_at_zero(1)}), KernelConditionUnsatisfiable);

    HermiteSeries x = solve_weber({2, H(0), KernelPolicy::match_at_zero(5)});
    CHECK(apply_L(2, x) == H(0));
    CHECK(series_value_at_zero(x).to_value() == RadicalValue(5));
}

TEST_CASE("folded node second variation, k = 2") {
    const unsigned k = 2;
    const RadicalValue s2 = RadicalValue::sqrt(2);
    const RadicalValue h0 = hermite_at_zero(2 * k);
    // z1' and z3' of the first variation for n = 2k
    HermiteSeries z1 = H(2 * k - 1, -(radical_scale(s2, k) / h0));
    HermiteSeries z3 = H(0) - H(2 * k, radical_inv(h0));
    HermiteSeries rhs = RadicalValue(2) * series_derivative(series_product(z1, z3));
    HermiteSeries x = solve_weber({2 * k - 1, rhs, KernelPolicy::zero_kernel()});

    HermiteSeries inner;
    RadicalValue lead = radical_scale(s2, k) / (h0 * h0);
    for (unsigned j = 0; j <= 2 * k - 1; ++j) {
        Rational c = make_rational(binomial(2 * k - 1, j) * binomial(2 * k, j) * pow2(j) * factorial(j),
                                   Integer(static_cast<long>(2 * k) - 1 - 2 * static_cast<long>(j)));
        inner.add_term(4 * k - 1 - 2 * j, radical_scale(lead, c));
    }
    inner.add_term(2 * k - 1, radical_scale(s2, k) / h0);
    CHECK(x == RadicalValue(-2) * series_derivative(inner));
    CHECK(x.coeff(2 * k - 1).is_zero());
}

TEST_CASE("random non-resonant right-hand sides") {
    std::mt19937 rng(9);
    for (unsigned beta = 0; beta <= 30; ++beta)
        for (int i = 0; i < 4; ++i) {
            HermiteSeries rhs = random_rhs(rng, beta);
            HermiteSeries x = solve_weber({beta, rhs, KernelPolicy::zero_kernel()});
            CHECK(apply_L(beta, x) == rhs);
            CHECK(L_by_definition(beta, x) == rhs);
            CHECK(x.coeff(beta).is_zero());
        }
}

TEST_CASE("algebraic_solution_exists") {
    CHECK(algebraic_solution_exists(3));
    CHECK_FALSE(algebraic_solution_exists(Rational(7, 2)));
    CHECK(algebraic_solution_exists(0));
    CHECK_FALSE(algebraic_solution_exists(-1));
}
