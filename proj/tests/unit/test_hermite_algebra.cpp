#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "mel/hermite_algebra.hpp"
#include "monomial_hermite.hpp"

using namespace mel;

namespace {

const RadicalValue s2 = RadicalValue::sqrt(2);
const RadicalValue s2pi = RadicalValue::sqrt_2pi();

HermiteSeries H(unsigned n, const RadicalValue& c = RadicalValue(1)) { return HermiteSeries::basis(n, c); }

HermiteSeries random_series(std::mt19937& rng, unsigned max_degree) {
    std::uniform_int_distribution<long> num(-40, 40), den(1, 9);
    std::uniform_int_distribution<unsigned> deg(0, max_degree);
    HermiteSeries s;
    unsigned terms = deg(rng) / 2 + 1;
    for (unsigned i = 0; i < terms; ++i) s.add_term(deg(rng), RadicalValue(make_rational(num(rng), den(rng))));
    return s;
}

}  // namespace

TEST_CASE("hermite_at_zero") {
    CHECK(hermite_at_zero(3) == RadicalValue(0));
    CHECK(hermite_at_zero(4) == RadicalValue(12));
    CHECK(hermite_at_zero(2) == RadicalValue(-2));
    for (unsigned n = 0; n <= 20; ++n) CHECK(hermite_at_zero(n) == RadicalValue(oracle::hermite_monomial(n)[0]));
}

TEST_CASE("series_derivative") {
    CHECK(series_derivative(H(1)) == H(0, s2));
    CHECK(series_derivative(H(4)) == H(3, radical_scale(s2, 4)));
    CHECK(series_derivative(HermiteSeries()).empty());
}

TEST_CASE("series_mul_t") {
    RadicalValue half_s2 = radical_scale(s2, Rational(1, 2));
    CHECK(series_mul_t(H(0)) == H(1, half_s2));
    CHECK(series_mul_t(H(1)) == H(2, half_s2) + H(0, s2));
    CHECK(series_mul_t(H(0) + H(1)) == H(1, half_s2) + H(2, half_s2) + H(0, s2));
}

TEST_CASE("series_product") {
    CHECK(series_product(H(1), H(1)) == H(2) + H(0, 2));
    CHECK(series_product(H(1), H(2)) == H(3) + H(1, 4));
    CHECK(series_product(H(0), H(5)) == H(5));
}

TEST_CASE("series_antiderivative") {
    RadicalValue inv_s2 = radical_inv(s2);
    CHECK(series_antiderivative(H(0), 0) == H(1, inv_s2));
    CHECK(series_antiderivative(H(1), 0) == H(2, radical_scale(inv_s2, Rational(1, 2))) + H(0, inv_s2));
    CHECK(series_antiderivative(HermiteSeries(), 7) == H(0, 7));
}

TEST_CASE("gaussian integrals") {
    CHECK(gaussian_pair_integral(2, 2) == radical_scale(s2pi, 8));
    CHECK(gaussian_pair_integral(1, 3) == RadicalValue(0));
    CHECK(gaussian_pair_integral(0, 0) == s2pi);
    CHECK(gaussian_triple_integral(2, 2, 2) == radical_scale(s2pi, 64));
    CHECK(gaussian_triple_integral(1, 1, 4) == RadicalValue(0));
    CHECK(gaussian_triple_integral(1, 1, 2) == radical_scale(s2pi, 8));
    CHECK(gaussian_series_integral(H(0)) == s2pi);
    CHECK(gaussian_series_integral(H(2)) == RadicalValue(0));
    CHECK(gaussian_series_integral(H(0, 3) + H(4, 5)) == radical_scale(s2pi, 3));
}

TEST_CASE("series_parity") {
    CHECK(series_parity(H(0) + H(4, 2)) == Parity::even);
    CHECK(series_parity(H(1) + H(3, -2)) == Parity::odd);
    CHECK(series_parity(H(0) + H(1)) == Parity::mixed);
}

TEST_CASE("product agrees with the monomial oracle") {
    std::mt19937 rng(1);
    for (int i = 0; i < 150; ++i) {
        HermiteSeries a = random_series(rng, 15), b = random_series(rng, 15);
        oracle::Poly expect = oracle::mul(oracle::to_monomial(a), oracle::to_monomial(b));
        CHECK(oracle::to_monomial(series_product(a, b)) == expect);
    }
}

TEST_CASE("derivative inverts antiderivative") {
    std::mt19937 rng(2);
    for (int i = 0; i < 100; ++i) {
        // sqrt2 multiples keep the antiderivative rational
        HermiteSeries s = RadicalValue::sqrt(2) * random_series(rng, 20);
        for (const RadicalValue& c : {RadicalValue(0), RadicalValue(Rational(-7, 3))}) {
            HermiteSeries anti = series_antiderivative(s, c);
            CHECK(series_derivative(anti) == s);
            CHECK(series_value_at_zero(anti).to_value() == c);
        }
    }
}

TEST_CASE("triple integral equals product then orthogonality") {
    for (unsigned n = 0; n <= 12; ++n)
        for (unsigned m = 0; m <= 12; ++m)
            for (unsigned l = 0; l <= 12; ++l) {
                RadicalValue direct = gaussian_triple_integral(n, m, l);
                CHECK(gaussian_series_integral(series_product(series_product(H(n), H(m)), H(l))) == direct);
                oracle::Poly p = oracle::mul(oracle::mul(oracle::hermite_monomial(n), oracle::hermite_monomial(m)),
                                             oracle::hermite_monomial(l));
                CHECK(radical_scale(s2pi, oracle::gaussian_integral_over_sqrt2pi(p)) == direct);
            }
}

TEST_CASE("odd series integrate to zero") {
    std::mt19937 rng(4);
    for (int i = 0; i < 100; ++i) {
        HermiteSeries s, base = random_series(rng, 25);
        for (const auto& [d, c] : base.terms()) s.add_term(2 * (d / 2) + 1, c);
        CHECK(series_parity(s) == Parity::odd);
        CHECK(gaussian_series_integral(s).is_zero());
    }
}

TEST_CASE("Weber operator from derivatives is diagonal") {
    for (unsigned beta = 0; beta <= 6; ++beta)
        for (unsigned n = 0; n <= 30; ++n) {
            HermiteSeries h = H(n);
            HermiteSeries lhs = series_derivative(series_derivative(h)) - series_mul_t(series_derivative(h)) +
                                RadicalValue(static_cast<long>(beta)) * h;
            CHECK(lhs == H(n, RadicalValue(static_cast<long>(beta) - static_cast<long>(n))));
        }
}

TEST_CASE("json round trip") {
    HermiteSeries s = H(0, radical_scale(s2, Rational(-3, 5))) + H(7, RadicalValue::sqrt_pi());
    CHECK(series_from_json(series_to_json(s)) == s);
    CHECK(series_to_json(H(3, 2)).dump() == R"({"3":"2"})");
}
