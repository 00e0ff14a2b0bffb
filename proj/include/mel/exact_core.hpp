#pragma once

#include <gmpxx.h>

#include <map>
#include <string>
#include <tuple>

#include "mel/errors.hpp"

namespace mel {

using Integer = mpz_class;
using Rational = mpq_class;

Rational make_rational(const Integer& num, const Integer& den);
Integer factorial(unsigned long n);
// n!! with the conventions 0!! = (-1)!! = 1.
Integer double_factorial(long n);
Integer binomial(unsigned long n, unsigned long k);
Integer pow2(unsigned long e);
int sign_of(const Rational& q);
// Trial-division squarefree test; intended for the modest radicands that occur here.
bool is_squarefree(const Integer& m);

// coeff * sqrt(radicand) * pi^(pi_int + pi_half/2), radicand squarefree, pi_half in {0,1}.
struct RadicalValue {
    Rational coeff;
    Integer radicand = 1;
    int pi_half = 0;
    long pi_int = 0;

    RadicalValue() = default;
    RadicalValue(const Rational& q) : coeff(q) {}  // NOLINT: rationals embed implicitly
    RadicalValue(long q) : coeff(q) {}             // NOLINT

    static RadicalValue make(const Rational& coeff, const Integer& radicand, int pi_half = 0,
                             long pi_int = 0);
    static RadicalValue sqrt(const Integer& m);
    static RadicalValue sqrt_pi();
    static RadicalValue sqrt_2pi();

    bool is_zero() const { return coeff == 0; }
    int sign() const { return sign_of(coeff); }
    bool same_radical(const RadicalValue& o) const {
        return radicand == o.radicand && pi_half == o.pi_half && pi_int == o.pi_int;
    }
    std::string to_string() const;
    static RadicalValue parse(const std::string& text);
    double to_double() const;

    friend bool operator==(const RadicalValue& a, const RadicalValue& b) {
        return a.coeff == b.coeff && a.same_radical(b);
    }
    friend bool operator!=(const RadicalValue& a, const RadicalValue& b) { return !(a == b); }
};

RadicalValue radical_mul(const RadicalValue& a, const RadicalValue& b);
RadicalValue radical_add(const RadicalValue& a, const RadicalValue& b);
RadicalValue radical_neg(const RadicalValue& a);
RadicalValue radical_sub(const RadicalValue& a, const RadicalValue& b);
RadicalValue radical_inv(const RadicalValue& a);
RadicalValue radical_scale(const RadicalValue& a, const Rational& q);
std::string radical_to_decimal(const RadicalValue& a, unsigned digits);
// Decimal rendering of an exact rational, same format and rounding as radical_to_decimal.
std::string rational_to_decimal(const Rational& q, unsigned digits);

inline RadicalValue operator*(const RadicalValue& a, const RadicalValue& b) { return radical_mul(a, b); }
inline RadicalValue operator+(const RadicalValue& a, const RadicalValue& b) { return radical_add(a, b); }
inline RadicalValue operator-(const RadicalValue& a, const RadicalValue& b) { return radical_sub(a, b); }
inline RadicalValue operator-(const RadicalValue& a) { return radical_neg(a); }
inline RadicalValue operator/(const RadicalValue& a, const RadicalValue& b) { return radical_mul(a, radical_inv(b)); }

// Formal Q-linear combination of distinct radical parts. Used where exact
// linear algebra may transiently mix radical types.
class RadicalSum {
public:
    using Key = std::tuple<Integer, int, long>;

    RadicalSum() = default;
    RadicalSum(const RadicalValue& v) { add(v); }  // NOLINT

    void add(const RadicalValue& v);
    RadicalSum& operator+=(const RadicalSum& o);
    RadicalSum& operator-=(const RadicalSum& o);
    RadicalSum times(const RadicalValue& v) const;
    RadicalSum negated() const;

    bool is_zero() const { return terms_.empty(); }
    bool is_monomial() const { return terms_.size() == 1; }
    RadicalValue to_value() const;
    std::string to_string() const;
    const std::map<Key, Rational>& terms() const { return terms_; }

    friend bool operator==(const RadicalSum& a, const RadicalSum& b) { return a.terms_ == b.terms_; }

private:
    std::map<Key, Rational> terms_;
};

}  // namespace mel
