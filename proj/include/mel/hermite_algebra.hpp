#pragma once

#include <map>
#include <string>

#include "json.hpp"

#include "mel/exact_core.hpp"

namespace mel {

// Finite sum  sum_j c_j H_j(t/sqrt2)  with exact coefficients; zero terms are never stored.
class HermiteSeries {
public:
    using Terms = std::map<unsigned, RadicalValue>;

    HermiteSeries() = default;
    static HermiteSeries basis(unsigned degree, const RadicalValue& c = RadicalValue(1));

    void add_term(unsigned degree, const RadicalValue& c);
    RadicalValue coeff(unsigned degree) const;
    const Terms& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }
    // -1 for the empty series
    int degree() const { return terms_.empty() ? -1 : static_cast<int>(terms_.rbegin()->first); }

    HermiteSeries& operator+=(const HermiteSeries& o);
    HermiteSeries& operator-=(const HermiteSeries& o);
    friend HermiteSeries operator+(HermiteSeries a, const HermiteSeries& b) { return a += b; }
    friend HermiteSeries operator-(HermiteSeries a, const HermiteSeries& b) { return a -= b; }
    friend HermiteSeries operator*(const RadicalValue& c, const HermiteSeries& s);
    friend HermiteSeries operator-(const HermiteSeries& s) { return RadicalValue(-1) * s; }
    friend bool operator==(const HermiteSeries& a, const HermiteSeries& b) { return a.terms_ == b.terms_; }
    friend bool operator!=(const HermiteSeries& a, const HermiteSeries& b) { return !(a == b); }

    std::string to_string() const;

private:
    Terms terms_;
};

enum class Parity { even, odd, mixed };
std::string to_string(Parity p);

RadicalValue hermite_at_zero(unsigned n);
HermiteSeries series_derivative(const HermiteSeries& s);
HermiteSeries series_mul_t(const HermiteSeries& s);
HermiteSeries series_product(const HermiteSeries& a, const HermiteSeries& b);
HermiteSeries series_antiderivative(const HermiteSeries& s, const RadicalValue& value_at_zero);
RadicalValue gaussian_pair_integral(unsigned n, unsigned m);
RadicalValue gaussian_triple_integral(unsigned n, unsigned m, unsigned l);
// Full-line integral of exp(-t^2/2) * s(t).
RadicalValue gaussian_series_integral(const HermiteSeries& s);
// The empty series counts as even.
Parity series_parity(const HermiteSeries& s);

// s(0) as an exact sum (components may in principle carry distinct radicals).
RadicalSum series_value_at_zero(const HermiteSeries& s);
// Inverse of d/dt - t on polynomials: returns p with p' - t p = g. Requires g to have no H_0 term.
HermiteSeries solve_raising(const HermiteSeries& g);

nlohmann::json series_to_json(const HermiteSeries& s);
HermiteSeries series_from_json(const nlohmann::json& j);

}  // namespace mel
