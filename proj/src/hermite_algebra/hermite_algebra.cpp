#include "mel/hermite_algebra.hpp"

#include <algorithm>

namespace mel {

namespace {

const RadicalValue& sqrt2() {
    static const RadicalValue v = RadicalValue::sqrt(2);
    return v;
}

}  // namespace

HermiteSeries HermiteSeries::basis(unsigned degree, const RadicalValue& c) {
    HermiteSeries s;
    s.add_term(degree, c);
    return s;
}

void HermiteSeries::add_term(unsigned degree, const RadicalValue& c) {
    if (c.is_zero()) return;
    auto it = terms_.find(degree);
    if (it == terms_.end()) {
        terms_.emplace(degree, c);
        return;
    }
    it->second = radical_add(it->second, c);
    if (it->second.is_zero()) terms_.erase(it);
}

RadicalValue HermiteSeries::coeff(unsigned degree) const {
    auto it = terms_.find(degree);
    return it == terms_.end() ? RadicalValue{} : it->second;
}

HermiteSeries& HermiteSeries::operator+=(const HermiteSeries& o) {
    for (const auto& [d, c] : o.terms_) add_term(d, c);
    return *this;
}

HermiteSeries& HermiteSeries::operator-=(const HermiteSeries& o) {
    for (const auto& [d, c] : o.terms_) add_term(d, radical_neg(c));
    return *this;
}

HermiteSeries operator*(const RadicalValue& c, const HermiteSeries& s) {
    HermiteSeries r;
    if (c.is_zero()) return r;
    for (const auto& [d, v] : s.terms_) r.terms_.emplace(d, radical_mul(c, v));
    return r;
}

std::string HermiteSeries::to_string() const {
    if (terms_.empty()) return "0";
    std::string out;
    for (const auto& [d, c] : terms_) {
        if (!out.empty()) out += " + ";
        out += "(" + c.to_string() + ")*H" + std::to_string(d);
    }
    return out;
}

std::string to_string(Parity p) {
    switch (p) {
        case Parity::even: return "even";
        case Parity::odd: return "odd";
        default: return "mixed";
    }
}

RadicalValue hermite_at_zero(unsigned n) {
    if (n % 2) return {};
    Integer v = pow2(n / 2) * double_factorial(static_cast<long>(n) - 1);
    if ((n / 2) % 2) v = -v;
    return RadicalValue(Rational(v));
}

HermiteSeries series_derivative(const HermiteSeries& s) {
    HermiteSeries r;
    for (const auto& [d, c] : s.terms()) {
        if (d == 0) continue;
        r.add_term(d - 1, radical_scale(radical_mul(sqrt2(), c), Rational(d)));
    }
    return r;
}

HermiteSeries series_mul_t(const HermiteSeries& s) {
    HermiteSeries r;
    for (const auto& [d, c] : s.terms()) {
        RadicalValue root2c = radical_mul(sqrt2(), c);
        r.add_term(d + 1, radical_scale(root2c, Rational(1, 2)));
        if (d > 0) r.add_term(d - 1, radical_scale(root2c, Rational(d)));
    }
    return r;
}

HermiteSeries series_product(const HermiteSeries& a, const HermiteSeries& b) {
    HermiteSeries r;
    for (const auto& [n, cn] : a.terms()) {
        for (const auto& [m, cm] : b.terms()) {
            RadicalValue c = radical_mul(cn, cm);
            unsigned lo = std::min(n, m);
            Integer w = 1;  // C(m,j) C(n,j) 2^j j!
            for (unsigned j = 0; j <= lo; ++j) {
                if (j > 0) {
                    // ratio of consecutive weights: (m-j+1)(n-j+1)*2/j
                    w *= Integer(m - j + 1) * Integer(n - j + 1) * 2;
                    w /= j;
                }
                r.add_term(n + m - 2 * j, radical_scale(c, Rational(w)));
            }
        }
    }
    return r;
}

HermiteSeries series_antiderivative(const HermiteSeries& s, const RadicalValue& value_at_zero) {
    HermiteSeries r;
    RadicalValue inv_root2 = radical_inv(sqrt2());
    for (const auto& [d, c] : s.terms()) {
        r.add_term(d + 1, radical_scale(radical_mul(inv_root2, c), Rational(1, d + 1)));
    }
    RadicalSum shift(value_at_zero);
    shift -= series_value_at_zero(r);
    r.add_term(0, shift.to_value());
    return r;
}

RadicalValue gaussian_pair_integral(unsigned n, unsigned m) {
    if (n != m) return {};
    return radical_scale(RadicalValue::sqrt_2pi(), Rational(pow2(n) * factorial(n)));
}

RadicalValue gaussian_triple_integral(unsigned n, unsigned m, unsigned l) {
    unsigned sum = n + m + l;
    if (sum % 2) return {};
    unsigned s = sum / 2;
    if (s < n || s < m || s < l) return {};
    Integer num = pow2(s) * factorial(n) * factorial(m) * factorial(l);
    Integer den = factorial(s - n) * factorial(s - m) * factorial(s - l);
    return radical_scale(RadicalValue::sqrt_2pi(), make_rational(num, den));
}

RadicalValue gaussian_series_integral(const HermiteSeries& s) {
    return radical_mul(s.coeff(0), RadicalValue::sqrt_2pi());
}

Parity series_parity(const HermiteSeries& s) {
    bool has_even = false, has_odd = false;
    for (const auto& [d, c] : s.terms()) (d % 2 ? has_odd : has_even) = true;
    if (has_even && has_odd) return Parity::mixed;
    return has_odd ? Parity::odd : Parity::even;
}

RadicalSum series_value_at_zero(const HermiteSeries& s) {
    RadicalSum v;
    for (const auto& [d, c] : s.terms()) {
        if (d % 2 == 0) v.add(radical_mul(c, hermite_at_zero(d)));
    }
    return v;
}

HermiteSeries solve_raising(const HermiteSeries& g) {
    if (!g.coeff(0).is_zero()) throw PreconditionViolation("raising equation has an H_0 obstruction");
    HermiteSeries p;
    RadicalValue minus_root2 = radical_neg(sqrt2());
    for (const auto& [d, c] : g.terms()) p.add_term(d - 1, radical_mul(minus_root2, c));
    return p;
}

nlohmann::json series_to_json(const HermiteSeries& s) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [d, c] : s.terms()) j[std::to_string(d)] = c.to_string();
    return j;
}

HermiteSeries series_from_json(const nlohmann::json& j) {
    HermiteSeries s;
    for (const auto& [key, val] : j.items()) {
        s.add_term(static_cast<unsigned>(std::stoul(key)), RadicalValue::parse(val.get<std::string>()));
    }
    return s;
}

}  // namespace mel
