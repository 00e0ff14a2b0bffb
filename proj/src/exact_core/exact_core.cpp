#include "mel/exact_core.hpp"

#include <mpfr.h>

#include <cmath>
#include <sstream>
#include <vector>

namespace mel {

Rational make_rational(const Integer& num, const Integer& den) {
    if (den == 0) throw PreconditionViolation("zero denominator");
    Rational q(num, den);
    q.canonicalize();
    return q;
}

Integer factorial(unsigned long n) {
    Integer r;
    mpz_fac_ui(r.get_mpz_t(), n);
    return r;
}

Integer double_factorial(long n) {
    if (n < -1) throw PreconditionViolation("double factorial of " + std::to_string(n));
    if (n <= 0) return 1;
    Integer r;
    mpz_2fac_ui(r.get_mpz_t(), static_cast<unsigned long>(n));
    return r;
}

Integer binomial(unsigned long n, unsigned long k) {
    Integer r;
    mpz_bin_uiui(r.get_mpz_t(), n, k);
    return r;
}

Integer pow2(unsigned long e) {
    Integer r;
    mpz_ui_pow_ui(r.get_mpz_t(), 2, e);
    return r;
}

int sign_of(const Rational& q) { return sgn(q); }

bool is_squarefree(const Integer& m) {
    if (m <= 0) return false;
    for (Integer p = 2; p * p <= m; ++p) {
        if (m % (p * p) == 0) return false;
    }
    return true;
}

namespace {

// m = s^2 * r with r squarefree; returns {s, r}.
std::pair<Integer, Integer> split_square(Integer m) {
    Integer s = 1;
    Integer p = 2;
    while (p * p <= m) {
        while (m % (p * p) == 0) {
            m /= p * p;
            s *= p;
        }
        p += (p == 2) ? 1 : 2;
    }
    return {s, m};
}

RadicalValue canonical_zero() { return RadicalValue{}; }

long floor_half(long h) { return h >= 0 ? h / 2 : -((-h + 1) / 2); }

}  // namespace

RadicalValue RadicalValue::make(const Rational& coeff, const Integer& radicand, int pi_half,
                                long pi_int) {
    if (radicand <= 0) throw PreconditionViolation("radicand must be positive");
    if (coeff == 0) return canonical_zero();
    RadicalValue v;
    auto [s, r] = split_square(radicand);
    v.coeff = coeff * Rational(s);
    v.radicand = r;
    long halves = 2 * pi_int + pi_half;
    v.pi_int = floor_half(halves);
    v.pi_half = static_cast<int>(halves - 2 * v.pi_int);
    return v;
}

RadicalValue RadicalValue::sqrt(const Integer& m) { return make(1, m); }
RadicalValue RadicalValue::sqrt_pi() { return make(1, 1, 1); }
RadicalValue RadicalValue::sqrt_2pi() { return make(1, 2, 1); }

RadicalValue radical_mul(const RadicalValue& a, const RadicalValue& b) {
    if (a.is_zero() || b.is_zero()) return canonical_zero();
    Integer g = gcd(a.radicand, b.radicand);
    RadicalValue r;
    r.coeff = a.coeff * b.coeff * Rational(g);
    r.radicand = (a.radicand / g) * (b.radicand / g);
    int e = a.pi_half + b.pi_half;
    r.pi_int = a.pi_int + b.pi_int + (e == 2 ? 1 : 0);
    r.pi_half = e % 2;
    return r;
}

RadicalValue radical_add(const RadicalValue& a, const RadicalValue& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    if (!a.same_radical(b)) {
        throw IncompatibleRadicals(a.to_string() + " + " + b.to_string());
    }
    RadicalValue r = a;
    r.coeff = a.coeff + b.coeff;
    if (r.coeff == 0) return canonical_zero();
    return r;
}

RadicalValue radical_neg(const RadicalValue& a) {
    RadicalValue r = a;
    r.coeff = -a.coeff;
    return r;
}

RadicalValue radical_sub(const RadicalValue& a, const RadicalValue& b) {
    return radical_add(a, radical_neg(b));
}

RadicalValue radical_inv(const RadicalValue& a) {
    if (a.is_zero()) throw PreconditionViolation("inverse of zero");
    // 1/(q sqrt(m) pi^(p+e/2)) = (1/(q m)) sqrt(m) pi^(-p-e/2)
    RadicalValue r;
    r.coeff = 1 / (a.coeff * Rational(a.radicand));
    r.radicand = a.radicand;
    if (a.pi_half == 1) {
        r.pi_half = 1;
        r.pi_int = -a.pi_int - 1;
    } else {
        r.pi_half = 0;
        r.pi_int = -a.pi_int;
    }
    return r;
}

RadicalValue radical_scale(const RadicalValue& a, const Rational& q) {
    if (q == 0 || a.is_zero()) return canonical_zero();
    RadicalValue r = a;
    r.coeff *= q;
    return r;
}

// ---------------------------------------------------------------- rendering

std::string RadicalValue::to_string() const {
    if (is_zero()) return "0";
    std::vector<std::string> factors;
    bool has_radical = radicand != 1 || pi_half != 0 || pi_int != 0;
    std::string prefix;
    if (!has_radical) {
        factors.push_back(coeff.get_str());
    } else if (coeff == 1) {
    } else if (coeff == -1) {
        prefix = "-";
    } else {
        factors.push_back(coeff.get_str());
    }
    if (radicand != 1) factors.push_back("sqrt(" + radicand.get_str() + ")");
    long halves = 2 * pi_int + pi_half;
    if (halves == 2) {
        factors.push_back("pi");
    } else if (halves != 0 && halves % 2 == 0) {
        factors.push_back("pi^" + std::to_string(halves / 2));
    } else if (halves % 2 != 0) {
        factors.push_back("pi^(" + std::to_string(halves) + "/2)");
    }
    std::string out = prefix;
    for (size_t i = 0; i < factors.size(); ++i) {
        if (i) out += " * ";
        out += factors[i];
    }
    return out;
}

RadicalValue RadicalValue::parse(const std::string& text) {
    std::string s = text;
    while (!s.empty() && s.front() == ' ') s.erase(s.begin());
    while (!s.empty() && s.back() == ' ') s.pop_back();
    if (s.empty()) throw ParseError("empty radical string");
    if (s == "0") return {};
    Rational coeff = 1;
    Integer radicand = 1;
    long halves = 0;
    bool negate = false;
    if (s[0] == '-' && s.size() > 1 && !std::isdigit(static_cast<unsigned char>(s[1]))) {
        negate = true;
        s.erase(s.begin());
    }
    size_t pos = 0;
    bool first = true;
    while (pos <= s.size()) {
        size_t next = s.find(" * ", pos);
        std::string tok = s.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
        try {
            if (tok.rfind("sqrt(", 0) == 0 && tok.back() == ')') {
                radicand = Integer(tok.substr(5, tok.size() - 6));
            } else if (tok == "pi") {
                halves = 2;
            } else if (tok.rfind("pi^(", 0) == 0 && tok.size() > 7 && tok.substr(tok.size() - 3) == "/2)") {
                halves = std::stol(tok.substr(4, tok.size() - 7));
            } else if (tok.rfind("pi^", 0) == 0) {
                halves = 2 * std::stol(tok.substr(3));
            } else if (first) {
                coeff = Rational(tok);
                coeff.canonicalize();
            } else {
                throw ParseError("unexpected factor '" + tok + "'");
            }
        } catch (const std::invalid_argument&) {
            throw ParseError("malformed factor '" + tok + "' in '" + text + "'");
        }
        first = false;
        if (next == std::string::npos) break;
        pos = next + 3;
    }
    if (negate) coeff = -coeff;
    RadicalValue v = make(coeff, radicand, 0, 0);
    v = radical_mul(v, make(1, 1, static_cast<int>(halves - 2 * floor_half(halves)), floor_half(halves)));
    if (v.radicand != radicand && coeff != 0) throw ParseError("radicand not squarefree: " + text);
    return v;
}

double RadicalValue::to_double() const {
    if (is_zero()) return 0.0;
    return coeff.get_d() * std::sqrt(radicand.get_d()) *
           std::pow(M_PI, static_cast<double>(pi_int) + 0.5 * pi_half);
}

namespace {

// value = 0.D * 10^exp10 (mpfr convention), digits in D.
std::string format_decimal(bool negative, const std::string& d, long exp10) {
    long e = exp10 - 1;  // value = D[0].D[1..] * 10^e
    long n = static_cast<long>(d.size());
    std::string out = negative ? "-" : "";
    if (e >= -5 && e < n) {
        if (e >= 0) {
            out += d.substr(0, e + 1);
            if (e + 1 < n) out += "." + d.substr(e + 1);
        } else {
            out += "0." + std::string(static_cast<size_t>(-e - 1), '0') + d;
        }
    } else {
        out += d.substr(0, 1);
        if (n > 1) out += "." + d.substr(1);
        char buf[32];
        std::snprintf(buf, sizeof buf, "e%c%02ld", e < 0 ? '-' : '+', e < 0 ? -e : e);
        out += buf;
    }
    return out;
}

Integer pow10(long e) {
    Integer r;
    mpz_ui_pow_ui(r.get_mpz_t(), 10, static_cast<unsigned long>(e));
    return r;
}

std::string mpfr_digits(const RadicalValue& a, unsigned digits, mpfr_prec_t prec, long& exp10) {
    mpfr_t v, t;
    mpfr_inits2(prec, v, t, static_cast<mpfr_ptr>(nullptr));
    mpfr_set_z(v, a.coeff.get_num_mpz_t(), MPFR_RNDN);
    mpfr_div_z(v, v, a.coeff.get_den_mpz_t(), MPFR_RNDN);
    if (a.radicand != 1) {
        mpfr_set_z(t, a.radicand.get_mpz_t(), MPFR_RNDN);
        mpfr_sqrt(t, t, MPFR_RNDN);
        mpfr_mul(v, v, t, MPFR_RNDN);
    }
    if (a.pi_half != 0 || a.pi_int != 0) {
        mpfr_const_pi(t, MPFR_RNDN);
        if (a.pi_half) {
            mpfr_t h;
            mpfr_init2(h, prec);
            mpfr_sqrt(h, t, MPFR_RNDN);
            mpfr_pow_si(t, t, a.pi_int, MPFR_RNDN);
            mpfr_mul(t, t, h, MPFR_RNDN);
            mpfr_clear(h);
        } else {
            mpfr_pow_si(t, t, a.pi_int, MPFR_RNDN);
        }
        mpfr_mul(v, v, t, MPFR_RNDN);
    }
    mpfr_exp_t e;
    char* str = mpfr_get_str(nullptr, &e, 10, digits, v, MPFR_RNDN);
    std::string out(str);
    mpfr_free_str(str);
    mpfr_clears(v, t, static_cast<mpfr_ptr>(nullptr));
    exp10 = e;
    return out;
}

}  // namespace

std::string rational_to_decimal(const Rational& q, unsigned digits) {
    if (digits == 0 || digits > 50) throw PreconditionViolation("digits must be in 1..50");
    if (q == 0) return "0";
    bool negative = q < 0;
    Rational a = abs(q);
    // e = floor(log10 a)
    long e = static_cast<long>(mpz_sizeinbase(a.get_num_mpz_t(), 10)) -
             static_cast<long>(mpz_sizeinbase(a.get_den_mpz_t(), 10));
    auto scaled = [&](long ee) {
        Rational s = a;
        long shift = static_cast<long>(digits) - 1 - ee;
        if (shift >= 0) s *= Rational(pow10(shift));
        else s /= Rational(pow10(-shift));
        return s;
    };
    // correct the floating estimate of the exponent exactly
    while (scaled(e) >= Rational(pow10(digits))) ++e;
    while (scaled(e) < Rational(pow10(digits - 1))) --e;
    Rational s = scaled(e);
    Integer n = s.get_num() / s.get_den();
    Rational rem = s - Rational(n);
    if (rem > Rational(1, 2) || (rem == Rational(1, 2) && n % 2 != 0)) ++n;
    if (n == pow10(digits)) {
        n /= 10;
        ++e;
    }
    return format_decimal(negative, n.get_str(), e + 1);
}

std::string radical_to_decimal(const RadicalValue& a, unsigned digits) {
    if (digits == 0 || digits > 50) throw PreconditionViolation("digits must be in 1..50");
    if (a.is_zero()) return "0";
    if (a.radicand == 1 && a.pi_half == 0 && a.pi_int == 0) return rational_to_decimal(a.coeff, digits);
    // Irrational: no decimal ties, so agreement at two working precisions certifies the rounding.
    mpfr_prec_t prec = static_cast<mpfr_prec_t>(digits * 3.33) + 64;
    for (int attempt = 0; attempt < 20; ++attempt, prec *= 2) {
        long e1 = 0, e2 = 0;
        std::string d1 = mpfr_digits(a, digits, prec, e1);
        std::string d2 = mpfr_digits(a, digits, prec + 64, e2);
        if (d1 == d2 && e1 == e2) {
            bool negative = !d1.empty() && d1[0] == '-';
            return format_decimal(negative, negative ? d1.substr(1) : d1, e1);
        }
    }
    throw NonConvergent("decimal rendering did not stabilize");
}

// ---------------------------------------------------------------- RadicalSum

void RadicalSum::add(const RadicalValue& v) {
    if (v.is_zero()) return;
    Key k{v.radicand, v.pi_half, v.pi_int};
    auto it = terms_.find(k);
    if (it == terms_.end()) {
        terms_.emplace(k, v.coeff);
        return;
    }
    it->second += v.coeff;
    if (it->second == 0) terms_.erase(it);
}

RadicalSum& RadicalSum::operator+=(const RadicalSum& o) {
    for (const auto& [k, c] : o.terms_) add(RadicalValue::make(c, std::get<0>(k), std::get<1>(k), std::get<2>(k)));
    return *this;
}

RadicalSum& RadicalSum::operator-=(const RadicalSum& o) { return *this += o.negated(); }

RadicalSum RadicalSum::times(const RadicalValue& v) const {
    RadicalSum r;
    for (const auto& [k, c] : terms_) {
        r.add(radical_mul(RadicalValue::make(c, std::get<0>(k), std::get<1>(k), std::get<2>(k)), v));
    }
    return r;
}

RadicalSum RadicalSum::negated() const {
    RadicalSum r = *this;
    for (auto& [k, c] : r.terms_) c = -c;
    return r;
}

RadicalValue RadicalSum::to_value() const {
    if (terms_.empty()) return {};
    if (terms_.size() > 1) throw IncompatibleRadicals("sum of distinct radicals: " + to_string());
    const auto& [k, c] = *terms_.begin();
    return RadicalValue::make(c, std::get<0>(k), std::get<1>(k), std::get<2>(k));
}

std::string RadicalSum::to_string() const {
    if (terms_.empty()) return "0";
    std::string out;
    for (const auto& [k, c] : terms_) {
        if (!out.empty()) out += " + ";
        out += RadicalValue::make(c, std::get<0>(k), std::get<1>(k), std::get<2>(k)).to_string();
    }
    return out;
}

}  // namespace mel
