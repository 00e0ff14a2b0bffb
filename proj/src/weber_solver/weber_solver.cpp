#include "mel/weber_solver.hpp"

namespace mel {

HermiteSeries apply_L(unsigned beta, const HermiteSeries& s) {
    HermiteSeries r;
    for (const auto& [l, c] : s.terms()) {
        r.add_term(l, radical_scale(c, Rational(static_cast<long>(beta) - static_cast<long>(l))));
    }
    return r;
}

HermiteSeries solve_weber(const WeberProblem& p) {
    if (!p.rhs.coeff(p.beta).is_zero()) {
        throw ResonantForcing("forcing has an H_" + std::to_string(p.beta) + " component " +
                              p.rhs.coeff(p.beta).to_string());
    }
    HermiteSeries x;
    for (const auto& [l, c] : p.rhs.terms()) {
        x.add_term(l, radical_scale(c, make_rational(1, static_cast<long>(p.beta) - static_cast<long>(l))));
    }
    if (p.kernel_policy.kind == KernelPolicy::Kind::match_value_at_zero) {
        RadicalValue h0 = hermite_at_zero(p.beta);
        if (h0.is_zero()) {
            throw KernelConditionUnsatisfiable("H_" + std::to_string(p.beta) + "(0) = 0");
        }
        RadicalSum gap(p.kernel_policy.value);
        gap -= series_value_at_zero(x);
        x.add_term(p.beta, gap.to_value() / h0);
    }
    return x;
}

bool algebraic_solution_exists(const Rational& beta_candidate) {
    return beta_candidate.get_den() == 1 && beta_candidate >= 0;
}

}  // namespace mel
