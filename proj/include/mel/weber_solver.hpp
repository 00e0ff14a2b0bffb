#pragma once

#include "mel/hermite_algebra.hpp"

namespace mel {

struct KernelPolicy {
    enum class Kind { zero_kernel_component, match_value_at_zero };
    Kind kind = Kind::zero_kernel_component;
    RadicalValue value;  // target x(0) for match_value_at_zero

    static KernelPolicy zero_kernel() { return {}; }
    static KernelPolicy match_at_zero(const RadicalValue& c) { return {Kind::match_value_at_zero, c}; }
};

struct WeberProblem {
    unsigned beta = 0;
    HermiteSeries rhs;
    KernelPolicy kernel_policy;
};

// L_beta q = q'' - t q' + beta q, applied with the diagonal rule L_beta H_l = (beta - l) H_l.
HermiteSeries apply_L(unsigned beta, const HermiteSeries& s);
HermiteSeries solve_weber(const WeberProblem& p);
bool algebraic_solution_exists(const Rational& beta_candidate);

}  // namespace mel
