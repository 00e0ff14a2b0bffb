#include "mel/reversible_systems.hpp"

#include <optional>
#include <vector>

#include "mel/weber_solver.hpp"

namespace mel {

std::string to_string(SystemKind k) {
    switch (k) {
        case SystemKind::folded_node: return "folded_node";
        case SystemKind::falkner_skan: return "falkner_skan";
        case SystemKind::nose: return "nose";
        default: return "generic";
    }
}

SystemKind system_kind_from_string(const std::string& s) {
    if (s == "folded_node" || s == "folded-node") return SystemKind::folded_node;
    if (s == "falkner_skan" || s == "falkner-skan") return SystemKind::falkner_skan;
    if (s == "nose") return SystemKind::nose;
    if (s == "generic") return SystemKind::generic;
    throw ParseError("unknown system '" + s + "'");
}

namespace {

Vec3 vec(const RadicalValue& a, const RadicalValue& b, const RadicalValue& c) { return {a, b, c}; }

void set_sym(Mat3& m, int i, int j, const Rational& v) {
    if (i == j) {
        m[i][i] = v;
    } else {
        m[i][j] = v / 2;
        m[j][i] = v / 2;
    }
}

int eigen_sign(const std::array<int, 3>& sigma, const Vec3& e) {
    bool plus = true, minus = true;
    for (int i = 0; i < 3; ++i) {
        if (e[i].is_zero()) continue;
        if (sigma[i] == 1) minus = false;
        else plus = false;
    }
    if (plus) return 1;
    if (minus) return -1;
    throw PreconditionViolation("frame vector is not a sigma eigenvector");
}

void finish_frame(PerturbedSystem& s) {
    s.sigma_v = eigen_sign(s.sigma, s.e_v);
    s.sigma_w = eigen_sign(s.sigma, s.e_w);
}

}  // namespace

PerturbedSystem build_folded_node(unsigned n) {
    if (n < 1) throw PreconditionViolation("n >= 1 required");
    PerturbedSystem s;
    s.kind = SystemKind::folded_node;
    s.n = n;
    s.mu0 = n;
    s.A1[0][0] = 1;
    s.A0[0][1] = make_rational(n, 2);
    s.A0[1][0] = -2;
    s.A0[2][0] = 2;
    s.alpha_lin[0][1] = Rational(1, 2);
    set_sym(s.quad[0], 0, 2, 1);
    s.sigma = {1, -1, -1};
    s.e_u = vec(0, 0, 1);
    if (n % 2) {
        s.e_v = vec(1, 0, 0);
        s.e_w = vec(0, 1, 0);
    } else {
        s.e_v = vec(0, 1, 0);
        s.e_w = vec(1, 0, 0);
    }
    finish_frame(s);
    return s;
}

PerturbedSystem build_falkner_skan(unsigned n) {
    if (n < 1) throw PreconditionViolation("n >= 1 required");
    PerturbedSystem s;
    s.kind = SystemKind::falkner_skan;
    s.n = n;
    s.mu0 = make_rational(n, 2);
    s.A0[0][1] = 1;
    s.A0[1][2] = 1;
    s.A0[2][1] = -static_cast<long>(n);
    s.A1[2][2] = 1;
    s.alpha_lin[2][1] = -2;
    set_sym(s.quad[2], 0, 2, -1);
    set_sym(s.quad[2], 1, 1, make_rational(n, 2));
    set_sym(s.alpha_quad[2], 1, 1, 1);
    s.sigma = {-1, 1, -1};
    s.e_u = vec(1, 0, 0);
    if (n % 2) {
        s.e_v = vec(0, 0, 1);
        s.e_w = vec(0, 1, 0);
    } else {
        s.e_v = vec(0, 1, 0);
        s.e_w = vec(0, 0, 1);
    }
    finish_frame(s);
    return s;
}

PerturbedSystem build_nose(unsigned n) {
    if (n < 1) throw PreconditionViolation("n >= 1 required");
    PerturbedSystem s;
    s.kind = SystemKind::nose;
    s.n = n;
    s.mu0 = make_rational(n, 2) + 1;
    s.A1[0][0] = 1;
    s.A0[0][1] = -1;
    s.A0[0][2] = -1;
    s.A0[1][0] = 1;
    s.A0[2][0] = n;
    s.alpha_lin[2][0] = 2;
    set_sym(s.quad[0], 0, 2, -1);
    set_sym(s.quad[2], 0, 0, make_rational(n, 2));
    set_sym(s.alpha_quad[2], 0, 0, 1);
    s.sigma = {1, -1, -1};
    RadicalValue half_root2 = radical_scale(RadicalValue::sqrt(2), Rational(1, 2));
    s.e_u = vec(0, half_root2, -half_root2);
    if (n % 2) {
        RadicalValue inv_norm = radical_inv(RadicalValue::sqrt(Integer(1) + Integer(n) * n));
        s.e_v = vec(0, inv_norm, radical_scale(inv_norm, Rational(n)));
        s.e_w = vec(1, 0, 0);
    } else {
        s.e_v = vec(1, 0, 0);
        // Unnormalized, matching the displayed adjoint at t = 0.
        s.e_w = vec(0, 1, 1);
    }
    finish_frame(s);
    return s;
}

PerturbedSystem build_generic(const GenericCoefficients& c, const GenericCoefficients& d) {
    PerturbedSystem s;
    s.kind = SystemKind::generic;
    s.A1[0][0] = 1;
    s.A0[0][1] = c.a2;
    s.A0[1][0] = c.b1;
    s.A0[2][0] = c.c1;
    s.A1[2][1] = c.c23;
    s.alpha_lin[0][1] = d.a2;
    s.alpha_lin[1][0] = d.b1;
    s.alpha_lin[2][0] = d.c1;
    s.alpha_lin_t[2][1] = d.c23;
    set_sym(s.quad[0], 0, 1, c.a12);
    set_sym(s.quad[0], 0, 2, 1);
    set_sym(s.quad[1], 0, 0, c.b11);
    set_sym(s.quad[1], 1, 1, c.b22);
    set_sym(s.quad[2], 0, 0, c.c11);
    set_sym(s.quad[2], 1, 1, c.c22);
    set_sym(s.quad[2], 1, 2, c.c23);
    set_sym(s.alpha_quad[0], 0, 1, d.a12);
    set_sym(s.alpha_quad[1], 0, 0, d.b11);
    set_sym(s.alpha_quad[1], 1, 1, d.b22);
    set_sym(s.alpha_quad[2], 0, 0, d.c11);
    set_sym(s.alpha_quad[2], 1, 1, d.c22);
    set_sym(s.alpha_quad[2], 1, 2, d.c23);
    s.sigma = {1, -1, -1};
    s.e_u = vec(0, 0, 1);
    Rational beta = -(c.a2 * c.b1 + 1);
    if (algebraic_solution_exists(beta)) s.n = static_cast<unsigned>(beta.get_num().get_ui());
    bool beta_odd = algebraic_solution_exists(beta) && s.n % 2 == 1;
    if (beta_odd) {
        s.e_v = vec(0, 1, 0);
        s.e_w = vec(1, 0, 0);
    } else {
        s.e_v = vec(1, 0, 0);
        s.e_w = vec(0, 1, 0);
    }
    finish_frame(s);
    return s;
}

PerturbedSystem build_system(SystemKind kind, unsigned n) {
    switch (kind) {
        case SystemKind::folded_node: return build_folded_node(n);
        case SystemKind::falkner_skan: return build_falkner_skan(n);
        case SystemKind::nose: return build_nose(n);
        default: throw PreconditionViolation("generic systems need explicit coefficients");
    }
}

unsigned designated_row(const PerturbedSystem& s) {
    for (unsigned r = 0; r < 3; ++r) {
        if (s.A1[r][r] == 1 && s.A0[r][r] == 0) return r;
    }
    throw UnsupportedStructure("no row of the form z_r' = t z_r + ...");
}

Rational beta_candidate(const PerturbedSystem& s) {
    unsigned r = designated_row(s);
    Rational kappa = 0;
    for (unsigned c = 0; c < 3; ++c) {
        if (c != r) kappa += s.A0[r][c] * s.A0[c][r];
    }
    return -(1 + kappa);
}

unsigned beta_of(const PerturbedSystem& s) {
    Rational b = beta_candidate(s);
    if (!algebraic_solution_exists(b)) throw NotResonant("beta = " + b.get_str());
    return static_cast<unsigned>(b.get_num().get_ui());
}

// ---------------------------------------------------------------- series vector helpers

SeriesVec apply_matrix(const Mat3& m, const SeriesVec& z) {
    SeriesVec out;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            if (m[i][j] != 0) out[i] += RadicalValue(m[i][j]) * z[j];
        }
    }
    return out;
}

SeriesVec apply_A(const PerturbedSystem& s, const SeriesVec& z) {
    SeriesVec out = apply_matrix(s.A0, z);
    SeriesVec tz;
    for (int i = 0; i < 3; ++i) tz[i] = series_mul_t(z[i]);
    SeriesVec t_part = apply_matrix(s.A1, tz);
    for (int i = 0; i < 3; ++i) out[i] += t_part[i];
    return out;
}

SeriesVec apply_bilinear(const QuadForm& q, const SeriesVec& u, const SeriesVec& v) {
    SeriesVec out;
    for (int c = 0; c < 3; ++c) {
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                if (q[c][i][j] != 0) out[c] += RadicalValue(q[c][i][j]) * series_product(u[i], v[j]);
            }
        }
    }
    return out;
}

SeriesVec variational_residual(const PerturbedSystem& s, const SeriesVec& z, const SeriesVec& forcing) {
    SeriesVec az = apply_A(s, z);
    SeriesVec out;
    for (int i = 0; i < 3; ++i) out[i] = series_derivative(z[i]) - az[i] - forcing[i];
    return out;
}

SeriesVec adjoint_residual(const PerturbedSystem& s, const SeriesVec& phi) {
    // psi = w phi with w' = -t w:  psi' + A^T psi = w (phi' - t phi + A^T phi)
    Mat3 t0{}, t1{};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            t0[i][j] = s.A0[j][i];
            t1[i][j] = s.A1[j][i];
        }
    }
    SeriesVec a = apply_matrix(t0, phi);
    SeriesVec tphi;
    for (int i = 0; i < 3; ++i) tphi[i] = series_mul_t(phi[i]);
    SeriesVec b = apply_matrix(t1, tphi);
    SeriesVec out;
    for (int i = 0; i < 3; ++i) out[i] = series_derivative(phi[i]) - tphi[i] + a[i] + b[i];
    return out;
}

HermiteSeries pairing(const SeriesVec& a, const SeriesVec& b) {
    HermiteSeries out;
    for (int i = 0; i < 3; ++i) out += series_product(a[i], b[i]);
    return out;
}

Vec3 value_at_zero(const SeriesVec& z) {
    Vec3 v;
    for (int i = 0; i < 3; ++i) v[i] = series_value_at_zero(z[i]).to_value();
    return v;
}

// ---------------------------------------------------------------- solver

namespace {

RadicalValue term_value(const RadicalSum::Key& k, const Rational& c) {
    return RadicalValue::make(c, std::get<0>(k), std::get<1>(k), std::get<2>(k));
}

RadicalSum product(const RadicalSum& a, const RadicalSum& b) {
    RadicalSum out;
    for (const auto& [k, c] : b.terms()) out += a.times(term_value(k, c));
    return out;
}

// particular part plus one series per unknown
struct Affine {
    HermiteSeries p;
    std::vector<HermiteSeries> u;

    explicit Affine(size_t unknowns = 0) : u(unknowns) {}

    Affine& operator+=(const Affine& o) {
        p += o.p;
        for (size_t i = 0; i < u.size(); ++i) u[i] += o.u[i];
        return *this;
    }
    Affine scaled(const RadicalValue& c) const {
        Affine r(u.size());
        r.p = c * p;
        for (size_t i = 0; i < u.size(); ++i) r.u[i] = c * u[i];
        return r;
    }
    template <class F>
    Affine mapped(F f) const {
        Affine r(u.size());
        r.p = f(p);
        for (size_t i = 0; i < u.size(); ++i) r.u[i] = f(u[i]);
        return r;
    }
};

struct Equation {
    std::vector<RadicalSum> coef;
    RadicalSum rhs;
};

// Every Hermite coefficient of `a` must vanish.
void vanishing_equations(const Affine& a, std::vector<Equation>& eqs) {
    std::map<unsigned, bool> degrees;
    for (const auto& [d, c] : a.p.terms()) degrees[d] = true;
    for (const auto& s : a.u) {
        for (const auto& [d, c] : s.terms()) degrees[d] = true;
    }
    for (const auto& [d, unused] : degrees) {
        Equation e;
        for (const auto& s : a.u) e.coef.emplace_back(s.coeff(d));
        e.rhs = RadicalSum(radical_neg(a.p.coeff(d)));
        eqs.push_back(std::move(e));
    }
}

// sum_i w_i a_i(0) = target
Equation value_equation(const std::array<Affine, 3>& a, const Vec3& w, const RadicalValue& target) {
    Equation e;
    e.coef.assign(a[0].u.size(), RadicalSum());
    e.rhs = RadicalSum(target);
    for (int i = 0; i < 3; ++i) {
        if (w[i].is_zero()) continue;
        e.rhs -= series_value_at_zero(a[i].p).times(w[i]);
        for (size_t k = 0; k < e.coef.size(); ++k) e.coef[k] += series_value_at_zero(a[i].u[k]).times(w[i]);
    }
    return e;
}

std::vector<RadicalValue> solve_linear(std::vector<Equation> eqs, size_t unknowns) {
    size_t rank = 0;
    std::vector<size_t> pivot_row(unknowns);
    for (size_t col = 0; col < unknowns; ++col) {
        std::optional<size_t> pick;
        bool nonmonomial = false;
        for (size_t r = rank; r < eqs.size(); ++r) {
            if (eqs[r].coef[col].is_zero()) continue;
            if (eqs[r].coef[col].is_monomial()) {
                pick = r;
                break;
            }
            nonmonomial = true;
        }
        if (!pick) {
            if (nonmonomial) throw UnsupportedStructure("pivot mixes distinct radicals");
            throw InconsistentConditions("integration constants are underdetermined");
        }
        std::swap(eqs[rank], eqs[*pick]);
        Equation& pr = eqs[rank];
        RadicalValue inv = radical_inv(pr.coef[col].to_value());
        for (auto& c : pr.coef) c = c.times(inv);
        pr.rhs = pr.rhs.times(inv);
        for (size_t r = 0; r < eqs.size(); ++r) {
            if (r == rank || eqs[r].coef[col].is_zero()) continue;
            RadicalSum f = eqs[r].coef[col];
            for (size_t k = 0; k < unknowns; ++k) eqs[r].coef[k] -= product(f, pr.coef[k]);
            eqs[r].rhs -= product(f, pr.rhs);
        }
        pivot_row[col] = rank++;
    }
    for (size_t r = rank; r < eqs.size(); ++r) {
        if (!eqs[r].rhs.is_zero()) {
            throw InconsistentConditions("leftover condition " + eqs[r].rhs.to_string() + " = 0 fails");
        }
    }
    std::vector<RadicalValue> x(unknowns);
    for (size_t col = 0; col < unknowns; ++col) x[col] = eqs[pivot_row[col]].rhs.to_value();
    return x;
}

bool entry_nonzero(const PerturbedSystem& s, unsigned i, unsigned j) { return s.A0[i][j] != 0 || s.A1[i][j] != 0; }

}  // namespace

SeriesVec solve_variational(const PerturbedSystem& s, const SeriesVec& forcing, InitialCondition ic) {
    const unsigned r = designated_row(s);
    const unsigned beta = beta_of(s);
    for (unsigned c = 0; c < 3; ++c) {
        if (c == r) continue;
        if (s.A1[r][c] != 0) throw UnsupportedStructure("t-dependent coupling in the designated row");
        if (s.A0[c][c] != 0 || s.A1[c][c] != 0) throw UnsupportedStructure("diagonal entry off the designated row");
        if (s.A0[r][c] == 0) continue;
        for (unsigned d = 0; d < 3; ++d) {
            if (d != r && entry_nonzero(s, c, d)) throw UnsupportedStructure("coupled row is not driven by z_r alone");
        }
        if (s.A1[c][r] != 0) throw UnsupportedStructure("coupled row is not driven by z_r alone");
    }

    // unknowns: one constant per non-designated row, then the kernel multiple if free
    const bool kernel_free = ic == InitialCondition::equals_e_v;
    std::vector<unsigned> rows;
    for (unsigned c = 0; c < 3; ++c) {
        if (c != r) rows.push_back(c);
    }
    const size_t unknowns = rows.size() + (kernel_free ? 1 : 0);

    HermiteSeries weber_rhs = series_derivative(forcing[r]);
    for (unsigned c : rows) {
        if (s.A0[r][c] != 0) weber_rhs += RadicalValue(s.A0[r][c]) * forcing[c];
    }
    std::array<Affine, 3> z{Affine(unknowns), Affine(unknowns), Affine(unknowns)};
    z[r].p = solve_weber({beta, weber_rhs, KernelPolicy::zero_kernel()});
    if (kernel_free) z[r].u[rows.size()] = HermiteSeries::basis(beta);

    std::array<bool, 3> known{};
    known[r] = true;
    for (size_t pass = 0; pass < rows.size(); ++pass) {
        for (size_t idx = 0; idx < rows.size(); ++idx) {
            unsigned c = rows[idx];
            if (known[c]) continue;
            bool ready = true;
            for (unsigned d = 0; d < 3; ++d) {
                if (d != c && entry_nonzero(s, c, d) && !known[d]) ready = false;
            }
            if (!ready) continue;
            Affine rhs(unknowns);
            rhs.p = forcing[c];
            for (unsigned d = 0; d < 3; ++d) {
                if (s.A0[c][d] != 0) rhs += z[d].scaled(RadicalValue(s.A0[c][d]));
                if (s.A1[c][d] != 0) rhs += z[d].mapped(series_mul_t).scaled(RadicalValue(s.A1[c][d]));
            }
            z[c] = rhs.mapped([](const HermiteSeries& h) { return series_antiderivative(h, RadicalValue()); });
            z[c].u[idx].add_term(0, RadicalValue(1));
            known[c] = true;
        }
    }
    for (unsigned c : rows) {
        if (!known[c]) throw UnsupportedStructure("cyclic dependency among non-designated rows");
    }

    std::vector<Equation> eqs;
    // the designated row itself, before differentiation
    Affine res = z[r].mapped(series_derivative);
    res += z[r].mapped(series_mul_t).scaled(RadicalValue(-1));
    for (unsigned c : rows) {
        if (s.A0[r][c] != 0) res += z[c].scaled(RadicalValue(-s.A0[r][c]));
    }
    res.p -= forcing[r];
    vanishing_equations(res, eqs);

    if (ic == InitialCondition::equals_e_v) {
        for (int i = 0; i < 3; ++i) {
            Vec3 unit{};
            unit[i] = RadicalValue(1);
            eqs.push_back(value_equation(z, unit, s.e_v[i]));
        }
    } else {
        eqs.push_back(value_equation(z, s.e_u, RadicalValue()));
        eqs.push_back(value_equation(z, s.e_v, RadicalValue()));
    }

    std::vector<RadicalValue> x = solve_linear(std::move(eqs), unknowns);
    SeriesVec out;
    for (int i = 0; i < 3; ++i) {
        out[i] = z[i].p;
        for (size_t k = 0; k < unknowns; ++k) out[i] += x[k] * z[i].u[k];
    }
    SeriesVec check = variational_residual(s, out, forcing);
    for (const auto& c : check) {
        if (!c.empty()) throw InconsistentConditions("variational residual does not vanish");
    }
    return out;
}

VariationTriple first_variation(const PerturbedSystem& s) {
    try {
        beta_of(s);
    } catch (const NotResonant& e) {
        throw NoAlgebraicSolution(e.what());
    }
    return {solve_variational(s, SeriesVec{}, InitialCondition::equals_e_v)};
}

AdjointSolution adjoint_solution(const PerturbedSystem& s) {
    unsigned beta = 0;
    try {
        beta = beta_of(s);
    } catch (const NotResonant& e) {
        throw NoDecayingSolution(e.what());
    }
    const unsigned r = designated_row(s);
    SeriesVec phi;
    phi[r] = HermiteSeries::basis(beta + 1);
    std::array<bool, 3> known{};
    known[r] = true;
    for (int pass = 0; pass < 2; ++pass) {
        for (unsigned d = 0; d < 3; ++d) {
            if (known[d]) continue;
            if (entry_nonzero(s, d, d)) throw UnsupportedStructure("diagonal entry off the designated row");
            bool ready = true;
            for (unsigned e = 0; e < 3; ++e) {
                if (e != d && entry_nonzero(s, e, d) && !known[e]) ready = false;
            }
            if (!ready) continue;
            HermiteSeries g;
            for (unsigned e = 0; e < 3; ++e) {
                if (e == d) continue;
                if (s.A0[e][d] != 0) g -= RadicalValue(s.A0[e][d]) * phi[e];
                if (s.A1[e][d] != 0) g -= RadicalValue(s.A1[e][d]) * series_mul_t(phi[e]);
            }
            try {
                phi[d] = solve_raising(g);
            } catch (const PreconditionViolation&) {
                throw NoDecayingSolution("adjoint component " + std::to_string(d) + " has no polynomial factor");
            }
            known[d] = true;
        }
    }
    for (unsigned d = 0; d < 3; ++d) {
        if (!known[d]) throw UnsupportedStructure("cyclic dependency in the adjoint system");
    }
    for (const auto& c : adjoint_residual(s, phi)) {
        if (!c.empty()) throw NoDecayingSolution("adjoint residual does not vanish");
    }
    Vec3 at0 = value_at_zero(phi);
    RadicalValue scale;
    for (int i = 0; i < 3 && scale.is_zero(); ++i) {
        if (!s.e_w[i].is_zero()) {
            if (at0[i].is_zero()) throw InconsistentConditions("adjoint vanishes along e_w at t = 0");
            scale = s.e_w[i] / at0[i];
        }
    }
    AdjointSolution out;
    for (int i = 0; i < 3; ++i) out.psi[i] = scale * phi[i];
    if (value_at_zero(out.psi) != s.e_w) throw InconsistentConditions("adjoint at t = 0 is not parallel to e_w");
    return out;
}

nlohmann::json system_to_json(const PerturbedSystem& s) {
    auto mat = [](const Mat3& m) {
        nlohmann::json j = nlohmann::json::array();
        for (const auto& row : m) {
            nlohmann::json jr = nlohmann::json::array();
            for (const auto& v : row) jr.push_back(v.get_str());
            j.push_back(jr);
        }
        return j;
    };
    auto quad = [&](const QuadForm& q) {
        nlohmann::json j = nlohmann::json::array();
        for (const auto& m : q) j.push_back(mat(m));
        return j;
    };
    auto vec3 = [](const Vec3& v) {
        nlohmann::json j = nlohmann::json::array();
        for (const auto& x : v) j.push_back(x.to_string());
        return j;
    };
    nlohmann::json j;
    j["name"] = s.name();
    j["n"] = s.n;
    j["mu0"] = s.mu0.get_str();
    j["beta"] = beta_candidate(s).get_str();
    j["A0"] = mat(s.A0);
    j["A1"] = mat(s.A1);
    j["quad"] = quad(s.quad);
    j["alpha_lin"] = mat(s.alpha_lin);
    j["alpha_lin_t"] = mat(s.alpha_lin_t);
    j["alpha_quad"] = quad(s.alpha_quad);
    j["sigma"] = s.sigma;
    j["e_u"] = vec3(s.e_u);
    j["e_v"] = vec3(s.e_v);
    j["e_w"] = vec3(s.e_w);
    j["sigma_v"] = s.sigma_v;
    j["sigma_w"] = s.sigma_w;
    return j;
}

}  // namespace mel
