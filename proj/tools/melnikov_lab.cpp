#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <future>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "mel/melnikov_engine.hpp"
#include "mel/orbit_lab.hpp"
#include "table1_fixture.hpp"

using nlohmann::json;
using namespace mel;

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit { ok = 0, mismatch = 2, numerics = 3, usage = 64 };

struct Globals {
    std::string output = "text";
    unsigned digits = 10;
};

void emit_json(const std::string& command, const json& results) {
    json env{{"tool", "melnikov_lab"}, {"version", kVersion}, {"command", command}, {"results", results}};
    std::cout << env.dump(2) << "\n";
}

std::string digits_only(const std::string& dec) {
    std::string d;
    for (char c : dec) {
        if (c == 'e' || c == 'E') break;
        if (std::isdigit(static_cast<unsigned char>(c))) d += c;
    }
    size_t nz = d.find_first_not_of('0');
    return nz == std::string::npos ? "" : d.substr(nz);
}

std::string value_text(const RadicalValue& v, unsigned digits) {
    return v.to_string() + "  (" + radical_to_decimal(v, digits) + ")";
}

// ---------------------------------------------------------------- identities

int run_identities(const Globals& g, unsigned max_degree) {
    long checked = 0, failed = 0;
    json failures = json::array();
    auto record = [&](bool good, const std::string& what) {
        ++checked;
        if (!good) {
            ++failed;
            failures.push_back(what);
        }
    };
    for (unsigned n = 0; n <= max_degree; ++n) {
        HermiteSeries hn = HermiteSeries::basis(n);
        // H_n' = sqrt(2) n H_{n-1} in t
        HermiteSeries expect;
        if (n) expect.add_term(n - 1, radical_scale(RadicalValue::sqrt(2), Rational(n)));
        record(series_derivative(hn) == expect, "derivative H" + std::to_string(n));
        for (unsigned m = 0; m <= max_degree; ++m) {
            HermiteSeries prod = series_product(hn, HermiteSeries::basis(m));
            record(gaussian_series_integral(prod) == gaussian_pair_integral(n, m),
                   "orthogonality " + std::to_string(n) + "," + std::to_string(m));
            for (unsigned l = 0; l <= max_degree; ++l) {
                RadicalValue via_product = radical_mul(prod.coeff(l), gaussian_pair_integral(l, l));
                RadicalValue triple = gaussian_triple_integral(n, m, l);
                bool good = via_product == triple;
                if ((n + m + l) % 2) good = good && triple.is_zero();
                record(good, "triple " + std::to_string(n) + "," + std::to_string(m) + "," + std::to_string(l));
            }
        }
    }
    if (g.output == "json") {
        emit_json("identities", {{"max_degree", max_degree}, {"checked", checked}, {"failed", failed},
                                 {"failures", failures}});
    } else if (g.output == "csv") {
        std::cout << "max_degree,checked,failed\n" << max_degree << "," << checked << "," << failed << "\n";
    } else {
        std::cout << "Hermite identities up to degree " << max_degree << ": " << checked << " checked, " << failed
                  << " failed\n";
        for (const auto& f : failures) std::cout << "  FAIL " << f.get<std::string>() << "\n";
    }
    return failed ? mismatch : ok;
}

// ---------------------------------------------------------------- melnikov

void print_report_text(const MelnikovReport& r, unsigned digits) {
    std::cout << r.system << " n=" << r.n << " (" << r.parity << "), sigma_v=" << r.sigma_v
              << " sigma_w=" << r.sigma_w << "\n";
    std::cout << "  d2D/dv dalpha = " << value_text(r.d2_dv_dalpha, digits) << "\n";
    std::cout << "  d2D/dv2       = " << (r.d2_dv2 ? value_text(*r.d2_dv2, digits) : "0 by parity") << "\n";
    if (r.d3_dv3) std::cout << "  d3D/dv3       = " << value_text(*r.d3_dv3, digits) << "\n";
    std::cout << "  bifurcation: " << to_string(r.bifurcation) << ", orientation sign " << r.orientation_sign;
    if (r.normal_form_sign) std::cout << " (normal form " << r.normal_form_sign << ")";
    std::cout << "\n";
    if (r.branch_side) std::cout << "  branch side: " << to_string(*r.branch_side) << "\n";
    for (const auto& [k, v] : r.oracle_agreement)
        std::cout << "  closed form " << k << ": " << (v ? (*v ? "agrees" : "DIFFERS") : "n/a") << "\n";
}

bool oracle_ok(const MelnikovReport& r) {
    for (const auto& [k, v] : r.oracle_agreement)
        if (v && !*v) return false;
    return true;
}

bool orientation_ok(const MelnikovReport& r) {
    return r.normal_form_sign == 0 || r.normal_form_sign == r.orientation_sign;
}

int run_melnikov(const Globals& g, const std::string& system, unsigned n) {
    PerturbedSystem s = build_system(system_kind_from_string(system), n);
    MelnikovReport r = classify_bifurcation(s);
    if (g.output == "json") {
        emit_json("melnikov", report_to_json(r, g.digits));
    } else if (g.output == "csv") {
        std::cout << "system,n,derivative,exact,decimal\n";
        auto row = [&](const char* name, const RadicalValue& v) {
            std::cout << r.system << "," << r.n << "," << name << "," << v.to_string() << ","
                      << radical_to_decimal(v, g.digits) << "\n";
        };
        row("d2_dv_dalpha", r.d2_dv_dalpha);
        if (r.d2_dv2) row("d2_dv2", *r.d2_dv2);
        if (r.d3_dv3) row("d3_dv3", *r.d3_dv3);
    } else {
        print_report_text(r, g.digits);
    }
    return oracle_ok(r) && orientation_ok(r) ? ok : mismatch;
}

// ---------------------------------------------------------------- table1

int run_table1(const Globals& g) {
    json rows = json::array();
    bool all = true;
    for (const auto& row : fixture::table1) {
        RadicalValue v = d3_dv3(build_folded_node(row.n));
        std::string ours = radical_to_decimal(v, g.digits);
        std::string ours10 = digits_only(radical_to_decimal(v, 10));
        std::string ref = digits_only(row.col4);
        size_t matched = 0;
        while (matched < ours10.size() && matched < ref.size() && ours10[matched] == ref[matched]) ++matched;
        double ratio = v.to_double() / std::stod(row.col4);
        bool scale_ok = ratio > 0.5 && ratio < 2;
        bool agree = scale_ok && matched >= 9;
        if (!agree && scale_ok && row.red_from && row.red_from <= 9) {
            long ours9 = std::stol(digits_only(radical_to_decimal(v, 9)));
            long ref9 = std::stol(ref.substr(0, 9));
            agree = std::labs(ours9 - ref9) <= 1;
        }
        all = all && agree;
        rows.push_back({{"n", row.n},
                        {"exact", v.to_string()},
                        {"decimal", ours},
                        {"reference", row.col4},
                        {"rescaled_other_normalization", row.col3},
                        {"matched_digits", matched},
                        {"flagged_from_digit", row.red_from},
                        {"agree", agree}});
    }
    if (g.output == "json") {
        emit_json("table1", {{"rows", rows}, {"all_agree", all}});
    } else if (g.output == "csv") {
        std::cout << "n,exact,decimal,reference,matched_digits,agree\n";
        for (const auto& r : rows)
            std::cout << r["n"] << "," << r["exact"].get<std::string>() << "," << r["decimal"].get<std::string>()
                      << "," << r["reference"].get<std::string>() << "," << r["matched_digits"] << ","
                      << (r["agree"].get<bool>() ? "yes" : "no") << "\n";
    } else {
        for (const auto& r : rows) {
            std::cout << "n=" << r["n"] << "  " << r["exact"].get<std::string>() << "\n    " << r["decimal"].get<std::string>()
                      << " vs " << r["reference"].get<std::string>() << "  matched " << r["matched_digits"] << " digits";
            if (r["flagged_from_digit"].get<unsigned>()) std::cout << " (reference flags digit " << r["flagged_from_digit"] << ")";
            std::cout << (r["agree"].get<bool>() ? "  ok" : "  MISMATCH") << "\n";
        }
        std::cout << (all ? "all rows agree to 9 significant digits\n" : "table mismatch\n");
    }
    return all ? ok : mismatch;
}

// ---------------------------------------------------------------- coeffs

int run_coeffs(const Globals& g, const std::string& system, unsigned k) {
    CoefficientTable t = coefficient_table(system_kind_from_string(system), k);
    if (g.output == "json") {
        json c = json::array(), d = json::array();
        for (const auto& v : t.c) c.push_back(v.get_str());
        for (const auto& v : t.d) d.push_back(v.get_str());
        emit_json("coeffs", {{"system", to_string(t.system)},
                             {"k", t.k},
                             {"c", c},
                             {"d", d},
                             {"sign_pattern_holds", t.sign_pattern_holds},
                             {"ratio_bound_holds", t.ratio_bound_holds},
                             {"sum_positive", t.sum_positive},
                             {"halved_bound_positive", t.halved_bound_positive}});
    } else {
        std::cout << coefficient_table_csv(t, g.digits);
        if (g.output == "text") {
            std::cout << "sign pattern " << (t.sign_pattern_holds ? "holds" : "fails") << ", ratio bound "
                      << (t.ratio_bound_holds ? "holds" : "fails") << ", sum "
                      << (t.sum_positive ? "positive" : "not positive") << "\n";
        }
    }
    bool good = t.sign_pattern_holds && t.ratio_bound_holds && t.sum_positive;
    return good ? ok : mismatch;
}

// ---------------------------------------------------------------- quadcheck

int run_quadcheck(const Globals& g, const std::string& system, unsigned n, double tol) {
    PerturbedSystem s = build_system(system_kind_from_string(system), n);
    json rows = json::array();
    bool all = true;
    for (Derivative d : {Derivative::dv_dalpha, Derivative::dv2, Derivative::dv3}) {
        RadicalValue exact;
        try {
            exact = derivative(s, d);
        } catch (const IdenticallyZeroByParity&) {
            continue;
        } catch (const WrongParity&) {
            continue;
        }
        QuadratureReport q = quadrature_check(integrand(s, d), exact, tol);
        all = all && q.pass;
        rows.push_back({{"derivative", to_string(d)},
                        {"exact", radical_to_decimal(exact, std::max(g.digits, 20u))},
                        {"numeric", q.numeric},
                        {"rel_error", q.rel_error},
                        {"error_estimate", q.error_estimate},
                        {"pass", q.pass}});
    }
    if (g.output == "json") {
        emit_json("quadcheck", {{"system", s.name()}, {"n", n}, {"tolerance", tol}, {"rows", rows}});
    } else if (g.output == "csv") {
        std::cout << "system,n,derivative,exact,numeric,rel_error,pass\n";
        for (const auto& r : rows)
            std::cout << s.name() << "," << n << "," << r["derivative"].get<std::string>() << ","
                      << r["exact"].get<std::string>() << "," << r["numeric"].get<std::string>() << ","
                      << r["rel_error"].get<double>() << "," << (r["pass"].get<bool>() ? "yes" : "no") << "\n";
    } else {
        for (const auto& r : rows)
            std::cout << s.name() << " n=" << n << " " << r["derivative"].get<std::string>() << ": exact "
                      << r["exact"].get<std::string>() << ", quadrature " << r["numeric"].get<std::string>()
                      << ", rel error " << r["rel_error"].get<double>() << (r["pass"].get<bool>() ? "  ok" : "  FAIL")
                      << "\n";
    }
    return all ? ok : mismatch;
}

// ---------------------------------------------------------------- orbit

struct OrbitFlags {
    std::string system;
    double mu = 0;
    std::vector<double> bracket;
    double window = 0.5;
    double rtol = 1e-12, atol = 1e-12;
    std::string csv_path, json_path;
};

int run_orbit(const Globals& g, const OrbitFlags& f) {
    Model model = model_from_string(f.system);
    if (model == Model::folded_node_scaled) throw CLI::ValidationError("--system", "orbit needs falkner-skan or nose");
    // nearest bifurcation point and the side on which the orbits exist
    long N = std::lround(f.mu);
    double alpha = f.mu - static_cast<double>(N);
    long n = model == Model::falkner_skan ? 2 * N : 2 * (N - 1);
    if (n < 1) {
        std::cerr << "no bifurcation of symmetric orbits near mu = " << f.mu << "\n";
        return mismatch;
    }
    PerturbedSystem s = build_system(model == Model::falkner_skan ? SystemKind::falkner_skan : SystemKind::nose,
                                     static_cast<unsigned>(n));
    BranchSide side = branch_side(s);
    bool periodic_side = alpha != 0 && ((alpha > 0) == (side == BranchSide::alpha_positive));
    if (!periodic_side) {
        std::cerr << "refused: mu = " << f.mu << " lies on the non-periodic side of the bifurcation at mu = " << N
                  << " (orbits exist for mu " << (side == BranchSide::alpha_positive ? ">" : "<") << " " << N << ")\n";
        return mismatch;
    }

    ShootingOptions opts;
    opts.window = f.window;
    opts.integration.rel_tol = f.rtol;
    opts.integration.abs_tol = f.atol;
    std::pair<double, double> bracket;
    if (f.bracket.size() == 2) {
        bracket = {f.bracket[0], f.bracket[1]};
    } else {
        auto b = scan_shooting_bracket(model, f.mu, opts.integration);
        if (!b) throw NoRoot("no sign change of the shooting residual on the default grid");
        bracket = *b;
    }
    PeriodicOrbitResult r = find_symmetric_periodic_orbit(model, f.mu, bracket, opts);

    if (!f.csv_path.empty()) {
        std::ofstream out(f.csv_path);
        out << r.trace.to_csv();
    }
    json j = periodic_result_to_json(r);
    if (!f.json_path.empty()) {
        std::ofstream out(f.json_path);
        out << j.dump(2) << "\n";
    }
    if (g.output == "json") {
        emit_json("orbit", j);
    } else if (g.output == "csv") {
        std::cout << r.trace.to_csv();
    } else {
        std::cout << r.model << " mu=" << r.mu << ": symmetric periodic orbit, shooting parameter "
                  << std::setprecision(16) << r.shooting_parameter << "\n"
                  << std::setprecision(6) << "  closure residual " << r.closure_residual << ", symmetry residual "
                  << r.symmetry_residual << "\n";
        for (const auto& c : r.crossings)
            std::cout << "  fix-point set hit (" << c[0] << ", " << c[1] << ", " << c[2] << ")\n";
        if (r.twist) std::cout << "  twist count " << r.twist->half_integer << " (raw " << r.twist->raw << ")\n";
    }
    return ok;
}

// ---------------------------------------------------------------- sweep

int run_sweep(const Globals& g, const std::vector<std::string>& systems, unsigned kmax) {
    struct Task {
        std::string system;
        unsigned n;
    };
    std::vector<Task> tasks;
    for (const auto& sys : systems)
        for (unsigned k = 1; k <= kmax; ++k)
            for (unsigned n : {2 * k - 1, 2 * k}) tasks.push_back({to_string(system_kind_from_string(sys)), n});

    struct Outcome {
        Task task;
        json report;
        bool good = true;
    };
    std::vector<std::future<Outcome>> futures;
    for (const auto& t : tasks) {
        futures.push_back(std::async(std::launch::async, [t, digits = g.digits] {
            Outcome o{t, {}, true};
            try {
                MelnikovReport r = classify_bifurcation(build_system(system_kind_from_string(t.system), t.n));
                o.report = report_to_json(r, digits);
                o.good = oracle_ok(r) && orientation_ok(r);
            } catch (const Error& e) {
                o.report = {{"system", t.system}, {"n", t.n}, {"error", e.kind()}, {"message", e.what()}};
                o.good = false;
            }
            return o;
        }));
    }
    std::vector<Outcome> outcomes;
    for (auto& f : futures) outcomes.push_back(f.get());
    std::sort(outcomes.begin(), outcomes.end(), [](const Outcome& a, const Outcome& b) {
        return std::tie(a.task.system, a.task.n) < std::tie(b.task.system, b.task.n);
    });
    bool all = std::all_of(outcomes.begin(), outcomes.end(), [](const Outcome& o) { return o.good; });

    if (g.output == "json") {
        json arr = json::array();
        for (const auto& o : outcomes) arr.push_back(o.report);
        emit_json("sweep", arr);
    } else {
        std::cout << "system,n,bifurcation,orientation_sign,branch_side,d2_dv_dalpha,second_classifier,status\n";
        for (const auto& o : outcomes) {
            const json& r = o.report;
            std::cout << o.task.system << "," << o.task.n << ",";
            if (r.contains("error")) {
                std::cout << ",,,,," << r["error"].get<std::string>() << "\n";
                continue;
            }
            const json& second = r["d3_dv3"].is_object() ? r["d3_dv3"] : r["d2_dv2"];
            std::cout << r["bifurcation"]["kind"].get<std::string>() << "," << r["bifurcation"]["orientation_sign"]
                      << "," << (r["branch_side"].is_null() ? "" : r["branch_side"].get<std::string>()) << ","
                      << r["d2_dv_dalpha"]["decimal"].get<std::string>() << ","
                      << (second.is_object() ? second["decimal"].get<std::string>() : "") << ","
                      << (o.good ? "ok" : "closed-form mismatch") << "\n";
        }
    }
    return all ? ok : mismatch;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact Melnikov integrals for reversible resonances, with a numerical orbit laboratory"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    Globals g;
    app.add_option("--output,-o", g.output, "json, csv or text")
        ->check(CLI::IsMember({"json", "csv", "text"}))
        ->capture_default_str();
    app.add_option("--digits", g.digits, "significant digits of decimals")->check(CLI::Range(1u, 50u))->capture_default_str();

    unsigned max_degree = 15;
    auto* identities = app.add_subcommand("identities", "check Hermite product, orthogonality and triple-product identities");
    identities->add_option("--max-degree", max_degree)->check(CLI::Range(0u, 60u))->capture_default_str();

    std::string system;
    unsigned n = 0;
    auto* melnikov = app.add_subcommand("melnikov", "Melnikov derivatives and bifurcation class at a resonance");
    melnikov->add_option("--system,-s", system, "folded-node, falkner-skan or nose")->required();
    melnikov->add_option("--n,-n", n)->required()->check(CLI::Range(1u, 400u));

    auto* table1 = app.add_subcommand("table1", "folded-node third derivatives against the published table");

    unsigned k = 0;
    auto* coeffs = app.add_subcommand("coeffs", "coefficient table of the closed-form sums");
    coeffs->add_option("--system,-s", system, "folded-node or nose")->required();
    coeffs->add_option("--k,-k", k)->required()->check(CLI::Range(1u, 400u));

    double tol = 1e-10;
    auto* quadcheck = app.add_subcommand("quadcheck", "compare exact derivatives with adaptive quadrature");
    quadcheck->add_option("--system,-s", system)->required();
    quadcheck->add_option("--n,-n", n)->required()->check(CLI::Range(1u, 60u));
    quadcheck->add_option("--tol", tol, "relative tolerance")->capture_default_str();

    OrbitFlags of;
    auto* orbit = app.add_subcommand("orbit", "shoot for a symmetric periodic orbit");
    orbit->add_option("--system,-s", of.system, "falkner-skan or nose")->required();
    orbit->add_option("--mu", of.mu)->required();
    orbit->add_option("--bracket", of.bracket, "two shooting parameters straddling the root")->expected(2);
    orbit->add_option("--window", of.window, "twist window half-width around y = -1")->capture_default_str();
    orbit->add_option("--rtol", of.rtol)->capture_default_str();
    orbit->add_option("--atol", of.atol)->capture_default_str();
    orbit->add_option("--csv", of.csv_path, "write the closed trace as CSV");
    orbit->add_option("--json", of.json_path, "write the result as JSON");

    std::vector<std::string> systems{"folded-node", "falkner-skan", "nose"};
    unsigned kmax = 5;
    auto* sweep = app.add_subcommand("sweep", "classify every resonance up to kmax in parallel");
    sweep->add_option("--system,-s", systems)->capture_default_str();
    sweep->add_option("--kmax", kmax)->check(CLI::Range(1u, 100u))->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? ok : usage;
    }

    try {
        if (*identities) return run_identities(g, max_degree);
        if (*melnikov) return run_melnikov(g, system, n);
        if (*table1) return run_table1(g);
        if (*coeffs) return run_coeffs(g, system, k);
        if (*quadcheck) return run_quadcheck(g, system, n, tol);
        if (*orbit) return run_orbit(g, of);
        if (*sweep) return run_sweep(g, systems, kmax);
    } catch (const CLI::Error& e) {
        std::cerr << e.what() << "\n";
        return usage;
    } catch (const ParseError& e) {
        std::cerr << e.what() << "\n";
        return usage;
    } catch (const PreconditionViolation& e) {
        std::cerr << e.what() << "\n";
        return usage;
    } catch (const QuadratureNonConvergent& e) {
        std::cerr << e.what() << "\n";
        return numerics;
    } catch (const NonConvergent& e) {
        std::cerr << e.what() << "\n";
        return numerics;
    } catch (const NoRoot& e) {
        std::cerr << e.what() << "\n";
        return numerics;
    } catch (const MaxArcLength& e) {
        std::cerr << e.what() << "\n";
        return numerics;
    } catch (const LeftAtlas& e) {
        std::cerr << e.what() << "\n";
        return numerics;
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return mismatch;
    }
    return usage;
}
