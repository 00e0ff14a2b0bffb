#include "mel/orbit_lab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/multiprecision/mpfr.hpp>
#include <boost/numeric/odeint.hpp>

namespace mel {

// ---------------------------------------------------------------- quadrature

namespace {

using Big = boost::multiprecision::mpfr_float_50;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Big to_big(const RadicalValue& v) {
    Big r = Big(v.coeff.get_num().get_str()) / Big(v.coeff.get_den().get_str());
    if (v.radicand != 1) r *= boost::multiprecision::sqrt(Big(v.radicand.get_str()));
    Big pi = boost::math::constants::pi<Big>();
    if (v.pi_int != 0) r *= boost::multiprecision::pow(pi, Big(v.pi_int));
    if (v.pi_half) r *= boost::multiprecision::sqrt(pi);
    return r;
}

}  // namespace

QuadratureReport quadrature_check(const HermiteSeries& series, const RadicalValue& exact, double rel_tol) {
    if (series_parity(series) != Parity::even)
        throw PreconditionViolation("quadrature_check needs an even integrand");
    std::vector<std::pair<unsigned, Big>> coeffs;
    unsigned top = 0;
    for (const auto& [d, c] : series.terms()) {
        coeffs.emplace_back(d, to_big(c));
        top = std::max(top, d);
    }
    const Big inv_root2 = 1 / boost::multiprecision::sqrt(Big(2));
    auto f = [&](const Big& t) -> Big {
        Big s = t * inv_root2;
        Big h_prev = 1, h = 2 * s, acc = 0;
        size_t next = 0;
        for (unsigned j = 0; j <= top; ++j) {
            const Big& hj = j == 0 ? h_prev : h;
            if (next < coeffs.size() && coeffs[next].first == j) acc += coeffs[next++].second * hj;
            if (j >= 1) {
                Big h_next = 2 * s * h - 2 * Big(j) * h_prev;
                h_prev = h;
                h = h_next;
            }
        }
        return acc * boost::multiprecision::exp(-t * t / 2);
    };
    Big err = 0;
    Big half = boost::math::quadrature::gauss_kronrod<Big, 31>::integrate(
        f, Big(0), std::numeric_limits<Big>::infinity(), 30, Big(rel_tol) / 1000, &err);
    Big numeric = 2 * half;
    Big exact_big(radical_to_decimal(exact, 40));

    QuadratureReport rep;
    rep.numeric = numeric.str(30, std::ios_base::scientific);
    rep.exact = radical_to_decimal(exact, 30);
    // relative to the integral, absolute when it vanishes
    Big err_scale = boost::multiprecision::abs(numeric) > 1 ? boost::multiprecision::abs(numeric) : Big(1);
    rep.error_estimate = static_cast<double>(err / err_scale);
    if (rep.error_estimate > rel_tol / 10)
        throw QuadratureNonConvergent("relative error estimate " + fmt(rep.error_estimate));
    Big diff = boost::multiprecision::abs(numeric - exact_big);
    Big scale = boost::multiprecision::abs(exact_big);
    rep.rel_error = static_cast<double>(scale == 0 ? diff : diff / scale);
    rep.pass = rep.rel_error < rel_tol;
    return rep;
}

// ---------------------------------------------------------------- atlas

std::string to_string(Model m) {
    switch (m) {
        case Model::falkner_skan: return "falkner-skan";
        case Model::nose: return "nose";
        default: return "folded-node-scaled";
    }
}

Model model_from_string(const std::string& s) {
    std::string t = s;
    std::replace(t.begin(), t.end(), '_', '-');
    if (t == "falkner-skan") return Model::falkner_skan;
    if (t == "nose") return Model::nose;
    if (t == "folded-node-scaled" || t == "folded-node") return Model::folded_node_scaled;
    throw ParseError("unknown model '" + s + "'");
}

double evaluate(const Polynomial& p, const Point& u) {
    double acc = 0;
    for (const auto& [e, c] : p) {
        double m = c;
        for (int i = 0; i < 3; ++i)
            for (int k = 0; k < e[i]; ++k) m *= u[i];
        acc += m;
    }
    return acc;
}

std::string ChartId::str() const {
    if (affine()) return "affine";
    return std::string(1, "xyz"[axis]) + (sign > 0 ? "+" : "-");
}

ChartId ChartId::parse(const std::string& s) {
    if (s == "affine") return {};
    if (s.size() == 2 && (s[0] == 'x' || s[0] == 'y' || s[0] == 'z') && (s[1] == '+' || s[1] == '-'))
        return {s[0] - 'x', s[1] == '+' ? 1 : -1};
    throw ParseError("unknown chart '" + s + "'");
}

namespace {

void add_term(Polynomial& p, const std::array<int, 3>& e, double c) {
    if (c == 0) return;
    auto [it, fresh] = p.emplace(e, c);
    if (!fresh) {
        it->second += c;
        if (it->second == 0) p.erase(it);
    }
}

Polynomial shifted(const Polynomial& p, const std::array<int, 3>& e, double c) {
    Polynomial r;
    for (const auto& [pe, pc] : p) add_term(r, {pe[0] + e[0], pe[1] + e[1], pe[2] + e[2]}, pc * c);
    return r;
}

void accumulate(Polynomial& into, const Polynomial& p) {
    for (const auto& [e, c] : p) add_term(into, e, c);
}

std::array<int, 3> unit(int i, int power) {
    std::array<int, 3> e{0, 0, 0};
    e[i] = power;
    return e;
}

// Field of the directional chart (i, s), desingularized by the smallest power of W.
Chart directional_chart(const Polynomial (&f)[3], const std::array<int, 3>& r, int i, int s) {
    std::array<Polynomial, 3> sub;
    for (int k = 0; k < 3; ++k) {
        for (const auto& [a, c] : f[k]) {
            std::array<int, 3> e{};
            int w = 0;
            double coeff = c;
            for (int j = 0; j < 3; ++j) {
                w += r[j] * a[j];
                if (j == i) {
                    if (a[j] % 2 && s < 0) coeff = -coeff;
                } else {
                    e[j] = a[j];
                }
            }
            e[i] = -w;
            add_term(sub[k], e, coeff);
        }
    }
    const double ri = r[i];
    // W'/W = -(s/r_i) W^r_i f_i
    Polynomial wdot_over_w = shifted(sub[i], unit(i, r[i]), -s / ri);
    std::array<Polynomial, 3> g;
    g[i] = shifted(wdot_over_w, unit(i, 1), 1.0);
    for (int j = 0; j < 3; ++j) {
        if (j == i) continue;
        g[j] = shifted(sub[j], unit(i, r[j]), 1.0);
        if (r[j]) accumulate(g[j], shifted(wdot_over_w, unit(j, 1), r[j]));
    }
    int lowest = 0;
    for (const auto& comp : g)
        for (const auto& [e, c] : comp) lowest = std::min(lowest, e[i]);
    Chart ch;
    ch.id = {i, s};
    ch.desingularization = -lowest;
    for (int k = 0; k < 3; ++k) ch.field[k] = shifted(g[k], unit(i, -lowest), 1.0);
    return ch;
}

bool finite(const Point& p) {
    return std::isfinite(p[0]) && std::isfinite(p[1]) && std::isfinite(p[2]);
}

}  // namespace

ChartAtlas::ChartAtlas(Model model, double mu, double handoff_threshold)
    : model_(model), mu_(mu), handoff_(handoff_threshold) {
    if (!(handoff_threshold > 1)) throw PreconditionViolation("handoff threshold must exceed 1");
    auto& f = affine_;
    switch (model) {
        case Model::falkner_skan:
            // (y, z, -xz - mu (1 - y^2)); y stays uncompactified
            weights_ = {1, 0, 1};
            add_term(f[0], {0, 1, 0}, 1);
            add_term(f[1], {0, 0, 1}, 1);
            add_term(f[2], {1, 0, 1}, -1);
            add_term(f[2], {0, 0, 0}, -mu);
            add_term(f[2], {0, 2, 0}, mu);
            break;
        case Model::nose:
            // (-y - xz, x, -mu + (mu - 1) x^2)
            weights_ = {1, 1, 1};
            add_term(f[0], {0, 1, 0}, -1);
            add_term(f[0], {1, 0, 1}, -1);
            add_term(f[1], {1, 0, 0}, 1);
            add_term(f[2], {0, 0, 0}, -mu);
            add_term(f[2], {2, 0, 0}, mu - 1);
            break;
        case Model::folded_node_scaled:
            // (mu y / 2 - (mu + 1) z, 1, x + z^2)
            weights_ = {2, 1, 1};
            add_term(f[0], {0, 1, 0}, mu / 2);
            add_term(f[0], {0, 0, 1}, -(mu + 1));
            add_term(f[1], {0, 0, 0}, 1);
            add_term(f[2], {1, 0, 0}, 1);
            add_term(f[2], {0, 0, 2}, 1);
            break;
    }
    Chart a;
    a.id = {};
    for (int k = 0; k < 3; ++k) a.field[k] = f[k];
    charts_.push_back(a);
    for (int i = 0; i < 3; ++i) {
        if (!weights_[i]) continue;
        for (int s : {1, -1}) charts_.push_back(directional_chart(f, weights_, i, s));
    }
}

const Chart& ChartAtlas::chart(const ChartId& id) const {
    for (const auto& c : charts_)
        if (c.id == id) return c;
    throw PreconditionViolation("chart " + id.str() + " is not part of the atlas");
}

Point ChartAtlas::sigma(const Point& p) const {
    switch (model_) {
        case Model::falkner_skan: return {-p[0], p[1], -p[2]};
        default: return {p[0], -p[1], -p[2]};
    }
}

Point ChartAtlas::field(const ChartId& id, const Point& u) const {
    const Chart& c = chart(id);
    return {evaluate(c.field[0], u), evaluate(c.field[1], u), evaluate(c.field[2], u)};
}

std::optional<Point> ChartAtlas::to_affine(const ChartId& id, const Point& u) const {
    if (id.affine()) return u;
    double w = u[id.axis];
    if (!(w > 0)) return std::nullopt;
    Point p;
    for (int j = 0; j < 3; ++j) {
        double scale = std::pow(w, -weights_[j]);
        p[j] = (j == id.axis ? id.sign : u[j]) * scale;
    }
    return p;
}

Point ChartAtlas::from_affine(const ChartId& id, const Point& p) const {
    if (id.affine()) return p;
    int i = id.axis;
    double v = id.sign * p[i];
    if (!(v > 0)) throw OutsideValidity("point not covered by chart " + id.str());
    double w = std::pow(v, -1.0 / weights_[i]);
    Point u;
    for (int j = 0; j < 3; ++j) u[j] = j == i ? w : p[j] * std::pow(w, weights_[j]);
    return u;
}

Point ChartAtlas::transition(const ChartId& from, const ChartId& to, const Point& u) const {
    if (from == to) return u;
    if (from.affine() || to.affine()) {
        auto p = to_affine(from, u);
        if (!p) throw OutsideValidity("point at infinity has no affine image");
        return from_affine(to, *p);
    }
    // Directional to directional, valid on the boundary W = 0 as well.
    int i = from.axis, j = to.axis;
    if (i == j) throw OutsideValidity("charts " + from.str() + " and " + to.str() + " do not overlap");
    double qj = to.sign * u[j];
    if (!(qj > 0)) throw OutsideValidity("point not covered by chart " + to.str());
    double ratio = std::pow(qj, -1.0 / weights_[j]);  // W'/W
    Point v;
    for (int k = 0; k < 3; ++k) {
        double q = k == i ? from.sign : u[k];
        v[k] = k == j ? u[i] * ratio : q * std::pow(ratio, weights_[k]);
    }
    return v;
}

double ChartAtlas::weighted_radius(const Point& p) const {
    double r = 0;
    for (int i = 0; i < 3; ++i)
        if (weights_[i]) r = std::max(r, std::pow(std::abs(p[i]), 1.0 / weights_[i]));
    return r;
}

bool ChartAtlas::in_region(const ChartId& id, const Point& u) const {
    if (!finite(u)) return false;
    const double band = 1 + hysteresis();
    if (id.affine()) return weighted_radius(u) < handoff_ * band;
    double w = u[id.axis];
    if (!(w > 0) || 1 / w < handoff_ / band) return false;
    for (int j = 0; j < 3; ++j)
        if (j != id.axis && weights_[j] && std::pow(std::abs(u[j]), 1.0 / weights_[j]) > band) return false;
    return true;
}

std::optional<ChartId> ChartAtlas::handoff(const ChartId& id, const Point& u) const {
    const double band = 1 + hysteresis();
    int best = -1;
    double best_r = 0;
    if (id.affine()) {
        for (int i = 0; i < 3; ++i) {
            if (!weights_[i]) continue;
            double r = std::pow(std::abs(u[i]), 1.0 / weights_[i]);
            if (r > handoff_ && r > best_r) best = i, best_r = r;
        }
        if (best < 0) return std::nullopt;
        return ChartId{best, u[best] > 0 ? 1 : -1};
    }
    if (1 / u[id.axis] < handoff_ / band) return ChartId{};
    for (int j = 0; j < 3; ++j) {
        if (j == id.axis || !weights_[j]) continue;
        double r = std::pow(std::abs(u[j]), 1.0 / weights_[j]);
        if (r > band && r > best_r) best = j, best_r = r;
    }
    if (best < 0) return std::nullopt;
    return ChartId{best, u[best] > 0 ? 1 : -1};
}

// ---------------------------------------------------------------- integration

namespace {

Point hermite(const TraceSample& a, const TraceSample& b, double theta) {
    double h = b.s - a.s;
    double t2 = theta * theta, t3 = t2 * theta;
    double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + theta, h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    Point p;
    for (int k = 0; k < 3; ++k) p[k] = h00 * a.u[k] + h10 * h * a.du[k] + h01 * b.u[k] + h11 * h * b.du[k];
    return p;
}

double event_value(const EventSpec& e, const Point& p) { return p[e.component] - e.value; }

bool crosses(const EventSpec& e, double g0, double g1) {
    bool rising = g0 < 0 && g1 >= 0;
    bool falling = g0 > 0 && g1 <= 0;
    if (e.direction > 0) return rising;
    if (e.direction < 0) return falling;
    return rising || falling;
}

}  // namespace


std::string OrbitTrace::to_csv() const {
    std::ostringstream out;
    out << "s,chart,x,y,z\n";
    for (const auto& smp : samples) {
        out << fmt(smp.s) << ',' << smp.chart.str();
        for (double v : smp.p) {
            out << ',';
            if (std::isfinite(v)) out << fmt(v);
        }
        out << '\n';
    }
    return out.str();
}

OrbitTrace integrate(const ChartAtlas& atlas, const ChartState& initial, const std::vector<EventSpec>& stops,
                     const IntegrationOptions& opts) {
    namespace ode = boost::numeric::odeint;
    if (!atlas.in_region(initial.chart, initial.u))
        throw PreconditionViolation("initial state outside the validity region of chart " + initial.chart.str());

    ChartId chart = initial.chart;
    const double dir = opts.direction < 0 ? -1.0 : 1.0;
    auto rhs = [&](const Point& u, Point& du, double) {
        du = atlas.field(chart, u);
        for (auto& v : du) v *= dir;
    };
    auto blown_down = [&](const Point& v) { return atlas.to_affine(chart, v); };

    OrbitTrace trace;
    auto push = [&](double s, const Point& u, const Point& du) {
        auto p = blown_down(u);
        trace.samples.push_back({s, chart, u, du, p ? *p : Point{NAN, NAN, NAN}});
    };

    auto stepper = ode::make_controlled(opts.abs_tol, opts.rel_tol, ode::runge_kutta_dopri5<Point>());
    ode::runge_kutta_dopri5<Point> single;

    struct Hit {
        double s = 0;
        size_t k = 0;
        Point u{}, du{};
        double g = 0;
    };

    // Bisection on the cubic Hermite interpolant of the step, then secant
    // iterations on true single steps taken from the step start.
    auto refine = [&](const EventSpec& e, const TraceSample& a, const TraceSample& b, double g0, double g1) {
        double lo = 0, hi = 1, glo = g0;
        for (int it = 0; it < 60; ++it) {
            double mid = (lo + hi) / 2;
            auto pm = blown_down(hermite(a, b, mid));
            if (!pm) break;
            double gm = event_value(e, *pm);
            if (gm != 0 && (gm < 0) == (glo < 0)) lo = mid, glo = gm;
            else hi = mid;
        }
        const double h = b.s - a.s;
        auto G = [&](double tau, Point& out, Point& dout) {
            if (tau == 0) {
                out = a.u, dout = a.du;
            } else if (tau == h) {
                out = b.u, dout = b.du;
            } else {
                single.do_step(rhs, a.u, a.du, a.s, out, dout, tau);
            }
            auto p = blown_down(out);
            return p ? event_value(e, *p) : std::numeric_limits<double>::quiet_NaN();
        };
        Hit best;
        double ta = lo * h, tb = hi * h;
        Point ua, dua, ub, dub;
        double ga = G(ta, ua, dua), gb = G(tb, ub, dub);
        if (!(ga * gb <= 0)) {
            ta = 0, tb = h;
            ga = G(ta, ua, dua), gb = G(tb, ub, dub);
        }
        best = std::abs(ga) < std::abs(gb) ? Hit{ta, 0, ua, dua, ga} : Hit{tb, 0, ub, dub, gb};
        for (int it = 0; it < 100 && !(std::abs(best.g) < 1e-10); ++it) {
            double tn = ta - ga * (tb - ta) / (gb - ga);
            if (!(std::min(ta, tb) < tn && tn < std::max(ta, tb)) || it % 4 == 3) tn = (ta + tb) / 2;
            Point un, dun;
            double gn = G(tn, un, dun);
            if (std::abs(gn) < std::abs(best.g) || !std::isfinite(best.g)) best = {tn, 0, un, dun, gn};
            if ((gn < 0) == (ga < 0)) ta = tn, ga = gn;
            else tb = tn, gb = gn;
            if (ta == tb) break;
        }
        if (!(std::abs(best.g) < 1e-10))
            throw NonConvergent("event '" + e.label + "' could not be refined below 1e-10");
        best.s = a.s + best.s;
        return best;
    };

    Point u = initial.u, du;
    double s = 0, dt = 1e-2;
    rhs(u, du, s);
    push(s, u, du);
    std::vector<int> hits(stops.size(), 0);

    for (long step = 0;; ++step) {
        if (step >= opts.max_steps || std::abs(s) > opts.max_arc)
            throw MaxArcLength("integration exceeded its arc budget at s = " + fmt(s));
        Point u1, du1;
        const double s0 = s;
        int tries = 0;
        for (;;) {
            s = s0;
            if (stepper.try_step(rhs, u, du, s, u1, du1, dt) == ode::success) break;
            if (++tries > 500) throw NonConvergent("step size control failed");
        }
        if (!finite(u1)) throw LeftAtlas("state became non-finite in chart " + chart.str());
        if (!chart.affine() && !(u1[chart.axis] > 0)) throw LeftAtlas("crossed the boundary of chart " + chart.str());

        TraceSample a{s0, chart, u, du, {}}, b{s, chart, u1, du1, {}};
        std::vector<Hit> found;
        auto p0 = blown_down(u), p1 = blown_down(u1);
        if (p0 && p1) {
            for (size_t k = 0; k < stops.size(); ++k) {
                const EventSpec& e = stops[k];
                double g0 = event_value(e, *p0), g1 = event_value(e, *p1);
                if (!crosses(e, g0, g1)) continue;
                Hit hit = refine(e, a, b, g0, g1);
                hit.k = k;
                found.push_back(hit);
            }
        }
        std::sort(found.begin(), found.end(), [](const Hit& x, const Hit& y) { return x.s < y.s; });
        for (const Hit& hit : found) {
            const EventSpec& e = stops[hit.k];
            Point loc = *blown_down(hit.u);
            std::string kind = "plane-crossing";
            if (e.kind == EventSpec::Kind::symmetry_hit) {
                bool on = true;
                for (int c : e.fix_zero) on = on && std::abs(loc[c]) < e.fix_tol;
                if (on) kind = "symmetry-hit";
            }
            trace.events.push_back({kind, e.label, hit.s, chart, loc, std::abs(hit.g)});
            if (e.terminal && ++hits[hit.k] >= e.count) {
                push(hit.s, hit.u, hit.du);
                trace.stopped_by_event = true;
                return trace;
            }
        }

        u = u1, du = du1;
        push(s, u, du);

        if (auto next = atlas.handoff(chart, u)) {
            Point v = atlas.transition(chart, *next, u);
            Point back = atlas.transition(*next, chart, v);
            double err = 0;
            for (int k = 0; k < 3; ++k)
                err = std::max(err, std::abs(back[k] - u[k]) / std::max(1.0, std::abs(u[k])));
            auto loc = blown_down(u);
            trace.events.push_back({"chart-switch", chart.str() + "->" + next->str(), s, *next,
                                    loc ? *loc : Point{NAN, NAN, NAN}, err});
            chart = *next;
            u = v;
            rhs(u, du, s);
            push(s, u, du);
        }
    }
}

// ---------------------------------------------------------------- trace geometry

namespace {

Point embed(const Point& p) {
    double n = std::sqrt(1 + p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
    return {p[0] / n, p[1] / n, p[2] / n};
}

double dist(const Point& a, const Point& b) {
    return std::hypot(a[0] - b[0], a[1] - b[1], a[2] - b[2]);
}

// Distance from q (embedded) to the Hermite segment between samples k and k+1.
double segment_distance(const ChartAtlas& atlas, const OrbitTrace& t, size_t k, const Point& q) {
    const TraceSample& a = t.samples[k];
    const TraceSample& b = t.samples[k + 1];
    auto d = [&](double th) {
        auto p = atlas.to_affine(a.chart, hermite(a, b, th));
        return p ? dist(embed(*p), q) : std::numeric_limits<double>::infinity();
    };
    if (!(a.chart == b.chart) || b.s == a.s) return std::min(d(0), dist(embed(b.p), q));
    // golden-section search; the distance is unimodal on a short segment
    const double g = (std::sqrt(5.0) - 1) / 2;
    double lo = 0, hi = 1;
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = d(x1), f2 = d(x2);
    for (int it = 0; it < 60; ++it) {
        if (f1 < f2) {
            hi = x2, x2 = x1, f2 = f1;
            x1 = hi - g * (hi - lo), f1 = d(x1);
        } else {
            lo = x1, x1 = x2, f1 = f2;
            x2 = lo + g * (hi - lo), f2 = d(x2);
        }
    }
    return std::min({f1, f2, d(0), d(1)});
}

double directed_hausdorff(const ChartAtlas& atlas, const OrbitTrace& a, const OrbitTrace& b) {
    std::vector<Point> eb(b.samples.size());
    for (size_t j = 0; j < eb.size(); ++j) eb[j] = embed(b.samples[j].p);
    double worst = 0;
    for (const auto& sa : a.samples) {
        if (!finite(sa.p)) continue;
        Point q = embed(sa.p);
        size_t best = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (size_t j = 0; j < eb.size(); ++j) {
            double dj = dist(eb[j], q);
            if (dj < bd) bd = dj, best = j;
        }
        double d = bd;
        if (best > 0) d = std::min(d, segment_distance(atlas, b, best - 1, q));
        if (best + 1 < eb.size()) d = std::min(d, segment_distance(atlas, b, best, q));
        worst = std::max(worst, d);
    }
    return worst;
}

}  // namespace

double hausdorff_distance(const ChartAtlas& atlas, const OrbitTrace& a, const OrbitTrace& b) {
    if (a.samples.empty() || b.samples.empty()) throw PreconditionViolation("empty trace");
    return std::max(directed_hausdorff(atlas, a, b), directed_hausdorff(atlas, b, a));
}

OrbitTrace apply_sigma(const ChartAtlas& atlas, const OrbitTrace& t) {
    // sigma is diagonal, so it maps chart (i, s) to (i, s sigma_i) with W kept
    // and Q_j -> sigma_j Q_j; the reversed orbit has field -sigma f.
    Point diag = atlas.sigma({1, 1, 1});
    OrbitTrace r;
    r.stopped_by_event = t.stopped_by_event;
    for (auto it = t.samples.rbegin(); it != t.samples.rend(); ++it) {
        TraceSample smp = *it;
        smp.s = -it->s;
        if (!smp.chart.affine()) smp.chart.sign *= static_cast<int>(diag[smp.chart.axis]);
        for (int k = 0; k < 3; ++k) {
            bool slot_w = !smp.chart.affine() && k == smp.chart.axis;
            smp.u[k] = slot_w ? it->u[k] : diag[k] * it->u[k];
            smp.du[k] = slot_w ? -it->du[k] : -diag[k] * it->du[k];
            smp.p[k] = diag[k] * it->p[k];
        }
        r.samples.push_back(smp);
    }
    for (auto it = t.events.rbegin(); it != t.events.rend(); ++it) {
        TraceEvent e = *it;
        e.s = -it->s;
        e.location = atlas.sigma(it->location);
        r.events.push_back(e);
    }
    return r;
}

TwistResult twist_count(const OrbitTrace& trace, const ChartAtlas& atlas, double window) {
    if (atlas.model() != Model::falkner_skan) throw PreconditionViolation("twist counting is defined for Falkner-Skan");
    std::vector<Point> loop;
    for (const auto& smp : trace.samples)
        if (finite(smp.p)) loop.push_back(smp.p);
    if (loop.size() < 2) throw WindowEmpty("trace has no finite samples");
    // start far from gamma so that no window passage is split
    auto top = std::max_element(loop.begin(), loop.end(), [](const Point& a, const Point& b) { return a[1] < b[1]; });
    std::rotate(loop.begin(), top, loop.end());

    std::vector<double> angle(loop.size());
    for (size_t k = 0; k < loop.size(); ++k) {
        angle[k] = std::atan2(loop[k][2], loop[k][1] + 1);
        if (k > 0) {
            double d = std::remainder(angle[k] - angle[k - 1], 2 * M_PI);
            angle[k] = angle[k - 1] + d;
        }
    }
    std::vector<double> at_crossing;
    for (size_t k = 0; k + 1 < loop.size(); ++k) {
        double a = loop[k][1] + 1, b = loop[k + 1][1] + 1;
        if (std::abs(a) >= window || std::abs(b) >= window) continue;
        if ((a < 0) == (b < 0) || a == b) continue;
        double lam = a / (a - b);
        at_crossing.push_back(angle[k] + lam * (angle[k + 1] - angle[k]));
    }
    if (at_crossing.empty()) throw WindowEmpty("trace never crosses y = -1 inside the window");
    TwistResult r;
    r.raw = std::abs(at_crossing.back() - at_crossing.front()) / (2 * M_PI);
    r.half_integer = std::round(2 * r.raw) / 2;
    return r;
}

// ---------------------------------------------------------------- seeds

ChartState seed_on_center_manifold(const ChartAtlas& atlas, double a, double b) {
    const double mu = atlas.mu();
    const double lim = atlas.handoff_threshold();
    Point p;
    switch (atlas.model()) {
        case Model::falkner_skan: {
            double x = a, y = b;
            if (std::abs(x) < lim || std::abs(y) > 1.5)
                throw OutsideValidity("needs |x| >= " + fmt(lim) + " and |y| <= 1.5");
            p = {x, y, -(1 - y * y) * mu / x};
            break;
        }
        case Model::folded_node_scaled: {
            double y = a, z = b;
            if (std::abs(z) < lim) throw OutsideValidity("needs |z| >= " + fmt(lim));
            p = {-z * z + (mu + 1) / 2 - mu * y / (4 * z), y, z};
            break;
        }
        default: throw PreconditionViolation("no centre-manifold expansion for " + to_string(atlas.model()));
    }
    auto chart = atlas.handoff(ChartId{}, p);
    ChartId id = chart ? *chart : ChartId{};
    return {id, atlas.from_affine(id, p)};
}

// ---------------------------------------------------------------- shooting

namespace {

struct Shot {
    double residual = NAN;
    Point hit{};
    OrbitTrace trace;
};

ChartState affine_start(const ChartAtlas& atlas, const Point& p) {
    auto chart = atlas.handoff(ChartId{}, p);
    ChartId id = chart ? *chart : ChartId{};
    return {id, atlas.from_affine(id, p)};
}

EventSpec plane(int component, int direction, const std::string& label, int count = 1, bool terminal = true) {
    EventSpec e;
    e.component = component;
    e.direction = direction;
    e.label = label;
    e.count = count;
    e.terminal = terminal;
    return e;
}

Shot shoot(const ChartAtlas& atlas, double param, int direction, const IntegrationOptions& base) {
    IntegrationOptions o = base;
    o.direction = direction;
    Shot r;
    Point start;
    std::vector<EventSpec> stops;
    if (atlas.model() == Model::falkner_skan) {
        // from (0, y0, 0): y0 > 0 sends x positive first, the return crosses x = 0 downward
        start = {0, param, 0};
        stops.push_back(plane(0, -direction, "x=0"));
    } else {
        start = {param, 0, 0};
        stops.push_back(plane(0, 0, "x=0"));
    }
    try {
        r.trace = integrate(atlas, affine_start(atlas, start), stops, o);
    } catch (const MaxArcLength&) {
        return r;
    } catch (const LeftAtlas&) {
        return r;
    }
    r.hit = r.trace.events.back().location;
    r.residual = r.hit[2];
    return r;
}

}  // namespace

double shooting_residual(Model model, double mu, double param, const IntegrationOptions& opts) {
    if (model == Model::folded_node_scaled) throw PreconditionViolation("shooting is set up for Falkner-Skan and Nose");
    return shoot(ChartAtlas(model, mu), param, 1, opts).residual;
}

std::optional<std::pair<double, double>> scan_shooting_bracket(Model model, double mu,
                                                               const IntegrationOptions& opts) {
    int sign = -1;
    if (model == Model::nose) {
        long k = std::lround(mu) - 1;
        sign = k % 2 ? -1 : 1;
    }
    std::optional<std::pair<double, double>> found;
    double prev_p = NAN, prev_f = NAN;
    for (int i = 0; i <= 150; ++i) {
        double e = 0.5 + 0.05 * i;
        double p = 1 + sign * std::pow(10.0, -e);
        double f = shooting_residual(model, mu, p, opts);
        if (std::isfinite(f) && std::isfinite(prev_f) && (f < 0) != (prev_f < 0))
            found = std::pair{std::min(p, prev_p), std::max(p, prev_p)};
        prev_p = p, prev_f = f;
    }
    return found;
}

PeriodicOrbitResult find_symmetric_periodic_orbit(Model model, double mu, std::pair<double, double> bracket,
                                                  const ShootingOptions& opts) {
    if (model == Model::folded_node_scaled) throw PreconditionViolation("shooting is set up for Falkner-Skan and Nose");
    ChartAtlas atlas(model, mu);
    auto F = [&](double p) { return shoot(atlas, p, 1, opts.integration).residual; };

    double lo = bracket.first, hi = bracket.second;
    double flo = F(lo), fhi = F(hi);
    if (!std::isfinite(flo) || !std::isfinite(fhi) || flo * fhi > 0)
        throw NoRoot("residuals " + fmt(flo) + ", " + fmt(fhi) + " do not straddle zero");

    PeriodicOrbitResult res;
    res.model = to_string(model);
    res.mu = mu;
    int it = 0;
    for (; it < opts.max_bisections; ++it) {
        double mid = lo + (hi - lo) / 2;
        if (mid <= lo || mid >= hi) break;
        double fm = F(mid);
        if (!std::isfinite(fm)) throw NonConvergent("shot at " + fmt(mid) + " did not return to the fix-point set");
        if (fm == 0) {
            lo = hi = mid, flo = fhi = 0;
            res.residual_history.push_back(0);
            break;
        }
        if ((fm < 0) == (flo < 0)) lo = mid, flo = fm;
        else hi = mid, fhi = fm;
        res.residual_history.push_back(std::max(std::abs(flo), std::abs(fhi)));
        if (res.residual_history.back() < opts.residual_tol) break;
    }
    if (it == opts.max_bisections) throw NonConvergent("bisection did not close the bracket");
    double root = std::abs(flo) < std::abs(fhi) ? lo : hi;
    res.shooting_parameter = root;

    if (model == Model::falkner_skan) {
        Shot fwd = shoot(atlas, root, 1, opts.integration);
        Shot bwd = shoot(atlas, root, -1, opts.integration);
        if (!std::isfinite(fwd.residual) || !std::isfinite(bwd.residual))
            throw NonConvergent("half orbits at the root did not return");
        res.closure_residual = dist(fwd.hit, bwd.hit);
        OrbitTrace mirrored = apply_sigma(atlas, fwd.trace);
        res.symmetry_residual = hausdorff_distance(atlas, bwd.trace, mirrored);
        // closed loop: forward half, then its sigma image traversed in reverse
        res.trace = fwd.trace;
        for (size_t k = 1; k < mirrored.samples.size(); ++k) {
            TraceSample smp = mirrored.samples[k];
            smp.s += 2 * fwd.trace.samples.back().s;
            res.trace.samples.push_back(smp);
        }
        res.crossings = {Point{0, root, 0}, fwd.hit};
        res.twist = twist_count(res.trace, atlas, opts.window);
    } else {
        // Full period: the third crossing of x = 0 revisits the first.
        std::vector<EventSpec> stops{plane(0, 0, "x=0", 3)};
        EventSpec zc = plane(2, 0, "z=0", 1, false);
        zc.kind = EventSpec::Kind::symmetry_hit;
        stops.push_back(zc);
        OrbitTrace t = integrate(atlas, affine_start(atlas, {root, 0, 0}), stops, opts.integration);
        std::vector<Point> xhits;
        for (const auto& e : t.events) {
            if (e.label == "x=0") xhits.push_back(e.location);
        }
        if (xhits.size() < 3) throw NonConvergent("orbit did not complete a period");
        res.closure_residual = dist(xhits[2], xhits[0]);
        // fix-point set hits of one period, starting after the initial point
        std::vector<Point> period;
        for (const auto& e : t.events) {
            const Point& q = e.location;
            if (e.label == "z=0" && period.size() < 4 && std::min(std::abs(q[0]), std::abs(q[1])) < 1e-6)
                period.push_back(q);
        }
        res.crossings = period;
        OrbitTrace mirrored = apply_sigma(atlas, t);
        res.symmetry_residual = hausdorff_distance(atlas, t, mirrored);
        res.trace = std::move(t);
    }
    return res;
}

nlohmann::json periodic_result_to_json(const PeriodicOrbitResult& r) {
    nlohmann::json j;
    j["model"] = r.model;
    j["mu"] = r.mu;
    j["shooting_parameter"] = r.shooting_parameter;
    j["closure_residual"] = r.closure_residual;
    j["symmetry_residual"] = r.symmetry_residual;
    if (r.twist) j["twist_count"] = {{"raw", r.twist->raw}, {"half_integer", r.twist->half_integer}};
    else j["twist_count"] = nullptr;
    j["crossings"] = nlohmann::json::array();
    for (const auto& c : r.crossings) j["crossings"].push_back({c[0], c[1], c[2]});
    j["residual_history"] = r.residual_history;
    return j;
}

PeriodicOrbitResult periodic_result_from_json(const nlohmann::json& j) {
    PeriodicOrbitResult r;
    try {
        r.model = j.at("model").get<std::string>();
        r.mu = j.at("mu").get<double>();
        r.shooting_parameter = j.at("shooting_parameter").get<double>();
        r.closure_residual = j.at("closure_residual").get<double>();
        r.symmetry_residual = j.at("symmetry_residual").get<double>();
        if (!j.at("twist_count").is_null())
            r.twist = TwistResult{j["twist_count"].at("raw").get<double>(), j["twist_count"].at("half_integer").get<double>()};
        for (const auto& c : j.at("crossings")) r.crossings.push_back({c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<double>()});
        r.residual_history = j.at("residual_history").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(e.what());
    }
    return r;
}

}  // namespace mel
