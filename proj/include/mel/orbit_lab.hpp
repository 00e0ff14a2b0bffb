#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "mel/hermite_algebra.hpp"

namespace mel {

// ---------------------------------------------------------------- quadrature

struct QuadratureReport {
    bool pass = false;
    std::string numeric;  // 30 significant digits
    std::string exact;    // decimal of the exact value, 30 digits
    double rel_error = 0;
    double error_estimate = 0;
};

// Integrates exp(-t^2/2) * series over the real line in 50-digit floats and
// compares with `exact`.
QuadratureReport quadrature_check(const HermiteSeries& series, const RadicalValue& exact, double rel_tol);

// ---------------------------------------------------------------- atlas

using Point = std::array<double, 3>;

enum class Model { falkner_skan, nose, folded_node_scaled };
std::string to_string(Model m);
Model model_from_string(const std::string& s);

// Sparse polynomial in three variables; exponents may be negative while a
// chart field is assembled.
using Polynomial = std::map<std::array<int, 3>, double>;
double evaluate(const Polynomial& p, const Point& u);

// Chart ids: "affine", or "<axis><sign>" with axis in {x,y,z}, e.g. "x-".
// A directional chart (i, s) uses weighted coordinates
//   p_i = s W^-r_i,  p_j = Q_j W^-r_j,
// stored in place: slot i holds W > 0, slot j holds Q_j.
struct ChartId {
    int axis = -1;  // -1 for the affine chart
    int sign = 1;

    bool affine() const { return axis < 0; }
    std::string str() const;
    static ChartId parse(const std::string& s);
    friend bool operator==(const ChartId& a, const ChartId& b) {
        return a.axis == b.axis && (a.axis < 0 || a.sign == b.sign);
    }
};

struct Chart {
    ChartId id;
    std::array<Polynomial, 3> field;
    int desingularization = 0;  // field multiplied by W^desingularization
};

class ChartAtlas {
public:
    ChartAtlas(Model model, double mu, double handoff_threshold = 10.0);

    Model model() const { return model_; }
    double mu() const { return mu_; }
    double handoff_threshold() const { return handoff_; }
    double hysteresis() const { return 0.2; }
    const std::array<int, 3>& weights() const { return weights_; }
    const std::vector<Chart>& charts() const { return charts_; }
    const Chart& chart(const ChartId& id) const;
    // Reversing involution of the affine field.
    Point sigma(const Point& p) const;

    Point field(const ChartId& id, const Point& u) const;
    // Blown-down point; empty on the boundary at infinity (W = 0).
    std::optional<Point> to_affine(const ChartId& id, const Point& u) const;
    Point from_affine(const ChartId& id, const Point& p) const;
    Point transition(const ChartId& from, const ChartId& to, const Point& u) const;
    bool in_region(const ChartId& id, const Point& u) const;
    // Chart the integrator should hand off to, if any.
    std::optional<ChartId> handoff(const ChartId& id, const Point& u) const;
    // Weighted radius |p_i|^(1/r_i) maximised over compactified axes.
    double weighted_radius(const Point& p) const;

private:
    Model model_;
    double mu_;
    double handoff_;
    std::array<int, 3> weights_{};
    Polynomial affine_[3];
    std::vector<Chart> charts_;
};

// ---------------------------------------------------------------- integration

struct ChartState {
    ChartId chart;
    Point u{};
};

struct EventSpec {
    enum class Kind { plane, symmetry_hit };
    Kind kind = Kind::plane;
    int component = 0;  // plane: p[component] = value
    double value = 0;
    int direction = 0;  // +1 rising, -1 falling, 0 both
    bool terminal = true;
    int count = 1;      // terminal after this many hits
    std::string label;
    // symmetry_hit: the point lies on this fix-point set; evaluated as p[component]
    // and flagged when the other listed coordinates are below fix_tol.
    std::vector<int> fix_zero;
    double fix_tol = 1e-6;
};

struct TraceSample {
    double s = 0;
    ChartId chart;
    Point u{};
    Point du{};  // field at the sample, for Hermite interpolation
    Point p{};   // blown-down point, NaN on the boundary at infinity
};

struct TraceEvent {
    std::string kind;   // plane-crossing | chart-switch | symmetry-hit
    std::string label;
    double s = 0;
    ChartId chart;
    Point location{};   // blown-down
    double residual = 0;  // |g| at the refined location, or transition round-trip error
};

struct OrbitTrace {
    std::vector<TraceSample> samples;
    std::vector<TraceEvent> events;
    bool stopped_by_event = false;

    std::string to_csv() const;
};

struct IntegrationOptions {
    double rel_tol = 1e-12;
    double abs_tol = 1e-12;
    int direction = 1;  // -1 integrates the reversed field
    double max_arc = 1e4;
    long max_steps = 2000000;
};

OrbitTrace integrate(const ChartAtlas& atlas, const ChartState& initial, const std::vector<EventSpec>& stops,
                     const IntegrationOptions& opts = {});

// Sample-based Hausdorff distance between two traces, measured in the
// compactified embedding p / sqrt(1 + |p|^2). Nearest points are refined on
// the Hermite interpolant of the other trace.
double hausdorff_distance(const ChartAtlas& atlas, const OrbitTrace& a, const OrbitTrace& b);
OrbitTrace apply_sigma(const ChartAtlas& atlas, const OrbitTrace& t);

// ---------------------------------------------------------------- periodic orbits

struct TwistResult {
    double raw = 0;
    double half_integer = 0;
};

struct PeriodicOrbitResult {
    std::string model;
    double mu = 0;
    double shooting_parameter = 0;
    double closure_residual = 0;
    double symmetry_residual = 0;
    std::optional<TwistResult> twist;
    std::vector<Point> crossings;
    std::vector<double> residual_history;  // max |F| over the bracket, per bisection step
    OrbitTrace trace;                       // closed loop, not serialized to JSON
};

struct ShootingOptions {
    double window = 0.5;  // twist window |y+1| < window
    IntegrationOptions integration{};
    int max_bisections = 200;
    // stop once both bracket ends are this close to the fix-point set
    double residual_tol = 1e-13;
};

// Signed miss of the fix-point set after one half orbit: z at the return to x = 0.
// Falkner-Skan shoots from (0, param, 0), Nose from (param, 0, 0). NaN when the
// shot does not return.
double shooting_residual(Model model, double mu, double param, const IntegrationOptions& opts = {});

// Sign change of the shooting residual closest to the heteroclinic cycle, scanned
// on param = 1 + sign 10^-e for e in [0.5, 8]. The side (sign) follows the model
// and the nearest resonance. Empty when no sign change is found.
std::optional<std::pair<double, double>> scan_shooting_bracket(Model model, double mu,
                                                               const IntegrationOptions& opts = {});

PeriodicOrbitResult find_symmetric_periodic_orbit(Model model, double mu, std::pair<double, double> bracket,
                                                  const ShootingOptions& opts = {});

nlohmann::json periodic_result_to_json(const PeriodicOrbitResult& r);
PeriodicOrbitResult periodic_result_from_json(const nlohmann::json& j);

// Rotation of (y+1, z) around gamma inside the window |y+1| < window,
// between the first and last crossings of y = -1.
TwistResult twist_count(const OrbitTrace& trace, const ChartAtlas& atlas, double window = 0.5);

// Two-term truncation of the local centre manifold. Falkner-Skan takes (x, y);
// the scaled folded node takes (y, z). The next-order term is O(x^-2) and O(z^-2)
// respectively.
ChartState seed_on_center_manifold(const ChartAtlas& atlas, double a, double b);

}  // namespace mel
