#pragma once

#include "singhopf/tangency.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace singhopf {

enum class EventKind { HSup, HSub, SN, PD, NS, LPC, T, SProximal };
std::string_view to_string(EventKind k); // "H_sup", "H_sub", "SN", ...
EventKind event_kind_from_string(std::string_view s);

struct BifurcationEvent {
    EventKind kind = EventKind::HSup;
    double mu = 0.0;
    nlohmann::json metadata = nlohmann::json::object();
};

struct SequenceRecord {
    double a_cap = 0.0, b_cap = 0.0, c_cap = 0.0;
    double mu_lo = 0.0, mu_hi = 0.0;
    std::vector<BifurcationEvent> events; // ascending mu
    std::optional<int> table1_match;
    std::optional<std::string> unmatched_reason;
    std::vector<std::string> failures; // component errors, sweep continues past them
};

/// Events within this distance in mu may appear in either order across a "±".
inline constexpr double indistinguishable_mu = 1e-5;

/// Row (1-25) of the table of mu-sequences matching the events, S-proximal
/// annotations ignored. A parenthesized SN may be present or absent.
std::optional<int> match_table1(const std::vector<BifurcationEvent>& events);
/// Kinds only: "±" pairs must then appear in the listed order.
std::optional<int> match_table1(const std::vector<EventKind>& kinds);
/// The row pattern, e.g. "H_sup - T ± NS - PD".
std::string table1_row(int row);

struct SweepOptions {
    bool with_tangency = true;
    double tangency_tol = 1e-6;
    FateOptions fate;
    ContinuationOptions continuation;
};

/// Codimension-one events of the mu-family at fixed (A, B, C) inside
/// [mu_lo, mu_hi]: Hopf with criticality, SN, multiplier events on the orbit
/// branch born at the Hopf point, and the tangency.
SequenceRecord sweep_mu(double a_cap, double b_cap, double c_cap, double mu_lo, double mu_hi,
                        const SweepOptions& opt = {});

enum class CurveKind { SN, Hopf, PD, LPC, NS, T };
std::string_view to_string(CurveKind k);
CurveKind curve_kind_from_string(std::string_view s);

struct CurvePoint {
    double mu = 0.0;
    double a_cap = 0.0;
    double bracket_width = 0.0;
};

struct CurveAnnotation {
    std::string label; // ZH, GH, R1..R4, S-proximal, end
    double mu = 0.0;
    double a_cap = 0.0;
};

struct Polyline {
    CurveKind kind = CurveKind::SN;
    std::vector<CurvePoint> points; // ascending A
    std::vector<CurveAnnotation> annotations;
    std::vector<std::string> gaps; // A-values where the detector failed, with the reason
};

struct CurveOptions {
    SweepOptions sweep;
    int workers = 0;
};

/// One (mu, A) curve of the given kind over the A grid, restricted to the mu
/// window. SN and Hopf per A from the analytic loci, PD/LPC/NS from branch
/// continuation at each A (in parallel), T by tangency continuation.
Polyline trace_curve(CurveKind kind, double b_cap, double c_cap, const std::vector<double>& a_grid, double mu_lo,
                     double mu_hi, const CurveOptions& opt = {});

/// Real roots of A^2 + A C + B = 0, ascending.
std::vector<double> canard_lines(double b_cap, double c_cap);

struct RegionInfo {
    std::string family;                  // "I" or "II".."VIII"
    std::vector<std::string> candidates; // e.g. {"IIa"}
    bool requires_probe = false;
    int sign_b = 0, sign_c = 0;
    double gh_indicator = 0.0;     // C^2 - 8B, generalized Hopf points exist when positive
    double canard_indicator = 0.0; // C^2 - 4B, canard lines exist when nonnegative
    int refined_gh_count = 0;
};

/// Analytic part of the (B, C) region classification. Throws DegenerateB at B = 0.
RegionInfo region_classify(double b_cap, double c_cap);

struct OrbitFlipPoint {
    double mu = 0.0;
    double a_cap = 0.0;
    bool conjectured = true;
};

/// (mu, A) = (B/4, (-C +- sqrt(C^2 - 4B)) / 2); empty when C^2 < 4B.
std::vector<OrbitFlipPoint> orbit_flip_point(double b_cap, double c_cap);

nlohmann::json to_json(const BifurcationEvent& e);
nlohmann::json to_json(const SequenceRecord& r);
nlohmann::json to_json(const RegionInfo& r);

} // namespace singhopf
