#include "singhopf/diagrams.hpp"

#include "singhopf/errors.hpp"

#include <omp.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

namespace singhopf {

namespace {

constexpr std::array<std::pair<EventKind, std::string_view>, 8> kind_names{{
    {EventKind::HSup, "H_sup"},
    {EventKind::HSub, "H_sub"},
    {EventKind::SN, "SN"},
    {EventKind::PD, "PD"},
    {EventKind::NS, "NS"},
    {EventKind::LPC, "LPC"},
    {EventKind::T, "T"},
    {EventKind::SProximal, "S-proximal"},
}};

constexpr std::array<std::string_view, 25> table_rows{
    "H_sup",
    "H_sup - (SN)",
    "(SN) - H_sup - T ± PD",
    "(SN) - H_sup - T ± NS - PD",
    "H_sup - LPC",
    "H_sup - T ± PD",
    "H_sup - T ± NS - PD",
    "LPC - H_sup - NS - PD",
    "LPC - H_sup - PD",
    "LPC - H_sup - T ± PD",
    "LPC - NS - H_sup - PD",
    "LPC - PD - H_sup",
    "H_sub",
    "H_sub - (SN)",
    "(SN) - H_sub - PD",
    "(SN) - H_sub - NS - PD",
    "H_sub - LPC",
    "H_sub - PD",
    "H_sub - NS - PD",
    "LPC - H_sub - NS - PD",
    "LPC - H_sub - T ± NS - PD",
    "LPC - H_sub - T ± PD",
    "LPC - H_sub - PD",
    "LPC - NS - H_sub - T ± PD",
    "LPC - PD - H_sub",
};

struct RowVariant {
    std::vector<EventKind> kinds;
    std::vector<bool> plus_minus; // between kinds[i] and kinds[i + 1]
};

// The row with its optional (SN) kept and, when present, dropped.
std::vector<RowVariant> row_variants(std::string_view row)
{
    std::istringstream in{std::string(row)};
    std::vector<std::string> tok;
    for (std::string t; in >> t;)
        tok.push_back(t);
    RowVariant full;
    int optional_at = -1;
    for (std::size_t i = 0; i < tok.size(); i += 2) {
        std::string k = tok[i];
        if (k.front() == '(') {
            k = k.substr(1, k.size() - 2);
            optional_at = static_cast<int>(full.kinds.size());
        }
        full.kinds.push_back(event_kind_from_string(k));
        if (i + 1 < tok.size())
            full.plus_minus.push_back(tok[i + 1] != "-");
    }
    std::vector<RowVariant> out{full};
    if (optional_at >= 0) {
        RowVariant v = full;
        v.kinds.erase(v.kinds.begin() + optional_at);
        if (!v.plus_minus.empty())
            v.plus_minus.erase(v.plus_minus.begin() + std::min<int>(optional_at, v.plus_minus.size() - 1));
        out.push_back(v);
    }
    return out;
}

bool matches(const std::vector<BifurcationEvent>& ev, const RowVariant& v)
{
    if (ev.size() != v.kinds.size())
        return false;
    for (std::size_t i = 0; i < ev.size();) {
        if (ev[i].kind == v.kinds[i]) {
            ++i;
            continue;
        }
        if (i + 1 < ev.size() && v.plus_minus[i] && ev[i].kind == v.kinds[i + 1] && ev[i + 1].kind == v.kinds[i] &&
            std::abs(ev[i].mu - ev[i + 1].mu) < indistinguishable_mu) {
            i += 2;
            continue;
        }
        return false;
    }
    return true;
}

std::string kinds_text(const std::vector<BifurcationEvent>& ev)
{
    std::string s;
    for (const auto& e : ev) {
        if (e.kind == EventKind::SProximal)
            continue;
        s += (s.empty() ? "" : " - ") + std::string(to_string(e.kind));
    }
    return s;
}

std::optional<EventKind> kind_of(OrbitBifurcationTag t)
{
    switch (t) {
    case OrbitBifurcationTag::PD:
        return EventKind::PD;
    case OrbitBifurcationTag::LPC:
        return EventKind::LPC;
    case OrbitBifurcationTag::NS:
        return EventKind::NS;
    default:
        return std::nullopt;
    }
}

nlohmann::json multipliers_json(const PeriodicOrbit& o)
{
    nlohmann::json m = nlohmann::json::array();
    for (const Complex& z : o.multipliers)
        m.push_back({z.real(), z.imag()});
    return m;
}

// Orbit branch born at the Hopf point, kept inside [lo, hi].
std::optional<OrbitBranch> branch_from_hopf(const ParameterSet& base, const HopfReport& h, double lo, double hi,
                                            ContinuationOptions c, std::string& why)
{
    const double delta = 1e-3 * std::max(std::abs(h.mu_star), 1e-3);
    for (const double side : {1.0, -1.0}) {
        ParameterSet p = base;
        p.mu = h.mu_star + side * delta;
        const VectorField f = VectorField::rescaled(p);
        PeriodicOrbit o;
        try {
            o = orbit_near_hopf(f, equilibrium_newton(f, h.location), c.orbit);
        } catch (const PreconditionError&) {
            continue;
        } catch (const Error& e) {
            why = std::string("orbit near Hopf: ") + e.what();
            return std::nullopt;
        }
        c.param_min = lo - delta;
        c.param_max = hi + delta;
        if (c.param_scale == 0.0)
            c.param_scale = std::max({std::abs(h.mu_star), hi - lo, 1e-3});
        return continue_orbit(f, o, side > 0.0 ? hi + delta : lo - delta, c);
    }
    why = "no small orbit on either side of the Hopf point";
    return std::nullopt;
}

// Tangency between the Hopf point and the end of [lo, hi] on the side where
// E_f has a two-dimensional unstable manifold.
std::optional<TangencyPoint> tangency_in_window(const ParameterSet& base, const HopfReport& h, double lo, double hi,
                                                double tol, const FateOptions& fate, std::string& why)
{
    const double delta = 1e-3 * std::max(std::abs(h.mu_star), 1e-3);
    for (const double side : {1.0, -1.0}) {
        ParameterSet p = base;
        p.mu = h.mu_star + side * delta;
        const auto ef = fold_equilibrium(p);
        if (!ef || ef->cls != StabilityClass::SaddleFocus2U)
            continue;
        double a = std::clamp(p.mu, lo, hi), b = side > 0.0 ? hi : lo;
        if (base.b_cap != 0.0) {
            const double sn = saddle_node_locus(base.a_cap, base.b_cap, base.c_cap).mu;
            if ((sn - h.mu_star) * side > 0.0 && (b - sn) * side > 0.0)
                b = sn - side * 1e-9 * (1.0 + std::abs(sn));
        }
        if ((b - a) * side <= tol)
            return std::nullopt;
        try {
            return find_tangency_mu(base.a_cap, base.b_cap, base.c_cap, std::min(a, b), std::max(a, b), tol, fate);
        } catch (const BracketError&) {
            return std::nullopt;
        } catch (const Error& e) {
            why = std::string("tangency: ") + e.what();
            return std::nullopt;
        }
    }
    return std::nullopt;
}

bool in_window(double mu, double lo, double hi)
{
    return mu >= lo && mu <= hi;
}

} // namespace

std::string_view to_string(EventKind k)
{
    for (const auto& [kind, name] : kind_names)
        if (kind == k)
            return name;
    return "unknown";
}

EventKind event_kind_from_string(std::string_view s)
{
    for (const auto& [kind, name] : kind_names)
        if (name == s)
            return kind;
    throw DomainError("unknown bifurcation kind '" + std::string(s) + "'");
}

std::string table1_row(int row)
{
    if (row < 1 || row > 25)
        throw DomainError("table rows run from 1 to 25");
    return std::string(table_rows[row - 1]);
}

std::optional<int> match_table1(const std::vector<BifurcationEvent>& events)
{
    std::vector<BifurcationEvent> ev;
    for (const auto& e : events)
        if (e.kind != EventKind::SProximal)
            ev.push_back(e);
    if (ev.empty())
        return std::nullopt;
    // Rows as written first, then with their parenthesized SN left out.
    for (std::size_t pass = 0; pass < 2; ++pass)
        for (int r = 0; r < 25; ++r) {
            const auto variants = row_variants(table_rows[r]);
            if (pass < variants.size() && matches(ev, variants[pass]))
                return r + 1;
        }
    return std::nullopt;
}

std::optional<int> match_table1(const std::vector<EventKind>& kinds)
{
    std::vector<BifurcationEvent> ev;
    for (const EventKind k : kinds)
        ev.push_back({k, std::numeric_limits<double>::quiet_NaN(), {}});
    return match_table1(ev);
}

SequenceRecord sweep_mu(double a_cap, double b_cap, double c_cap, double mu_lo, double mu_hi, const SweepOptions& opt)
{
    if (!std::isfinite(mu_lo) || !std::isfinite(mu_hi))
        throw DomainError("sweep_mu: mu range must be finite");
    if (mu_lo > mu_hi)
        std::swap(mu_lo, mu_hi);
    SequenceRecord rec;
    rec.a_cap = a_cap;
    rec.b_cap = b_cap;
    rec.c_cap = c_cap;
    rec.mu_lo = mu_lo;
    rec.mu_hi = mu_hi;
    const ParameterSet base{0.0, a_cap, b_cap, c_cap};

    std::optional<HopfReport> hopf;
    try {
        hopf = hopf_locus(a_cap, b_cap, c_cap);
    } catch (const NotFound&) {
    }
    if (hopf && in_window(hopf->mu_star, mu_lo, mu_hi)) {
        BifurcationEvent e;
        e.kind = hopf->l1 < 0.0 ? EventKind::HSup : EventKind::HSub;
        e.mu = hopf->mu_star;
        e.metadata = {{"l1", hopf->l1},
                      {"omega", hopf->omega},
                      {"criticality", to_string(hopf->criticality)},
                      {"routh_hurwitz_residual", hopf->residual},
                      {"X", hopf->location[0]}};
        rec.events.push_back(e);
    }
    if (b_cap != 0.0) {
        try {
            const SaddleNodePoint sn = saddle_node_locus(a_cap, b_cap, c_cap);
            if (in_window(sn.mu, mu_lo, mu_hi))
                rec.events.push_back({EventKind::SN, sn.mu, {{"parenthetical", true}, {"X", sn.x}}});
        } catch (const Error& e) {
            rec.failures.push_back(std::string("saddle-node: ") + e.what());
        }
    }

    if (hopf && in_window(hopf->mu_star, mu_lo, mu_hi)) {
        std::string why;
        if (auto br = branch_from_hopf(base, *hopf, mu_lo, mu_hi, opt.continuation, why)) {
            for (const auto& ev : br->events) {
                const auto k = kind_of(ev.tag);
                if (!k || !in_window(ev.param, mu_lo, mu_hi))
                    continue;
                BifurcationEvent e;
                e.kind = *k;
                e.mu = ev.param;
                e.metadata = {{"multipliers", multipliers_json(ev.orbit)},
                              {"period", ev.orbit.period},
                              {"bracket_width", ev.param_width},
                              {"argument", ev.argument}};
                if (ev.resonance != OrbitBifurcationTag::None)
                    e.metadata["resonance"] = to_string(ev.resonance);
                rec.events.push_back(e);
            }
            if (br->s_proximal() && !br->points.empty()) {
                const PeriodicOrbit& last = br->points.back();
                rec.events.push_back({EventKind::SProximal,
                                      last.param,
                                      {{"reason", br->end_reason}, {"period", last.period}}});
            }
        } else {
            rec.failures.push_back(why);
        }
    }

    if (hopf && opt.with_tangency) {
        std::string why;
        if (auto tp = tangency_in_window(base, *hopf, mu_lo, mu_hi, opt.tangency_tol, opt.fate, why)) {
            rec.events.push_back({EventKind::T,
                                  tp->mu,
                                  {{"bracket_width", tp->bracket_width},
                                   {"n_grid", tp->n_grid},
                                   {"t_max", tp->t_max},
                                   {"side_low", to_string(tp->side_low)},
                                   {"side_high", to_string(tp->side_high)}}});
        } else if (!why.empty()) {
            rec.failures.push_back(why);
        }
    }

    std::stable_sort(rec.events.begin(), rec.events.end(),
                     [](const BifurcationEvent& a, const BifurcationEvent& b) { return a.mu < b.mu; });
    rec.table1_match = match_table1(rec.events);
    if (!rec.table1_match) {
        const std::string seq = kinds_text(rec.events);
        rec.unmatched_reason = seq.empty() ? "no events" : "sequence " + seq + " is not a table row";
    }
    return rec;
}

std::string_view to_string(CurveKind k)
{
    switch (k) {
    case CurveKind::SN:
        return "SN";
    case CurveKind::Hopf:
        return "Hopf";
    case CurveKind::PD:
        return "PD";
    case CurveKind::LPC:
        return "LPC";
    case CurveKind::NS:
        return "NS";
    case CurveKind::T:
        return "T";
    }
    return "unknown";
}

CurveKind curve_kind_from_string(std::string_view s)
{
    for (const CurveKind k :
         {CurveKind::SN, CurveKind::Hopf, CurveKind::PD, CurveKind::LPC, CurveKind::NS, CurveKind::T})
        if (to_string(k) == s)
            return k;
    throw DomainError("unknown curve kind '" + std::string(s) + "'");
}

Polyline trace_curve(CurveKind kind, double b_cap, double c_cap, const std::vector<double>& a_grid, double mu_lo,
                     double mu_hi, const CurveOptions& opt)
{
    if (mu_lo > mu_hi)
        std::swap(mu_lo, mu_hi);
    std::vector<double> grid = a_grid;
    std::sort(grid.begin(), grid.end());
    Polyline line;
    line.kind = kind;
    if (grid.empty())
        return line;
    const double a_min = grid.front(), a_max = grid.back();
    auto add_zh = [&](bool on_sn) {
        const double a = zero_hopf_A(b_cap, c_cap);
        if (b_cap == 0.0 || a < a_min || a > a_max)
            return;
        line.annotations.push_back({"ZH", on_sn ? saddle_node_locus(a, b_cap, c_cap).mu : hopf_seed(a, c_cap), a});
        if (!on_sn) {
            try {
                line.annotations.back().mu = hopf_locus(a, b_cap, c_cap).mu_star;
            } catch (const Error&) {
            }
        }
    };

    switch (kind) {
    case CurveKind::SN:
        if (b_cap == 0.0)
            throw DegenerateB("trace_curve: the saddle-node curve needs B != 0");
        for (const double a : grid) {
            const double mu = saddle_node_locus(a, b_cap, c_cap).mu;
            if (in_window(mu, mu_lo, mu_hi))
                line.points.push_back({mu, a, 0.0});
        }
        add_zh(true);
        return line;
    case CurveKind::Hopf:
        for (const double a : grid) {
            try {
                const double mu = hopf_locus(a, b_cap, c_cap).mu_star;
                if (in_window(mu, mu_lo, mu_hi))
                    line.points.push_back({mu, a, 0.0});
            } catch (const NotFound& e) {
                line.gaps.push_back("A=" + std::to_string(a) + ": " + e.what());
            }
        }
        for (const auto& g : generalized_hopf_A(b_cap, c_cap, true)) {
            if (!g.a_refined || *g.a_refined < a_min || *g.a_refined > a_max)
                continue;
            try {
                line.annotations.push_back({"GH", hopf_locus(*g.a_refined, b_cap, c_cap).mu_star, *g.a_refined});
            } catch (const Error&) {
            }
        }
        add_zh(false);
        return line;
    case CurveKind::T: {
        FateOptions fate = opt.sweep.fate;
        if (opt.workers > 0)
            fate.workers = opt.workers;
        std::optional<TangencyPoint> start;
        for (const double a : grid) {
            std::string why;
            try {
                const HopfReport h = hopf_locus(a, b_cap, c_cap);
                start = tangency_in_window({0.0, a, b_cap, c_cap}, h, mu_lo, mu_hi, opt.sweep.tangency_tol, fate,
                                           why);
            } catch (const Error& e) {
                why = e.what();
            }
            if (start)
                break;
            line.gaps.push_back("A=" + std::to_string(a) + ": " + (why.empty() ? "no tangency in window" : why));
        }
        if (!start)
            return line;
        double step = a_max - a_min;
        for (std::size_t i = 1; i < grid.size(); ++i)
            step = std::min(step, grid[i] - grid[i - 1]);
        if (!(step > 0.0))
            step = 1e-3;
        const TangencyCurve tc =
            trace_tangency_curve(b_cap, c_cap, *start, start->a_cap, a_max, step, opt.sweep.tangency_tol, fate);
        for (const auto& p : tc.points)
            if (in_window(p.mu, mu_lo, mu_hi))
                line.points.push_back({p.mu, p.a_cap, p.bracket_width});
        if (!line.points.empty())
            line.annotations.push_back({"end: " + tc.end_reason, line.points.back().mu, line.points.back().a_cap});
        return line;
    }
    case CurveKind::PD:
    case CurveKind::LPC:
    case CurveKind::NS:
        break;
    }

    const OrbitBifurcationTag want = kind == CurveKind::PD    ? OrbitBifurcationTag::PD
                                     : kind == CurveKind::LPC ? OrbitBifurcationTag::LPC
                                                              : OrbitBifurcationTag::NS;
    const int n = static_cast<int>(grid.size());
    std::vector<std::optional<CurvePoint>> found(n);
    std::vector<std::vector<CurveAnnotation>> notes(n);
    std::vector<std::string> gap(n);
    const int threads = opt.workers > 0 ? opt.workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (int i = 0; i < n; ++i) {
        const double a = grid[i];
        try {
            const HopfReport h = hopf_locus(a, b_cap, c_cap);
            std::string why;
            // The branch may enter the window through an LPC, so start from the Hopf point wherever it is.
            const double lo = std::min(mu_lo, h.mu_star), hi = std::max(mu_hi, h.mu_star);
            const auto br = branch_from_hopf({0.0, a, b_cap, c_cap}, h, lo, hi, opt.sweep.continuation, why);
            if (!br) {
                gap[i] = why;
                continue;
            }
            for (const auto& ev : br->events) {
                if (ev.tag != want || !in_window(ev.param, mu_lo, mu_hi))
                    continue;
                found[i] = CurvePoint{ev.param, a, ev.param_width};
                if (want == OrbitBifurcationTag::NS && ev.resonance != OrbitBifurcationTag::None)
                    notes[i].push_back({std::string(to_string(ev.resonance)), ev.param, a});
                break;
            }
            if (br->s_proximal() && !br->points.empty())
                notes[i].push_back({"S-proximal", br->points.back().param, a});
            if (!found[i])
                gap[i] = "no " + std::string(to_string(kind)) + " event on the branch (" + br->end_reason + ")";
        } catch (const Error& e) {
            gap[i] = e.what();
        }
    }
    for (int i = 0; i < n; ++i) {
        if (found[i])
            line.points.push_back(*found[i]);
        else
            line.gaps.push_back("A=" + std::to_string(grid[i]) + ": " + gap[i]);
        line.annotations.insert(line.annotations.end(), notes[i].begin(), notes[i].end());
    }
    return line;
}

std::vector<double> canard_lines(double b_cap, double c_cap)
{
    const double disc = c_cap * c_cap - 4.0 * b_cap;
    // Rounding in C^2 - 4B alone should not split a double root.
    const double scale = 8.0 * std::numeric_limits<double>::epsilon() * (c_cap * c_cap + 4.0 * std::abs(b_cap));
    if (disc < -scale)
        return {};
    if (disc <= scale)
        return {-0.5 * c_cap};
    // Stable form of the two roots.
    const double q = -0.5 * (c_cap + std::copysign(std::sqrt(disc), c_cap));
    std::vector<double> r{q, b_cap / q};
    std::sort(r.begin(), r.end());
    return r;
}

RegionInfo region_classify(double b_cap, double c_cap)
{
    if (b_cap == 0.0)
        throw DegenerateB("region_classify: the diagram is highly degenerate at B = 0");
    RegionInfo r;
    r.sign_b = b_cap > 0.0 ? 1 : -1;
    r.sign_c = c_cap > 0.0 ? 1 : (c_cap < 0.0 ? -1 : 0);
    r.gh_indicator = c_cap * c_cap - 8.0 * b_cap;
    r.canard_indicator = c_cap * c_cap - 4.0 * b_cap;
    for (const auto& g : generalized_hopf_A(b_cap, c_cap, true))
        r.refined_gh_count += g.a_refined.has_value();
    const std::string suffix = r.sign_c > 0 ? "a" : (r.sign_c < 0 ? "b" : "");

    auto set = [&](std::string family, std::vector<std::string> roman, bool probe) {
        r.family = std::move(family);
        for (auto& s : roman)
            r.candidates.push_back(s + suffix);
        r.requires_probe = probe;
    };
    if (b_cap < 0.0)
        set("I", {"I"}, false);
    else if (r.canard_indicator < 0.0)
        set("VIII", {"VIII"}, false);
    else if (r.gh_indicator > 0.0)
        set("II", r.refined_gh_count == 2 ? std::vector<std::string>{"II"} : std::vector<std::string>{"II", "III"},
            r.refined_gh_count != 2);
    else
        set("III-VII", {"III", "IV", "V", "VI", "VII"}, true);
    return r;
}

std::vector<OrbitFlipPoint> orbit_flip_point(double b_cap, double c_cap)
{
    std::vector<OrbitFlipPoint> out;
    for (const double a : canard_lines(b_cap, c_cap))
        out.push_back({0.25 * b_cap, a, true});
    return out;
}

nlohmann::json to_json(const BifurcationEvent& e)
{
    return {{"kind", to_string(e.kind)}, {"mu", e.mu}, {"metadata", e.metadata}};
}

nlohmann::json to_json(const SequenceRecord& r)
{
    nlohmann::json j;
    j["params"] = {{"A", r.a_cap}, {"B", r.b_cap}, {"C", r.c_cap}};
    j["mu_range"] = {r.mu_lo, r.mu_hi};
    j["events"] = nlohmann::json::array();
    for (const auto& e : r.events)
        j["events"].push_back(to_json(e));
    j["table1_match"] = r.table1_match ? nlohmann::json(*r.table1_match) : nlohmann::json(nullptr);
    if (r.table1_match)
        j["table1_row"] = table1_row(*r.table1_match);
    j["unmatched_reason"] = r.unmatched_reason ? nlohmann::json(*r.unmatched_reason) : nlohmann::json(nullptr);
    j["failures"] = r.failures;
    j["multiplier_argument_convention"] = "resonance R_q at argument 2 pi / q, R1 at 0";
    return j;
}

nlohmann::json to_json(const RegionInfo& r)
{
    return {{"family", r.family},
            {"candidates", r.candidates},
            {"requires_numeric_probe", r.requires_probe},
            {"sign_B", r.sign_b},
            {"sign_C", r.sign_c},
            {"C2_minus_8B", r.gh_indicator},
            {"C2_minus_4B", r.canard_indicator},
            {"generalized_hopf_points", r.refined_gh_count}};
}

} // namespace singhopf
