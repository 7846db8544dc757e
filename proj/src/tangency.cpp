#include "singhopf/tangency.hpp"

#include "singhopf/errors.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace singhopf {

std::string_view to_string(Verdict v)
{
    switch (v) {
    case Verdict::AllBounded:
        return "AllBounded";
    case Verdict::SomeEscape:
        return "SomeEscape";
    case Verdict::AllEscape:
        return "AllEscape";
    case Verdict::Undecided:
        return "Undecided";
    }
    return "Undecided";
}

Verdict verdict_from_counts(int n_escaped, int n_bounded, int n_undecided)
{
    if (n_escaped > 0 && n_bounded > 0)
        return Verdict::SomeEscape;
    if (n_undecided > 0)
        return Verdict::Undecided;
    if (n_escaped > 0)
        return Verdict::AllEscape;
    return Verdict::AllBounded;
}

std::vector<int> interleaved_order(int n)
{
    std::vector<int> order;
    if (n <= 0)
        return order;
    int bits = 0;
    while ((1 << bits) < n)
        ++bits;
    for (int i = 0; i < (1 << bits); ++i) {
        int r = 0;
        for (int b = 0; b < bits; ++b)
            if (i & (1 << b))
                r |= 1 << (bits - 1 - b);
        if (r < n)
            order.push_back(r);
    }
    return order;
}

namespace {

RayVerdict to_ray_verdict(const RayOutcome& o)
{
    switch (o.fate) {
    case Fate::Escaped:
        return RayVerdict::Escaped;
    case Fate::ConvergedToOrbit:
    case Fate::ConvergedToEquilibrium:
        return RayVerdict::Bounded;
    case Fate::TimeOut:
        break;
    }
    return o.stayed_in_fold_box ? RayVerdict::Bounded : RayVerdict::Undecided;
}

// Reference implementation: one ray after another, in interleaved order.
void run_rays_serial(const VectorField& field, const UnstableFrame& frame, const FateCriteria& crit,
                     const std::vector<int>& order, std::vector<RayVerdict>& out)
{
    const int n = static_cast<int>(out.size());
    for (const int i : order)
        out[i] = to_ray_verdict(ray_fate(field, frame.seed(2.0 * std::numbers::pi * i / n), crit));
}

void run_rays_parallel(const VectorField& field, const UnstableFrame& frame, const FateCriteria& crit,
                       const std::vector<int>& order, std::vector<RayVerdict>& out, int workers)
{
    const int n = static_cast<int>(out.size());
    const int threads = workers > 0 ? workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (int k = 0; k < n; ++k) {
        const int i = order[k];
        out[i] = to_ray_verdict(ray_fate(field, frame.seed(2.0 * std::numbers::pi * i / n), crit));
    }
}

} // namespace

FateClassification classify_fate(const VectorField& field, const State& e, FateCriteria crit, const FateOptions& opt)
{
    if (opt.n_grid < 1)
        throw DomainError("classify_fate: n_grid must be positive");
    if (!(opt.t_max > 0.0))
        throw DomainError("classify_fate: t_max must be positive");
    const double radius = opt.ring_radius > 0.0 ? opt.ring_radius : default_ring_radius(e);
    const UnstableFrame frame = unstable_frame(field, e, radius);
    crit.t_max = opt.t_max;

    FateClassification fc;
    fc.n_grid = opt.n_grid;
    fc.t_max = opt.t_max;
    fc.rays.assign(opt.n_grid, RayVerdict::Undecided);
    const std::vector<int> order = interleaved_order(opt.n_grid);
    if (opt.parallel)
        run_rays_parallel(field, frame, crit, order, fc.rays, opt.workers);
    else
        run_rays_serial(field, frame, crit, order, fc.rays);
    for (const RayVerdict r : fc.rays) {
        fc.n_escaped += r == RayVerdict::Escaped;
        fc.n_bounded += r == RayVerdict::Bounded;
        fc.n_undecided += r == RayVerdict::Undecided;
    }
    fc.verdict = verdict_from_counts(fc.n_escaped, fc.n_bounded, fc.n_undecided);
    return fc;
}

FateClassification classify_fate(const ParameterSet& p, const FateOptions& opt)
{
    const auto ef = fold_equilibrium(p);
    if (!ef)
        throw PreconditionError("classify_fate: no equilibrium E_f at these parameters");
    return classify_fate(VectorField::rescaled(p), ef->location, normal_form_criteria(p, opt.t_max), opt);
}

namespace {

struct Probed {
    FateClassification fc;
    bool escape = false;
    double t_max = 0.0;
};

Probed probe_decided(const FateProbe& probe, double param, double t_max)
{
    double t = t_max;
    for (int doubling = 0; doubling <= 3; ++doubling, t *= 2.0) {
        FateClassification fc = probe(param, t);
        if (fc.escape_present() || fc.verdict == Verdict::AllBounded)
            return {fc, fc.escape_present(), t};
    }
    throw TangencyUndecided("fate stays undecided at parameter " + std::to_string(param) +
                                " after three t_max doublings",
                            param, param);
}

} // namespace

TangencyPoint bisect_tangency(const FateProbe& probe, double lo, double hi, double tol, double t_max)
{
    if (!(tol > 0.0))
        throw DomainError("bisect_tangency: tol must be positive");
    if (lo > hi)
        std::swap(lo, hi);
    Probed a, b;
    try {
        a = probe_decided(probe, lo, t_max);
        b = probe_decided(probe, hi, t_max);
    } catch (const TangencyUndecided& e) {
        throw TangencyUndecided(e.what(), lo, hi);
    }
    if (a.escape == b.escape)
        throw BracketError("fate verdicts agree at both bracket ends (" + std::string(to_string(a.fc.verdict)) + ", " +
                           std::string(to_string(b.fc.verdict)) + ")");
    double t_used = std::max(a.t_max, b.t_max);
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        Probed m;
        try {
            m = probe_decided(probe, mid, t_max);
        } catch (const TangencyUndecided& e) {
            throw TangencyUndecided(e.what(), lo, hi);
        }
        t_used = std::max(t_used, m.t_max);
        if (m.escape == a.escape) {
            lo = mid;
            a = m;
        } else {
            hi = mid;
            b = m;
        }
    }
    TangencyPoint tp;
    tp.mu = 0.5 * (lo + hi);
    tp.bracket_width = hi - lo;
    tp.side_low = a.fc.verdict;
    tp.side_high = b.fc.verdict;
    tp.n_grid = a.fc.n_grid;
    tp.t_max = t_used;
    return tp;
}

TangencyPoint find_tangency_mu(double a_cap, double b_cap, double c_cap, double mu_lo, double mu_hi, double tol,
                               const FateOptions& opt)
{
    FateProbe probe = [&](double mu, double t) {
        FateOptions o = opt;
        o.t_max = t;
        return classify_fate(ParameterSet{mu, a_cap, b_cap, c_cap}, o);
    };
    TangencyPoint tp = bisect_tangency(probe, mu_lo, mu_hi, tol, opt.t_max);
    tp.a_cap = a_cap;
    tp.b_cap = b_cap;
    tp.c_cap = c_cap;
    return tp;
}

namespace {

struct TraceResult {
    std::vector<TangencyPoint> points;
    std::string reason;
};

bool escape_side(double mu, double a, double b, double c, const FateOptions& opt)
{
    FateProbe probe = [&](double m, double t) {
        FateOptions o = opt;
        o.t_max = t;
        return classify_fate(ParameterSet{m, a, b, c}, o);
    };
    return probe_decided(probe, mu, opt.t_max).escape;
}

// Corrector at fixed A: bracket around the predicted mu, widened as needed.
std::optional<TangencyPoint> correct_at(double a, double b_cap, double c_cap, double mu_pred, double width, double tol,
                                        const FateOptions& opt, std::string& reason)
{
    double mu_h = 0.0, mu_sn = std::numeric_limits<double>::infinity();
    try {
        mu_h = hopf_locus(a, b_cap, c_cap).mu_star;
    } catch (const NotFound&) {
        reason = "Hopf curve not found at A = " + std::to_string(a);
        return std::nullopt;
    }
    if (b_cap != 0.0)
        mu_sn = saddle_node_locus(a, b_cap, c_cap).mu;
    const double floor = mu_h + 1e-9 * (1.0 + std::abs(mu_h));
    const double ceil = mu_sn - 1e-9 * (1.0 + std::abs(mu_sn));

    double lo = std::max(mu_pred - width, floor), hi = std::min(mu_pred + width, ceil);
    try {
        for (int k = 0; escape_side(lo, a, b_cap, c_cap, opt); ++k) {
            if (lo <= floor) {
                reason = "tangency curve reached the Hopf curve at A = " + std::to_string(a);
                return std::nullopt;
            }
            if (k == 6)
                return std::nullopt;
            lo = std::max(lo - width * (1 << k), floor);
        }
        for (int k = 0; !escape_side(hi, a, b_cap, c_cap, opt); ++k) {
            if (hi >= ceil) {
                reason = "tangency curve reached the saddle-node curve at A = " + std::to_string(a);
                return std::nullopt;
            }
            if (k == 6)
                return std::nullopt;
            hi = std::min(hi + width * (1 << k), ceil);
        }
        return find_tangency_mu(a, b_cap, c_cap, lo, hi, tol, opt);
    } catch (const Error&) {
        return std::nullopt;
    }
}

TraceResult trace_one_way(double b_cap, double c_cap, const TangencyPoint& start, double a_end, double step,
                          double tol, const FateOptions& opt)
{
    TraceResult out;
    out.points.push_back(start);
    const double dir = a_end >= start.a_cap ? 1.0 : -1.0;
    const double h_max = std::abs(step), h_min = std::abs(step) / 64.0;
    double h = h_max;
    while (true) {
        const TangencyPoint& last = out.points.back();
        if ((a_end - last.a_cap) * dir <= 1e-15) {
            out.reason = "reached the end of the A range";
            break;
        }
        const double a_next = (a_end - last.a_cap) * dir < h ? a_end : last.a_cap + dir * h;
        double mu_pred = last.mu;
        if (out.points.size() >= 2) {
            const TangencyPoint& prev = out.points[out.points.size() - 2];
            mu_pred += (last.mu - prev.mu) / (last.a_cap - prev.a_cap) * (a_next - last.a_cap);
        }
        const double width = std::max({10.0 * tol, std::abs(mu_pred - last.mu), 1e-6});
        std::string reason;
        auto tp = correct_at(a_next, b_cap, c_cap, mu_pred, width, tol, opt, reason);
        if (!reason.empty()) {
            out.reason = reason;
            break;
        }
        if (!tp) {
            h *= 0.5;
            if (h < h_min) {
                out.reason = "corrector failed at the minimum step near A = " + std::to_string(a_next);
                break;
            }
            continue;
        }
        out.points.push_back(*tp);
        h = std::min(h * 1.5, h_max);
    }
    return out;
}

} // namespace

TangencyCurve trace_tangency_curve(double b_cap, double c_cap, const TangencyPoint& start, double a_lo, double a_hi,
                                   double step, double tol, const FateOptions& opt)
{
    if (!(step > 0.0))
        throw DomainError("trace_tangency_curve: step must be positive");
    if (a_lo > a_hi)
        std::swap(a_lo, a_hi);
    TangencyPoint s = start;
    s.b_cap = b_cap;
    s.c_cap = c_cap;
    const TraceResult down = trace_one_way(b_cap, c_cap, s, a_lo, step, tol, opt);
    const TraceResult up = trace_one_way(b_cap, c_cap, s, a_hi, step, tol, opt);
    TangencyCurve curve;
    for (auto it = down.points.rbegin(); it != down.points.rend(); ++it)
        curve.points.push_back(*it);
    curve.points.insert(curve.points.end(), up.points.begin() + 1, up.points.end());
    curve.end_reason = "low A: " + down.reason + "; high A: " + up.reason;
    return curve;
}

TangencyCurve trace_tangency_two_pass(double b_cap, double c_cap, const TangencyPoint& start, double a_lo,
                                      double a_hi, double coarse_step, int fine_per_interval, double tol,
                                      const FateOptions& opt)
{
    FateOptions coarse_opt = opt;
    coarse_opt.parallel = false;
    coarse_opt.n_grid = std::max(4, opt.n_grid / 2);
    coarse_opt.t_max = opt.t_max / 2.0;
    const TangencyCurve coarse =
        trace_tangency_curve(b_cap, c_cap, start, a_lo, a_hi, coarse_step, 10.0 * tol, coarse_opt);

    struct Job {
        double a, mu, width;
    };
    std::vector<Job> jobs;
    for (std::size_t i = 0; i < coarse.points.size(); ++i) {
        const TangencyPoint& p = coarse.points[i];
        jobs.push_back({p.a_cap, p.mu, std::max(4.0 * p.bracket_width, 10.0 * tol)});
        if (i + 1 == coarse.points.size())
            break;
        const TangencyPoint& q = coarse.points[i + 1];
        for (int k = 1; k <= fine_per_interval; ++k) {
            const double f = static_cast<double>(k) / (fine_per_interval + 1);
            jobs.push_back({p.a_cap + f * (q.a_cap - p.a_cap), p.mu + f * (q.mu - p.mu),
                            std::max({4.0 * p.bracket_width, 4.0 * q.bracket_width, std::abs(q.mu - p.mu), 10.0 * tol})});
        }
    }

    std::vector<std::optional<TangencyPoint>> fine(jobs.size());
    FateOptions inner = opt;
    inner.parallel = false;
    const int threads = opt.workers > 0 ? opt.workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (int i = 0; i < static_cast<int>(jobs.size()); ++i) {
        std::string reason;
        fine[i] = correct_at(jobs[i].a, b_cap, c_cap, jobs[i].mu, jobs[i].width, tol, inner, reason);
    }
    TangencyCurve curve;
    for (auto& f : fine)
        if (f)
            curve.points.push_back(*f);
    std::sort(curve.points.begin(), curve.points.end(),
              [](const TangencyPoint& x, const TangencyPoint& y) { return x.a_cap < y.a_cap; });
    curve.end_reason = coarse.end_reason;
    return curve;
}

namespace {

enum class Shot { Bounded, Hit, Escaped };

// Gamma at nearby mu values, found by Newton from the closest cached orbit.
class GammaCache {
public:
    std::optional<State> anchor(const ParameterSet& p)
    {
        const VectorField f = VectorField::rescaled(p);
        if (!cache_.empty()) {
            auto it = cache_.lower_bound(p.mu);
            if (it == cache_.end() || (it != cache_.begin() && p.mu - std::prev(it)->first < it->first - p.mu))
                it = it == cache_.begin() ? it : std::prev(it);
            try {
                const PeriodicOrbit o = find_orbit(f, it->second.anchor, it->second.section);
                if (std::abs(o.period - it->second.period) < 0.05 * it->second.period)
                    return store(p.mu, o);
            } catch (const Error&) {
            }
        }
        if (auto g = locate_gamma(p))
            return store(p.mu, *g);
        return std::nullopt;
    }

private:
    std::optional<State> store(double mu, const PeriodicOrbit& o)
    {
        if (std::abs(o.multipliers[0]) >= 1.0 || std::abs(o.multipliers[1]) >= 1.0)
            return std::nullopt;
        cache_[mu] = o;
        return o.anchor;
    }
    std::map<double, PeriodicOrbit> cache_;
};

struct Shooter {
    double b_cap, c_cap, a_cap, angle;
    FoldRefineOptions opt;
    GammaCache gamma;

    Shot shoot(double mu, double s)
    {
        const ParameterSet p{mu, a_cap, b_cap, c_cap};
        const auto ef = fold_equilibrium(p);
        if (!ef)
            throw PreconditionError("bvp_fold_refine: E_f disappeared");
        const VectorField f = VectorField::rescaled(p);
        const UnstableFrame frame = unstable_frame(f, ef->location, default_ring_radius(ef->location));
        const State seed = frame.seed(angle, frame.radius * std::pow(frame.domain_ratio(), s));

        std::vector<EventSpec> events;
        events.emplace_back(ParabolaHit{opt.surface_offset});
        events.emplace_back(default_escape_box());
        if (auto a = gamma.anchor(p)) {
            ProximityToPoint prox;
            prox.center = *a;
            prox.radius = 1e-6;
            events.emplace_back(prox);
        }
        IntegratorConfig cfg;
        cfg.t_max = opt.t_max;
        cfg.record = false;
        const Trajectory t = integrate(f, seed, cfg, events);
        if (t.termination == Termination::Event)
            return Shot::Hit;
        if (t.termination == Termination::Escaped)
            return Shot::Escaped;
        return Shot::Bounded;
    }

    // First mu in [lo, hi] at which the ray point s stops being bounded.
    double threshold(double s, double lo, double hi)
    {
        while (hi - lo > opt.mu_tol * std::max(1.0, std::abs(hi))) {
            const double mid = 0.5 * (lo + hi);
            if (shoot(mid, s) == Shot::Bounded)
                lo = mid;
            else
                hi = mid;
        }
        return 0.5 * (lo + hi);
    }
};

} // namespace

TangencyPoint bvp_fold_refine(const TangencyPoint& near, double ray_fraction, const FoldRefineOptions& opt)
{
    Shooter sh{near.b_cap, near.c_cap, near.a_cap, 2.0 * std::numbers::pi * ray_fraction, opt, {}};
    const double scale = std::max(near.bracket_width, 1e-6);
    const int n = std::max(opt.scan_points, 8);

    // Find a parameter above the fold where some ray points leave through the surface.
    double mu_probe = near.mu + 2.0 * scale;
    std::vector<bool> leaves(n);
    double s_center = 0.0, width = 0.0;
    bool found = false;
    for (int attempt = 0; attempt < 6 && !found; ++attempt, mu_probe += 2.0 * scale * (1 << attempt)) {
        bool any_hit = false;
        for (int i = 0; i < n; ++i) {
            const Shot r = sh.shoot(mu_probe, static_cast<double>(i) / n);
            leaves[i] = r != Shot::Bounded;
            any_hit = any_hit || r == Shot::Hit;
        }
        if (!any_hit)
            continue;
        // Longest circular run of leaving ray points.
        int best_len = 0, best_start = 0;
        for (int i = 0; i < n; ++i) {
            if (!leaves[i] || leaves[(i + n - 1) % n])
                continue;
            int len = 0;
            while (len < n && leaves[(i + len) % n])
                ++len;
            if (len > best_len) {
                best_len = len;
                best_start = i;
            }
        }
        if (best_len == 0 || best_len == n)
            continue;
        width = static_cast<double>(best_len) / n;
        s_center = (best_start + 0.5 * (best_len - 1)) / n;
        found = true;
    }
    if (!found)
        throw NoHit("bvp_fold_refine: no trajectory of the fundamental domain reaches Y = X^2 + " +
                    std::to_string(opt.surface_offset));
    mu_probe -= 0.0;

    double mu_lo = near.mu - 20.0 * scale;
    {
        const auto h = hopf_locus(near.a_cap, near.b_cap, near.c_cap);
        mu_lo = std::max(mu_lo, h.mu_star + 1e-9);
    }
    double h_s = std::max(width / 4.0, 1.0 / n);
    double mu_v = near.mu, prev = std::numeric_limits<double>::quiet_NaN();
    for (int round = 0; round < opt.rounds; ++round) {
        double m[3];
        for (int k = -1; k <= 1; ++k) {
            const double s = s_center + k * h_s;
            if (sh.shoot(mu_probe, s) == Shot::Bounded) {
                m[k + 1] = std::numeric_limits<double>::infinity();
                continue;
            }
            m[k + 1] = sh.threshold(s, mu_lo, mu_probe);
        }
        const double curv = (m[2] - 2.0 * m[1] + m[0]) / (2.0 * h_s * h_s);
        const double slope = (m[2] - m[0]) / (2.0 * h_s);
        prev = mu_v;
        if (std::isfinite(curv) && curv > 0.0) {
            double shift = -slope / (2.0 * curv);
            shift = std::clamp(shift, -2.0 * h_s, 2.0 * h_s);
            s_center += shift;
            mu_v = m[1] + slope * shift + curv * shift * shift;
        } else {
            const int best = static_cast<int>(std::min_element(m, m + 3) - m);
            s_center += (best - 1) * h_s;
            mu_v = m[best];
        }
        h_s /= 4.0;
    }

    TangencyPoint tp = near;
    tp.mu = mu_v;
    tp.bracket_width = std::isfinite(prev) ? std::abs(mu_v - prev) + opt.mu_tol : opt.mu_tol;
    tp.side_low = Verdict::AllBounded;
    tp.side_high = Verdict::SomeEscape;
    return tp;
}

} // namespace singhopf
