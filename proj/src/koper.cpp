#include "singhopf/koper.hpp"

#include "singhopf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace singhopf {

std::vector<State> koper_equilibria(const KoperParameters& p)
{
    // x^3 - (3 + k) x + lambda = 0
    const double q = -(3.0 + p.k), r = p.lambda;
    std::vector<double> xs;
    const double disc = -(4.0 * q * q * q + 27.0 * r * r);
    if (disc > 0.0) {
        const double m = 2.0 * std::sqrt(-q / 3.0);
        const double th = std::acos(3.0 * r / (q * m)) / 3.0;
        for (int i = 0; i < 3; ++i)
            xs.push_back(m * std::cos(th - 2.0 * M_PI * i / 3.0));
    } else {
        const double s = std::sqrt(std::max(r * r / 4.0 + q * q * q / 27.0, 0.0));
        xs.push_back(std::cbrt(-r / 2.0 + s) + std::cbrt(-r / 2.0 - s));
    }
    std::vector<State> out;
    for (double x : xs) {
        for (int it = 0; it < 5; ++it) {
            const double d = 3.0 * x * x + q;
            if (d == 0.0)
                break;
            x -= (x * x * x + q * x + r) / d;
        }
        out.emplace_back(x, x, x);
    }
    std::sort(out.begin(), out.end(), [](const State& a, const State& b) { return a[0] < b[0]; });
    return out;
}

std::optional<State> koper_fold_equilibrium(const KoperParameters& p)
{
    const auto eq = koper_equilibria(p);
    if (eq.empty())
        return std::nullopt;
    return *std::min_element(eq.begin(), eq.end(), [](const State& a, const State& b) {
        return std::abs(a[0] - 1.0) < std::abs(b[0] - 1.0);
    });
}

namespace {

KoperParameters at(KoperParameters p, double lambda)
{
    p.lambda = lambda;
    return p;
}

} // namespace

KoperScanResult koper_scan(double eps1, double eps2, double k, double lambda_lo, double lambda_hi,
                           const KoperScanOptions& opt)
{
    if (!(eps1 > 0.0) || !(eps2 > 0.0))
        throw DomainError("koper_scan: eps1 and eps2 must be positive");
    const KoperParameters base{eps1, eps2, k, 0.0};
    auto field = [&](double l) { return VectorField::koper(at(base, l)); };
    auto branch = [&](double l) { return koper_fold_equilibrium(at(base, l)); };
    const HopfReport h = find_hopf(field, branch, lambda_lo, lambda_hi, 0.5 * (lambda_lo + lambda_hi));

    KoperScanResult res;
    res.lambda_hopf = h.mu_star;
    res.criticality = h.criticality;
    res.hopf_residual = h.residual;
    res.periods[0] = 2.0 * M_PI / h.omega;

    // Start on the side where the small orbit exists and continue away from the Hopf point.
    const double dir = h.l1 < 0.0 ? 1.0 : -1.0;
    const double l0 = h.mu_star + dir * 1e-3 * std::max(std::abs(h.mu_star), 1e-3);
    const PeriodicOrbit o0 = orbit_near_hopf(field(l0), *branch(l0), opt.continuation.orbit);
    ContinuationOptions c = opt.continuation;
    if (c.param_scale == 0.0)
        c.param_scale = 1.0;
    c.stop_on = {OrbitBifurcationTag::LPC};
    res.branch = continue_orbit(field(l0), o0, dir > 0.0 ? lambda_hi : lambda_lo, c);

    const MultiplierEvent* pd = nullptr;
    const MultiplierEvent* lpc = nullptr;
    for (const auto& ev : res.branch.events) {
        if (ev.tag == OrbitBifurcationTag::PD && !pd)
            pd = &ev;
        if (ev.tag == OrbitBifurcationTag::LPC && !lpc)
            lpc = &ev;
    }
    if (!pd || !lpc)
        throw NotFound(std::string("koper_scan: no ") + (!pd ? "PD" : "LPC") + " on the orbit branch (" +
                       res.branch.end_reason + ")");
    res.lambda_pd = pd->param;
    res.lambda_lpc = lpc->param;
    res.periods[1] = pd->orbit.period;
    res.periods[2] = lpc->orbit.period;
    res.lpc_nonlocal = res.periods[2] > 1.5 * res.periods[0];

    if (opt.with_tangency) {
        const double lo = res.lambda_hopf + 1e-3 * dir, hi = res.lambda_pd - 1e-3 * dir;
        try {
            res.lambda_tangency = koper_tangency(eps1, eps2, k, std::min(lo, hi), std::max(lo, hi), opt.tangency_tol,
                                                 opt.fate)
                                      .mu;
        } catch (const Error&) {
            res.lambda_tangency.reset();
        }
    }
    return res;
}

FateCriteria koper_criteria(const KoperParameters& p, const State& ef, double radius, double t_max)
{
    FateCriteria crit;
    crit.t_max = t_max;
    crit.escape.lower = Vec3(ef[0] - radius, -std::numeric_limits<double>::infinity(),
                             -std::numeric_limits<double>::infinity());
    crit.escape.upper = Vec3(ef[0] + radius, std::numeric_limits<double>::infinity(),
                             std::numeric_limits<double>::infinity());
    crit.fold_box = crit.escape;

    const VectorField f = VectorField::koper(p);
    const Spectrum ev = eigenvalues_at(f, ef);
    if (std::all_of(ev.begin(), ev.end(), [](Complex z) { return z.real() < 0.0; })) {
        crit.attractors.push_back(ef);
        return crit;
    }
    // Gamma from the Hopf point below lambda, when the small orbit is stable.
    const KoperParameters base = p;
    auto field = [&](double l) { return VectorField::koper(at(base, l)); };
    auto branch = [&](double l) { return koper_fold_equilibrium(at(base, l)); };
    try {
        const HopfReport h = find_hopf(field, branch, p.lambda - 1.0, p.lambda, p.lambda);
        ContinuationOptions c;
        c.param_scale = 1.0;
        if (auto g = continue_from_hopf(f, h, p.lambda, c);
            g && std::abs(g->multipliers[0]) < 1.0 && std::abs(g->multipliers[1]) < 1.0)
            crit.orbit_anchor = g->anchor;
    } catch (const Error&) {
    }
    return crit;
}

FateClassification koper_classify_fate(const KoperParameters& p, const FateOptions& opt)
{
    const auto ef = koper_fold_equilibrium(p);
    if (!ef)
        throw PreconditionError("koper_classify_fate: no equilibrium");
    return classify_fate(VectorField::koper(p), *ef, koper_criteria(p, *ef, 1.5, opt.t_max), opt);
}

TangencyPoint koper_tangency(double eps1, double eps2, double k, double lo, double hi, double tol,
                             const FateOptions& opt)
{
    const KoperParameters base{eps1, eps2, k, 0.0};
    FateProbe probe = [&](double l, double t) {
        FateOptions o = opt;
        o.t_max = t;
        return koper_classify_fate(at(base, l), o);
    };
    return bisect_tangency(probe, lo, hi, tol, opt.t_max);
}

MmoSignature detect_mmo(double eps1, double eps2, double k, double lambda, double t_max, double threshold,
                        Trajectory* keep)
{
    if (!(t_max > 0.0) || !(threshold > 0.0))
        throw DomainError("detect_mmo: t_max and threshold must be positive");
    const KoperParameters p{eps1, eps2, k, lambda};
    const VectorField f = VectorField::koper(p);
    State s0(0.5, 0.5, 0.5);
    if (auto e = koper_fold_equilibrium(p))
        s0 = *e + Vec3(0.3, -0.2, 0.1);

    IntegratorConfig cfg;
    cfg.t_max = t_max;
    cfg.record = true;
    Trajectory traj = integrate(f, s0, cfg);

    // A large excursion takes x more than `threshold` past the fold on the
    // far side from E_f; small oscillations are the x-minima in between.
    const double side = s0[0] >= 0.0 ? 1.0 : -1.0;
    const double enter = 1.0 - threshold, leave = 1.0 - 0.5 * threshold;
    const double t_start = 0.2 * t_max;

    MmoSignature sig;
    sig.threshold = threshold;
    bool in_excursion = false, seen_large = false;
    int small = 0;
    double prev_dx = 0.0, last_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        const double x = side * traj.states[i][0];
        const double dx = side * f(traj.states[i])[0];
        if (traj.times[i] > t_start) {
            if (!in_excursion && x < enter) {
                in_excursion = true;
                if (seen_large)
                    sig.small_counts.push_back(small);
                ++sig.large_count;
                seen_large = true;
                small = 0;
            } else if (in_excursion && x > leave) {
                in_excursion = false;
            } else if (!in_excursion && i > 0 && prev_dx > 0.0 && dx <= 0.0) {
                last_max = x;
            } else if (!in_excursion && i > 0 && prev_dx < 0.0 && dx >= 0.0 && last_max - x > 1e-3 * threshold) {
                ++small;
            }
        }
        prev_dx = dx;
    }
    sig.quiescent = sig.large_count == 0 && small == 0;
    if (sig.quiescent)
        sig.pattern = "quiescent";
    else if (sig.large_count == 0)
        sig.pattern = "small only";
    for (std::size_t i = 0; i < sig.small_counts.size(); ++i)
        sig.pattern += (i ? " 1^" : "1^") + std::to_string(sig.small_counts[i]);
    if (keep)
        *keep = std::move(traj);
    return sig;
}

} // namespace singhopf
