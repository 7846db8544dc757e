#include "singhopf/periodic.hpp"

#include "singhopf/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace singhopf {

std::string_view to_string(OrbitBifurcationTag t)
{
    switch (t) {
    case OrbitBifurcationTag::PD:
        return "PD";
    case OrbitBifurcationTag::LPC:
        return "LPC";
    case OrbitBifurcationTag::NS:
        return "NS";
    case OrbitBifurcationTag::Neutral:
        return "Neutral";
    case OrbitBifurcationTag::R1:
        return "R1";
    case OrbitBifurcationTag::R2:
        return "R2";
    case OrbitBifurcationTag::R3:
        return "R3";
    case OrbitBifurcationTag::R4:
        return "R4";
    case OrbitBifurcationTag::None:
        return "None";
    }
    return "None";
}

std::string_view to_string(BranchEnd e)
{
    switch (e) {
    case BranchEnd::ReachedRange:
        return "reached_range";
    case BranchEnd::StepUnderflow:
        return "step_underflow";
    case BranchEnd::PeriodBlowUp:
        return "period_blow_up";
    case BranchEnd::NewtonFailure:
        return "newton_failure";
    }
    return "unknown";
}

namespace {

using Mat2 = Eigen::Matrix2d;
using Vec2 = Eigen::Vector2d;
using Mat32 = Eigen::Matrix<double, 3, 2>;

// Orthonormal frame of a section plane.
struct Frame {
    Vec3 n;
    double offset;
    Mat32 basis;
    CrossingDirection direction;

    explicit Frame(const PoincareSection& s)
        : n(s.normal.normalized()), offset(s.offset / s.normal.norm()), direction(s.direction)
    {
        const int k = n.cwiseAbs().minCoeff() == std::abs(n[0]) ? 0 : (n.cwiseAbs().minCoeff() == std::abs(n[1]) ? 1 : 2);
        Vec3 u = n.cross(Vec3::Unit(k)).normalized();
        Vec3 v = n.cross(u);
        basis.col(0) = u;
        basis.col(1) = v;
    }

    State point(const Vec2& c) const { return n * offset + basis * c; }
    Vec2 coords(const State& s) const { return basis.transpose() * s; }
    PlaneCrossing plane() const
    {
        PlaneCrossing p;
        p.normal = n;
        p.offset = offset;
        p.direction = direction;
        p.terminal = true;
        p.arm_time = 1e-6;
        return p;
    }
};

// One application of the return map with its derivatives.
struct ReturnEval {
    Vec2 residual;     // P(c) - c
    Mat2 d_state;      // dP/dc - I
    Vec2 d_param;      // dP/dp
    VariationalResult var;
};

ReturnEval evaluate(const VectorField& field, const Frame& fr, const Vec2& c, const OrbitOptions& opt)
{
    const State s = fr.point(c);
    ReturnEval r;
    r.var = integrate_variational_to_section(field, s, fr.plane(), opt.integ);
    const Vec3 f = field(r.var.state);
    const double nf = fr.n.dot(f);
    const Mat3 proj = Mat3::Identity() - f * fr.n.transpose() / nf;
    r.residual = fr.coords(r.var.state) - c;
    r.d_state = fr.basis.transpose() * proj * r.var.monodromy * fr.basis - Mat2::Identity();
    r.d_param = fr.basis.transpose() * proj * r.var.param_sensitivity;
    return r;
}

void fill_multipliers(PeriodicOrbit& o)
{
    Eigen::EigenSolver<Mat3> es(o.monodromy, false);
    std::array<Complex, 3> ev;
    for (int i = 0; i < 3; ++i)
        ev[i] = es.eigenvalues()[i];
    int trivial = 0;
    for (int i = 1; i < 3; ++i)
        if (std::abs(ev[i] - 1.0) < std::abs(ev[trivial] - 1.0))
            trivial = i;
    o.trivial_residual = std::abs(ev[trivial] - 1.0);
    int near_one = 0;
    for (const Complex& z : ev)
        near_one += std::abs(z - 1.0) < 1e-4 ? 1 : 0;
    o.ambiguous_deflation = near_one >= 2;
    int j = 0;
    for (int i = 0; i < 3; ++i)
        if (i != trivial)
            o.multipliers[j++] = ev[i];
    if (o.multipliers[0].imag() < o.multipliers[1].imag() ||
        (o.multipliers[0].imag() == o.multipliers[1].imag() && std::abs(o.multipliers[0]) < std::abs(o.multipliers[1])))
        std::swap(o.multipliers[0], o.multipliers[1]);
}

PeriodicOrbit make_orbit(const VectorField& field, const Frame& fr, const PoincareSection& section, const Vec2& c,
                         const ReturnEval& ev)
{
    PeriodicOrbit o;
    o.param = field.primary();
    o.anchor = fr.point(c);
    o.section = section;
    o.period = ev.var.time;
    o.monodromy = ev.var.monodromy;
    o.return_residual = ev.residual.norm();
    fill_multipliers(o);
    return o;
}

std::array<double, 3> as_array(const State& s)
{
    return {s[0], s[1], s[2]};
}

} // namespace

PeriodicOrbit find_orbit(const VectorField& field, const State& seed, const PoincareSection& section,
                         const OrbitOptions& opt)
{
    const Frame fr(section);
    Vec2 c = fr.coords(seed);
    for (int it = 0; it < opt.max_newton; ++it) {
        const ReturnEval ev = evaluate(field, fr, c, opt);
        const Vec2 delta = ev.d_state.fullPivLu().solve(-ev.residual);
        if (!delta.allFinite())
            throw NotConverged("find_orbit: singular return-map Jacobian", as_array(fr.point(c)));
        c += delta;
        if (delta.norm() < opt.newton_tol) {
            const ReturnEval fin = evaluate(field, fr, c, opt);
            return make_orbit(field, fr, section, c, fin);
        }
    }
    std::ostringstream msg;
    msg << "find_orbit: Newton did not converge in " << opt.max_newton << " iterations; last iterate ("
        << fr.point(c).transpose() << ")";
    throw NotConverged(msg.str(), as_array(fr.point(c)));
}

PeriodicOrbit orbit_near_hopf(const VectorField& field, const State& e, const OrbitOptions& opt)
{
    using CMat = Eigen::Matrix3cd;
    const Mat3 a = field.jacobian(e);
    Eigen::ComplexEigenSolver<CMat> es(a.cast<Complex>());
    int iq = -1;
    for (int i = 0; i < 3; ++i) {
        const Complex z = es.eigenvalues()[i];
        if (z.imag() > 0 && (iq < 0 || std::abs(z.real()) < std::abs(es.eigenvalues()[iq].real())))
            iq = i;
    }
    if (iq < 0)
        throw PreconditionError("orbit_near_hopf: no complex eigenvalue pair at the equilibrium");
    const Complex lam = es.eigenvalues()[iq];
    const double l1 = first_lyapunov(field, e, 1.0);
    const double r2 = -lam.real() / (l1 * lam.imag());
    if (!(r2 > 0.0))
        throw PreconditionError("orbit_near_hopf: parameter is on the side without a small orbit");

    Eigen::JacobiSVD<CMat> svd(a.cast<Complex>() - Complex(0.0, lam.imag()) * CMat::Identity(), Eigen::ComputeFullV);
    Eigen::Vector3cd q = svd.matrixV().col(2);
    q.normalize();

    int axis = 0;
    for (int k = 1; k < 3; ++k)
        if (std::abs(q[k]) > std::abs(q[axis]))
            axis = k;
    const double r = std::sqrt(r2);
    PoincareSection sec;
    sec.normal = Vec3::Unit(axis);
    sec.offset = e[axis] + r * std::abs(q[axis]);
    sec.direction = CrossingDirection::Increasing;
    const double theta = -std::numbers::pi / 3.0 - std::arg(q[axis]);
    const State seed = e + 2.0 * r * (q * std::polar(1.0, theta)).real();
    return find_orbit(field, seed, sec, opt);
}

Trajectory sample_orbit(const VectorField& field, const PeriodicOrbit& orbit, const IntegratorConfig& cfg)
{
    IntegratorConfig c = cfg;
    c.t_max = orbit.period;
    c.record = true;
    return integrate(field, orbit.anchor, c);
}

PoincareSection section_for(const Trajectory& tr, int axis)
{
    if (tr.states.size() < 2)
        throw PreconditionError("section_for: trajectory too short");
    double integral = 0.0, hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < tr.states.size(); ++i) {
        integral += 0.5 * (tr.states[i][axis] + tr.states[i - 1][axis]) * (tr.times[i] - tr.times[i - 1]);
        hi = std::max(hi, tr.states[i][axis]);
    }
    const double mean = integral / (tr.times.back() - tr.times.front());
    PoincareSection s;
    s.normal = Vec3::Unit(axis);
    s.offset = mean + 0.5 * (hi - mean);
    s.direction = CrossingDirection::Increasing;
    return s;
}

MultiplierTests multiplier_tests(const PeriodicOrbit& o)
{
    const Complex m1 = o.multipliers[0], m2 = o.multipliers[1];
    MultiplierTests t;
    t.pd = ((1.0 + m1) * (1.0 + m2)).real();
    t.lpc = ((1.0 - m1) * (1.0 - m2)).real();
    t.product = (m1 * m2).real() - 1.0;
    t.complex_pair = std::abs(m1.imag()) > 1e-9 * std::max(1.0, std::abs(m1));
    return t;
}

OrbitBifurcationTag resonance_of(double argument, double tol)
{
    const double arg = std::abs(argument);
    constexpr OrbitBifurcationTag tags[] = {OrbitBifurcationTag::R1, OrbitBifurcationTag::R2, OrbitBifurcationTag::R3,
                                            OrbitBifurcationTag::R4};
    for (int q = 1; q <= 4; ++q) {
        const double target = q == 1 ? 0.0 : 2.0 * std::numbers::pi / q;
        if (std::abs(arg - target) < tol)
            return tags[q - 1];
    }
    return OrbitBifurcationTag::None;
}

namespace {

bool crossed(double a, double b)
{
    return (a < 0.0) != (b < 0.0);
}

double critical_argument(const PeriodicOrbit& o)
{
    return std::abs(std::arg(o.multipliers[0]));
}

// With one real multiplier far beyond 1e4 the other one carries no correct
// digits worth testing, so m1 m2 - 1 flips sign on rounding noise.
bool product_resolvable(const PeriodicOrbit& o)
{
    return multiplier_tests(o).complex_pair ||
           std::max(std::abs(o.multipliers[0]), std::abs(o.multipliers[1])) < 1e4;
}

} // namespace

OrbitBifurcationTag classify_multiplier_event(const PeriodicOrbit& before, const PeriodicOrbit& after)
{
    if (before.period <= 0.0 && after.period <= 0.0)
        throw PreconditionError("classify_multiplier_event: both orbits are invalid");
    const MultiplierTests a = multiplier_tests(before), b = multiplier_tests(after);
    if (crossed(a.pd, b.pd))
        return OrbitBifurcationTag::PD;
    if (crossed(a.lpc, b.lpc))
        return OrbitBifurcationTag::LPC;
    if (crossed(a.product, b.product)) {
        if (a.complex_pair || b.complex_pair) {
            const double arg = 0.5 * (critical_argument(before) + critical_argument(after));
            const OrbitBifurcationTag r = resonance_of(arg);
            return r == OrbitBifurcationTag::None ? OrbitBifurcationTag::NS : r;
        }
        return OrbitBifurcationTag::Neutral;
    }
    return OrbitBifurcationTag::None;
}

namespace {

// Unknowns of the extended system: section coordinates and the scaled parameter.
using Vec3u = Eigen::Vector3d;

class Continuer {
public:
    Continuer(const VectorField& field, const ContinuationOptions& opt) : base_(field), opt_(opt) {}

    struct Point {
        Vec3u u;
        ReturnEval ev;
        PeriodicOrbit orbit;
    };

    VectorField at(double scaled) const { return base_.with_primary(scaled * opt_.param_scale); }

    // Newton on G(u) = 0 with the hyperplane constraint d . (u - anchor) = 0.
    std::optional<Point> correct(const Frame& fr, const PoincareSection& sec, Vec3u u, const Vec3u& d,
                                 const Vec3u& anchor, int* iterations = nullptr) const
    {
        for (int it = 0; it < 10; ++it) {
            ReturnEval ev;
            try {
                ev = evaluate(at(u[2]), fr, u.head<2>(), opt_.orbit);
            } catch (const Error&) {
                return std::nullopt;
            }
            if (ev.var.time > opt_.orbit.max_period * 1.5)
                return std::nullopt;
            Mat3 jac;
            jac.topLeftCorner<2, 2>() = ev.d_state;
            jac.topRightCorner<2, 1>() = ev.d_param * opt_.param_scale;
            jac.row(2) = d.transpose();
            Vec3u rhs;
            rhs.head<2>() = -ev.residual;
            rhs[2] = -d.dot(u - anchor);
            const Vec3u delta = jac.fullPivLu().solve(rhs);
            if (!delta.allFinite() || delta.norm() > 1.0)
                return std::nullopt;
            u += delta;
            if (delta.norm() < opt_.orbit.newton_tol) {
                Point p;
                p.u = u;
                try {
                    p.ev = evaluate(at(u[2]), fr, u.head<2>(), opt_.orbit);
                } catch (const Error&) {
                    return std::nullopt;
                }
                p.orbit = make_orbit(at(u[2]), fr, sec, u.head<2>(), p.ev);
                if (iterations)
                    *iterations = it + 1;
                return p;
            }
        }
        return std::nullopt;
    }

    Vec3u tangent(const ReturnEval& ev) const
    {
        const Vec3u r0(ev.d_state(0, 0), ev.d_state(0, 1), ev.d_param[0] * opt_.param_scale);
        const Vec3u r1(ev.d_state(1, 0), ev.d_state(1, 1), ev.d_param[1] * opt_.param_scale);
        return r0.cross(r1).normalized();
    }

    // Bisection along the chord between two points on the sign change of test().
    template <class Test>
    MultiplierEvent refine(const Frame& fr, const PoincareSection& sec, const Point& lo_pt, const Point& hi_pt,
                           Test test, OrbitBifurcationTag tag) const
    {
        const Vec3u d = (hi_pt.u - lo_pt.u).normalized();
        double lo = 0.0, hi = 1.0;
        double g_lo = test(lo_pt.orbit);
        Point best = std::abs(test(lo_pt.orbit)) < std::abs(test(hi_pt.orbit)) ? lo_pt : hi_pt;
        Point lo_p = lo_pt, hi_p = hi_pt;
        for (int it = 0; it < 60; ++it) {
            if (std::abs(hi_p.u[2] - lo_p.u[2]) * opt_.param_scale < opt_.event_param_tol)
                break;
            const double mid = 0.5 * (lo + hi);
            const Vec3u guess = lo_pt.u + mid * (hi_pt.u - lo_pt.u);
            auto p = correct(fr, sec, guess, d, guess);
            if (!p)
                break;
            const double g = test(p->orbit);
            if ((g < 0.0) == (g_lo < 0.0)) {
                lo = mid;
                lo_p = *p;
                g_lo = g;
            } else {
                hi = mid;
                hi_p = *p;
            }
            best = std::abs(test(lo_p.orbit)) < std::abs(test(hi_p.orbit)) ? lo_p : hi_p;
        }
        MultiplierEvent ev;
        ev.tag = tag;
        ev.orbit = best.orbit;
        ev.param = 0.5 * (lo_p.u[2] + hi_p.u[2]) * opt_.param_scale;
        ev.param_width = std::abs(hi_p.u[2] - lo_p.u[2]) * opt_.param_scale;
        ev.argument = critical_argument(best.orbit);
        if (tag == OrbitBifurcationTag::NS)
            ev.resonance = resonance_of(ev.argument);
        return ev;
    }

    std::vector<MultiplierEvent> events_between(const Frame& fr, const PoincareSection& sec, const Point& a,
                                                const Point& b) const
    {
        std::vector<MultiplierEvent> out;
        const MultiplierTests ta = multiplier_tests(a.orbit), tb = multiplier_tests(b.orbit);
        if (crossed(ta.pd, tb.pd))
            out.push_back(refine(fr, sec, a, b, [](const PeriodicOrbit& o) { return multiplier_tests(o).pd; },
                                 OrbitBifurcationTag::PD));
        if (crossed(ta.lpc, tb.lpc))
            out.push_back(refine(fr, sec, a, b, [](const PeriodicOrbit& o) { return multiplier_tests(o).lpc; },
                                 OrbitBifurcationTag::LPC));
        if (crossed(ta.product, tb.product) && product_resolvable(a.orbit) && product_resolvable(b.orbit)) {
            auto ev = refine(fr, sec, a, b, [](const PeriodicOrbit& o) { return multiplier_tests(o).product; },
                             OrbitBifurcationTag::NS);
            if (!multiplier_tests(ev.orbit).complex_pair) {
                ev.tag = OrbitBifurcationTag::Neutral;
                ev.resonance = OrbitBifurcationTag::None;
            }
            out.push_back(ev);
        }
        std::sort(out.begin(), out.end(), [&](const MultiplierEvent& x, const MultiplierEvent& y) {
            return std::abs(x.param - a.orbit.param) < std::abs(y.param - a.orbit.param);
        });
        return out;
    }

private:
    VectorField base_;
    ContinuationOptions opt_;
};

int section_axis(const PoincareSection& s)
{
    int axis = 0;
    for (int k = 1; k < 3; ++k)
        if (std::abs(s.normal[k]) > std::abs(s.normal[axis]))
            axis = k;
    return axis;
}

} // namespace

OrbitBranch continue_orbit(const VectorField& field, const PeriodicOrbit& orbit0, double param_end,
                           const ContinuationOptions& options)
{
    if (options.param_scale < 0.0)
        throw DomainError("continue_orbit: param_scale must be non-negative");
    ContinuationOptions opt = options;
    if (opt.param_scale == 0.0)
        opt.param_scale = std::max(std::abs(orbit0.param), 1e-3);
    Continuer cont(field, opt);
    OrbitBranch branch;
    const double sign = param_end >= orbit0.param ? 1.0 : -1.0;

    PoincareSection sec = orbit0.section;
    Frame fr(sec);
    Continuer::Point cur;
    cur.u << fr.coords(orbit0.anchor), orbit0.param / opt.param_scale;
    cur.ev = evaluate(cont.at(cur.u[2]), fr, cur.u.head<2>(), opt.orbit);
    cur.orbit = make_orbit(cont.at(cur.u[2]), fr, sec, cur.u.head<2>(), cur.ev);
    branch.points.push_back(cur.orbit);

    Vec3u t = cont.tangent(cur.ev);
    if (t[2] * sign < 0.0)
        t = -t;
    double ds = opt.ds_initial;

    auto stop_requested = [&](const MultiplierEvent& e) {
        return std::find(opt.stop_on.begin(), opt.stop_on.end(), e.tag) != opt.stop_on.end() ||
               (e.tag == OrbitBifurcationTag::NS && e.resonance != OrbitBifurcationTag::None &&
                std::find(opt.stop_on.begin(), opt.stop_on.end(), e.resonance) != opt.stop_on.end());
    };

    while (static_cast<int>(branch.points.size()) < opt.max_points) {
        double step = ds;
        if (std::isfinite(opt.max_param_step) && std::abs(t[2]) > 0.0)
            step = std::min(step, opt.max_param_step / (opt.param_scale * std::abs(t[2])));
        const Vec3u pred = cur.u + step * t;
        int iters = 0;
        auto next = cont.correct(fr, sec, pred, t, pred, &iters);
        if (!next) {
            ds *= 0.5;
            if (ds < opt.ds_min) {
                branch.end = BranchEnd::StepUnderflow;
                branch.end_reason = "continuation step fell below its floor at parameter " +
                                    std::to_string(cur.orbit.param);
                break;
            }
            continue;
        }

        if (opt.detect_events) {
            bool stop = false;
            for (auto& e : cont.events_between(fr, sec, cur, *next)) {
                if ((e.param - param_end) * sign > 0.0 || e.param < opt.param_min || e.param > opt.param_max)
                    continue;
                stop = stop || stop_requested(e);
                branch.events.push_back(std::move(e));
            }
            if (stop) {
                branch.points.push_back(next->orbit);
                branch.end = BranchEnd::ReachedRange;
                branch.end_reason = "stopping event reached";
                break;
            }
        }

        Vec3u t_new = cont.tangent(next->ev);
        if (t_new.dot(t) < 0.0)
            t_new = -t_new;
        t = t_new;
        cur = *next;
        branch.points.push_back(cur.orbit);

        if (cur.orbit.period > opt.orbit.max_period) {
            branch.end = BranchEnd::PeriodBlowUp;
            branch.end_reason = "period exceeded " + std::to_string(opt.orbit.max_period);
            break;
        }
        if (cur.orbit.param < opt.param_min || cur.orbit.param > opt.param_max) {
            branch.end = BranchEnd::ReachedRange;
            branch.end_reason = "parameter left the window";
            break;
        }
        if ((cur.orbit.param - param_end) * sign >= 0.0) {
            branch.end = BranchEnd::ReachedRange;
            branch.end_reason = "parameter range end reached";
            break;
        }
        ds = iters <= 3 ? std::min(ds * 1.5, opt.ds_max) : (iters > 6 ? ds * 0.7 : ds);

        // Re-anchor the section when the orbit has drifted off-centre.
        const VectorField f = cont.at(cur.u[2]);
        Trajectory one;
        try {
            one = sample_orbit(f, cur.orbit, opt.orbit.integ);
        } catch (const Error&) {
            continue;
        }
        const int axis = section_axis(sec);
        const PoincareSection fresh = section_for(one, axis);
        double lo_v = std::numeric_limits<double>::infinity(), hi_v = -lo_v;
        for (const State& s : one.states) {
            lo_v = std::min(lo_v, s[axis]);
            hi_v = std::max(hi_v, s[axis]);
        }
        const double mean = 2.0 * fresh.offset - hi_v; // offset = mean + (hi - mean) / 2
        const double rel = (sec.offset - mean) / (hi_v - mean);
        if (rel > 0.25 && rel < 0.75)
            continue;
        // Find the first upward crossing of the new plane along the sampled period.
        std::optional<State> seed;
        for (std::size_t i = 1; i < one.states.size() && !seed; ++i) {
            const double g0 = one.states[i - 1][axis] - fresh.offset, g1 = one.states[i][axis] - fresh.offset;
            if (g0 < 0.0 && g1 >= 0.0)
                seed = one.states[i - 1] + (one.states[i] - one.states[i - 1]) * (g0 / (g0 - g1));
        }
        if (!seed)
            continue;
        try {
            const PeriodicOrbit moved = find_orbit(f, *seed, fresh, opt.orbit);
            if (std::abs(moved.period - cur.orbit.period) > 1e-6 * cur.orbit.period)
                continue;
            const double dp_sign = t[2];
            sec = fresh;
            fr = Frame(sec);
            cur.u.head<2>() = fr.coords(moved.anchor);
            cur.ev = evaluate(f, fr, cur.u.head<2>(), opt.orbit);
            cur.orbit = make_orbit(f, fr, sec, cur.u.head<2>(), cur.ev);
            branch.points.back() = cur.orbit;
            t = cont.tangent(cur.ev);
            if (t[2] * dp_sign < 0.0)
                t = -t;
        } catch (const Error&) {
        }
    }
    if (static_cast<int>(branch.points.size()) >= opt.max_points && branch.end_reason.empty())
        branch.end_reason = "point budget exhausted";
    return branch;
}

OrbitBranch continue_orbit_in_mu(const ParameterSet& p0, const PeriodicOrbit& orbit0, double mu_end,
                                 const ContinuationOptions& opt)
{
    return continue_orbit(VectorField::rescaled(p0), orbit0, mu_end, opt);
}

std::optional<PeriodicOrbit> continue_from_hopf(const VectorField& field, const HopfReport& h, double target,
                                                const ContinuationOptions& opt)
{
    const double delta = 1e-3 * std::max(std::abs(h.mu_star), 1e-3);
    for (const double side : {1.0, -1.0}) {
        if ((target - h.mu_star) * side <= 0.0)
            continue;
        const double start = (target - h.mu_star) * side < delta ? target : h.mu_star + side * delta;
        const VectorField f = field.with_primary(start);
        PeriodicOrbit o;
        try {
            o = orbit_near_hopf(f, equilibrium_newton(f, h.location), opt.orbit);
        } catch (const Error&) {
            continue;
        }
        if (start == target)
            return o;
        ContinuationOptions c = opt;
        c.detect_events = false;
        const OrbitBranch br = continue_orbit(f, o, target, c);
        if (br.end != BranchEnd::ReachedRange || br.points.size() < 2)
            return std::nullopt;
        const PeriodicOrbit& last = br.points.back();
        try {
            return find_orbit(field.with_primary(target), last.anchor, last.section, opt.orbit);
        } catch (const Error&) {
            return std::nullopt;
        }
    }
    return std::nullopt;
}

std::optional<PeriodicOrbit> locate_gamma(const ParameterSet& p, const ContinuationOptions& opt)
{
    HopfReport h;
    try {
        h = hopf_locus(p.a_cap, p.b_cap, p.c_cap);
    } catch (const NotFound&) {
        return std::nullopt;
    }
    return continue_from_hopf(VectorField::rescaled(p), h, p.mu, opt);
}

std::vector<ResonanceHit> resonance_scan(const OrbitBranch& branch, double tol)
{
    std::vector<ResonanceHit> out;
    for (const auto& e : branch.events) {
        if (e.tag != OrbitBifurcationTag::NS)
            continue;
        const OrbitBifurcationTag r = resonance_of(e.argument, tol);
        if (r != OrbitBifurcationTag::None)
            out.push_back({r, e.param, e.argument});
    }
    return out;
}

} // namespace singhopf
