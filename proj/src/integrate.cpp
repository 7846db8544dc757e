#include "singhopf/integrate.hpp"

#include "singhopf/detail/dopri5.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace singhopf {

void validate(const IntegratorConfig& cfg)
{
    auto tol_ok = [](double t) { return t > 0.0 && t <= 1e-2; };
    if (!tol_ok(cfg.rel_tol) || !tol_ok(cfg.abs_tol))
        throw DomainError("integrator tolerances must lie in (0, 1e-2]");
    if (!(cfg.t_max > 0.0))
        throw DomainError("integrator t_max must be positive");
    if (!(cfg.max_step > 0.0))
        throw DomainError("integrator max_step must be positive");
}

EscapeBox default_escape_box()
{
    constexpr double inf = std::numeric_limits<double>::infinity();
    EscapeBox box;
    box.lower = Vec3(-10.0, -100.0, -inf);
    box.upper = Vec3(inf, 100.0, inf);
    return box;
}

std::string_view to_string(Termination t)
{
    switch (t) {
    case Termination::TimeOut:
        return "time_out";
    case Termination::Event:
        return "event";
    case Termination::Escaped:
        return "escaped";
    case Termination::Converged:
        return "converged";
    }
    return "unknown";
}

namespace {

struct FieldRhs {
    const VectorField* field;
    Vec3 operator()(double, const Vec3& s) const { return (*field)(s); }
};

bool sign_change(double g0, double g1, CrossingDirection dir)
{
    const bool up = g0 < 0.0 && g1 >= 0.0;
    const bool down = g0 > 0.0 && g1 <= 0.0;
    switch (dir) {
    case CrossingDirection::Increasing:
        return up;
    case CrossingDirection::Decreasing:
        return down;
    case CrossingDirection::Both:
        return up || down;
    }
    return false;
}

bool outside(const EscapeBox& box, const Vec3& s)
{
    for (int i = 0; i < 3; ++i)
        if (!(s[i] >= box.lower[i] && s[i] <= box.upper[i]))
            return true;
    return false;
}

// Scalar event function for plane and parabola events.
double scalar_event(const EventSpec& e, const Vec3& s)
{
    if (const auto* p = std::get_if<PlaneCrossing>(&e))
        return p->normal.dot(s) - p->offset;
    const auto& h = std::get<ParabolaHit>(e);
    return s[1] - s[0] * s[0] - h.offset;
}

bool is_scalar(const EventSpec& e)
{
    return std::holds_alternative<PlaneCrossing>(e) || std::holds_alternative<ParabolaHit>(e);
}

CrossingDirection direction_of(const EventSpec& e)
{
    if (const auto* p = std::get_if<PlaneCrossing>(&e))
        return p->direction;
    return CrossingDirection::Increasing;
}

bool is_terminal(const EventSpec& e)
{
    if (const auto* p = std::get_if<PlaneCrossing>(&e))
        return p->terminal;
    return true;
}

double arm_time(const EventSpec& e)
{
    if (const auto* p = std::get_if<PlaneCrossing>(&e))
        return p->arm_time;
    return 0.0;
}

} // namespace

Trajectory integrate(const VectorField& field, const State& s0, const IntegratorConfig& cfg,
                     std::span<const EventSpec> events, TimeDirection direction)
{
    validate(cfg);
    const double dir = direction == TimeDirection::Forward ? 1.0 : -1.0;
    detail::DormandPrince5<3, FieldRhs> stepper(FieldRhs{&field}, cfg.rel_tol, cfg.abs_tol, cfg.max_step, dir);
    stepper.reset(0.0, s0);

    Trajectory traj;
    traj.lower_bound = traj.upper_bound = s0;
    if (cfg.record) {
        traj.times.push_back(0.0);
        traj.states.push_back(s0);
    }

    std::vector<double> g_last(events.size(), 0.0);
    std::vector<double> dwell_start(events.size(), -1.0);
    for (std::size_t i = 0; i < events.size(); ++i) {
        if (is_scalar(events[i]))
            g_last[i] = scalar_event(events[i], s0);
        if (const auto* p = std::get_if<ProximityToPoint>(&events[i]))
            if ((s0 - p->center).norm() <= p->radius)
                dwell_start[i] = 0.0;
    }

    auto finish = [&](Termination why, double elapsed, const State& s, std::optional<std::size_t> id) {
        traj.termination = why;
        traj.final_time = elapsed;
        traj.final_state = s;
        traj.event_id = id;
        traj.steps = stepper.steps();
        if (cfg.record && (traj.times.empty() || traj.times.back() < elapsed)) {
            traj.times.push_back(elapsed);
            traj.states.push_back(s);
        } else if (cfg.record && !traj.states.empty()) {
            traj.states.back() = s;
        }
        return traj;
    };

    const double t_end = dir * cfg.t_max;
    struct Hit {
        double t;
        std::size_t id;
    };
    std::vector<Hit> hits;

    while (std::abs(stepper.t()) < cfg.t_max) {
        if (!stepper.advance(t_end))
            throw StiffnessError(std::abs(stepper.t()), stepper.y());
        if (stepper.steps() > cfg.max_steps)
            throw StiffnessError(std::abs(stepper.t()), stepper.y());

        const double ta = stepper.t_prev();
        const double tb = stepper.t();
        const Vec3& yb = stepper.y();
        traj.lower_bound = traj.lower_bound.cwiseMin(yb);
        traj.upper_bound = traj.upper_bound.cwiseMax(yb);

        hits.clear();
        for (std::size_t i = 0; i < events.size(); ++i) {
            if (!is_scalar(events[i]))
                continue;
            const double gb = scalar_event(events[i], yb);
            const double ga = g_last[i];
            g_last[i] = gb;
            if (!sign_change(ga, gb, direction_of(events[i])))
                continue;
            const double tr = detail::refine_root(
                [&](double t) { return scalar_event(events[i], stepper.solution_at(t)); }, ta, ga, tb, gb);
            if (std::abs(tr) < arm_time(events[i]))
                continue;
            hits.push_back({tr, i});
        }
        std::sort(hits.begin(), hits.end(), [dir](const Hit& a, const Hit& b) { return a.t * dir < b.t * dir; });
        for (const Hit& h : hits) {
            const State s = stepper.solution_at(h.t);
            traj.crossings.push_back({h.id, std::abs(h.t), s});
            if (is_terminal(events[h.id]))
                return finish(Termination::Event, std::abs(h.t), s, h.id);
        }

        for (std::size_t i = 0; i < events.size(); ++i) {
            if (const auto* box = std::get_if<EscapeBox>(&events[i])) {
                if (outside(*box, yb))
                    return finish(Termination::Escaped, std::abs(tb), yb, i);
            } else if (const auto* prox = std::get_if<ProximityToPoint>(&events[i])) {
                const double db = (yb - prox->center).norm();
                if (prox->dwell_time <= 0.0) {
                    if (db <= prox->radius)
                        return finish(Termination::Converged, std::abs(tb), yb, i);
                    // Closest approach inside the step, by golden section on the interpolant.
                    const double da = (stepper.y_prev() - prox->center).norm();
                    const double chord = (yb - stepper.y_prev()).norm();
                    if (std::min(da, db) - chord > prox->radius)
                        continue;
                    double lo = ta, hi = tb;
                    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
                    auto dist = [&](double t) { return (stepper.solution_at(t) - prox->center).norm(); };
                    double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
                    double fc = dist(c), fd = dist(d);
                    for (int it = 0; it < 60 && std::abs(hi - lo) > 1e-12 * std::max(1.0, std::abs(tb)); ++it) {
                        if (fc < fd) {
                            hi = d;
                            d = c;
                            fd = fc;
                            c = hi - gr * (hi - lo);
                            fc = dist(c);
                        } else {
                            lo = c;
                            c = d;
                            fc = fd;
                            d = lo + gr * (hi - lo);
                            fd = dist(d);
                        }
                    }
                    const double tm = fc < fd ? c : d;
                    if (std::min(fc, fd) <= prox->radius)
                        return finish(Termination::Converged, std::abs(tm), stepper.solution_at(tm), i);
                } else {
                    if (db <= prox->radius) {
                        if (dwell_start[i] < 0.0)
                            dwell_start[i] = std::abs(tb);
                        if (std::abs(tb) - dwell_start[i] >= prox->dwell_time)
                            return finish(Termination::Converged, std::abs(tb), yb, i);
                    } else {
                        dwell_start[i] = -1.0;
                    }
                }
            }
        }

        if (cfg.record) {
            traj.times.push_back(std::abs(tb));
            traj.states.push_back(yb);
        }
    }
    return finish(Termination::TimeOut, std::abs(stepper.t()), stepper.y(), std::nullopt);
}

namespace {

// State (3), monodromy columns (9), parameter sensitivity (3).
using AugVec = detail::VecN<15>;

struct VariationalRhs {
    const VectorField* field;
    Vec3 dfdp;
    AugVec operator()(double, const AugVec& y) const
    {
        const Vec3 s = y.head<3>();
        const Mat3 j = field->jacobian(s);
        AugVec out;
        out.head<3>() = (*field)(s);
        Eigen::Map<const Mat3> m(y.data() + 3);
        Eigen::Map<Mat3> dm(out.data() + 3);
        dm.noalias() = j * m;
        out.tail<3>() = j * y.tail<3>() + dfdp;
        return out;
    }
};

AugVec pack(const State& s0)
{
    AugVec y = AugVec::Zero();
    y.head<3>() = s0;
    Eigen::Map<Mat3>(y.data() + 3) = Mat3::Identity();
    return y;
}

VariationalResult unpack(const AugVec& y, double t)
{
    VariationalResult r;
    r.state = y.head<3>();
    r.monodromy = Eigen::Map<const Mat3>(y.data() + 3);
    r.param_sensitivity = y.tail<3>();
    r.time = t;
    return r;
}

} // namespace

VariationalResult integrate_variational(const VectorField& field, const State& s0, double t_span,
                                        const IntegratorConfig& cfg)
{
    validate(cfg);
    if (!(t_span >= 0.0))
        throw DomainError("integrate_variational: t_span must be non-negative");
    detail::DormandPrince5<15, VariationalRhs> stepper(VariationalRhs{&field, field.primary_derivative()},
                                                       cfg.rel_tol, cfg.abs_tol, cfg.max_step, 1.0);
    stepper.reset(0.0, pack(s0));
    while (stepper.t() < t_span) {
        if (!stepper.advance(t_span) || stepper.steps() > cfg.max_steps)
            throw StiffnessError(stepper.t(), stepper.y().head<3>());
    }
    return unpack(stepper.y(), stepper.t());
}

VariationalResult integrate_variational_to_section(const VectorField& field, const State& s0,
                                                   const PlaneCrossing& section, const IntegratorConfig& cfg)
{
    validate(cfg);
    detail::DormandPrince5<15, VariationalRhs> stepper(VariationalRhs{&field, field.primary_derivative()},
                                                       cfg.rel_tol, cfg.abs_tol, cfg.max_step, 1.0);
    stepper.reset(0.0, pack(s0));
    auto g = [&](const AugVec& y) { return section.normal.dot(y.head<3>()) - section.offset; };
    double g_last = g(stepper.y());
    while (stepper.t() < cfg.t_max) {
        if (!stepper.advance(cfg.t_max) || stepper.steps() > cfg.max_steps)
            throw StiffnessError(stepper.t(), stepper.y().head<3>());
        const double gb = g(stepper.y());
        const double ga = g_last;
        g_last = gb;
        if (!sign_change(ga, gb, section.direction))
            continue;
        const double tr = detail::refine_root([&](double t) { return g(stepper.solution_at(t)); }, stepper.t_prev(),
                                              ga, stepper.t(), gb);
        if (tr < section.arm_time)
            continue;
        return unpack(stepper.solution_at(tr), tr);
    }
    throw NoReturn("no return to the section within t_max=" + std::to_string(cfg.t_max));
}

std::optional<Crossing> first_return(const VectorField& field, const State& s0, const PlaneCrossing& section,
                                     const IntegratorConfig& cfg, const EscapeBox& box)
{
    IntegratorConfig c = cfg;
    c.record = false;
    PlaneCrossing sec = section;
    sec.terminal = true;
    const EventSpec events[] = {sec, box};
    const Trajectory t = integrate(field, s0, c, events);
    if (t.termination != Termination::Event)
        return std::nullopt;
    return t.crossings.back();
}

} // namespace singhopf
