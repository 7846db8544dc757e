#include "singhopf/manifolds.hpp"

#include "singhopf/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

namespace singhopf {

std::string_view to_string(ManifoldLabel l)
{
    switch (l) {
    case ManifoldLabel::Sa:
        return "Sa";
    case ManifoldLabel::Sr:
        return "Sr";
    case ManifoldLabel::WuEf:
        return "WuEf";
    case ManifoldLabel::WsEf:
        return "WsEf";
    case ManifoldLabel::Gamma:
        return "Gamma";
    }
    return "unknown";
}

std::string_view to_string(Fate f)
{
    switch (f) {
    case Fate::Escaped:
        return "escaped";
    case Fate::ConvergedToOrbit:
        return "converged_to_orbit";
    case Fate::ConvergedToEquilibrium:
        return "converged_to_equilibrium";
    case Fate::TimeOut:
        return "time_out";
    }
    return "unknown";
}

EscapeBox default_fold_box()
{
    EscapeBox b;
    b.lower = Vec3(-3.0, -9.0, -3.0);
    b.upper = Vec3(3.0, 9.0, 3.0);
    return b;
}

double slow_manifold_offset(const ParameterSet& p, double x, double z, int order)
{
    if (order <= 0)
        return 0.0;
    const double h = slow_manifold_offset(p, x, z, order - 1);
    if (order == 1)
        return (z - x) / (2.0 * x);
    const double d = 1e-4 * (1.0 + std::abs(x));
    const double hx = (slow_manifold_offset(p, x + d, z, order - 1) - slow_manifold_offset(p, x - d, z, order - 1)) / (2 * d);
    const double hz = (slow_manifold_offset(p, x, z + d, order - 1) - slow_manifold_offset(p, x, z - d, order - 1)) / (2 * d);
    const double z_dot = -p.mu - p.a_cap * x - p.b_cap * (x * x + h) - p.c_cap * z;
    return (z - x - hx * h - hz * z_dot) / (2.0 * x);
}

ManifoldMesh slow_manifold(const ParameterSet& p, SheetKind which, const SeedLine& line, double t_max,
                           const IntegratorConfig& cfg)
{
    const bool attracting = which == SheetKind::Attracting;
    if (attracting ? line.x_seed < 1.0 : line.x_seed > -1.0)
        throw PreconditionError("slow_manifold: seed abscissa must satisfy " +
                                std::string(attracting ? "X >= 1 on the attracting sheet" : "X <= -1 on the repelling sheet"));
    if (line.count < 1)
        throw DomainError("slow_manifold: need at least one seed");

    const VectorField field = VectorField::rescaled(p);
    ManifoldMesh mesh;
    mesh.label = attracting ? ManifoldLabel::Sa : ManifoldLabel::Sr;
    mesh.reverse_time = !attracting;
    mesh.seed_description = "Y = X^2 + h (order " + std::to_string(line.offset_order) + ") at X = " +
                            std::to_string(line.x_seed) + ", Z in [" + std::to_string(line.z_min) + ", " +
                            std::to_string(line.z_max) + "]";

    IntegratorConfig c = cfg;
    c.t_max = t_max;
    c.record = true;
    EscapeBox fold = default_fold_box();
    // The seed sits on the fold-box boundary when |X_seed| = 3; keep it inside.
    fold.lower[0] = std::min(fold.lower[0], line.x_seed - 1e-9);
    fold.upper[0] = std::max(fold.upper[0], line.x_seed + 1e-9);
    double y_lo = line.x_seed * line.x_seed, y_hi = y_lo;
    for (const double z : {line.z_min, line.z_max}) {
        const double y = line.x_seed * line.x_seed + slow_manifold_offset(p, line.x_seed, z, line.offset_order);
        y_lo = std::min(y_lo, y);
        y_hi = std::max(y_hi, y);
    }
    fold.lower[1] = std::min(fold.lower[1], y_lo - 1e-9);
    fold.upper[1] = std::max(fold.upper[1], y_hi + 1e-9);
    const EventSpec events[] = {default_escape_box(), fold};
    for (int i = 0; i < line.count; ++i) {
        const double z = line.count == 1 ? line.z_min : line.z_min + (line.z_max - line.z_min) * i / (line.count - 1);
        const State s(line.x_seed, line.x_seed * line.x_seed + slow_manifold_offset(p, line.x_seed, z, line.offset_order), z);
        mesh.seeds.push_back(s);
        mesh.trajectories.push_back(
            integrate(field, s, c, events, attracting ? TimeDirection::Forward : TimeDirection::Backward));
    }
    return mesh;
}

State UnstableFrame::seed(double angle) const
{
    return seed(angle, radius);
}

State UnstableFrame::seed(double angle, double r) const
{
    return e + r * (std::cos(angle) * vr + std::sin(angle) * vi);
}

double UnstableFrame::domain_ratio() const
{
    return std::exp(2.0 * std::numbers::pi * alpha / omega);
}

UnstableFrame unstable_frame(const VectorField& field, const State& e, double ring_radius)
{
    Eigen::EigenSolver<Mat3> es(field.jacobian(e));
    int unstable = 0, pair = -1;
    for (int i = 0; i < 3; ++i) {
        const Complex z = es.eigenvalues()[i];
        if (z.real() > 0.0) {
            ++unstable;
            if (z.imag() > 0.0)
                pair = i;
        }
    }
    if (unstable != 2 || pair < 0)
        throw PreconditionError("unstable_frame: equilibrium is not a saddle-focus with a 2D unstable manifold");
    Eigen::Vector3cd v = es.eigenvectors().col(pair);
    // Rotate the phase so that the real and imaginary parts are orthogonal.
    const double a = v.real().squaredNorm() - v.imag().squaredNorm();
    const double b = 2.0 * v.real().dot(v.imag());
    v *= std::polar(1.0, -0.5 * std::atan2(b, a));
    v /= v.real().norm();
    UnstableFrame f;
    f.e = e;
    f.vr = v.real();
    f.vi = v.imag();
    f.alpha = es.eigenvalues()[pair].real();
    f.omega = es.eigenvalues()[pair].imag();
    f.radius = ring_radius;
    return f;
}

double default_ring_radius(const State& e)
{
    return 1e-3 * (1.0 + std::abs(e[0]));
}

RayOutcome ray_fate(const VectorField& field, const State& seed, const FateCriteria& crit, Trajectory* keep)
{
    IntegratorConfig c = crit.integ;
    c.t_max = crit.t_max;
    c.record = keep != nullptr;
    std::vector<EventSpec> events;
    events.emplace_back(crit.escape);
    if (crit.orbit_anchor) {
        ProximityToPoint prox;
        prox.center = *crit.orbit_anchor;
        prox.radius = crit.orbit_radius;
        events.emplace_back(prox);
    }
    for (const State& a : crit.attractors) {
        ProximityToPoint prox;
        prox.center = a;
        prox.radius = crit.equilibrium_radius;
        prox.dwell_time = crit.equilibrium_dwell;
        events.emplace_back(prox);
    }
    Trajectory t = integrate(field, seed, c, events);
    RayOutcome out;
    out.time = t.final_time;
    out.stayed_in_fold_box = (t.lower_bound.array() >= crit.fold_box.lower.array()).all() &&
                             (t.upper_bound.array() <= crit.fold_box.upper.array()).all();
    switch (t.termination) {
    case Termination::Escaped:
        out.fate = Fate::Escaped;
        break;
    case Termination::Converged:
        out.fate = crit.orbit_anchor && t.event_id == 1 ? Fate::ConvergedToOrbit : Fate::ConvergedToEquilibrium;
        break;
    default:
        out.fate = Fate::TimeOut;
    }
    if (keep)
        *keep = std::move(t);
    return out;
}

FateCriteria normal_form_criteria(const ParameterSet& p, double t_max)
{
    FateCriteria crit;
    crit.t_max = t_max;
    if (auto g = locate_gamma(p); g && std::abs(g->multipliers[0]) < 1.0 && std::abs(g->multipliers[1]) < 1.0)
        crit.orbit_anchor = g->anchor;
    for (const auto& e : find_equilibria(p))
        if (e.cls == StabilityClass::StableFocus || e.cls == StabilityClass::StableNode)
            crit.attractors.push_back(e.location);
    return crit;
}

ManifoldMesh unstable_manifold_mesh(const ParameterSet& p, const EquilibriumReport& e, double ring_radius, int n_rays,
                                    double t_max)
{
    if (n_rays < 1)
        throw DomainError("unstable_manifold_mesh: n_rays must be positive");
    const VectorField field = VectorField::rescaled(p);
    const double r = ring_radius > 0.0 ? ring_radius : default_ring_radius(e.location);
    const UnstableFrame frame = unstable_frame(field, e.location, r);
    const FateCriteria crit = normal_form_criteria(p, t_max);

    ManifoldMesh mesh;
    mesh.label = ManifoldLabel::WuEf;
    mesh.seed_description = "circle of radius " + std::to_string(r) + " in the unstable eigenplane, " +
                            std::to_string(n_rays) + " rays";
    mesh.seeds.resize(n_rays);
    mesh.trajectories.resize(n_rays);
    mesh.fates.resize(n_rays);
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n_rays; ++i) {
        const State s = frame.seed(2.0 * std::numbers::pi * i / n_rays);
        mesh.seeds[i] = s;
        mesh.fates[i] = ray_fate(field, s, crit, &mesh.trajectories[i]).fate;
    }
    return mesh;
}

ManifoldMesh stable_manifold_1d(const ParameterSet& p, const EquilibriumReport& e, double t_max, double delta_scale)
{
    const VectorField field = VectorField::rescaled(p);
    Eigen::EigenSolver<Mat3> es(field.jacobian(e.location));
    int stable = 0, idx = -1;
    for (int i = 0; i < 3; ++i) {
        if (es.eigenvalues()[i].real() < 0.0) {
            ++stable;
            idx = i;
        }
    }
    if (stable != 1 || std::abs(es.eigenvalues()[idx].imag()) > 0.0)
        throw PreconditionError("stable_manifold_1d: need exactly one stable eigenvalue, real");
    const Vec3 vs = es.eigenvectors().col(idx).real().normalized();
    const double delta = 1e-6 * (1.0 + std::abs(e.location[0])) * delta_scale;

    ManifoldMesh mesh;
    mesh.label = ManifoldLabel::WsEf;
    mesh.reverse_time = true;
    mesh.seed_description = "E_f +- " + std::to_string(delta) + " along the stable eigenvector";
    IntegratorConfig c;
    c.t_max = t_max;
    c.record = true;
    const EventSpec events[] = {default_escape_box()};
    for (const double sign : {1.0, -1.0}) {
        const State s = e.location + sign * delta * vs;
        mesh.seeds.push_back(s);
        mesh.trajectories.push_back(integrate(field, s, c, events, TimeDirection::Backward));
    }
    return mesh;
}

std::vector<PortraitPoint> section_portrait(const VectorField& field, const PlaneCrossing& plane,
                                            std::span<const ManifoldMesh> objects)
{
    std::vector<PortraitPoint> out;
    auto g = [&](const State& s) { return plane.normal.dot(s) - plane.offset; };
    for (std::size_t k = 0; k < objects.size(); ++k) {
        const ManifoldMesh& m = objects[k];
        // Reverse-time trajectories are stored with elapsed time; physical
        // time runs the other way, which flips the crossing direction.
        const double sgn = m.reverse_time ? -1.0 : 1.0;
        for (std::size_t j = 0; j < m.trajectories.size(); ++j) {
            const Trajectory& t = m.trajectories[j];
            for (std::size_t i = 1; i < t.states.size(); ++i) {
                const State& a = t.states[i - 1];
                const State& b = t.states[i];
                const double ga = g(a), gb = g(b);
                const bool up = ga < 0.0 && gb >= 0.0, down = ga > 0.0 && gb <= 0.0;
                if (!up && !down)
                    continue;
                const bool physical_up = m.reverse_time ? down : up;
                if (plane.direction == CrossingDirection::Increasing && !physical_up)
                    continue;
                if (plane.direction == CrossingDirection::Decreasing && physical_up)
                    continue;
                // Hermite interpolation in elapsed time with derivative sgn * f.
                const double h = t.times[i] - t.times[i - 1];
                const Vec3 fa = sgn * field(a), fb = sgn * field(b);
                auto at = [&](double s) {
                    const double s2 = s * s, s3 = s2 * s;
                    return State((2 * s3 - 3 * s2 + 1) * a + (s3 - 2 * s2 + s) * h * fa + (-2 * s3 + 3 * s2) * b +
                                 (s3 - s2) * h * fb);
                };
                double lo = 0.0, hi = 1.0, glo = ga;
                for (int it = 0; it < 60; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    const double gm = g(at(mid));
                    if ((gm < 0.0) == (glo < 0.0)) {
                        lo = mid;
                        glo = gm;
                    } else {
                        hi = mid;
                    }
                }
                out.push_back({k, j, at(0.5 * (lo + hi))});
            }
        }
    }
    return out;
}

} // namespace singhopf
