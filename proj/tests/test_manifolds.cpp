#include "singhopf/errors.hpp"
#include "singhopf/tangency.hpp"

#include <doctest.h>

#include <algorithm>
#include <numbers>

using namespace singhopf;

namespace {

const ParameterSet kP{0.0015, -0.05, 0.001, 0.1};

std::vector<State> crossings(const ManifoldMesh& m, double y)
{
    PlaneCrossing plane;
    plane.normal = Vec3::UnitY();
    plane.offset = y;
    plane.direction = CrossingDirection::Both;
    const std::vector<ManifoldMesh> objs{m};
    // First crossing of each trajectory: later ones belong to the global return.
    std::vector<State> out;
    std::size_t last = static_cast<std::size_t>(-1);
    for (const auto& p : section_portrait(VectorField::rescaled(kP), plane, objs)) {
        if (p.trajectory != last)
            out.push_back(p.point);
        last = p.trajectory;
    }
    std::sort(out.begin(), out.end(), [](const State& a, const State& b) { return a[2] < b[2]; });
    return out;
}

// Distance in (X, Z) from q to the polyline through pts (sorted by Z).
double distance_to_curve(const State& q, const std::vector<State>& pts)
{
    double best = 1e300;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const Eigen::Vector2d a(pts[i][0], pts[i][2]), b(pts[i + 1][0], pts[i + 1][2]), x(q[0], q[2]);
        const double t = std::clamp((x - a).dot(b - a) / (b - a).squaredNorm(), 0.0, 1.0);
        best = std::min(best, (a + t * (b - a) - x).norm());
    }
    return best;
}

} // namespace

TEST_CASE("repelling slow manifold does not depend on the seed distance")
{
    const ManifoldMesh near = slow_manifold(kP, SheetKind::Repelling, SeedLine{-2.0, -1.0, 1.0, 9});
    const ManifoldMesh far = slow_manifold(kP, SheetKind::Repelling, SeedLine{-3.0, -2.0, 2.0, 161});
    CHECK(near.reverse_time);
    const auto a = crossings(near, 0.5);
    const auto b = crossings(far, 0.5);
    REQUIRE(a.size() >= 5);
    REQUIRE(b.size() >= 5);
    int compared = 0;
    for (const State& q : a) {
        if (q[2] < b.front()[2] || q[2] > b.back()[2])
            continue;
        ++compared;
        CHECK(distance_to_curve(q, b) < 1e-4);
    }
    CHECK(compared >= 5);
}

TEST_CASE("attracting slow manifold tracks the critical manifold into the fold")
{
    for (const double x_seed : {1.0, 2.0}) {
        const ManifoldMesh m = slow_manifold(kP, SheetKind::Attracting, SeedLine{x_seed, -0.5, 0.5, 5});
        CHECK_FALSE(m.reverse_time);
        for (const Trajectory& t : m.trajectories) {
            bool reached = false;
            for (const State& s : t.states) {
                if (std::abs(s[0]) <= 0.2) {
                    reached = true;
                    break;
                }
                CHECK(std::abs(s[1] - s[0] * s[0]) < 1.0);
            }
            CHECK(reached);
        }
    }
}

TEST_CASE("slow manifold seeds")
{
    const ManifoldMesh on = slow_manifold(kP, SheetKind::Attracting, SeedLine{2.0, -1.0, 1.0, 9, 0});
    REQUIRE(on.seeds.size() == 9);
    for (const State& s : on.seeds) {
        CHECK(s[0] == 2.0);
        CHECK(s[1] == 4.0);
    }
    // The offset solves the invariance equation: d/dt (Y - X^2 - h) on the
    // seed shrinks by orders of magnitude against seeding on Y = X^2.
    auto drift = [](double x, double z, int order) {
        const double h = slow_manifold_offset(kP, x, z, order);
        const Vec3 v = VectorField::rescaled(kP)(State(x, x * x + h, z));
        const double d = 1e-4;
        const double hx =
            (slow_manifold_offset(kP, x + d, z, order) - slow_manifold_offset(kP, x - d, z, order)) / (2 * d);
        const double hz =
            (slow_manifold_offset(kP, x, z + d, order) - slow_manifold_offset(kP, x, z - d, order)) / (2 * d);
        return std::abs(v[1] - 2 * x * v[0] - hx * v[0] - hz * v[2]);
    };
    for (const double z : {-0.5, 0.0, 0.5}) {
        CHECK(slow_manifold_offset(kP, -2.0, z, 1) == doctest::Approx((z + 2.0) / -4.0));
        CHECK(drift(-2.0, z, 3) < 0.01 * drift(-2.0, z, 0));
        CHECK(drift(3.0, z, 3) < 0.01 * drift(3.0, z, 0));
    }
    CHECK_THROWS(slow_manifold(kP, SheetKind::Repelling, SeedLine{0.5, -1, 1, 3}));
}

TEST_CASE("unstable frame turns the linear flow into a rotation")
{
    const auto ef = fold_equilibrium(kP);
    REQUIRE(ef);
    const VectorField f = VectorField::rescaled(kP);
    const UnstableFrame fr = unstable_frame(f, ef->location, 1e-3);
    const Mat3 j = f.jacobian(ef->location);
    // J vr = alpha vr - omega vi and J vi = omega vr + alpha vi (real Jordan block).
    CHECK((j * fr.vr - (fr.alpha * fr.vr - fr.omega * fr.vi)).norm() < 1e-10);
    CHECK((j * fr.vi - (fr.omega * fr.vr + fr.alpha * fr.vi)).norm() < 1e-10);
    CHECK(fr.alpha > 0);
    CHECK(fr.domain_ratio() == doctest::Approx(std::exp(2 * std::numbers::pi * fr.alpha / fr.omega)));
    CHECK(default_ring_radius(ef->location) == doctest::Approx(1e-3 * (1 + std::abs(ef->location[0]))));
    // The stable equilibrium of the reflected system has no unstable pair.
    const auto er = fold_equilibrium(reflect_parameters(kP));
    CHECK_THROWS_AS(unstable_frame(VectorField::rescaled(reflect_parameters(kP)), er->location, 1e-3),
                    PreconditionError);
}

TEST_CASE("unstable manifold fates survive halving the ring radius")
{
    constexpr int n = 16;
    for (const double mu : {0.0014975, 0.0015709, 0.0017533}) {
        const ParameterSet p{mu, kP.a_cap, kP.b_cap, kP.c_cap};
        const auto ef = fold_equilibrium(p);
        REQUIRE(ef);
        const ManifoldMesh a = unstable_manifold_mesh(p, *ef, 1e-3, n, 5000.0);
        const ManifoldMesh b = unstable_manifold_mesh(p, *ef, 5e-4, n, 5000.0);
        REQUIRE(a.fates.size() == n);
        REQUIRE(b.fates.size() == n);
        // The linear flow carries the half-radius ring onto the full ring
        // turned by -(omega / alpha) ln 2 in the frame coordinates.
        const UnstableFrame fr = unstable_frame(VectorField::rescaled(p), ef->location, 1e-3);
        const double shift = fr.omega / fr.alpha * std::log(2.0) / (2 * std::numbers::pi) * n;
        auto escaped_a = [&](long i) { return a.fates[((i % n) + n) % n] == Fate::Escaped; };
        int compared = 0;
        for (int i = 0; i < n; ++i) {
            const long j = std::lround(i - shift);
            const bool near_boundary = escaped_a(j) != escaped_a(j - 1) || escaped_a(j) != escaped_a(j + 1);
            if (near_boundary)
                continue;
            ++compared;
            CHECK_MESSAGE(escaped_a(j) == (b.fates[i] == Fate::Escaped), "mu=" << mu << " ray " << i);
        }
        CHECK(compared > 0);
    }
}

TEST_CASE("stable manifold of E_f is one-dimensional and leaves E_f backward")
{
    const auto ef = fold_equilibrium(kP);
    const ManifoldMesh m = stable_manifold_1d(kP, *ef);
    CHECK(m.label == ManifoldLabel::WsEf);
    CHECK(m.reverse_time);
    REQUIRE(m.trajectories.size() == 2);
    // Backward time expands along the stable direction.
    for (const Trajectory& t : m.trajectories)
        CHECK((t.final_state - ef->location).norm() > 100 * (t.states.front() - ef->location).norm());
}

TEST_CASE("ray fate classification")
{
    const FateCriteria crit = normal_form_criteria(kP);
    REQUIRE(crit.orbit_anchor);
    const VectorField f = VectorField::rescaled(kP);
    // A point far below the repelling sheet escapes; the orbit anchor itself converges.
    CHECK(ray_fate(f, State(-2.0, 0.0, -2.0), crit).fate == Fate::Escaped);
    CHECK(ray_fate(f, *crit.orbit_anchor, crit).fate == Fate::ConvergedToOrbit);
}
