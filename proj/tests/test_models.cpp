#include "singhopf/errors.hpp"
#include "singhopf/integrate.hpp"

#include <doctest.h>

#include <random>

using namespace singhopf;

namespace {

std::vector<VectorField> random_fields(std::mt19937& rng)
{
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    std::uniform_real_distribution<double> pos(0.01, 1.0);
    const ParameterSet p{u(rng), u(rng), u(rng), u(rng)};
    const UnscaledParameterSet q{u(rng), u(rng), u(rng), u(rng), pos(rng)};
    return {VectorField(ModelId::RescaledQuadratic, p), VectorField(ModelId::UnscaledQuadratic, q),
            VectorField(ModelId::RescaledCubic, RescaledCubicParameters{p, pos(rng)}),
            VectorField(ModelId::UnscaledCubic, q),
            VectorField(ModelId::Koper, KoperParameters{pos(rng), pos(rng), -10.0 * pos(rng), 10 * u(rng)})};
}

} // namespace

TEST_CASE("analytic Jacobian matches central differences")
{
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 200; ++trial) {
        for (const VectorField& f : random_fields(rng)) {
            const State s(u(rng), u(rng), u(rng));
            const Mat3 j = f.jacobian(s);
            const double h = 1e-6;
            for (int c = 0; c < 3; ++c) {
                const Vec3 e = Vec3::Unit(c) * h;
                const Vec3 fd = (f(s + e) - f(s - e)) / (2 * h);
                for (int r = 0; r < 3; ++r)
                    CHECK(std::abs(fd[r] - j(r, c)) <= 1e-5 * std::max(1.0, std::abs(j(r, c))));
            }
        }
    }
}

TEST_CASE("rescaled field by hand")
{
    const ParameterSet p{0.3, -0.2, 0.5, 0.7};
    const State s(1.5, -0.5, 2.0);
    const Vec3 v = VectorField::rescaled(p)(s);
    CHECK(v[0] == doctest::Approx(-0.5 - 2.25));
    CHECK(v[1] == doctest::Approx(2.0 - 1.5));
    CHECK(v[2] == doctest::Approx(-0.3 + 0.2 * 1.5 - 0.5 * -0.5 - 0.7 * 2.0));
}

TEST_CASE("Koper field by hand")
{
    const KoperParameters p{0.1, 1.0, -10.0, -7.5};
    const State s(0.5, -0.2, 0.3);
    const Vec3 v = VectorField::koper(p)(s);
    CHECK(v[0] == doctest::Approx((-10.0 * -0.2 - 0.125 + 1.5 + 7.5) / 0.1));
    CHECK(v[1] == doctest::Approx(0.5 + 0.4 + 0.3));
    CHECK(v[2] == doctest::Approx(1.0 * (-0.2 - 0.3)));
}

TEST_CASE("wrong parameter kind is rejected")
{
    CHECK_THROWS_AS(VectorField(ModelId::Koper, ParameterSet{}), ParameterMismatch);
    CHECK_THROWS(VectorField(ModelId::UnscaledQuadratic, UnscaledParameterSet{0, 0, 0, 0, 0.0}));
}

TEST_CASE("scaling equivalence between unscaled and rescaled forms")
{
    const IntegratorConfig cfg{1e-10, 1e-12, std::numeric_limits<double>::infinity(), 1.0, 50'000'000, false};
    for (const double eps : {0.1, 0.01}) {
        const UnscaledParameterSet q{0.2 * eps * eps, -0.05 * std::sqrt(eps), 0.001, 0.1 * std::sqrt(eps), eps};
        const State s0(0.02, 0.001, -0.01);
        const double t = 0.5;
        IntegratorConfig c1 = cfg;
        c1.t_max = t;
        const Trajectory a = integrate(VectorField(ModelId::UnscaledQuadratic, q), s0, c1);
        IntegratorConfig c2 = cfg;
        c2.t_max = t * time_dilation(eps);
        const Trajectory b =
            integrate(VectorField::rescaled(rescale_to_capital(q)), state_map(s0, eps, MapDirection::ToRescaled), c2);
        const State mapped = state_map(a.final_state, eps, MapDirection::ToRescaled);
        CHECK((mapped - b.final_state).lpNorm<Eigen::Infinity>() < 1e-6);
    }
}

TEST_CASE("parameter and state maps invert each other")
{
    const UnscaledParameterSet q{1e-5, -0.02, 0.3, 0.04, 0.01};
    const UnscaledParameterSet back = rescale_to_lower(rescale_to_capital(q), 0.01);
    CHECK(back.mu == doctest::Approx(q.mu));
    CHECK(back.a == doctest::Approx(q.a));
    CHECK(back.b == doctest::Approx(q.b));
    CHECK(back.c == doctest::Approx(q.c));
    const State s(0.3, -0.1, 0.2);
    const State r = state_map(state_map(s, 0.01, MapDirection::ToRescaled), 0.01, MapDirection::ToUnscaled);
    CHECK((r - s).norm() < 1e-14);
}

TEST_CASE("reflection maps forward arcs to backward arcs")
{
    const ParameterSet p{0.0014, -0.05, 0.001, 0.1};
    IntegratorConfig cfg;
    cfg.t_max = 2.0;
    cfg.record = false;
    for (const State& s0 : {State(0.1, 0.0, 0.0), State(-0.3, 0.2, 0.1)}) {
        const Trajectory fwd = integrate(VectorField::rescaled(p), s0, cfg);
        const Trajectory bwd = integrate(VectorField::rescaled(reflect_parameters(p)), reflect_state(s0), cfg, {},
                                         TimeDirection::Backward);
        CHECK((reflect_state(fwd.final_state) - bwd.final_state).norm() < 1e-8);
    }
}

TEST_CASE("critical manifold sheets")
{
    const VectorField f = VectorField::rescaled({0, 0, 0, 0});
    CHECK(critical_manifold(f, 1.0).y == doctest::Approx(1.0));
    CHECK(critical_manifold(f, 1.0).stability == SheetStability::Attracting);
    CHECK(critical_manifold(f, -1.0).stability == SheetStability::Repelling);
    CHECK(critical_manifold(f, 0.0).stability == SheetStability::Fold);
    const auto [lo, hi] = koper_fold_points();
    CHECK(lo == doctest::Approx(-1.0));
    CHECK(hi == doctest::Approx(1.0));
}

TEST_CASE("JSON round trip and config errors")
{
    const VectorField f = VectorField::koper({0.1, 1.0, -10.0, -7.5});
    const VectorField g = field_from_json(to_json(f));
    CHECK(g.id() == ModelId::Koper);
    CHECK(g.primary() == -7.5);
    const nlohmann::json bad{{"model", "rescaled_quadratic"}, {"params", {{"mu", 0}, {"A", 0}, {"B", 0}}}};
    try {
        field_from_json(bad);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.key() == "params.C");
    }
    CHECK_THROWS_AS(model_from_string("lorenz"), DomainError);
}

TEST_CASE("primary parameter")
{
    const VectorField f = VectorField::rescaled({0.1, 0.2, 0.3, 0.4});
    CHECK(f.primary() == 0.1);
    CHECK(f.with_primary(0.5).primary() == 0.5);
    const Vec3 d = f.primary_derivative();
    const State s(0.3, 0.1, -0.2);
    const Vec3 fd = (f.with_primary(0.1 + 1e-6)(s) - f.with_primary(0.1 - 1e-6)(s)) / 2e-6;
    CHECK((d - fd).norm() < 1e-8);
}
