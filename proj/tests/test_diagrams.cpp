#include "singhopf/diagrams.hpp"
#include "singhopf/equilibria.hpp"
#include "singhopf/errors.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace singhopf;

namespace {

using K = EventKind;

std::vector<BifurcationEvent> events(std::initializer_list<std::pair<K, double>> list)
{
    std::vector<BifurcationEvent> out;
    for (const auto& [k, mu] : list)
        out.push_back({k, mu, nlohmann::json::object()});
    return out;
}

const SequenceRecord& reference_sweep()
{
    static const SequenceRecord r = sweep_mu(-0.05, 0.001, 0.1, 0.0, 0.003);
    return r;
}

std::vector<Complex> multipliers(const BifurcationEvent& e)
{
    std::vector<Complex> m;
    for (const auto& z : e.metadata.at("multipliers"))
        m.emplace_back(z[0].get<double>(), z[1].get<double>());
    return m;
}

} // namespace

TEST_CASE("table rows")
{
    CHECK(table1_row(1) == "H_sup");
    CHECK(table1_row(7) == "H_sup - T ± NS - PD");
    CHECK(table1_row(25) == "LPC - PD - H_sub");
    CHECK_THROWS(table1_row(0));
    CHECK_THROWS(table1_row(26));
}

TEST_CASE("sequence matching")
{
    CHECK(match_table1(std::vector<K>{K::HSup}) == 1);
    CHECK(match_table1(std::vector<K>{K::LPC, K::PD, K::HSub}) == 25);
    CHECK(match_table1(std::vector<K>{K::HSup, K::T, K::NS, K::PD}) == 7);
    CHECK(match_table1(std::vector<K>{K::HSup, K::SN}) == 2);
    CHECK(match_table1(std::vector<K>{K::HSup, K::T, K::PD}) == 6);
    // parenthesized SN is optional
    CHECK(match_table1(std::vector<K>{K::SN, K::HSup, K::T, K::PD}) == 3);
    CHECK(match_table1(std::vector<K>{K::SN, K::HSub, K::PD}) == 15);
    CHECK(match_table1(std::vector<K>{K::HSub, K::PD}) == 18);
    CHECK_FALSE(match_table1(std::vector<K>{}));
    CHECK_FALSE(match_table1(std::vector<K>{K::PD, K::HSup}));
    CHECK_FALSE(match_table1(std::vector<K>{K::HSub, K::T}));

    // "±" pairs swap only when indistinguishable.
    CHECK(match_table1(events({{K::HSup, 0.0012}, {K::NS, 0.0015}, {K::T, 0.000155 + 0.0015 - 0.000155 + 5e-6}, {K::PD, 0.002}})) == 7);
    CHECK_FALSE(match_table1(events({{K::HSup, 0.0012}, {K::NS, 0.0015}, {K::T, 0.0016}, {K::PD, 0.002}})));
    // "-" pairs never swap
    CHECK_FALSE(match_table1(events({{K::HSup, 0.0012}, {K::T, 0.0015}, {K::PD, 0.0016}, {K::NS, 0.0016 + 1e-7}})));
    // S-proximal annotations are ignored
    CHECK(match_table1(events({{K::SProximal, -0.002}, {K::HSub, 0.0002}})) == 13);
}

TEST_CASE("event names round-trip")
{
    for (const K k : {K::HSup, K::HSub, K::SN, K::PD, K::NS, K::LPC, K::T, K::SProximal})
        CHECK(event_kind_from_string(to_string(k)) == k);
    for (const CurveKind k : {CurveKind::SN, CurveKind::Hopf, CurveKind::PD, CurveKind::LPC, CurveKind::NS, CurveKind::T})
        CHECK(curve_kind_from_string(to_string(k)) == k);
}

TEST_CASE("sweep at the reference parameters")
{
    const SequenceRecord& r = reference_sweep();
    REQUIRE(r.table1_match);
    CHECK(*r.table1_match == 7);
    CHECK(r.failures.empty());
    CHECK(std::is_sorted(r.events.begin(), r.events.end(),
                         [](const auto& a, const auto& b) { return a.mu < b.mu; }));
    REQUIRE(r.events.size() == 4);
    // Values read off the one-parameter sequence.
    CHECK(r.events[0].mu == doctest::Approx(0.0012457).epsilon(1e-3));
    CHECK(r.events[1].mu == doctest::Approx(0.00156).epsilon(2e-2));
    CHECK(r.events[3].mu == doctest::Approx(0.00219).epsilon(2e-2));
}

TEST_CASE("sweep events re-verify in their own modules")
{
    const SequenceRecord& r = reference_sweep();
    for (const auto& e : r.events) {
        CAPTURE(to_string(e.kind));
        switch (e.kind) {
        case K::HSup:
        case K::HSub: {
            const HopfReport h = hopf_locus(r.a_cap, r.b_cap, r.c_cap);
            CHECK(h.mu_star == doctest::Approx(e.mu).epsilon(1e-12));
            CHECK(h.residual < 1e-10);
            CHECK((h.l1 < 0) == (e.kind == K::HSup));
            break;
        }
        case K::T: {
            const double w = e.metadata.at("bracket_width").get<double>();
            CHECK(w <= 1e-6);
            CHECK(classify_fate({e.mu - w, r.a_cap, r.b_cap, r.c_cap}).verdict == Verdict::AllBounded);
            CHECK(classify_fate({e.mu + w, r.a_cap, r.b_cap, r.c_cap}).escape_present());
            break;
        }
        case K::PD: {
            const auto m = multipliers(e);
            CHECK(std::any_of(m.begin(), m.end(), [](Complex z) { return std::abs(z + 1.0) < 0.05; }));
            break;
        }
        case K::NS: {
            const auto m = multipliers(e);
            CHECK(std::any_of(m.begin(), m.end(),
                              [](Complex z) { return std::abs(z.imag()) > 1e-3 && std::abs(std::abs(z) - 1.0) < 0.05; }));
            break;
        }
        default:
            break;
        }
    }
}

TEST_CASE("empty window")
{
    const SequenceRecord r = sweep_mu(-0.05, 0.001, 0.1, 0.1, 0.2);
    CHECK(r.events.empty());
    CHECK_FALSE(r.table1_match);
    REQUIRE(r.unmatched_reason);
    CHECK(*r.unmatched_reason == "no events");
}

TEST_CASE("A grid: every sequence matches a row or explains itself")
{
    bool subcritical_row = false;
    for (int i = 0; i < 12; ++i) {
        const double a = -0.12 + 0.14 * i / 11.0;
        const SequenceRecord r = sweep_mu(a, 0.001, 0.1, -0.005, 0.006);
        CAPTURE(a);
        CHECK((r.table1_match.has_value() || (r.unmatched_reason && !r.unmatched_reason->empty())));
        CHECK(r.table1_match.has_value() != r.unmatched_reason.has_value());
        if (r.table1_match && *r.table1_match >= 13) {
            subcritical_row = true;
            const auto h = std::find_if(r.events.begin(), r.events.end(),
                                        [](const auto& e) { return e.kind == K::HSup || e.kind == K::HSub; });
            REQUIRE(h != r.events.end());
            CHECK(h->kind == K::HSub);
            CHECK(hopf_locus(a, 0.001, 0.1).l1 > 0.0);
        }
    }
    CHECK(subcritical_row);
}

TEST_CASE("SN curve is the parabola")
{
    std::vector<double> grid;
    for (int i = 0; i <= 40; ++i)
        grid.push_back(-0.15 + 0.005 * i);
    const Polyline sn = trace_curve(CurveKind::SN, 0.001, 0.1, grid, -10.0, 10.0);
    REQUIRE(sn.points.size() == grid.size());
    for (const auto& p : sn.points)
        CHECK(p.mu == doctest::Approx((p.a_cap + 0.1) * (p.a_cap + 0.1) / 0.004).epsilon(1e-14));
    CHECK_THROWS_AS(trace_curve(CurveKind::SN, 0.0, 0.1, grid, -1.0, 1.0), DegenerateB);
}

TEST_CASE("Hopf curve follows the leading-order formula away from the zero-Hopf point")
{
    std::vector<double> grid;
    for (int i = 0; i <= 20; ++i)
        grid.push_back(-0.15 + 0.01 * i);
    const Polyline h = trace_curve(CurveKind::Hopf, 0.001, 0.1, grid, -1.0, 1.0);
    CHECK(h.points.size() + h.gaps.size() == grid.size());
    for (const auto& p : h.points) {
        const double lead = -p.a_cap * p.a_cap / 2 - p.a_cap * 0.1 / 2;
        CHECK(std::abs(p.mu - lead) <= 0.15 * (std::pow(std::abs(p.a_cap), 3) + p.a_cap * p.a_cap * 0.1) + 2e-4);
    }
    const auto gh = std::count_if(h.annotations.begin(), h.annotations.end(),
                                  [](const auto& a) { return a.label == "GH"; });
    CHECK(gh == 2);
}

TEST_CASE("Hopf and SN loci meet at the zero-Hopf point")
{
    for (const double b : {0.001, 0.005, 0.01, -0.001, -0.01}) {
        const double c = 0.1;
        double best_a = 0.0, best = 1e300;
        for (int i = -400; i <= 400; ++i) {
            const double a = c * (b - 1) + 2.5e-5 * i;
            try {
                const double d = std::abs(hopf_locus(a, b, c).mu_star - saddle_node_locus(a, b, c).mu);
                if (d < best) {
                    best = d;
                    best_a = a;
                }
            } catch (const NotFound&) {
            }
        }
        CAPTURE(b);
        CHECK(std::abs(best_a - c * (b - 1)) < 1e-3);
        CHECK(zero_hopf_A(b, c) == doctest::Approx(c * (b - 1)));
    }
}

TEST_CASE("NS curve ends near the zero-Hopf point for B < 0")
{
    const double b = -0.01, c = 0.1, zh = c * (b - 1);
    const Polyline ns = trace_curve(CurveKind::NS, b, c, {-0.1, -0.09, -0.08}, -0.05, 0.05);
    REQUIRE(ns.points.size() == 3);
    const double mu_zh = saddle_node_locus(zh, b, c).mu;
    // distance to the ZH point shrinks along the curve
    double prev = 1e300;
    for (auto it = ns.points.rbegin(); it != ns.points.rend(); ++it) {
        const double d = std::hypot(it->mu - mu_zh, it->a_cap - zh);
        CHECK(d < prev);
        prev = d;
    }
    CHECK(prev < 2e-3);
}

TEST_CASE("canard lines")
{
    const auto l = canard_lines(0.001, 0.1);
    REQUIRE(l.size() == 2);
    CHECK(l[0] == doctest::Approx(-0.0887298).epsilon(1e-6));
    CHECK(l[1] == doctest::Approx(-0.0112702).epsilon(1e-6));
    for (const double a : l)
        CHECK(std::abs(a * a + a * 0.1 + 0.001) < 1e-15);
    const auto d = canard_lines(0.0025, 0.1);
    REQUIRE(d.size() == 1);
    CHECK(d[0] == doctest::Approx(-0.05));
    CHECK(canard_lines(0.01, 0.1).empty());
}

TEST_CASE("region classification")
{
    CHECK_THROWS_AS(region_classify(0.0, 0.1), DegenerateB);
    const RegionInfo ia = region_classify(-0.01, 0.1);
    CHECK(ia.family == "I");
    CHECK(std::find(ia.candidates.begin(), ia.candidates.end(), "Ia") != ia.candidates.end());
    const RegionInfo ii = region_classify(0.001, 0.1);
    CHECK(ii.gh_indicator == doctest::Approx(0.002));
    CHECK(ii.canard_indicator == doctest::Approx(0.006));
    CHECK(std::find(ii.candidates.begin(), ii.candidates.end(), "IIa") != ii.candidates.end());
    CHECK(ii.sign_b == 1);
    CHECK(ii.sign_c == 1);
    const RegionInfo viii = region_classify(0.02, 0.1);
    CHECK(viii.canard_indicator < 0);
    CHECK(std::find(viii.candidates.begin(), viii.candidates.end(), "VIIIa") != viii.candidates.end());
    CHECK(region_classify(0.001, -0.1).sign_c == -1);
}

TEST_CASE("orbit flip points")
{
    const auto f = orbit_flip_point(-0.01, -0.1);
    REQUIRE(f.size() == 2);
    const bool found = std::any_of(f.begin(), f.end(), [](const OrbitFlipPoint& p) {
        return std::abs(p.mu + 0.0025) < 1e-15 && std::abs(p.a_cap - 0.161803) < 1e-6 && p.conjectured;
    });
    CHECK(found);
    const auto one = orbit_flip_point(0.0025, 0.1);
    REQUIRE(one.size() == 1);
    CHECK(one[0].a_cap == doctest::Approx(-0.05));
    CHECK(orbit_flip_point(0.01, 0.1).empty());
}

TEST_CASE("C to -C: locus tables map under A to -A")
{
    const double b = 0.001;
    for (const double c : {0.1, 0.05}) {
        for (int i = -10; i <= 10; ++i) {
            const double a = 0.015 * i;
            CHECK(saddle_node_locus(a, b, c).mu == doctest::Approx(saddle_node_locus(-a, b, -c).mu).epsilon(1e-13));
            bool plus = true, minus = true;
            HopfReport hp, hm;
            try {
                hp = hopf_locus(a, b, c);
            } catch (const NotFound&) {
                plus = false;
            }
            try {
                hm = hopf_locus(-a, b, -c);
            } catch (const NotFound&) {
                minus = false;
            }
            CAPTURE(a);
            CAPTURE(c);
            REQUIRE(plus == minus);
            if (!plus)
                continue;
            CHECK(hp.mu_star == doctest::Approx(hm.mu_star).epsilon(1e-10));
            CHECK(hp.omega == doctest::Approx(hm.omega).epsilon(1e-8));
            // time reversal swaps the stability of the bifurcating orbit
            CHECK(hp.l1 * hm.l1 <= 0.0);
        }
        auto lp = canard_lines(b, c), lm = canard_lines(b, -c);
        REQUIRE(lp.size() == lm.size());
        std::reverse(lm.begin(), lm.end());
        for (std::size_t i = 0; i < lp.size(); ++i)
            CHECK(lp[i] == doctest::Approx(-lm[i]));
    }
}

TEST_CASE("sequence record JSON")
{
    const SequenceRecord& r = reference_sweep();
    const nlohmann::json j = to_json(r);
    CHECK(j.at("table1_match") == 7);
    CHECK(j.at("events").size() == r.events.size());
    CHECK(j.at("events")[0].at("kind") == "H_sup");
    CHECK(to_json(region_classify(0.001, 0.1)).at("family") == "II");
}
