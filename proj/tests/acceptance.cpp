// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "singhopf/diagrams.hpp"
#include "singhopf/equilibria.hpp"
#include "singhopf/koper.hpp"
#include "singhopf/models.hpp"
#include "singhopf/periodic.hpp"
#include "singhopf/tangency.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace singhopf;

namespace {

const double kA = -0.05, kB = 0.001, kC = 0.1;

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

bool within(double v, double want, double tol)
{
    return std::abs(v - want) <= tol;
}

std::string fmt(const char* f, double a)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// Cached so criteria 3, 4 and 9 share one sweep.
const SequenceRecord& reference_sweep()
{
    static const SequenceRecord r = sweep_mu(kA, kB, kC, 0.0, 0.003);
    return r;
}

const KoperScanResult& koper()
{
    static const KoperScanResult r = koper_scan(0.1, 1.0, -10.0, -9.0, -5.0);
    return r;
}

std::optional<double> event_mu(EventKind k)
{
    for (const auto& e : reference_sweep().events)
        if (e.kind == k)
            return e.mu;
    return std::nullopt;
}

Outcome c1()
{
    const auto t0 = Clock::now();
    const HopfReport h = hopf_locus(kA, kB, kC);
    const double dt = std::chrono::duration<double>(Clock::now() - t0).count();
    return {within(h.mu_star, 0.001246, 5e-6) && dt < 1.0, "mu*=" + fmt("%.7f", h.mu_star) + fmt(" in %.3fs", dt)};
}

Outcome c2()
{
    const TangencyPoint t = find_tangency_mu(kA, kB, kC, 0.0014, 0.0017, 1e-6);
    return {within(t.mu, 0.00156, 1e-4), "mu_T=" + fmt("%.7f", t.mu) + fmt(" bracket %.1e", t.bracket_width)};
}

Outcome branch_event(EventKind k, double want)
{
    const auto mu = event_mu(k);
    if (!mu)
        return {false, "no event on the branch"};
    return {within(*mu, want, 5e-5), "mu=" + fmt("%.7f", *mu)};
}

Outcome c3()
{
    const auto t0 = Clock::now();
    SweepOptions o;
    o.with_tangency = false;
    const SequenceRecord r = sweep_mu(kA, kB, kC, 0.0, 0.003, o);
    const double dt = std::chrono::duration<double>(Clock::now() - t0).count();
    Outcome out{false, "no NS event"};
    for (const auto& e : r.events)
        if (e.kind == EventKind::NS)
            out = {within(e.mu, 0.0017829, 5e-5) && dt < 300.0, "mu_NS=" + fmt("%.7f", e.mu)};
    out.detail += fmt(", branch in %.1fs", dt);
    return out;
}

Outcome c4()
{
    return branch_event(EventKind::PD, 0.0021910);
}

Outcome c5()
{
    const auto at = [](double mu) { return classify_fate(ParameterSet{mu, kA, kB, kC}); };
    const FateClassification a = at(0.0014975), b = at(0.0015709), c = at(0.0017533);
    const bool ok_a = a.verdict == Verdict::AllBounded;
    const bool ok_b = b.verdict == Verdict::SomeEscape;
    const bool ok_c = c.verdict == Verdict::SomeEscape && c.n_escaped * 10 >= 9 * c.n_grid;
    std::ostringstream s;
    s << "0.0014975 " << to_string(a.verdict) << ", 0.0015709 " << to_string(b.verdict) << " (" << b.n_escaped << "/"
      << b.n_grid << " escaped), 0.0017533 " << to_string(c.verdict) << " (" << c.n_escaped << "/" << c.n_grid
      << " escaped)";
    return {ok_a && ok_b && ok_c, s.str()};
}

Outcome c6()
{
    const KoperScanResult& r = koper();
    const bool ok = within(r.lambda_hopf, -7.670, 0.01) && within(r.lambda_pd, -7.461, 0.01) &&
                    within(r.lambda_lpc, -6.235, 0.02) && within(r.periods[0], 0.64, 0.05) &&
                    within(r.periods[1], 0.82, 0.05) && within(r.periods[2], 1.67, 0.05);
    std::ostringstream s;
    s << "lambda H/PD/LPC " << fmt("%.4f", r.lambda_hopf) << " " << fmt("%.4f", r.lambda_pd) << " "
      << fmt("%.4f", r.lambda_lpc) << ", periods " << fmt("%.4f", r.periods[0]) << " " << fmt("%.4f", r.periods[1])
      << " " << fmt("%.4f", r.periods[2]);
    return {ok, s.str()};
}

Outcome c7()
{
    const KoperScanResult& r = koper();
    if (!r.lambda_tangency)
        return {false, "no tangency in the scan"};
    const double t = *r.lambda_tangency;
    const bool ok = within(t, -7.539, 0.02) && r.lambda_hopf < t && t < r.lambda_pd;
    return {ok, "lambda_T=" + fmt("%.4f", t)};
}

Outcome c8()
{
    const MmoSignature m = detect_mmo(0.1, 1.0, -10.0, -7.5, 2000.0);
    const bool every = !m.small_counts.empty() &&
                       std::all_of(m.small_counts.begin(), m.small_counts.end(), [](int s) { return s >= 1; });
    return {m.large_count >= 3 && every,
            std::to_string(m.large_count) + " large, pattern " + m.pattern.substr(0, m.pattern.find(' '))};
}

Outcome c9()
{
    const SequenceRecord& r = reference_sweep();
    std::string seq;
    for (const auto& e : r.events)
        seq += (seq.empty() ? "" : " - ") + std::string(to_string(e.kind));
    return {r.table1_match == 7, seq + (r.table1_match ? " -> row " + std::to_string(*r.table1_match) : " -> no row")};
}

// Property suite.

bool quadratic_oracle()
{
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (int i = 0; i < 1000; ++i) {
        ParameterSet p{0.01 * u(rng), u(rng), u(rng), u(rng)};
        if (std::abs(p.b_cap) < 1e-6)
            p.b_cap = 1e-3;
        const long double b = p.b_cap, q = static_cast<long double>(p.a_cap) + p.c_cap, c = p.mu;
        const long double disc = q * q - 4 * b * c;
        std::vector<long double> ref;
        if (disc >= 0) {
            const long double t = -0.5L * (q + (q >= 0 ? std::sqrt(disc) : -std::sqrt(disc)));
            ref = {t / b, c / t};
            std::sort(ref.begin(), ref.end());
        }
        std::vector<double> xs;
        for (const auto& e : find_equilibria(p))
            xs.push_back(e.location[0]);
        std::sort(xs.begin(), xs.end());
        if (xs.size() != ref.size())
            return false;
        for (std::size_t k = 0; k < xs.size(); ++k)
            if (std::abs(xs[k] - static_cast<double>(ref[k])) > 1e-12 * std::max(1.0L, std::abs(ref[k])))
                return false;
    }
    return true;
}

double trace_integral(const VectorField& f, const PeriodicOrbit& o)
{
    namespace ode = boost::numeric::odeint;
    using S = std::array<double, 4>;
    S x{o.anchor[0], o.anchor[1], o.anchor[2], 0.0};
    auto rhs = [&](const S& in, S& out, double) {
        const State s(in[0], in[1], in[2]);
        const Vec3 v = f(s);
        out = {v[0], v[1], v[2], f.jacobian(s).trace()};
    };
    ode::integrate_adaptive(ode::make_controlled<ode::runge_kutta_dopri5<S>>(1e-12, 1e-12), rhs, x, 0.0, o.period,
                            1e-3);
    return x[3];
}

// Trivial multiplier on every point of the branch, Liouville on a subset.
std::pair<bool, bool> floquet_checks()
{
    const ParameterSet p0{0.0013, kA, kB, kC};
    const auto g = locate_gamma(p0);
    if (!g)
        return {false, false};
    ContinuationOptions opt;
    opt.detect_events = false;
    const OrbitBranch br = continue_orbit_in_mu(p0, *g, 0.0021, opt);
    bool trivial = br.points.size() > 5, liouville = trivial;
    for (std::size_t i = 0; i < br.points.size(); ++i) {
        const PeriodicOrbit& o = br.points[i];
        Eigen::EigenSolver<Mat3> es(o.monodromy);
        double closest = 1e300;
        for (int k = 0; k < 3; ++k)
            closest = std::min(closest, std::abs(es.eigenvalues()[k] - Complex(1.0, 0.0)));
        trivial = trivial && closest < 1e-5;
        if (i % 5 == 0) {
            const VectorField f = VectorField::rescaled({o.param, kA, kB, kC});
            const double want = std::exp(trace_integral(f, o));
            liouville = liouville && std::abs(o.monodromy.determinant() - want) <= 1e-5 * std::abs(want);
        }
    }
    return {trivial, liouville};
}

bool jacobians()
{
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-2.0, 2.0), pos(0.05, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const VectorField fields[] = {
            VectorField::rescaled({u(rng), u(rng), u(rng), u(rng)}),
            VectorField(ModelId::UnscaledQuadratic, UnscaledParameterSet{u(rng), u(rng), u(rng), u(rng), pos(rng)}),
            VectorField(ModelId::RescaledCubic, RescaledCubicParameters{{u(rng), u(rng), u(rng), u(rng)}, pos(rng)}),
            VectorField::koper({pos(rng), pos(rng), -10.0 * pos(rng), 10 * u(rng)})};
        for (const VectorField& f : fields) {
            const State s(u(rng), u(rng), u(rng));
            const Mat3 j = f.jacobian(s);
            for (int c = 0; c < 3; ++c) {
                const Vec3 e = Vec3::Unit(c) * 1e-6;
                const Vec3 fd = (f(s + e) - f(s - e)) / 2e-6;
                for (int r = 0; r < 3; ++r)
                    if (std::abs(fd[r] - j(r, c)) > 1e-5 * std::max(1.0, std::abs(j(r, c))))
                        return false;
            }
        }
    }
    return true;
}

bool scaling()
{
    IntegratorConfig cfg{1e-10, 1e-12, std::numeric_limits<double>::infinity(), 1.0, 50'000'000, false};
    for (const double eps : {0.1, 0.01}) {
        const UnscaledParameterSet q{0.2 * eps * eps, -0.05 * std::sqrt(eps), 0.001, 0.1 * std::sqrt(eps), eps};
        const State s0(0.02, 0.001, -0.01);
        IntegratorConfig c1 = cfg, c2 = cfg;
        c1.t_max = 0.5;
        c2.t_max = 0.5 * time_dilation(eps);
        const Trajectory a = integrate(VectorField(ModelId::UnscaledQuadratic, q), s0, c1);
        const Trajectory b =
            integrate(VectorField::rescaled(rescale_to_capital(q)), state_map(s0, eps, MapDirection::ToRescaled), c2);
        if ((state_map(a.final_state, eps, MapDirection::ToRescaled) - b.final_state).lpNorm<Eigen::Infinity>() >= 1e-6)
            return false;
    }
    return true;
}

double amplitude_exponent()
{
    const HopfReport h = hopf_locus(kA, kB, kC);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double ds[] = {1e-9, 1e-8, 1e-7};
    for (const double d : ds) {
        const double mu = h.mu_star + d;
        const auto g = locate_gamma({mu, kA, kB, kC});
        if (!g)
            return 0.0;
        const Trajectory t = sample_orbit(VectorField::rescaled({mu, kA, kB, kC}), *g);
        double lo = 1e300, hi = -1e300;
        for (const State& s : t.states) {
            lo = std::min(lo, s[0]);
            hi = std::max(hi, s[0]);
        }
        const double x = std::log(d), y = std::log(hi - lo);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = 3;
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Outcome c10()
{
    const auto t0 = Clock::now();
    const bool quad = quadratic_oracle();
    const auto [trivial, liouville] = floquet_checks();
    const bool jac = jacobians();
    const bool scal = scaling();
    const double slope = amplitude_exponent();
    const bool amp = within(slope, 0.5, 0.05);
    const double dt = std::chrono::duration<double>(Clock::now() - t0).count();
    std::ostringstream s;
    auto mark = [](bool b) { return b ? "ok" : "FAILED"; };
    s << "quadratic oracle " << mark(quad) << ", trivial multiplier " << mark(trivial) << ", Liouville "
      << mark(liouville) << ", Jacobians " << mark(jac) << ", scaling " << mark(scal) << ", amplitude exponent "
      << fmt("%.3f", slope) << fmt(", %.1fs", dt);
    return {quad && trivial && liouville && jac && scal && amp && dt < 120.0, s.str()};
}

} // namespace

int main()
{
    const std::function<Outcome()> criteria[] = {c1, c2, c3, c4, c5, c6, c7, c8, c9, c10};
    int failed = 0;
    for (int i = 0; i < 10; ++i) {
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = criteria[i]();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double dt = std::chrono::duration<double>(Clock::now() - t0).count();
        failed += !o.pass;
        std::printf("criterion %2d: %s  %s  [%.1fs]\n", i + 1, o.pass ? "PASS" : "FAIL", o.detail.c_str(), dt);
        std::fflush(stdout);
    }
    std::printf("%d of 10 criteria passed\n", 10 - failed);
    return failed == 0 ? 0 : 1;
}
