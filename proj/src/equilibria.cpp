#include "singhopf/equilibria.hpp"

#include "singhopf/errors.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace singhopf {

CharPoly characteristic_polynomial(const Mat3& j)
{
    const double trace = j.trace();
    const double minors = j(0, 0) * j(1, 1) - j(0, 1) * j(1, 0) + j(0, 0) * j(2, 2) - j(0, 2) * j(2, 0) +
                          j(1, 1) * j(2, 2) - j(1, 2) * j(2, 1);
    return {-trace, minors, -j.determinant()};
}

Spectrum cubic_roots(const CharPoly& p)
{
    Mat3 companion;
    companion << -p.c2, -p.c1, -p.c0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0;
    Eigen::EigenSolver<Mat3> es(companion, false);
    Spectrum roots;
    for (int i = 0; i < 3; ++i) {
        Complex z = es.eigenvalues()[i];
        // Newton polish on the monic cubic.
        for (int it = 0; it < 3; ++it) {
            const Complex dp = (3.0 * z + 2.0 * p.c2) * z + p.c1;
            if (std::abs(dp) == 0.0)
                break;
            const Complex step = p(z) / dp;
            if (!std::isfinite(step.real()) || !std::isfinite(step.imag()))
                break;
            const Complex zn = z - step;
            if (std::abs(p(zn)) > std::abs(p(z)))
                break;
            z = zn;
        }
        roots[i] = z;
    }
    // Conjugate pairs stay exact conjugates after polishing.
    for (int i = 0; i < 3; ++i)
        for (int k = i + 1; k < 3; ++k)
            if (roots[i].imag() != 0.0 && std::abs(roots[i] - std::conj(roots[k])) < 1e-8 * (1.0 + std::abs(roots[i]))) {
                const Complex avg = 0.5 * (roots[i] + std::conj(roots[k]));
                roots[i] = avg;
                roots[k] = std::conj(avg);
            }
    std::sort(roots.begin(), roots.end(), [](Complex a, Complex b) {
        if (a.real() != b.real())
            return a.real() > b.real();
        return a.imag() > b.imag();
    });
    return roots;
}

std::string_view to_string(StabilityClass c)
{
    switch (c) {
    case StabilityClass::StableNode:
        return "stable_node";
    case StabilityClass::StableFocus:
        return "stable_focus";
    case StabilityClass::SaddleFocus1U:
        return "saddle_focus_1u";
    case StabilityClass::SaddleFocus2U:
        return "saddle_focus_2u";
    case StabilityClass::Saddle:
        return "saddle";
    case StabilityClass::UnstableNodeOrFocus:
        return "unstable_node_or_focus";
    case StabilityClass::Degenerate:
        return "degenerate";
    }
    return "unknown";
}

StabilityClass classify(const Spectrum& ev, double zero_tol)
{
    int unstable = 0;
    bool complex_stable = false, complex_unstable = false;
    for (const Complex& z : ev) {
        const double scale = std::max(1.0, std::abs(z));
        if (std::abs(z.real()) <= zero_tol * scale)
            return StabilityClass::Degenerate;
        const bool is_complex = std::abs(z.imag()) > zero_tol * scale;
        if (z.real() > 0) {
            ++unstable;
            complex_unstable = complex_unstable || is_complex;
        } else {
            complex_stable = complex_stable || is_complex;
        }
    }
    switch (unstable) {
    case 0:
        return complex_stable ? StabilityClass::StableFocus : StabilityClass::StableNode;
    case 1:
        return complex_stable ? StabilityClass::SaddleFocus1U : StabilityClass::Saddle;
    case 2:
        return complex_unstable ? StabilityClass::SaddleFocus2U : StabilityClass::Saddle;
    default:
        return StabilityClass::UnstableNodeOrFocus;
    }
}

namespace {

EquilibriumReport report_at(const VectorField& field, double x)
{
    EquilibriumReport r;
    r.location = State(x, x * x, x);
    r.eigenvalues = cubic_roots(characteristic_polynomial(field.jacobian(r.location)));
    r.cls = classify(r.eigenvalues);
    return r;
}

} // namespace

std::vector<EquilibriumReport> find_equilibria(const ParameterSet& p)
{
    const double lin = p.a_cap + p.c_cap;
    const VectorField field = VectorField::rescaled(p);
    std::vector<double> roots;
    if (p.b_cap == 0.0) {
        if (lin == 0.0) {
            if (p.mu != 0.0)
                throw NoEquilibrium("B = A + C = 0 with mu != 0: no equilibrium");
            throw DegenerateContinuum("B = A + C = mu = 0: the whole line Y = X^2, Z = X is fixed");
        }
        roots.push_back(-p.mu / lin);
    } else {
        const double disc = lin * lin - 4.0 * p.b_cap * p.mu;
        const double scale = std::max(lin * lin, std::abs(4.0 * p.b_cap * p.mu));
        if (std::abs(disc) <= 1e-14 * scale) {
            roots.push_back(-lin / (2.0 * p.b_cap));
        } else if (disc > 0.0) {
            const double q = -0.5 * (lin + std::copysign(std::sqrt(disc), lin));
            roots.push_back(q / p.b_cap);
            roots.push_back(q != 0.0 ? p.mu / q : -roots.front());
        }
    }
    // Smaller |X| first; at A + C = 0 (up to rounding) the pair is symmetric and the root on
    // the side of A is taken as E_f (the reflection X -> -X, A -> -A maps one
    // choice to the other), so the choice does not flip with rounding.
    if (roots.size() == 2) {
        const double a = roots[0], b = roots[1];
        const bool tie = std::abs(lin) <= 1e-12 * (std::abs(p.a_cap) + std::abs(p.c_cap));
        const bool b_on_side = p.a_cap > 0.0 ? b > a : b < a;
        if (tie ? b_on_side : std::abs(b) < std::abs(a))
            std::swap(roots[0], roots[1]);
    }
    std::vector<EquilibriumReport> out;
    for (double x : roots)
        out.push_back(report_at(field, x));
    if (!out.empty())
        out.front().is_E_f = true;
    return out;
}

std::optional<EquilibriumReport> fold_equilibrium(const ParameterSet& p)
{
    auto eqs = find_equilibria(p);
    if (eqs.empty())
        return std::nullopt;
    return eqs.front();
}

Spectrum eigenvalues_at(const VectorField& field, const State& e, double residual_tol)
{
    const double residual = field(e).norm();
    if (!(residual < residual_tol))
        throw PreconditionError("eigenvalues_at: point is not an equilibrium (residual " + std::to_string(residual) +
                                ")");
    return cubic_roots(characteristic_polynomial(field.jacobian(e)));
}

State equilibrium_newton(const VectorField& field, const State& guess, double tol, int max_iter)
{
    State s = guess;
    for (int it = 0; it < max_iter; ++it) {
        const Vec3 step = field.jacobian(s).fullPivLu().solve(-field(s));
        if (!step.allFinite())
            break;
        s += step;
        if (step.norm() <= tol * (1.0 + s.norm()))
            return s;
    }
    throw NotConverged("equilibrium_newton: no convergence", {s[0], s[1], s[2]});
}

SaddleNodePoint saddle_node_locus(double a_cap, double b_cap, double c_cap)
{
    if (b_cap == 0.0)
        throw NoSaddleNode("no saddle-node bifurcation when B = 0");
    const double s = a_cap + c_cap;
    return {s * s / (4.0 * b_cap), -s / (2.0 * b_cap)};
}

std::string_view to_string(Criticality c)
{
    switch (c) {
    case Criticality::Supercritical:
        return "supercritical";
    case Criticality::Subcritical:
        return "subcritical";
    case Criticality::Degenerate:
        return "degenerate";
    }
    return "unknown";
}

Criticality criticality_of(double l1, double tol)
{
    if (std::abs(l1) <= tol)
        return Criticality::Degenerate;
    return l1 < 0.0 ? Criticality::Supercritical : Criticality::Subcritical;
}

double hopf_seed(double a_cap, double c_cap)
{
    return -0.5 * a_cap * a_cap - 0.5 * a_cap * c_cap;
}

HopfReport find_hopf(const std::function<VectorField(double)>& field,
                     const std::function<std::optional<State>(double)>& branch, double lo, double hi, double seed)
{
    // NaN marks parameters without a tracked equilibrium or with c1 <= 0.
    auto residual = [&](double p) {
        const auto e = branch(p);
        if (!e)
            return std::numeric_limits<double>::quiet_NaN();
        const CharPoly cp = characteristic_polynomial(field(p).jacobian(*e));
        if (!(cp.c1 > 0.0))
            return std::numeric_limits<double>::quiet_NaN();
        return cp.hopf_residual();
    };

    constexpr int n = 400;
    std::optional<std::pair<double, double>> best;
    double best_dist = std::numeric_limits<double>::infinity();
    double p_prev = lo, r_prev = residual(lo);
    for (int i = 1; i <= n; ++i) {
        const double p = lo + (hi - lo) * i / n;
        const double r = residual(p);
        if (std::isfinite(r) && std::isfinite(r_prev) && (r == 0.0 || (r > 0) != (r_prev > 0))) {
            const double d = std::min(std::abs(p - seed), std::abs(p_prev - seed));
            if (d < best_dist) {
                best_dist = d;
                best = std::make_pair(p_prev, p);
            }
        }
        p_prev = p;
        r_prev = r;
    }
    if (!best)
        throw NotFound("no Routh-Hurwitz sign change in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");

    double a = best->first, b = best->second;
    double ra = residual(a), rb = residual(b);
    double root = a;
    if (ra == 0.0) {
        root = a;
    } else if (rb == 0.0) {
        root = b;
    } else {
        std::uintmax_t iters = 200;
        auto tol = [](double x, double y) { return std::abs(x - y) <= 4 * std::numeric_limits<double>::epsilon() * std::max(std::abs(x), std::abs(y)) + 1e-300; };
        auto r = boost::math::tools::toms748_solve([&](double p) {
            const double v = residual(p);
            return std::isfinite(v) ? v : 0.0;
        }, a, b, ra, rb, tol, iters);
        root = std::abs(residual(r.first)) < std::abs(residual(r.second)) ? r.first : r.second;
    }

    HopfReport h;
    h.mu_star = root;
    h.location = *branch(root);
    const VectorField f = field(root);
    const CharPoly cp = characteristic_polynomial(f.jacobian(h.location));
    h.residual = cp.hopf_residual();
    h.omega = std::sqrt(cp.c1);
    h.l1 = first_lyapunov(f, h.location, 1e-6);
    h.criticality = criticality_of(h.l1);
    return h;
}

HopfReport hopf_locus(double a_cap, double b_cap, double c_cap)
{
    const double seed = hopf_seed(a_cap, c_cap);
    auto field = [&](double mu) { return VectorField::rescaled({mu, a_cap, b_cap, c_cap}); };
    auto branch = [&](double mu) -> std::optional<State> {
        const ParameterSet p{mu, a_cap, b_cap, c_cap};
        if (b_cap == 0.0 && a_cap + c_cap == 0.0)
            return std::nullopt;
        const auto e = fold_equilibrium(p);
        if (!e)
            return std::nullopt;
        return e->location;
    };
    double half = 10.0 * std::abs(seed) + 1e-3;
    for (int attempt = 0; attempt < 4; ++attempt, half *= 4.0) {
        try {
            return find_hopf(field, branch, seed - half, seed + half, seed);
        } catch (const NotFound&) {
        }
    }

    // A Hopf point sitting on the saddle-node (the zero-Hopf case) is the end
    // of the E_f branch in mu, so no sign change is seen there. Along the
    // equilibrium curve parametrized by X the condition has a simple root.
    if (b_cap == 0.0)
        throw NotFound("hopf_locus: no Hopf point on the E_f branch");
    const double x_sn = -(a_cap + c_cap) / (2.0 * b_cap);
    auto mu_of = [&](double x) { return -b_cap * x * x - (a_cap + c_cap) * x; };
    auto residual = [&](double x) {
        const CharPoly cp = characteristic_polynomial(field(mu_of(x)).jacobian(State(x, x * x, x)));
        return cp.hopf_residual();
    };
    const double tol_x = 1e-9 * (1.0 + std::abs(x_sn));
    const double lo = std::abs(x_sn) < 1e-300 ? -tol_x : std::min(0.0, x_sn) - tol_x;
    const double hi = std::abs(x_sn) < 1e-300 ? tol_x : std::max(0.0, x_sn) + tol_x;
    double xa = lo, ra = residual(lo);
    constexpr int n = 200;
    for (int i = 1; i <= n; ++i) {
        const double xb = lo + (hi - lo) * i / n;
        const double rb = residual(xb);
        if (ra == 0.0 || (ra > 0) != (rb > 0)) {
            double x = xa;
            if (ra != 0.0) {
                std::uintmax_t iters = 200;
                auto tol = [](double u, double v) { return std::abs(u - v) <= 1e-15 * std::max(1.0, std::abs(u)); };
                auto r = boost::math::tools::toms748_solve(residual, xa, xb, ra, rb, tol, iters);
                x = std::abs(residual(r.first)) < std::abs(residual(r.second)) ? r.first : r.second;
            }
            HopfReport h;
            h.mu_star = mu_of(x);
            h.location = State(x, x * x, x);
            const VectorField f = field(h.mu_star);
            const CharPoly cp = characteristic_polynomial(f.jacobian(h.location));
            if (!(cp.c1 > 0.0))
                break;
            h.residual = cp.hopf_residual();
            h.omega = std::sqrt(cp.c1);
            try {
                h.l1 = first_lyapunov(f, h.location, 1e-6);
            } catch (const PreconditionError&) {
                h.l1 = 0.0;
            }
            if (!std::isfinite(h.l1))
                h.l1 = 0.0;
            h.criticality = criticality_of(h.l1);
            return h;
        }
        xa = xb;
        ra = rb;
    }
    throw NotFound("hopf_locus: no Hopf point on the E_f branch");
}

double first_lyapunov(const VectorField& field, const State& e, double pair_tol)
{
    using CVec = Eigen::Vector3cd;
    using CMat = Eigen::Matrix3cd;
    const Mat3 a = field.jacobian(e);

    Eigen::ComplexEigenSolver<CMat> right(a.cast<Complex>());
    int iq = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i) {
        const Complex z = right.eigenvalues()[i];
        if (z.imag() > 0 && std::abs(z.real()) < best) {
            best = std::abs(z.real());
            iq = i;
        }
    }
    if (iq < 0 || best > pair_tol * std::max(1.0, std::abs(right.eigenvalues()[iq])))
        throw PreconditionError("first_lyapunov: no purely imaginary eigenvalue pair");
    const double omega = right.eigenvalues()[iq].imag();
    const Complex iw(0.0, omega);

    // Null vectors of (A - i w) and (A^T + i w), computed from the exact shift
    // so the pair's small real part does not leak into the eigenvectors.
    auto null_vector = [](const CMat& m) {
        Eigen::JacobiSVD<CMat> svd(m, Eigen::ComputeFullV);
        return CVec(svd.matrixV().col(2));
    };
    CVec q = null_vector(a.cast<Complex>() - iw * CMat::Identity());
    CVec p = null_vector(a.transpose().cast<Complex>() + iw * CMat::Identity());
    q.normalize();
    const Complex pq = p.dot(q); // conj(p)^T q
    p /= std::conj(pq);

    const double d2 = field.second_derivative(e);
    const double d3 = field.third_derivative(e);
    auto bform = [d2](const CVec& x, const CVec& y) {
        CVec r = CVec::Zero();
        r[0] = d2 * x[0] * y[0];
        return r;
    };
    auto cform = [d3](const CVec& x, const CVec& y, const CVec& z) {
        CVec r = CVec::Zero();
        r[0] = d3 * x[0] * y[0] * z[0];
        return r;
    };

    const CVec qb = q.conjugate();
    const CMat ac = a.cast<Complex>();
    const CVec h11 = ac.fullPivLu().solve(bform(q, qb));
    const CVec h20 = (2.0 * iw * CMat::Identity() - ac).fullPivLu().solve(bform(q, q));
    const Complex g = p.dot(cform(q, q, qb)) - 2.0 * p.dot(bform(q, h11)) + p.dot(bform(qb, h20));
    return g.real() / (2.0 * omega);
}

double zero_hopf_A(double b_cap, double c_cap)
{
    return c_cap * (b_cap - 1.0);
}

std::vector<GeneralizedHopfPoint> generalized_hopf_A(double b_cap, double c_cap, bool refine)
{
    std::vector<GeneralizedHopfPoint> out;
    const double disc = c_cap * c_cap - 8.0 * b_cap;
    if (disc < 0.0)
        return out;
    const double sq = std::sqrt(disc);
    std::vector<double> approx = disc == 0.0 ? std::vector<double>{-0.5 * c_cap}
                                             : std::vector<double>{0.5 * (-c_cap + sq), 0.5 * (-c_cap - sq)};
    auto l1_at = [&](double a) { return hopf_locus(a, b_cap, c_cap).l1; };

    for (double a0 : approx) {
        GeneralizedHopfPoint gh;
        gh.a_approx = a0;
        if (refine) {
            // Bracket the sign change of l1 near the asymptotic root.
            const double width = std::max(0.25 * sq, 2e-3);
            constexpr int n = 40;
            std::optional<std::pair<double, double>> bracket;
            double best = std::numeric_limits<double>::infinity();
            double prev_a = a0 - width;
            double prev = std::numeric_limits<double>::quiet_NaN();
            try {
                prev = l1_at(prev_a);
            } catch (const Error&) {
            }
            for (int i = 1; i <= n; ++i) {
                const double a = a0 - width + 2.0 * width * i / n;
                double v = std::numeric_limits<double>::quiet_NaN();
                try {
                    v = l1_at(a);
                } catch (const Error&) {
                }
                if (std::isfinite(v) && std::isfinite(prev) && (v > 0) != (prev > 0)) {
                    const double d = std::abs(0.5 * (a + prev_a) - a0);
                    if (d < best) {
                        best = d;
                        bracket = std::make_pair(prev_a, a);
                    }
                }
                prev_a = a;
                prev = v;
            }
            if (bracket) {
                std::uintmax_t iters = 200;
                auto tol = [](double x, double y) { return std::abs(x - y) <= 1e-15 * std::max(1.0, std::abs(x)); };
                auto r = boost::math::tools::toms748_solve(l1_at, bracket->first, bracket->second, tol, iters);
                const double l1a = l1_at(r.first), l1b = l1_at(r.second);
                gh.a_refined = std::abs(l1a) < std::abs(l1b) ? r.first : r.second;
                gh.l1_at_refined = std::min(std::abs(l1a), std::abs(l1b)) == std::abs(l1a) ? l1a : l1b;
            }
        }
        out.push_back(gh);
    }
    return out;
}

} // namespace singhopf
