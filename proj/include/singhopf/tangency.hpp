#pragma once

#include "singhopf/manifolds.hpp"

#include <functional>
#include <string>
#include <vector>

namespace singhopf {

enum class Verdict { AllBounded, SomeEscape, AllEscape, Undecided };
std::string_view to_string(Verdict v);

enum class RayVerdict { Escaped, Bounded, Undecided };

struct FateClassification {
    int n_grid = 0;
    int n_escaped = 0;
    int n_bounded = 0;
    int n_undecided = 0;
    Verdict verdict = Verdict::Undecided;
    double t_max = 0.0;
    std::vector<RayVerdict> rays; // by ray index (angle 2 pi i / n_grid)

    /// At least one ray reached the escape region, the side of the tangency
    /// where W^u(E_f) crosses S_r.
    bool escape_present() const { return n_escaped > 0; }
    bool all_bounded() const { return verdict == Verdict::AllBounded; }
};

/// Verdict from counts: SomeEscape iff escaped and bounded rays both occur;
/// Undecided when undecided rays could still change the answer.
Verdict verdict_from_counts(int n_escaped, int n_bounded, int n_undecided);

/// Ray indices 0..n-1 in bit-reversed order, so that far-apart seeds come first.
std::vector<int> interleaved_order(int n);

struct FateOptions {
    int n_grid = 10;
    double t_max = 5000.0;
    double ring_radius = 0.0; // 0 picks 1e-3 (1 + |X_Ef|)
    bool parallel = true;
    int workers = 0; // 0 uses the OpenMP default
};

/// Fate of W^u(E_f) for an arbitrary model: frame built at e, rays integrated
/// under crit. Runs the rays in parallel unless opt.parallel is false; both
/// paths give identical results.
FateClassification classify_fate(const VectorField& field, const State& e, FateCriteria crit, const FateOptions& opt);

/// Normal-form fate classification at p. Throws PreconditionError when E_f
/// is missing or lacks a two-dimensional unstable manifold.
FateClassification classify_fate(const ParameterSet& p, const FateOptions& opt = {});

struct TangencyPoint {
    double mu = 0.0;
    double a_cap = 0.0;
    double b_cap = 0.0;
    double c_cap = 0.0;
    double bracket_width = 0.0;
    Verdict side_low = Verdict::AllBounded;
    Verdict side_high = Verdict::SomeEscape;
    int n_grid = 0;
    double t_max = 0.0; // largest t_max the bisection needed
};

/// Bisection stalled on Undecided verdicts; keeps the bracket reached so far.
class TangencyUndecided : public Error {
public:
    TangencyUndecided(const std::string& what, double lo, double hi) : Error(what), lo(lo), hi(hi) {}
    double lo;
    double hi;
};

/// Classification at one parameter value with the given t_max.
using FateProbe = std::function<FateClassification(double param, double t_max)>;

/// Generic bisection between a bounded end and an escaping end. t_max is
/// doubled (at most three times) while a probe stays Undecided.
TangencyPoint bisect_tangency(const FateProbe& probe, double lo, double hi, double tol, double t_max);

/// Tangency of W^u(E_f) with S_r in mu at fixed (A, B, C). Throws
/// BracketError when both ends agree and TangencyUndecided.
TangencyPoint find_tangency_mu(double a_cap, double b_cap, double c_cap, double mu_lo, double mu_hi, double tol = 1e-6,
                               const FateOptions& opt = {});

struct TangencyCurve {
    std::vector<TangencyPoint> points; // ordered along the trace
    std::string end_reason;
};

/// Secant predictor in (mu, A), bisection corrector in mu. Stops at the ends
/// of [a_lo, a_hi], at the Hopf or saddle-node curve, or when the corrector
/// fails at the minimum step; the reason is recorded.
TangencyCurve trace_tangency_curve(double b_cap, double c_cap, const TangencyPoint& start, double a_lo, double a_hi,
                                   double step, double tol = 1e-6, const FateOptions& opt = {});

/// Two-pass variant: a coarse serial trace, then fine corrections at
/// interpolated A values run in parallel.
TangencyCurve trace_tangency_two_pass(double b_cap, double c_cap, const TangencyPoint& start, double a_lo,
                                      double a_hi, double coarse_step, int fine_per_interval, double tol = 1e-6,
                                      const FateOptions& opt = {});

struct FoldRefineOptions {
    double surface_offset = 5.0; // target surface Y = X^2 + offset
    int scan_points = 64;
    int rounds = 3;
    double mu_tol = 1e-10;
    double t_max = 5000.0;
};

/// Shooting realization of the boundary-value fold method: along one ray of
/// the unstable eigenplane (angle 2 pi ray_fraction), the first mu at which a
/// trajectory of the fundamental domain leaves the fold region through the
/// target surface is found per ray point; a quadratic through three such
/// points gives the fold. Throws NoHit when no trajectory reaches the surface.
TangencyPoint bvp_fold_refine(const TangencyPoint& near, double ray_fraction, const FoldRefineOptions& opt = {});

} // namespace singhopf
