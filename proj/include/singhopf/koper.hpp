#pragma once

#include "singhopf/tangency.hpp"

#include <optional>
#include <vector>

namespace singhopf {

/// Equilibria of the Koper model: x = y = z with -x^3 + (3 + k) x - lambda = 0.
/// Sorted by x.
std::vector<State> koper_equilibria(const KoperParameters& p);

/// The equilibrium closest to the upper fold x = 1, if any.
std::optional<State> koper_fold_equilibrium(const KoperParameters& p);

struct KoperScanResult {
    double lambda_hopf = 0.0;
    double lambda_pd = 0.0;
    double lambda_lpc = 0.0;
    std::array<double, 3> periods{}; // at the Hopf, PD and LPC points
    std::optional<double> lambda_tangency;
    Criticality criticality = Criticality::Degenerate;
    double hopf_residual = 0.0;
    bool lpc_nonlocal = false; // LPC period above 1.5 times the Hopf period
    OrbitBranch branch;
};

struct KoperScanOptions {
    ContinuationOptions continuation;
    bool with_tangency = true;
    FateOptions fate{10, 500.0, 0.0, true, 0};
    double tangency_tol = 1e-4;
};

/// Hopf point on the equilibrium branch in [lambda_lo, lambda_hi], then the
/// orbit branch continued in lambda up to the first LPC; PD and LPC come from
/// multiplier events. Throws NotFound when a stage finds nothing.
KoperScanResult koper_scan(double eps1, double eps2, double k, double lambda_lo, double lambda_hi,
                           const KoperScanOptions& opt = {});

/// Escape criterion for the Koper tangency: |x - x_Ef| > radius.
FateCriteria koper_criteria(const KoperParameters& p, const State& ef, double radius = 1.5, double t_max = 500.0);

FateClassification koper_classify_fate(const KoperParameters& p, const FateOptions& opt = {});

/// Tangency of W^u(E_f) with the repelling slow sheet, by bisection in
/// lambda over [lo, hi]. Errors as find_tangency_mu.
TangencyPoint koper_tangency(double eps1, double eps2, double k, double lo, double hi, double tol = 1e-4,
                             const FateOptions& opt = {10, 500.0, 0.0, true, 0});

struct MmoSignature {
    int large_count = 0;
    std::vector<int> small_counts; // small oscillations after each large one, complete epochs only
    double threshold = 1.0;        // x-amplitude separating large from small
    bool quiescent = false;
    std::string pattern; // L^s notation, e.g. "1^2 1^1"
};

/// Simulates from a generic start and drops the first 20% of t_max. A large
/// excursion is a trip of x more than `threshold` below the fold x = 1 (with
/// hysteresis); small oscillations are the local minima of x between them.
/// The full trajectory is stored in `keep` when given.
MmoSignature detect_mmo(double eps1, double eps2, double k, double lambda, double t_max = 2000.0,
                        double threshold = 1.0, Trajectory* keep = nullptr);

} // namespace singhopf
