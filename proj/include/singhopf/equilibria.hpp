#pragma once

#include "singhopf/models.hpp"

#include <array>
#include <complex>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

namespace singhopf {

using Complex = std::complex<double>;
using Spectrum = std::array<Complex, 3>;

/// Monic characteristic polynomial lambda^3 + c2 lambda^2 + c1 lambda + c0 = det(lambda I - J).
struct CharPoly {
    double c2 = 0.0;
    double c1 = 0.0;
    double c0 = 0.0;

    Complex operator()(Complex z) const { return ((z + c2) * z + c1) * z + c0; }
    /// Routh-Hurwitz Hopf residual c2*c1 - c0; zero on a Hopf point when c1 > 0.
    double hopf_residual() const { return c2 * c1 - c0; }
};

CharPoly characteristic_polynomial(const Mat3& j);

/// Roots from the companion matrix, each polished by Newton's method,
/// sorted by real part, largest first.
Spectrum cubic_roots(const CharPoly& p);

enum class StabilityClass {
    StableNode,
    StableFocus,
    SaddleFocus1U, // stable complex pair, one unstable real eigenvalue
    SaddleFocus2U, // unstable complex pair, one stable real eigenvalue
    Saddle,
    UnstableNodeOrFocus,
    Degenerate,
};

std::string_view to_string(StabilityClass c);
StabilityClass classify(const Spectrum& eigenvalues, double zero_tol = 1e-12);

struct EquilibriumReport {
    State location;
    Spectrum eigenvalues;
    StabilityClass cls = StabilityClass::Degenerate;
    bool is_E_f = false; // the fold-region equilibrium, smaller |X|
};

/// Equilibria of the rescaled normal form: B X^2 + (A + C) X + mu = 0 on
/// Y = X^2, Z = X. Empty when the discriminant is negative. Throws
/// NoEquilibrium (B = A + C = 0, mu != 0) or DegenerateContinuum (all zero).
std::vector<EquilibriumReport> find_equilibria(const ParameterSet& p);

/// The fold-region equilibrium E_f, if any.
std::optional<EquilibriumReport> fold_equilibrium(const ParameterSet& p);

/// Eigenvalues of the Jacobian at an equilibrium. Throws PreconditionError if
/// the field residual at e exceeds residual_tol.
Spectrum eigenvalues_at(const VectorField& field, const State& e, double residual_tol = 1e-8);

/// Newton's method on field(s) = 0 from a nearby guess, for models without
/// a closed-form equilibrium. Throws NotConverged.
State equilibrium_newton(const VectorField& field, const State& guess, double tol = 1e-13, int max_iter = 50);

struct SaddleNodePoint {
    double mu = 0.0;
    double x = 0.0;
};

/// mu_SN = (A+C)^2 / (4B) and the double root X = -(A+C)/(2B). Throws NoSaddleNode for B = 0.
SaddleNodePoint saddle_node_locus(double a_cap, double b_cap, double c_cap);

enum class Criticality { Supercritical, Subcritical, Degenerate };
std::string_view to_string(Criticality c);

struct HopfReport {
    double mu_star = 0.0;
    State location;
    double omega = 0.0;
    double l1 = 0.0;
    Criticality criticality = Criticality::Degenerate;
    double residual = 0.0; // Routh-Hurwitz residual at mu_star
};

/// Asymptotic Hopf location -A^2/2 - AC/2.
double hopf_seed(double a_cap, double c_cap);

/// Exact Hopf point on the E_f branch by safeguarded root finding of the
/// Routh-Hurwitz condition, seeded at hopf_seed. Throws NotFound.
HopfReport hopf_locus(double a_cap, double b_cap, double c_cap);

/// Model-independent Hopf search: field(p) builds the vector field at
/// parameter p and branch(p) returns the tracked equilibrium (nullopt where
/// it does not exist). Searches [lo, hi], preferring the root nearest seed.
HopfReport find_hopf(const std::function<VectorField(double)>& field,
                     const std::function<std::optional<State>(double)>& branch, double lo, double hi, double seed);

/// First Lyapunov coefficient at an equilibrium with a pure imaginary pair.
/// Negative means supercritical. Throws PreconditionError when no pair has
/// |Re| below pair_tol.
double first_lyapunov(const VectorField& field, const State& e, double pair_tol = 1e-8);

Criticality criticality_of(double l1, double tol = 1e-12);

/// Zero-Hopf A-value C(B - 1).
double zero_hopf_A(double b_cap, double c_cap);

struct GeneralizedHopfPoint {
    double a_approx = 0.0;              // root of A^2 + AC + 2B = 0
    std::optional<double> a_refined;    // zero of l1 along the Hopf curve
    double l1_at_refined = 0.0;
};

/// Generalized Hopf points: empty when C^2 < 8B.
std::vector<GeneralizedHopfPoint> generalized_hopf_A(double b_cap, double c_cap, bool refine = true);

} // namespace singhopf
