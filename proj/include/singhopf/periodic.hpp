#pragma once

#include "singhopf/equilibria.hpp"
#include "singhopf/integrate.hpp"

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace singhopf {

/// Plane normal . s = offset, crossed in the given direction.
struct PoincareSection {
    Vec3 normal = Vec3::UnitY();
    double offset = 0.0;
    CrossingDirection direction = CrossingDirection::Increasing;
};

struct PeriodicOrbit {
    double param = 0.0; // value of the field's primary parameter
    State anchor;       // on the section
    PoincareSection section;
    double period = 0.0;
    std::array<Complex, 2> multipliers{}; // nontrivial Floquet multipliers
    double trivial_residual = 0.0;         // |closest monodromy eigenvalue - 1|
    bool ambiguous_deflation = false;      // two eigenvalues within 1e-4 of 1
    double return_residual = 0.0;
    Mat3 monodromy = Mat3::Identity();
};

enum class OrbitBifurcationTag { PD, LPC, NS, Neutral, R1, R2, R3, R4, None };
std::string_view to_string(OrbitBifurcationTag t);

struct OrbitOptions {
    IntegratorConfig integ{1e-11, 1e-13, std::numeric_limits<double>::infinity(), 500.0, 50'000'000, false};
    double newton_tol = 1e-10;
    int max_newton = 25;
    double max_period = 200.0;
};

/// Newton iteration on the two-dimensional return map of the section.
/// Throws NotConverged (carrying the last iterate in its message) or NoReturn.
PeriodicOrbit find_orbit(const VectorField& field, const State& seed, const PoincareSection& section,
                         const OrbitOptions& opt = {});

/// Small orbit just past a Hopf point, seeded from the Hopf normal form
/// amplitude and corrected by find_orbit. `param` must lie on the side where
/// the orbit exists.
PeriodicOrbit orbit_near_hopf(const VectorField& field_at_param, const State& equilibrium,
                              const OrbitOptions& opt = {});

/// One period of the orbit, sampled at every accepted step.
Trajectory sample_orbit(const VectorField& field, const PeriodicOrbit& orbit, const IntegratorConfig& cfg = {});

/// Section Y-style plane (normal along `axis`) placed halfway between the
/// orbit's time-averaged coordinate and its maximum.
PoincareSection section_for(const Trajectory& one_period, int axis = 1);

/// Test functions whose sign changes mark the events.
struct MultiplierTests {
    double pd = 0.0;      // (1 + m1)(1 + m2)
    double lpc = 0.0;     // (1 - m1)(1 - m2)
    double product = 0.0; // m1 m2 - 1
    bool complex_pair = false;
};
MultiplierTests multiplier_tests(const PeriodicOrbit& o);

/// Resonance tag Rq when the argument lies within tol of 2 pi / q, q = 1..4.
OrbitBifurcationTag resonance_of(double argument, double tol = 0.05);

/// Tag for the first multiplier crossing between two consecutive branch
/// points (PD, LPC, NS or Neutral), None if nothing crossed. An NS crossing
/// near a strong resonance is tagged R1..R4 instead.
OrbitBifurcationTag classify_multiplier_event(const PeriodicOrbit& before, const PeriodicOrbit& after);

struct MultiplierEvent {
    OrbitBifurcationTag tag = OrbitBifurcationTag::None;
    OrbitBifurcationTag resonance = OrbitBifurcationTag::None;
    double param = 0.0;
    double param_width = 0.0; // final refinement bracket
    double argument = 0.0;    // arg of the critical multiplier, in [0, pi]
    PeriodicOrbit orbit;
};

enum class BranchEnd { ReachedRange, StepUnderflow, PeriodBlowUp, NewtonFailure };
std::string_view to_string(BranchEnd e);

struct OrbitBranch {
    std::vector<PeriodicOrbit> points;
    std::vector<MultiplierEvent> events;
    BranchEnd end = BranchEnd::ReachedRange;
    std::string end_reason;
    /// True when the branch stopped by period growth or step collapse,
    /// the signature of a canard explosion toward a homoclinic orbit.
    bool s_proximal() const { return end == BranchEnd::PeriodBlowUp || end == BranchEnd::StepUnderflow; }
};

struct ContinuationOptions {
    OrbitOptions orbit;
    double param_scale = 0.0; // parameter units per unit of arclength; 0 picks max(|p0|, 1e-3)
    double ds_initial = 0.01;
    double ds_min = 1e-6;
    double ds_max = 0.05;
    double max_param_step = std::numeric_limits<double>::infinity();
    int max_points = 5000;
    double event_param_tol = 1e-7;
    bool detect_events = true;
    std::vector<OrbitBifurcationTag> stop_on; // stop after the first event of these kinds
    // The branch also ends once the parameter leaves [param_min, param_max];
    // as with param_end, the first point outside is the last point kept.
    double param_min = -std::numeric_limits<double>::infinity();
    double param_max = std::numeric_limits<double>::infinity();
};

/// Pseudo-arclength continuation of the orbit in the field's primary
/// parameter, from orbit0 toward param_end. Multiplier crossings are located
/// between consecutive points and refined by bisection along the arc.
OrbitBranch continue_orbit(const VectorField& field, const PeriodicOrbit& orbit0, double param_end,
                           const ContinuationOptions& opt = {});

/// Normal-form entry point.
OrbitBranch continue_orbit_in_mu(const ParameterSet& p0, const PeriodicOrbit& orbit0, double mu_end,
                                 const ContinuationOptions& opt = {});

/// The orbit born at the Hopf point h, continued (without event detection)
/// to the parameter value `target`. `field` supplies the model; its primary
/// parameter is overridden. Returns nullopt when target lies on the side of
/// the Hopf point without a small orbit or the continuation stops early.
std::optional<PeriodicOrbit> continue_from_hopf(const VectorField& field, const HopfReport& h, double target,
                                                const ContinuationOptions& opt = {});

/// Gamma of the rescaled normal form at p, by continuation from the Hopf point on E_f.
std::optional<PeriodicOrbit> locate_gamma(const ParameterSet& p, const ContinuationOptions& opt = {});

struct ResonanceHit {
    OrbitBifurcationTag tag;
    double param;
    double argument;
};

/// NS events along the branch whose critical pair sits at a strong
/// resonance, with the 2 pi / q argument convention.
std::vector<ResonanceHit> resonance_scan(const OrbitBranch& branch, double tol = 0.05);

} // namespace singhopf
