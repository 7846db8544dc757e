#pragma once

#include "singhopf/equilibria.hpp"
#include "singhopf/integrate.hpp"
#include "singhopf/periodic.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace singhopf {

enum class ManifoldLabel { Sa, Sr, WuEf, WsEf, Gamma };
std::string_view to_string(ManifoldLabel l);

enum class Fate { Escaped, ConvergedToOrbit, ConvergedToEquilibrium, TimeOut };
std::string_view to_string(Fate f);

struct ManifoldMesh {
    ManifoldLabel label = ManifoldLabel::Sa;
    std::vector<Trajectory> trajectories;
    std::vector<State> seeds;
    std::vector<Fate> fates; // filled for W^u meshes only
    std::string seed_description;
    bool reverse_time = false;
};

/// The region the fold dynamics lives in: |X| <= 3, |Y| <= 9, |Z| <= 3.
EscapeBox default_fold_box();

enum class SheetKind { Attracting, Repelling };

/// Seeds at the signed abscissa x_seed with Z spread evenly over
/// [z_min, z_max], placed at Y = X^2 + h(X, Z) where h is the slow-manifold
/// offset from offset_order iterations of the invariance equation
///   h = (Z - X - h_X h - h_Z Z') / (2X),  h_0 = 0.
/// offset_order = 0 seeds exactly on the critical manifold.
struct SeedLine {
    double x_seed = 2.0;
    double z_min = -1.0;
    double z_max = 1.0;
    int count = 9;
    int offset_order = 3;
};

/// The offset h of the iteration above, derivatives by central differences.
double slow_manifold_offset(const ParameterSet& p, double x, double z, int order);

/// Slow manifold sheet: attracting ones forward in time from X = x_seed >= 1,
/// repelling ones backward in time from X = x_seed <= -1. Each trajectory
/// stops on leaving the escape box or the fold box, or at t_max.
ManifoldMesh slow_manifold(const ParameterSet& p, SheetKind which, const SeedLine& seeds, double t_max = 200.0,
                           const IntegratorConfig& cfg = {});

/// Real Jordan frame of a complex unstable pair alpha +- i omega at e:
/// the linear flow in the (a, b) coordinates of e + a*vr + b*vi is a
/// rotation with expansion, so circles cross each orbit exactly once.
struct UnstableFrame {
    State e;
    Vec3 vr;
    Vec3 vi;
    double alpha = 0.0;
    double omega = 0.0;
    double radius = 0.0;

    State seed(double angle) const;
    State seed(double angle, double radius_override) const;
    /// Radial extent of one fundamental domain, exp(2 pi alpha / omega).
    double domain_ratio() const;
};

/// Throws PreconditionError unless e has exactly two eigenvalues with
/// positive real part forming a complex pair.
UnstableFrame unstable_frame(const VectorField& field, const State& e, double ring_radius);

/// Default ring radius 1e-3 (1 + |X_e|).
double default_ring_radius(const State& e);

/// Termination tests for trajectories on W^u(E_f).
struct FateCriteria {
    EscapeBox escape = default_escape_box();
    EscapeBox fold_box = default_fold_box();
    std::optional<State> orbit_anchor; // Gamma's section point
    double orbit_radius = 1e-6;
    std::vector<State> attractors; // stable equilibria
    double equilibrium_radius = 1e-6;
    double equilibrium_dwell = 10.0;
    double t_max = 5000.0;
    IntegratorConfig integ{1e-10, 1e-12, std::numeric_limits<double>::infinity(), 5000.0, 50'000'000, false};
};

struct RayOutcome {
    Fate fate = Fate::TimeOut;
    bool stayed_in_fold_box = false;
    double time = 0.0;
};

RayOutcome ray_fate(const VectorField& field, const State& seed, const FateCriteria& crit,
                    Trajectory* keep = nullptr);

/// Fate criteria for the rescaled normal form at p: the default escape and
/// fold boxes plus Gamma, when it exists, located by continuation.
FateCriteria normal_form_criteria(const ParameterSet& p, double t_max = 5000.0);

/// Fundamental-domain mesh of W^u(E_f) with per-ray fates.
ManifoldMesh unstable_manifold_mesh(const ParameterSet& p, const EquilibriumReport& e, double ring_radius = 0.0,
                                    int n_rays = 32, double t_max = 5000.0);

/// Both branches of the one-dimensional stable manifold, integrated
/// backward from e +- delta v_s with delta = 1e-6 (1 + |X_e|).
ManifoldMesh stable_manifold_1d(const ParameterSet& p, const EquilibriumReport& e, double t_max = 200.0,
                                double delta_scale = 1.0);

struct PortraitPoint {
    std::size_t object = 0;     // index into the object list
    std::size_t trajectory = 0; // index within the object
    State point;
};

/// Directed crossings of every trajectory of every object with the plane,
/// located on the cubic Hermite interpolant of the recorded steps.
std::vector<PortraitPoint> section_portrait(const VectorField& field, const PlaneCrossing& plane,
                                            std::span<const ManifoldMesh> objects);

} // namespace singhopf
