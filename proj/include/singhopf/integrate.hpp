#pragma once

#include "singhopf/errors.hpp"
#include "singhopf/models.hpp"

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace singhopf {

struct IntegratorConfig {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();
    double t_max = 100.0;
    std::size_t max_steps = 50'000'000;
    bool record = true; // keep every accepted step in Trajectory::states
};

/// Throws DomainError unless tolerances lie in (0, 1e-2] and t_max > 0.
void validate(const IntegratorConfig& cfg);

enum class CrossingDirection { Increasing, Decreasing, Both };
enum class TimeDirection { Forward, Backward };

/// Crossing of the plane normal . s = offset. Crossings earlier than
/// arm_time (elapsed) are ignored, which lets a trajectory start on the plane.
struct PlaneCrossing {
    Vec3 normal = Vec3::UnitY();
    double offset = 0.0;
    CrossingDirection direction = CrossingDirection::Both;
    bool terminal = false;
    double arm_time = 0.0;
};

/// The trajectory escapes once it leaves [lower, upper] componentwise.
struct EscapeBox {
    Vec3 lower = Vec3::Constant(-std::numeric_limits<double>::infinity());
    Vec3 upper = Vec3::Constant(std::numeric_limits<double>::infinity());
};

/// Converged once the trajectory has stayed within radius of center for
/// dwell_time. With dwell_time == 0 a single close pass (closest approach
/// inside a step included) is enough.
struct ProximityToPoint {
    Vec3 center = Vec3::Zero();
    double radius = 1e-6;
    double dwell_time = 0.0;
};

/// Terminal event on the surface y - x^2 = offset, crossed upward; used by
/// the shooting realization of the boundary-value tangency method.
struct ParabolaHit {
    double offset = 5.0;
};

using EventSpec = std::variant<PlaneCrossing, EscapeBox, ProximityToPoint, ParabolaHit>;

/// Default escape region for the rescaled normal form: X < -10 or |Y| > 100.
EscapeBox default_escape_box();

enum class Termination { TimeOut, Event, Escaped, Converged };
std::string_view to_string(Termination t);

struct Crossing {
    std::size_t event = 0;
    double time = 0.0;
    State state;
};

/// Integrated trajectory. times hold elapsed time, strictly increasing; for
/// backward integration the state at times[i] is s(-times[i]).
struct Trajectory {
    std::vector<double> times;
    std::vector<State> states;
    Termination termination = Termination::TimeOut;
    std::optional<std::size_t> event_id; // the event that terminated the run
    std::vector<Crossing> crossings;     // every plane crossing / hit located
    double final_time = 0.0;
    State final_state;
    std::size_t steps = 0;
    Vec3 lower_bound = Vec3::Zero(); // componentwise extent over accepted steps
    Vec3 upper_bound = Vec3::Zero();
};

/// Raised when the step size underflows; carries the last accepted state.
class StiffnessError : public Error {
public:
    StiffnessError(double t, State last)
        : Error("step size underflow at t=" + std::to_string(t)), time(t), last_state(std::move(last)) {}
    double time;
    State last_state;
};

Trajectory integrate(const VectorField& field, const State& s0, const IntegratorConfig& cfg,
                     std::span<const EventSpec> events = {}, TimeDirection direction = TimeDirection::Forward);

/// Result of integrating the state with its first variation
///   M' = J(s) M, M(0) = I  and  w' = J(s) w + df/dp, w(0) = 0,
/// where p is the field's primary parameter.
struct VariationalResult {
    State state;
    Mat3 monodromy = Mat3::Identity();
    Vec3 param_sensitivity = Vec3::Zero();
    double time = 0.0;
};

VariationalResult integrate_variational(const VectorField& field, const State& s0, double t_span,
                                        const IntegratorConfig& cfg);

/// Integrates state and variation until the first qualifying crossing of
/// the section. Throws NoReturn when cfg.t_max passes first.
VariationalResult integrate_variational_to_section(const VectorField& field, const State& s0,
                                                   const PlaneCrossing& section, const IntegratorConfig& cfg);

/// First qualifying crossing of the section without the variation.
/// Returns std::nullopt when t_max passes or the escape box is left first.
std::optional<Crossing> first_return(const VectorField& field, const State& s0, const PlaneCrossing& section,
                                     const IntegratorConfig& cfg, const EscapeBox& box = {});

} // namespace singhopf
