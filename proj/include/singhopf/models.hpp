#pragma once

#include <Eigen/Dense>

#include <string>
#include <string_view>
#include <variant>

#include <json.hpp>

namespace singhopf {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Phase-space point (X, Y, Z). For the Koper model the components are (x, y, z).
using State = Vec3;

/// Point of the two-dimensional desingularized slow flow.
struct SlowState {
    double x = 0.0;
    double z = 0.0;
};

/// Parameters of the rescaled normal form. B and C are fixed per diagram,
/// mu and A are the varying pair.
struct ParameterSet {
    double mu = 0.0;
    double a_cap = 0.0;
    double b_cap = 0.0;
    double c_cap = 0.0;
};

/// Parameters of the normal form before the epsilon-eliminating rescaling.
struct UnscaledParameterSet {
    double mu = 0.0;
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    double eps = 1.0;
};

/// The rescaled cubic variant keeps a finite epsilon in its X^3 term.
struct RescaledCubicParameters {
    ParameterSet p;
    double eps = 0.01;
};

struct KoperParameters {
    double eps1 = 0.1;
    double eps2 = 1.0;
    double k = -10.0;
    double lambda = 0.0;
};

enum class ModelId { RescaledQuadratic, UnscaledQuadratic, RescaledCubic, UnscaledCubic, Koper };

using ModelParameters =
    std::variant<ParameterSet, UnscaledParameterSet, RescaledCubicParameters, KoperParameters>;

std::string_view to_string(ModelId id);
ModelId model_from_string(std::string_view name);

/// A concrete vector field: model tag plus matching parameters.
///
/// Construction validates that the parameter kind fits the tag and throws
/// ParameterMismatch otherwise; unscaled models additionally require eps > 0.
/// Every model in the toolkit is nonlinear only through its first component,
/// and only in the first coordinate, which the Lyapunov-coefficient code uses.
class VectorField {
public:
    VectorField(ModelId id, ModelParameters params);

    static VectorField rescaled(const ParameterSet& p) { return {ModelId::RescaledQuadratic, p}; }
    static VectorField koper(const KoperParameters& p) { return {ModelId::Koper, p}; }

    ModelId id() const noexcept { return id_; }
    const ModelParameters& parameters() const noexcept { return params_; }

    Vec3 operator()(const State& s) const;
    Mat3 jacobian(const State& s) const;
    double trace_jacobian(const State& s) const;

    // d^2 f_0 / dx_0^2 and d^3 f_0 / dx_0^3, the only nonzero higher derivatives.
    double second_derivative(const State& s) const;
    double third_derivative(const State& s) const;

    /// The primary bifurcation parameter: mu for the normal forms, lambda for Koper.
    double primary() const;
    VectorField with_primary(double value) const;
    /// Derivative of the field with respect to the primary parameter (state independent).
    Vec3 primary_derivative() const;

private:
    ModelId id_;
    ModelParameters params_;
    // Cached polynomial form so the hot path avoids std::visit:
    //   f0 = y_coef*y + x0 + x1*x + x2*x^2 + x3*x^3
    //   (f1, f2) = linear_ * s + offset_
    double y_coef_ = 0.0;
    double x0_ = 0.0, x1_ = 0.0, x2_ = 0.0, x3_ = 0.0;
    Eigen::Matrix<double, 2, 3> linear_ = Eigen::Matrix<double, 2, 3>::Zero();
    Eigen::Vector2d offset_ = Eigen::Vector2d::Zero();
};

/// Free-function forms; both throw ParameterMismatch for a wrong parameter kind.
Vec3 eval_field(ModelId model, const State& s, const ModelParameters& p);
Mat3 jacobian(ModelId model, const State& s, const ModelParameters& p);

// ---------------------------------------------------------------------------
// Scaling between the unscaled and rescaled normal forms.

enum class MapDirection { ToRescaled, ToUnscaled };

ParameterSet rescale_to_capital(const UnscaledParameterSet& p);
UnscaledParameterSet rescale_to_lower(const ParameterSet& p, double eps);
State state_map(const State& s, double eps, MapDirection direction);
/// Factor T/t between rescaled and unscaled time, eps^(-1/2).
double time_dilation(double eps);

// ---------------------------------------------------------------------------
// Critical manifold f = 0.

enum class SheetStability { Attracting, Repelling, Fold };

struct CriticalPoint {
    double y = 0.0;
    SheetStability stability = SheetStability::Fold;
};

std::string_view to_string(SheetStability s);

/// y-value of the critical manifold above fast coordinate x and the sign of
/// the fast linearization there. Fold is reported when |df/dx| <= fold_tol.
CriticalPoint critical_manifold(const VectorField& field, double x, double fold_tol = 1e-12);

/// Fold points of the Koper critical manifold ky = x^3 - 3x + lambda.
std::pair<double, double> koper_fold_points();

// ---------------------------------------------------------------------------
// Desingularized slow flow of the unscaled normal form.

enum class SlowFlowForm { Desingularized, Reduced };

SlowState eval_slow_flow(const SlowState& s, const UnscaledParameterSet& p,
                         SlowFlowForm form = SlowFlowForm::Desingularized);

// ---------------------------------------------------------------------------
// Reflection symmetry of the rescaled normal form:
// (X, Y, Z, t; mu, A, B, C) -> (-X, Y, -Z, -t; mu, -A, B, -C).

ParameterSet reflect_parameters(const ParameterSet& p);
State reflect_state(const State& s);

// ---------------------------------------------------------------------------
// JSON run-configuration fragments: {"model": "...", "params": {...}}.

nlohmann::json to_json(const VectorField& field);
VectorField field_from_json(const nlohmann::json& j);

} // namespace singhopf
