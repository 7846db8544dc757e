#include "singhopf/models.hpp"

#include "singhopf/errors.hpp"

#include <cmath>
#include <string>

namespace singhopf {

namespace {

struct ModelName {
    ModelId id;
    std::string_view name;
};

constexpr ModelName kModelNames[] = {
    {ModelId::RescaledQuadratic, "rescaled_quadratic"},
    {ModelId::UnscaledQuadratic, "unscaled_quadratic"},
    {ModelId::RescaledCubic, "rescaled_cubic"},
    {ModelId::UnscaledCubic, "unscaled_cubic"},
    {ModelId::Koper, "koper"},
};

void require_eps(double eps, const char* what)
{
    if (!(eps > 0.0) || !std::isfinite(eps))
        throw DomainError(std::string(what) + ": eps must be positive, got " + std::to_string(eps));
}

template <class T>
const T& expect(const ModelParameters& p, ModelId id)
{
    if (const T* v = std::get_if<T>(&p))
        return *v;
    throw ParameterMismatch("parameters do not match model '" + std::string(to_string(id)) + "'");
}

} // namespace

std::string_view to_string(ModelId id)
{
    for (const auto& m : kModelNames)
        if (m.id == id)
            return m.name;
    return "unknown";
}

ModelId model_from_string(std::string_view name)
{
    for (const auto& m : kModelNames)
        if (m.name == name)
            return m.id;
    throw DomainError("unknown model '" + std::string(name) + "'");
}

VectorField::VectorField(ModelId id, ModelParameters params)
    : id_(id), params_(std::move(params))
{
    // Rows 1 and 2 of the normal forms: Y' = Z - X, Z' = -mu - a X - b Y - c Z.
    auto normal_rows = [this](double mu, double a, double b, double c) {
        linear_ << -1.0, 0.0, 1.0, -a, -b, -c;
        offset_ << 0.0, -mu;
    };

    switch (id_) {
    case ModelId::RescaledQuadratic: {
        const auto& p = expect<ParameterSet>(params_, id_);
        y_coef_ = 1.0;
        x2_ = -1.0;
        normal_rows(p.mu, p.a_cap, p.b_cap, p.c_cap);
        break;
    }
    case ModelId::UnscaledQuadratic: {
        const auto& p = expect<UnscaledParameterSet>(params_, id_);
        require_eps(p.eps, "unscaled_quadratic");
        y_coef_ = 1.0 / p.eps;
        x2_ = -1.0 / p.eps;
        normal_rows(p.mu, p.a, p.b, p.c);
        break;
    }
    case ModelId::RescaledCubic: {
        const auto& p = expect<RescaledCubicParameters>(params_, id_);
        require_eps(p.eps, "rescaled_cubic");
        y_coef_ = 1.0;
        x2_ = -1.0;
        x3_ = -std::sqrt(p.eps);
        normal_rows(p.p.mu, p.p.a_cap, p.p.b_cap, p.p.c_cap);
        break;
    }
    case ModelId::UnscaledCubic: {
        const auto& p = expect<UnscaledParameterSet>(params_, id_);
        require_eps(p.eps, "unscaled_cubic");
        y_coef_ = 1.0 / p.eps;
        x2_ = -1.0 / p.eps;
        x3_ = -1.0 / p.eps;
        normal_rows(p.mu, p.a, p.b, p.c);
        break;
    }
    case ModelId::Koper: {
        const auto& p = expect<KoperParameters>(params_, id_);
        if (!(p.eps1 > 0.0) || !(p.eps2 > 0.0))
            throw DomainError("koper: eps1 and eps2 must be positive");
        y_coef_ = p.k / p.eps1;
        x0_ = -p.lambda / p.eps1;
        x1_ = 3.0 / p.eps1;
        x3_ = -1.0 / p.eps1;
        linear_ << 1.0, -2.0, 1.0, 0.0, p.eps2, -p.eps2;
        offset_.setZero();
        break;
    }
    }
}

Vec3 VectorField::operator()(const State& s) const
{
    const double x = s[0];
    Vec3 out;
    out[0] = y_coef_ * s[1] + x0_ + x * (x1_ + x * (x2_ + x * x3_));
    out.tail<2>() = linear_ * s + offset_;
    return out;
}

Mat3 VectorField::jacobian(const State& s) const
{
    const double x = s[0];
    Mat3 j;
    j.row(0) << x1_ + x * (2.0 * x2_ + 3.0 * x3_ * x), y_coef_, 0.0;
    j.bottomRows<2>() = linear_;
    return j;
}

double VectorField::trace_jacobian(const State& s) const
{
    const double x = s[0];
    return x1_ + x * (2.0 * x2_ + 3.0 * x3_ * x) + linear_(0, 1) + linear_(1, 2);
}

double VectorField::second_derivative(const State& s) const
{
    return 2.0 * x2_ + 6.0 * x3_ * s[0];
}

double VectorField::third_derivative(const State&) const
{
    return 6.0 * x3_;
}

double VectorField::primary() const
{
    return std::visit(
        [](const auto& p) -> double {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, KoperParameters>)
                return p.lambda;
            else if constexpr (std::is_same_v<T, RescaledCubicParameters>)
                return p.p.mu;
            else
                return p.mu;
        },
        params_);
}

VectorField VectorField::with_primary(double value) const
{
    ModelParameters q = params_;
    std::visit(
        [value](auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, KoperParameters>)
                p.lambda = value;
            else if constexpr (std::is_same_v<T, RescaledCubicParameters>)
                p.p.mu = value;
            else
                p.mu = value;
        },
        q);
    return VectorField(id_, std::move(q));
}

Vec3 VectorField::primary_derivative() const
{
    if (id_ == ModelId::Koper)
        return Vec3(-1.0 / std::get<KoperParameters>(params_).eps1, 0.0, 0.0);
    return Vec3(0.0, 0.0, -1.0);
}

Vec3 eval_field(ModelId model, const State& s, const ModelParameters& p)
{
    return VectorField(model, p)(s);
}

Mat3 jacobian(ModelId model, const State& s, const ModelParameters& p)
{
    return VectorField(model, p).jacobian(s);
}

ParameterSet rescale_to_capital(const UnscaledParameterSet& p)
{
    require_eps(p.eps, "rescale_to_capital");
    const double r = std::sqrt(p.eps);
    return {p.mu, r * p.a, p.eps * p.b, r * p.c};
}

UnscaledParameterSet rescale_to_lower(const ParameterSet& p, double eps)
{
    require_eps(eps, "rescale_to_lower");
    const double r = std::sqrt(eps);
    return {p.mu, p.a_cap / r, p.b_cap / eps, p.c_cap / r, eps};
}

State state_map(const State& s, double eps, MapDirection direction)
{
    require_eps(eps, "state_map");
    const double r = std::sqrt(eps);
    if (direction == MapDirection::ToRescaled)
        return {s[0] / r, s[1] / eps, s[2] / r};
    return {s[0] * r, s[1] * eps, s[2] * r};
}

double time_dilation(double eps)
{
    require_eps(eps, "time_dilation");
    return 1.0 / std::sqrt(eps);
}

std::string_view to_string(SheetStability s)
{
    switch (s) {
    case SheetStability::Attracting:
        return "attracting";
    case SheetStability::Repelling:
        return "repelling";
    case SheetStability::Fold:
        return "fold";
    }
    return "unknown";
}

CriticalPoint critical_manifold(const VectorField& field, double x, double fold_tol)
{
    // f0 = y_coef*y + g(x) = 0 with the y-coefficient read off the Jacobian.
    const State probe(x, 0.0, 0.0);
    const Mat3 j = field.jacobian(probe);
    const double y_coef = j(0, 1);
    const double g = field(probe)[0];
    CriticalPoint cp;
    cp.y = -g / y_coef;
    const double dfdx = j(0, 0);
    if (std::abs(dfdx) <= fold_tol)
        cp.stability = SheetStability::Fold;
    else
        cp.stability = dfdx < 0.0 ? SheetStability::Attracting : SheetStability::Repelling;
    return cp;
}

std::pair<double, double> koper_fold_points()
{
    // d/dx (x^3 - 3x) = 3x^2 - 3 = 0
    return {-1.0, 1.0};
}

SlowState eval_slow_flow(const SlowState& s, const UnscaledParameterSet& p, SlowFlowForm form)
{
    const double drift = p.mu + p.a * s.x + p.b * s.x * s.x + p.c * s.z;
    if (form == SlowFlowForm::Desingularized)
        return {s.z - s.x, -2.0 * s.x * drift};
    if (s.x == 0.0)
        throw DomainError("reduced slow flow is singular on the fold x = 0");
    return {(s.z - s.x) / (2.0 * s.x), -drift};
}

ParameterSet reflect_parameters(const ParameterSet& p)
{
    return {p.mu, -p.a_cap, p.b_cap, -p.c_cap};
}

State reflect_state(const State& s)
{
    return {-s[0], s[1], -s[2]};
}

nlohmann::json to_json(const VectorField& field)
{
    nlohmann::json j;
    j["model"] = std::string(to_string(field.id()));
    std::visit(
        [&j](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, ParameterSet>)
                j["params"] = {{"mu", p.mu}, {"A", p.a_cap}, {"B", p.b_cap}, {"C", p.c_cap}};
            else if constexpr (std::is_same_v<T, UnscaledParameterSet>)
                j["params"] = {{"mu", p.mu}, {"a", p.a}, {"b", p.b}, {"c", p.c}, {"eps", p.eps}};
            else if constexpr (std::is_same_v<T, RescaledCubicParameters>)
                j["params"] = {{"mu", p.p.mu}, {"A", p.p.a_cap}, {"B", p.p.b_cap}, {"C", p.p.c_cap},
                               {"eps", p.eps}};
            else
                j["params"] = {{"eps1", p.eps1}, {"eps2", p.eps2}, {"k", p.k}, {"lambda", p.lambda}};
        },
        field.parameters());
    return j;
}

namespace {

double number(const nlohmann::json& params, const char* key, bool required = true, double fallback = 0.0)
{
    auto it = params.find(key);
    if (it == params.end()) {
        if (required)
            throw ConfigError(std::string("params.") + key, std::string("missing parameter '") + key + "'");
        return fallback;
    }
    if (!it->is_number())
        throw ConfigError(std::string("params.") + key, std::string("parameter '") + key + "' must be a number");
    return it->get<double>();
}

void reject_unknown(const nlohmann::json& params, std::initializer_list<std::string_view> allowed)
{
    for (auto it = params.begin(); it != params.end(); ++it) {
        bool ok = false;
        for (auto a : allowed)
            ok = ok || a == it.key();
        if (!ok)
            throw ConfigError("params." + it.key(), "unknown parameter '" + it.key() + "'");
    }
}

} // namespace

VectorField field_from_json(const nlohmann::json& j)
{
    if (!j.is_object() || !j.contains("model") || !j["model"].is_string())
        throw ConfigError("model", "run configuration needs a string 'model'");
    ModelId id;
    try {
        id = model_from_string(j["model"].get<std::string>());
    } catch (const DomainError& e) {
        throw ConfigError("model", e.what());
    }
    const nlohmann::json params = j.value("params", nlohmann::json::object());
    if (!params.is_object())
        throw ConfigError("params", "'params' must be an object");

    switch (id) {
    case ModelId::RescaledQuadratic:
        reject_unknown(params, {"mu", "A", "B", "C"});
        return VectorField(id, ParameterSet{number(params, "mu"), number(params, "A"), number(params, "B"),
                                            number(params, "C")});
    case ModelId::RescaledCubic:
        reject_unknown(params, {"mu", "A", "B", "C", "eps"});
        return VectorField(id, RescaledCubicParameters{{number(params, "mu"), number(params, "A"),
                                                        number(params, "B"), number(params, "C")},
                                                       number(params, "eps", false, 0.01)});
    case ModelId::UnscaledQuadratic:
    case ModelId::UnscaledCubic:
        reject_unknown(params, {"mu", "a", "b", "c", "eps"});
        return VectorField(id, UnscaledParameterSet{number(params, "mu"), number(params, "a"), number(params, "b"),
                                                    number(params, "c"), number(params, "eps")});
    case ModelId::Koper:
        reject_unknown(params, {"eps1", "eps2", "k", "lambda"});
        return VectorField(id, KoperParameters{number(params, "eps1", false, 0.1), number(params, "eps2", false, 1.0),
                                               number(params, "k", false, -10.0), number(params, "lambda")});
    }
    throw ConfigError("model", "unhandled model");
}

} // namespace singhopf
