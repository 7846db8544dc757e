// singhopf: command-line front end.
//
// Every run is described by one JSON RunConfig
//   {"command": ..., "model": ..., "params": {...}, "options": {...}, "out": dir, "workers": n}
// given with --config or assembled from subcommand flags. Reports go to
// stdout as JSON; with --out, data files are written under curves/, sweeps/
// and meshes/ with provenance sidecars.

#include "singhopf/diagrams.hpp"
#include "singhopf/errors.hpp"
#include "singhopf/io.hpp"
#include "singhopf/koper.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace singhopf;

namespace {

const std::set<std::string> kCommands{"simulate", "equilibria", "loci",    "sweep",   "curve",
                                      "diagram",  "tangency",   "regions", "koper",   "portrait"};

// Typed access to one JSON object; remembers what was read so leftovers can be rejected.
class Fields {
public:
    Fields(const json& j, std::string prefix) : j_(j), prefix_(std::move(prefix))
    {
        if (!j_.is_object())
            throw ConfigError(prefix_.empty() ? "<root>" : prefix_, "'" + prefix_ + "' must be an object");
    }

    bool has(const std::string& k) const { return j_.contains(k); }

    double num(const std::string& k, std::optional<double> fallback = std::nullopt)
    {
        used_.insert(k);
        if (!j_.contains(k)) {
            if (!fallback)
                throw ConfigError(key(k), "missing '" + key(k) + "'");
            return *fallback;
        }
        if (!j_[k].is_number())
            throw ConfigError(key(k), "'" + key(k) + "' must be a number");
        return j_[k].get<double>();
    }

    int integer(const std::string& k, int fallback)
    {
        used_.insert(k);
        if (!j_.contains(k))
            return fallback;
        if (!j_[k].is_number_integer())
            throw ConfigError(key(k), "'" + key(k) + "' must be an integer");
        return j_[k].get<int>();
    }

    bool flag(const std::string& k, bool fallback)
    {
        used_.insert(k);
        if (!j_.contains(k))
            return fallback;
        if (!j_[k].is_boolean())
            throw ConfigError(key(k), "'" + key(k) + "' must be true or false");
        return j_[k].get<bool>();
    }

    std::vector<double> numbers(const std::string& k, std::size_t n, std::optional<std::vector<double>> fallback)
    {
        used_.insert(k);
        if (!j_.contains(k)) {
            if (!fallback)
                throw ConfigError(key(k), "missing '" + key(k) + "'");
            return *fallback;
        }
        const json& v = j_[k];
        if (!v.is_array() || v.size() != n)
            throw ConfigError(key(k), "'" + key(k) + "' must be an array of " + std::to_string(n) + " numbers");
        std::vector<double> out;
        for (const auto& x : v) {
            if (!x.is_number())
                throw ConfigError(key(k), "'" + key(k) + "' must hold numbers");
            out.push_back(x.get<double>());
        }
        return out;
    }

    std::vector<std::string> strings(const std::string& k, std::vector<std::string> fallback)
    {
        used_.insert(k);
        if (!j_.contains(k))
            return fallback;
        const json& v = j_[k];
        if (!v.is_array())
            throw ConfigError(key(k), "'" + key(k) + "' must be an array of strings");
        std::vector<std::string> out;
        for (const auto& x : v) {
            if (!x.is_string())
                throw ConfigError(key(k), "'" + key(k) + "' must hold strings");
            out.push_back(x.get<std::string>());
        }
        return out;
    }

    std::string str(const std::string& k, std::string fallback)
    {
        used_.insert(k);
        if (!j_.contains(k))
            return fallback;
        if (!j_[k].is_string())
            throw ConfigError(key(k), "'" + key(k) + "' must be a string");
        return j_[k].get<std::string>();
    }

    void finish() const
    {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key()))
                throw ConfigError(key(it.key()), "unknown key '" + key(it.key()) + "'");
    }

private:
    std::string key(const std::string& k) const { return prefix_.empty() ? k : prefix_ + "." + k; }

    const json& j_;
    std::string prefix_;
    std::set<std::string> used_;
};

struct Run {
    json config;
    json params;
    json options;
    std::optional<fs::path> out;
    int workers = 1;

    json prov(const json& tolerances) const { return provenance(config, tolerances); }
};

ParameterSet normal_form(Fields& p, bool with_mu)
{
    return {with_mu ? p.num("mu") : 0.0, p.num("A"), p.num("B"), p.num("C")};
}

json complex_json(Complex z)
{
    return {z.real(), z.imag()};
}

json spectrum_json(const Spectrum& s)
{
    json a = json::array();
    for (const Complex& z : s)
        a.push_back(complex_json(z));
    return a;
}

json hopf_json(const HopfReport& h)
{
    return {{"mu", h.mu_star},
            {"X", h.location[0]},
            {"omega", h.omega},
            {"l1", h.l1},
            {"criticality", to_string(h.criticality)},
            {"routh_hurwitz_residual", h.residual}};
}

std::pair<double, double> range_of(Fields& o, const std::string& k, std::optional<std::vector<double>> fallback)
{
    const auto v = o.numbers(k, 2, fallback);
    return {v[0], v[1]};
}

FateOptions fate_options(Fields& o, const Run& run)
{
    FateOptions f;
    f.n_grid = o.integer("n_grid", f.n_grid);
    f.t_max = o.num("t_max", f.t_max);
    f.ring_radius = o.num("ring_radius", 0.0);
    f.parallel = run.workers > 1;
    f.workers = run.workers;
    return f;
}

json run_simulate(Run& run)
{
    json model_json{{"model", run.config.value("model", "rescaled_quadratic")}, {"params", run.params}};
    const VectorField field = field_from_json(model_json);
    Fields o(run.options, "options");
    IntegratorConfig cfg;
    cfg.t_max = o.num("t_max", 100.0);
    cfg.rel_tol = o.num("rel_tol", cfg.rel_tol);
    cfg.abs_tol = o.num("abs_tol", cfg.abs_tol);
    const auto x0 = o.numbers("initial", 3, std::nullopt);
    const bool backward = o.flag("backward", false);
    o.finish();
    try {
        validate(cfg);
    } catch (const DomainError& e) {
        throw ConfigError("options", e.what());
    }
    const Trajectory t = integrate(field, State(x0[0], x0[1], x0[2]), cfg, {},
                                   backward ? TimeDirection::Backward : TimeDirection::Forward);
    if (run.out) {
        std::vector<std::vector<double>> rows;
        const double sign = backward ? -1.0 : 1.0;
        for (std::size_t i = 0; i < t.states.size(); ++i)
            rows.push_back({sign * t.times[i], t.states[i][0], t.states[i][1], t.states[i][2]});
        write_csv(*run.out / "curves" / "trajectory.csv", {"t", "x0", "x1", "x2"}, rows,
                  run.prov({{"rel_tol", cfg.rel_tol}, {"abs_tol", cfg.abs_tol}}));
    }
    return {{"termination", to_string(t.termination)},
            {"final_time", t.final_time},
            {"final_state", {t.final_state[0], t.final_state[1], t.final_state[2]}},
            {"steps", t.steps}};
}

json run_equilibria(Run& run)
{
    const std::string model = run.config.value("model", "rescaled_quadratic");
    Fields p(run.params, "params");
    json list = json::array();
    if (model == "koper") {
        const KoperParameters kp{p.num("eps1", 0.1), p.num("eps2", 1.0), p.num("k", -10.0), p.num("lambda")};
        p.finish();
        const VectorField f = VectorField::koper(kp);
        for (const State& e : koper_equilibria(kp)) {
            const Spectrum s = eigenvalues_at(f, e);
            list.push_back({{"location", {e[0], e[1], e[2]}},
                            {"eigenvalues", spectrum_json(s)},
                            {"class", to_string(classify(s))}});
        }
    } else if (model == "rescaled_quadratic") {
        const ParameterSet ps = normal_form(p, true);
        p.finish();
        for (const auto& e : find_equilibria(ps))
            list.push_back({{"location", {e.location[0], e.location[1], e.location[2]}},
                            {"eigenvalues", spectrum_json(e.eigenvalues)},
                            {"class", to_string(e.cls)},
                            {"is_E_f", e.is_E_f}});
    } else {
        throw ConfigError("model", "equilibria supports the models rescaled_quadratic and koper");
    }
    Fields(run.options, "options").finish();
    const json report{{"equilibria", list}};
    if (run.out)
        write_json(*run.out / "sweeps" / "equilibria.json", {{"report", report}, {"provenance", run.prov({})}});
    return report;
}

json run_loci(Run& run)
{
    Fields p(run.params, "params");
    const double a = p.num("A"), b = p.num("B"), c = p.num("C");
    p.finish();
    Fields(run.options, "options").finish();
    json r;
    try {
        r["hopf"] = hopf_json(hopf_locus(a, b, c));
    } catch (const NotFound& e) {
        r["hopf"] = nullptr;
        r["hopf_error"] = e.what();
    }
    r["hopf_asymptotic_mu"] = hopf_seed(a, c);
    if (b != 0.0) {
        const auto sn = saddle_node_locus(a, b, c);
        r["saddle_node"] = {{"mu", sn.mu}, {"X", sn.x}};
    } else {
        r["saddle_node"] = nullptr;
    }
    r["zero_hopf_A"] = zero_hopf_A(b, c);
    r["generalized_hopf"] = json::array();
    for (const auto& g : generalized_hopf_A(b, c, true))
        r["generalized_hopf"].push_back({{"A_approx", g.a_approx},
                                         {"A_refined", g.a_refined ? json(*g.a_refined) : json(nullptr)},
                                         {"l1_at_refined", g.l1_at_refined}});
    r["canard_lines"] = canard_lines(b, c);
    r["orbit_flip_conjectured"] = json::array();
    for (const auto& f : orbit_flip_point(b, c))
        r["orbit_flip_conjectured"].push_back({{"mu", f.mu}, {"A", f.a_cap}, {"status", "CONJECTURED"}});
    if (run.out)
        write_json(*run.out / "sweeps" / "loci.json", {{"report", r}, {"provenance", run.prov({})}});
    return r;
}

json run_sweep(Run& run)
{
    Fields p(run.params, "params");
    const ParameterSet ps = normal_form(p, false);
    p.finish();
    Fields o(run.options, "options");
    const auto [lo, hi] = range_of(o, "mu", std::nullopt);
    SweepOptions s;
    s.with_tangency = o.flag("tangency", true);
    s.tangency_tol = o.num("tol", s.tangency_tol);
    s.fate = fate_options(o, run);
    o.finish();
    const SequenceRecord rec = sweep_mu(ps.a_cap, ps.b_cap, ps.c_cap, lo, hi, s);
    const json report = to_json(rec);
    if (run.out)
        write_json(*run.out / "sweeps" / "sequence.json",
                   {{"report", report},
                    {"provenance", run.prov({{"tangency_tol", s.tangency_tol},
                                             {"event_param_tol", s.continuation.event_param_tol},
                                             {"orbit_newton_tol", s.continuation.orbit.newton_tol}})}});
    return report;
}

json run_curve(Run& run)
{
    Fields p(run.params, "params");
    const double b = p.num("B"), c = p.num("C");
    p.finish();
    Fields o(run.options, "options");
    const auto kinds = o.strings("kinds", {"SN", "Hopf", "PD", "LPC", "NS"});
    const auto [a_lo, a_hi] = range_of(o, "A", std::nullopt);
    const int n = o.integer("A_points", 21);
    const auto [mu_lo, mu_hi] = range_of(o, "mu", std::nullopt);
    CurveOptions copt;
    copt.sweep.fate = fate_options(o, run);
    copt.sweep.tangency_tol = o.num("tol", copt.sweep.tangency_tol);
    copt.workers = run.workers;
    o.finish();
    if (n < 1)
        throw ConfigError("options.A_points", "'options.A_points' must be positive");
    std::vector<CurveKind> ks;
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        try {
            ks.push_back(curve_kind_from_string(kinds[i]));
        } catch (const DomainError& e) {
            throw ConfigError("options.kinds", e.what());
        }
    }
    std::vector<double> grid;
    for (int i = 0; i < n; ++i)
        grid.push_back(n == 1 ? a_lo : a_lo + (a_hi - a_lo) * i / (n - 1));

    json manifest{{"curves", json::array()}};
    for (const CurveKind k : ks) {
        const Polyline line = trace_curve(k, b, c, grid, mu_lo, mu_hi, copt);
        std::vector<std::vector<double>> rows;
        for (const auto& pt : line.points)
            rows.push_back({pt.a_cap, pt.mu, pt.bracket_width});
        json ann = json::array();
        for (const auto& a : line.annotations)
            ann.push_back({{"label", a.label}, {"mu", a.mu}, {"A", a.a_cap}});
        manifest["curves"].push_back({{"kind", to_string(k)},
                                      {"points", line.points.size()},
                                      {"file", "curves/" + std::string(to_string(k)) + ".csv"},
                                      {"annotations", ann},
                                      {"gaps", line.gaps}});
        if (run.out)
            write_csv(*run.out / "curves" / (std::string(to_string(k)) + ".csv"), {"A", "mu", "bracket_width"}, rows,
                      run.prov({{"tangency_tol", copt.sweep.tangency_tol},
                                {"event_param_tol", copt.sweep.continuation.event_param_tol}}));
    }
    const RegionInfo region = b != 0.0 ? region_classify(b, c) : RegionInfo{};
    manifest["region"] = b != 0.0 ? to_json(region) : json(nullptr);
    if (run.out)
        write_json(*run.out / "curves" / "manifest.json", {{"report", manifest}, {"provenance", run.prov({})}});
    return manifest;
}

json run_tangency(Run& run)
{
    Fields p(run.params, "params");
    const ParameterSet ps = normal_form(p, false);
    p.finish();
    Fields o(run.options, "options");
    const auto [lo, hi] = range_of(o, "mu", std::nullopt);
    const double tol = o.num("tol", 1e-6);
    FateOptions fate = fate_options(o, run);
    const bool refine = o.flag("refine", false);
    const double ray = o.num("ray_fraction", 0.25);
    const double offset = o.num("surface_offset", 5.0);
    const bool trace = o.has("trace_A");
    const auto a_range = trace ? range_of(o, "trace_A", std::nullopt) : std::pair<double, double>{};
    const double step = o.num("trace_step", 0.005);
    const bool two_pass = o.flag("two_pass", false);
    const int fine = o.integer("fine_per_interval", 3);
    o.finish();

    const TangencyPoint tp = find_tangency_mu(ps.a_cap, ps.b_cap, ps.c_cap, lo, hi, tol, fate);
    auto point_json = [](const TangencyPoint& t) {
        return json{{"mu", t.mu},
                    {"A", t.a_cap},
                    {"bracket_width", t.bracket_width},
                    {"side_low", to_string(t.side_low)},
                    {"side_high", to_string(t.side_high)},
                    {"n_grid", t.n_grid},
                    {"t_max", t.t_max}};
    };
    json report{{"tangency", point_json(tp)}};
    if (refine) {
        FoldRefineOptions fo;
        fo.surface_offset = offset;
        const TangencyPoint r = bvp_fold_refine(tp, ray, fo);
        report["refined"] = point_json(r);
        report["refined"]["ray_fraction"] = ray;
        report["refined"]["surface_offset"] = offset;
    }
    std::vector<TangencyPoint> pts{tp};
    if (trace) {
        const TangencyCurve curve =
            two_pass ? trace_tangency_two_pass(ps.b_cap, ps.c_cap, tp, a_range.first, a_range.second, step, fine, tol,
                                               fate)
                     : trace_tangency_curve(ps.b_cap, ps.c_cap, tp, a_range.first, a_range.second, step, tol, fate);
        pts = curve.points;
        report["curve_end_reason"] = curve.end_reason;
        report["curve_points"] = pts.size();
    }
    if (run.out) {
        std::vector<std::vector<double>> rows;
        json per_point = json::array();
        for (const auto& t : pts) {
            rows.push_back({t.a_cap, t.mu, t.bracket_width});
            per_point.push_back({{"A", t.a_cap}, {"n_grid", t.n_grid}, {"t_max", t.t_max}});
        }
        json prov = run.prov({{"tol", tol}, {"fate_rel_tol", FateCriteria{}.integ.rel_tol}});
        prov["points"] = per_point;
        write_csv(*run.out / "curves" / "tangency.csv", {"A", "mu", "bracket_width"}, rows, prov);
    }
    return report;
}

json run_regions(Run& run)
{
    Fields p(run.params, "params");
    const double b = p.num("B"), c = p.num("C");
    p.finish();
    Fields(run.options, "options").finish();
    json r = to_json(region_classify(b, c));
    r["canard_lines"] = canard_lines(b, c);
    if (run.out)
        write_json(*run.out / "sweeps" / "regions.json", {{"report", r}, {"provenance", run.prov({})}});
    return r;
}

json run_koper(Run& run)
{
    Fields p(run.params, "params");
    const double e1 = p.num("eps1", 0.1), e2 = p.num("eps2", 1.0), k = p.num("k", -10.0);
    p.finish();
    Fields o(run.options, "options");
    const auto [lo, hi] = range_of(o, "lambda", std::vector<double>{-9.0, -5.0});
    KoperScanOptions so;
    so.with_tangency = o.flag("tangency", true);
    so.tangency_tol = o.num("tol", so.tangency_tol);
    so.fate.workers = run.workers;
    so.fate.parallel = run.workers > 1;
    const double mmo_lambda = o.num("mmo_lambda", -7.5);
    const double mmo_t = o.num("mmo_t_max", 2000.0);
    const double threshold = o.num("mmo_threshold", 1.0);
    o.finish();

    const KoperScanResult r = koper_scan(e1, e2, k, lo, hi, so);
    Trajectory series;
    const MmoSignature m = detect_mmo(e1, e2, k, mmo_lambda, mmo_t, threshold, run.out ? &series : nullptr);
    json report{{"lambda_hopf", r.lambda_hopf},
                {"lambda_pd", r.lambda_pd},
                {"lambda_lpc", r.lambda_lpc},
                {"periods", r.periods},
                {"lambda_tangency", r.lambda_tangency ? json(*r.lambda_tangency) : json(nullptr)},
                {"criticality", to_string(r.criticality)},
                {"routh_hurwitz_residual", r.hopf_residual},
                {"lpc_nonlocal", r.lpc_nonlocal},
                {"mmo",
                 {{"lambda", mmo_lambda},
                  {"large_count", m.large_count},
                  {"small_counts", m.small_counts},
                  {"threshold", m.threshold},
                  {"quiescent", m.quiescent},
                  {"pattern", m.pattern}}}};
    if (run.out) {
        write_json(*run.out / "sweeps" / "koper.json", {{"report", report}, {"provenance", run.prov({})}});
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < series.states.size(); ++i)
            rows.push_back({series.times[i], series.states[i][0], series.states[i][1], series.states[i][2]});
        write_csv(*run.out / "meshes" / "mmo.csv", {"t", "x", "y", "z"}, rows,
                  run.prov({{"rel_tol", IntegratorConfig{}.rel_tol}, {"abs_tol", IntegratorConfig{}.abs_tol}}));
    }
    return report;
}

json run_portrait(Run& run)
{
    Fields p(run.params, "params");
    const ParameterSet ps = normal_form(p, true);
    p.finish();
    Fields o(run.options, "options");
    const std::string axis = o.str("plane_axis", "Y");
    const double offset = o.num("plane_offset", 0.5);
    const auto objects = o.strings("objects", {"Sa", "Sr", "WuEf", "WsEf", "Gamma"});
    const int n_rays = o.integer("n_rays", 32);
    const double t_max = o.num("t_max", 1000.0);
    o.finish();
    if (axis != "X" && axis != "Y" && axis != "Z")
        throw ConfigError("options.plane_axis", "'options.plane_axis' must be X, Y or Z");

    std::vector<ManifoldMesh> meshes;
    const auto ef = fold_equilibrium(ps);
    for (const auto& name : objects) {
        if (name == "Sa") {
            meshes.push_back(slow_manifold(ps, SheetKind::Attracting, SeedLine{}));
        } else if (name == "Sr") {
            meshes.push_back(slow_manifold(ps, SheetKind::Repelling, SeedLine{-2.0, -1.0, 1.0, 9}));
        } else if (name == "WuEf" || name == "WsEf") {
            if (!ef)
                throw PreconditionError("portrait: no equilibrium E_f at these parameters");
            meshes.push_back(name == "WuEf" ? unstable_manifold_mesh(ps, *ef, 0.0, n_rays, t_max)
                                            : stable_manifold_1d(ps, *ef));
        } else if (name == "Gamma") {
            const auto g = locate_gamma(ps);
            if (!g)
                throw PreconditionError("portrait: no periodic orbit Gamma at these parameters");
            ManifoldMesh m;
            m.label = ManifoldLabel::Gamma;
            m.trajectories.push_back(sample_orbit(VectorField::rescaled(ps), *g));
            m.seeds.push_back(g->anchor);
            m.seed_description = "Gamma anchor on its section";
            meshes.push_back(std::move(m));
        } else {
            throw ConfigError("options.objects", "unknown object '" + name + "'");
        }
    }
    PlaneCrossing plane;
    plane.normal = Vec3::Unit(axis == "X" ? 0 : (axis == "Y" ? 1 : 2));
    plane.offset = offset;
    plane.direction = CrossingDirection::Increasing;
    const auto pts = section_portrait(VectorField::rescaled(ps), plane, meshes);
    json counts = json::object();
    for (std::size_t i = 0; i < meshes.size(); ++i)
        counts[std::string(to_string(meshes[i].label))] = 0;
    for (const auto& pt : pts)
        counts[std::string(to_string(meshes[pt.object].label))] = counts[std::string(to_string(meshes[pt.object].label))].get<int>() + 1;
    if (run.out) {
        std::vector<std::vector<double>> rows;
        for (const auto& pt : pts)
            rows.push_back({static_cast<double>(pt.object), static_cast<double>(pt.trajectory), pt.point[0],
                            pt.point[1], pt.point[2]});
        json prov = run.prov({{"rel_tol", IntegratorConfig{}.rel_tol}});
        prov["objects"] = objects;
        write_csv(*run.out / "meshes" / "portrait.csv", {"object", "trajectory", "X", "Y", "Z"}, rows, prov);
    }
    return {{"crossings", counts}, {"objects", objects}};
}

int default_workers()
{
    if (const char* env = std::getenv("SINGHOPF_WORKERS")) {
        try {
            const int w = std::stoi(env);
            if (w > 0)
                return w;
        } catch (const std::exception&) {
        }
        throw ConfigError("SINGHOPF_WORKERS", "SINGHOPF_WORKERS must be a positive integer");
    }
    return omp_get_num_procs();
}

json run(const json& config)
{
    Fields top(config, "");
    const std::string command = top.str("command", "");
    if (!kCommands.count(command))
        throw ConfigError("command", "unknown or missing command '" + command + "'");
    const std::string model = top.str("model", command == "koper" ? "koper" : "rescaled_quadratic");
    try {
        model_from_string(model);
    } catch (const DomainError& e) {
        throw ConfigError("model", e.what());
    }
    Run r;
    r.config = config;
    r.config["model"] = model;
    for (const char* k : {"params", "options"}) {
        if (config.contains(k) && !config[k].is_object())
            throw ConfigError(k, std::string("'") + k + "' must be an object");
    }
    r.params = config.value("params", json::object());
    r.options = config.value("options", json::object());
    const std::string out = top.str("out", "");
    if (!out.empty())
        r.out = fs::path(out);
    r.workers = top.has("workers") ? top.integer("workers", 1) : default_workers();
    if (r.workers < 1)
        throw ConfigError("workers", "'workers' must be positive");
    for (auto it = config.begin(); it != config.end(); ++it)
        if (it.key() != "params" && it.key() != "options" && it.key() != "command" && it.key() != "model" &&
            it.key() != "out" && it.key() != "workers")
            throw ConfigError(it.key(), "unknown key '" + it.key() + "'");
    omp_set_num_threads(r.workers);

    if (model != "rescaled_quadratic" && command != "simulate" && command != "equilibria" && command != "koper")
        throw ConfigError("model", "command '" + command + "' works on the rescaled_quadratic model");
    if (command == "koper" && model != "koper")
        throw ConfigError("model", "command 'koper' requires the koper model");

    json report;
    if (command == "simulate")
        report = run_simulate(r);
    else if (command == "equilibria")
        report = run_equilibria(r);
    else if (command == "loci")
        report = run_loci(r);
    else if (command == "sweep")
        report = run_sweep(r);
    else if (command == "curve" || command == "diagram")
        report = run_curve(r);
    else if (command == "tangency")
        report = run_tangency(r);
    else if (command == "regions")
        report = run_regions(r);
    else if (command == "koper")
        report = run_koper(r);
    else
        report = run_portrait(r);
    return {{"command", command}, {"report", report}, {"provenance", r.prov({})}};
}

// "lo:hi" -> [lo, hi]
json parse_range(const std::string& flag, const std::string& text)
{
    const auto colon = text.find(':', 1);
    try {
        if (colon == std::string::npos)
            throw std::invalid_argument(text);
        std::size_t n1 = 0, n2 = 0;
        const double lo = std::stod(text.substr(0, colon), &n1);
        const double hi = std::stod(text.substr(colon + 1), &n2);
        if (n1 != colon || n2 != text.size() - colon - 1)
            throw std::invalid_argument(text);
        return {lo, hi};
    } catch (const std::exception&) {
        throw ConfigError(flag, "--" + flag + " expects lo:hi, got '" + text + "'");
    }
}

int fail(int code, const std::string& what, const std::string& key)
{
    json e{{"error", what}};
    if (!key.empty())
        e["key"] = key;
    std::cout << e.dump(2) << std::endl;
    return code;
}


} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Singular Hopf normal-form toolkit"};
    app.require_subcommand(0, 1);
    app.fallthrough(); // --config, --out and --workers may follow the subcommand
    std::string config_path, out_dir, model;
    int workers = 0;
    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--workers", workers, "worker threads (default: SINGHOPF_WORKERS or all cores)");

    // Storage for every flag; only flags actually given reach the config.
    std::map<std::string, double> nums;
    std::map<std::string, int> ints;
    std::map<std::string, std::string> texts;
    std::map<std::string, bool> bools;
    std::map<std::string, CLI::Option*> given;

    auto param = [&](CLI::App* sub, const std::string& name) {
        given["p:" + sub->get_name() + ":" + name] = sub->add_option("--" + name, nums["p:" + name]);
    };
    auto onum = [&](CLI::App* sub, const std::string& flag, const std::string& key) {
        given["o:" + sub->get_name() + ":" + key] = sub->add_option("--" + flag, nums["o:" + key]);
    };
    auto oint = [&](CLI::App* sub, const std::string& flag, const std::string& key) {
        given["i:" + sub->get_name() + ":" + key] = sub->add_option("--" + flag, ints[key]);
    };
    auto orange = [&](CLI::App* sub, const std::string& flag, const std::string& key) {
        given["r:" + sub->get_name() + ":" + key] = sub->add_option("--" + flag, texts["r:" + key], "lo:hi");
    };
    auto oflag = [&](CLI::App* sub, const std::string& flag, const std::string& key) {
        given["b:" + sub->get_name() + ":" + key] = sub->add_flag("--" + flag, bools[key]);
    };
    auto nf = [&](CLI::App* sub, bool mu) {
        if (mu)
            param(sub, "mu");
        for (const char* n : {"A", "B", "C"})
            param(sub, n);
    };
    auto fate = [&](CLI::App* sub) {
        oint(sub, "n-grid", "n_grid");
        onum(sub, "t-max", "t_max");
        onum(sub, "ring-radius", "ring_radius");
    };

    auto* simulate = app.add_subcommand("simulate", "integrate one trajectory");
    simulate->add_option("--model", model, "model name");
    nf(simulate, true);
    for (const char* n : {"a", "b", "c", "eps", "eps1", "eps2", "k", "lambda"})
        param(simulate, n);
    given["t:simulate:initial"] = simulate->add_option("--initial", texts["initial"], "x,y,z")->required();
    onum(simulate, "t-max", "t_max");
    oflag(simulate, "backward", "backward");

    auto* equilibria = app.add_subcommand("equilibria", "equilibria and their spectra");
    equilibria->add_option("--model", model, "rescaled_quadratic or koper");
    nf(equilibria, true);
    for (const char* n : {"eps1", "eps2", "k", "lambda"})
        param(equilibria, n);

    auto* loci = app.add_subcommand("loci", "analytic SN, Hopf, ZH, GH loci at fixed (A, B, C)");
    nf(loci, false);

    auto* sweep = app.add_subcommand("sweep", "mu-sequence of bifurcations at fixed (A, B, C)");
    nf(sweep, false);
    orange(sweep, "mu-range", "mu");
    oflag(sweep, "no-tangency", "no_tangency");
    onum(sweep, "tol", "tol");
    fate(sweep);

    auto* curve = app.add_subcommand("curve", "bifurcation curves in the (mu, A) plane");
    curve->alias("diagram");
    param(curve, "B");
    param(curve, "C");
    orange(curve, "A-range", "A");
    orange(curve, "mu-range", "mu");
    oint(curve, "A-points", "A_points");
    given["k:curve:kinds"] = curve->add_option("--kinds", texts["kinds"], "comma list of SN,Hopf,PD,LPC,NS,T");
    onum(curve, "tol", "tol");
    fate(curve);

    auto* tangency = app.add_subcommand("tangency", "tangency of W^u(E_f) with the repelling slow manifold");
    nf(tangency, false);
    orange(tangency, "mu-range", "mu");
    onum(tangency, "tol", "tol");
    fate(tangency);
    oflag(tangency, "refine", "refine");
    onum(tangency, "ray-fraction", "ray_fraction");
    onum(tangency, "surface-offset", "surface_offset");
    orange(tangency, "trace-A", "trace_A");
    onum(tangency, "trace-step", "trace_step");
    oflag(tangency, "two-pass", "two_pass");
    oint(tangency, "fine-per-interval", "fine_per_interval");

    auto* regions = app.add_subcommand("regions", "(B, C) region classification");
    param(regions, "B");
    param(regions, "C");

    auto* koper = app.add_subcommand("koper", "Koper model scan and MMO signature");
    for (const char* n : {"eps1", "eps2", "k"})
        param(koper, n);
    orange(koper, "lambda-range", "lambda");
    oflag(koper, "no-tangency", "no_tangency");
    onum(koper, "tol", "tol");
    onum(koper, "mmo-lambda", "mmo_lambda");
    onum(koper, "mmo-t-max", "mmo_t_max");
    onum(koper, "mmo-threshold", "mmo_threshold");

    auto* portrait = app.add_subcommand("portrait", "section portrait of slow manifolds, W(E_f) and Gamma");
    nf(portrait, true);
    given["t:portrait:plane_axis"] = portrait->add_option("--plane-axis", texts["plane_axis"], "X, Y or Z");
    onum(portrait, "plane-offset", "plane_offset");
    given["k:portrait:objects"] = portrait->add_option("--objects", texts["objects"], "comma list");
    oint(portrait, "n-rays", "n_rays");
    onum(portrait, "t-max", "t_max");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail(2, e.what(), "");
    }

    try {
        json config = json::object();
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in)
                throw ConfigError("config", "cannot read " + config_path);
            try {
                config = json::parse(in);
            } catch (const json::parse_error& e) {
                throw ConfigError("config", std::string("malformed JSON: ") + e.what());
            }
            if (!config.is_object())
                throw ConfigError("config", "the run configuration must be a JSON object");
        }
        const auto subs = app.get_subcommands();
        if (!subs.empty()) {
            const std::string name = subs.front()->get_name();
            config["command"] = name;
            if (!model.empty())
                config["model"] = model;
            json& params = config["params"];
            json& options = config["options"];
            if (params.is_null())
                params = json::object();
            if (options.is_null())
                options = json::object();
            auto split = [](const std::string& text) {
                std::vector<std::string> out;
                std::stringstream ss(text);
                for (std::string item; std::getline(ss, item, ',');)
                    if (!item.empty())
                        out.push_back(item);
                return out;
            };
            for (const auto& [tag, opt] : given) {
                if (opt->count() == 0)
                    continue;
                const auto c1 = tag.find(':'), c2 = tag.find(':', c1 + 1);
                if (tag.substr(c1 + 1, c2 - c1 - 1) != name)
                    continue;
                const char type = tag[0];
                const std::string key = tag.substr(c2 + 1);
                if (type == 'p')
                    params[key] = nums["p:" + key];
                else if (type == 'o')
                    options[key] = nums["o:" + key];
                else if (type == 'i')
                    options[key] = ints[key];
                else if (type == 'r')
                    options[key] = parse_range(opt->get_name().substr(2), texts["r:" + key]);
                else if (type == 'k')
                    options[key] = split(texts[key]);
                else if (type == 'b') {
                    if (key == "no_tangency")
                        options["tangency"] = false;
                    else
                        options[key] = bools[key];
                } else if (type == 't' && key == "initial") {
                    json v = json::array();
                    for (const auto& s : split(texts[key])) {
                        try {
                            v.push_back(std::stod(s));
                        } catch (const std::exception&) {
                            throw ConfigError("initial", "--initial expects x,y,z");
                        }
                    }
                    options["initial"] = v;
                } else if (type == 't') {
                    options[key] = texts[key];
                }
            }
        } else if (config_path.empty()) {
            std::cout << app.help() << std::endl;
            return 2;
        }
        if (!out_dir.empty())
            config["out"] = out_dir;
        if (workers > 0)
            config["workers"] = workers;
        std::cout << run(config).dump(2) << std::endl;
        return 0;
    } catch (const ConfigError& e) {
        return fail(2, e.what(), e.key());
    } catch (const std::exception& e) {
        return fail(1, e.what(), "");
    }
}
