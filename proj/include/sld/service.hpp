#pragma once

// Headless solve pipeline and the session-scoped JSON API behind the
// HTTP server.

#include <charconv>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "sld/per_unit.hpp"
#include "sld/persistence.hpp"
#include "sld/power_flow.hpp"
#include "sld/state_estimation.hpp"
#include "sld/validate.hpp"

namespace sld {

enum class SolveMethod { None, GaussSeidel, NewtonRaphson, Wls, Fdse };

inline std::string_view method_name(SolveMethod m) {
    switch (m) {
        case SolveMethod::None: return "none";
        case SolveMethod::GaussSeidel: return "gs";
        case SolveMethod::NewtonRaphson: return "nr";
        case SolveMethod::Wls: return "wls";
        case SolveMethod::Fdse: return "fdse";
    }
    return "";
}

inline std::optional<SolveMethod> parse_method(std::string_view s) {
    for (auto m : {SolveMethod::None, SolveMethod::GaussSeidel, SolveMethod::NewtonRaphson, SolveMethod::Wls, SolveMethod::Fdse})
        if (iequals(s, method_name(m))) return m;
    return std::nullopt;
}

inline SolveMethod default_method(Mode mode) {
    switch (mode) {
        case Mode::PerUnit: return SolveMethod::None;
        case Mode::PowerFlow: return SolveMethod::NewtonRaphson;
        case Mode::StateEstimation: return SolveMethod::Wls;
    }
    return SolveMethod::None;
}

inline bool method_fits(SolveMethod method, Mode mode) {
    switch (mode) {
        case Mode::PerUnit: return method == SolveMethod::None;
        case Mode::PowerFlow: return method == SolveMethod::GaussSeidel || method == SolveMethod::NewtonRaphson;
        case Mode::StateEstimation: return method == SolveMethod::Wls || method == SolveMethod::Fdse;
    }
    return false;
}

struct SolveOptions {
    std::optional<std::string> method;
    std::optional<std::size_t> iterations;
    std::optional<double> tolerance;
    std::optional<double> acceleration;
};

enum class SolveStatus { Ok, Invalid, Failed };

inline std::string_view status_name(SolveStatus s) {
    switch (s) {
        case SolveStatus::Ok: return "ok";
        case SolveStatus::Invalid: return "invalid";
        case SolveStatus::Failed: return "failed";
    }
    return "";
}

struct SolveResponse {
    SolveStatus status = SolveStatus::Invalid;
    Mode mode = Mode::PowerFlow;
    SolveMethod method = SolveMethod::None;
    Violations violations;
    Json solution;  // null unless a solver ran
    Json overlay;   // null unless status is ok
    std::string trace_text;
    std::optional<std::pair<std::string, std::string>> error;  // name, message
};

inline Json violations_json(const Violations& v) {
    Json out = Json::array();
    for (const auto& x : v)
        out.push_back({{"code", x.code},
                       {"component", x.component ? Json(x.component->value) : Json(nullptr)},
                       {"message", x.message}});
    return out;
}

inline Json to_json(const SolveResponse& r) {
    return {{"status", status_name(r.status)},
            {"mode", mode_name(r.mode)},
            {"method", method_name(r.method)},
            {"violations", violations_json(r.violations)},
            {"solution", r.solution},
            {"overlay", r.overlay},
            {"trace_text", r.trace_text},
            {"error", r.error ? Json{{"name", r.error->first}, {"message", r.error->second}} : Json(nullptr)}};
}

namespace detail {

inline Json ids_json(const std::vector<ComponentId>& ids) {
    Json out = Json::array();
    for (auto id : ids) out.push_back(id.value);
    return out;
}

inline Json bus_json(const BusSystem& sys, std::span<const double> v, std::span<const double> theta) {
    Json out = Json::array();
    for (const auto& b : sys.buses)
        out.push_back({{"index", b.index},
                       {"name", b.name},
                       {"type", props::bus_type_text(b.kind)},
                       {"bus_bars", ids_json(b.bus_bars)},
                       {"v_pu", v[b.index]},
                       {"theta_deg", rad_to_deg(theta[b.index])}});
    return out;
}

inline Json branch_json(const BusSystem& sys, const std::vector<BranchFlow>& flows, double base) {
    Json out = Json::array();
    for (const auto& f : flows) {
        const auto& br = sys.branches[f.branch];
        out.push_back({{"index", f.branch},
                       {"source", br.source ? Json(br.source->value) : Json(nullptr)},
                       {"from", br.from},
                       {"to", br.to},
                       {"p_from_mw", f.p_from * base},
                       {"q_from_mvar", f.q_from * base},
                       {"p_to_mw", f.p_to * base},
                       {"q_to_mvar", f.q_to * base},
                       {"p_loss_mw", f.p_loss * base},
                       {"q_loss_mvar", f.q_loss * base}});
    }
    return out;
}

/// Canvas annotations: bus V and angle by bus-bar id, branch sending-end
/// P/Q by line or transformer id.
inline Json network_overlay(const BusSystem& sys, std::span<const double> v, std::span<const double> theta,
                            const std::vector<BranchFlow>& flows, double base) {
    Json buses = Json::object(), branches = Json::object();
    for (const auto& [id, bus] : sys.bus_of) {
        if (std::find(sys.buses[bus].bus_bars.begin(), sys.buses[bus].bus_bars.end(), id) == sys.buses[bus].bus_bars.end())
            continue;
        buses[to_string(id)] = {{"v_pu", v[bus]}, {"theta_deg", rad_to_deg(theta[bus])}};
    }
    for (const auto& f : flows)
        if (const auto& src = sys.branches[f.branch].source)
            branches[to_string(*src)] = {{"p_mw", f.p_from * base}, {"q_mvar", f.q_from * base}};
    return {{"buses", buses}, {"branches", branches}};
}

inline std::vector<std::pair<std::string, std::string>> no_config() { return {}; }

inline SolveResponse solve_power_flow_mode(const Network& net, SolveMethod method, const SolveOptions& opt) {
    SolveResponse r{SolveStatus::Failed, net.mode(), method, {}, nullptr, nullptr, {}, std::nullopt};
    GaussSeidelConfig gs;
    NewtonRaphsonConfig nr;
    if (opt.iterations) gs.max_iterations = nr.max_iterations = *opt.iterations;
    if (opt.tolerance) gs.tolerance = nr.tolerance = *opt.tolerance;
    if (opt.acceleration) gs.acceleration = *opt.acceleration;
    const auto run = solve_power_flow(net, method == SolveMethod::GaussSeidel ? PowerFlowMethod::GaussSeidel
                                                                               : PowerFlowMethod::NewtonRaphson,
                                      gs, nr);
    const auto& sol = run.solution;
    const double base = net.system_base_mva();
    Json buses = bus_json(run.system, sol.v, sol.theta);
    for (std::size_t i = 0; i < buses.size(); ++i) {
        buses[i]["p_mw"] = sol.p_calc[i] * base;
        buses[i]["q_mvar"] = sol.q_calc[i] * base;
    }
    Json warnings = run.system.warnings;
    r.solution = {{"converged", sol.converged},
                  {"iterations", sol.iterations_run},
                  {"max_mismatch_pu", sol.max_mismatch},
                  {"base_mva", base},
                  {"buses", buses},
                  {"branches", branch_json(run.system, sol.branch_flows, base)},
                  {"warnings", warnings}};
    r.trace_text = render_text(run.trace);
    if (sol.converged) {
        r.status = SolveStatus::Ok;
        r.overlay = network_overlay(run.system, sol.v, sol.theta, sol.branch_flows, base);
    } else {
        r.error = {"Diverged", fmt::format("no convergence within {} iterations", sol.iterations_run)};
    }
    return r;
}

inline SolveResponse solve_estimation_mode(const Network& net, SolveMethod method, const SolveOptions& opt) {
    SolveResponse r{SolveStatus::Failed, net.mode(), method, {}, nullptr, nullptr, {}, std::nullopt};
    const BusSystem sys = extract_bus_system(net);
    const EstimationModel model = make_estimation_model(sys);
    const MeasurementSet set = meters_to_measurements(net, sys);
    EstimatorConfig cfg = method == SolveMethod::Fdse ? default_fdse_config() : EstimatorConfig{};
    if (opt.iterations) cfg.max_iterations = *opt.iterations;
    if (opt.tolerance) cfg.tolerance = *opt.tolerance;
    auto [est, trace] = method == SolveMethod::Fdse ? fdse_estimate(set, model, std::nullopt, cfg)
                                                    : wls_estimate(set, model, std::nullopt, cfg);
    const double base = net.system_base_mva();
    PowerFlowSolution state;
    state.v = est.v;
    state.theta = est.theta;
    const auto flows = compute_branch_flows(state, sys.branches);
    const auto report = residual_report(est, set);

    Json residuals = Json::array();
    Json meters = Json::object();
    for (const auto& e : report.entries) {
        const auto& m = set.items[e.index];
        Json item{{"index", e.index},
                  {"kind", measurement_kind_name(e.kind)},
                  {"meter", e.meter ? Json(e.meter->value) : Json(nullptr)},
                  {"location", m.location},
                  {"from_end", m.from_end},
                  {"measured_pu", e.measured},
                  {"estimated_pu", e.estimated},
                  {"residual_pu", e.residual},
                  {"normalized", e.normalized},
                  {"largest", e.largest}};
        if (e.meter) meters[to_string(*e.meter)].push_back(item);
        residuals.push_back(std::move(item));
    }
    r.solution = {{"converged", est.converged},
                  {"iterations", est.iterations_run},
                  {"objective", est.objective},
                  {"base_mva", base},
                  {"buses", bus_json(sys, est.v, est.theta)},
                  {"branches", branch_json(sys, flows, base)},
                  {"residuals", residuals},
                  {"largest_residual", report.largest ? Json(*report.largest) : Json(nullptr)}};
    r.trace_text = render_text(trace);
    if (est.converged) {
        r.status = SolveStatus::Ok;
        r.overlay = network_overlay(sys, est.v, est.theta, flows, base);
        r.overlay["meters"] = meters;
    } else {
        r.error = {"Diverged", fmt::format("no convergence within {} iterations", est.iterations_run)};
    }
    return r;
}

inline SolveResponse solve_per_unit_mode(const Network& net) {
    SolveResponse r{SolveStatus::Failed, net.mode(), SolveMethod::None, {}, nullptr, nullptr, {}, std::nullopt};
    SolveTrace trace("per-unit", no_config());
    const auto bases = resolve_bases(net, &trace);
    const auto report = convert_to_per_unit(net, bases, &trace);
    trace.finalize({true, 0, fmt::format("{} region(s) on {} MVA", report.regions.size(), report.s_base / 1e6)});

    Json regions = Json::array();
    for (const auto& rb : report.regions)
        regions.push_back({{"region", rb.region}, {"v_base_kv", rb.v_base / 1e3}, {"z_base_ohm", rb.z_base}});
    Json components = Json::array();
    Json overlay = Json::object();
    for (const auto& cp : report.components) {
        Json entries = Json::array();
        for (const auto& e : cp.entries)
            entries.push_back({{"quantity", e.quantity},
                               {"value", e.value},
                               {"unit", e.unit},
                               {"base", e.base},
                               {"per_unit", e.per_unit},
                               {"region", e.region}});
        Json brief = Json::object();
        for (const auto& e : cp.entries) brief[e.quantity] = e.per_unit;
        overlay[to_string(cp.id)] = brief;
        components.push_back({{"id", cp.id.value}, {"kind", kind_name(cp.kind)}, {"name", cp.name}, {"entries", entries}});
    }
    r.solution = {{"s_base_mva", report.s_base / 1e6}, {"regions", regions}, {"components", components}};
    r.overlay = {{"components", overlay}};
    r.trace_text = render_text(trace);
    r.status = SolveStatus::Ok;
    return r;
}

}  // namespace detail

/// Validate, then run the mode's solver. Never throws for module errors:
/// they come back as status invalid (gate failures) or failed (solver).
inline SolveResponse solve_project(const Network& net, const SolveOptions& opt = {}) {
    SolveResponse r{SolveStatus::Invalid, net.mode(), default_method(net.mode()), {}, nullptr, nullptr, {}, std::nullopt};
    if (opt.method) {
        const auto m = parse_method(*opt.method);
        if (!m || !method_fits(*m, net.mode())) {
            r.violations.push_back({"MethodModeMismatch", std::nullopt,
                                    fmt::format("method '{}' does not apply to {} mode", *opt.method, mode_name(net.mode()))});
            return r;
        }
        r.method = *m;
    }
    if (opt.iterations && *opt.iterations == 0)
        r.violations.push_back({"BadRequest", std::nullopt, "iterations must be >= 1"});
    if (opt.tolerance && !(*opt.tolerance > 0.0)) r.violations.push_back({"BadRequest", std::nullopt, "tolerance must be > 0"});
    if (opt.acceleration && !(*opt.acceleration > 0.0 && *opt.acceleration <= 2.0))
        r.violations.push_back({"BadRequest", std::nullopt, "acceleration must lie in (0, 2]"});
    for (auto& v : validate(net)) r.violations.push_back(std::move(v));
    if (!r.violations.empty()) return r;

    try {
        SolveResponse out;
        switch (net.mode()) {
            case Mode::PerUnit: out = detail::solve_per_unit_mode(net); break;
            case Mode::PowerFlow: out = detail::solve_power_flow_mode(net, r.method, opt); break;
            case Mode::StateEstimation: out = detail::solve_estimation_mode(net, r.method, opt); break;
        }
        return out;
    } catch (const SolveFailure& e) {
        r.status = SolveStatus::Failed;
        r.trace_text = render_text(e.trace());
        r.error = {std::string(e.name()), e.detail()};
    } catch (const Error& e) {
        r.status = SolveStatus::Failed;
        r.error = {std::string(e.name()), e.detail()};
    }
    return r;
}

inline int http_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::UnknownSession:
        case ErrorCode::UnknownComponent: return 404;
        case ErrorCode::BusBarConnected:
        case ErrorCode::PortOccupied:
        case ErrorCode::InvariantViolation: return 409;
        case ErrorCode::IoFailure: return 500;
        default: return 400;
    }
}

inline ComponentSpec default_spec(ComponentKind kind) {
    switch (kind) {
        case ComponentKind::Generator: return GeneratorSpec{};
        case ComponentKind::Transformer: return TransformerSpec{};
        case ComponentKind::Load: return LoadSpec{};
        case ComponentKind::BusBar: return BusBarSpec{};
        case ComponentKind::Meter: return MeterSpec{std::nullopt, std::nullopt, MeterChannel{{1.0, Unit::PerUnit}, std::nullopt}};
        case ComponentKind::PUBase: return PUBaseSpec{};
        case ComponentKind::Line: break;
    }
    fail(ErrorCode::BadRequest, "lines are drawn between ports, not placed");
}

/// Kinds available per mode with their editable properties and defaults.
inline Json component_catalog() {
    Json out = Json::array();
    for (auto kind : kAllKinds) {
        Json modes = Json::array();
        for (auto m : {Mode::PerUnit, Mode::PowerFlow, Mode::StateEstimation})
            if (available_in(kind, m)) modes.push_back(mode_name(m));
        const PropertyMap defaults =
            kind == ComponentKind::Line ? render_properties(LineSpec{}) : render_properties(default_spec(kind));
        Json props = Json::object();
        for (const auto& [k, v] : defaults) props[k] = v;
        out.push_back({{"kind", kind_name(kind)},
                       {"ports", port_count(kind)},
                       {"modes", modes},
                       {"defaults", props}});
    }
    return out;
}

/// Session-scoped project API. `handle` is safe to call from many threads:
/// edits serialise per session, solves run on a snapshot.
class Service {
  public:
    struct Response {
        int status = 200;
        Json body;
    };

    Response handle(std::string_view method, std::string_view path, std::string_view body) {
        try {
            const auto parts = split_path(path);
            const Json req = parse_body(body);
            return route(method, parts, req);
        } catch (const Error& e) {
            return error(http_status(e.code()), e.name(), e.detail());
        } catch (const nlohmann::json::exception& e) {
            return error(400, "BadRequest", e.what());
        }
    }

    std::size_t session_count() const {
        std::lock_guard lock(sessions_mutex_);
        return sessions_.size();
    }

  private:
    struct Session {
        std::mutex mutex;
        Network net;
    };

    static Response error(int status, std::string_view name, const std::string& message) {
        return {status, {{"error", {{"name", name}, {"message", message}}}}};
    }

    static std::vector<std::string> split_path(std::string_view path) {
        if (auto q = path.find('?'); q != std::string_view::npos) path = path.substr(0, q);
        std::vector<std::string> out;
        std::size_t i = 0;
        while (i < path.size()) {
            const auto j = path.find('/', i);
            const auto piece = path.substr(i, j == std::string_view::npos ? std::string_view::npos : j - i);
            if (!piece.empty()) out.emplace_back(piece);
            if (j == std::string_view::npos) break;
            i = j + 1;
        }
        return out;
    }

    static Json parse_body(std::string_view body) {
        if (split_whitespace(body).empty()) return Json::object();
        try {
            auto j = Json::parse(body);
            if (!j.is_object()) fail(ErrorCode::BadRequest, "request body must be a JSON object");
            return j;
        } catch (const nlohmann::json::parse_error& e) {
            fail(ErrorCode::BadRequest, e.what());
        }
    }

    static ComponentId parse_id(const std::string& s) {
        std::uint64_t v = 0;
        const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || p != s.data() + s.size()) fail(ErrorCode::BadRequest, "bad id '" + s + "'");
        return ComponentId{v};
    }

    std::shared_ptr<Session> session(const std::string& key) {
        std::lock_guard lock(sessions_mutex_);
        auto it = sessions_.find(key);
        if (it == sessions_.end()) fail(ErrorCode::UnknownSession, "no session " + key);
        return it->second;
    }

    Response open_session(Network net) {
        auto s = std::make_shared<Session>();
        s->net = std::move(net);
        Json doc = to_document(s->net);
        std::string key;
        {
            std::lock_guard lock(sessions_mutex_);
            key = "s" + std::to_string(next_session_++);
            sessions_.emplace(key, std::move(s));
        }
        return {201, {{"session", key}, {"project", doc}}};
    }

    static Json component_json(const Network& net, ComponentId id) {
        const Json doc = to_document(net);
        for (const auto* list : {&doc.at("components"), &doc.at("lines")})
            for (const auto& item : *list)
                if (item.at("id").get<std::uint64_t>() == id.value) return item;
        return nullptr;
    }

    static Json delta(const Network& net, const std::vector<ComponentId>& created, const std::vector<ComponentId>& removed,
                      const std::vector<ComponentId>& updated) {
        Json c = Json::array(), u = Json::array();
        for (auto id : created) c.push_back(component_json(net, id));
        for (auto id : updated) u.push_back(component_json(net, id));
        return {{"created", c}, {"removed", detail::ids_json(removed)}, {"updated", u}};
    }

    static PortRef port_ref(const Json& j) {
        const ComponentId id{j.at("component").get<std::uint64_t>()};
        if (j.contains("port")) return PortRef::indexed(id, j.at("port").get<int>());
        if (j.contains("point")) return PortRef::on_bar(id, io::read_point(j.at("point")));
        fail(ErrorCode::BadRequest, "line end needs port or point");
    }

    static SolveOptions solve_options(const Json& req) {
        SolveOptions o;
        if (req.contains("method")) o.method = req.at("method").get<std::string>();
        if (req.contains("iterations")) o.iterations = req.at("iterations").get<std::size_t>();
        if (req.contains("tolerance")) o.tolerance = req.at("tolerance").get<double>();
        if (req.contains("acceleration")) o.acceleration = req.at("acceleration").get<double>();
        return o;
    }

    static std::optional<Mode> mode_of(const Json& req) {
        if (!req.contains("mode")) return std::nullopt;
        const auto text = req.at("mode").get<std::string>();
        const auto m = parse_mode(text);
        if (!m) fail(ErrorCode::BadRequest, "unknown mode '" + text + "'");
        return m;
    }

    Response route(std::string_view method, const std::vector<std::string>& p, const Json& req) {
        const auto n = p.size();
        if (method == "GET" && n == 1 && p[0] == "catalog") return {200, {{"kinds", component_catalog()}}};
        if (method == "POST" && n == 1 && p[0] == "solve") {
            Network net = req.contains("path") ? load_project(req.at("path").get<std::string>(), mode_of(req))
                                               : from_document(req.at("project"), mode_of(req));
            return {200, to_json(solve_project(net, solve_options(req)))};
        }
        if (n >= 1 && p[0] == "projects") {
            if (n == 1 && method == "POST") {
                if (req.contains("project")) return open_session(from_document(req.at("project"), mode_of(req)));
                return open_session(Network(mode_of(req).value_or(Mode::PowerFlow)));
            }
            if (n == 2 && p[1] == "open" && method == "POST")
                return open_session(load_project(req.at("path").get<std::string>(), mode_of(req)));
            if (n >= 2) return session_route(method, p, req);
        }
        fail(ErrorCode::BadRequest, fmt::format("no endpoint {} /{}", method, fmt::join(p, "/")));
    }

    Response session_route(std::string_view method, const std::vector<std::string>& p, const Json& req) {
        const auto n = p.size();
        if (n == 2 && method == "DELETE") {
            std::lock_guard lock(sessions_mutex_);
            if (sessions_.erase(p[1]) == 0) fail(ErrorCode::UnknownSession, "no session " + p[1]);
            return {200, {{"closed", p[1]}}};
        }
        auto s = session(p[1]);
        if (n == 3 && p[2] == "solve" && method == "POST") {
            Network snapshot;
            {
                std::lock_guard lock(s->mutex);
                snapshot = s->net;
            }
            return {200, to_json(solve_project(snapshot, solve_options(req)))};
        }

        std::lock_guard lock(s->mutex);
        Network& net = s->net;
        if (n == 2 && method == "GET") return {200, {{"project", to_document(net)}}};
        if (n == 3 && p[2] == "save" && method == "POST") {
            const auto path = req.at("path").get<std::string>();
            save_project(net, path);
            return {200, {{"path", path}}};
        }
        if (n == 3 && p[2] == "validate" && method == "GET") return {200, {{"violations", violations_json(validate(net))}}};
        if (n == 3 && p[2] == "mode" && method == "PUT") {
            const auto mode = mode_of(req);
            if (!mode) fail(ErrorCode::BadRequest, "mode required");
            net = from_document(to_document(net), mode);
            return {200, {{"mode", mode_name(*mode)}}};
        }
        if (n == 3 && p[2] == "components" && method == "POST") {
            const auto text = req.at("kind").get<std::string>();
            const auto kind = parse_kind(text);
            if (!kind) fail(ErrorCode::BadRequest, "unknown kind '" + text + "'");
            ComponentSpec spec = default_spec(*kind);
            PropertyMap raw;
            if (req.contains("properties")) raw = io::read_properties(req.at("properties"));
            for (const auto& [k, v] : raw)
                if (k != "name") std::visit([&](auto& sp) { props::apply(sp, k, v); }, spec);
            const int rot = req.contains("rotation") ? req.at("rotation").get<int>() : 0;
            const auto id = net.add_component(spec, {{req.at("x").get<double>(), req.at("y").get<double>()}, rotation_from_degrees(rot)},
                                              req.contains("name") ? req.at("name").get<std::string>() : std::string{});
            for (const auto& [k, v] : raw) net.set_property(id, k, v);
            return {201, delta(net, {id}, {}, {})};
        }
        if (n == 3 && p[2] == "lines" && method == "POST") {
            LineSpec spec;
            PropertyMap raw;
            if (req.contains("properties")) raw = io::read_properties(req.at("properties"));
            for (const auto& [k, v] : raw)
                if (k != "name") props::apply(spec, k, v);
            const auto id = net.add_line(port_ref(req.at("a")), port_ref(req.at("b")), spec,
                                         req.contains("name") ? req.at("name").get<std::string>() : std::string{});
            for (const auto& [k, v] : raw) net.set_property(id, k, v);
            return {201, delta(net, {id}, {}, {})};
        }
        if (n >= 4 && p[2] == "components") {
            const ComponentId id = parse_id(p[3]);
            if (n == 4 && method == "GET") {
                if (!net.contains(id)) fail(ErrorCode::UnknownComponent, "no component " + p[3]);
                return {200, {{"component", component_json(net, id)}}};
            }
            if (n == 4 && method == "DELETE") {
                auto removed = net.remove_component(id);
                return {200, delta(net, {}, {removed.begin(), removed.end()}, {})};
            }
            if (n == 5 && p[4] == "rotate" && method == "POST") {
                net.rotate_component(id);
                std::vector<ComponentId> updated{id};
                for (auto l : net.lines_at(id)) updated.push_back(l);
                return {200, delta(net, {}, {}, updated)};
            }
            if (n == 5 && p[4] == "move" && method == "POST") {
                auto rerouted = net.move_component(id, {req.at("x").get<double>(), req.at("y").get<double>()});
                rerouted.insert(rerouted.begin(), id);
                return {200, delta(net, {}, {}, rerouted)};
            }
            if (n == 5 && p[4] == "copy" && method == "POST") {
                const auto copy = net.copy_component(id, {req.at("x").get<double>(), req.at("y").get<double>()});
                return {201, delta(net, {copy}, {}, {})};
            }
            if (n == 5 && p[4] == "properties" && method == "PUT") {
                if (!net.contains(id)) fail(ErrorCode::UnknownComponent, "no component " + p[3]);
                Network scratch = net;
                for (const auto& [k, v] : io::read_properties(req)) scratch.set_property(id, k, v);
                net = std::move(scratch);
                return {200, delta(net, {}, {}, {id})};
            }
        }
        fail(ErrorCode::BadRequest, fmt::format("no endpoint {} /{}", method, fmt::join(p, "/")));
    }

    mutable std::mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::uint64_t next_session_ = 1;
};

}  // namespace sld
