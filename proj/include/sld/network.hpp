#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sld/components.hpp"
#include "sld/error.hpp"
#include "sld/geometry.hpp"
#include "sld/property_table.hpp"

namespace sld {

struct Placement {
    Point position;
    Rotation rotation = Rotation::R0;

    friend bool operator==(const Placement&, const Placement&) = default;
};

struct PortIndex {
    int value = 0;
    friend bool operator==(const PortIndex&, const PortIndex&) = default;
};

/// Signed distance along a bus-bar's axis from its centre.
struct BarOffset {
    double along = 0.0;
    friend bool operator==(const BarOffset&, const BarOffset&) = default;
};

/// A resolved line end, stored relative to the owning component so it
/// follows the component when it moves.
struct Terminal {
    ComponentId component;
    std::variant<PortIndex, BarOffset> attach;

    friend bool operator==(const Terminal&, const Terminal&) = default;
};

/// What the caller clicked: an indexed port, or a point on a bus-bar.
struct PortRef {
    ComponentId component;
    std::variant<PortIndex, Point> port;

    static PortRef indexed(ComponentId id, int index) { return {id, PortIndex{index}}; }
    static PortRef on_bar(ComponentId id, Point p) { return {id, p}; }
};

struct Component {
    ComponentId id;
    std::string name;
    ComponentSpec spec;
    Placement placement;
    PropertyMap properties;

    ComponentKind kind() const { return kind_of(spec); }
    friend bool operator==(const Component&, const Component&) = default;
};

struct Line {
    ComponentId id;
    std::string name;
    Terminal end_a;
    Terminal end_b;
    LineSpec spec;
    Route route;
    PropertyMap properties;

    friend bool operator==(const Line&, const Line&) = default;
};

inline constexpr double kBarHalfThickness = 3.0;

/// Port positions relative to the component's placement, before rotation.
inline Point port_local_offset(ComponentKind kind, int port) {
    switch (kind) {
        case ComponentKind::Generator: return {20.0, 0.0};
        case ComponentKind::Load: return {0.0, -20.0};
        case ComponentKind::Transformer: return port == 0 ? Point{-20.0, 0.0} : Point{20.0, 0.0};
        default: return {};
    }
}

inline Segment bar_segment(const Component& bar) {
    const auto& spec = std::get<BusBarSpec>(bar.spec);
    const Point axis = rotate_offset({1.0, 0.0}, bar.placement.rotation);
    const Point half = (0.5 * spec.length) * axis;
    return {bar.placement.position - half, bar.placement.position + half};
}

inline std::string default_name(ComponentKind kind, ComponentId id) {
    static constexpr std::array<std::string_view, 7> prefix{"GEN", "TR", "LOAD", "BUS", "LINE", "METER", "PUBASE"};
    return std::string(prefix[static_cast<std::size_t>(kind)]) + to_string(id);
}

/// The single-line diagram. Components and lines share one id space; every
/// mutation either completes with all invariants intact or throws and
/// leaves the network untouched.
class Network {
  public:
    explicit Network(Mode mode = Mode::PowerFlow) : mode_(mode) {}

    Mode mode() const { return mode_; }

    /// System base used to express MW/MVAr data in power-flow and
    /// state-estimation projects. Per-unit projects take theirs from PU_Base.
    double system_base_mva() const { return system_base_mva_; }
    void set_system_base_mva(double mva) {
        if (!(std::isfinite(mva) && mva > 0.0)) fail(ErrorCode::InvalidSpec, "system base must be > 0");
        system_base_mva_ = mva;
    }

    std::uint64_t next_id() const { return next_id_; }
    const std::map<ComponentId, Component>& components() const { return components_; }
    const std::map<ComponentId, Line>& lines() const { return lines_; }

    bool contains(ComponentId id) const { return components_.contains(id) || lines_.contains(id); }

    const Component* find_component(ComponentId id) const {
        auto it = components_.find(id);
        return it == components_.end() ? nullptr : &it->second;
    }
    const Line* find_line(ComponentId id) const {
        auto it = lines_.find(id);
        return it == lines_.end() ? nullptr : &it->second;
    }

    const Component& component(ComponentId id) const {
        if (const auto* c = find_component(id)) return *c;
        fail(ErrorCode::UnknownComponent, "no component " + to_string(id));
    }
    const Line& line(ComponentId id) const {
        if (const auto* l = find_line(id)) return *l;
        fail(ErrorCode::UnknownComponent, "no line " + to_string(id));
    }

    std::optional<ComponentKind> kind(ComponentId id) const {
        if (const auto* c = find_component(id)) return c->kind();
        if (lines_.contains(id)) return ComponentKind::Line;
        return std::nullopt;
    }

    Point port_position(const Component& c, int port) const {
        return c.placement.position + rotate_offset(port_local_offset(c.kind(), port), c.placement.rotation);
    }

    Point terminal_point(const Terminal& t) const { return terminal_point(t, component(t.component)); }

    /// Lines with at least one end on `id`, in id order.
    std::vector<ComponentId> lines_at(ComponentId id) const {
        std::vector<ComponentId> out;
        for (const auto& [lid, l] : lines_)
            if (l.end_a.component == id || l.end_b.component == id) out.push_back(lid);
        return out;
    }

    ComponentId add_component(ComponentSpec spec, Placement placement, std::string name = {}) {
        const auto k = kind_of(spec);
        if (!available_in(k, mode_))
            fail(ErrorCode::ModeUnavailable,
                 std::string(kind_name(k)) + " is not available in " + std::string(mode_name(mode_)) + " mode");
        validate_spec(spec);
        if (!in_canvas(placement.position)) fail(ErrorCode::OutOfBounds, "placement outside the canvas");
        const ComponentId id = allocate();
        Component c{id, name.empty() ? default_name(k, id) : std::move(name), std::move(spec), placement, {}};
        c.properties = render_properties(c.spec);
        components_.emplace(id, std::move(c));
        return id;
    }

    ComponentId add_line(const PortRef& a, const PortRef& b, LineSpec spec, std::string name = {}) {
        validate_spec(spec);
        const Terminal ta = resolve(a);
        const Terminal tb = resolve(b);
        if (ta == tb) fail(ErrorCode::InvalidPort, "both ends on the same port");
        for (const auto& t : {ta, tb})
            if (const auto* idx = std::get_if<PortIndex>(&t.attach); idx && port_in_use(t.component, idx->value))
                fail(ErrorCode::PortOccupied, "port " + std::to_string(idx->value) + " of " +
                                                  to_string(t.component) + " already has a line");
        Route route = route_line(terminal_point(ta), terminal_point(tb));
        const ComponentId id = allocate();
        Line l{id, name.empty() ? default_name(ComponentKind::Line, id) : std::move(name), ta, tb, std::move(spec),
               std::move(route), {}};
        l.properties = render_properties(l.spec);
        lines_.emplace(id, std::move(l));
        return id;
    }

    /// Removes `id` and every line attached to it; returns all removed ids.
    std::set<ComponentId> remove_component(ComponentId id) {
        if (lines_.erase(id) > 0) return {id};
        if (!components_.contains(id)) fail(ErrorCode::UnknownComponent, "no component " + to_string(id));
        std::set<ComponentId> removed{id};
        for (auto lid : lines_at(id)) {
            lines_.erase(lid);
            removed.insert(lid);
        }
        components_.erase(id);
        return removed;
    }

    Placement rotate_component(ComponentId id) {
        Component& c = mutable_component(id);
        const auto attached = lines_at(id);
        if (c.kind() == ComponentKind::BusBar && !attached.empty())
            fail(ErrorCode::BusBarConnected, "bus-bar " + to_string(id) + " has lines attached");
        Placement next = c.placement;
        next.rotation = rotated_clockwise(next.rotation);
        apply_placement(c, next, attached);
        return c.placement;
    }

    /// Moves a component and re-routes its lines; returns the re-routed line ids.
    std::vector<ComponentId> move_component(ComponentId id, Point to) {
        Component& c = mutable_component(id);
        if (!in_canvas(to)) fail(ErrorCode::OutOfBounds, "target outside the canvas");
        const auto attached = lines_at(id);
        apply_placement(c, Placement{to, c.placement.rotation}, attached);
        return attached;
    }

    ComponentId copy_component(ComponentId id, Point to) {
        if (lines_.contains(id)) fail(ErrorCode::LineNotCopyable, "lines are created between two ports");
        const Component& src = component(id);
        if (!in_canvas(to)) fail(ErrorCode::OutOfBounds, "target outside the canvas");
        const ComponentId nid = allocate();
        Component c = src;
        c.id = nid;
        c.name = default_name(c.kind(), nid);
        c.placement.position = to;
        components_.emplace(nid, std::move(c));
        return nid;
    }

    /// Applies one single-string property edit ("rated_power" = "100 MVA 3-ph").
    /// "name" sets the display label verbatim.
    void set_property(ComponentId id, std::string_view name, std::string_view raw) {
        if (auto it = lines_.find(id); it != lines_.end()) {
            Line& l = it->second;
            if (name == "name") {
                l.name = std::string(raw);
                return;
            }
            LineSpec next = l.spec;
            props::apply(next, name, raw);
            validate_spec(next);
            l.properties = merge_raw_properties(l.properties, render_properties(next), std::string(name), std::string(raw));
            l.spec = next;
            return;
        }
        Component& c = mutable_component(id);
        if (name == "name") {
            c.name = std::string(raw);
            return;
        }
        ComponentSpec next = c.spec;
        std::visit([&](auto& s) { props::apply(s, name, raw); }, next);
        validate_spec(next);
        if (const auto* bar = std::get_if<BusBarSpec>(&next)) {
            for (auto lid : lines_at(id)) {
                const Line& l = lines_.at(lid);
                for (const auto* t : {&l.end_a, &l.end_b})
                    if (t->component == id && std::abs(std::get<BarOffset>(t->attach).along) > 0.5 * bar->length)
                        fail(ErrorCode::InvalidSpec, "attached line " + to_string(lid) + " would fall off the bar");
            }
        }
        c.properties = merge_raw_properties(c.properties, render_properties(next), std::string(name), std::string(raw));
        c.spec = std::move(next);
    }

    /// Rebuilds a network from stored records without trusting them: every
    /// structural invariant is re-checked and InvariantViolation raised on the
    /// first failure.
    static Network from_parts(Mode mode, double system_base_mva, std::uint64_t next_id,
                              std::vector<Component> components, std::vector<Line> lines);

    friend bool operator==(const Network&, const Network&) = default;

  private:
    friend std::vector<std::string> structural_problems(const Network& net);

    ComponentId allocate() { return ComponentId{next_id_++}; }

    Component& mutable_component(ComponentId id) {
        auto it = components_.find(id);
        if (it == components_.end()) {
            if (lines_.contains(id)) fail(ErrorCode::InvalidSpec, "lines follow their endpoints; edit those instead");
            fail(ErrorCode::UnknownComponent, "no component " + to_string(id));
        }
        return it->second;
    }

    Point terminal_point(const Terminal& t, const Component& c) const {
        if (const auto* idx = std::get_if<PortIndex>(&t.attach)) return port_position(c, idx->value);
        const Point axis = rotate_offset({1.0, 0.0}, c.placement.rotation);
        return c.placement.position + std::get<BarOffset>(t.attach).along * axis;
    }

    bool port_in_use(ComponentId id, int port) const {
        for (const auto& [lid, l] : lines_)
            for (const auto* t : {&l.end_a, &l.end_b})
                if (t->component == id && std::holds_alternative<PortIndex>(t->attach) &&
                    std::get<PortIndex>(t->attach).value == port)
                    return true;
        return false;
    }

    Terminal resolve(const PortRef& ref) const {
        if (lines_.contains(ref.component))
            fail(ErrorCode::LineToLineConnection, "line " + to_string(ref.component) + " cannot end on another line");
        const Component* c = find_component(ref.component);
        if (!c) fail(ErrorCode::DanglingEndpoint, "endpoint " + to_string(ref.component) + " does not resolve");
        const auto k = c->kind();
        if (!connectable(k)) fail(ErrorCode::NotConnectable, std::string(kind_name(k)) + " has no connection ports");
        if (k == ComponentKind::BusBar) {
            const auto* p = std::get_if<Point>(&ref.port);
            if (!p) fail(ErrorCode::InvalidPort, "bus-bars take attachment points, not port indices");
            const auto& spec = std::get<BusBarSpec>(c->spec);
            const Point axis = rotate_offset({1.0, 0.0}, c->placement.rotation);
            const Point normal{-axis.y, axis.x};
            const Point rel = *p - c->placement.position;
            const double along = dot(rel, axis);
            if (std::abs(along) > 0.5 * spec.length || std::abs(dot(rel, normal)) > kBarHalfThickness)
                fail(ErrorCode::InvalidPort, "point is not on bus-bar " + to_string(c->id));
            return {c->id, BarOffset{along}};
        }
        const auto* idx = std::get_if<PortIndex>(&ref.port);
        if (!idx || idx->value < 0 || idx->value >= port_count(k))
            fail(ErrorCode::InvalidPort, std::string(kind_name(k)) + " has " + std::to_string(port_count(k)) + " port(s)");
        return {c->id, *idx};
    }

    // Computes every affected route first so a failure leaves nothing half-moved.
    void apply_placement(Component& c, const Placement& next, const std::vector<ComponentId>& attached) {
        Component moved = c;
        moved.placement = next;
        std::vector<Route> routes;
        routes.reserve(attached.size());
        for (auto lid : attached) {
            const Line& l = lines_.at(lid);
            auto point = [&](const Terminal& t) {
                return t.component == c.id ? terminal_point(t, moved) : terminal_point(t);
            };
            routes.push_back(reroute_line(point(l.end_a), point(l.end_b)));
        }
        c.placement = next;
        for (std::size_t i = 0; i < attached.size(); ++i) lines_.at(attached[i]).route = std::move(routes[i]);
    }

    Mode mode_;
    double system_base_mva_ = 100.0;
    std::uint64_t next_id_ = 1;
    std::map<ComponentId, Component> components_;
    std::map<ComponentId, Line> lines_;
};

/// Every violated structural invariant, as readable text. Empty for any
/// network built through the public operations.
inline std::vector<std::string> structural_problems(const Network& net) {
    std::vector<std::string> out;
    std::set<ComponentId> seen;
    for (const auto& [id, c] : net.components_) {
        if (id != c.id) out.push_back("component key mismatch for " + to_string(id));
        if (id.value == 0 || id.value >= net.next_id_) out.push_back("id " + to_string(id) + " outside allocated range");
        seen.insert(id);
        if (!available_in(c.kind(), net.mode_))
            out.push_back(std::string(kind_name(c.kind())) + " " + to_string(id) + " not available in " +
                          std::string(mode_name(net.mode_)) + " mode");
        try {
            validate_spec(c.spec);
        } catch (const Error& e) {
            out.push_back("component " + to_string(id) + ": " + e.detail());
        }
        if (!in_canvas(c.placement.position)) out.push_back("component " + to_string(id) + " outside the canvas");
    }
    std::map<std::pair<ComponentId, int>, ComponentId> port_owner;
    for (const auto& [id, l] : net.lines_) {
        if (id != l.id) out.push_back("line key mismatch for " + to_string(id));
        if (id.value == 0 || id.value >= net.next_id_) out.push_back("id " + to_string(id) + " outside allocated range");
        if (!seen.insert(id).second) out.push_back("id " + to_string(id) + " used twice");
        try {
            validate_spec(l.spec);
        } catch (const Error& e) {
            out.push_back("line " + to_string(id) + ": " + e.detail());
        }
        bool ends_ok = true;
        for (const auto* t : {&l.end_a, &l.end_b}) {
            const Component* c = net.find_component(t->component);
            if (!c) {
                out.push_back("line " + to_string(id) + " dangles: endpoint " + to_string(t->component) +
                              (net.lines_.contains(t->component) ? " is a line" : " does not exist"));
                ends_ok = false;
                continue;
            }
            const auto k = c->kind();
            if (k == ComponentKind::BusBar) {
                const auto* off = std::get_if<BarOffset>(&t->attach);
                if (!off || !(std::abs(off->along) <= 0.5 * std::get<BusBarSpec>(c->spec).length)) {
                    out.push_back("line " + to_string(id) + " attachment off bus-bar " + to_string(c->id));
                    ends_ok = false;
                }
            } else {
                const auto* idx = std::get_if<PortIndex>(&t->attach);
                if (!idx || idx->value < 0 || idx->value >= port_count(k)) {
                    out.push_back("line " + to_string(id) + " uses an invalid port of " + to_string(c->id));
                    ends_ok = false;
                } else if (auto [it, fresh] = port_owner.emplace(std::pair{c->id, idx->value}, id); !fresh) {
                    out.push_back("port " + std::to_string(idx->value) + " of " + to_string(c->id) +
                                  " used by lines " + to_string(it->second) + " and " + to_string(id));
                }
            }
        }
        if (ends_ok && l.end_a == l.end_b) out.push_back("line " + to_string(id) + " starts and ends on one port");
        if (ends_ok && !route_connects(l.route, net.terminal_point(l.end_a), net.terminal_point(l.end_b)))
            out.push_back("line " + to_string(id) + " route is not an orthogonal path between its ports");
    }
    return out;
}

inline Network Network::from_parts(Mode mode, double system_base_mva, std::uint64_t next_id,
                                   std::vector<Component> components, std::vector<Line> lines) {
    Network net(mode);
    if (!(std::isfinite(system_base_mva) && system_base_mva > 0.0))
        fail(ErrorCode::InvariantViolation, "system base must be > 0");
    net.system_base_mva_ = system_base_mva;
    net.next_id_ = next_id;
    for (auto& c : components) {
        const auto id = c.id;
        if (!net.components_.emplace(id, std::move(c)).second)
            fail(ErrorCode::InvariantViolation, "id " + to_string(id) + " used twice");
    }
    for (auto& l : lines) {
        const auto id = l.id;
        if (net.components_.contains(id) || !net.lines_.emplace(id, std::move(l)).second)
            fail(ErrorCode::InvariantViolation, "id " + to_string(id) + " used twice");
    }
    if (auto problems = structural_problems(net); !problems.empty())
        fail(ErrorCode::InvariantViolation, problems.front());
    return net;
}

/// Which kinds nearest_attachable may return.
struct CandidateKinds {
    bool lines = false;
    bool bus_bars = false;
    bool devices = false;  // generators, transformers, loads

    static CandidateKinds lines_and_buses() { return {true, true, false}; }
    static CandidateKinds electrical() { return {true, true, true}; }

    bool accepts(ComponentKind k) const {
        switch (k) {
            case ComponentKind::Line: return lines;
            case ComponentKind::BusBar: return bus_bars;
            case ComponentKind::Generator:
            case ComponentKind::Transformer:
            case ComponentKind::Load: return devices;
            default: return false;
        }
    }
};

/// Euclidean distance from `p` to what is drawn for a component: the route
/// polyline for lines, the bar segment for bus-bars, the placement point
/// for everything else.
inline double drawn_distance(const Network& net, ComponentId id, Point p) {
    if (const auto* l = net.find_line(id)) return distance_to_route(p, l->route);
    const Component& c = net.component(id);
    if (c.kind() == ComponentKind::BusBar) return distance_to_segment(p, bar_segment(c));
    return distance(p, c.placement.position);
}

/// Minimum-distance attachment used by meters and PU_Base. Ties go to the
/// lowest id.
inline ComponentId nearest_attachable(const Network& net, Point p, CandidateKinds kinds) {
    std::optional<ComponentId> best;
    double best_d = INFINITY;
    auto consider = [&](ComponentId id) {
        const double d = drawn_distance(net, id, p);
        if (d < best_d || (d == best_d && best && id < *best)) {
            best_d = d;
            best = id;
        }
    };
    for (const auto& [id, c] : net.components()) if (kinds.accepts(c.kind())) consider(id);
    if (kinds.lines) for (const auto& [id, l] : net.lines()) consider(id);
    if (!best) fail(ErrorCode::NoCandidates, "nothing to attach to");
    return *best;
}

}  // namespace sld
