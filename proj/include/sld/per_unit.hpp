#pragma once

#include <cmath>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "sld/network.hpp"
#include "sld/topology.hpp"
#include "sld/trace.hpp"

namespace sld {

/// Relative mismatch tolerated when a loop reaches a region twice.
inline constexpr double kBaseConsistencyTolerance = 1e-9;

/// One part of the network sharing a base voltage: a connected group of
/// nodes once transformers are cut out.
struct ElectricalRegion {
    std::size_t id = 0;
    std::vector<ComponentId> members;
};

struct BaseAssignment {
    double s_base = 0.0;           // VA
    std::vector<double> v_base;    // V, per region
    std::vector<double> z_base;    // ohm, per region
    std::vector<ElectricalRegion> regions;
    std::map<NodeKey, std::size_t> region_of_node;
    ComponentId pu_base;
    ComponentId anchor;
    std::size_t anchor_region = 0;

    std::size_t region_of(const NodeKey& k) const { return region_of_node.at(k); }
};

inline double impedance_base(double v_base, double s_base) {
    if (!(v_base > 0.0) || !(s_base > 0.0)) fail(ErrorCode::NonPositiveBase, "bases must be > 0");
    return v_base * v_base / s_base;
}

namespace detail {

struct TransformerEdge {
    ComponentId id;
    std::size_t primary;
    std::size_t secondary;
    double ratio;  // secondary / primary rated voltage
};

inline std::size_t anchor_region(const Network& net, const NodeGroups& groups, ComponentId anchor, Point from) {
    if (const auto* l = net.find_line(anchor)) return groups.at(node_of(net, l->end_a));
    const Component& c = net.component(anchor);
    if (c.kind() == ComponentKind::Transformer) {
        const bool secondary = distance(from, net.port_position(c, 1)) < distance(from, net.port_position(c, 0));
        return groups.at({anchor, secondary ? 1 : 0});
    }
    return groups.at({anchor, 0});
}

}  // namespace detail

/// Assigns a base voltage to every region, starting from the PU_Base anchor
/// and crossing transformers by their rated-voltage ratio.
inline BaseAssignment resolve_bases(const Network& net, SolveTrace* trace = nullptr) {
    std::vector<const Component*> markers;
    for (const auto& [id, c] : net.components())
        if (c.kind() == ComponentKind::PUBase) markers.push_back(&c);
    if (markers.empty()) fail(ErrorCode::MissingPUBase, "per-unit calculations need a PU_Base");
    if (markers.size() > 1) fail(ErrorCode::MultiplePUBase, fmt::format("{} PU_Base units placed", markers.size()));
    const Component& marker = *markers.front();
    const auto& base_spec = std::get<PUBaseSpec>(marker.spec);

    const NodeGroups groups = group_nodes(net, MergeRule::AllLines);
    std::vector<detail::TransformerEdge> edges;
    for (const auto& [id, c] : net.components()) {
        if (const auto* t = std::get_if<TransformerSpec>(&c.spec))
            edges.push_back({id, groups.at({id, 0}), groups.at({id, 1}), t->secondary_voltage.si() / t->primary_voltage.si()});
    }

    BaseAssignment out;
    out.s_base = base_spec.base_power.si();
    out.pu_base = marker.id;
    out.region_of_node = groups.group_of;
    out.regions.resize(groups.size());
    for (std::size_t r = 0; r < groups.size(); ++r) out.regions[r].id = r;
    for (const auto& [id, c] : net.components()) {
        const auto k = c.kind();
        if (k == ComponentKind::BusBar || port_count(k) >= 1) out.regions[groups.at({id, 0})].members.push_back(id);
        if (port_count(k) == 2) {
            const auto r1 = groups.at({id, 1});
            if (r1 != groups.at({id, 0})) out.regions[r1].members.push_back(id);
        }
    }
    for (const auto& [id, l] : net.lines()) out.regions[groups.at(node_of(net, l.end_a))].members.push_back(id);

    out.anchor = nearest_attachable(net, marker.placement.position, CandidateKinds::electrical());
    out.anchor_region = detail::anchor_region(net, groups, out.anchor, marker.placement.position);

    if (trace) {
        trace->record("regions",
                      {scalar("regions", static_cast<double>(groups.size())),
                       scalar("transformers", static_cast<double>(edges.size())),
                       scalar("s_base", out.s_base / 1e6, "MVA"),
                       text_item("anchor", net.kind(out.anchor) ? to_string(out.anchor) : "?"),
                       scalar("anchor_region", static_cast<double>(out.anchor_region))},
                      "regions formed by cutting transformers; anchor chosen by minimum distance");
    }

    std::vector<std::optional<double>> v(groups.size());
    v[out.anchor_region] = base_spec.base_voltage.si();
    std::deque<std::size_t> queue{out.anchor_region};
    while (!queue.empty()) {
        const auto r = queue.front();
        queue.pop_front();
        for (const auto& e : edges) {
            std::size_t next = 0;
            double value = 0.0;
            if (e.primary == r && !v[e.secondary]) {
                next = e.secondary;
                value = *v[r] * e.ratio;
            } else if (e.secondary == r && !v[e.primary]) {
                next = e.primary;
                value = *v[r] / e.ratio;
            } else {
                continue;
            }
            v[next] = value;
            queue.push_back(next);
            if (trace) {
                trace->record("propagation",
                              {text_item("transformer", to_string(e.id)), scalar("from_region", static_cast<double>(r)),
                               scalar("to_region", static_cast<double>(next)), scalar("ratio", e.ratio),
                               scalar("v_base", value / 1e3, "kV")},
                              "base voltage carried across transformer");
            }
        }
    }

    // Loops reach a region more than once; every transformer must agree.
    for (const auto& e : edges) {
        if (!v[e.primary] || !v[e.secondary]) continue;
        const double expected = *v[e.primary] * e.ratio;
        if (std::abs(*v[e.secondary] - expected) > kBaseConsistencyTolerance * expected)
            fail(ErrorCode::InconsistentBase,
                 fmt::format("transformer {} implies {} V for region {}, already based at {} V", to_string(e.id),
                             expected, e.secondary, *v[e.secondary]));
    }

    std::vector<std::size_t> unreached;
    for (std::size_t r = 0; r < v.size(); ++r)
        if (!v[r]) unreached.push_back(r);
    if (!unreached.empty())
        fail(ErrorCode::UnreachedRegion, fmt::format("{} region(s) not connected to the PU_Base anchor (first holds component {})",
                                                     unreached.size(),
                                                     out.regions[unreached.front()].members.empty()
                                                         ? std::string("?")
                                                         : to_string(out.regions[unreached.front()].members.front())));

    for (const auto& vb : v) {
        out.v_base.push_back(*vb);
        out.z_base.push_back(impedance_base(*vb, out.s_base));
    }
    if (trace) {
        std::vector<double> kv, zb;
        for (std::size_t r = 0; r < v.size(); ++r) {
            kv.push_back(out.v_base[r] / 1e3);
            zb.push_back(out.z_base[r]);
        }
        trace->record("bases", {vector_item("v_base", kv, "kV"), vector_item("z_base", zb, "ohm")}, "regional bases");
    }
    return out;
}

struct PerUnitEntry {
    std::string quantity;
    double value = 0.0;   // as entered
    std::string unit;     // unit of `value` and `base`
    double base = 1.0;
    double per_unit = 0.0;  // on the system base
    std::size_t region = 0;
};

struct ComponentPerUnit {
    ComponentId id;
    ComponentKind kind;
    std::string name;
    std::vector<PerUnitEntry> entries;
};

struct RegionBase {
    std::size_t region = 0;
    double v_base = 0.0;  // V
    double z_base = 0.0;  // ohm
};

struct PerUnitReport {
    double s_base = 0.0;  // VA
    std::vector<RegionBase> regions;
    std::vector<ComponentPerUnit> components;
};

namespace detail {

inline PerUnitEntry direct(std::string name, const Quantity& q, double base_si, std::size_t region) {
    const double scale = unit_info(q.unit).scale;
    const double base = q.is_per_unit() ? 1.0 : base_si / scale;
    return {std::move(name), q.magnitude, std::string(unit_symbol(q.unit)), base, q.magnitude / base, region};
}

/// Device impedance given per-unit on its own rating, moved to system base.
inline void rebased_impedance(std::vector<PerUnitEntry>& out, const std::complex<double>& z, const Quantity& s_rated,
                              const Quantity& v_rated, double s_base, double v_base, std::size_t region) {
    const double ratio = v_rated.si() / v_base;
    const double factor = (s_base / s_rated.si()) * ratio * ratio;
    out.push_back({"r", z.real(), "pu(own)", 1.0 / factor, z.real() * factor, region});
    out.push_back({"x", z.imag(), "pu(own)", 1.0 / factor, z.imag() * factor, region});
}

}  // namespace detail

inline PerUnitReport convert_to_per_unit(const Network& net, const BaseAssignment& bases, SolveTrace* trace = nullptr) {
    PerUnitReport report;
    report.s_base = bases.s_base;
    for (std::size_t r = 0; r < bases.v_base.size(); ++r) report.regions.push_back({r, bases.v_base[r], bases.z_base[r]});

    const double sb = bases.s_base;
    for (const auto& [id, c] : net.components()) {
        ComponentPerUnit cp{id, c.kind(), c.name, {}};
        auto& e = cp.entries;
        const std::size_t r0 = connectable(c.kind()) ? bases.region_of({id, 0}) : bases.anchor_region;
        std::visit(
            [&](const auto& s) {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, GeneratorSpec>) {
                    e.push_back(detail::direct("rated_power", s.rated_power, sb, r0));
                    e.push_back(detail::direct("rated_voltage", s.rated_voltage, bases.v_base[r0], r0));
                    if (s.impedance)
                        detail::rebased_impedance(e, *s.impedance, s.rated_power, s.rated_voltage, sb, bases.v_base[r0], r0);
                } else if constexpr (std::is_same_v<T, TransformerSpec>) {
                    const std::size_t r1 = bases.region_of({id, 1});
                    e.push_back(detail::direct("rated_power", s.rated_power, sb, r0));
                    e.push_back(detail::direct("primary_voltage", s.primary_voltage, bases.v_base[r0], r0));
                    e.push_back(detail::direct("secondary_voltage", s.secondary_voltage, bases.v_base[r1], r1));
                    if (s.impedance)
                        detail::rebased_impedance(e, *s.impedance, s.rated_power, s.primary_voltage, sb, bases.v_base[r0], r0);
                } else if constexpr (std::is_same_v<T, LoadSpec>) {
                    if (const auto* p = std::get_if<PowerLoad>(&s.form)) {
                        e.push_back(detail::direct("p", p->p, sb, r0));
                        e.push_back(detail::direct("q", p->q, sb, r0));
                    } else {
                        const auto& rlc = std::get<RlcLoad>(s.form);
                        const double zb = bases.z_base[r0];
                        e.push_back({"r", rlc.r_ohm, "ohm", zb, rlc.r_ohm / zb, r0});
                        e.push_back({"xl", rlc.xl_ohm, "ohm", zb, rlc.xl_ohm / zb, r0});
                        e.push_back({"xc", rlc.xc_ohm, "ohm", zb, rlc.xc_ohm / zb, r0});
                    }
                } else if constexpr (std::is_same_v<T, BusBarSpec>) {
                    const double kv = bases.v_base[r0] / 1e3;
                    e.push_back({"base_voltage", kv, "kV", kv, 1.0, r0});
                } else if constexpr (std::is_same_v<T, PUBaseSpec>) {
                    e.push_back(detail::direct("base_power", s.base_power, sb, bases.anchor_region));
                    e.push_back(detail::direct("base_voltage", s.base_voltage, bases.v_base[bases.anchor_region],
                                               bases.anchor_region));
                }
            },
            c.spec);
        report.components.push_back(std::move(cp));
    }
    for (const auto& [id, l] : net.lines()) {
        ComponentPerUnit cp{id, ComponentKind::Line, l.name, {}};
        const std::size_t r = bases.region_of(node_of(net, l.end_a));
        const bool ohmic = l.spec.impedance_unit == Unit::Ohm;
        const double zb = ohmic ? bases.z_base[r] : 1.0;
        const std::string zu = ohmic ? "ohm" : "pu";
        cp.entries.push_back({"r", l.spec.impedance.real(), zu, zb, l.spec.impedance.real() / zb, r});
        cp.entries.push_back({"x", l.spec.impedance.imag(), zu, zb, l.spec.impedance.imag() / zb, r});
        cp.entries.push_back(detail::direct("b", l.spec.charging, sb, r));
        report.components.push_back(std::move(cp));
    }
    std::sort(report.components.begin(), report.components.end(),
              [](const ComponentPerUnit& a, const ComponentPerUnit& b) { return a.id < b.id; });

    if (trace) {
        std::size_t n = 0;
        for (const auto& cp : report.components) n += cp.entries.size();
        trace->record("conversion",
                      {scalar("components", static_cast<double>(report.components.size())),
                       scalar("quantities", static_cast<double>(n))},
                      "quantities expressed on the system base");
    }
    return report;
}

}  // namespace sld
