#pragma once

// `.sld` project files: one UTF-8 JSON document per project.

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "sld/network.hpp"

namespace sld {

inline constexpr int kFormatVersion = 1;

using Json = nlohmann::json;

namespace io {

inline Json quantity(const Quantity& q) { return {{"magnitude", q.magnitude}, {"unit", unit_symbol(q.unit)}}; }

inline Json optional_quantity(const std::optional<Quantity>& q) { return q ? quantity(*q) : Json(nullptr); }

inline Json complex_value(const std::complex<double>& z) { return {{"r", z.real()}, {"x", z.imag()}}; }

inline Json optional_complex(const std::optional<std::complex<double>>& z) {
    return z ? complex_value(*z) : Json(nullptr);
}

inline Json channel(const std::optional<MeterChannel>& ch) {
    if (!ch) return nullptr;
    return {{"reading", quantity(ch->reading)}, {"sigma_pu", ch->sigma_pu ? Json(*ch->sigma_pu) : Json(nullptr)}};
}

inline Json spec_json(const GeneratorSpec& s) {
    return {{"rated_power", quantity(s.rated_power)},
            {"rated_voltage", quantity(s.rated_voltage)},
            {"impedance", optional_complex(s.impedance)},
            {"phase", props::phase_text(s.phase)}};
}

inline Json spec_json(const TransformerSpec& s) {
    return {{"rated_power", quantity(s.rated_power)},
            {"primary_voltage", quantity(s.primary_voltage)},
            {"secondary_voltage", quantity(s.secondary_voltage)},
            {"primary_connection", props::winding_text(s.primary_connection)},
            {"secondary_connection", props::winding_text(s.secondary_connection)},
            {"impedance", optional_complex(s.impedance)},
            {"phase", props::phase_text(s.phase)}};
}

inline Json spec_json(const LoadSpec& s) {
    if (const auto* p = std::get_if<PowerLoad>(&s.form)) return {{"form", "power"}, {"p", quantity(p->p)}, {"q", quantity(p->q)}};
    const auto& r = std::get<RlcLoad>(s.form);
    return {{"form", "rlc"}, {"r_ohm", r.r_ohm}, {"xl_ohm", r.xl_ohm}, {"xc_ohm", r.xc_ohm}};
}

inline Json spec_json(const BusBarSpec& s) {
    Json bus = nullptr;
    if (s.bus) {
        const auto& b = *s.bus;
        bus = {{"type", props::bus_type_text(b.type)},
               {"voltage_pu", b.voltage_pu ? Json(*b.voltage_pu) : Json(nullptr)},
               {"angle_deg", b.angle_deg},
               {"p_gen", optional_quantity(b.p_gen)},
               {"q_gen", optional_quantity(b.q_gen)},
               {"q_min", optional_quantity(b.q_min)},
               {"q_max", optional_quantity(b.q_max)},
               {"shunt", optional_quantity(b.shunt)}};
    }
    return {{"length", s.length}, {"bus", bus}};
}

inline Json spec_json(const MeterSpec& s) { return {{"p", channel(s.p)}, {"q", channel(s.q)}, {"v", channel(s.vmag)}}; }

inline Json spec_json(const PUBaseSpec& s) {
    return {{"base_power", quantity(s.base_power)}, {"base_voltage", quantity(s.base_voltage)}};
}

inline Json spec_json(const LineSpec& s) {
    return {{"impedance", complex_value(s.impedance)},
            {"impedance_unit", unit_symbol(s.impedance_unit)},
            {"charging", quantity(s.charging)}};
}

inline Json terminal(const Terminal& t) {
    Json j{{"component", t.component.value}};
    if (const auto* p = std::get_if<PortIndex>(&t.attach)) j["port"] = p->value;
    else j["bar_offset"] = std::get<BarOffset>(t.attach).along;
    return j;
}

inline Json point(const Point& p) { return Json::array({p.x, p.y}); }

inline Json properties(const PropertyMap& m) {
    Json j = Json::object();
    for (const auto& [k, v] : m) j[k] = v;
    return j;
}

// Reading. Shape errors surface as nlohmann exceptions and become ParseError.

inline Unit unit(const Json& j) {
    const auto s = j.get<std::string>();
    const auto u = find_unit(s);
    if (!u) fail(ErrorCode::ParseError, "unknown unit '" + s + "'");
    return *u;
}

inline Quantity read_quantity(const Json& j) { return {j.at("magnitude").get<double>(), unit(j.at("unit"))}; }

inline std::optional<Quantity> read_optional_quantity(const Json& j) {
    if (j.is_null()) return std::nullopt;
    return read_quantity(j);
}

inline std::complex<double> read_complex(const Json& j) { return {j.at("r").get<double>(), j.at("x").get<double>()}; }

inline std::optional<std::complex<double>> read_optional_complex(const Json& j) {
    if (j.is_null()) return std::nullopt;
    return read_complex(j);
}

inline std::optional<MeterChannel> read_channel(const Json& j) {
    if (j.is_null()) return std::nullopt;
    MeterChannel ch{read_quantity(j.at("reading")), std::nullopt};
    if (!j.at("sigma_pu").is_null()) ch.sigma_pu = j.at("sigma_pu").get<double>();
    return ch;
}

inline Phase read_phase(const Json& j) { return props::parse_phase(j.get<std::string>()); }

inline ComponentSpec read_spec(ComponentKind kind, const Json& j) {
    switch (kind) {
        case ComponentKind::Generator:
            return GeneratorSpec{read_quantity(j.at("rated_power")), read_quantity(j.at("rated_voltage")),
                                 read_optional_complex(j.at("impedance")), read_phase(j.at("phase"))};
        case ComponentKind::Transformer:
            return TransformerSpec{read_quantity(j.at("rated_power")),
                                   read_quantity(j.at("primary_voltage")),
                                   read_quantity(j.at("secondary_voltage")),
                                   props::parse_winding(j.at("primary_connection").get<std::string>()),
                                   props::parse_winding(j.at("secondary_connection").get<std::string>()),
                                   read_optional_complex(j.at("impedance")),
                                   read_phase(j.at("phase"))};
        case ComponentKind::Load: {
            const auto form = j.at("form").get<std::string>();
            if (form == "power") return LoadSpec{PowerLoad{read_quantity(j.at("p")), read_quantity(j.at("q"))}};
            if (form == "rlc")
                return LoadSpec{RlcLoad{j.at("r_ohm").get<double>(), j.at("xl_ohm").get<double>(), j.at("xc_ohm").get<double>()}};
            fail(ErrorCode::ParseError, "unknown load form '" + form + "'");
        }
        case ComponentKind::BusBar: {
            BusBarSpec s{j.at("length").get<double>(), std::nullopt};
            if (const auto& b = j.at("bus"); !b.is_null()) {
                BusProperties p;
                p.type = props::parse_bus_type(b.at("type").get<std::string>());
                if (!b.at("voltage_pu").is_null()) p.voltage_pu = b.at("voltage_pu").get<double>();
                p.angle_deg = b.at("angle_deg").get<double>();
                p.p_gen = read_optional_quantity(b.at("p_gen"));
                p.q_gen = read_optional_quantity(b.at("q_gen"));
                p.q_min = read_optional_quantity(b.at("q_min"));
                p.q_max = read_optional_quantity(b.at("q_max"));
                p.shunt = read_optional_quantity(b.at("shunt"));
                s.bus = p;
            }
            return s;
        }
        case ComponentKind::Meter:
            return MeterSpec{read_channel(j.at("p")), read_channel(j.at("q")), read_channel(j.at("v"))};
        case ComponentKind::PUBase:
            return PUBaseSpec{read_quantity(j.at("base_power")), read_quantity(j.at("base_voltage"))};
        case ComponentKind::Line: break;
    }
    fail(ErrorCode::ParseError, "lines belong in the lines list");
}

inline LineSpec read_line_spec(const Json& j) {
    return {read_complex(j.at("impedance")), unit(j.at("impedance_unit")), read_quantity(j.at("charging"))};
}

inline Terminal read_terminal(const Json& j) {
    Terminal t{ComponentId{j.at("component").get<std::uint64_t>()}, PortIndex{}};
    const bool port = j.contains("port"), bar = j.contains("bar_offset");
    if (port == bar) fail(ErrorCode::ParseError, "line end needs exactly one of port or bar_offset");
    if (port) t.attach = PortIndex{j.at("port").get<int>()};
    else t.attach = BarOffset{j.at("bar_offset").get<double>()};
    return t;
}

inline Point read_point(const Json& j) {
    if (!j.is_array() || j.size() != 2) fail(ErrorCode::ParseError, "point must be [x, y]");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline PropertyMap read_properties(const Json& j) {
    PropertyMap m;
    for (const auto& [k, v] : j.items()) m[k] = v.get<std::string>();
    return m;
}

}  // namespace io

inline Json to_document(const Network& net) {
    Json components = Json::array();
    for (const auto& [id, c] : net.components()) {
        components.push_back({{"id", id.value},
                              {"kind", kind_name(c.kind())},
                              {"name", c.name},
                              {"placement",
                               {{"x", c.placement.position.x},
                                {"y", c.placement.position.y},
                                {"rotation", degrees(c.placement.rotation)}}},
                              {"properties", io::properties(c.properties)},
                              {"spec", std::visit([](const auto& s) { return io::spec_json(s); }, c.spec)}});
    }
    Json lines = Json::array();
    for (const auto& [id, l] : net.lines()) {
        Json route = Json::array();
        for (const auto& s : l.route) route.push_back(Json::array({io::point(s.from), io::point(s.to)}));
        lines.push_back({{"id", id.value},
                         {"name", l.name},
                         {"end_a", io::terminal(l.end_a)},
                         {"end_b", io::terminal(l.end_b)},
                         {"properties", io::properties(l.properties)},
                         {"spec", io::spec_json(l.spec)},
                         {"route", route}});
    }
    return {{"version", kFormatVersion},
            {"mode", mode_name(net.mode())},
            {"next_id", net.next_id()},
            {"system_base_mva", net.system_base_mva()},
            {"components", components},
            {"lines", lines}};
}

/// Canonical text: sorted keys, two-space indent, trailing newline.
inline std::string to_text(const Network& net) { return to_document(net).dump(2) + "\n"; }

/// Rebuilds a Network and re-checks every invariant. `mode_override`
/// replaces the stored mode.
inline Network from_document(const Json& doc, std::optional<Mode> mode_override = std::nullopt) {
    try {
        if (!doc.is_object()) fail(ErrorCode::ParseError, "document must be a JSON object");
        const auto& version = doc.at("version");
        if (!version.is_number_integer()) fail(ErrorCode::ParseError, "version must be an integer");
        if (version.get<long long>() > kFormatVersion)
            fail(ErrorCode::UnsupportedVersion,
                 "file version " + std::to_string(version.get<long long>()) + " is newer than " + std::to_string(kFormatVersion));
        if (version.get<long long>() < 1) fail(ErrorCode::ParseError, "version must be >= 1");

        const auto mode_text = doc.at("mode").get<std::string>();
        auto mode = parse_mode(mode_text);
        if (!mode) fail(ErrorCode::ParseError, "unknown mode '" + mode_text + "'");
        if (mode_override) mode = mode_override;

        std::vector<Component> components;
        std::uint64_t max_id = 0;
        for (const auto& c : doc.at("components")) {
            const auto kind_text = c.at("kind").get<std::string>();
            const auto kind = parse_kind(kind_text);
            if (!kind || *kind == ComponentKind::Line) fail(ErrorCode::ParseError, "unknown component kind '" + kind_text + "'");
            const auto& pl = c.at("placement");
            Component comp{ComponentId{c.at("id").get<std::uint64_t>()},
                           c.at("name").get<std::string>(),
                           io::read_spec(*kind, c.at("spec")),
                           {{pl.at("x").get<double>(), pl.at("y").get<double>()}, rotation_from_degrees(pl.at("rotation").get<int>())},
                           io::read_properties(c.at("properties"))};
            max_id = std::max(max_id, comp.id.value);
            components.push_back(std::move(comp));
        }
        std::vector<Line> lines;
        for (const auto& l : doc.at("lines")) {
            Route route;
            for (const auto& s : l.at("route")) {
                if (!s.is_array() || s.size() != 2) fail(ErrorCode::ParseError, "route segment must be [from, to]");
                route.push_back({io::read_point(s[0]), io::read_point(s[1])});
            }
            Line line{ComponentId{l.at("id").get<std::uint64_t>()},
                      l.at("name").get<std::string>(),
                      io::read_terminal(l.at("end_a")),
                      io::read_terminal(l.at("end_b")),
                      io::read_line_spec(l.at("spec")),
                      std::move(route),
                      io::read_properties(l.at("properties"))};
            max_id = std::max(max_id, line.id.value);
            lines.push_back(std::move(line));
        }
        const auto next_id = doc.contains("next_id") ? doc.at("next_id").get<std::uint64_t>() : max_id + 1;
        const double base = doc.contains("system_base_mva") ? doc.at("system_base_mva").get<double>() : 100.0;
        return Network::from_parts(*mode, base, next_id, std::move(components), std::move(lines));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ParseError, e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ParseError || e.code() == ErrorCode::UnsupportedVersion ||
            e.code() == ErrorCode::InvariantViolation)
            throw;
        fail(ErrorCode::InvariantViolation, e.detail());
    }
}

inline Network from_text(std::string_view text, std::optional<Mode> mode_override = std::nullopt) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ParseError, e.what());
    }
    return from_document(doc, mode_override);
}

inline void save_project(const Network& net, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    out << to_text(net);
    out.flush();
    if (!out) fail(ErrorCode::IoFailure, "write to " + path.string() + " failed");
}

inline Network load_project(const std::filesystem::path& path, std::optional<Mode> mode_override = std::nullopt) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IoFailure, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) fail(ErrorCode::IoFailure, "read from " + path.string() + " failed");
    return from_text(buf.str(), mode_override);
}

}  // namespace sld
