#pragma once

// Mapping between component specs and the single-string properties a user
// edits in a properties window ("100 MVA 3-ph", "13.8 kV", "slack", ...).

#include <map>
#include <string>
#include <string_view>

#include "sld/components.hpp"
#include "sld/properties.hpp"

namespace sld {

using PropertyMap = std::map<std::string, std::string>;

namespace props {

inline const PropertySchema kMagUnit{{TokenKind::Magnitude}, {TokenKind::Unit}};
inline const PropertySchema kMagUnitQualifier{{TokenKind::Magnitude}, {TokenKind::Unit}, {TokenKind::Qualifier, false}};
inline const PropertySchema kMagOptUnit{{TokenKind::Magnitude}, {TokenKind::Unit, false}};
inline const PropertySchema kMag{{TokenKind::Magnitude}};
inline const PropertySchema kQualifier{{TokenKind::Qualifier}};

inline std::string phase_text(Phase p) { return p == Phase::Three ? "3-ph" : "1-ph"; }
inline std::string winding_text(Winding w) { return w == Winding::Delta ? "delta" : "wye"; }

inline std::string bus_type_text(BusType t) {
    switch (t) {
        case BusType::Slack: return "slack";
        case BusType::PV: return "pv";
        case BusType::PQ: return "pq";
    }
    return "";
}

inline Phase parse_phase(const std::optional<std::string>& q) {
    if (!q || iequals(*q, "3-ph")) return Phase::Three;
    if (iequals(*q, "1-ph")) return Phase::Single;
    fail(ErrorCode::InvalidSpec, "unknown phase qualifier '" + *q + "'");
}

inline Winding parse_winding(std::string_view s) {
    if (iequals(s, "delta")) return Winding::Delta;
    if (iequals(s, "wye") || iequals(s, "star")) return Winding::Wye;
    fail(ErrorCode::InvalidSpec, "unknown winding connection '" + std::string(s) + "'");
}

inline BusType parse_bus_type(std::string_view s) {
    if (iequals(s, "slack")) return BusType::Slack;
    if (iequals(s, "pv")) return BusType::PV;
    if (iequals(s, "pq")) return BusType::PQ;
    fail(ErrorCode::InvalidSpec, "unknown bus type '" + std::string(s) + "'");
}

inline Quantity quantity(std::string_view raw) {
    const auto t = parse_property_string(raw, kMagUnit);
    return Quantity{*t.magnitude, *t.unit};
}

inline double per_unit_value(std::string_view raw) {
    const auto t = parse_property_string(raw, kMagOptUnit);
    if (t.unit && *t.unit != Unit::PerUnit) fail(ErrorCode::InvalidSpec, "expected a pu value");
    return *t.magnitude;
}

inline std::string pu_text(double v) { return render_quantity(Quantity{v, Unit::PerUnit}); }

inline bool is_blank(std::string_view raw) { return split_whitespace(raw).empty(); }

[[noreturn]] inline void unknown(ComponentKind kind, std::string_view name) {
    fail(ErrorCode::UnknownProperty,
         "'" + std::string(name) + "' is not a property of " + std::string(kind_name(kind)));
}

inline void set_impedance_part(std::optional<std::complex<double>>& z, bool real_part, std::string_view raw) {
    if (is_blank(raw)) {
        z.reset();
        return;
    }
    const double v = per_unit_value(raw);
    std::complex<double> cur = z.value_or(std::complex<double>{});
    z = real_part ? std::complex<double>{v, cur.imag()} : std::complex<double>{cur.real(), v};
}

// --- render ---------------------------------------------------------------

inline PropertyMap render(const GeneratorSpec& s) {
    PropertyMap m;
    m["rated_power"] = render_tokens({s.rated_power.magnitude, s.rated_power.unit, phase_text(s.phase)});
    m["rated_voltage"] = render_quantity(s.rated_voltage);
    if (s.impedance) {
        m["r"] = pu_text(s.impedance->real());
        m["x"] = pu_text(s.impedance->imag());
    }
    return m;
}

inline PropertyMap render(const TransformerSpec& s) {
    PropertyMap m;
    m["rated_power"] = render_tokens({s.rated_power.magnitude, s.rated_power.unit, phase_text(s.phase)});
    m["primary_voltage"] = render_quantity(s.primary_voltage);
    m["secondary_voltage"] = render_quantity(s.secondary_voltage);
    m["primary_connection"] = winding_text(s.primary_connection);
    m["secondary_connection"] = winding_text(s.secondary_connection);
    if (s.impedance) {
        m["r"] = pu_text(s.impedance->real());
        m["x"] = pu_text(s.impedance->imag());
    }
    return m;
}

inline PropertyMap render(const LoadSpec& s) {
    PropertyMap m;
    if (const auto* p = std::get_if<PowerLoad>(&s.form)) {
        m["form"] = "power";
        m["p"] = render_quantity(p->p);
        m["q"] = render_quantity(p->q);
    } else {
        const auto& r = std::get<RlcLoad>(s.form);
        m["form"] = "rlc";
        m["r"] = render_quantity({r.r_ohm, Unit::Ohm});
        m["xl"] = render_quantity({r.xl_ohm, Unit::Ohm});
        m["xc"] = render_quantity({r.xc_ohm, Unit::Ohm});
    }
    return m;
}

inline PropertyMap render(const BusBarSpec& s) {
    PropertyMap m;
    m["length"] = format_number(s.length);
    if (s.bus) {
        const auto& b = *s.bus;
        m["type"] = bus_type_text(b.type);
        m["angle"] = format_number(b.angle_deg);
        if (b.voltage_pu) m["voltage"] = pu_text(*b.voltage_pu);
        if (b.p_gen) m["p_gen"] = render_quantity(*b.p_gen);
        if (b.q_gen) m["q_gen"] = render_quantity(*b.q_gen);
        if (b.q_min) m["q_min"] = render_quantity(*b.q_min);
        if (b.q_max) m["q_max"] = render_quantity(*b.q_max);
        if (b.shunt) m["shunt"] = render_quantity(*b.shunt);
    }
    return m;
}

inline PropertyMap render(const LineSpec& s) {
    PropertyMap m;
    m["r"] = render_quantity({s.impedance.real(), s.impedance_unit});
    m["x"] = render_quantity({s.impedance.imag(), s.impedance_unit});
    m["b"] = render_quantity(s.charging);
    return m;
}

inline PropertyMap render(const MeterSpec& s) {
    PropertyMap m;
    auto put = [&m](const std::optional<MeterChannel>& ch, const char* key, const char* sigma_key) {
        if (!ch) return;
        m[key] = render_quantity(ch->reading);
        if (ch->sigma_pu) m[sigma_key] = pu_text(*ch->sigma_pu);
    };
    put(s.p, "p", "sigma_p");
    put(s.q, "q", "sigma_q");
    put(s.vmag, "v", "sigma_v");
    return m;
}

inline PropertyMap render(const PUBaseSpec& s) {
    return {{"base_power", render_quantity(s.base_power)}, {"base_voltage", render_quantity(s.base_voltage)}};
}

// --- apply ----------------------------------------------------------------

inline void apply(GeneratorSpec& s, std::string_view name, std::string_view raw) {
    if (name == "rated_power") {
        const auto t = parse_property_string(raw, kMagUnitQualifier);
        s.rated_power = {*t.magnitude, *t.unit};
        s.phase = parse_phase(t.qualifier);
    } else if (name == "rated_voltage") {
        s.rated_voltage = quantity(raw);
    } else if (name == "r" || name == "x") {
        set_impedance_part(s.impedance, name == "r", raw);
    } else {
        unknown(ComponentKind::Generator, name);
    }
}

inline void apply(TransformerSpec& s, std::string_view name, std::string_view raw) {
    if (name == "rated_power") {
        const auto t = parse_property_string(raw, kMagUnitQualifier);
        s.rated_power = {*t.magnitude, *t.unit};
        s.phase = parse_phase(t.qualifier);
    } else if (name == "primary_voltage") {
        s.primary_voltage = quantity(raw);
    } else if (name == "secondary_voltage") {
        s.secondary_voltage = quantity(raw);
    } else if (name == "primary_connection") {
        s.primary_connection = parse_winding(*parse_property_string(raw, kQualifier).qualifier);
    } else if (name == "secondary_connection") {
        s.secondary_connection = parse_winding(*parse_property_string(raw, kQualifier).qualifier);
    } else if (name == "r" || name == "x") {
        set_impedance_part(s.impedance, name == "r", raw);
    } else {
        unknown(ComponentKind::Transformer, name);
    }
}

inline void apply(LoadSpec& s, std::string_view name, std::string_view raw) {
    if (name == "form") {
        const auto form = *parse_property_string(raw, kQualifier).qualifier;
        if (iequals(form, "power")) {
            if (!std::holds_alternative<PowerLoad>(s.form)) s.form = PowerLoad{};
        } else if (iequals(form, "rlc")) {
            if (!std::holds_alternative<RlcLoad>(s.form)) s.form = RlcLoad{};
        } else {
            fail(ErrorCode::InvalidSpec, "load form must be 'power' or 'rlc'");
        }
        return;
    }
    if (auto* p = std::get_if<PowerLoad>(&s.form)) {
        if (name == "p") p->p = quantity(raw);
        else if (name == "q") p->q = quantity(raw);
        else unknown(ComponentKind::Load, name);
        return;
    }
    auto& r = std::get<RlcLoad>(s.form);
    auto ohms = [](std::string_view text) {
        const auto q = quantity(text);
        if (q.unit != Unit::Ohm) fail(ErrorCode::InvalidSpec, "RLC element values are given in ohm");
        return q.magnitude;
    };
    if (name == "r") r.r_ohm = ohms(raw);
    else if (name == "xl") r.xl_ohm = ohms(raw);
    else if (name == "xc") r.xc_ohm = ohms(raw);
    else unknown(ComponentKind::Load, name);
}

inline void apply(BusBarSpec& s, std::string_view name, std::string_view raw) {
    if (name == "length") {
        s.length = *parse_property_string(raw, kMag).magnitude;
        return;
    }
    if (name == "type") {
        if (is_blank(raw)) {
            s.bus.reset();
            return;
        }
        if (!s.bus) s.bus = BusProperties{};
        s.bus->type = parse_bus_type(*parse_property_string(raw, kQualifier).qualifier);
        return;
    }
    auto optional_quantity = [&raw](std::optional<Quantity>& slot) {
        if (is_blank(raw)) slot.reset();
        else slot = quantity(raw);
    };
    if (!s.bus) s.bus = BusProperties{};
    auto& b = *s.bus;
    if (name == "voltage") {
        if (is_blank(raw)) b.voltage_pu.reset();
        else b.voltage_pu = per_unit_value(raw);
    } else if (name == "angle") {
        b.angle_deg = *parse_property_string(raw, kMag).magnitude;
    } else if (name == "p_gen") {
        optional_quantity(b.p_gen);
    } else if (name == "q_gen") {
        optional_quantity(b.q_gen);
    } else if (name == "q_min") {
        optional_quantity(b.q_min);
    } else if (name == "q_max") {
        optional_quantity(b.q_max);
    } else if (name == "shunt") {
        optional_quantity(b.shunt);
    } else {
        unknown(ComponentKind::BusBar, name);
    }
}

inline void apply(LineSpec& s, std::string_view name, std::string_view raw) {
    if (name == "r" || name == "x") {
        const auto q = quantity(raw);
        if (q.unit != Unit::Ohm && q.unit != Unit::PerUnit)
            fail(ErrorCode::InvalidSpec, "line impedance unit must be ohm or pu");
        if (q.unit != s.impedance_unit) {
            const double other = name == "r" ? s.impedance.imag() : s.impedance.real();
            if (other != 0.0) fail(ErrorCode::InvalidSpec, "r and x must share a unit");
            s.impedance_unit = q.unit;
        }
        s.impedance = name == "r" ? std::complex<double>{q.magnitude, s.impedance.imag()}
                                  : std::complex<double>{s.impedance.real(), q.magnitude};
    } else if (name == "b") {
        s.charging = quantity(raw);
    } else {
        unknown(ComponentKind::Line, name);
    }
}

inline void apply(MeterSpec& s, std::string_view name, std::string_view raw) {
    auto channel = [&](std::optional<MeterChannel>& ch) {
        if (is_blank(raw)) {
            ch.reset();
            return;
        }
        const auto q = quantity(raw);
        if (!ch) ch = MeterChannel{q, std::nullopt};
        else ch->reading = q;
    };
    auto sigma = [&](std::optional<MeterChannel>& ch) {
        if (!ch) fail(ErrorCode::InvalidSpec, "set the reading before its sigma");
        if (is_blank(raw)) ch->sigma_pu.reset();
        else ch->sigma_pu = per_unit_value(raw);
    };
    if (name == "p") channel(s.p);
    else if (name == "q") channel(s.q);
    else if (name == "v") channel(s.vmag);
    else if (name == "sigma_p") sigma(s.p);
    else if (name == "sigma_q") sigma(s.q);
    else if (name == "sigma_v") sigma(s.vmag);
    else unknown(ComponentKind::Meter, name);
}

inline void apply(PUBaseSpec& s, std::string_view name, std::string_view raw) {
    if (name == "base_power") s.base_power = quantity(raw);
    else if (name == "base_voltage") s.base_voltage = quantity(raw);
    else unknown(ComponentKind::PUBase, name);
}

}  // namespace props

inline PropertyMap render_properties(const ComponentSpec& spec) {
    return std::visit([](const auto& s) { return props::render(s); }, spec);
}

inline PropertyMap render_properties(const LineSpec& spec) { return props::render(spec); }

/// Keeps the user's spelling of every property whose value survived the edit,
/// and takes the canonical rendering for everything else.
inline PropertyMap merge_raw_properties(const PropertyMap& old_raw, const PropertyMap& rendered,
                                        const std::string& edited, const std::string& edited_raw) {
    PropertyMap out = rendered;
    for (auto& [key, text] : out) {
        if (key == edited) {
            if (!props::is_blank(edited_raw)) text = edited_raw;
            continue;
        }
        auto it = old_raw.find(key);
        if (it == old_raw.end()) continue;
        // Same canonical text means the same parsed value.
        const auto old_tokens = split_whitespace(it->second);
        const auto new_tokens = split_whitespace(text);
        if (old_tokens.size() != new_tokens.size()) continue;
        bool same = true;
        for (std::size_t i = 0; i < old_tokens.size() && same; ++i) {
            if (iequals(old_tokens[i], new_tokens[i])) continue;
            std::string a(old_tokens[i]), b(new_tokens[i]);
            char* ea = nullptr;
            char* eb = nullptr;
            const double va = std::strtod(a.c_str(), &ea);
            const double vb = std::strtod(b.c_str(), &eb);
            same = *ea == '\0' && *eb == '\0' && va == vb;
        }
        if (same) text = it->second;
    }
    return out;
}

}  // namespace sld
