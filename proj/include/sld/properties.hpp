#pragma once

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sld/error.hpp"

namespace sld {

enum class Unit { V, kV, VA, kVA, MVA, W, MW, VAr, MVAr, Ohm, PerUnit };

enum class Dimension { Voltage, ApparentPower, ActivePower, ReactivePower, Impedance, PerUnit };

struct UnitInfo {
    Unit unit;
    std::string_view symbol;
    Dimension dimension;
    double scale;  // to volts / VA / W / VAr / ohm
};

inline constexpr std::array<UnitInfo, 11> kUnitTable{{
    {Unit::V, "V", Dimension::Voltage, 1.0},
    {Unit::kV, "kV", Dimension::Voltage, 1e3},
    {Unit::VA, "VA", Dimension::ApparentPower, 1.0},
    {Unit::kVA, "kVA", Dimension::ApparentPower, 1e3},
    {Unit::MVA, "MVA", Dimension::ApparentPower, 1e6},
    {Unit::W, "W", Dimension::ActivePower, 1.0},
    {Unit::MW, "MW", Dimension::ActivePower, 1e6},
    {Unit::VAr, "VAr", Dimension::ReactivePower, 1.0},
    {Unit::MVAr, "MVAr", Dimension::ReactivePower, 1e6},
    {Unit::Ohm, "ohm", Dimension::Impedance, 1.0},
    {Unit::PerUnit, "pu", Dimension::PerUnit, 1.0},
}};

inline const UnitInfo& unit_info(Unit u) { return kUnitTable[static_cast<std::size_t>(u)]; }
inline std::string_view unit_symbol(Unit u) { return unit_info(u).symbol; }

inline bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i])))
            return false;
    }
    return true;
}

inline std::optional<Unit> find_unit(std::string_view symbol) {
    for (const auto& info : kUnitTable)
        if (iequals(info.symbol, symbol)) return info.unit;
    return std::nullopt;
}

/// A magnitude tagged with one of the fixed units.
struct Quantity {
    double magnitude = 0.0;
    Unit unit = Unit::PerUnit;

    friend bool operator==(const Quantity&, const Quantity&) = default;

    Dimension dimension() const { return unit_info(unit).dimension; }
    double si() const { return magnitude * unit_info(unit).scale; }
    bool is_per_unit() const { return unit == Unit::PerUnit; }
};

enum class TokenKind { Magnitude, Unit, Qualifier };

struct Slot {
    TokenKind kind;
    bool required = true;
};

using PropertySchema = std::vector<Slot>;

/// Parsed property string: each slot present only when the schema declared
/// it and the input supplied it.
struct PropertyTokens {
    std::optional<double> magnitude;
    std::optional<Unit> unit;
    std::optional<std::string> qualifier;

    friend bool operator==(const PropertyTokens&, const PropertyTokens&) = default;
};

inline std::vector<std::string_view> split_whitespace(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        if (j > i) out.push_back(text.substr(i, j - i));
        i = j;
    }
    return out;
}

inline double parse_magnitude(std::string_view token) {
    if (!token.empty() && token.front() == '+') token.remove_prefix(1);
    double value = 0.0;
    const auto* end = token.data() + token.size();
    const auto [ptr, ec] = std::from_chars(token.data(), end, value);
    if (token.empty() || ec != std::errc{} || ptr != end || !std::isfinite(value))
        fail(ErrorCode::MalformedMagnitude, "not a decimal number: '" + std::string(token) + "'");
    return value;
}

/// Splits a single-string property such as "100 MVA 3-ph" into typed slots.
inline PropertyTokens parse_property_string(std::string_view raw, const PropertySchema& schema) {
    const auto tokens = split_whitespace(raw);
    std::size_t required = 0;
    for (const auto& s : schema) required += s.required ? 1 : 0;
    if (tokens.size() < required || tokens.size() > schema.size())
        fail(ErrorCode::ArityMismatch, "expected " + std::to_string(required) + ".." + std::to_string(schema.size()) +
                                           " tokens, got " + std::to_string(tokens.size()) + " in '" +
                                           std::string(raw) + "'");

    // Optional slots are filled left to right with whatever tokens remain.
    std::size_t spare = tokens.size() - required;
    PropertyTokens out;
    std::size_t t = 0;
    for (const auto& slot : schema) {
        if (!slot.required) {
            if (spare == 0) continue;
            --spare;
        }
        const auto tok = tokens[t++];
        switch (slot.kind) {
            case TokenKind::Magnitude: out.magnitude = parse_magnitude(tok); break;
            case TokenKind::Unit: {
                auto u = find_unit(tok);
                if (!u) fail(ErrorCode::UnknownUnit, "unknown unit '" + std::string(tok) + "'");
                out.unit = *u;
                break;
            }
            case TokenKind::Qualifier: out.qualifier = std::string(tok); break;
        }
    }
    return out;
}

/// Shortest decimal text that parses back to exactly `value`.
inline std::string format_number(double value) {
    if (value == 0.0) value = 0.0;  // drop negative zero
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), ptr);
}

inline std::string render_tokens(const PropertyTokens& tokens) {
    std::string out;
    auto push = [&out](std::string_view s) {
        if (!out.empty()) out += ' ';
        out += s;
    };
    if (tokens.magnitude) push(format_number(*tokens.magnitude));
    if (tokens.unit) push(unit_symbol(*tokens.unit));
    if (tokens.qualifier) push(*tokens.qualifier);
    return out;
}

inline std::string render_quantity(const Quantity& q) {
    return render_tokens(PropertyTokens{q.magnitude, q.unit, std::nullopt});
}

}  // namespace sld
